//! The period problem in `c`: scan for sign changes of `f1 - f2`, refine
//! them, solve for the gauge `P` and verify that `P^{-1} Phi_j P` lies in
//! SU(1,1) for all three generators.
//!
//! Scanning and bracketing run in `f64`. The generator monodromies at the
//! roots can have entries of size `1e6` and more, so the root is polished
//! and the closure verified in double-double arithmetic with the
//! power-series integrator, where absolute residuals of `1e-6` are
//! meaningful.

use crate::curve::{canonical_paths, validate_a, CanonicalPaths};
use crate::ends::{self, EndAnalysis};
use crate::error::{Error, Result};
use crate::linalg2c::{classify_su11_within, su11_distance, ConjugacyType, Mat2, Mat2C, TOL_CLASS, TOL_SU11};
use crate::monodromy::{
    assemble_monodromies, half_path_frames, period_functions, period_functions_at, MonodromyTriple,
};
use crate::rk::IntegratorConfig;
use crate::scalar::{lit, to_f64, Dd, Real};
use crate::transport::TaylorSeries;
use num_traits::Float;
use rayon::prelude::*;

/// Half-width of the window around `c = 0` that scans skip.
pub const SKIP_WINDOW: f64 = 0.01;

/// One grid point of a scan. `f1`, `f2` are NaN at skipped or degenerate
/// points.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ScanRecord {
    pub c: f64,
    pub f1: f64,
    pub f2: f64,
    pub admissible_hint: bool,
}

impl ScanRecord {
    pub fn is_gap(&self) -> bool {
        self.f1.is_nan() || self.f2.is_nan()
    }

    pub fn diff(&self) -> f64 {
        self.f1 - self.f2
    }
}

/// A grid cell over which `f1 - f2` changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: ScanRecord,
    pub hi: ScanRecord,
}

impl Bracket {
    pub fn admissible_hint(&self) -> bool {
        self.lo.admissible_hint && self.hi.admissible_hint
    }
}

fn record(a: f64, c: f64, cfg: &IntegratorConfig) -> Result<ScanRecord> {
    let gap = ScanRecord { c, f1: f64::NAN, f2: f64::NAN, admissible_hint: false };
    if c.abs() < SKIP_WINDOW {
        return Ok(gap);
    }
    match period_functions_at(a, c, cfg) {
        Ok((f1, f2)) => Ok(ScanRecord { c, f1, f2, admissible_hint: f1.abs() > 1.0 && f2.abs() > 1.0 }),
        Err(Error::DegenerateDenominator { .. } | Error::NonRealPeriod { .. }) => Ok(gap),
        Err(e) => Err(e),
    }
}

/// Evaluates `f1`, `f2` at `steps + 1` equally spaced points of
/// `[c_min, c_max]`, in parallel. Points with `|c| < SKIP_WINDOW` and
/// degenerate points become gaps.
pub fn scan_c(a: f64, c_min: f64, c_max: f64, steps: usize, cfg: &IntegratorConfig) -> Result<Vec<ScanRecord>> {
    validate_a(a)?;
    cfg.validate()?;
    if !(c_min < c_max) || !c_min.is_finite() || !c_max.is_finite() {
        return Err(Error::InvalidInput(format!("need c_min < c_max, got [{c_min}, {c_max}]")));
    }
    if steps < 2 {
        return Err(Error::InvalidInput("scan needs at least 2 steps".into()));
    }
    let h = (c_max - c_min) / steps as f64;
    (0..=steps)
        .into_par_iter()
        .map(|i| {
            let c = if i == steps { c_max } else { c_min + h * i as f64 };
            record(a, c, cfg)
        })
        .collect()
}

/// Adjacent non-gap records with opposite signs of `f1 - f2`.
pub fn sign_changes(records: &[ScanRecord]) -> Vec<Bracket> {
    records
        .windows(2)
        .filter(|w| !w[0].is_gap() && !w[1].is_gap())
        .filter(|w| (w[0].diff() > 0.0) != (w[1].diff() > 0.0) || w[0].diff() == 0.0)
        .map(|w| Bracket { lo: w[0], hi: w[1] })
        .collect()
}

/// Whether a sign change comes from `f1 = f2` or from a pole of `f1` or
/// `f2`, across which the difference also flips sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignChangeKind {
    Crossing,
    Pole,
}

/// A sign change narrowed down to a small interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChange {
    pub kind: SignChangeKind,
    pub lo: f64,
    pub hi: f64,
    /// The endpoint with the smaller `|f1 - f2|`.
    pub c: f64,
    pub f1: f64,
    pub f2: f64,
}

impl SignChange {
    /// Common value `(f1 + f2) / 2`.
    pub fn f(&self) -> f64 {
        0.5 * (self.f1 + self.f2)
    }

    pub fn admissible(&self) -> bool {
        self.kind == SignChangeKind::Crossing && self.f().abs() > 1.0
    }
}

struct Bracketed<T> {
    lo: T,
    hi: T,
    g_lo: T,
    g_hi: T,
}

/// Illinois regula falsi with a bisection fallback whenever two
/// consecutive steps fail to halve the bracket. Poles inside the bracket
/// are tracked like roots; the caller tells them apart.
fn illinois<T: Real, G>(mut g: G, mut b: Bracketed<T>, tol: T, max_iter: usize) -> Result<Bracketed<T>>
where
    G: FnMut(T) -> Result<T>,
{
    let half: T = lit(0.5);
    let mut side = 0i8;
    let mut slow = 0;
    for _ in 0..max_iter {
        let width = b.hi - b.lo;
        if width <= tol || b.g_lo == T::zero() || b.g_hi == T::zero() {
            break;
        }
        let mut x = (b.lo * b.g_hi - b.hi * b.g_lo) / (b.g_hi - b.g_lo);
        if slow >= 2 || !(x > b.lo && x < b.hi) {
            x = (b.lo + b.hi) * half;
            slow = 0;
        }
        let gx = g(x)?;
        if (gx > T::zero()) == (b.g_hi > T::zero()) {
            b.hi = x;
            b.g_hi = gx;
            if side == 1 {
                b.g_lo = b.g_lo * half;
            }
            side = 1;
        } else {
            b.lo = x;
            b.g_lo = gx;
            if side == -1 {
                b.g_hi = b.g_hi * half;
            }
            side = -1;
        }
        if b.hi - b.lo > width * half {
            slow += 1;
        } else {
            slow = 0;
        }
    }
    Ok(b)
}

/// Narrows a sign change of `f1 - f2` on `[lo, hi]` to width `tol_c` and
/// classifies it. A crossing has `|f1 - f2| -> 0`; at a pole the values at
/// the final endpoints exceed those at the initial ones.
pub fn locate_sign_change(a: f64, bracket: (f64, f64), tol_c: f64, cfg: &IntegratorConfig) -> Result<SignChange> {
    validate_a(a)?;
    let (lo, hi) = (bracket.0.min(bracket.1), bracket.0.max(bracket.1));
    if !(tol_c > 0.0) || lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidInput(format!("bad bracket [{lo}, {hi}] or tolerance {tol_c}")));
    }
    let eval = |c: f64| period_functions_at(a, c, cfg);
    let (l1, l2) = eval(lo)?;
    let (h1, h2) = eval(hi)?;
    let (g_lo, g_hi) = (l1 - l2, h1 - h2);
    if (g_lo > 0.0) == (g_hi > 0.0) && g_lo != 0.0 && g_hi != 0.0 {
        return Err(Error::LostBracket { lo, hi });
    }
    let start = g_lo.abs().max(g_hi.abs());
    let b = illinois(|c| eval(c).map(|(f1, f2)| f1 - f2), Bracketed { lo, hi, g_lo, g_hi }, tol_c, 500)?;
    let (f_lo, f_hi) = (eval(b.lo)?, eval(b.hi)?);
    let (dl, dh) = ((f_lo.0 - f_lo.1).abs(), (f_hi.0 - f_hi.1).abs());
    if (f_lo.0 - f_lo.1 > 0.0) == (f_hi.0 - f_hi.1 > 0.0) && dl != 0.0 && dh != 0.0 {
        return Err(Error::LostBracket { lo: b.lo, hi: b.hi });
    }
    let kind = if dl.min(dh) > start { SignChangeKind::Pole } else { SignChangeKind::Crossing };
    let (c, (f1, f2)) = if dl <= dh { (b.lo, f_lo) } else { (b.hi, f_hi) };
    Ok(SignChange { kind, lo: b.lo, hi: b.hi, c, f1, f2 })
}

/// Refines a root of `f1 - f2` to `|bracket| <= tol_c`, returning `c*` and
/// the common value `f*`. Brackets around poles are rejected.
pub fn refine_root(a: f64, bracket: (f64, f64), tol_c: f64, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    let s = locate_sign_change(a, bracket, tol_c, cfg)?;
    if s.kind == SignChangeKind::Pole {
        return Err(Error::PoleBracket { lo: s.lo, hi: s.hi });
    }
    Ok((s.c, s.f()))
}

/// Gauge `P = [[alpha, eps beta], [alpha, -eps beta]]` with real
/// `alpha beta = -eps/2`, `beta = b^{1/4}`, `b = (eps f - 1)/(4(eps f + 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gauge<T: Real = f64> {
    pub epsilon: i8,
    pub b: T,
    pub beta: T,
    pub alpha: T,
    pub p: Mat2<T>,
}

impl<T: Real> Gauge<T> {
    /// `eps (1 + 4 beta^4) / (1 - 4 beta^4)`, which recovers `f`.
    pub fn implied_f(&self) -> T {
        let four: T = lit(4.0);
        let b4 = self.beta * self.beta * self.beta * self.beta * four;
        let eps: T = lit(f64::from(self.epsilon));
        eps * (T::one() + b4) / (T::one() - b4)
    }
}

/// Inverts `f = eps (1 + 4 beta^4)/(1 - 4 beta^4)`; needs `|f| > 1`.
pub fn solve_gauge<T: Real>(f: T) -> Result<Gauge<T>> {
    if !(f.abs() > T::one()) {
        return Err(Error::NotAdmissible { f: to_f64(f) });
    }
    let epsilon: i8 = if f > T::zero() { 1 } else { -1 };
    let eps: T = lit(f64::from(epsilon));
    let ef = eps * f;
    let four: T = lit(4.0);
    let b = (ef - T::one()) / (four * (ef + T::one()));
    let beta = b.sqrt().sqrt();
    let alpha = -eps / (lit::<T>(2.0) * beta);
    let p = Mat2::real(alpha, eps * beta, alpha, -eps * beta);
    Ok(Gauge { epsilon, b, beta, alpha, p })
}

/// `su11_distance(P^{-1} Phi_j P)` for the three generators.
pub fn gauged_residuals<T: Real>(m: &MonodromyTriple<T>, p: &Mat2<T>) -> Result<[f64; 3]> {
    let g = m.conjugate_by(p)?;
    Ok([to_f64(su11_distance(&g.phi1)), to_f64(su11_distance(&g.phi2)), to_f64(su11_distance(&g.phi3))])
}

/// A verified solution of the period problem.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSolution {
    pub a: f64,
    /// `c` rounded to `f64`.
    pub c: f64,
    /// `c` to double-double precision, as used in verification.
    pub c_extended: Dd,
    pub f: f64,
    pub epsilon: i8,
    pub alpha: f64,
    pub beta: f64,
    pub p: Mat2C,
    pub p_extended: Mat2<Dd>,
    /// `max_j su11_distance(P^{-1} Phi_j P)`.
    pub su11_residual: f64,
    pub loop_residuals: [f64; 3],
    /// Conjugacy class of the gauged monodromy around the end `(inf, 1)`.
    pub end_type: ConjugacyType,
    pub ends: EndAnalysis,
    /// Gauged generator monodromies.
    pub gauged: MonodromyTriple<Dd>,
}

impl PeriodSolution {
    /// Initial frame at the base point `(0, 1)`.
    pub fn initial_frame(&self) -> Mat2C {
        self.p
    }
}

/// Double-double verification route.
fn dd_integrator() -> TaylorSeries {
    TaylorSeries::for_type::<Dd>()
}

/// Generator monodromies in double-double arithmetic.
pub fn monodromies_dd(paths: &CanonicalPaths, c: Dd) -> Result<MonodromyTriple<Dd>> {
    Ok(assemble_monodromies(&half_path_frames(&dd_integrator(), paths, c)?))
}

/// `f1`, `f2` in double-double arithmetic.
pub fn period_functions_dd(paths: &CanonicalPaths, c: Dd) -> Result<(Dd, Dd)> {
    period_functions(&half_path_frames(&dd_integrator(), paths, c)?)
}

/// Continues a refined `f64` crossing in double-double arithmetic until
/// the bracket is a few units of double-double roundoff wide.
pub fn polish_root(a: f64, lo: f64, hi: f64) -> Result<(Dd, Dd, Dd)> {
    let paths = canonical_paths(a)?;
    let g = |c: Dd| period_functions_dd(&paths, c).map(|(f1, f2)| f1 - f2);
    let (mut lo_d, mut hi_d): (Dd, Dd) = (lit(lo.min(hi)), lit(lo.max(hi)));
    let (mut g_lo, mut g_hi) = (g(lo_d)?, g(hi_d)?);
    // the f64 endpoints may sit on the same side once the function is
    // evaluated more accurately; widen until the sign change is back
    let mut width = (hi_d - lo_d).max(lit(1e-14 * lo.abs().max(1.0)));
    for _ in 0..40 {
        if (g_lo > Dd::from(0.0)) != (g_hi > Dd::from(0.0)) {
            break;
        }
        width *= lit::<Dd>(2.0);
        lo_d -= width;
        hi_d += width;
        g_lo = g(lo_d)?;
        g_hi = g(hi_d)?;
    }
    if (g_lo > Dd::from(0.0)) == (g_hi > Dd::from(0.0)) {
        return Err(Error::LostBracket { lo, hi });
    }
    let tol: Dd = lit(1e-28 * lo.abs().max(1.0));
    let b = illinois(g, Bracketed { lo: lo_d, hi: hi_d, g_lo, g_hi }, tol, 200)?;
    let c = if b.g_lo.abs() <= b.g_hi.abs() { b.lo } else { b.hi };
    let (f1, f2) = period_functions_dd(&paths, c)?;
    Ok((c, f1, f2))
}

/// Conjugates the double-double monodromies by `P`, checks membership in
/// SU(1,1) and classifies the end. Fails with the worst loop when the
/// residual exceeds `TOL_SU11`.
pub fn verify_solution(a: f64, c: Dd, p: &Mat2<Dd>) -> Result<PeriodSolution> {
    let paths = canonical_paths(a)?;
    let m = monodromies_dd(&paths, c)?;
    let residuals = gauged_residuals(&m, p)?;
    let (worst, res) =
        residuals
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |acc, (j, r)| if *r > acc.1 || r.is_nan() { (j, *r) } else { acc });
    if !(res < TOL_SU11) {
        return Err(Error::VerificationFailed { loop_index: worst + 1, residual: res });
    }
    let gauged = m.conjugate_by(p)?;
    let cf = to_f64(c);
    let integ = dd_integrator();
    let ends = ends::end_loop_check(&integ, a, c, 1)?;
    let end_phi = ends::end_monodromy(&integ, a, c, 1)?.conjugate_by(p)?;
    let end_type = classify_su11_within(&end_phi, TOL_CLASS, TOL_SU11)?;
    let (f1, f2) = period_functions(&half_path_frames(&integ, &paths, c)?)?;
    let f = (f1 + f2) * lit::<Dd>(0.5);
    let gauge_alpha = to_f64(p.m11.re);
    let gauge_beta = to_f64(p.m12.re.abs());
    Ok(PeriodSolution {
        a,
        c: cf,
        c_extended: c,
        f: to_f64(f),
        epsilon: if to_f64(p.m12.re) > 0.0 { 1 } else { -1 },
        alpha: gauge_alpha,
        beta: gauge_beta,
        p: p.to_f64(),
        p_extended: *p,
        su11_residual: res,
        loop_residuals: residuals,
        end_type,
        ends,
        gauged,
    })
}

/// Refine, polish, gauge and verify a crossing inside `bracket`.
pub fn solve(a: f64, bracket: (f64, f64), tol_c: f64, cfg: &IntegratorConfig) -> Result<PeriodSolution> {
    let s = locate_sign_change(a, bracket, tol_c, cfg)?;
    if s.kind == SignChangeKind::Pole {
        return Err(Error::PoleBracket { lo: s.lo, hi: s.hi });
    }
    solve_gauge(s.f())?;
    let (c, f1, f2) = polish_root(a, s.lo, s.hi)?;
    let gauge = solve_gauge((f1 + f2) * lit::<Dd>(0.5))?;
    verify_solution(a, c, &gauge.p)
}

/// Finds a crossing near `c` by stepping outwards until `f1 - f2` changes
/// sign, then solves. Used when only an approximate root is known.
pub fn solve_near(a: f64, c: f64, cfg: &IntegratorConfig) -> Result<PeriodSolution> {
    let mut h = 1e-4 * c.abs().max(1.0);
    let g = |x: f64| period_functions_at(a, x, cfg).map(|(f1, f2)| f1 - f2);
    let g0 = g(c)?;
    for _ in 0..12 {
        for x in [c - h, c + h] {
            if (g(x)? > 0.0) != (g0 > 0.0) {
                let b = if x < c { (x, c) } else { (c, x) };
                return solve(a, b, 1e-12, cfg);
            }
        }
        h *= 2.0;
    }
    Err(Error::InvalidInput(format!("no sign change of f1 - f2 near c = {c}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauge_examples() {
        let g = solve_gauge(3.0).unwrap();
        assert_eq!(g.epsilon, 1);
        assert!((g.b - 0.125).abs() < 1e-15);
        assert!((g.beta - 0.594_603_557_501_360_5).abs() < 1e-12);
        assert!((g.alpha + 0.840_896_415_253_714_6).abs() < 1e-12);
        assert!((g.implied_f() - 3.0).abs() < 1e-12);
        let g = solve_gauge(-3.0).unwrap();
        assert_eq!(g.epsilon, -1);
        assert!((g.alpha - 0.840_896_415_253_714_6).abs() < 1e-12);
        assert!((g.p.det() - 1.0).norm() < 1e-12);
        assert!(matches!(solve_gauge(1.0), Err(Error::NotAdmissible { .. })));
        assert!(matches!(solve_gauge(-0.5), Err(Error::NotAdmissible { .. })));
    }

    #[test]
    fn illinois_finds_linear_root() {
        let b = Bracketed { lo: -1.0, hi: 2.0, g_lo: -1.0, g_hi: 2.0 };
        let r = illinois(|c: f64| Ok(c), b, 1e-12, 200).unwrap();
        assert!(r.lo.abs() < 1e-12 || r.hi.abs() < 1e-12 || r.g_lo == 0.0 || r.g_hi == 0.0);
        let b = Bracketed { lo: 0.0, hi: 3.0, g_lo: -2.0, g_hi: 7.0 };
        let r = illinois(|c: f64| Ok(c * c - 2.0), b, 1e-12, 200).unwrap();
        assert!((r.lo - 2f64.sqrt()).abs() < 1e-12 && r.hi - r.lo <= 1e-12);
    }

    #[test]
    fn illinois_converges_onto_a_pole() {
        let g = |c: f64| -1.0 / (c - 0.3);
        let b = Bracketed { lo: 0.0, hi: 1.0, g_lo: g(0.0), g_hi: g(1.0) };
        let r = illinois(|c: f64| Ok(g(c)), b, 1e-10, 500).unwrap();
        assert!((r.lo - 0.3).abs() < 1e-9 && r.hi - r.lo <= 1e-10, "{} {} {} {}", r.lo, r.hi, r.g_lo, r.g_hi);
    }

    #[test]
    fn no_sign_change_on_3_to_4() {
        let cfg = IntegratorConfig::default();
        let coarse = scan_c(2.0, 3.0, 4.0, 20, &cfg).unwrap();
        assert!(sign_changes(&coarse).is_empty());
        assert!(coarse.windows(2).all(|w| w[0].c < w[1].c));
    }

    #[test]
    fn scan_marks_skip_window() {
        let r = scan_c(2.0, -0.02, 0.02, 4, &IntegratorConfig::default()).unwrap();
        assert_eq!(r.len(), 5);
        assert!(r[2].is_gap());
        assert!(!r[0].is_gap());
    }

    #[test]
    fn refine_near_positive_root() {
        let cfg = IntegratorConfig::default();
        let (c, f) = refine_root(2.0, (1.265, 1.275), 1e-10, &cfg).unwrap();
        assert!((c - 1.26988).abs() < 0.01 && f > 1.0);
    }

    #[test]
    fn pole_brackets_are_recognised() {
        let cfg = IntegratorConfig::default();
        let s = locate_sign_change(2.0, (-0.56, -0.55), 1e-9, &cfg).unwrap();
        assert_eq!(s.kind, SignChangeKind::Pole);
        assert!(matches!(refine_root(2.0, (-0.56, -0.55), 1e-9, &cfg), Err(Error::PoleBracket { .. })));
    }

    #[test]
    fn lost_bracket() {
        let cfg = IntegratorConfig::default();
        assert!(matches!(locate_sign_change(2.0, (3.0, 3.5), 1e-9, &cfg), Err(Error::LostBracket { .. })));
    }
}
