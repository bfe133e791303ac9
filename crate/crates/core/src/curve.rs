//! The twice-punctured torus `w^2 = (z+1)(z-a) / ((z-1)(z+a))`, sheet
//! transport of `w` along polylines, and the canonical loops used by the
//! period problem.
//!
//! `w` is never chosen by picking square-root branches. It is carried along
//! a path by integrating `w' = w L(z)` with the closed-form logarithmic
//! derivative `L`, and `|w^2 - R(z)|` is checked at every step as an
//! independent monitor.

use crate::error::{Error, Result};
use crate::rk::{self, IntegratorConfig};
use crate::scalar::{cabs, lit, Real};
use num_complex::{Complex, Complex64};

/// Minimum distance default paths keep from the branch points `{1, -1, a, -a}`.
pub const BRANCH_CLEARANCE: f64 = 0.1;
/// Relative tolerance on the sheet residual `|w^2 - R(z)| / (1 + |R(z)|)`.
pub const SHEET_TOL: f64 = 1e-8;
/// Height of the first-quadrant bump used by the default paths.
pub const PATH_LIFT: f64 = 0.8;
/// Vertices of the polygon approximating an end circle.
pub const END_CIRCLE_VERTICES: usize = 96;

/// Branch parameter `a > 1` and Hopf coefficient `c != 0`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurveParams {
    pub a: f64,
    pub c: f64,
}

impl CurveParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        validate_a(a)?;
        if !c.is_finite() || c == 0.0 {
            return Err(Error::InvalidInput(format!("c must be finite and nonzero, got {c}")));
        }
        Ok(Self { a, c })
    }
}

pub fn validate_a(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::InvalidInput(format!("a must satisfy a > 1, got {a}")));
    }
    Ok(())
}

/// A point `(z, w)` of the curve; `w` is the value on the current sheet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T: Real = f64> {
    pub z: Complex<T>,
    pub w: Complex<T>,
}

impl<T: Real> CurvePoint<T> {
    pub fn new(z: Complex<T>, w: Complex<T>) -> Self {
        Self { z, w }
    }

    /// `(0, sheet)`, the base point for `sheet = 1`.
    pub fn origin(sheet: i8) -> Self {
        Self { z: Complex::new(T::zero(), T::zero()), w: Complex::new(lit(f64::from(sheet.signum())), T::zero()) }
    }

    /// Relative residual `|w^2 - R(z)| / (1 + |R(z)|)`.
    pub fn sheet_residual(&self, a: T) -> T {
        let r = rhs_unchecked(self.z, a);
        cabs(self.w * self.w - r) / (T::one() + cabs(r))
    }

    pub fn to_f64(&self) -> CurvePoint<f64> {
        CurvePoint { z: crate::scalar::cplx_f64(self.z), w: crate::scalar::cplx_f64(self.w) }
    }
}

impl CurvePoint<f64> {
    pub fn cast<T: Real>(&self) -> CurvePoint<T> {
        CurvePoint { z: crate::scalar::cplx(self.z), w: crate::scalar::cplx(self.w) }
    }
}

pub fn branch_points(a: f64) -> [Complex64; 4] {
    [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(a, 0.0), Complex64::new(-a, 0.0)]
}

/// Distance from `z` to the nearest branch point.
pub fn branch_distance(z: Complex64, a: f64) -> f64 {
    branch_points(a).iter().map(|p| (z - p).norm()).fold(f64::INFINITY, f64::min)
}

fn check_domain(z: Complex64, a: f64) -> Result<()> {
    let d = branch_distance(z, a);
    if d < BRANCH_CLEARANCE {
        return Err(Error::Domain { z: z.to_string(), distance: d });
    }
    Ok(())
}

#[inline]
pub(crate) fn rhs_unchecked<T: Real>(z: Complex<T>, a: T) -> Complex<T> {
    let one = T::one();
    ((z + one) * (z - a)) / ((z - one) * (z + a))
}

/// `R(z) = (z+1)(z-a) / ((z-1)(z+a))`.
pub fn rational_rhs(z: Complex64, a: f64) -> Result<Complex64> {
    check_domain(z, a)?;
    Ok(rhs_unchecked(z, a))
}

#[inline]
pub(crate) fn log_derivative_unchecked<T: Real>(z: Complex<T>, a: T) -> Complex<T> {
    let one = T::one();
    let half: T = lit(0.5);
    ((z + one).inv() + (z - a).inv() - (z - one).inv() - (z + a).inv()) * half
}

/// `d/dz L(z)`, needed for second derivatives of `w`.
#[inline]
pub(crate) fn log_derivative_prime_unchecked<T: Real>(z: Complex<T>, a: T) -> Complex<T> {
    let one = T::one();
    let half: T = lit(0.5);
    let sq = |u: Complex<T>| (u * u).inv();
    (sq(z - one) + sq(z + a) - sq(z + one) - sq(z - a)) * half
}

/// `L(z) = d(log w)/dz = 1/2 [1/(z+1) + 1/(z-a) - 1/(z-1) - 1/(z+a)]`.
pub fn log_derivative(z: Complex64, a: f64) -> Result<Complex64> {
    check_domain(z, a)?;
    Ok(log_derivative_unchecked(z, a))
}

/// A polyline in the z-plane together with its starting point on the curve.
/// The lift to the curve is defined by continuity.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub start: CurvePoint,
    pub waypoints: Vec<Complex64>,
    pub closed: bool,
    pub a: f64,
    pub clearance: f64,
}

impl PathSpec {
    /// Builds and validates a path with the default branch clearance.
    pub fn new(start: CurvePoint, waypoints: Vec<Complex64>, closed: bool, a: f64) -> Result<Self> {
        Self::with_clearance(start, waypoints, closed, a, BRANCH_CLEARANCE)
    }

    pub fn with_clearance(
        start: CurvePoint,
        waypoints: Vec<Complex64>,
        closed: bool,
        a: f64,
        clearance: f64,
    ) -> Result<Self> {
        validate_a(a)?;
        let path = Self { start, waypoints, closed, a, clearance };
        path.validate()?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        let first =
            *self.waypoints.first().ok_or_else(|| Error::InvalidInput("path needs at least one waypoint".into()))?;
        if (first - self.start.z).norm() > 1e-12 {
            return Err(Error::InvalidInput("first waypoint must equal the start point".into()));
        }
        if self.closed && (*self.waypoints.last().unwrap() - first).norm() > 1e-12 {
            return Err(Error::InvalidInput("closed path must end at its first waypoint".into()));
        }
        if self.waypoints.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("waypoints must be finite".into()));
        }
        let res = self.start.sheet_residual(self.a);
        if !(res <= SHEET_TOL) {
            return Err(Error::Continuation { z: self.start.z.to_string(), residual: res });
        }
        for (p, q) in self.segments() {
            for b in branch_points(self.a) {
                let d = segment_distance(p, q, b);
                if d < self.clearance {
                    return Err(Error::Domain { z: format!("segment {p} -> {q}"), distance: d });
                }
            }
        }
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.waypoints.windows(2).map(|s| (s[0], s[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(p, q)| (q - p).norm()).sum()
    }

    /// The path traversed backwards, starting from `end` (the lift of the
    /// last waypoint, which the caller must supply).
    pub fn reversed(&self, end: CurvePoint) -> Result<Self> {
        let mut wps = self.waypoints.clone();
        wps.reverse();
        Self::with_clearance(end, wps, self.closed, self.a, self.clearance)
    }

    /// Inserts evenly spaced interior vertices so that the path has at
    /// least `samples` vertices, spread in proportion to segment length.
    pub fn resampled(&self, samples: usize) -> Self {
        let total = self.length();
        let mut wps = vec![self.waypoints[0]];
        for (p, q) in self.segments() {
            let len = (q - p).norm();
            let n = if total > 0.0 { ((samples as f64) * len / total).ceil().max(1.0) as usize } else { 1 };
            for k in 1..=n {
                wps.push(p + (q - p) * (k as f64 / n as f64));
            }
        }
        Self { waypoints: wps, ..self.clone() }
    }
}

pub(crate) fn segment_distance(p: Complex64, q: Complex64, x: Complex64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (x - p).norm();
    }
    let t = (((x - p) * d.conj()).re / len2).clamp(0.0, 1.0);
    (p + d * t - x).norm()
}

/// Continues `w` along `path` by integrating `w' = w L(z)`, returning the
/// lifted endpoint.
pub fn transport_w(path: &PathSpec) -> Result<CurvePoint> {
    transport_w_with(path, &IntegratorConfig::default())
}

pub fn transport_w_with(path: &PathSpec, cfg: &IntegratorConfig) -> Result<CurvePoint> {
    cfg.validate()?;
    path.validate()?;
    let a = path.a;
    let mut w = path.start.w;
    let mut h = cfg.initial_step;
    let mut steps = 0;
    for (p, q) in path.segments() {
        let len = (q - p).norm();
        if len == 0.0 {
            continue;
        }
        let u = (q - p) / len;
        let rhs = |s: f64, y: &[Complex64; 1]| {
            let z = p + u * s;
            [y[0] * log_derivative_unchecked(z, a) * u]
        };
        let monitor = |s: f64, y: &[Complex64; 1]| {
            let pt = CurvePoint::new(p + u * s, y[0]);
            check_sheet(&pt, a)
        };
        w = rk::integrate_adaptive(rhs, [w], len, &mut h, cfg, &mut steps, monitor)?[0];
    }
    Ok(CurvePoint::new(*path.waypoints.last().unwrap(), w))
}

pub(crate) fn check_sheet<T: Real>(pt: &CurvePoint<T>, a: T) -> Result<()> {
    let res = pt.sheet_residual(a).to_f64().unwrap_or(f64::NAN);
    if !(res <= SHEET_TOL) {
        return Err(Error::Continuation { z: crate::scalar::cplx_f64(pt.z).to_string(), residual: res });
    }
    Ok(())
}

/// The default half-paths, generator loops and end loops for a given `a`.
#[derive(Debug, Clone)]
pub struct CanonicalPaths {
    pub a: f64,
    /// `(0,1)` through the first quadrant to `z = (1+a)/2`.
    pub c1: PathSpec,
    /// `(0,1)` through the first quadrant to `z = 2a`.
    pub c2: PathSpec,
    pub gamma1: PathSpec,
    pub gamma2: PathSpec,
    pub gamma3: PathSpec,
    /// Loop around the end `(inf, 1)`.
    pub end_loop_plus: PathSpec,
    /// Loop around the end `(inf, -1)`.
    pub end_loop_minus: PathSpec,
}

impl CanonicalPaths {
    pub fn gamma(&self, j: usize) -> &PathSpec {
        match j {
            1 => &self.gamma1,
            2 => &self.gamma2,
            3 => &self.gamma3,
            _ => panic!("generator index must be 1, 2 or 3"),
        }
    }

    pub fn end_loop(&self, which_end: i8) -> &PathSpec {
        if which_end >= 0 {
            &self.end_loop_plus
        } else {
            &self.end_loop_minus
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// First-quadrant polyline from the origin to the real point `x_end`.
fn quadrant_arc(x_end: f64) -> Vec<Complex64> {
    vec![c(0.0, 0.0), c(x_end / 2.0, PATH_LIFT), c(x_end, 0.0)]
}

/// Closed loop from the origin: out along `arc`, back along its mirror image
/// in the real axis.
fn mirrored_loop(arc: &[Complex64]) -> Vec<Complex64> {
    let mut wps = arc.to_vec();
    wps.extend(arc.iter().rev().skip(1).map(|z| z.conj()));
    wps
}

/// Half of `gamma_1`: from `(0,1)` around `z = 1` to `(0,-1)`.
pub fn half_gamma1(a: f64) -> Vec<Complex64> {
    mirrored_loop(&quadrant_arc((1.0 + a) / 2.0))
}

/// Polyline from the origin up the imaginary axis to `|z| = radius`, once
/// around the circle counterclockwise, and back down.
fn end_excursion(radius: f64) -> Vec<Complex64> {
    let n = END_CIRCLE_VERTICES;
    let mut wps = vec![c(0.0, 0.0)];
    for k in 0..=n {
        let t = std::f64::consts::FRAC_PI_2 + std::f64::consts::TAU * k as f64 / n as f64;
        wps.push(Complex64::from_polar(radius, t));
    }
    // snap the closing vertex so the loop closes bit-exactly
    *wps.last_mut().unwrap() = c(0.0, radius);
    wps[1] = c(0.0, radius);
    wps.push(c(0.0, 0.0));
    wps
}

/// Default paths. Only the quadrant pattern and the endpoints matter; any
/// homotopic choice yields the same monodromy.
pub fn canonical_paths(a: f64) -> Result<CanonicalPaths> {
    validate_a(a)?;
    let base = CurvePoint::origin(1);
    let z1 = (1.0 + a) / 2.0;
    let z2 = 2.0 * a;
    let c1 = quadrant_arc(z1);
    let c2 = quadrant_arc(z2);

    let half1 = half_gamma1(a);
    let mut gamma1 = half1.clone();
    gamma1.extend(half1.iter().skip(1).map(|z| -z));

    let gamma2 = mirrored_loop(&c2);
    // point reflection of gamma2, first leg in the third quadrant
    let gamma3: Vec<Complex64> = gamma2.iter().map(|z| -z).collect();

    let radius = 3.0 * a;
    let end_plus = end_excursion(radius);
    let mut end_minus = half1.clone();
    end_minus.extend(end_excursion(radius).into_iter().skip(1));
    end_minus.extend(half1.iter().rev().skip(1));

    Ok(CanonicalPaths {
        a,
        c1: PathSpec::new(base, c1, false, a)?,
        c2: PathSpec::new(base, c2, false, a)?,
        gamma1: PathSpec::new(base, gamma1, true, a)?,
        gamma2: PathSpec::new(base, gamma2, true, a)?,
        gamma3: PathSpec::new(base, gamma3, true, a)?,
        end_loop_plus: PathSpec::new(base, end_plus, true, a)?,
        end_loop_minus: PathSpec::new(base, end_minus, true, a)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rational_rhs_examples() {
        assert!((rational_rhs(z(0.0, 0.0), 2.0).unwrap() - 1.0).norm() < 1e-15);
        assert!((rational_rhs(z(0.0, 0.0), 7.3).unwrap() - 1.0).norm() < 1e-15);
        assert!((rational_rhs(z(3.0, 0.0), 2.0).unwrap() - 0.4).norm() < 1e-15);
        assert!((rational_rhs(z(-3.0, 0.0), 2.0).unwrap() - 2.5).norm() < 1e-15);
    }

    #[test]
    fn rational_rhs_rejects_branch_neighbourhood() {
        assert!(matches!(rational_rhs(z(1.05, 0.0), 2.0), Err(Error::Domain { .. })));
        assert!(matches!(rational_rhs(z(-2.0, 0.01), 2.0), Err(Error::Domain { .. })));
        assert!(log_derivative(z(-1.0, 0.0), 2.0).is_err());
    }

    #[test]
    fn log_derivative_at_origin() {
        for a in [1.5, 2.0, 3.0] {
            let l = log_derivative(z(0.0, 0.0), a).unwrap();
            assert!((l - (1.0 - 1.0 / a)).norm() < 1e-15);
        }
    }

    #[test]
    fn log_derivative_decays_like_one_minus_a_over_z_squared() {
        let a = 2.0;
        for r in [1e3, 1e4, 1e5] {
            let zz = Complex64::from_polar(r, 0.7);
            let scaled = log_derivative(zz, a).unwrap() * zz * zz;
            // d/dz log w = -(1/z^2) d/dzeta log w and (1/w) dw/dzeta -> 1 - a
            assert!((scaled + (1.0 - a)).norm() < 10.0 / r, "{scaled}");
        }
    }

    #[test]
    fn log_derivative_matches_finite_difference_of_transported_w() {
        let a = 2.0;
        let base = CurvePoint::origin(1);
        let at = |x: Complex64| {
            let path = PathSpec::new(base, vec![z(0.0, 0.0), x], false, a).unwrap();
            transport_w(&path).unwrap().w
        };
        let z0 = z(0.0, 1.0);
        let h = 1e-4;
        let fd = (at(z0 + h).ln() - at(z0 - h).ln()) / (2.0 * h);
        let fd_im = (at(z0 + z(0.0, h)).ln() - at(z0 - z(0.0, h)).ln()) / z(0.0, 2.0 * h);
        let l = log_derivative(z0, a).unwrap();
        assert!((fd - l).norm() < 1e-8, "{fd} vs {l}");
        assert!((fd_im - l).norm() < 1e-8, "{fd_im} vs {l}");
    }

    #[test]
    fn reciprocal_symmetry() {
        for (re, im) in [(0.3, 0.4), (-2.5, 1.0), (5.0, -3.0), (0.01, -0.2)] {
            let p = rational_rhs(z(re, im), 2.0).unwrap() * rational_rhs(z(-re, -im), 2.0).unwrap();
            assert!((p - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn transport_of_constant_path_is_identity() {
        let base = CurvePoint::origin(1);
        let path = PathSpec::new(base, vec![z(0.0, 0.0)], false, 2.0).unwrap();
        assert_eq!(transport_w(&path).unwrap(), base);
    }

    #[test]
    fn transport_to_c2_endpoint_matches_rhs() {
        let paths = canonical_paths(2.0).unwrap();
        let end = transport_w(&paths.c2).unwrap();
        assert_eq!(end.z, z(4.0, 0.0));
        let expected = (5.0 * 2.0) / (3.0 * 6.0);
        assert!((end.w * end.w - expected).norm() < 1e-8);
    }

    #[test]
    fn generator_loops_close_on_the_curve() {
        for a in [1.5, 2.0, 3.0] {
            let paths = canonical_paths(a).unwrap();
            for j in 1..=3 {
                let end = transport_w(paths.gamma(j)).unwrap();
                assert!((end.w - 1.0).norm() < 1e-8, "gamma{j} a={a}: {}", end.w);
            }
            for e in [1, -1] {
                let end = transport_w(paths.end_loop(e)).unwrap();
                assert!((end.w - 1.0).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn half_gamma1_switches_sheet() {
        let base = CurvePoint::origin(1);
        let path = PathSpec::new(base, half_gamma1(2.0), false, 2.0).unwrap();
        let end = transport_w(&path).unwrap();
        assert!((end.w + 1.0).norm() < 1e-8);
    }

    #[test]
    fn end_loop_sheets() {
        // the radial leg of each end loop reaches w -> +1 or -1 respectively
        let a = 2.0;
        let paths = canonical_paths(a).unwrap();
        let far = |path: &PathSpec, upto: usize| {
            let p = PathSpec { waypoints: path.waypoints[..upto].to_vec(), closed: false, ..path.clone() };
            transport_w(&p).unwrap()
        };
        let plus = far(&paths.end_loop_plus, 2);
        assert!((plus.w - 1.0).norm() < 0.3);
        let minus = far(&paths.end_loop_minus, half_gamma1(a).len() + 1);
        assert!((minus.w + 1.0).norm() < 0.3);
    }

    #[test]
    fn canonical_half_path_endpoints() {
        let p = canonical_paths(2.0).unwrap();
        assert_eq!(*p.c1.waypoints.last().unwrap(), z(1.5, 0.0));
        assert_eq!(*p.c2.waypoints.last().unwrap(), z(4.0, 0.0));
        // first legs stay in the open first quadrant
        for path in [&p.c1, &p.c2] {
            for w in &path.waypoints[1..path.waypoints.len() - 1] {
                assert!(w.re > 0.0 && w.im > 0.0);
            }
        }
    }

    #[test]
    fn canonical_paths_keep_clearance() {
        for a in [1.5, 2.0, 3.0, 5.0] {
            let p = canonical_paths(a).unwrap();
            for path in [&p.c1, &p.c2, &p.gamma1, &p.gamma2, &p.gamma3, &p.end_loop_plus, &p.end_loop_minus] {
                for (s, e) in path.segments() {
                    for b in branch_points(a) {
                        assert!(segment_distance(s, e, b) >= 0.1);
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_loops_follow_quadrant_pattern() {
        let p = canonical_paths(2.0).unwrap();
        let g3 = &p.gamma3.waypoints;
        assert!(g3[1].re < 0.0 && g3[1].im < 0.0);
        assert!(g3[2].re < -2.0 && g3[2].im == 0.0);
        assert!(g3[3].re < 0.0 && g3[3].im > 0.0);
        let g1 = &p.gamma1.waypoints;
        assert_eq!(g1.len(), 9);
        assert!(g1[2].re > 1.0 && g1[2].re < 2.0);
        assert!(g1[5].re < 0.0 && g1[5].im < 0.0);
        assert!(g1[7].re < 0.0 && g1[7].im > 0.0);
    }

    #[test]
    fn invalid_paths_are_rejected() {
        let base = CurvePoint::origin(1);
        assert!(PathSpec::new(base, vec![z(0.0, 0.0), z(1.0, 0.0)], false, 2.0).is_err());
        assert!(PathSpec::new(base, vec![z(0.5, 0.0)], false, 2.0).is_err());
        assert!(PathSpec::new(base, vec![z(0.0, 0.0), z(0.0, 1.0)], true, 2.0).is_err());
        let wrong_sheet = CurvePoint::new(z(0.0, 0.0), z(0.5, 0.0));
        assert!(PathSpec::new(wrong_sheet, vec![z(0.0, 0.0)], false, 2.0).is_err());
        assert!(canonical_paths(1.0).is_err());
    }
}
