//! Integration of the frame equation `dF = alpha F` jointly with `w` along
//! lifted polylines.
//!
//! Two integrators share one interface. [`DormandPrince`] is the adaptive
//! 5(4) scheme in `f64` used for scans and meshes. [`TaylorSeries`] sums the
//! local power series of `(w, F)` to roundoff in any [`Real`] type; with
//! double-double scalars it provides reference-grade monodromies whose
//! entries may exceed `1e6`, far beyond what `f64` arithmetic can certify
//! in absolute terms.

use crate::curve::{self, check_sheet, log_derivative_unchecked, CurvePoint, PathSpec};
use crate::error::{Error, Result};
use crate::linalg2c::Mat2;
use crate::rk::{self, IntegratorConfig};
use crate::scalar::{cabs, cplx, lit, to_f64, Real};
use num_complex::{Complex, Complex64};

/// Frame and curve point at a path vertex. `arc_param` is the fraction of
/// the path length already traversed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameState<T: Real = f64> {
    pub point: CurvePoint<T>,
    pub f: Mat2<T>,
    pub arc_param: f64,
}

/// `alpha / dz = c [[1, -w], [1/w, -1]]`. Rejects points where `w` is 0 or
/// infinite to working precision, i.e. the branch points.
pub fn alpha_matrix(p: &CurvePoint, c: f64) -> Result<Mat2<f64>> {
    let r = p.w.norm();
    if !(r > 1e-8 && r < 1e8) {
        return Err(Error::Domain { z: p.z.to_string(), distance: f64::NAN });
    }
    Ok(alpha_unchecked(p.w, c))
}

#[inline]
pub(crate) fn alpha_unchecked<T: Real>(w: Complex<T>, c: T) -> Mat2<T> {
    let one = Complex::new(c, T::zero());
    Mat2::new(one, -w * c, w.inv() * c, -one)
}

/// `d(alpha/dz)/dz` given `w' = dw/dz`.
#[inline]
pub(crate) fn alpha_prime<T: Real>(w: Complex<T>, dw: Complex<T>, c: T) -> Mat2<T> {
    let z = Complex::new(T::zero(), T::zero());
    Mat2::new(z, -dw * c, -(dw / (w * w)) * c, z)
}

/// A scheme that carries `(w, F)` along a path.
pub trait FrameIntegrator<T: Real> {
    /// States at every waypoint, the start included.
    fn integrate_path(&self, path: &PathSpec, c: T, f0: Mat2<T>) -> Result<Vec<FrameState<T>>>;

    /// Endpoint state.
    fn integrate_frame(&self, path: &PathSpec, c: T, f0: Mat2<T>) -> Result<FrameState<T>> {
        Ok(*self.integrate_path(path, c, f0)?.last().expect("paths have a start vertex"))
    }

    /// Endpoint frame started at the identity.
    fn holonomy(&self, path: &PathSpec, c: T) -> Result<Mat2<T>> {
        Ok(self.integrate_frame(path, c, Mat2::identity())?.f)
    }
}

fn check_initial_det<T: Real>(f0: &Mat2<T>) -> Result<()> {
    let d = to_f64(cabs(f0.det() - Complex::new(T::one(), T::zero())));
    if !(d <= crate::linalg2c::TOL_DET) {
        return Err(Error::InvalidInput(format!("initial frame has |det - 1| = {d:e}")));
    }
    Ok(())
}

fn arc_fractions(path: &PathSpec) -> Vec<f64> {
    let total = path.length();
    let mut acc = 0.0;
    let mut out = vec![0.0];
    for (p, q) in path.segments() {
        acc += (q - p).norm();
        out.push(if total > 0.0 { acc / total } else { 1.0 });
    }
    out
}

/// Adaptive Dormand–Prince 5(4) in `f64`.
#[derive(Debug, Clone, Copy, Default)]
pub struct DormandPrince {
    pub cfg: IntegratorConfig,
}

/// Work counters for one path integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub max_det_drift: f64,
    pub max_sheet_residual: f64,
}

type Joint = [Complex64; 5];

fn pack(w: Complex64, f: &Mat2<f64>) -> Joint {
    [w, f.m11, f.m12, f.m21, f.m22]
}

fn unpack(y: &Joint) -> (Complex64, Mat2<f64>) {
    (y[0], Mat2::new(y[1], y[2], y[3], y[4]))
}

fn joint_rhs(p: Complex64, u: Complex64, a: f64, c: f64) -> impl Fn(f64, &Joint) -> Joint {
    move |s, y| {
        let z = p + u * s;
        let (w, f) = unpack(y);
        let df = alpha_unchecked(w, c) * f;
        let dw = w * log_derivative_unchecked(z, a);
        pack(dw * u, &df.scale(u))
    }
}

impl DormandPrince {
    pub fn new(cfg: IntegratorConfig) -> Self {
        Self { cfg }
    }

    /// Like [`FrameIntegrator::integrate_path`], also returning work counters
    /// and the number of accepted steps on every segment.
    pub fn integrate_path_with_stats(
        &self,
        path: &PathSpec,
        c: f64,
        f0: Mat2<f64>,
    ) -> Result<(Vec<FrameState>, IntegrationStats, Vec<usize>)> {
        self.cfg.validate()?;
        path.validate()?;
        check_initial_det(&f0)?;
        let a = path.a;
        let fractions = arc_fractions(path);
        let mut stats = IntegrationStats::default();
        let mut per_segment = Vec::new();
        let mut y = pack(path.start.w, &f0);
        let mut states = vec![FrameState { point: path.start, f: f0, arc_param: 0.0 }];
        let mut h = self.cfg.initial_step;
        let mut steps = 0usize;
        for (k, (p, q)) in path.segments().enumerate() {
            let len = (q - p).norm();
            let before = steps;
            if len > 0.0 {
                let u = (q - p) / len;
                let monitor = |s: f64, y: &Joint| {
                    let (w, f) = unpack(y);
                    let pt = CurvePoint::new(p + u * s, w);
                    stats.max_sheet_residual = stats.max_sheet_residual.max(pt.sheet_residual(a));
                    stats.max_det_drift = stats.max_det_drift.max((f.det() - 1.0).norm());
                    check_sheet(&pt, a)
                };
                y = rk::integrate_adaptive(joint_rhs(p, u, a, c), y, len, &mut h, &self.cfg, &mut steps, monitor)?;
            }
            per_segment.push(steps - before);
            let (w, f) = unpack(&y);
            states.push(FrameState { point: CurvePoint::new(q, w), f, arc_param: fractions[k + 1] });
        }
        stats.accepted_steps = steps;
        Ok((states, stats, per_segment))
    }

    /// Fixed-step integration with `refine` times as many steps per segment
    /// as the adaptive run used: the self-convergence reference.
    pub fn reference_frame(&self, path: &PathSpec, c: f64, f0: Mat2<f64>, refine: usize) -> Result<FrameState> {
        let (_, _, per_segment) = self.integrate_path_with_stats(path, c, f0)?;
        let a = path.a;
        let mut y = pack(path.start.w, &f0);
        for ((p, q), n) in path.segments().zip(per_segment) {
            let len = (q - p).norm();
            if len == 0.0 {
                continue;
            }
            let u = (q - p) / len;
            y = rk::integrate_fixed(joint_rhs(p, u, a, c), y, len, refine * n.max(1));
        }
        let (w, f) = unpack(&y);
        let end = CurvePoint::new(*path.waypoints.last().unwrap(), w);
        check_sheet(&end, a)?;
        Ok(FrameState { point: end, f, arc_param: 1.0 })
    }
}

impl FrameIntegrator<f64> for DormandPrince {
    fn integrate_path(&self, path: &PathSpec, c: f64, f0: Mat2<f64>) -> Result<Vec<FrameState>> {
        Ok(self.integrate_path_with_stats(path, c, f0)?.0)
    }
}

/// Endpoint frame by adaptive integration with the given configuration.
pub fn integrate_frame(path: &PathSpec, c: f64, f0: Mat2<f64>, cfg: &IntegratorConfig) -> Result<FrameState> {
    DormandPrince::new(*cfg).integrate_frame(path, c, f0)
}

/// Power-series integrator: on each step `z = z0 + tH`, `t in [0, 1]`, the
/// Taylor coefficients of `w`, `1/w` and `F` follow from the partial
/// fraction form of `L` and the recursion `(k+1) F_{k+1} = c sum A_j F_{k-j}`.
#[derive(Debug, Clone, Copy)]
pub struct TaylorSeries {
    /// Truncation threshold relative to the size of the state.
    pub tol: f64,
    /// Step length as a fraction of the distance to the nearest branch point.
    pub radius_fraction: f64,
    pub max_order: usize,
    pub max_steps: usize,
}

impl TaylorSeries {
    /// Settings that sum the series to the roundoff of `T`.
    pub fn for_type<T: Real>() -> Self {
        Self { tol: 4.0 * T::unit_roundoff(), radius_fraction: 0.3, max_order: 160, max_steps: 100_000 }
    }

    fn step<T: Real>(
        &self,
        z0: Complex<T>,
        hstep: Complex<T>,
        w0: Complex<T>,
        f0: &Mat2<T>,
        poles: &[(Complex<T>, T); 4],
        c: T,
    ) -> Option<(Complex<T>, Mat2<T>)> {
        let zero = Complex::new(T::zero(), T::zero());
        let half: T = lit(0.5);
        let tol: T = lit(self.tol);
        // q_p = H / (z0 - p); L H = 1/2 sum s_p q_p (-q_p)^j
        let q: Vec<(Complex<T>, T)> = poles.iter().map(|(p, s)| (hstep / (z0 - *p), *s)).collect();
        let mut lhat = Vec::with_capacity(self.max_order);
        let mut qpow: Vec<Complex<T>> = q.iter().map(|(qp, _)| *qp).collect();
        let mut w = vec![w0];
        let mut v = vec![w0.inv()];
        let mut f = vec![*f0];
        let scale_f = f0.max_abs();
        let scale_w = cabs(w0).max(cabs(v[0]));
        let mut quiet = 0;
        for k in 0..self.max_order {
            let sign: T = if k % 2 == 0 { T::one() } else { -T::one() };
            let mut l = zero;
            for (i, (_, s)) in q.iter().enumerate() {
                l = l + qpow[i] * (*s * sign);
                qpow[i] = qpow[i] * q[i].0;
            }
            lhat.push(l * half);
            let kk: T = lit((k + 1) as f64);
            let mut wn = zero;
            let mut vn = zero;
            for j in 0..=k {
                wn = wn + lhat[j] * w[k - j];
                vn = vn - lhat[j] * v[k - j];
            }
            let wn = wn / kk;
            let vn = vn / kk;
            // F_{k+1}: A_0 = H [[1, -w0], [v0, -1]], A_j = H [[0, -w_j], [v_j, 0]]
            let mut fn_ = Mat2::<T>::zero();
            for j in 0..=k {
                let a = if j == 0 {
                    Mat2::new(Complex::new(T::one(), T::zero()), -w[0], v[0], Complex::new(-T::one(), T::zero()))
                } else {
                    Mat2::new(zero, -w[j], v[j], zero)
                };
                fn_ = fn_ + a * f[k - j];
            }
            let fn_ = fn_.scale(hstep * (c / kk));
            let small = fn_.max_abs() <= tol * scale_f && cabs(wn) <= tol * scale_w && cabs(vn) <= tol * scale_w;
            w.push(wn);
            v.push(vn);
            f.push(fn_);
            quiet = if small { quiet + 1 } else { 0 };
            if quiet >= 3 && k >= 6 {
                let mut ws = zero;
                let mut fs = Mat2::zero();
                for i in (0..w.len()).rev() {
                    ws = ws + w[i];
                    fs = fs + f[i];
                }
                return Some((ws, fs));
            }
        }
        None
    }
}

impl TaylorSeries {
    /// Carries `(w, F)` along the straight segment from `from.z` to `to`,
    /// both given in `T`. Only the start point is checked against the curve.
    pub fn advance<T: Real>(
        &self,
        a: f64,
        c: T,
        from: CurvePoint<T>,
        f: Mat2<T>,
        to: Complex<T>,
    ) -> Result<(CurvePoint<T>, Mat2<T>)> {
        let mut steps = 0;
        let (w, f) = self.segment(a, c, from.z, to, from.w, f, &mut steps)?;
        Ok((CurvePoint::new(to, w), f))
    }

    #[allow(clippy::too_many_arguments)]
    fn segment<T: Real>(
        &self,
        a: f64,
        c: T,
        pt: Complex<T>,
        qt: Complex<T>,
        mut w: Complex<T>,
        mut f: Mat2<T>,
        steps: &mut usize,
    ) -> Result<(Complex<T>, Mat2<T>)> {
        let at: T = lit(a);
        let one = T::one();
        let poles = [
            (Complex::new(-one, T::zero()), one),
            (Complex::new(at, T::zero()), one),
            (Complex::new(one, T::zero()), -one),
            (Complex::new(-at, T::zero()), -one),
        ];
        let len_t = cabs(qt - pt);
        let len = to_f64(len_t);
        // exact arc parameter in T so that segment endpoints are hit exactly
        let mut s = T::zero();
        while len > 0.0 && s < len_t {
            let frac = s / len_t;
            let z0 = pt + (qt - pt) * frac;
            let dist = curve::branch_distance(crate::scalar::cplx_f64(z0), a);
            let mut hlen = lit::<T>(self.radius_fraction * dist).min(len_t - s);
            loop {
                *steps += 1;
                if *steps > self.max_steps {
                    return Err(Error::StepLimitExceeded { max_steps: self.max_steps });
                }
                let last = hlen >= len_t - s;
                let z1 = if last { qt } else { pt + (qt - pt) * ((s + hlen) / len_t) };
                if let Some((w1, f1)) = self.step(z0, z1 - z0, w, &f, &poles, c) {
                    check_sheet(&CurvePoint::new(z1, w1), at)?;
                    w = w1;
                    f = f1;
                    s = if last { len_t } else { s + hlen };
                    break;
                }
                hlen = hlen * lit(0.5);
                if to_f64(hlen) < 1e-12 * len {
                    return Err(Error::StepSizeUnderflow { at: to_f64(s) });
                }
            }
        }
        Ok((w, f))
    }
}

impl<T: Real> FrameIntegrator<T> for TaylorSeries {
    fn integrate_path(&self, path: &PathSpec, c: T, f0: Mat2<T>) -> Result<Vec<FrameState<T>>> {
        path.validate()?;
        check_initial_det(&f0)?;
        let fractions = arc_fractions(path);
        let start: CurvePoint<T> = path.start.cast();
        let mut w = start.w;
        let mut f = f0;
        let mut states = vec![FrameState { point: start, f, arc_param: 0.0 }];
        let mut steps = 0;
        for (k, (p, q)) in path.segments().enumerate() {
            let (pt, qt): (Complex<T>, Complex<T>) = (cplx(p), cplx(q));
            (w, f) = self.segment(path.a, c, pt, qt, w, f, &mut steps)?;
            states.push(FrameState { point: CurvePoint::new(qt, w), f, arc_param: fractions[k + 1] });
        }
        Ok(states)
    }
}

/// Residuals of the scalar equations satisfied by the frame entries,
/// `F'' - L F' + c L F = 0` for row 1 and `F'' + L F' + c L F = 0` for row
/// 2, with `L = w'/w`. The derivatives come from `F' = alpha F` and
/// `F'' = alpha' F + alpha F'`. Each residual is divided by `max(1, |F''|)`.
/// Returns the maxima `(row 1, row 2)` over `samples` points along the path.
pub fn scalar_ode_residuals(path: &PathSpec, c: f64, samples: usize, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    if c == 0.0 {
        return Ok((0.0, 0.0));
    }
    let dense = path.resampled(samples.max(2));
    let states = DormandPrince::new(*cfg).integrate_path(&dense, c, Mat2::identity())?;
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for st in &states {
        let (z, w, f) = (st.point.z, st.point.w, st.f);
        let l = log_derivative_unchecked(z, path.a);
        let dw = w * l;
        let alpha = alpha_unchecked(w, c);
        let d1 = alpha * f;
        let d2 = alpha_prime(w, dw, c) * f + alpha * d1;
        let res = |f: Complex64, d1: Complex64, d2: Complex64, sign: f64| {
            (d2 + l * d1 * sign + l * f * c).norm() / d2.norm().max(1.0)
        };
        r1 = r1.max(res(f.m11, d1.m11, d2.m11, -1.0)).max(res(f.m12, d1.m12, d2.m12, -1.0));
        r2 = r2.max(res(f.m21, d1.m21, d2.m21, 1.0)).max(res(f.m22, d1.m22, d2.m22, 1.0));
    }
    Ok((r1, r2))
}

/// Larger of the two [`scalar_ode_residuals`].
pub fn scalar_ode_residual(path: &PathSpec, c: f64, samples: usize) -> Result<f64> {
    let (r1, r2) = scalar_ode_residuals(path, c, samples, &IntegratorConfig::default())?;
    Ok(r1.max(r2))
}
