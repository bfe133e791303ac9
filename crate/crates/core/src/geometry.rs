//! The surface itself: the immersion `f = F e3 F*`, the secondary Gauss map
//! `g`, the unit normal, the hollow-ball model, meshes and symmetry curves,
//! and two identities used as diagnostics, the Small formula and
//! `2Q = S(g) - S(G)`.

use crate::curve::{
    branch_points, half_gamma1, log_derivative, log_derivative_prime_unchecked, log_derivative_unchecked,
    segment_distance, transport_w_with, CurvePoint, PathSpec, BRANCH_CLEARANCE, PATH_LIFT,
};
use crate::error::{Error, Result};
use crate::linalg2c::{Mat2, Mat2C};
use crate::period::PeriodSolution;
use crate::rk::IntegratorConfig;
use crate::scalar::{cabs, cfinite, cplx_f64, lit, to_f64, Dd, Real};
use crate::transport::{alpha_unchecked, DormandPrince, FrameIntegrator, FrameState, TaylorSeries};
use num_complex::{Complex, Complex64};
use num_traits::Float;
use rayon::prelude::*;
use std::collections::HashMap;

/// Samples with `| |g| - 1 | < TOL_SING` are flagged singular.
pub const TOL_SING: f64 = 1e-3;
/// Tolerance on the de Sitter quadric.
pub const TOL_GEOM: f64 = 1e-7;
/// Mesh rays stop once a coordinate of `f` exceeds this; the quadric
/// residual of a point grows like `eps |x|^2`.
pub const X_CAP: f64 = 1e4;
/// `|dg|` or `|dG|` below this makes a point degenerate for the diagnostics.
pub const TOL_DEGENERATE: f64 = 1e-8;
/// Inner radius of the mesh rays.
pub const MESH_R_MIN: f64 = 0.05;

/// A point of Lorentz 4-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkowskiPoint<T: Real = f64> {
    pub x0: T,
    pub x1: T,
    pub x2: T,
    pub x3: T,
}

impl<T: Real> MinkowskiPoint<T> {
    /// Coordinates of the self-adjoint matrix `sum x_k e_k`.
    pub fn from_hermitian(m: &Mat2<T>) -> Self {
        let half: T = lit(0.5);
        Self { x0: (m.m11.re + m.m22.re) * half, x1: m.m12.re, x2: m.m12.im, x3: (m.m11.re - m.m22.re) * half }
    }

    /// `-x0^2 + x1^2 + x2^2 + x3^2`.
    pub fn lorentz_norm_sq(&self) -> T {
        -self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3
    }

    pub fn max_abs(&self) -> T {
        self.x0.abs().max(self.x1.abs()).max(self.x2.abs()).max(self.x3.abs())
    }

    pub fn dist(&self, other: &Self) -> T {
        (self.x0 - other.x0)
            .abs()
            .max((self.x1 - other.x1).abs())
            .max((self.x2 - other.x2).abs())
            .max((self.x3 - other.x3).abs())
    }

    pub fn to_f64(&self) -> MinkowskiPoint {
        MinkowskiPoint { x0: to_f64(self.x0), x1: to_f64(self.x1), x2: to_f64(self.x2), x3: to_f64(self.x3) }
    }
}

/// A point of the hollow ball `e^-pi < |y|^2 < e^pi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HollowBallPoint {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

impl HollowBallPoint {
    pub fn radius_sq(&self) -> f64 {
        self.y1 * self.y1 + self.y2 * self.y2 + self.y3 * self.y3
    }

    pub fn dist(&self, other: &Self) -> f64 {
        ((self.y1 - other.y1).powi(2) + (self.y2 - other.y2).powi(2) + (self.y3 - other.y3).powi(2)).sqrt()
    }

    fn lerp(&self, other: &Self, t: f64) -> Self {
        Self {
            y1: self.y1 + t * (other.y1 - self.y1),
            y2: self.y2 + t * (other.y2 - self.y2),
            y3: self.y3 + t * (other.y3 - self.y3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub param: CurvePoint,
    pub x: MinkowskiPoint,
    pub y: HollowBallPoint,
    /// `|g|`, infinite at poles of `g`.
    pub g_abs: f64,
    pub singular: bool,
}

impl SurfaceSample {
    /// Builds the sample at `p` from a unit-determinant frame.
    pub fn new<T: Real>(p: &CurvePoint<T>, f: &Mat2<T>, c: T) -> Self {
        let x = immerse(f).to_f64();
        let g = secondary_gauss(f, p, c);
        let g_abs = if cfinite(g) { to_f64(cabs(g)) } else { f64::INFINITY };
        Self { param: p.to_f64(), x, y: hollow_ball(&x), g_abs, singular: is_singular(g_abs) }
    }
}

/// `| -x0^2 + x1^2 + x2^2 + x3^2 - 1 |`, evaluated in double-double so that
/// only the rounding of the coordinates themselves contributes.
pub fn quadric_residual(x: &MinkowskiPoint) -> f64 {
    let d = MinkowskiPoint::<Dd> { x0: Dd::from(x.x0), x1: Dd::from(x.x1), x2: Dd::from(x.x2), x3: Dd::from(x.x3) };
    to_f64((d.lorentz_norm_sq() - Dd::from(1.0)).abs())
}

pub fn is_singular(g_abs: f64) -> bool {
    (g_abs - 1.0).abs() < TOL_SING
}

/// `f = F e3 F*` read off as a point of Lorentz 4-space. For `det F = 1`
/// the result lies on the quadric `-x0^2 + x1^2 + x2^2 + x3^2 = 1`.
pub fn immerse<T: Real>(f: &Mat2<T>) -> MinkowskiPoint<T> {
    let x11 = f.m11.norm_sqr() - f.m12.norm_sqr();
    let x22 = f.m21.norm_sqr() - f.m22.norm_sqr();
    let x12 = f.m11 * f.m21.conj() - f.m12 * f.m22.conj();
    let zero = Complex::new(T::zero(), T::zero());
    MinkowskiPoint::from_hermitian(&Mat2::new(Complex::new(x11, T::zero()), x12, zero, Complex::new(x22, T::zero())))
}

fn infinity<T: Real>() -> Complex<T> {
    Complex::new(T::infinity(), T::zero())
}

fn ratio<T: Real>(num: Complex<T>, den: Complex<T>) -> Complex<T> {
    if den.re == T::zero() && den.im == T::zero() {
        return infinity();
    }
    let g = -num / den;
    if g.re.is_finite() && g.im.is_finite() {
        g
    } else {
        infinity()
    }
}

/// `g = -dF12/dF11` with `dF = alpha F`. Returns `inf` at poles of `g`.
pub fn secondary_gauss<T: Real>(f: &Mat2<T>, p: &CurvePoint<T>, c: T) -> Complex<T> {
    let al = alpha_unchecked(p.w, c);
    ratio(al.m11 * f.m12 + al.m12 * f.m22, al.m11 * f.m11 + al.m12 * f.m21)
}

/// The same map from the second row, `-dF22/dF21`.
pub fn secondary_gauss_row2<T: Real>(f: &Mat2<T>, p: &CurvePoint<T>, c: T) -> Complex<T> {
    let al = alpha_unchecked(p.w, c);
    ratio(al.m21 * f.m12 + al.m22 * f.m22, al.m21 * f.m11 + al.m22 * f.m21)
}

/// `N = (F nu)(F nu)* / (|g|^2 - 1)` with `nu = [[1, g], [conj g, 1]]`,
/// evaluated as `F [[k, 2g/(|g|^2-1)], [conj, k]] F*`, `k = (|g|^2+1)/(|g|^2-1)`,
/// which has the limit `F F*` at `g = inf`.
pub fn unit_normal<T: Real>(f: &Mat2<T>, g: Complex<T>) -> Result<MinkowskiPoint<T>> {
    let ga = to_f64(cabs(g));
    if !((ga - 1.0).abs() >= TOL_SING) {
        return Err(Error::SingularPoint);
    }
    let one = T::one();
    let two: T = lit(2.0);
    let (k, off) = if g.re.is_finite() && g.im.is_finite() {
        let n2 = g.norm_sqr();
        ((n2 + one) / (n2 - one), g * (two / (n2 - one)))
    } else {
        (one, Complex::new(T::zero(), T::zero()))
    };
    let k = Complex::new(k, T::zero());
    let m = Mat2::new(k, off, off.conj(), k);
    Ok(MinkowskiPoint::from_hermitian(&(*f * m * f.adjoint())))
}

/// `y_k = e^{atan x0} (1 + x0^2)^{-1/2} x_k`.
pub fn hollow_ball(x: &MinkowskiPoint) -> HollowBallPoint {
    let s = x.x0.atan().exp() / (1.0 + x.x0 * x.x0).sqrt();
    HollowBallPoint { y1: s * x.x1, y2: s * x.x2, y3: s * x.x3 }
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A path from the base point `(0, 1)` to `p`: a short route to `p.z` from
/// the origin, preceded by half of `gamma_1` when `p` lies on the sheet of
/// `(0, -1)`.
pub fn route_to(a: f64, p: &CurvePoint, cfg: &IntegratorConfig) -> Result<PathSpec> {
    let z = p.z;
    let mut candidates = vec![vec![c64(0.0, 0.0), z]];
    for h in [PATH_LIFT, -PATH_LIFT, 2.0 * PATH_LIFT, -2.0 * PATH_LIFT] {
        candidates.push(vec![c64(0.0, 0.0), c64(0.0, h), c64(z.re, h), z]);
    }
    let base = CurvePoint::origin(1);
    let mut last_err = None;
    for wps in candidates {
        let path = match PathSpec::new(base, wps.clone(), false, a) {
            Ok(path) => path,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let end = transport_w_with(&path, cfg)?;
        let tol = 1e-6 * (1.0 + p.w.norm());
        if (end.w - p.w).norm() <= tol {
            return Ok(path);
        }
        if (end.w + p.w).norm() <= tol {
            let mut full = half_gamma1(a);
            full.extend(wps.into_iter().skip(1));
            return PathSpec::new(base, full, false, a);
        }
        return Err(Error::Continuation { z: z.to_string(), residual: p.sheet_residual(a) });
    }
    Err(last_err.unwrap_or_else(|| Error::InvalidInput("no route to point".into())))
}

/// Frame at `p` started from the solved gauge at the base point, normalised
/// to unit determinant.
pub fn frame_at(sol: &PeriodSolution, p: &CurvePoint, cfg: &IntegratorConfig) -> Result<FrameState> {
    let path = route_to(sol.a, p, cfg)?;
    let mut st = DormandPrince::new(*cfg).integrate_frame(&path, sol.c, sol.initial_frame())?;
    st.f = st.f.normalized();
    Ok(st)
}

/// Double-double frame at `p`.
pub fn frame_at_dd(sol: &PeriodSolution, p: &CurvePoint) -> Result<FrameState<Dd>> {
    let path = route_to(sol.a, p, &IntegratorConfig::default())?;
    TaylorSeries::for_type::<Dd>().integrate_frame(&path, sol.c_extended, sol.p_extended)
}

/// Surface sample at `p`.
pub fn sample_at(sol: &PeriodSolution, p: &CurvePoint) -> Result<SurfaceSample> {
    let st = frame_at_dd(sol, p)?;
    Ok(SurfaceSample::new(&st.point, &st.f, sol.c_extended))
}

/// Mesh layout. Each sheet is covered by `nv` rays from `z = 0` at angles
/// `2 pi (j + 1/2) / nv`, sampled at `nu` radii spaced geometrically between
/// `r_min` and `r_max`. Rays stop short of the branch disks and once `f`
/// leaves the `x_cap` box. Frames are carried in double-double arithmetic:
/// far out `|F|^2` exceeds `|f|` by orders of magnitude and `f64` frames
/// lose the quadric.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshOptions {
    pub nu: usize,
    pub nv: usize,
    pub r_min: f64,
    /// Outer radius; by default chosen from the end exponent so that the
    /// rays reach roughly `x_cap`.
    pub r_max: Option<f64>,
    pub x_cap: f64,
    /// Processing order of the `2 nv` rays.
    pub ray_order: Option<Vec<usize>>,
}

impl MeshOptions {
    pub fn new(nu: usize, nv: usize) -> Self {
        Self { nu, nv, r_min: MESH_R_MIN, r_max: None, x_cap: X_CAP, ray_order: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub samples: Vec<SurfaceSample>,
    /// Frames, parallel to `samples`.
    pub frames: Vec<Mat2<Dd>>,
    /// Faces clear of the singular set.
    pub triangles: Vec<[usize; 3]>,
    /// Every face whose three vertices were sampled.
    pub all_triangles: Vec<[usize; 3]>,
    /// Grid nodes that were not sampled.
    pub holes: usize,
}

fn default_r_max(sol: &PeriodSolution) -> f64 {
    // |f| grows roughly like |z|^(1 + Re m) at the ends
    let reach = 4.0 * sol.a * X_CAP.powf(1.0 / (1.0 + sol.ends.m.re));
    reach.clamp(3.0 * sol.a, 1e3)
}

type RayNodes = Vec<Option<(CurvePoint<Dd>, Mat2<Dd>)>>;

fn integrate_ray(
    sol: &PeriodSolution,
    centre: &FrameState<Dd>,
    dir: Complex64,
    radii: &[f64],
    opts: &MeshOptions,
) -> RayNodes {
    let a = sol.a;
    let mut wps = vec![c64(0.0, 0.0)];
    for &r in radii {
        let q = dir * r;
        let last = *wps.last().unwrap();
        if branch_points(a).iter().any(|b| segment_distance(last, q, *b) < BRANCH_CLEARANCE) {
            break;
        }
        wps.push(q);
    }
    let start = CurvePoint::new(c64(0.0, 0.0), cplx_f64(centre.point.w));
    let ts = TaylorSeries::for_type::<Dd>();
    let mut k = wps.len() - 1;
    let mut out: RayNodes = vec![None; radii.len()];
    while k > 0 {
        let path = PathSpec::new(start, wps[..=k].to_vec(), false, a);
        if let Ok(states) = path.and_then(|p| ts.integrate_path(&p, sol.c_extended, centre.f)) {
            for (i, st) in states.iter().skip(1).enumerate() {
                let x = immerse(&st.f).to_f64();
                if !(x.max_abs() <= opts.x_cap) {
                    break;
                }
                out[i] = Some((st.point, st.f));
            }
            break;
        }
        k /= 2;
    }
    out
}

/// Samples the surface on a polar grid over both sheets and triangulates it.
pub fn build_mesh(sol: &PeriodSolution, nu: usize, nv: usize) -> Result<Mesh> {
    build_mesh_with(sol, &MeshOptions::new(nu, nv))
}

pub fn build_mesh_with(sol: &PeriodSolution, opts: &MeshOptions) -> Result<Mesh> {
    let (nu, nv, a) = (opts.nu, opts.nv, sol.a);
    if nu < 2 || nv < 4 || nv % 2 == 1 {
        return Err(Error::InvalidInput(format!("mesh needs nu >= 2 and even nv >= 4, got {nu} x {nv}")));
    }
    let r_max = opts.r_max.unwrap_or_else(|| default_r_max(sol));
    if !(opts.r_min > 0.0 && opts.r_min < 1.0 - BRANCH_CLEARANCE && r_max > opts.r_min) {
        return Err(Error::InvalidInput(format!("bad mesh radii {} .. {r_max}", opts.r_min)));
    }
    let radii: Vec<f64> = (0..nu).map(|i| opts.r_min * (r_max / opts.r_min).powf(i as f64 / (nu - 1) as f64)).collect();

    // centres of the two sheets
    let base = FrameState { point: CurvePoint::origin(1), f: sol.p_extended, arc_param: 0.0 };
    let half = PathSpec::new(CurvePoint::origin(1), half_gamma1(a), false, a)?;
    let other = TaylorSeries::for_type::<Dd>().integrate_frame(&half, sol.c_extended, sol.p_extended)?;
    let centres = [base, other];

    let order: Vec<usize> = match &opts.ray_order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..2 * nv).collect::<Vec<_>>() {
                return Err(Error::InvalidInput("ray_order must permute 0..2nv".into()));
            }
            o.clone()
        }
        None => (0..2 * nv).collect(),
    };
    let mut rays: Vec<(usize, RayNodes)> = order
        .par_iter()
        .map(|&id| {
            let (s, j) = (id / nv, id % nv);
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / nv as f64;
            (id, integrate_ray(sol, &centres[s], Complex64::from_polar(1.0, theta), &radii, opts))
        })
        .collect();
    rays.sort_by_key(|(id, _)| *id);

    let mut samples = Vec::new();
    let mut frames = Vec::new();
    let mut push = |p: CurvePoint<Dd>, f: &Mat2<Dd>| {
        samples.push(SurfaceSample::new(&p, f, sol.c_extended));
        frames.push(*f);
        samples.len() - 1
    };
    let centre_idx = [push(centres[0].point, &centres[0].f), push(centres[1].point, &centres[1].f)];
    let mut node = vec![None; 2 * nv * nu];
    let mut holes = 0;
    for (id, nodes) in &rays {
        for (i, n) in nodes.iter().enumerate() {
            match n {
                Some((p, f)) => node[id * nu + i] = Some(push(*p, f)),
                None => holes += 1,
            }
        }
    }

    let idx = |s: usize, j: usize, i: usize| node[(s * nv + j) * nu + i];
    let class = |r: f64| {
        if r < 1.0 {
            0
        } else if r < a {
            1
        } else {
            2
        }
    };
    let mut triangles = Vec::new();
    let mut all_triangles = Vec::new();
    let mut tri = |t: [Option<usize>; 3]| {
        let [Some(p), Some(q), Some(r)] = t else { return };
        all_triangles.push([p, q, r]);
        let side = |k: usize| samples[k].g_abs > 1.0;
        if [p, q, r].iter().all(|&k| !samples[k].singular) && side(p) == side(q) && side(q) == side(r) {
            triangles.push([p, q, r]);
        }
    };
    for (s, &centre) in centre_idx.iter().enumerate() {
        for j in 0..nv {
            let j2 = (j + 1) % nv;
            // between these rays lies the real axis, cut along [1, a] or [-a, -1]
            let crossing = j == nv - 1 || j == nv / 2 - 1;
            tri([Some(centre), idx(s, j, 0), idx(s, j2, 0)]);
            for i in 0..nu - 1 {
                let s2 = if crossing {
                    let (c0, c1) = (class(radii[i]), class(radii[i + 1]));
                    if c0 != c1 {
                        continue;
                    }
                    if c0 == 1 {
                        1 - s
                    } else {
                        s
                    }
                } else {
                    s
                };
                let (p, q, r, t) = (idx(s, j, i), idx(s, j, i + 1), idx(s2, j2, i + 1), idx(s2, j2, i));
                tri([p, q, r]);
                tri([p, r, t]);
            }
        }
    }
    Ok(Mesh { samples, frames, triangles, all_triangles, holes })
}

/// Zero set of a per-sample function, by linear interpolation along the edges
/// of `mesh.all_triangles`, chained into polylines.
pub fn level_curves(mesh: &Mesh, values: &[f64]) -> Vec<Vec<HollowBallPoint>> {
    let mut points: HashMap<(usize, usize), HollowBallPoint> = HashMap::new();
    let mut segments: Vec<[(usize, usize); 2]> = Vec::new();
    for t in &mesh.all_triangles {
        let mut cut = Vec::with_capacity(2);
        for (p, q) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let (vp, vq) = (values[p], values[q]);
            if !(vp.is_finite() && vq.is_finite()) || (vp >= 0.0) == (vq >= 0.0) {
                continue;
            }
            let key = (p.min(q), p.max(q));
            let (lo, hi) = (key.0, key.1);
            let s = values[lo] / (values[lo] - values[hi]);
            points.entry(key).or_insert_with(|| mesh.samples[lo].y.lerp(&mesh.samples[hi].y, s));
            cut.push(key);
        }
        if cut.len() == 2 {
            segments.push([cut[0], cut[1]]);
        }
    }
    let mut incident: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (k, s) in segments.iter().enumerate() {
        for e in s {
            incident.entry(*e).or_default().push(k);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut chain = std::collections::VecDeque::from(vec![segments[start][0], segments[start][1]]);
        for forward in [true, false] {
            loop {
                let end = if forward { *chain.back().unwrap() } else { *chain.front().unwrap() };
                let next = incident[&end].iter().copied().find(|&k| !used[k]);
                let Some(k) = next else { break };
                used[k] = true;
                let other = if segments[k][0] == end { segments[k][1] } else { segments[k][0] };
                if forward {
                    chain.push_back(other);
                } else {
                    chain.push_front(other);
                }
            }
        }
        curves.push(chain.into_iter().map(|e| points[&e]).collect());
    }
    curves
}

/// Curves where the surface meets the plane `y2 = 0` (equivalently `x2 = 0`).
pub fn symmetry_curves(mesh: &Mesh) -> Vec<Vec<HollowBallPoint>> {
    let values: Vec<f64> = mesh.samples.iter().map(|s| s.y.y2).collect();
    level_curves(mesh, &values)
}

/// Symmetry curves of a `samples x samples` mesh (`nv` rounded up to even).
pub fn symmetry_curves_for(sol: &PeriodSolution, samples: usize) -> Result<Vec<Vec<HollowBallPoint>>> {
    Ok(symmetry_curves(&build_mesh(sol, samples, samples + samples % 2)?))
}

/// The singular set `|g| = 1` traced on the mesh.
pub fn singular_curves(mesh: &Mesh) -> Vec<Vec<HollowBallPoint>> {
    let values: Vec<f64> = mesh
        .samples
        .iter()
        .map(|s| if s.g_abs.is_finite() { (s.g_abs * s.g_abs - 1.0) / (s.g_abs * s.g_abs + 1.0) } else { 1.0 })
        .collect();
    level_curves(mesh, &values)
}

/// `w'`, `w''`, `g`, `g'`, `g''` at `p`, analytically from `dF = alpha F`:
/// with `D = F11 - w F21`, `g' = w' / D^2` and
/// `g'' = w'' / D^2 + 2 w'^2 F21 / D^3`.
fn gauss_jet(f: &Mat2C, p: &CurvePoint, a: f64) -> Result<[Complex64; 5]> {
    let (z, w) = (p.z, p.w);
    let l = log_derivative(z, a)?;
    let dw = w * l;
    let d2w = w * (l * l + log_derivative_prime_unchecked(z, a));
    let d = f.m11 - w * f.m21;
    let n = f.m12 - w * f.m22;
    if d.norm() == 0.0 {
        return Err(Error::DegeneratePoint("g has a pole".into()));
    }
    let dg = dw / (d * d);
    let d2g = d2w / (d * d) + dw * dw * f.m21 * 2.0 / (d * d * d);
    if dw.norm() < TOL_DEGENERATE || dg.norm() < TOL_DEGENERATE || !dg.is_finite() {
        return Err(Error::DegeneratePoint(format!("|dG| = {:.3e}, |dg| = {:.3e}", dw.norm(), dg.norm())));
    }
    Ok([dw, d2w, -n / d, dg, d2g])
}

/// Rebuilds `F` from `G = w` and `g` by the Small formula
/// `F = [[G a' - a, G b' - b], [a', b']]`, `' = d/dG`, `a = sqrt(dG/dg)`,
/// `b = -g a`, and returns the entrywise distance to `f`, minimised over the
/// sign of the square root.
pub fn small_formula_residual(f: &Mat2C, p: &CurvePoint, a: f64) -> Result<f64> {
    let [dw, d2w, g, dg, d2g] = gauss_jet(f, p, a)?;
    let w = p.w;
    let sa = (dw / dg).sqrt();
    let dsa = sa * 0.5 * (d2w / dw - d2g / dg);
    let sb = -g * sa;
    let dsb = -dg * sa - g * dsa;
    let (da, db) = (dsa / dw, dsb / dw);
    let small = Mat2::new(w * da - sa, w * db - sb, da, db);
    Ok(small.dist(f).min((-small).dist(f)))
}

pub fn small_formula_check(sol: &PeriodSolution, p: &CurvePoint) -> Result<f64> {
    let st = frame_at(sol, p, &IntegratorConfig::default())?;
    small_formula_residual(&st.f, &st.point, sol.a)
}

/// Schwarzian `v'''/v' - 3/2 (v''/v')^2` from values at `z + k h`,
/// `k = -2..=2`, by five-point central differences.
pub fn schwarzian_fd<T: Real>(v: &[Complex<T>; 5], h: T) -> Complex<T> {
    let k = |x: f64| lit::<T>(x);
    let d1 = (v[0] - v[1] * k(8.0) + v[3] * k(8.0) - v[4]) / (h * k(12.0));
    let d2 = (-v[0] + v[1] * k(16.0) - v[2] * k(30.0) + v[3] * k(16.0) - v[4]) / (h * h * k(12.0));
    let d3 = (-v[0] + v[1] * k(2.0) - v[3] * k(2.0) + v[4]) / (h * h * h * k(2.0));
    let r = d2 / d1;
    d3 / d1 - r * r * k(1.5)
}

/// `schwarzian_fd` of `v` or of `1/v`, whichever is bounded by one at the
/// centre. The two agree exactly; the bounded one has the smaller
/// truncation error.
pub fn schwarzian_bounded<T: Real>(v: &[Complex<T>; 5], h: T) -> Complex<T> {
    if v[2].norm_sqr() > T::one() {
        schwarzian_fd(&v.map(|x| x.inv()), h)
    } else {
        schwarzian_fd(v, h)
    }
}

pub type Stencil = [Complex<Dd>; 5];

/// Values of `g` and `w` on the stencil `p + k h`, `k = -2..=2`, along the
/// real direction, in double-double arithmetic.
pub fn gauss_stencil(sol: &PeriodSolution, p: &CurvePoint, h: f64) -> Result<(Stencil, Stencil)> {
    let st = frame_at_dd(sol, p)?;
    gauss_jet(&st.f.normalized().to_f64(), &st.point.to_f64(), sol.a)?;
    let ts = TaylorSeries::for_type::<Dd>();
    let hd: Dd = lit(h);
    let c = sol.c_extended;
    let mut g = [Complex::new(Dd::from(0.0), Dd::from(0.0)); 5];
    let mut w = g;
    for (slot, k) in (-2i32..=2).enumerate() {
        let (pt, f) = if k == 0 {
            (st.point, st.f)
        } else {
            let to = st.point.z + Complex::new(hd * lit(f64::from(k)), Dd::from(0.0));
            ts.advance(sol.a, c, st.point, st.f, to)?
        };
        g[slot] = secondary_gauss(&f, &pt, c);
        w[slot] = pt.w;
    }
    Ok((g, w))
}

/// `|2 Q/dz^2 - (S(g) - S(G))|` at `p` with `Q = c (w'/w) dz^2`, the
/// Schwarzians taken by finite differences with step `h`.
pub fn schwarzian_check(sol: &PeriodSolution, p: &CurvePoint, h: f64) -> Result<f64> {
    let (g, w) = gauss_stencil(sol, p, h)?;
    if g.iter().any(|v| !v.re.is_finite()) {
        return Err(Error::DegeneratePoint("g has a pole on the stencil".into()));
    }
    let hd: Dd = lit(h);
    let z = Complex::new(lit::<Dd>(p.z.re), lit::<Dd>(p.z.im));
    let q = log_derivative_unchecked(z, lit::<Dd>(sol.a)) * sol.c_extended;
    let res = q * lit::<Dd>(2.0) - (schwarzian_bounded(&g, hd) - schwarzian_fd(&w, hd));
    Ok(to_f64(cabs(res)))
}

/// `max_j |f(F Phi_j) - f(F)|` over the gauged generator monodromies,
/// evaluated in double-double arithmetic.
pub fn monodromy_translation_residual(sol: &PeriodSolution, fd: &Mat2<Dd>) -> f64 {
    let x = immerse(fd);
    sol.gauged.iter().map(|(_, phi)| to_f64(immerse(&(*fd * *phi)).dist(&x))).fold(0.0, f64::max)
}

/// The secondary Gauss map of `F Phi` is `Phi^{-1} * g`. For `Phi` in
/// SU(1,1) this satisfies `|g~|^2 - 1 = (|g|^2 - 1) / |Phi11 - Phi21 g|^2`,
/// so the disk, its complement and the unit circle are preserved. Returns
/// the largest relative deviation from that identity over the gauged
/// generators, with `g~` computed directly from `F Phi`.
pub fn disk_invariance_residual(sol: &PeriodSolution, fd: &Mat2<Dd>, pd: &CurvePoint<Dd>) -> Result<f64> {
    let c = sol.c_extended;
    let g = secondary_gauss(fd, pd, c);
    if !g.re.is_finite() {
        return Err(Error::DegeneratePoint("g has a pole".into()));
    }
    let one = Dd::from(1.0);
    let mut worst = 0.0f64;
    for (_, phi) in sol.gauged.iter() {
        let gt = secondary_gauss(&(*fd * *phi), pd, c);
        if !gt.re.is_finite() {
            return Err(Error::DegeneratePoint("translated g has a pole".into()));
        }
        let lhs = gt.norm_sqr() - one;
        let rhs = (g.norm_sqr() - one) / (phi.m11 - phi.m21 * g).norm_sqr();
        let scale = lhs.abs().max(rhs.abs()).max(Dd::from(1e-300));
        worst = worst.max(to_f64((lhs - rhs).abs() / scale));
    }
    Ok(worst)
}
