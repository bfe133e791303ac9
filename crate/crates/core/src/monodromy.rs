//! Generator monodromies from the two half-path frames, their structure,
//! and the period functions `f1`, `f2`.
//!
//! The reflections `(z, w) -> (conj z, conj w)` and `(z, w) -> (-z, 1/w)`
//! act on the frame by conjugation and a swap of rows and columns, so the
//! monodromy of each generator loop is a short product of images of `F`
//! at the ends of the two half-paths `c1` and `c2`.

use crate::curve::{canonical_paths, CanonicalPaths, PathSpec};
use crate::error::{Error, Result};
use crate::linalg2c::{eigenvalues, Mat2};
use crate::rk::IntegratorConfig;
use crate::scalar::{cabs, lit, to_f64, Real};
use crate::transport::{DormandPrince, FrameIntegrator};
use num_complex::Complex;

/// Tolerance on the structural forms of the generator monodromies.
pub const TOL_FORM: f64 = 1e-7;
/// Tolerance on the imaginary part of the period functions.
pub const TOL_PERIOD_IMAG: f64 = 1e-8;

/// Frames at `c1(1)` and `c2(1)` for the identity initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPathFrames<T: Real = f64> {
    pub f_c1: Mat2<T>,
    pub f_c2: Mat2<T>,
    pub a: f64,
    pub c: T,
}

/// Monodromies of `gamma1`, `gamma2`, `gamma3` for the identity initial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyTriple<T: Real = f64> {
    pub phi1: Mat2<T>,
    pub phi2: Mat2<T>,
    pub phi3: Mat2<T>,
}

impl<T: Real> MonodromyTriple<T> {
    pub fn get(&self, j: usize) -> &Mat2<T> {
        match j {
            1 => &self.phi1,
            2 => &self.phi2,
            3 => &self.phi3,
            _ => panic!("generator index must be 1, 2 or 3"),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Mat2<T>)> {
        [(1, &self.phi1), (2, &self.phi2), (3, &self.phi3)].into_iter()
    }

    /// `P^{-1} Phi_j P` for all three.
    pub fn conjugate_by(&self, p: &Mat2<T>) -> Result<Self> {
        Ok(Self {
            phi1: self.phi1.conjugate_by(p)?,
            phi2: self.phi2.conjugate_by(p)?,
            phi3: self.phi3.conjugate_by(p)?,
        })
    }

    pub fn to_f64(&self) -> MonodromyTriple<f64> {
        MonodromyTriple { phi1: self.phi1.to_f64(), phi2: self.phi2.to_f64(), phi3: self.phi3.to_f64() }
    }
}

/// Integrates the identity frame along `c1` and `c2`.
pub fn half_path_frames<T: Real, I: FrameIntegrator<T>>(
    integrator: &I,
    paths: &CanonicalPaths,
    c: T,
) -> Result<HalfPathFrames<T>> {
    Ok(HalfPathFrames {
        f_c1: integrator.holonomy(&paths.c1, c)?,
        f_c2: integrator.holonomy(&paths.c2, c)?,
        a: paths.a,
        c,
    })
}

/// [`half_path_frames`] with the default paths and adaptive `f64` integration.
pub fn half_path_frames_f64(a: f64, c: f64, cfg: &IntegratorConfig) -> Result<HalfPathFrames> {
    let paths = canonical_paths(a)?;
    half_path_frames(&DormandPrince::new(*cfg), &paths, c)
}

/// The three symmetry products.
pub fn assemble_monodromies<T: Real>(h: &HalfPathFrames<T>) -> MonodromyTriple<T> {
    let (a1, b1, c1, d1) = (h.f_c1.m11, h.f_c1.m12, h.f_c1.m21, h.f_c1.m22);
    let (a2, b2, c2, d2) = (h.f_c2.m11, h.f_c2.m12, h.f_c2.m21, h.f_c2.m22);
    let phi1 = Mat2::new(a1.conj(), -c1.conj(), -b1.conj(), d1.conj())
        * Mat2::new(d1, -c1, -b1, a1)
        * Mat2::new(d1.conj(), b1.conj(), c1.conj(), a1.conj())
        * h.f_c1;
    let phi2 = Mat2::new(d2.conj(), -b2.conj(), -c2.conj(), a2.conj()) * h.f_c2;
    let phi3 = Mat2::new(a2.conj(), -c2.conj(), -b2.conj(), d2.conj()) * Mat2::new(d2, c2, b2, a2);
    MonodromyTriple { phi1, phi2, phi3 }
}

/// Frame at the end of a closed loop started at the identity.
pub fn direct_loop_holonomy<T: Real, I: FrameIntegrator<T>>(integrator: &I, lp: &PathSpec, c: T) -> Result<Mat2<T>> {
    if !lp.closed {
        return Err(Error::InvalidInput("holonomy needs a closed loop".into()));
    }
    integrator.holonomy(lp, c)
}

/// Direct integration of all three generator loops.
pub fn direct_monodromies<T: Real, I: FrameIntegrator<T>>(
    integrator: &I,
    paths: &CanonicalPaths,
    c: T,
) -> Result<MonodromyTriple<T>> {
    Ok(MonodromyTriple {
        phi1: direct_loop_holonomy(integrator, &paths.gamma1, c)?,
        phi2: direct_loop_holonomy(integrator, &paths.gamma2, c)?,
        phi3: direct_loop_holonomy(integrator, &paths.gamma3, c)?,
    })
}

fn ratio<T: Real>(num: Complex<T>, den: Complex<T>, scale: T, which: u8) -> Result<T> {
    if !(cabs(den) > scale * lit::<T>(1e-14)) {
        return Err(Error::DegenerateDenominator { which });
    }
    let q = num / den;
    let imag = to_f64(q.im.abs());
    if !(imag < TOL_PERIOD_IMAG) {
        return Err(Error::NonRealPeriod { which, imag });
    }
    Ok(q.re)
}

/// `f1` and `f2` from the identity-initial-condition half-path frames.
pub fn period_functions<T: Real>(h: &HalfPathFrames<T>) -> Result<(T, T)> {
    let (a1, b1, c1, d1) = (h.f_c1.m11, h.f_c1.m12, h.f_c1.m21, h.f_c1.m22);
    let (a2, b2, c2, d2) = (h.f_c2.m11, h.f_c2.m12, h.f_c2.m21, h.f_c2.m22);
    let s1 = h.f_c1.max_abs();
    let s2 = h.f_c2.max_abs();
    let n1 = a1.conj() * c1 + a1 * c1.conj() + b1.conj() * d1 + b1 * d1.conj();
    let e1 = a1.conj() * d1 + a1 * d1.conj() + b1.conj() * c1 + b1 * c1.conj();
    let n2 = a2.conj() * c2 - a2 * c2.conj() + b2.conj() * d2 - b2 * d2.conj();
    let e2 = a2.conj() * d2 - a2 * d2.conj() + b2.conj() * c2 - b2 * c2.conj();
    let f1 = -ratio(n1, e1, s1 * s1, 1)?;
    let f2 = -ratio(n2, e2, s2 * s2, 2)?;
    Ok((f1, f2))
}

/// `f1`, `f2` at `(a, c)` with the default paths and `f64` integration.
pub fn period_functions_at(a: f64, c: f64, cfg: &IntegratorConfig) -> Result<(f64, f64)> {
    period_functions(&half_path_frames_f64(a, c, cfg)?)
}

/// Deviation of `Phi2` from `[[psi11, i psi12], [i psi21, conj psi11]]`
/// with `psi12`, `psi21` real.
pub fn lemma22_deviation<T: Real>(phi2: &Mat2<T>) -> T {
    [phi2.m12.re.abs(), phi2.m21.re.abs(), cabs(phi2.m22 - phi2.m11.conj())].into_iter().fold(T::zero(), T::max)
}

/// Deviation of `Phi3` from `[[conj psi11, i psi21], [i psi12, psi11]]`,
/// the pattern dictated by `Phi2`.
pub fn phi3_pattern_deviation<T: Real>(phi2: &Mat2<T>, phi3: &Mat2<T>) -> T {
    [cabs(phi3.m11 - phi2.m11.conj()), cabs(phi3.m12 - phi2.m21), cabs(phi3.m21 - phi2.m12), cabs(phi3.m22 - phi2.m11)]
        .into_iter()
        .fold(T::zero(), T::max)
}

/// Deviation of `Phi1` from `[[phi11, phi12], [-conj phi12, phi22]]` with
/// `phi11`, `phi22` real.
pub fn lemma24_deviation<T: Real>(phi1: &Mat2<T>) -> T {
    [phi1.m11.im.abs(), phi1.m22.im.abs(), cabs(phi1.m21 + phi1.m12.conj())].into_iter().fold(T::zero(), T::max)
}

/// Largest of the three structural deviations.
pub fn structure_deviation<T: Real>(m: &MonodromyTriple<T>) -> T {
    lemma24_deviation(&m.phi1).max(lemma22_deviation(&m.phi2)).max(phi3_pattern_deviation(&m.phi2, &m.phi3))
}

/// Largest `|det Phi_j - 1|`.
pub fn det_deviation<T: Real>(m: &MonodromyTriple<T>) -> T {
    let one = Complex::new(T::one(), T::zero());
    m.iter().map(|(_, p)| cabs(p.det() - one)).fold(T::zero(), T::max)
}

/// Largest entrywise difference between two triples.
pub fn triple_distance<T: Real>(x: &MonodromyTriple<T>, y: &MonodromyTriple<T>) -> T {
    x.iter().zip(y.iter()).map(|((_, p), (_, q))| p.dist(q)).fold(T::zero(), T::max)
}

/// Eigenvalue discrepancy between the holonomy of `lp` with initial frame
/// identity and with initial frame `b`. The second holonomy is
/// `b^{-1} Phi b`, so traces agree; comparing the eigenvalue pairs also
/// catches a wrong determinant.
pub fn lift_independence<T: Real, I: FrameIntegrator<T>>(
    integrator: &I,
    lp: &PathSpec,
    c: T,
    b: &Mat2<T>,
) -> Result<f64> {
    let phi = integrator.holonomy(lp, c)?;
    let fb = integrator.integrate_frame(lp, c, *b)?.f;
    let phi_b = b.inverse()? * fb;
    let (p1, p2) = eigenvalues(&phi);
    let (q1, q2) = eigenvalues(&phi_b);
    let scale = cabs(p1).max(T::one());
    Ok(to_f64(cabs(p1 - q1).max(cabs(p2 - q2)) / scale))
}
