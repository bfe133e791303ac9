//! 2x2 complex matrices, SU(1,1) membership and conjugacy classes.

use crate::error::{Error, Result};
use crate::scalar::{cabs, cfinite, lit, to_f64, Real};
use num_complex::{Complex, Complex64};
use std::ops::{Add, Mul, Neg, Sub};

/// Threshold on [`su11_distance`] for accepting a matrix as an SU(1,1) element.
pub const TOL_SU11: f64 = 1e-6;
/// Half-width of the band `| |trace| - 2 |` classified as parabolic.
pub const TOL_CLASS: f64 = 1e-6;
/// Determinant tolerance for frames and monodromies.
pub const TOL_DET: f64 = 1e-9;

/// A 2x2 complex matrix `[[m11, m12], [m21, m22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T: Real = f64> {
    pub m11: Complex<T>,
    pub m12: Complex<T>,
    pub m21: Complex<T>,
    pub m22: Complex<T>,
}

pub type Mat2C = Mat2<f64>;

impl<T: Real> Mat2<T> {
    pub fn new(m11: Complex<T>, m12: Complex<T>, m21: Complex<T>, m22: Complex<T>) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self::new(o, z, z, o)
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn diag(d1: Complex<T>, d2: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(d1, z, z, d2)
    }

    /// Matrix with real entries.
    pub fn real(m11: T, m12: T, m21: T, m22: T) -> Self {
        let r = |x| Complex::new(x, T::zero());
        Self::new(r(m11), r(m12), r(m21), r(m22))
    }

    pub fn entries(&self) -> [Complex<T>; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn from_entries(e: [Complex<T>; 4]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }

    pub fn det(&self) -> Complex<T> {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> Complex<T> {
        self.m11 + self.m22
    }

    /// Adjugate, equal to the inverse when `det = 1`.
    pub fn adjugate(&self) -> Self {
        Self::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.norm_sqr() == T::zero() || !cfinite(d) {
            return Err(Error::InvalidInput("singular matrix".into()));
        }
        Ok(self.adjugate().scale(d.inv()))
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self::new(self.m11.conj(), self.m12.conj(), self.m21.conj(), self.m22.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Conjugate transpose `M*`.
    pub fn adjoint(&self) -> Self {
        self.conj().transpose()
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    /// `P^{-1} M P`.
    pub fn conjugate_by(&self, p: &Self) -> Result<Self> {
        Ok(p.inverse()? * *self * *p)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.entries().iter().map(|z| cabs(*z)).fold(T::zero(), T::max)
    }

    /// Largest entrywise difference.
    pub fn dist(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    /// Scales to unit determinant using the principal square root of `det`.
    pub fn normalized(&self) -> Self {
        let s = csqrt(self.det());
        self.scale(s.inv())
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| cfinite(*z))
    }

    pub fn to_f64(&self) -> Mat2C {
        Mat2C::from_entries(self.entries().map(crate::scalar::cplx_f64))
    }
}

impl Mat2C {
    pub fn cast<T: Real>(&self) -> Mat2<T> {
        Mat2::from_entries(self.entries().map(crate::scalar::cplx))
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.m11 + o.m11, self.m12 + o.m12, self.m21 + o.m21, self.m22 + o.m22)
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.m11 - o.m11, self.m12 - o.m12, self.m21 - o.m21, self.m22 - o.m22)
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m11, -self.m12, -self.m21, -self.m22)
    }
}

/// Principal square root built from real square roots only, so it keeps
/// full precision in double-double arithmetic.
pub fn csqrt<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = cabs(z);
    if r == T::zero() {
        return z;
    }
    let half: T = lit(0.5);
    // the larger component from the non-cancelling sum, the other from im = 2 re im
    if z.re >= T::zero() {
        let re = ((r + z.re) * half).sqrt();
        Complex::new(re, z.im / (re + re))
    } else {
        let im = ((r - z.re) * half).sqrt();
        let im = if z.im < T::zero() { -im } else { im };
        Complex::new(z.im / (im + im), im)
    }
}

/// Distance from SU(1,1):
/// `max(|m22 - conj m11|, |m21 - conj m12|, ||m11|^2 - |m12|^2 - 1|, |det - 1|)`.
pub fn su11_distance<T: Real>(m: &Mat2<T>) -> T {
    let one = Complex::new(T::one(), T::zero());
    [
        cabs(m.m22 - m.m11.conj()),
        cabs(m.m21 - m.m12.conj()),
        (m.m11.norm_sqr() - m.m12.norm_sqr() - T::one()).abs(),
        cabs(m.det() - one),
    ]
    .into_iter()
    .fold(T::zero(), T::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConjugacyKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

impl std::fmt::Display for ConjugacyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Elliptic => "elliptic",
            Self::Hyperbolic => "hyperbolic",
            Self::Parabolic => "parabolic",
        })
    }
}

/// Conjugacy class of an SU(1,1) element: rotation angle `theta` for
/// elliptic, boost parameter `s` for hyperbolic, 0 for parabolic.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConjugacyType {
    pub kind: ConjugacyKind,
    pub parameter: f64,
}

/// Classifies by `|trace|`, requiring `su11_distance <= TOL_SU11`.
pub fn classify_su11<T: Real>(m: &Mat2<T>, tol_class: f64) -> Result<ConjugacyType> {
    classify_su11_within(m, tol_class, TOL_SU11)
}

/// [`classify_su11`] with an explicit membership tolerance.
pub fn classify_su11_within<T: Real>(m: &Mat2<T>, tol_class: f64, tol_su11: f64) -> Result<ConjugacyType> {
    let d = to_f64(su11_distance(m));
    if !(d <= tol_su11) {
        return Err(Error::NotInSu11 { distance: d });
    }
    Ok(classify_trace(to_f64(m.trace().re), tol_class))
}

/// Classification from a real trace.
pub fn classify_trace(tr: f64, tol_class: f64) -> ConjugacyType {
    let t = tr.abs();
    if t < 2.0 - tol_class {
        ConjugacyType { kind: ConjugacyKind::Elliptic, parameter: (tr / 2.0).acos() }
    } else if t > 2.0 + tol_class {
        ConjugacyType { kind: ConjugacyKind::Hyperbolic, parameter: (t / 2.0).acosh() }
    } else {
        ConjugacyType { kind: ConjugacyKind::Parabolic, parameter: 0.0 }
    }
}

/// Roots of `x^2 - trace x + det`, ordered by modulus descending, then by
/// argument descending.
pub fn eigenvalues<T: Real>(m: &Mat2<T>) -> (Complex<T>, Complex<T>) {
    let t = m.trace();
    let d = m.det();
    let four: T = lit(4.0);
    let half: T = lit(0.5);
    let disc = csqrt(t * t - d * four);
    // avoid cancellation: take the root of larger modulus, recover the other from det
    let (p, q) = (t + disc, t - disc);
    let big = if p.norm_sqr() >= q.norm_sqr() { p } else { q } * half;
    let (l1, l2) = if big.norm_sqr() == T::zero() { (big, big) } else { (big, d / big) };
    sort_eigenpair(l1, l2)
}

/// Orders a pair by modulus descending, then argument descending. Moduli
/// within a relative `1e-6` count as equal.
pub fn sort_eigenpair<T: Real>(a: Complex<T>, b: Complex<T>) -> (Complex<T>, Complex<T>) {
    let (ma, mb) = (to_f64(cabs(a)), to_f64(cabs(b)));
    let tie = (ma - mb).abs() <= 1e-6 * ma.max(mb).max(1e-300);
    let swap = if tie {
        let arg = |z: Complex<T>| to_f64(z.im).atan2(to_f64(z.re));
        arg(b) > arg(a)
    } else {
        mb > ma
    };
    if swap {
        (b, a)
    } else {
        (a, b)
    }
}

/// Mismatch between two eigenvalue pairs: best pairing, each difference
/// relative to `max(1, |predicted|)`.
pub fn eigenvalue_mismatch(measured: (Complex64, Complex64), predicted: (Complex64, Complex64)) -> f64 {
    let rel = |x: Complex64, p: Complex64| (x - p).norm() / p.norm().max(1.0);
    let straight = rel(measured.0, predicted.0).max(rel(measured.1, predicted.1));
    let crossed = rel(measured.0, predicted.1).max(rel(measured.1, predicted.0));
    straight.min(crossed)
}

/// `Phi^{-1} * g = (Phi22 g - Phi12) / (-Phi21 g + Phi11)`.
pub fn mobius_star<T: Real>(phi: &Mat2<T>, g: Complex<T>) -> Result<Complex<T>> {
    let den = phi.m11 - phi.m21 * g;
    let scale = cabs(phi.m11) + cabs(phi.m21 * g);
    if cabs(den) <= scale * lit::<T>(1e-15) || !cfinite(den) {
        return Err(Error::Pole);
    }
    Ok((phi.m22 * g - phi.m12) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn boost(s: f64) -> Mat2C {
        Mat2C::real(s.cosh(), s.sinh(), s.sinh(), s.cosh())
    }

    fn rotation(theta: f64) -> Mat2C {
        Mat2C::diag(Complex64::from_polar(1.0, theta), Complex64::from_polar(1.0, -theta))
    }

    #[test]
    fn su11_distance_examples() {
        assert_eq!(su11_distance(&Mat2C::identity()), 0.0);
        assert!(su11_distance(&boost(1.0)) < 1e-15);
        assert!((su11_distance(&Mat2C::real(2.0, 0.0, 0.0, 0.5)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn su11_distance_components() {
        // residuals of diag(2, 1/2): {1.5, 0, 3, 0}, the diagonal mismatch is 1.5
        let m = Mat2C::real(2.0, 0.0, 0.0, 0.5);
        assert_eq!((m.m22 - m.m11.conj()).norm(), 1.5);
        assert_eq!(m.det(), c(1.0, 0.0));
    }

    #[test]
    fn classify_examples() {
        let e = classify_su11(&rotation(PI / 3.0), TOL_CLASS).unwrap();
        assert_eq!(e.kind, ConjugacyKind::Elliptic);
        assert!((e.parameter - PI / 3.0).abs() < 1e-12);
        let h = classify_su11(&boost(1.0), TOL_CLASS).unwrap();
        assert_eq!(h.kind, ConjugacyKind::Hyperbolic);
        assert!((h.parameter - 1.0).abs() < 1e-12);
        let p = Mat2C::new(c(1.0, 1.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, -1.0));
        assert_eq!(classify_su11(&p, TOL_CLASS).unwrap().kind, ConjugacyKind::Parabolic);
        assert!(matches!(classify_su11(&Mat2C::real(2.0, 0.0, 0.0, 0.5), TOL_CLASS), Err(Error::NotInSu11 { .. })));
    }

    #[test]
    fn eigenvalue_examples() {
        let (a, b) = eigenvalues(&Mat2C::identity());
        assert_eq!((a, b), (c(1.0, 0.0), c(1.0, 0.0)));
        let r = rotation(PI / 3.0);
        let (a, b) = eigenvalues(&r);
        assert!((a - r.m11).norm() < 1e-15 && (b - r.m22).norm() < 1e-15);
        let (a, b) = eigenvalues(&Mat2C::real(0.0, 1.0, -1.0, 0.0));
        assert!((a - c(0.0, 1.0)).norm() < 1e-15 && (b - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_large_boost_keep_small_root_accurate() {
        let m = Mat2C::real(20f64.exp(), 1.0, 0.0, (-20f64).exp());
        let (a, b) = eigenvalues(&m);
        assert!((a.re / 20f64.exp() - 1.0).abs() < 1e-14);
        assert!((b.re / (-20f64).exp() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_mismatch_ignores_order() {
        let p = (c(2.0, 0.0), c(0.5, 0.0));
        assert_eq!(eigenvalue_mismatch((p.1, p.0), p), 0.0);
    }

    #[test]
    fn mobius_examples() {
        let g = c(0.3, -0.7);
        assert_eq!(mobius_star(&Mat2C::identity(), g).unwrap(), g);
        let v = mobius_star(&Mat2C::real(2.0, 0.0, 0.0, 0.5), c(1.0, 0.0)).unwrap();
        assert!((v - 0.25).norm() < 1e-15);
        assert!(matches!(mobius_star(&Mat2C::real(1.0, 0.0, 1.0, 1.0), c(1.0, 0.0)), Err(Error::Pole)));
    }

    #[test]
    fn double_double_matrix_ops_agree_with_f64() {
        use crate::scalar::Dd;
        let m = Mat2C::new(c(1.0, 2.0), c(-0.5, 0.25), c(3.0, 0.0), c(0.1, -1.0));
        let md: Mat2<Dd> = m.cast();
        assert!((md * md).to_f64().dist(&(m * m)) < 1e-14);
        assert!((md.inverse().unwrap() * md).to_f64().dist(&Mat2C::identity()) < 1e-15);
        let (a, b) = eigenvalues(&md);
        let (af, bf) = eigenvalues(&m);
        assert!((crate::scalar::cplx_f64(a) - af).norm() < 1e-13);
        assert!((crate::scalar::cplx_f64(b) - bf).norm() < 1e-13);
    }

    #[test]
    fn csqrt_matches_principal_branch() {
        for z in [c(4.0, 0.0), c(-4.0, 0.0), c(0.0, 2.0), c(-3.0, -4.0), c(1e-3, -5.0)] {
            assert!((csqrt(z) - z.sqrt()).norm() < 1e-14 * z.norm().max(1.0), "{z}");
        }
    }
}
