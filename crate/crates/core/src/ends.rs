//! End analysis: the indicial exponent `m = sqrt(1 - 4c(a-1))` at the
//! punctures, the predicted end monodromy eigenvalues `-exp(+-m pi i)`, a
//! direct end-loop check of that prediction, and the Osserman equality.

use crate::curve::{canonical_paths, validate_a};
use crate::error::{Error, Result};
use crate::linalg2c::{eigenvalue_mismatch, eigenvalues, sort_eigenpair, ConjugacyKind, Mat2};
use crate::scalar::{cplx_f64, Real};
use crate::transport::FrameIntegrator;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Distance from the integers below which `m` counts as resonant.
pub const TOL_RES: f64 = 1e-6;
/// Tolerance on the eigenvalue mismatch of the end-loop check.
pub const TOL_EIG: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndAnalysis {
    pub m: Complex64,
    pub end_type: ConjugacyKind,
    pub predicted_eigenvalues: (Complex64, Complex64),
    pub measured_eigenvalues: Option<(Complex64, Complex64)>,
    /// Trace of the integrated end monodromy.
    pub measured_trace: Option<Complex64>,
    pub eigenvalue_mismatch: Option<f64>,
}

fn m_unchecked(a: f64, c: f64) -> Complex64 {
    let r = 1.0 - 4.0 * c * (a - 1.0);
    if r >= 0.0 {
        Complex64::new(r.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-r).sqrt())
    }
}

fn check_params(a: f64, c: f64) -> Result<()> {
    validate_a(a)?;
    if !c.is_finite() || c == 0.0 {
        return Err(Error::InvalidInput(format!("c must be finite and nonzero, got {c}")));
    }
    Ok(())
}

/// `m = sqrt(1 - 4c(a-1))` on the principal branch: nonnegative real or
/// positive imaginary. Integer `m` (the case with logarithmic solutions)
/// is rejected.
pub fn indicial_exponent(a: f64, c: f64) -> Result<Complex64> {
    check_params(a, c)?;
    let m = m_unchecked(a, c);
    let nearest = Complex64::new(m.re.round(), 0.0);
    if (m - nearest).norm() < TOL_RES {
        return Err(Error::ResonantExponent { m_re: m.re, m_im: m.im });
    }
    Ok(m)
}

/// `(-exp(m pi i), -exp(-m pi i))`, sorted like [`eigenvalues`].
pub fn predicted_eigenvalues(m: Complex64) -> (Complex64, Complex64) {
    let e = (m * Complex64::new(0.0, PI)).exp();
    sort_eigenpair(-e, -e.inv())
}

/// Elliptic for real `m`, hyperbolic for imaginary `m`.
pub fn classify_end(a: f64, c: f64) -> Result<EndAnalysis> {
    let m = indicial_exponent(a, c)?;
    let end_type = if m.im == 0.0 { ConjugacyKind::Elliptic } else { ConjugacyKind::Hyperbolic };
    Ok(EndAnalysis {
        m,
        end_type,
        predicted_eigenvalues: predicted_eigenvalues(m),
        measured_eigenvalues: None,
        measured_trace: None,
        eigenvalue_mismatch: None,
    })
}

/// Holonomy around the end `(inf, 1)` for `which_end >= 0`, else `(inf, -1)`.
pub fn end_monodromy<T: Real, I: FrameIntegrator<T>>(integrator: &I, a: f64, c: T, which_end: i8) -> Result<Mat2<T>> {
    let paths = canonical_paths(a)?;
    integrator.holonomy(paths.end_loop(which_end), c)
}

/// Integrates the end loop and compares its eigenvalues with the prediction.
/// The mismatch is relative to `max(1, |predicted|)` for each eigenvalue.
pub fn end_loop_check<T: Real, I: FrameIntegrator<T>>(
    integrator: &I,
    a: f64,
    c: T,
    which_end: i8,
) -> Result<EndAnalysis> {
    let cf = crate::scalar::to_f64(c);
    let mut out = classify_end(a, cf)?;
    let phi = end_monodromy(integrator, a, c, which_end)?;
    let (l1, l2) = eigenvalues(&phi);
    let measured = (cplx_f64(l1), cplx_f64(l2));
    let mismatch = eigenvalue_mismatch(measured, out.predicted_eigenvalues);
    out.measured_eigenvalues = Some(measured);
    out.measured_trace = Some(cplx_f64(phi.trace()));
    out.eigenvalue_mismatch = Some(mismatch);
    if !(mismatch <= TOL_EIG) {
        return Err(Error::EigenvalueMismatch { mismatch });
    }
    Ok(out)
}

/// Eigenvalue discrepancy between the identity and `b` initial frames.
pub fn lift_independence_check<T: Real, I: FrameIntegrator<T>>(
    integrator: &I,
    c: T,
    lp: &crate::curve::PathSpec,
    b: &Mat2<T>,
) -> Result<f64> {
    crate::monodromy::lift_independence(integrator, lp, c, b)
}

/// Whether `2 deg G = -chi + n` with `chi = 2 - 2 genus - n`.
pub fn osserman_equality_check(genus: u32, n_ends: u32, deg_g: u32) -> bool {
    let (g, n, d) = (i64::from(genus), i64::from(n_ends), i64::from(deg_g));
    2 * d == (2 * g - 2 + n) + n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::DormandPrince;

    #[test]
    fn indicial_exponent_examples() {
        let m = indicial_exponent(2.0, -7.6119).unwrap();
        assert!((m.re - 5.60782).abs() < 1e-5 && m.im == 0.0);
        let m = indicial_exponent(2.0, 1.26988).unwrap();
        assert!(m.re == 0.0 && (m.im - 2.01978).abs() < 1e-5);
        assert_eq!(indicial_exponent(2.0, 0.1875).unwrap(), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn resonant_exponents_are_rejected() {
        assert!(matches!(indicial_exponent(2.0, -0.75), Err(Error::ResonantExponent { .. })));
        // m = 0 at c = 1/(4(a-1))
        assert!(matches!(indicial_exponent(3.0, 0.125), Err(Error::ResonantExponent { .. })));
        assert!(indicial_exponent(2.0, 0.0).is_err());
    }

    #[test]
    fn classification_by_exponent() {
        assert_eq!(classify_end(2.0, -7.6119).unwrap().end_type, ConjugacyKind::Elliptic);
        assert_eq!(classify_end(2.0, 1.26988).unwrap().end_type, ConjugacyKind::Hyperbolic);
        assert_eq!(classify_end(2.0, 0.1).unwrap().end_type, ConjugacyKind::Elliptic);
    }

    #[test]
    fn predicted_pair_has_unit_product() {
        for c in [-7.6119, 1.26988, 0.1, -2.5] {
            let e = classify_end(2.0, c).unwrap();
            let (p, q) = e.predicted_eigenvalues;
            assert!((p * q - 1.0).norm() < 1e-12);
            assert!((e.m * e.m + 4.0 * c - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn end_loop_matches_prediction_in_f64() {
        let dp = DormandPrince::default();
        for c in [-1.0, 1.26988] {
            let e1 = end_loop_check(&dp, 2.0, c, 1).unwrap();
            let e2 = end_loop_check(&dp, 2.0, c, -1).unwrap();
            let (p1, q1) = e1.measured_eigenvalues.unwrap();
            let (p2, q2) = e2.measured_eigenvalues.unwrap();
            assert!((p1 - p2).norm() / p1.norm().max(1.0) < 1e-6 && (q1 - q2).norm() < 1e-6);
            let tr = e1.measured_trace.unwrap();
            let expected = -2.0 * (e1.m * PI).cos().re;
            assert!((tr.re - expected).abs() < 1e-6 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn osserman_examples() {
        assert!(osserman_equality_check(1, 2, 2));
        assert!(osserman_equality_check(0, 2, 1));
        assert!(!osserman_equality_check(1, 2, 1));
    }
}
