use cmcface_core::curve::{canonical_paths, rational_rhs, transport_w, PathSpec};
use cmcface_core::geometry::{hollow_ball, immerse, quadric_residual, unit_normal, MinkowskiPoint};
use cmcface_core::linalg2c::{classify_su11, classify_trace, eigenvalues, mobius_star, su11_distance, ConjugacyKind};
use cmcface_core::monodromy::{assemble_monodromies, half_path_frames, structure_deviation};
use cmcface_core::period::{sign_changes, solve_gauge, ScanRecord};
use cmcface_core::transport::DormandPrince;
use cmcface_core::{CurvePoint, Dd, Mat2C};
use num_complex::Complex64;
use num_traits::Float;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cplx(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex64::new(re, im))
}

fn sl2() -> impl Strategy<Value = Mat2C> {
    (cplx(2.0), cplx(2.0), cplx(2.0), cplx(2.0))
        .prop_filter("invertible", |(a, b, c, d)| (a * d - b * c).norm() > 0.1)
        .prop_map(|(a, b, c, d)| Mat2C::new(a, b, c, d).normalized())
}

/// `[[u, v], [conj v, conj u]]` with `|u|^2 - |v|^2 = 1`.
fn su11() -> impl Strategy<Value = Mat2C> {
    (0.0..3.0f64, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(t, p, q)| {
        let u = Complex64::from_polar(t.cosh(), p);
        let v = Complex64::from_polar(t.sinh(), q);
        Mat2C::new(u, v, v.conj(), u.conj())
    })
}

fn minkowski(x: &MinkowskiPoint) -> [f64; 4] {
    [x.x0, x.x1, x.x2, x.x3]
}

fn lorentz(x: [f64; 4], y: [f64; 4]) -> f64 {
    -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn det_is_multiplicative(a in sl2(), b in sl2()) {
        let d = (a * b).det() - a.det() * b.det();
        prop_assert!(d.norm() < 1e-12 * (1.0 + (a.max_abs() * b.max_abs()).powi(2)));
    }

    #[test]
    fn su11_is_closed_under_products_and_inverses(a in su11(), b in su11()) {
        let scale = (a.max_abs() * b.max_abs()).powi(2);
        prop_assert!(su11_distance(&(a * b)) < 1e-12 * scale);
        prop_assert!(su11_distance(&a.inverse().unwrap()) < 1e-12 * a.max_abs().powi(2));
    }

    #[test]
    fn su11_mobius_action_preserves_the_disk(phi in su11(), g in cplx(3.0)) {
        prop_assume!(((g.norm() - 1.0).abs()) > 1e-3);
        if let Ok(h) = mobius_star(&phi, g) {
            prop_assert_eq!(h.norm() < 1.0, g.norm() < 1.0);
        }
    }

    #[test]
    fn su11_classification_follows_the_trace(phi in su11()) {
        let tr = phi.trace().re;
        prop_assume!((tr.abs() - 2.0).abs() > 1e-3);
        let k = classify_su11(&phi, 1e-6).unwrap().kind;
        prop_assert_eq!(k, classify_trace(tr, 1e-6).kind);
        let (l1, l2) = eigenvalues(&phi);
        if k == ConjugacyKind::Elliptic {
            prop_assert!((l1.norm() - 1.0).abs() < 1e-8 && (l2.norm() - 1.0).abs() < 1e-8);
        } else {
            prop_assert!(l1.im.abs() < 1e-6 * l1.norm() && l2.im.abs() < 1e-6 * l1.norm());
        }
    }

    #[test]
    fn immersion_lies_on_the_quadric(f in sl2()) {
        let x = immerse(&f);
        prop_assert!(quadric_residual(&x) < 1e-12 * f.max_abs().powi(4).max(1.0));
    }

    #[test]
    fn immersion_is_su11_invariant(f in sl2(), u in su11()) {
        let x = minkowski(&immerse(&f));
        let y = minkowski(&immerse(&(f * u)));
        let scale = (f.max_abs() * u.max_abs()).powi(2);
        for k in 0..4 {
            prop_assert!((x[k] - y[k]).abs() < 1e-11 * scale);
        }
    }

    #[test]
    fn unit_normal_is_timelike_and_tangent(f in sl2(), g in cplx(3.0)) {
        prop_assume!((g.norm() - 1.0).abs() > 0.05);
        let n = minkowski(&unit_normal(&f, g).unwrap());
        let x = minkowski(&immerse(&f));
        let scale = f.max_abs().powi(4) / ((g.norm_sqr() - 1.0).abs()).powi(2);
        prop_assert!((lorentz(n, n) + 1.0).abs() < 1e-10 * scale.max(1.0));
        prop_assert!(lorentz(n, x).abs() < 1e-10 * scale.max(1.0));
        prop_assert_eq!(n[0] > 0.0, g.norm() > 1.0);
    }

    #[test]
    fn hollow_ball_stays_in_the_annulus(t in -30.0..30.0f64, th in 0.0..PI, ph in 0.0..2.0 * PI) {
        let r = (1.0 + t * t).sqrt();
        let x = MinkowskiPoint { x0: t, x1: r * th.sin() * ph.cos(), x2: r * th.sin() * ph.sin(), x3: r * th.cos() };
        let y = hollow_ball(&x);
        let r2 = y.radius_sq();
        prop_assert!(r2 > (-PI).exp() && r2 < PI.exp());
        prop_assert_eq!(y.y2 == 0.0, x.x2 == 0.0);
    }

    #[test]
    fn gauge_reproduces_f(f in prop_oneof![1.0001..50.0f64, -50.0..-1.0001f64]) {
        let g = solve_gauge(f).unwrap();
        prop_assert!((g.implied_f() - f).abs() < 1e-10 * f.abs());
        prop_assert!((g.alpha * g.beta + f64::from(g.epsilon) / 2.0).abs() < 1e-14);
        prop_assert!((g.p.det() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn small_f_is_not_admissible(f in -1.0..1.0f64) {
        prop_assert!(solve_gauge(f).is_err());
    }

    #[test]
    fn double_double_division_inverts_multiplication(x in -1e6..1e6f64, y in prop_oneof![-1e3..-1e-3f64, 1e-3..1e3f64]) {
        let (xd, yd) = (Dd::new(x, x * 1e-17), Dd::new(y, y * 3e-17));
        let q = xd / yd;
        prop_assert!(((q * yd - xd) / xd.abs().max(Dd::from(1e-300))).abs().hi() < 1e-30);
    }

    #[test]
    fn sign_changes_flag_every_flip(v in prop::collection::vec(-1.0..1.0f64, 2..60)) {
        let recs: Vec<ScanRecord> = v
            .iter()
            .enumerate()
            .map(|(i, &d)| ScanRecord { c: i as f64, f1: d, f2: 0.0, admissible_hint: false })
            .collect();
        let flips = v.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0) || w[0] == 0.0).count();
        prop_assert_eq!(sign_changes(&recs).len(), flips);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sheet_continuation_stays_on_the_curve(re in -3.0..3.0f64, im in 0.3..3.0f64) {
        let a = 2.0;
        let end = Complex64::new(re, im);
        let path = PathSpec::new(CurvePoint::origin(1), vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, im), end], false, a);
        prop_assume!(path.is_ok());
        let p = transport_w(&path.unwrap()).unwrap();
        prop_assert!((p.w * p.w - rational_rhs(end, a).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn symmetry_products_have_the_lemma_structure(c in prop_oneof![-9.0..-0.05f64, 0.05..4.0f64], a in 1.3..3.5f64) {
        let paths = canonical_paths(a).unwrap();
        let h = half_path_frames(&DormandPrince::default(), &paths, c).unwrap();
        let m = assemble_monodromies(&h);
        let scale = m.iter().map(|(_, p)| p.max_abs()).fold(1.0, f64::max);
        prop_assert!(structure_deviation(&m) < 1e-12 * scale * scale);
    }
}
