use nalgebra::{Matrix3, Vector3};
use proptest::prelude::*;

use solenoid_lab::cocycle::{det_on_subspace, lyapunov_spectrum, unstable_direction, FrameInit, LyapunovConfig};
use solenoid_lab::model::{estimate_constants, ConstantsGrid};
use solenoid_lab::{rng, SolenoidModel, SolidTorusPoint};

fn point() -> impl Strategy<Value = SolidTorusPoint> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, r, a)| SolidTorusPoint::from_parts(t, [r.sqrt() * a.cos(), r.sqrt() * a.sin()]))
}

fn matrix() -> impl Strategy<Value = Matrix3<f64>> {
    prop::array::uniform9(-2.0..2.0f64).prop_map(|a| Matrix3::from_row_slice(&a))
}

fn vector() -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-1.0..1.0f64).prop_map(Vector3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn full_basis_gives_abs_det(j in matrix(), a in vector(), b in vector(), c in vector()) {
        let vol = Matrix3::from_columns(&[a, b, c]).determinant().abs();
        prop_assume!(vol > 1e-3);
        let d = det_on_subspace(&j, &[a, b, c]).unwrap();
        let exact = j.determinant().abs();
        prop_assert!((d - exact).abs() <= 1e-12 * exact.max(1.0), "{} vs {}", d, exact);
    }

    #[test]
    fn subspace_det_obeys_chain_rule(j1 in matrix(), j2 in matrix(), a in vector(), b in vector()) {
        prop_assume!(a.cross(&b).norm() > 1e-3);
        prop_assume!(j1.determinant().abs() > 1e-3 && j2.determinant().abs() > 1e-3);
        let whole = det_on_subspace(&(j2 * j1), &[a, b]).unwrap();
        let first = det_on_subspace(&j1, &[a, b]).unwrap();
        let second = det_on_subspace(&j2, &[j1 * a, j1 * b]).unwrap();
        prop_assert!((whole - first * second).abs() <= 1e-12 * whole, "{} vs {}", whole, first * second);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn unstable_direction_is_invariant(p in point()) {
        let tol = 1e-9;
        for m in [SolenoidModel::default_affine(), SolenoidModel::default_anisotropic()] {
            let c = estimate_constants(&m, &ConstantsGrid::default()).unwrap();
            let u = unstable_direction(&m, &p, tol, &c).unwrap();
            prop_assert!(u.invariance_residual <= 10.0 * tol);
            prop_assert!((u.e_u.norm() - 1.0).abs() < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exponent_sum_matches_mean_log_det(p in point(), period in 1usize..=32) {
        let cfg = LyapunovConfig { n: 20_000, qr_period: period, burn_in: 200, frame: FrameInit::Identity };
        for m in [SolenoidModel::default_affine(), SolenoidModel::default_anisotropic()] {
            let est = lyapunov_spectrum(&m, &p, &cfg).unwrap();
            prop_assert!((est.sum() - est.mean_log_det).abs() < 1e-12, "{} vs {}", est.sum(), est.mean_log_det);
            prop_assert!(est.exponents[0] >= est.exponents[1] && est.exponents[1] >= est.exponents[2]);
        }
    }
}

#[test]
fn spectrum_does_not_depend_on_initial_frame() {
    let m = SolenoidModel::default_anisotropic();
    let p = SolidTorusPoint::from_parts(0.1, [0.0, 0.0]);
    let base = LyapunovConfig::default();
    let a = lyapunov_spectrum(&m, &p, &base).unwrap();
    for seed in [1, 2, 3] {
        let b = lyapunov_spectrum(&m, &p, &LyapunovConfig { frame: FrameInit::Random { seed }, ..base }).unwrap();
        for i in 0..3 {
            assert!(
                (a.exponents[i] - b.exponents[i]).abs() < 1e-6,
                "seed {seed}: {:?} vs {:?}",
                a.exponents,
                b.exponents
            );
        }
    }
}

#[test]
fn affine_spectrum_from_random_starts() {
    let m = SolenoidModel::default_affine();
    let cfg = LyapunovConfig::default();
    let (k, lambda) = (3.0f64, 0.4f64);
    for task in 0..4 {
        let p = rng::uniform_point(&mut rng::rng_stream(77, task));
        let est = lyapunov_spectrum(&m, &p, &cfg).unwrap();
        assert!((est.exponents[0] - k.ln()).abs() < 1e-6, "{:?}", est.exponents);
        let center = est.center();
        assert!((center[0] + center[1] - 2.0 * lambda.ln()).abs() < 1e-6, "{center:?}");
    }
}
