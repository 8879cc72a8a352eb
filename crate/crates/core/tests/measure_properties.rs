use proptest::prelude::*;

use solenoid_lab::certify::{pve_constant, PveConfig};
use solenoid_lab::cocycle::LyapunovConfig;
use solenoid_lab::measure::{
    borel_cantelli_decay, center_exponent_check, physical_measure_census, signature, sup_distance, sup_log_det,
    u_state_pushforward, uniform_samples, volume_nonexpansion_check, CensusConfig, CensusGrid, ObservableDictionary,
    UStateConfig, Verdict,
};
use solenoid_lab::model::{AffineSolenoid, ConstantsGrid};
use solenoid_lab::{par, SolenoidModel, SolidTorusPoint};

fn point() -> impl Strategy<Value = SolidTorusPoint> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..std::f64::consts::TAU)
        .prop_map(|(t, r, a)| SolidTorusPoint::from_parts(t, [r.sqrt() * a.cos(), r.sqrt() * a.sin()]))
}

fn census_cfg(n: usize) -> CensusConfig {
    CensusConfig { n, lyapunov: LyapunovConfig::default().with_n(20_000), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn dictionary_is_bounded_by_one(p in point()) {
        let dict = ObservableDictionary::default();
        let mut out = vec![0.0; dict.len()];
        dict.evaluate(&p, &mut out);
        prop_assert!(out.iter().all(|v| v.abs() <= 1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn signature_is_bounded_and_shift_stable(p in point()) {
        let dict = ObservableDictionary::default();
        let n = 10_000;
        for m in [SolenoidModel::default_affine(), SolenoidModel::default_anisotropic()] {
            let a = signature(&m, &p, n, &dict).unwrap();
            let b = signature(&m, &m.eval(&p), n, &dict).unwrap();
            prop_assert!(a.values.iter().all(|v| (-1.0..=1.0).contains(v)));
            prop_assert!(a.sup_distance(&b) <= 2.0 / n as f64 * (1.0 + 1e-9));
        }
    }
}

#[test]
fn census_is_bitwise_reproducible() {
    let model = SolenoidModel::default_anisotropic();
    let grid = CensusGrid { slice: 8, random_points: 16, seed: 4 };
    let dict = ObservableDictionary::default();
    let cfg = census_cfg(10_000);
    let a = physical_measure_census(&model, &grid, &cfg, &dict).unwrap();
    let b = par::with_threads(Some(1), || physical_measure_census(&model, &grid, &cfg, &dict)).unwrap();
    let c = par::with_threads(Some(3), || physical_measure_census(&model, &grid, &cfg, &dict)).unwrap();
    for other in [&b, &c] {
        assert_eq!(a.clusters, other.clusters);
        assert_eq!(a.unclustered, other.unclustered);
        for (x, y) in a.assignments.iter().zip(&other.assignments) {
            assert_eq!(x.cluster, y.cluster);
            assert_eq!(x.sig_distance.to_bits(), y.sig_distance.to_bits());
        }
    }
}

#[test]
fn longer_orbits_never_split_clusters() {
    let grid = CensusGrid::slice(12);
    let dict = ObservableDictionary::default();
    for model in [SolenoidModel::default_affine(), SolenoidModel::default_anisotropic()] {
        let short = physical_measure_census(&model, &grid, &census_cfg(1_000), &dict).unwrap();
        let long = physical_measure_census(&model, &grid, &census_cfg(20_000), &dict).unwrap();
        assert!(long.clusters.len() <= short.clusters.len(), "{} > {}", long.clusters.len(), short.clusters.len());
        assert!(long.basin_total() <= 1.0);
    }
}

#[test]
fn cluster_volume_integral_agrees_with_orbit_average() {
    let model = SolenoidModel::default_anisotropic();
    let res = physical_measure_census(&model, &CensusGrid::slice(8), &census_cfg(10_000), &Default::default()).unwrap();
    assert!(!res.clusters.is_empty());
    for c in &res.clusters {
        assert!((c.exponent_sum - c.volume_integral).abs() <= 1e-6);
        let direct = volume_nonexpansion_check(&model, &[c.representative_point], 20_000, 0.01).unwrap().averages[0];
        assert!((direct - c.volume_integral).abs() < 0.01, "{direct} vs {}", c.volume_integral);
        assert!(c.center_exponents.iter().all(|&e| e < 0.0));
    }
}

#[test]
fn affine_ustate_matches_census_and_converges() {
    let model = SolenoidModel::default_affine();
    let dict = ObservableDictionary::default();
    let base = UStateConfig::default();
    let once = u_state_pushforward(&model, &base, &dict).unwrap();
    let twice = u_state_pushforward(&model, &UStateConfig { n_iter: 2 * base.n_iter, ..base }, &dict).unwrap();
    assert!(once.sup_distance(&twice) <= 0.01, "{}", once.sup_distance(&twice));

    let census = physical_measure_census(&model, &CensusGrid::slice(8), &census_cfg(100_000), &dict).unwrap();
    assert_eq!(census.clusters.len(), 1);
    let d = sup_distance(&twice.values, &census.clusters[0].signature);
    assert!(d <= 0.05, "{d}");
}

#[test]
fn contracting_control_claims_nothing() {
    let control: SolenoidModel = AffineSolenoid::new(3, 0.3, 0.5).unwrap().into();
    let pve = pve_constant(&control, &PveConfig { n_samples: 100, ..Default::default() }, 1).unwrap();
    assert!(!pve.certified());
    let census =
        physical_measure_census(&control, &CensusGrid::slice(4), &census_cfg(10_000), &Default::default()).unwrap();
    let rep = center_exponent_check(&census, &pve, &[], 0.02);
    assert_eq!(rep.verdict, Verdict::HypothesisNotSatisfied);
}

#[test]
fn anisotropic_volume_averages_are_pinned() {
    let rep = volume_nonexpansion_check(&SolenoidModel::default_anisotropic(), &uniform_samples(1000, 1), 10_000, 0.01)
        .unwrap();
    assert_eq!(rep.violators, 0);
    assert!((rep.max_average - -0.7856).abs() < 5e-4, "{}", rep.max_average);
}

#[test]
fn tail_fraction_vanishes_above_the_pointwise_sup() {
    for model in [SolenoidModel::default_affine(), SolenoidModel::default_anisotropic()] {
        let sup = sup_log_det(&model, &ConstantsGrid::default());
        let r = (sup + 0.01).max(0.01);
        let t = borel_cantelli_decay(&model, r, &[1, 2, 5], 2000, 7).unwrap();
        assert!(t.pass);
        assert!(t.rows.iter().all(|row| row.fraction == 0.0 && row.ci_radius == 0.0));
    }
    let t = borel_cantelli_decay(&SolenoidModel::default_affine(), 0.1, &[10, 20, 40], 1000, 3).unwrap();
    assert!(t.rows.iter().all(|row| row.fraction == 0.0 && row.bound == (-0.1 * row.n as f64).exp()));
}
