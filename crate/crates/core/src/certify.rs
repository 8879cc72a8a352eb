//! Certification of partial volume expansion: the minimal area distortion of
//! `Df^N` over planes containing the unstable direction, the sampled constant
//! `ĉ_N`, and the explicit cone fields of the skew-product solenoids.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector2, Vector3};
use serde::Serialize;

pub use crate::cocycle::cofactor;
use crate::cocycle::{push_length, unstable_direction_on_orbit};
use crate::error::{Error, Result};
use crate::model::{estimate_constants, fiber_bounds, ConstantsGrid, ModelConstants, SolenoidModel, SolidTorusPoint};
use crate::{par, rng};

/// Orthonormal `(n1, n2)` with `(e, n1, n2)` right-handed. `n1` is built from
/// the coordinate axis least aligned with `e`.
pub fn complement_basis(e: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let axis = (0..3).min_by(|&a, &b| e[a].abs().total_cmp(&e[b].abs())).unwrap_or(0);
    let n1 = e.cross(&Vector3::ith(axis, 1.0)).normalize();
    let n2 = e.cross(&n1);
    (n1, n2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperplaneMin {
    pub min_det: f64,
    /// Angle `φ ∈ [0, π)` of the minimizing `w = cos φ n1 + sin φ n2`, with
    /// `(n1, n2)` from [`complement_basis`].
    pub worst_angle: f64,
    pub worst_direction: Vector3<f64>,
}

/// Minimum of `|det J|_H|` over planes `H = span(e_u, w)`, `w ⊥ e_u`.
///
/// The squared distortion `Q(w) = ‖Je × Jw‖²` is a quadratic form on the
/// complement of `e_u`. Writing `Je × Jw = cof(J)(e × w)` and letting
/// `ν = e × w` run over the unit circle of the complement turns its
/// restriction into the 2×2 Gram matrix `G` of `cof(J)n1, cof(J)n2`, whose
/// determinant is `(det J · ‖Je‖)²` (since `cof(cof J) = det J · J`). The
/// smallest eigenvalue is then `det G / λ_max`, which stays accurate when the
/// columns of `J` differ by many orders of magnitude, as they do for `Df^N`.
pub fn min_hyperplane_det(j: &Matrix3<f64>, e_u: &Vector3<f64>) -> Result<HyperplaneMin> {
    let norm = e_u.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::param("e_u", "must be a nonzero finite vector"));
    }
    let e = e_u / norm;
    let je = (j * e).norm();
    if !(je > 0.0) {
        return Err(Error::ZeroImage);
    }
    let (n1, n2) = complement_basis(&e);
    let c = cofactor(j);
    let (a, b) = (c * n1, c * n2);
    let (g11, g22, g12) = (a.norm_squared(), b.norm_squared(), a.dot(&b));
    let lmax = 0.5 * (g11 + g22) + (0.5 * (g11 - g22)).hypot(g12);
    let scale = j.determinant().abs() * je;
    let min_det = scale / lmax.sqrt();
    let lmin = min_det * min_det;

    let y1 = Vector2::new(-g12, g11 - lmin);
    let y2 = Vector2::new(g22 - lmin, -g12);
    let y = if y1.norm_squared() >= y2.norm_squared() { y1 } else { y2 };
    let y = if y.norm_squared() > 0.0 { y.normalize() } else { Vector2::x() };
    let normal = n1 * y[0] + n2 * y[1];
    let w = normal.cross(&e);
    let mut phi = w.dot(&n2).atan2(w.dot(&n1)).rem_euclid(PI);
    if phi >= PI {
        phi = 0.0;
    }
    Ok(HyperplaneMin { min_det, worst_angle: phi, worst_direction: w })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PveConfig {
    /// Iterate `N` whose derivative is certified.
    pub n_iter: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    /// Unstable-direction tolerance.
    pub tol: f64,
}

impl Default for PveConfig {
    fn default() -> Self {
        Self { n_iter: 64, n_samples: 1000, burn_in: 1000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PveSample {
    pub index: usize,
    pub point: SolidTorusPoint,
    pub e_u: [f64; 3],
    /// `log` of the minimal plane determinant of `Df^N`.
    pub c_point: f64,
    pub worst_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PveReport {
    pub samples: Vec<PveSample>,
    /// Minimum of `c_point` over samples (nats).
    pub c_hat: f64,
    pub c_hat_per_iterate: f64,
    pub n_iter: usize,
    pub n_samples: usize,
    /// Samples dropped because the unstable direction did not converge.
    pub skipped: usize,
    pub push_ratio: f64,
    pub push_length: usize,
}

impl PveReport {
    pub fn certified(&self) -> bool {
        self.c_hat > 0.0
    }
}

/// Ratio used for the unstable-direction push: the cone constant `a` when the
/// model is dominated in the strong sense, otherwise `max ‖Dh‖ / k`.
pub fn push_ratio(model: &SolenoidModel) -> Result<f64> {
    let grid = ConstantsGrid::default();
    match estimate_constants(model, &grid) {
        Ok(c) => Ok(c.a),
        Err(Error::NotDominated { .. } | Error::NoFiberStructure) => {
            let d = fiber_bounds(model, &grid)?.domination();
            if !(d < 1.0) {
                return Err(Error::NotDominated { a: d });
            }
            Ok(d)
        }
        Err(e) => Err(e),
    }
}

struct SampleCurve {
    sample: PveSample,
    /// `(c_point, worst_angle)` for `N = 1, 2, …`.
    curve: Vec<(f64, f64)>,
}

fn sample_curve(
    model: &SolenoidModel,
    seed: u64,
    index: usize,
    cfg: &PveConfig,
    m: usize,
    n_max: usize,
) -> Result<Option<SampleCurve>> {
    let mut rng = rng::rng_stream(seed, index as u64);
    let mut p = rng::uniform_point(&mut rng);
    let mut history = VecDeque::with_capacity(m + 1);
    for _ in 0..cfg.burn_in {
        if history.len() == m {
            history.pop_front();
        }
        history.push_back(p);
        p = model.eval(&p);
    }
    let segment: Vec<SolidTorusPoint> = history.into_iter().collect();
    let u = match unstable_direction_on_orbit(model, &segment, &p, cfg.tol) {
        Ok(u) => u,
        Err(Error::NotConverged { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut jn = Matrix3::identity();
    let mut cur = p;
    let mut curve = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let (next, j) = model.step(&cur);
        jn = j.0 * jn;
        let h = min_hyperplane_det(&jn, &u.e_u)?;
        curve.push((h.min_det.ln(), h.worst_angle));
        cur = next;
    }
    let (c_point, worst_angle) = *curve.last().expect("n_max >= 1");
    Ok(Some(SampleCurve {
        sample: PveSample { index, point: p, e_u: [u.e_u[0], u.e_u[1], u.e_u[2]], c_point, worst_angle },
        curve,
    }))
}

fn validate_pve(cfg: &PveConfig, m: usize) -> Result<()> {
    if cfg.n_iter == 0 {
        return Err(Error::param("n_iter", "need N >= 1"));
    }
    if cfg.n_samples == 0 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    if cfg.burn_in < m {
        return Err(Error::param("burn_in", format!("need >= push length {m}, got {}", cfg.burn_in)));
    }
    Ok(())
}

/// Samples `n_samples` burned-in orbits (one point each, stream `(seed, i)`),
/// composes `Df^N` along each and records the log of the minimal plane
/// determinant through the sample's unstable direction.
pub fn pve_constant(model: &SolenoidModel, cfg: &PveConfig, seed: u64) -> Result<PveReport> {
    let ratio = push_ratio(model)?;
    let m = push_length(cfg.tol, ratio)?;
    validate_pve(cfg, m)?;
    let results = par::try_map_indexed(cfg.n_samples, |i| sample_curve(model, seed, i, cfg, m, cfg.n_iter))?;
    let samples: Vec<PveSample> = results.into_iter().flatten().map(|s| s.sample).collect();
    let skipped = cfg.n_samples - samples.len();
    let c_hat = samples.iter().map(|s| s.c_point).fold(f64::INFINITY, f64::min);
    Ok(PveReport {
        c_hat,
        c_hat_per_iterate: c_hat / cfg.n_iter as f64,
        n_iter: cfg.n_iter,
        n_samples: cfg.n_samples,
        skipped,
        push_ratio: ratio,
        push_length: m,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyingScan {
    /// Smallest `N` with `ĉ_N > 0`.
    pub first: Option<usize>,
    /// `ĉ_N` for `N = 1..=n_max`.
    pub c_hat: Vec<f64>,
    pub skipped: usize,
}

pub const MAX_CERTIFY_N: usize = 256;

/// Scans `N = 1..=n_max` on a fixed sample set. Each `ĉ_N` equals what
/// [`pve_constant`] reports for the same seed and sample count.
pub fn minimal_certifying_n(model: &SolenoidModel, n_max: usize, cfg: &PveConfig, seed: u64) -> Result<CertifyingScan> {
    if !(1..=MAX_CERTIFY_N).contains(&n_max) {
        return Err(Error::param("n_max", format!("must lie in [1, {MAX_CERTIFY_N}], got {n_max}")));
    }
    let ratio = push_ratio(model)?;
    let m = push_length(cfg.tol, ratio)?;
    validate_pve(&PveConfig { n_iter: n_max, ..*cfg }, m)?;
    let results = par::try_map_indexed(cfg.n_samples, |i| sample_curve(model, seed, i, cfg, m, n_max))?;
    let curves: Vec<SampleCurve> = results.into_iter().flatten().collect();
    let skipped = cfg.n_samples - curves.len();
    let c_hat: Vec<f64> =
        (0..n_max).map(|n| curves.iter().map(|c| c.curve[n].0).fold(f64::INFINITY, f64::min)).collect();
    let first = c_hat.iter().position(|&c| c > 0.0).map(|i| i + 1);
    Ok(CertifyingScan { first, c_hat, skipped })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeConfig {
    pub n_samples: usize,
    pub n_directions: usize,
}

impl Default for ConeConfig {
    fn default() -> Self {
        Self { n_samples: 1000, n_directions: 360 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConeCondition {
    /// (a) `C^u ∩ C^cs = {0}`.
    Disjoint,
    /// (b) `Df(C^u) ⊂ C^u` on the boundary direction grid.
    UnstableInvariance,
    /// (b) `Df(C^cs) ⊃ C^cs`, checked as `Df` mapping `{‖v‖ ≤ s_cs|u|}` into
    /// itself.
    CenterStableInvariance,
    /// (b) for every fiber derivative with `‖Dh‖ ≤ ak`.
    RobustUnstableInvariance,
    RobustCenterStableInvariance,
    /// (c) `‖Df w‖ > ‖w‖` on the `C^u` boundary.
    Expansion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeMargins {
    pub disjoint: f64,
    pub invariance_u: f64,
    pub invariance_cs: f64,
    pub robust_u: f64,
    pub robust_cs: f64,
    pub expansion: f64,
}

impl ConeMargins {
    fn infinite() -> Self {
        let inf = f64::INFINITY;
        Self { disjoint: inf, invariance_u: inf, invariance_cs: inf, robust_u: inf, robust_cs: inf, expansion: inf }
    }

    fn min(self, o: &Self) -> Self {
        Self {
            disjoint: self.disjoint.min(o.disjoint),
            invariance_u: self.invariance_u.min(o.invariance_u),
            invariance_cs: self.invariance_cs.min(o.invariance_cs),
            robust_u: self.robust_u.min(o.robust_u),
            robust_cs: self.robust_cs.min(o.robust_cs),
            expansion: self.expansion.min(o.expansion),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeWitness {
    pub sample: usize,
    pub point: SolidTorusPoint,
    /// Fiber direction angle (radians) of the offending boundary vector.
    pub direction: f64,
    pub condition: ConeCondition,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeSample {
    pub index: usize,
    pub point: SolidTorusPoint,
    pub margins: ConeMargins,
    pub violation: Option<ConeWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeCheckReport {
    pub constants: ModelConstants,
    pub slope_u: f64,
    pub slope_cs: f64,
    pub samples: Vec<ConeSample>,
    pub min_margins: ConeMargins,
    pub pass_a: bool,
    pub pass_b: bool,
    pub pass_c: bool,
    pub witness: Option<ConeWitness>,
}

impl ConeCheckReport {
    pub fn pass(&self) -> bool {
        self.pass_a && self.pass_b && self.pass_c
    }
}

fn positive(margin: f64, scale: f64) -> bool {
    margin > 1e-12 * scale.max(1.0)
}

/// Checks the cone fields `C^u = {‖v‖ ≤ s|u|}` and `C^cs = {‖v‖ ≥ 1.5 s|u|}`,
/// `s = constants.cone_slope`, at `n_samples` volume-uniform points and
/// `n_directions` boundary directions per cone.
///
/// Expansion is measured in the cone-adapted metric `u² + ‖v‖²/s²`; the robust
/// invariance margins replace the actual fiber derivative by the worst case
/// `‖Dh‖ = ak` allowed by the constants. Jacobians are assumed to have the
/// skew form with first row `(k, 0, 0)`.
pub fn cone_field_check(
    model: &SolenoidModel,
    constants: &ModelConstants,
    cfg: &ConeConfig,
    seed: u64,
) -> Result<ConeCheckReport> {
    let su = constants.cone_slope;
    if !(su > 0.0 && su.is_finite()) {
        return Err(Error::param("cone_slope", format!("must be positive, got {su}")));
    }
    if cfg.n_directions == 0 || cfg.n_samples == 0 {
        return Err(Error::param("cones", "need samples and directions"));
    }
    let scs = 1.5 * su;
    let dirs: Vec<(f64, Vector2<f64>)> = (0..cfg.n_directions)
        .map(|i| {
            let psi = 2.0 * PI * i as f64 / cfg.n_directions as f64;
            (psi, Vector2::new(psi.cos(), psi.sin()))
        })
        .collect();

    let samples = par::map_indexed(cfg.n_samples, |index| {
        let point = rng::uniform_point(&mut rng::rng_stream(seed, index as u64));
        let j = model.jacobian(&point);
        let k = j.0[(0, 0)].abs();
        let g = j.shear();
        let mut m = ConeMargins::infinite();
        let mut violation: Option<ConeWitness> = None;
        let note = |cond: ConeCondition, margin: f64, scale: f64, direction: f64, v: &mut Option<ConeWitness>| {
            if v.is_none() && !positive(margin, scale) {
                *v = Some(ConeWitness { sample: index, point, direction, condition: cond, margin });
            }
        };

        m.disjoint = scs - su;
        note(ConeCondition::Disjoint, m.disjoint, su, 0.0, &mut violation);

        let image = |slope: f64, d: &Vector2<f64>| {
            let w = Vector3::new(1.0, slope * d[0], slope * d[1]);
            let jw = j.0 * w;
            (jw[0].abs(), Vector2::new(jw[1], jw[2]).norm())
        };
        for (psi, d) in &dirs {
            let (u, v) = image(su, d);
            let inv_u = su - v / u;
            let stretch = ((u * u + (v / su).powi(2)) / 2.0).sqrt() - 1.0;
            let (ucs, vcs) = image(scs, d);
            let inv_cs = scs - vcs / ucs;
            m.invariance_u = m.invariance_u.min(inv_u);
            m.invariance_cs = m.invariance_cs.min(inv_cs);
            m.expansion = m.expansion.min(stretch);
            note(ConeCondition::UnstableInvariance, inv_u, su, *psi, &mut violation);
            note(ConeCondition::CenterStableInvariance, inv_cs, scs, *psi, &mut violation);
            note(ConeCondition::Expansion, stretch, 1.0, *psi, &mut violation);
        }

        let shear_dir = g[1].atan2(g[0]).rem_euclid(2.0 * PI);
        m.robust_u = su - (constants.a * su + g.norm() / k);
        m.robust_cs = scs - (constants.a * scs + g.norm() / k);
        note(ConeCondition::RobustUnstableInvariance, m.robust_u, su, shear_dir, &mut violation);
        note(ConeCondition::RobustCenterStableInvariance, m.robust_cs, scs, shear_dir, &mut violation);
        ConeSample { index, point, margins: m, violation }
    });

    let min_margins = samples.iter().fold(ConeMargins::infinite(), |acc, s| acc.min(&s.margins));
    let pass_a = positive(min_margins.disjoint, su);
    let pass_b = positive(min_margins.invariance_u, su)
        && positive(min_margins.invariance_cs, scs)
        && positive(min_margins.robust_u, su)
        && positive(min_margins.robust_cs, scs);
    let pass_c = positive(min_margins.expansion, 1.0);
    let witness = samples.iter().find_map(|s| s.violation);
    Ok(ConeCheckReport {
        constants: *constants,
        slope_u: su,
        slope_cs: scs,
        samples,
        min_margins,
        pass_a,
        pass_b,
        pass_c,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LinearFixture;
    use rand::Rng;

    #[test]
    fn cofactor_identity() {
        let mut rng = rng::rng_stream(2, 0);
        for _ in 0..100 {
            let j = Matrix3::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
            let (a, b) = (rng::random_unit(&mut rng), rng::random_unit(&mut rng));
            let lhs = (j * a).cross(&(j * b));
            let rhs = cofactor(&j) * a.cross(&b);
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn axis_aligned_minimum() {
        let d = Matrix3::from_diagonal(&Vector3::new(2.0, 3.0, 4.0));
        let h = min_hyperplane_det(&d, &Vector3::x()).unwrap();
        assert_eq!(h.min_det, 6.0);
        assert!((h.worst_direction.abs() - Vector3::y()).norm() < 1e-15);
        assert!((0.0..PI).contains(&h.worst_angle));
    }

    #[test]
    fn identity_is_flat() {
        let mut rng = rng::rng_stream(3, 0);
        for _ in 0..20 {
            let e = rng::random_unit(&mut rng);
            let h = min_hyperplane_det(&Matrix3::identity(), &e).unwrap();
            assert!((h.min_det - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_image_is_rejected() {
        let j = Matrix3::new(0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(min_hyperplane_det(&j, &Vector3::x()), Err(Error::ZeroImage)));
    }

    #[test]
    fn fixture_certifies_at_one() {
        let fx: SolenoidModel = LinearFixture::diagonal([3.0, 0.6, 0.6]).unwrap().into();
        let cfg = PveConfig { n_samples: 16, ..Default::default() };
        let scan = minimal_certifying_n(&fx, 4, &cfg, 1).unwrap();
        assert_eq!(scan.first, Some(1));
        assert!((scan.c_hat[0] - 1.8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn scan_matches_pve_constant() {
        let model = SolenoidModel::default_affine();
        let cfg = PveConfig { n_iter: 6, n_samples: 20, ..Default::default() };
        let scan = minimal_certifying_n(&model, 6, &cfg, 9).unwrap();
        let rep = pve_constant(&model, &cfg, 9).unwrap();
        assert_eq!(scan.c_hat[5], rep.c_hat);
        assert!(rep.samples.iter().all(|s| s.c_point >= rep.c_hat));
    }

    #[test]
    fn fixture_cones_pass() {
        let fx: SolenoidModel = LinearFixture::diagonal([3.0, 0.4, 0.4]).unwrap().into();
        for slope in [0.1, 1.0, 50.0] {
            let c = ModelConstants::new(3.0, 2.5 / 3.0, 0.0).unwrap().with_slope(slope);
            let r = cone_field_check(&fx, &c, &ConeConfig { n_samples: 10, n_directions: 360 }, 0).unwrap();
            assert!(r.pass(), "{:?}", r.min_margins);
        }
    }
}
