use nalgebra::Vector3;
use serde::Serialize;

use super::{accumulate_orbit, reject_fixture, MeasureSignature, ObservableDictionary, SignatureOrigin};
use crate::cocycle::{lyapunov_spectrum, LyapunovConfig};
use crate::error::{Error, Result};
use crate::model::{SolenoidModel, SolidTorusPoint};
use crate::par;

/// The seed curve is the horizontal circle `{(theta0 + t, fiber)}`, sampled
/// at the `n_disk` cell midpoints `t`, then pushed `graph_steps` times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UStateConfig {
    pub theta0: f64,
    pub fiber: [f64; 2],
    pub n_disk: usize,
    pub n_iter: usize,
    pub graph_steps: usize,
}

impl Default for UStateConfig {
    fn default() -> Self {
        Self { theta0: 0.0, fiber: [0.0, 0.0], n_disk: 10_000, n_iter: 1000, graph_steps: 20 }
    }
}

/// Points of the pushed curve with normalized arclength weights.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UDisk {
    pub points: Vec<SolidTorusPoint>,
    pub weights: Vec<f64>,
}

fn validate(cfg: &UStateConfig) -> Result<()> {
    if cfg.n_disk < 2 {
        return Err(Error::param("n_disk", "need at least two curve points"));
    }
    if cfg.n_iter == 0 {
        return Err(Error::param("n_iter", "need at least one iterate"));
    }
    if cfg.fiber[0].hypot(cfg.fiber[1]) > 1.0 {
        return Err(Error::PointOutsideTorus { norm: cfg.fiber[0].hypot(cfg.fiber[1]) });
    }
    Ok(())
}

/// Each point carries the tangent of the curve. At every step the weight is
/// multiplied by the stretch of that tangent and the tangent renormalized;
/// weights are rescaled to sum to one after each step.
pub fn u_disk(model: &SolenoidModel, cfg: &UStateConfig) -> Result<UDisk> {
    reject_fixture(model)?;
    validate(cfg)?;
    let n = cfg.n_disk;
    let pairs = par::map_indexed(n, |j| {
        let mut p = SolidTorusPoint::from_parts(cfg.theta0 + (j as f64 + 0.5) / n as f64, cfg.fiber);
        p.theta = crate::model::reduce_turns(p.theta);
        let mut tau = Vector3::new(1.0, 0.0, 0.0);
        let mut log_w = 0.0;
        for _ in 0..cfg.graph_steps {
            let (next, jac) = model.step(&p);
            let v = jac.matrix() * tau;
            let s = v.norm();
            log_w += s.ln();
            tau = v / s;
            p = next;
        }
        (p, log_w)
    });
    // Normalizing in log space is the per-step renormalization carried to the end.
    let top = pairs.iter().map(|&(_, w)| w).fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = pairs.iter().map(|&(_, w)| (w - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(UDisk { points: pairs.iter().map(|&(p, _)| p).collect(), weights: raw.iter().map(|w| w / total).collect() })
}

/// Chunks are fixed in number so that the summation order, and thus the
/// result, does not depend on the worker count.
const CHUNKS: usize = 64;

/// `(1/n_iter) Σ_{i<n_iter} Σ_j w_j φ(f^i p_j)` over the pushed curve.
pub fn u_state_pushforward(
    model: &SolenoidModel,
    cfg: &UStateConfig,
    dict: &ObservableDictionary,
) -> Result<MeasureSignature> {
    let disk = u_disk(model, cfg)?;
    Ok(pushforward_signature(model, cfg, &disk, dict))
}

fn pushforward_signature(
    model: &SolenoidModel,
    cfg: &UStateConfig,
    disk: &UDisk,
    dict: &ObservableDictionary,
) -> MeasureSignature {
    let n = disk.points.len();
    let per = n.div_ceil(CHUNKS);
    let partials = par::map_indexed(CHUNKS, |c| {
        let mut acc = vec![0.0; dict.len()];
        for j in (c * per)..((c + 1) * per).min(n) {
            accumulate_orbit(model, dict, disk.points[j], cfg.n_iter, &mut acc, disk.weights[j]);
        }
        acc
    });
    let mut values = vec![0.0; dict.len()];
    for part in &partials {
        for (v, p) in values.iter_mut().zip(part) {
            *v += p;
        }
    }
    let values = values.into_iter().map(|v| (v / cfg.n_iter as f64).clamp(-1.0, 1.0)).collect();
    MeasureSignature { values, n: cfg.n_iter, origin: SignatureOrigin::Disk { theta0: cfg.theta0, fiber: cfg.fiber } }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UStateProbe {
    pub signature: MeasureSignature,
    /// Heaviest curve point (first on ties).
    pub representative: SolidTorusPoint,
    pub center_exponents: [f64; 2],
}

pub fn u_state_probe(
    model: &SolenoidModel,
    cfg: &UStateConfig,
    dict: &ObservableDictionary,
    lyapunov: &LyapunovConfig,
) -> Result<UStateProbe> {
    let disk = u_disk(model, cfg)?;
    let signature = pushforward_signature(model, cfg, &disk, dict);
    let mut best = 0;
    for (j, w) in disk.weights.iter().enumerate() {
        if *w > disk.weights[best] {
            best = j;
        }
    }
    let representative = disk.points[best];
    let est = lyapunov_spectrum(model, &representative, lyapunov)?;
    Ok(UStateProbe { signature, representative, center_exponents: est.center() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_normalized_and_points_inside() {
        let cfg = UStateConfig { n_disk: 500, ..Default::default() };
        let d = u_disk(&SolenoidModel::default_anisotropic(), &cfg).unwrap();
        assert!((d.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(d.points.iter().all(|p| p.fiber_norm() <= 1.0));
    }

    #[test]
    fn two_seeds_agree_affine() {
        let m = SolenoidModel::default_affine();
        let dict = ObservableDictionary::default();
        let a = UStateConfig { n_disk: 2000, n_iter: 500, ..Default::default() };
        let b = UStateConfig { theta0: 0.3137, fiber: [0.4, -0.2], ..a };
        let sa = u_state_pushforward(&m, &a, &dict).unwrap();
        let sb = u_state_pushforward(&m, &b, &dict).unwrap();
        assert!((sa.values[0] - 1.0).abs() < 1e-12);
        assert!(sa.sup_distance(&sb) < 0.05, "{}", sa.sup_distance(&sb));
    }
}
