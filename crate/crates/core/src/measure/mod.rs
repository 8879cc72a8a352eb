//! Empirical measures through Birkhoff averages of a fixed observable
//! dictionary, and the probes built on them.

mod census;
mod center;
mod ustate;
mod volume;

pub use census::{
    physical_measure_census, Assignment, CensusConfig, CensusGrid, CensusResult, Cluster, THETA_CELL_OFFSET,
};
pub use center::{center_exponent_check, CenterExponentReport, ClusterCheck, Verdict};
pub use ustate::{u_disk, u_state_probe, u_state_pushforward, UDisk, UStateConfig, UStateProbe};
pub use volume::{
    birkhoff_log_det, borel_cantelli_decay, sup_log_det, uniform_samples, volume_nonexpansion_check, wilson_lower,
    BcRow, BcTable, VolumeReport,
};

use std::f64::consts::TAU;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{SolenoidModel, SolidTorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trig {
    Cos,
    Sin,
}

/// `trig(2π·freq·θ) · x1^q · x2^r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Observable {
    pub freq: u32,
    pub trig: Trig,
    pub q: u32,
    pub r: u32,
}

/// Trigonometric-monomial test functions on the solid torus. Components are
/// ordered by frequency, then cos before sin, then monomials by total degree
/// with the `x1` power descending. Component 0 is the constant 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableDictionary {
    max_freq: u32,
    max_degree: u32,
    monomials: Vec<(u32, u32)>,
    components: Vec<Observable>,
}

impl Default for ObservableDictionary {
    fn default() -> Self {
        Self::new(3, 2)
    }
}

impl ObservableDictionary {
    pub fn new(max_freq: u32, max_degree: u32) -> Self {
        let monomials: Vec<(u32, u32)> =
            (0..=max_degree).flat_map(|d| (0..=d).rev().map(move |q| (q, d - q))).collect();
        let mut components = Vec::new();
        for freq in 0..=max_freq {
            for trig in [Trig::Cos, Trig::Sin] {
                if freq == 0 && trig == Trig::Sin {
                    continue;
                }
                components.extend(monomials.iter().map(|&(q, r)| Observable { freq, trig, q, r }));
            }
        }
        Self { max_freq, max_degree, monomials, components }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> &[Observable] {
        &self.components
    }

    pub fn max_freq(&self) -> u32 {
        self.max_freq
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn evaluate(&self, p: &SolidTorusPoint, out: &mut [f64]) {
        let (s, c) = (TAU * p.theta).sin_cos();
        self.evaluate_trig(p, s, c, out, 1.0);
    }

    /// Adds `weight · φ_j(p)` to `out[j]`, given `sin 2πθ` and `cos 2πθ`.
    #[inline]
    pub fn evaluate_trig(&self, p: &SolidTorusPoint, s1: f64, c1: f64, out: &mut [f64], weight: f64) {
        debug_assert_eq!(out.len(), self.len());
        const MAX_MONOMIALS: usize = 64;
        let nm = self.monomials.len();
        if nm > MAX_MONOMIALS {
            return self.evaluate_slow(p, out, weight);
        }
        let mut buf = [0.0; MAX_MONOMIALS];
        let mono = &mut buf[..nm];
        for (m, &(q, r)) in mono.iter_mut().zip(&self.monomials) {
            *m = weight * p.fiber[0].powi(q as i32) * p.fiber[1].powi(r as i32);
        }
        let (mut cm, mut sm) = (1.0f64, 0.0f64);
        let mut idx = 0;
        for freq in 0..=self.max_freq {
            if freq > 0 {
                let next_c = cm * c1 - sm * s1;
                let next_s = sm * c1 + cm * s1;
                cm = next_c.clamp(-1.0, 1.0);
                sm = next_s.clamp(-1.0, 1.0);
            }
            for t in [cm, sm].iter().take(if freq == 0 { 1 } else { 2 }) {
                for m in mono.iter() {
                    out[idx] += t * m;
                    idx += 1;
                }
            }
        }
    }

    fn evaluate_slow(&self, p: &SolidTorusPoint, out: &mut [f64], weight: f64) {
        for (o, ob) in out.iter_mut().zip(&self.components) {
            let (s, c) = (TAU * ob.freq as f64 * p.theta).sin_cos();
            let t = if ob.trig == Trig::Cos { c } else { s };
            *o += weight * t * p.fiber[0].powi(ob.q as i32) * p.fiber[1].powi(ob.r as i32);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SignatureOrigin {
    Point(SolidTorusPoint),
    /// Push-forward of a u-curve seeded at `theta0`.
    Disk {
        theta0: f64,
        fiber: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureSignature {
    pub values: Vec<f64>,
    pub n: usize,
    pub origin: SignatureOrigin,
}

impl MeasureSignature {
    pub fn sup_distance(&self, other: &Self) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn reject_fixture(model: &SolenoidModel) -> Result<()> {
    if model.is_fixture() {
        return Err(Error::FixtureExcluded);
    }
    Ok(())
}

/// Runs `n` steps from `p`, adding every visited point's observables into
/// `acc` with the given weight, and returns the point reached.
#[inline]
pub(crate) fn accumulate_orbit(
    model: &SolenoidModel,
    dict: &ObservableDictionary,
    mut p: SolidTorusPoint,
    n: usize,
    acc: &mut [f64],
    weight: f64,
) -> SolidTorusPoint {
    for _ in 0..n {
        let (s, c) = (TAU * p.theta).sin_cos();
        dict.evaluate_trig(&p, s, c, acc, weight);
        p = model.eval_trig(&p, s, c);
    }
    p
}

/// Birkhoff averages of the dictionary over `f^0 p0, …, f^{n-1} p0`.
pub fn signature(
    model: &SolenoidModel,
    p0: &SolidTorusPoint,
    n: usize,
    dict: &ObservableDictionary,
) -> Result<MeasureSignature> {
    signature_after_burn_in(model, p0, 0, n, dict)
}

/// As [`signature`], starting the average at `f^burn_in p0`. The origin
/// recorded is still `p0`.
pub fn signature_after_burn_in(
    model: &SolenoidModel,
    p0: &SolidTorusPoint,
    burn_in: usize,
    n: usize,
    dict: &ObservableDictionary,
) -> Result<MeasureSignature> {
    reject_fixture(model)?;
    if n == 0 {
        return Err(Error::param("n", "need at least one iterate"));
    }
    let mut p = *p0;
    for _ in 0..burn_in {
        p = model.eval(&p);
    }
    let mut acc = vec![0.0; dict.len()];
    accumulate_orbit(model, dict, p, n, &mut acc, 1.0);
    let values = acc.into_iter().map(|v| (v / n as f64).clamp(-1.0, 1.0)).collect();
    Ok(MeasureSignature { values, n, origin: SignatureOrigin::Point(*p0) })
}
