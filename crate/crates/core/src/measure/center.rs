use serde::Serialize;

use super::{CensusResult, UStateProbe};
use crate::certify::PveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Violated,
    /// `ĉ_N ≤ 0`: the expansion hypothesis fails and nothing is claimed.
    HypothesisNotSatisfied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusterCheck {
    pub cluster: usize,
    pub center_exponents: [f64; 2],
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CenterExponentReport {
    pub verdict: Verdict,
    pub c_hat_per_iterate: f64,
    /// `-ĉ_N/N + tol`.
    pub bound: f64,
    pub tol: f64,
    pub clusters: Vec<ClusterCheck>,
    /// Both center exponents negative, per u-state probe.
    pub ustate_negative: Vec<bool>,
}

impl CenterExponentReport {
    pub fn ustates_pass(&self) -> bool {
        self.ustate_negative.iter().all(|&b| b)
    }
}

pub fn center_exponent_check(
    census: &CensusResult,
    pve: &PveReport,
    ustates: &[UStateProbe],
    tol: f64,
) -> CenterExponentReport {
    let c = pve.c_hat_per_iterate;
    let bound = -c + tol;
    let clusters: Vec<ClusterCheck> = census
        .clusters
        .iter()
        .map(|cl| ClusterCheck {
            cluster: cl.id,
            center_exponents: cl.center_exponents,
            bound,
            pass: cl.center_exponents.iter().all(|&e| e < bound),
        })
        .collect();
    let ustate_negative = ustates.iter().map(|u| u.center_exponents.iter().all(|&e| e < 0.0)).collect();
    let verdict = if !pve.certified() {
        Verdict::HypothesisNotSatisfied
    } else if clusters.iter().all(|c| c.pass) {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    CenterExponentReport { verdict, c_hat_per_iterate: c, bound, tol, clusters, ustate_negative }
}
