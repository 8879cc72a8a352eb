use serde::Serialize;

use super::{reject_fixture, signature, sup_distance, MeasureSignature, ObservableDictionary};
use crate::cocycle::{lyapunov_spectrum, LyapunovConfig};
use crate::error::{Error, Result};
use crate::model::{SolenoidModel, SolidTorusPoint};
use crate::{par, rng};

/// Fractional position of grid `θ` values inside their cell.
pub const THETA_CELL_OFFSET: f64 = 0.618_033_988_749_894_8;

/// Initial conditions: a `slice × slice` grid on `{x2 = 0}` followed by
/// `random_points` uniform points of the solid torus drawn from streams
/// `(seed, i)`. Grid `x1` values are cell centers. Grid `θ` values sit at
/// the golden fraction of each cell instead of its center: cell centers of a
/// power-of-two grid are dyadic rationals, which the base map sends onto
/// periodic orbits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusGrid {
    pub slice: usize,
    pub random_points: usize,
    pub seed: u64,
}

impl CensusGrid {
    pub fn slice(slice: usize) -> Self {
        Self { slice, random_points: 0, seed: 0 }
    }

    pub fn len(&self) -> usize {
        self.slice * self.slice + self.random_points
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<SolidTorusPoint> {
        let g = self.slice as f64;
        let mut pts = Vec::with_capacity(self.len());
        for i in 0..self.slice {
            for j in 0..self.slice {
                let theta = (i as f64 + THETA_CELL_OFFSET) / g;
                let x1 = -1.0 + (2 * j + 1) as f64 / g;
                pts.push(SolidTorusPoint::from_parts(theta, [x1, 0.0]));
            }
        }
        pts.extend((0..self.random_points).map(|i| rng::uniform_point(&mut rng::rng_stream(self.seed, i as u64))));
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CensusConfig {
    /// Birkhoff length per initial condition.
    pub n: usize,
    /// Sup-norm linkage threshold.
    pub threshold: f64,
    /// Smallest component counted as a cluster; `None` picks
    /// `max(2, ⌈0.005·M⌉)` for `M` grid points.
    pub min_members: Option<usize>,
    pub lyapunov: LyapunovConfig,
}

impl Default for CensusConfig {
    fn default() -> Self {
        Self { n: 100_000, threshold: 0.05, min_members: None, lyapunov: LyapunovConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cluster {
    pub id: usize,
    /// Grid index of the median-norm member.
    pub representative: usize,
    pub representative_point: SolidTorusPoint,
    pub signature: Vec<f64>,
    pub members: usize,
    pub basin_fraction: f64,
    /// Largest pairwise sup distance among members.
    pub diameter: f64,
    pub center_exponents: [f64; 2],
    pub exponent_sum: f64,
    /// Birkhoff average of `log|det Df|` along the representative's orbit.
    pub volume_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Assignment {
    pub grid_id: usize,
    pub point: SolidTorusPoint,
    pub cluster: Option<usize>,
    /// Distance to the assigned cluster's representative signature, or to the
    /// nearest representative for unclustered points (`NaN` if none exist).
    pub sig_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusResult {
    pub clusters: Vec<Cluster>,
    pub assignments: Vec<Assignment>,
    pub grid: CensusGrid,
    pub threshold: f64,
    pub n: usize,
    pub min_members: usize,
    pub unclustered: usize,
    /// More clusters than a tenth of the grid.
    pub unresolved: bool,
}

impl CensusResult {
    pub fn basin_total(&self) -> f64 {
        self.clusters.iter().map(|c| c.basin_fraction).sum()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

pub fn physical_measure_census(
    model: &SolenoidModel,
    grid: &CensusGrid,
    cfg: &CensusConfig,
    dict: &ObservableDictionary,
) -> Result<CensusResult> {
    reject_fixture(model)?;
    if grid.is_empty() {
        return Err(Error::param("grid", "no initial conditions"));
    }
    if !(cfg.threshold > 0.0) {
        return Err(Error::param("threshold", "must be positive"));
    }
    let points = grid.points();
    let m = points.len();
    let sigs: Vec<MeasureSignature> = par::try_map_indexed(m, |i| signature(model, &points[i], cfg.n, dict))?;

    let mut uf = UnionFind((0..m).collect());
    for i in 0..m {
        for j in (i + 1)..m {
            if sup_distance(&sigs[i].values, &sigs[j].values) <= cfg.threshold {
                uf.union(i, j);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..m {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let min_members = cfg.min_members.unwrap_or_else(|| 2.max((0.005 * m as f64).ceil() as usize));
    let mut comps: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() >= min_members).collect();
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));

    let reps: Vec<usize> = comps
        .iter()
        .map(|members| {
            let mut by_norm: Vec<usize> = members.clone();
            by_norm.sort_by(|&a, &b| sigs[a].sup_norm().total_cmp(&sigs[b].sup_norm()).then(a.cmp(&b)));
            by_norm[(by_norm.len() - 1) / 2]
        })
        .collect();
    let spectra = par::try_map_indexed(reps.len(), |c| lyapunov_spectrum(model, &points[reps[c]], &cfg.lyapunov))?;

    let mut owner = vec![None; m];
    let clusters: Vec<Cluster> = comps
        .iter()
        .enumerate()
        .map(|(id, members)| {
            for &i in members {
                owner[i] = Some(id);
            }
            let mut diameter: f64 = 0.0;
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    diameter = diameter.max(sup_distance(&sigs[i].values, &sigs[j].values));
                }
            }
            let est = &spectra[id];
            Cluster {
                id,
                representative: reps[id],
                representative_point: points[reps[id]],
                signature: sigs[reps[id]].values.clone(),
                members: members.len(),
                basin_fraction: members.len() as f64 / m as f64,
                diameter,
                center_exponents: est.center(),
                exponent_sum: est.sum(),
                volume_integral: est.mean_log_det,
            }
        })
        .collect();

    let assignments: Vec<Assignment> = (0..m)
        .map(|i| {
            let (cluster, sig_distance) = match owner[i] {
                Some(c) => (Some(c), sup_distance(&sigs[i].values, &clusters[c].signature)),
                None => (
                    None,
                    clusters.iter().map(|c| sup_distance(&sigs[i].values, &c.signature)).fold(f64::NAN, f64::min),
                ),
            };
            Assignment { grid_id: i, point: points[i], cluster, sig_distance }
        })
        .collect();

    let unclustered = owner.iter().filter(|o| o.is_none()).count();
    Ok(CensusResult {
        unresolved: clusters.len() * 10 > m,
        clusters,
        assignments,
        grid: *grid,
        threshold: cfg.threshold,
        n: cfg.n,
        min_members,
        unclustered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = CensusGrid { slice: 4, random_points: 3, seed: 9 };
        let pts = g.points();
        assert_eq!(pts.len(), 19);
        assert_eq!(pts[0].theta, THETA_CELL_OFFSET / 4.0);
        assert_eq!(pts[0].fiber, [-0.75, 0.0]);
        assert_eq!(pts[5].fiber, [-0.25, 0.0]);
        assert!(pts[16..].iter().all(|p| p.fiber_norm() <= 1.0));
    }

    #[test]
    fn affine_small_census_single_cluster() {
        let cfg = CensusConfig { n: 20_000, lyapunov: LyapunovConfig::default().with_n(20_000), ..Default::default() };
        let res =
            physical_measure_census(&SolenoidModel::default_affine(), &CensusGrid::slice(8), &cfg, &Default::default())
                .unwrap();
        assert_eq!(res.clusters.len(), 1);
        let c = &res.clusters[0];
        assert!(c.diameter <= 0.05);
        assert!((c.exponent_sum - c.volume_integral).abs() < 1e-6);
        assert!(res.basin_total() <= 1.0);
    }
}
