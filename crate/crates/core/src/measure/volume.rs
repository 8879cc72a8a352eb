use serde::Serialize;

use super::reject_fixture;
use crate::error::{Error, Result};
use crate::model::{ConstantsGrid, SolenoidModel, SolidTorusPoint};
use crate::sum::CompensatedSum;
use crate::{par, rng};

/// `(1/n) Σ_{i<n} log|det Df(f^i p)|`.
pub fn birkhoff_log_det(model: &SolenoidModel, p: &SolidTorusPoint, n: usize) -> f64 {
    let mut acc = CompensatedSum::new();
    let mut x = *p;
    for _ in 0..n {
        let (next, j) = model.step(&x);
        acc.add(j.det().abs().ln());
        x = next;
    }
    acc.value() / n as f64
}

/// Running averages at each length in `n_list` (increasing) along one orbit.
fn birkhoff_log_det_prefixes(model: &SolenoidModel, p: &SolidTorusPoint, n_list: &[usize]) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    let mut x = *p;
    let mut out = Vec::with_capacity(n_list.len());
    let mut done = 0;
    for &n in n_list {
        while done < n {
            let (next, j) = model.step(&x);
            acc.add(j.det().abs().ln());
            x = next;
            done += 1;
        }
        out.push(acc.value() / n as f64);
    }
    out
}

/// `count` points uniform in normalized volume, point `i` from stream `(seed, i)`.
pub fn uniform_samples(count: usize, seed: u64) -> Vec<SolidTorusPoint> {
    (0..count).map(|i| rng::uniform_point(&mut rng::rng_stream(seed, i as u64))).collect()
}

/// Grid maximum of `log|det Df|` over the solid torus.
pub fn sup_log_det(model: &SolenoidModel, grid: &ConstantsGrid) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..grid.n_theta {
        let theta = i as f64 / grid.n_theta as f64;
        for r in 0..=grid.n_radial {
            let rad = r as f64 / grid.n_radial as f64;
            for a in 0..grid.n_angular {
                let (s, c) = (std::f64::consts::TAU * a as f64 / grid.n_angular as f64).sin_cos();
                let p = SolidTorusPoint::from_parts(theta, [rad * c, rad * s]);
                best = best.max(model.jacobian(&p).det().abs().ln());
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeReport {
    pub averages: Vec<f64>,
    pub max_average: f64,
    pub violators: usize,
    pub n: usize,
    pub tol: f64,
}

impl VolumeReport {
    pub fn pass(&self) -> bool {
        self.violators == 0
    }
}

pub fn volume_nonexpansion_check(
    model: &SolenoidModel,
    points: &[SolidTorusPoint],
    n: usize,
    tol: f64,
) -> Result<VolumeReport> {
    reject_fixture(model)?;
    if n == 0 {
        return Err(Error::param("n", "need at least one iterate"));
    }
    let averages = par::map_indexed(points.len(), |i| birkhoff_log_det(model, &points[i], n));
    let max_average = averages.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let violators = averages.iter().filter(|&&a| a > tol).count();
    Ok(VolumeReport { averages, max_average, violators, n, tol })
}

/// Lower end of the 95% Wilson score interval for `successes` out of `m`.
pub fn wilson_lower(successes: usize, m: usize) -> f64 {
    const Z: f64 = 1.959_963_984_540_054;
    if successes == 0 {
        return 0.0;
    }
    let m = m as f64;
    let p = successes as f64 / m;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / m;
    let center = (p + z2 / (2.0 * m)) / denom;
    let half = Z / denom * (p * (1.0 - p) / m + z2 / (4.0 * m * m)).sqrt();
    (center - half).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcRow {
    pub n: usize,
    pub r: f64,
    pub fraction: f64,
    /// `fraction` minus the Wilson lower limit.
    pub ci_radius: f64,
    /// `exp(-n r)`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcTable {
    pub rows: Vec<BcRow>,
    pub m_samples: usize,
    pub seed: u64,
    pub pass: bool,
}

/// Tail fractions of `(1/n) Σ log|det Df| > r` over uniform samples, one
/// orbit per sample shared across all `n`.
pub fn borel_cantelli_decay(
    model: &SolenoidModel,
    r: f64,
    n_list: &[usize],
    m_samples: usize,
    seed: u64,
) -> Result<BcTable> {
    reject_fixture(model)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::param("r", format!("must lie in (0, 1], got {r}")));
    }
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("n_list", "must be non-empty, positive and strictly increasing"));
    }
    if m_samples == 0 {
        return Err(Error::param("m_samples", "need at least one sample"));
    }
    let pts = uniform_samples(m_samples, seed);
    let avgs = par::map_indexed(m_samples, |i| birkhoff_log_det_prefixes(model, &pts[i], n_list));
    let rows: Vec<BcRow> = n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let hits = avgs.iter().filter(|a| a[k] > r).count();
            let fraction = hits as f64 / m_samples as f64;
            let ci_radius = fraction - wilson_lower(hits, m_samples);
            let bound = (-(n as f64) * r).exp();
            BcRow { n, r, fraction, ci_radius, bound, pass: fraction - ci_radius <= bound }
        })
        .collect();
    let pass = rows.iter().all(|row| row.pass);
    Ok(BcTable { rows, m_samples, seed, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_average_is_constant() {
        let model = SolenoidModel::default_affine();
        let rep = volume_nonexpansion_check(&model, &uniform_samples(20, 3), 10_000, 0.01).unwrap();
        let target = (3.0f64 * 0.16).ln();
        assert!(rep.averages.iter().all(|a| (a - target).abs() < 1e-12));
        assert_eq!(rep.violators, 0);
    }

    #[test]
    fn wilson_limits() {
        assert_eq!(wilson_lower(0, 100), 0.0);
        let lo = wilson_lower(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3, "{lo}");
    }

    #[test]
    fn affine_bc_fraction_zero() {
        let t = borel_cantelli_decay(&SolenoidModel::default_affine(), 0.1, &[1, 5, 10], 200, 1).unwrap();
        assert!(t.pass);
        assert!(t.rows.iter().all(|r| r.fraction == 0.0));
    }

    #[test]
    fn r_above_sup_gives_zero_at_n1() {
        let model = SolenoidModel::default_anisotropic();
        let sup = sup_log_det(&model, &ConstantsGrid::default());
        if sup < 1.0 {
            let r = (sup + 0.05).clamp(1e-3, 1.0);
            let t = borel_cantelli_decay(&model, r, &[1], 2000, 4).unwrap();
            assert_eq!(t.rows[0].fraction, 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = SolenoidModel::default_affine();
        assert!(borel_cantelli_decay(&m, 0.0, &[1], 10, 1).is_err());
        assert!(borel_cantelli_decay(&m, 0.1, &[5, 5], 10, 1).is_err());
    }
}
