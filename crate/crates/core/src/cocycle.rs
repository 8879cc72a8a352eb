//! Tangent frames carried along orbits: Lyapunov spectra by periodic
//! re-orthonormalization, the unstable direction by forward push, and volume
//! distortion of the derivative on subspaces.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelConstants, SolenoidModel, SolidTorusPoint};
use crate::rng;
use crate::sum::CompensatedSum;

/// Smallest admissible Gram–Schmidt pivot.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Smallest admissible Gram determinant for a subspace basis.
pub const GRAM_FLOOR: f64 = 1e-14;

/// Cofactor matrix, so that `(J a) × (J b) = cof(J) (a × b)` for all `a, b`.
pub fn cofactor(j: &Matrix3<f64>) -> Matrix3<f64> {
    Matrix3::from_fn(|r, c| {
        let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
        let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
        j[(r1, c1)] * j[(r2, c2)] - j[(r1, c2)] * j[(r2, c1)]
    })
}

/// A point with an orthonormal tangent frame (columns) and the accumulated
/// log-stretch of each frame vector.
///
/// Between re-orthonormalizations only the first frame vector (pushed by
/// `Df`) and the normal of the first two (pushed by `cof Df`) are carried.
/// The third stretch is recovered from `log|det Df|`, so the three logs of a
/// block always sum to the block's log-determinant, however ill-conditioned
/// the block product is.
#[derive(Debug, Clone)]
pub struct TangentState {
    pub point: SolidTorusPoint,
    /// Frame at the last re-orthonormalization.
    pub frame: Matrix3<f64>,
    pub log_stretch: [CompensatedSum; 3],
    lead: Vector3<f64>,
    normal: Vector3<f64>,
    block_log_det: CompensatedSum,
}

impl TangentState {
    /// `frame` must be orthonormal.
    pub fn new(point: SolidTorusPoint, frame: Matrix3<f64>) -> Self {
        let lead = frame.column(0).into_owned();
        let normal = lead.cross(&frame.column(1));
        Self { point, frame, log_stretch: Default::default(), lead, normal, block_log_det: CompensatedSum::new() }
    }

    /// Moves the point one iterate and transports the carried vectors.
    /// Returns `log|det Df|` at the departure point.
    #[inline]
    pub fn advance(&mut self, model: &SolenoidModel) -> f64 {
        let (next, j) = model.step(&self.point);
        self.lead = j.0 * self.lead;
        self.normal = cofactor(&j.0) * self.normal;
        self.point = next;
        let d = j.det().abs().ln();
        self.block_log_det.add(d);
        d
    }

    pub fn reorthonormalize(&mut self, step: usize) -> Result<[f64; 3]> {
        let r1 = self.lead.norm();
        let area = self.normal.norm();
        for pivot in [r1, area] {
            if !(pivot > PIVOT_FLOOR && pivot.is_finite()) {
                return Err(Error::FrameDegeneracy { step, pivot });
            }
        }
        let q1 = self.lead / r1;
        let nu = self.normal / area;
        let q2 = nu.cross(&q1).normalize();
        let q3 = q1.cross(&q2);
        let logs = [r1.ln(), area.ln() - r1.ln(), self.block_log_det.value() - area.ln()];
        for (acc, l) in self.log_stretch.iter_mut().zip(logs) {
            acc.add(l);
        }
        self.frame = Matrix3::from_columns(&[q1, q2, q3]);
        self.lead = q1;
        self.normal = q3;
        self.block_log_det = CompensatedSum::new();
        Ok(logs)
    }

    pub fn totals(&self) -> [f64; 3] {
        self.log_stretch.map(|s| s.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FrameInit {
    Identity,
    /// Random orthonormal frame drawn from stream `(seed, 0)`.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovConfig {
    pub n: usize,
    pub qr_period: usize,
    pub burn_in: usize,
    pub frame: FrameInit,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { n: 100_000, qr_period: 8, burn_in: 1000, frame: FrameInit::Identity }
    }
}

impl LyapunovConfig {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1000 {
            return Err(Error::param("n", format!("need >= 1000 iterates, got {}", self.n)));
        }
        if !(1..=32).contains(&self.qr_period) {
            return Err(Error::param("qr_period", format!("must lie in [1, 32], got {}", self.qr_period)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovEstimate {
    /// Sorted descending, nats per iterate.
    pub exponents: [f64; 3],
    pub n: usize,
    pub qr_period: usize,
    /// Change of each exponent over the last 10% of the run.
    pub residual: [f64; 3],
    /// Birkhoff average of `log|det Df|` along the same orbit.
    pub mean_log_det: f64,
}

impl LyapunovEstimate {
    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// The two smallest exponents.
    pub fn center(&self) -> [f64; 2] {
        [self.exponents[1], self.exponents[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub exponents: [f64; 3],
    /// Largest change of a sorted exponent since the previous row.
    pub residual: f64,
}

pub fn lyapunov_spectrum(
    model: &SolenoidModel,
    p0: &SolidTorusPoint,
    cfg: &LyapunovConfig,
) -> Result<LyapunovEstimate> {
    lyapunov_trace(model, p0, cfg, 0).map(|(est, _)| est)
}

fn sorted_desc(v: [f64; 3]) -> [usize; 3] {
    let mut idx = [0, 1, 2];
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
    idx
}

/// Runs the frame transport and additionally records `checkpoints` evenly
/// spaced running estimates (at the first re-orthonormalization at or past
/// each target).
pub fn lyapunov_trace(
    model: &SolenoidModel,
    p0: &SolidTorusPoint,
    cfg: &LyapunovConfig,
    checkpoints: usize,
) -> Result<(LyapunovEstimate, Vec<TraceRow>)> {
    cfg.validate()?;
    let frame = match cfg.frame {
        FrameInit::Identity => Matrix3::identity(),
        FrameInit::Random { seed } => rng::random_frame(&mut rng::rng_stream(seed, 0)),
    };
    let mut state = TangentState::new(*p0, frame);
    let q = cfg.qr_period;

    for step in 0..cfg.burn_in {
        state.advance(model);
        if (step + 1) % q == 0 || step + 1 == cfg.burn_in {
            state.reorthonormalize(step)?;
        }
    }
    state.log_stretch = Default::default();

    let mut log_det = CompensatedSum::new();
    let window_start = cfg.n - cfg.n / 10;
    let mut window_estimate: Option<[f64; 3]> = None;
    let mut rows = Vec::with_capacity(checkpoints);
    let mut next_checkpoint = 1;
    let mut prev_sorted: Option<[f64; 3]> = None;

    for step in 0..cfg.n {
        log_det.add(state.advance(model));
        let done = step + 1;
        if done % q != 0 && done != cfg.n {
            continue;
        }
        state.reorthonormalize(cfg.burn_in + step)?;
        let running = state.totals().map(|t| t / done as f64);
        if window_estimate.is_none() && done >= window_start {
            window_estimate = Some(running);
        }
        while checkpoints > 0 && next_checkpoint <= checkpoints && done * checkpoints >= next_checkpoint * cfg.n {
            let order = sorted_desc(running);
            let sorted = order.map(|i| running[i]);
            let residual = match prev_sorted {
                Some(p) => (0..3).map(|i| (sorted[i] - p[i]).abs()).fold(0.0, f64::max),
                None => f64::NAN,
            };
            if rows.last().is_none_or(|r: &TraceRow| r.n != done) {
                rows.push(TraceRow { n: done, exponents: sorted, residual });
                prev_sorted = Some(sorted);
            }
            next_checkpoint += 1;
        }
    }

    let raw = state.totals().map(|t| t / cfg.n as f64);
    let window = window_estimate.unwrap_or(raw);
    let order = sorted_desc(raw);
    Ok((
        LyapunovEstimate {
            exponents: order.map(|i| raw[i]),
            n: cfg.n,
            qr_period: q,
            residual: order.map(|i| (raw[i] - window[i]).abs()),
            mean_log_det: log_det.value() / cfg.n as f64,
        },
        rows,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnstableDirection {
    pub base: SolidTorusPoint,
    pub e_u: Vector3<f64>,
    pub push_length: usize,
    /// `‖normalize(Df(base)·e_u) − e_u(f(base))‖`, up to sign.
    pub invariance_residual: f64,
}

/// `ceil(log tol / log ratio)`.
pub fn push_length(tol: f64, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param("ratio", format!("contraction ratio must lie in (0, 1), got {ratio}")));
    }
    Ok(((tol.ln() / ratio.ln()).ceil() as usize).max(1))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::param("tol", format!("must lie in (0, 1e-4], got {tol}")));
    }
    Ok(())
}

#[inline]
fn push_axis<'a>(model: &SolenoidModel, points: impl Iterator<Item = &'a SolidTorusPoint>) -> Vector3<f64> {
    let mut v = Vector3::x();
    for p in points {
        v = model.jacobian(p).0 * v;
        v /= v.norm();
    }
    v
}

/// Unstable direction at `p`, obtained by pushing the θ-axis forward along a
/// backward orbit segment reconstructed with the branch inverse. The segment
/// length is `ceil(log tol / log a)`.
pub fn unstable_direction(
    model: &SolenoidModel,
    p: &SolidTorusPoint,
    tol: f64,
    constants: &ModelConstants,
) -> Result<UnstableDirection> {
    check_tol(tol)?;
    let m = push_length(tol, constants.a)?;
    let mut segment = vec![*p; m];
    let mut cur = *p;
    for slot in segment.iter_mut().rev() {
        cur = model.pseudo_preimage(&cur);
        *slot = cur;
    }
    unstable_direction_on_orbit(model, &segment, p, tol)
}

/// Same as [`unstable_direction`] with the backward segment supplied by the
/// caller: `segment[i + 1] = f(segment[i])` and `f(segment.last()) = p`.
pub fn unstable_direction_on_orbit(
    model: &SolenoidModel,
    segment: &[SolidTorusPoint],
    p: &SolidTorusPoint,
    tol: f64,
) -> Result<UnstableDirection> {
    check_tol(tol)?;
    if segment.is_empty() {
        return Err(Error::param("segment", "need at least one backward point"));
    }
    let e_u = push_axis(model, segment.iter());
    let mut image = model.jacobian(p).0 * e_u;
    image /= image.norm();
    let next = push_axis(model, segment[1..].iter().chain(std::iter::once(p)));
    let invariance_residual = (image - next).norm().min((image + next).norm());
    let limit = 10.0 * tol;
    if !(invariance_residual <= limit) {
        return Err(Error::NotConverged { residual: invariance_residual, limit });
    }
    Ok(UnstableDirection { base: *p, e_u, push_length: segment.len(), invariance_residual })
}

/// Unsigned volume distortion of `j` on the span of `basis` (1 to 3 vectors):
/// `sqrt(det(BᵀJᵀJB) / det(BᵀB))`. Gram determinants are evaluated as squared
/// lengths, cross-product norms or squared determinants by dimension.
pub fn det_on_subspace(j: &Matrix3<f64>, basis: &[Vector3<f64>]) -> Result<f64> {
    let (vol_b, vol_jb) = match basis {
        [a] => (a.norm(), (j * a).norm()),
        [a, b] => (a.cross(b).norm(), (j * a).cross(&(j * b)).norm()),
        [a, b, c] => {
            let m = Matrix3::from_columns(&[*a, *b, *c]);
            (m.determinant().abs(), (j * m).determinant().abs())
        }
        _ => return Err(Error::param("basis", format!("need 1 to 3 vectors, got {}", basis.len()))),
    };
    let gram = vol_b * vol_b;
    if !(gram > GRAM_FLOOR) {
        return Err(Error::DegenerateBasis { gram });
    }
    Ok(vol_jb / vol_b)
}

/// Orthonormalizes a basis in place (modified Gram–Schmidt, two passes).
pub fn orthonormalize(basis: &mut [Vector3<f64>]) -> Result<()> {
    for j in 0..basis.len() {
        let mut v = basis[j];
        for _ in 0..2 {
            for q in &basis[..j] {
                v -= q * q.dot(&v);
            }
        }
        let n = v.norm();
        if !(n * n > GRAM_FLOOR) {
            return Err(Error::DegenerateBasis { gram: n * n });
        }
        basis[j] = v / n;
    }
    Ok(())
}

/// Per-step `log det Df|` along the forward transport of the subspace spanned
/// by `basis` at `p`, for `n` steps.
pub fn cocycle_det_chain(
    model: &SolenoidModel,
    p: &SolidTorusPoint,
    basis: &[Vector3<f64>],
    n: usize,
) -> Result<Vec<f64>> {
    let mut b = basis.to_vec();
    let mut point = *p;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let (next, j) = model.step(&point);
        out.push(det_on_subspace(&j.0, &b)?.ln());
        for v in b.iter_mut() {
            *v = j.0 * *v;
        }
        orthonormalize(&mut b)?;
        point = next;
    }
    Ok(out)
}
