//! Solid-torus phase space and the generalized solenoid family.
//!
//! Points are `(θ, x)` with `θ` measured in turns (`[0, 1)`) and `x` in the
//! closed unit disk. Every solenoid in this module has the skew form
//! `(θ, x) ↦ (kθ mod 1, c(θ) + L(θ)·x)`: the fiber map is affine in `x`, so the
//! whole model is described by [`FiberMap`], the pair `(c, L)` together with its
//! `θ`-derivatives.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce an angle in turns into `[0, 1)`.
#[inline]
pub fn reduce_turns(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolidTorusPoint {
    pub theta: f64,
    pub fiber: [f64; 2],
}

impl SolidTorusPoint {
    /// Slack allowed on the unit-disk constraint for points built from
    /// computed coordinates.
    pub const DISK_SLACK: f64 = 1e-12;

    pub fn new(theta: f64, x1: f64, x2: f64) -> Result<Self> {
        let p = Self::from_parts(theta, [x1, x2]);
        let norm = p.fiber_norm();
        if !(norm <= 1.0 + Self::DISK_SLACK) || !theta.is_finite() {
            return Err(Error::PointOutsideTorus { norm });
        }
        Ok(p)
    }

    /// Builds a point without checking the disk constraint. `theta` is still
    /// reduced mod 1.
    #[inline]
    pub fn from_parts(theta: f64, fiber: [f64; 2]) -> Self {
        Self { theta: reduce_turns(theta), fiber }
    }

    #[inline]
    pub fn fiber_norm(&self) -> f64 {
        self.fiber[0].hypot(self.fiber[1])
    }

    #[inline]
    pub fn fiber_vec(&self) -> Vector2<f64> {
        Vector2::new(self.fiber[0], self.fiber[1])
    }
}

/// Derivative of a model in coordinates `(θ, x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian3(pub Matrix3<f64>);

impl Jacobian3 {
    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    /// The 2×2 fiber block `∂h/∂x`.
    pub fn fiber_block(&self) -> Matrix2<f64> {
        self.0.fixed_view::<2, 2>(1, 1).into_owned()
    }

    /// The shear column `∂h/∂θ`.
    pub fn shear(&self) -> Vector2<f64> {
        self.0.fixed_view::<2, 1>(1, 0).into_owned()
    }
}

/// The fiber map `x ↦ center + linear·x` at one base angle, together with its
/// derivatives with respect to `θ` (in turns).
#[derive(Debug, Clone, Copy)]
pub struct FiberMap {
    pub center: Vector2<f64>,
    pub linear: Matrix2<f64>,
    pub d_center: Vector2<f64>,
    pub d_linear: Matrix2<f64>,
}

impl FiberMap {
    #[inline]
    pub fn apply(&self, x: &Vector2<f64>) -> Vector2<f64> {
        self.center + self.linear * x
    }

    #[inline]
    pub fn shear_at(&self, x: &Vector2<f64>) -> Vector2<f64> {
        self.d_center + self.d_linear * x
    }
}

/// `h_θ(x) = λx + ε(cos 2πθ, sin 2πθ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineSolenoid {
    k: u32,
    lambda: f64,
    epsilon: f64,
}

impl AffineSolenoid {
    pub fn new(k: u32, lambda: f64, epsilon: f64) -> Result<Self> {
        check_degree(k)?;
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::param("lambda", format!("must lie in (0, 1), got {lambda}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(Self { k, lambda, epsilon })
    }

    pub fn k(&self) -> u32 {
        self.k
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// `h_θ(x) = ε(cos 2πθ, sin 2πθ) + R(2πβθ)·diag(μ + ρ cos 2πθ, σ2)·x`.
///
/// `β` must be an integer for the map to be well defined on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnisotropicSolenoid {
    k: u32,
    mu: f64,
    rho: f64,
    sigma2: f64,
    epsilon: f64,
    beta: i32,
}

impl AnisotropicSolenoid {
    pub fn new(k: u32, mu: f64, rho: f64, sigma2: f64, epsilon: f64, beta: i32) -> Result<Self> {
        check_degree(k)?;
        if !(mu.is_finite() && rho.is_finite() && mu - rho.abs() > 0.0) {
            return Err(Error::param("mu", format!("need mu > |rho| > -inf, got mu={mu}, rho={rho}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("must be positive, got {sigma2}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::param("epsilon", format!("must be positive, got {epsilon}")));
        }
        Ok(Self { k, mu, rho, sigma2, epsilon, beta })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn sigma_max(&self) -> f64 {
        (self.mu + self.rho.abs()).max(self.sigma2)
    }

    pub fn sigma_min(&self) -> f64 {
        (self.mu - self.rho.abs()).min(self.sigma2)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// A constant matrix cocycle over a frozen base point. Used only as a
/// linear-algebra oracle: `eval` is the identity, `jacobian` is the matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFixture {
    matrix: Matrix3<f64>,
}

impl LinearFixture {
    pub fn new(matrix: Matrix3<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) || matrix.determinant() == 0.0 {
            return Err(Error::param("matrix", "must be finite and nonsingular"));
        }
        Ok(Self { matrix })
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::from(d)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }
}

fn check_degree(k: u32) -> Result<()> {
    if k < 3 {
        return Err(Error::param("k", format!("must be an integer >= 3, got {k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolenoidModel {
    Affine(AffineSolenoid),
    Anisotropic(AnisotropicSolenoid),
    Linear(LinearFixture),
}

impl From<AffineSolenoid> for SolenoidModel {
    fn from(m: AffineSolenoid) -> Self {
        SolenoidModel::Affine(m)
    }
}

impl From<AnisotropicSolenoid> for SolenoidModel {
    fn from(m: AnisotropicSolenoid) -> Self {
        SolenoidModel::Anisotropic(m)
    }
}

impl From<LinearFixture> for SolenoidModel {
    fn from(m: LinearFixture) -> Self {
        SolenoidModel::Linear(m)
    }
}

impl SolenoidModel {
    /// `AffineSolenoid(k=3, λ=0.4, ε=0.5)`.
    pub fn default_affine() -> Self {
        AffineSolenoid::new(3, 0.4, 0.5).expect("catalog parameters").into()
    }

    /// `AnisotropicSolenoid(k=3, μ=0.40, ρ=0.04, σ2=0.38, ε=0.52, β=1)`.
    pub fn default_anisotropic() -> Self {
        AnisotropicSolenoid::new(3, 0.40, 0.04, 0.38, 0.52, 1).expect("catalog parameters").into()
    }

    pub fn affine(k: u32, lambda: f64, epsilon: f64) -> Result<Self> {
        Ok(AffineSolenoid::new(k, lambda, epsilon)?.into())
    }

    pub fn is_fixture(&self) -> bool {
        matches!(self, SolenoidModel::Linear(_))
    }

    /// Expansion factor of the base circle map (`k`), or the `(1,1)` entry of a
    /// fixture matrix.
    pub fn base_degree(&self) -> f64 {
        match self {
            SolenoidModel::Affine(m) => m.k as f64,
            SolenoidModel::Anisotropic(m) => m.k as f64,
            SolenoidModel::Linear(m) => m.matrix[(0, 0)],
        }
    }

    pub fn fiber_map(&self, theta: f64) -> Option<FiberMap> {
        let (s, c) = (TAU * theta).sin_cos();
        self.fiber_map_trig(theta, s, c)
    }

    /// Same as [`fiber_map`](Self::fiber_map) with `sin 2πθ`, `cos 2πθ`
    /// supplied by the caller.
    #[inline]
    pub fn fiber_map_trig(&self, theta: f64, s: f64, c: f64) -> Option<FiberMap> {
        match self {
            SolenoidModel::Affine(m) => {
                let e = m.epsilon;
                Some(FiberMap {
                    center: Vector2::new(e * c, e * s),
                    linear: Matrix2::from_diagonal_element(m.lambda),
                    d_center: Vector2::new(-TAU * e * s, TAU * e * c),
                    d_linear: Matrix2::zeros(),
                })
            }
            SolenoidModel::Anisotropic(m) => {
                let e = m.epsilon;
                let phi = TAU * m.beta as f64 * theta;
                let (sp, cp) = phi.sin_cos();
                let rot = Matrix2::new(cp, -sp, sp, cp);
                let d_rot = Matrix2::new(-sp, -cp, cp, -sp) * (TAU * m.beta as f64);
                let sigma1 = m.mu + m.rho * c;
                let diag = Matrix2::new(sigma1, 0.0, 0.0, m.sigma2);
                let d_diag = Matrix2::new(-TAU * m.rho * s, 0.0, 0.0, 0.0);
                Some(FiberMap {
                    center: Vector2::new(e * c, e * s),
                    linear: rot * diag,
                    d_center: Vector2::new(-TAU * e * s, TAU * e * c),
                    d_linear: d_rot * diag + rot * d_diag,
                })
            }
            SolenoidModel::Linear(_) => None,
        }
    }

    #[inline]
    fn base_image(&self, theta: f64) -> f64 {
        match self {
            SolenoidModel::Affine(m) => (m.k as f64 * theta).fract(),
            SolenoidModel::Anisotropic(m) => (m.k as f64 * theta).fract(),
            SolenoidModel::Linear(_) => theta,
        }
    }

    pub fn eval(&self, p: &SolidTorusPoint) -> SolidTorusPoint {
        let (s, c) = (TAU * p.theta).sin_cos();
        self.eval_trig(p, s, c)
    }

    /// [`eval`](Self::eval) with `sin 2πθ`, `cos 2πθ` of `p` supplied.
    #[inline]
    pub fn eval_trig(&self, p: &SolidTorusPoint, s: f64, c: f64) -> SolidTorusPoint {
        match self.fiber_map_trig(p.theta, s, c) {
            Some(fm) => {
                let y = fm.apply(&p.fiber_vec());
                SolidTorusPoint { theta: reduce_turns(self.base_image(p.theta)), fiber: [y[0], y[1]] }
            }
            None => *p,
        }
    }

    pub fn jacobian(&self, p: &SolidTorusPoint) -> Jacobian3 {
        match self.fiber_map(p.theta) {
            Some(fm) => jacobian_from(self.base_degree(), &fm, &p.fiber_vec()),
            None => match self {
                SolenoidModel::Linear(m) => Jacobian3(m.matrix),
                _ => unreachable!(),
            },
        }
    }

    /// Image point and Jacobian at `p`, sharing one trig evaluation.
    #[inline]
    pub fn step(&self, p: &SolidTorusPoint) -> (SolidTorusPoint, Jacobian3) {
        let (s, c) = (TAU * p.theta).sin_cos();
        match self.fiber_map_trig(p.theta, s, c) {
            Some(fm) => {
                let x = p.fiber_vec();
                let y = fm.apply(&x);
                let next = SolidTorusPoint { theta: reduce_turns(self.base_image(p.theta)), fiber: [y[0], y[1]] };
                (next, jacobian_from(self.base_degree(), &fm, &x))
            }
            None => (*p, self.jacobian(p)),
        }
    }

    /// Branch inverse: among the `k` preimage angles of `p.theta`, pick the one
    /// whose fiber preimage of `p` is closest to the disk, then project that
    /// preimage onto the closed disk. Exact for points of `f(M)` up to roundoff.
    pub fn pseudo_preimage(&self, p: &SolidTorusPoint) -> SolidTorusPoint {
        let k = match self {
            SolenoidModel::Affine(m) => m.k,
            SolenoidModel::Anisotropic(m) => m.k,
            SolenoidModel::Linear(_) => return *p,
        };
        let y = p.fiber_vec();
        let mut best: Option<(f64, f64, Vector2<f64>)> = None;
        for j in 0..k {
            let theta = (p.theta + j as f64) / k as f64;
            let fm = self.fiber_map(theta).expect("solenoid");
            let Some(inv) = fm.linear.try_inverse() else { continue };
            let x = inv * (y - fm.center);
            let n = x.norm();
            if best.as_ref().is_none_or(|b| n < b.0) {
                best = Some((n, theta, x));
            }
        }
        let (n, theta, mut x) = best.expect("invertible fiber map");
        if n > 1.0 {
            x /= n;
        }
        SolidTorusPoint::from_parts(theta, [x[0], x[1]])
    }
}

#[inline]
fn jacobian_from(k: f64, fm: &FiberMap, x: &Vector2<f64>) -> Jacobian3 {
    let g = fm.shear_at(x);
    let l = &fm.linear;
    Jacobian3(Matrix3::new(
        k,
        0.0,
        0.0, //
        g[0],
        l[(0, 0)],
        l[(0, 1)], //
        g[1],
        l[(1, 0)],
        l[(1, 1)],
    ))
}

/// Singular values `(σ_max, σ_min)` of a 2×2 matrix, closed form.
pub fn singular_values_2x2(m: &Matrix2<f64>) -> (f64, f64) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let s1 = (a + d).hypot(c - b);
    let s2 = (a - d).hypot(c + b);
    let smax = 0.5 * (s1 + s2);
    let smin = 0.5 * (s1 - s2).abs();
    (smax, smin)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchWitness {
    /// Image base angle at which two branches were compared.
    pub theta_image: f64,
    pub branches: (u32, u32),
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidityReport {
    /// Largest fiber norm among sampled images of disk-boundary points.
    pub max_image_norm: f64,
    pub containment_margin: f64,
    /// Closed-form `1 - (ε + max σ)`.
    pub analytic_containment_margin: f64,
    /// Smallest sampled lower bound on the gap between two branch images.
    pub min_branch_separation: f64,
    /// Closed-form `2ε sin(π/k) - 2 max σ`.
    pub analytic_separation_margin: f64,
    pub worst_pair: BranchWitness,
    pub containment_pass: bool,
    pub disjoint_pass: bool,
}

impl ValidityReport {
    pub fn pass(&self) -> bool {
        self.containment_pass && self.disjoint_pass
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass() {
            return Ok(self);
        }
        let w = &self.worst_pair;
        Err(Error::InvalidEmbedding(format!(
            "containment margin {:.6}, branch separation {:.6} at theta'={:.6} between branches {} and {}",
            self.containment_margin, w.separation, w.theta_image, w.branches.0, w.branches.1
        )))
    }
}

/// Samples `n_boundary_samples` image angles and as many disk-boundary
/// directions. Fiber images are ellipses `c + L·D`; containment is read off
/// the images of boundary points and the gap between two branches is the
/// best separating-line margin over the sampled directions, which is a lower
/// bound on their true distance (positive ⇒ disjoint).
pub fn check_embedding(model: &SolenoidModel, n_boundary_samples: usize) -> Result<ValidityReport> {
    if n_boundary_samples < 64 {
        return Err(Error::param("n_boundary_samples", format!("need >= 64, got {n_boundary_samples}")));
    }
    let (k, eps, sigma_max) = match model {
        SolenoidModel::Affine(m) => (m.k, m.epsilon, m.lambda),
        SolenoidModel::Anisotropic(m) => (m.k, m.epsilon, m.sigma_max()),
        SolenoidModel::Linear(_) => return Err(Error::FixtureExcluded),
    };
    let n = n_boundary_samples;
    let dirs: Vec<Vector2<f64>> = (0..n)
        .map(|i| {
            let (s, c) = (TAU * i as f64 / n as f64).sin_cos();
            Vector2::new(c, s)
        })
        .collect();

    let mut max_image_norm = 0.0f64;
    let mut worst = BranchWitness { theta_image: 0.0, branches: (0, 1), separation: f64::INFINITY };
    let mut maps = Vec::with_capacity(k as usize);
    for i in 0..n {
        let theta_image = i as f64 / n as f64;
        maps.clear();
        for j in 0..k {
            let fm = model.fiber_map((theta_image + j as f64) / k as f64).expect("solenoid");
            for d in &dirs {
                max_image_norm = max_image_norm.max(fm.apply(d).norm());
            }
            maps.push(fm);
        }
        for a in 0..k as usize {
            for b in a + 1..k as usize {
                let (fa, fb) = (&maps[a], &maps[b]);
                let gap = dirs
                    .iter()
                    .map(|d| {
                        d.dot(&(fb.center - fa.center))
                            - (fa.linear.transpose() * d).norm()
                            - (fb.linear.transpose() * d).norm()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if gap < worst.separation {
                    worst = BranchWitness { theta_image, branches: (a as u32, b as u32), separation: gap };
                }
            }
        }
    }
    let containment_margin = 1.0 - max_image_norm;
    Ok(ValidityReport {
        max_image_norm,
        containment_margin,
        analytic_containment_margin: 1.0 - (eps + sigma_max),
        min_branch_separation: worst.separation,
        analytic_separation_margin: 2.0 * eps * (PI / k as f64).sin() - 2.0 * sigma_max,
        worst_pair: worst,
        containment_pass: containment_margin > 0.0,
        disjoint_pass: worst.separation > 0.0,
    })
}

/// Sampling resolution for constant estimation: `n_theta` base angles times a
/// polar disk grid of `n_radial` rings (the outermost on the boundary) with
/// `n_angular` points each, plus the center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsGrid {
    pub n_theta: usize,
    pub n_radial: usize,
    pub n_angular: usize,
}

impl Default for ConstantsGrid {
    fn default() -> Self {
        Self { n_theta: 256, n_radial: 8, n_angular: 32 }
    }
}

impl ConstantsGrid {
    pub fn len(&self) -> usize {
        self.n_theta * (1 + self.n_radial * self.n_angular)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn disk_points(&self) -> Vec<Vector2<f64>> {
        let mut pts = vec![Vector2::zeros()];
        for r in 1..=self.n_radial {
            let rad = r as f64 / self.n_radial as f64;
            for a in 0..self.n_angular {
                let (s, c) = (TAU * a as f64 / self.n_angular as f64).sin_cos();
                pts.push(Vector2::new(rad * c, rad * s));
            }
        }
        pts
    }
}

/// Sampled extremes of the Jacobian blocks over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberBounds {
    pub base_degree: f64,
    pub max_fiber_norm: f64,
    pub max_fiber_inverse_norm: f64,
    pub max_shear: f64,
}

impl FiberBounds {
    /// `max ‖Dh‖ / k`: the rate at which forward-pushed vectors align with
    /// the unstable direction.
    pub fn domination(&self) -> f64 {
        self.max_fiber_norm / self.base_degree
    }

    pub fn a(&self) -> f64 {
        self.max_fiber_norm.max(self.max_fiber_inverse_norm) / self.base_degree
    }
}

pub fn fiber_bounds(model: &SolenoidModel, grid: &ConstantsGrid) -> Result<FiberBounds> {
    if grid.n_theta == 0 || grid.n_radial == 0 || grid.n_angular == 0 {
        return Err(Error::param("grid", "all grid dimensions must be positive"));
    }
    let mut b = FiberBounds {
        base_degree: model.base_degree(),
        max_fiber_norm: 0.0,
        max_fiber_inverse_norm: 0.0,
        max_shear: 0.0,
    };
    let disk = grid.disk_points();
    for i in 0..grid.n_theta {
        let theta = i as f64 / grid.n_theta as f64;
        for x in &disk {
            let p = SolidTorusPoint::from_parts(theta, [x[0], x[1]]);
            let j = model.jacobian(&p);
            let (smax, smin) = singular_values_2x2(&j.fiber_block());
            b.max_fiber_norm = b.max_fiber_norm.max(smax);
            b.max_fiber_inverse_norm = b.max_fiber_inverse_norm.max(1.0 / smin);
            b.max_shear = b.max_shear.max(j.shear().norm());
        }
    }
    Ok(b)
}

/// Cone-field constants for a solenoid: `a`, `K` and the unstable-cone slope
/// `2K / (k(1 - a))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub k: f64,
    pub a: f64,
    #[serde(rename = "K")]
    pub shear_bound: f64,
    pub cone_slope: f64,
}

impl ModelConstants {
    pub fn new(k: f64, a: f64, shear_bound: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::NotDominated { a });
        }
        if !(k > 1.0 && shear_bound >= 0.0) {
            return Err(Error::param("k", "need k > 1 and K >= 0"));
        }
        Ok(Self { k, a, shear_bound, cone_slope: 2.0 * shear_bound / (k * (1.0 - a)) })
    }

    /// Same constants with a different unstable-cone slope.
    pub fn with_slope(mut self, slope: f64) -> Self {
        self.cone_slope = slope;
        self
    }
}

pub fn estimate_constants(model: &SolenoidModel, grid: &ConstantsGrid) -> Result<ModelConstants> {
    if model.is_fixture() {
        return Err(Error::NoFiberStructure);
    }
    if grid.len() < 1000 {
        return Err(Error::param("grid", format!("need >= 1000 points, got {}", grid.len())));
    }
    let b = fiber_bounds(model, grid)?;
    ModelConstants::new(b.base_degree, b.a(), b.max_shear)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn affine() -> SolenoidModel {
        SolenoidModel::default_affine()
    }

    #[test]
    fn eval_examples() {
        let m = affine();
        let p = m.eval(&SolidTorusPoint::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(p.theta, 0.0);
        assert!(close(p.fiber[0], 0.5, 1e-15) && close(p.fiber[1], 0.0, 1e-15));

        let p = m.eval(&SolidTorusPoint::new(1.0 / 3.0, 0.0, 0.0).unwrap());
        assert_eq!(p.theta, 0.0);
        assert!(close(p.fiber[0], -0.25, 1e-15));
        assert!(close(p.fiber[1], 0.5 * (TAU / 3.0).sin(), 1e-15));
        assert!(close(p.fiber[1], 0.4330127018922193, 1e-15));

        let p = m.eval(&SolidTorusPoint::new(0.0, 1.0, 0.0).unwrap());
        assert!(close(p.fiber[0], 0.9, 1e-15) && p.fiber[1] == 0.0);
    }

    #[test]
    fn jacobian_examples() {
        let j = affine().jacobian(&SolidTorusPoint::new(0.0, 0.0, 0.0).unwrap());
        let expected = Matrix3::new(3.0, 0.0, 0.0, 0.0, 0.4, 0.0, PI, 0.0, 0.4);
        assert!((j.0 - expected).abs().max() < 1e-15);

        let fx: SolenoidModel = LinearFixture::diagonal([2.0, 0.5, 0.25]).unwrap().into();
        let p = SolidTorusPoint::new(0.3, 0.1, 0.2).unwrap();
        assert_eq!(fx.jacobian(&p).0, Matrix3::from_diagonal(&Vector3::new(2.0, 0.5, 0.25)));
        assert_eq!(fx.eval(&p), p);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(AffineSolenoid::new(2, 0.4, 0.5).is_err());
        assert!(AffineSolenoid::new(3, 1.0, 0.5).is_err());
        assert!(AffineSolenoid::new(3, 0.4, 0.0).is_err());
        assert!(AnisotropicSolenoid::new(3, 0.04, 0.05, 0.38, 0.52, 1).is_err());
        assert!(LinearFixture::diagonal([1.0, 0.0, 1.0]).is_err());
        assert!(SolidTorusPoint::new(0.1, 0.9, 0.9).is_err());
    }

    #[test]
    fn theta_is_reduced() {
        let p = SolidTorusPoint::new(2.25, 0.0, 0.0).unwrap();
        assert_eq!(p.theta, 0.25);
        assert_eq!(reduce_turns(-1e-18), 0.0);
        assert_eq!(reduce_turns(-0.25), 0.75);
    }

    #[test]
    fn embedding_examples() {
        let ok = check_embedding(&affine(), 256).unwrap();
        assert!(ok.pass());
        let exact = 2.0 * 0.5 * (PI / 3.0).sin() - 0.8;
        assert!(close(ok.analytic_separation_margin, exact, 1e-15));
        // sampled bound sits below the exact gap and converges to it
        assert!(ok.min_branch_separation <= exact + 1e-12);
        assert!(ok.min_branch_separation > exact - 1e-3);
        assert!(close(ok.max_image_norm, 0.9, 1e-12));

        let tight = check_embedding(&SolenoidModel::affine(3, 0.45, 0.5).unwrap(), 256).unwrap();
        assert!(tight.containment_pass);
        assert!(!tight.disjoint_pass);
        assert!(tight.analytic_separation_margin < 0.0);
        assert!(tight.clone().into_result().is_err());

        let wide = check_embedding(&SolenoidModel::affine(3, 0.4, 0.62).unwrap(), 256).unwrap();
        assert!(!wide.containment_pass);
        assert!(close(wide.max_image_norm, 1.02, 1e-12));

        let an = check_embedding(&SolenoidModel::default_anisotropic(), 256).unwrap();
        assert!(an.pass(), "{an:?}");

        assert!(check_embedding(&affine(), 32).is_err());
    }

    #[test]
    fn constants_examples() {
        let c = estimate_constants(&affine(), &ConstantsGrid::default()).unwrap();
        assert!(close(c.a, 2.5 / 3.0, 1e-15));
        assert!(close(c.shear_bound, PI, 1e-12));
        assert!(close(c.cone_slope, 4.0 * PI, 1e-10));

        let c = estimate_constants(&SolenoidModel::affine(3, 0.5, 0.45).unwrap(), &ConstantsGrid::default()).unwrap();
        assert!(close(c.a, 2.0 / 3.0, 1e-15));
        assert!(close(c.shear_bound, 0.9 * PI, 1e-12));

        let fx: SolenoidModel = LinearFixture::diagonal([2.0, 0.5, 0.25]).unwrap().into();
        assert!(matches!(estimate_constants(&fx, &ConstantsGrid::default()), Err(Error::NoFiberStructure)));

        // λ < 1/k gives ‖Dh⁻¹‖ > k
        let weak = SolenoidModel::affine(3, 0.3, 0.5).unwrap();
        assert!(matches!(estimate_constants(&weak, &ConstantsGrid::default()), Err(Error::NotDominated { .. })));

        let an = estimate_constants(&SolenoidModel::default_anisotropic(), &ConstantsGrid::default()).unwrap();
        assert!(close(an.a, 1.0 / 0.36 / 3.0, 1e-12));
    }

    #[test]
    fn pseudo_preimage_inverts_eval() {
        for model in [affine(), SolenoidModel::default_anisotropic()] {
            let p = SolidTorusPoint::new(0.123, 0.3, -0.4).unwrap();
            let q = model.pseudo_preimage(&model.eval(&p));
            assert!(close(q.theta, p.theta, 1e-14));
            assert!(close(q.fiber[0], p.fiber[0], 1e-12) && close(q.fiber[1], p.fiber[1], 1e-12));
        }
    }

    #[test]
    fn singular_values_match_nalgebra() {
        let m = Matrix2::new(0.3, -1.2, 0.7, 0.1);
        let (smax, smin) = singular_values_2x2(&m);
        let sv = m.singular_values();
        assert!(close(smax, sv.max(), 1e-14) && close(smin, sv.min(), 1e-14));
    }
}
