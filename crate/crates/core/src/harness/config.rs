//! Experiment configuration: one JSON document, unknown fields rejected,
//! every section optional with documented defaults.

use std::path::{Path, PathBuf};

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::certify::{ConeConfig, PveConfig, MAX_CERTIFY_N};
use crate::cocycle::{FrameInit, LyapunovConfig};
use crate::error::{Error, Result};
use crate::measure::{CensusConfig, CensusGrid, UStateConfig};
use crate::model::{AffineSolenoid, AnisotropicSolenoid, LinearFixture, SolenoidModel, SolidTorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Lyapunov,
    Pve,
    Cones,
    Census,
    Ustate,
    Thm3,
    BcDecay,
    Report,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Lyapunov => "lyapunov",
            ExperimentKind::Pve => "pve",
            ExperimentKind::Cones => "cones",
            ExperimentKind::Census => "census",
            ExperimentKind::Ustate => "ustate",
            ExperimentKind::Thm3 => "thm3",
            ExperimentKind::BcDecay => "bc-decay",
            ExperimentKind::Report => "report",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Affine {
        #[serde(default = "three")]
        k: u32,
        #[serde(default = "affine_lambda")]
        lambda: f64,
        #[serde(default = "half")]
        epsilon: f64,
    },
    Anisotropic {
        #[serde(default = "three")]
        k: u32,
        #[serde(default = "aniso_mu")]
        mu: f64,
        #[serde(default = "aniso_rho")]
        rho: f64,
        #[serde(default = "aniso_sigma2")]
        sigma2: f64,
        #[serde(default = "aniso_epsilon")]
        epsilon: f64,
        #[serde(default = "one")]
        beta: i32,
    },
    /// Row-major constant Jacobian.
    Linear { matrix: [[f64; 3]; 3] },
}

fn three() -> u32 {
    3
}
fn one() -> i32 {
    1
}
fn half() -> f64 {
    0.5
}
fn affine_lambda() -> f64 {
    0.4
}
fn aniso_mu() -> f64 {
    0.40
}
fn aniso_rho() -> f64 {
    0.04
}
fn aniso_sigma2() -> f64 {
    0.38
}
fn aniso_epsilon() -> f64 {
    0.52
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Affine { k: 3, lambda: 0.4, epsilon: 0.5 }
    }
}

impl ModelSpec {
    pub fn default_anisotropic() -> Self {
        ModelSpec::Anisotropic { k: 3, mu: 0.40, rho: 0.04, sigma2: 0.38, epsilon: 0.52, beta: 1 }
    }

    pub fn build(&self) -> Result<SolenoidModel> {
        let built: Result<SolenoidModel> = match *self {
            ModelSpec::Affine { k, lambda, epsilon } => AffineSolenoid::new(k, lambda, epsilon).map(Into::into),
            ModelSpec::Anisotropic { k, mu, rho, sigma2, epsilon, beta } => {
                AnisotropicSolenoid::new(k, mu, rho, sigma2, epsilon, beta).map(Into::into)
            }
            ModelSpec::Linear { matrix } => LinearFixture::new(Matrix3::from_fn(|i, j| matrix[i][j])).map(Into::into),
        };
        built.map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::InvalidConfig { path: format!("model.{name}"), reason },
            other => other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartPoint {
    pub theta: f64,
    pub fiber: [f64; 2],
}

impl StartPoint {
    pub fn point(&self) -> SolidTorusPoint {
        SolidTorusPoint::from_parts(crate::model::reduce_turns(self.theta), self.fiber)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSection {
    pub n: usize,
    pub qr_period: usize,
    pub burn_in: usize,
    /// Rows written to `lyapunov.csv`.
    pub checkpoints: usize,
    /// Draw the initial frame from stream `(seed, 0)` instead of the identity.
    pub random_frame: bool,
    pub start: StartPoint,
}

impl Default for LyapunovSection {
    fn default() -> Self {
        let d = LyapunovConfig::default();
        Self {
            n: d.n,
            qr_period: d.qr_period,
            burn_in: d.burn_in,
            checkpoints: 100,
            random_frame: false,
            start: StartPoint { theta: 0.1, fiber: [0.0, 0.0] },
        }
    }
}

impl LyapunovSection {
    pub fn to_config(&self, seed: u64) -> LyapunovConfig {
        LyapunovConfig {
            n: self.n,
            qr_period: self.qr_period,
            burn_in: self.burn_in,
            frame: if self.random_frame { FrameInit::Random { seed } } else { FrameInit::Identity },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PveSection {
    #[serde(rename = "N")]
    pub n_iter: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub tol: f64,
    /// Largest `N` for the minimal-certifying scan; 0 skips the scan.
    pub scan_max: usize,
}

impl Default for PveSection {
    fn default() -> Self {
        let d = PveConfig::default();
        Self { n_iter: d.n_iter, samples: d.n_samples, burn_in: d.burn_in, tol: d.tol, scan_max: 0 }
    }
}

impl PveSection {
    pub fn to_config(&self) -> PveConfig {
        PveConfig { n_iter: self.n_iter, n_samples: self.samples, burn_in: self.burn_in, tol: self.tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConesSection {
    pub samples: usize,
    pub directions: usize,
    /// Explicit constants; when absent they are estimated on the default
    /// constants grid.
    pub a: Option<f64>,
    #[serde(rename = "K")]
    pub shear_bound: Option<f64>,
    pub slope: Option<f64>,
    /// Multiplies the slope (0.5 halves it).
    pub slope_factor: f64,
}

impl Default for ConesSection {
    fn default() -> Self {
        let d = ConeConfig::default();
        Self {
            samples: d.n_samples,
            directions: d.n_directions,
            a: None,
            shear_bound: None,
            slope: None,
            slope_factor: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CensusSection {
    pub grid: usize,
    pub random_points: usize,
    pub n: usize,
    pub threshold: f64,
    pub min_members: Option<usize>,
    /// Orbit length for the representative's exponents.
    pub lyapunov_n: usize,
}

impl Default for CensusSection {
    fn default() -> Self {
        Self { grid: 32, random_points: 0, n: 100_000, threshold: 0.05, min_members: None, lyapunov_n: 100_000 }
    }
}

impl CensusSection {
    pub fn grid(&self, seed: u64) -> CensusGrid {
        CensusGrid { slice: self.grid, random_points: self.random_points, seed }
    }

    pub fn to_config(&self) -> CensusConfig {
        CensusConfig {
            n: self.n,
            threshold: self.threshold,
            min_members: self.min_members,
            lyapunov: LyapunovConfig::default().with_n(self.lyapunov_n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UstateSection {
    pub n_disk: usize,
    pub n_iter: usize,
    pub graph_steps: usize,
    /// One push-forward per seed circle.
    pub seeds: Vec<StartPoint>,
    pub lyapunov_n: usize,
}

impl Default for UstateSection {
    fn default() -> Self {
        let d = UStateConfig::default();
        Self {
            n_disk: d.n_disk,
            n_iter: d.n_iter,
            graph_steps: d.graph_steps,
            seeds: vec![StartPoint { theta: 0.0, fiber: [0.0, 0.0] }, StartPoint { theta: 0.3137, fiber: [0.4, -0.2] }],
            lyapunov_n: 100_000,
        }
    }
}

impl UstateSection {
    pub fn configs(&self) -> Vec<UStateConfig> {
        self.seeds
            .iter()
            .map(|s| UStateConfig {
                theta0: s.theta,
                fiber: s.fiber,
                n_disk: self.n_disk,
                n_iter: self.n_iter,
                graph_steps: self.graph_steps,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thm3Section {
    pub samples: usize,
    pub n: usize,
    pub tol: f64,
}

impl Default for Thm3Section {
    fn default() -> Self {
        Self { samples: 1000, n: 10_000, tol: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BcSection {
    pub r: f64,
    pub n_list: Vec<usize>,
    pub samples: usize,
}

impl Default for BcSection {
    fn default() -> Self {
        Self { r: 0.05, n_list: vec![10, 20, 40, 80], samples: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Slack on the center-exponent bound.
    pub tol: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self { tol: 0.02 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub lyapunov: LyapunovSection,
    #[serde(default)]
    pub pve: PveSection,
    #[serde(default)]
    pub cones: ConesSection,
    #[serde(default)]
    pub census: CensusSection,
    #[serde(default)]
    pub ustate: UstateSection,
    #[serde(default)]
    pub thm3: Thm3Section,
    #[serde(default)]
    pub bc: BcSection,
    #[serde(default)]
    pub report: ReportSection,
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn invalid(path: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig { path: path.to_string(), reason: reason.into() }
}

fn check(ok: bool, path: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(path, reason))
    }
}

fn check_start(s: &StartPoint, path: &str) -> Result<()> {
    check(s.theta.is_finite(), &format!("{path}.theta"), "must be finite")?;
    let r = s.fiber[0].hypot(s.fiber[1]);
    check(r <= 1.0, &format!("{path}.fiber"), "must lie in the closed unit disk")
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            model: ModelSpec::default(),
            seed: default_seed(),
            output: default_output(),
            lyapunov: Default::default(),
            pve: Default::default(),
            cones: Default::default(),
            census: Default::default(),
            ustate: Default::default(),
            thm3: Default::default(),
            bc: Default::default(),
            report: Default::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            invalid(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.lyapunov;
        check(l.n >= 1000, "lyapunov.n", "must be >= 1000")?;
        check((1..=32).contains(&l.qr_period), "lyapunov.qr_period", "must lie in [1, 32]")?;
        check(l.checkpoints <= l.n, "lyapunov.checkpoints", "must not exceed n")?;
        check_start(&l.start, "lyapunov.start")?;

        let p = &self.pve;
        check((1..=MAX_CERTIFY_N).contains(&p.n_iter), "pve.N", "must lie in [1, 256]")?;
        check(p.samples >= 1, "pve.samples", "must be >= 1")?;
        check(p.tol > 0.0 && p.tol <= 1e-4, "pve.tol", "must lie in (0, 1e-4]")?;
        check(p.scan_max <= MAX_CERTIFY_N, "pve.scan_max", "must lie in [0, 256]")?;

        let c = &self.cones;
        check(c.samples >= 1, "cones.samples", "must be >= 1")?;
        check(c.directions >= 1, "cones.directions", "must be >= 1")?;
        check(c.a.is_none_or(|a| a > 0.0 && a < 1.0), "cones.a", "must lie in (0, 1)")?;
        check(c.shear_bound.is_none_or(|k| k >= 0.0 && k.is_finite()), "cones.K", "must be finite and >= 0")?;
        check(c.a.is_some() == c.shear_bound.is_some(), "cones.K", "a and K must be given together")?;
        check(c.slope.is_none_or(|s| s > 0.0 && s.is_finite()), "cones.slope", "must be positive")?;
        check(c.slope_factor > 0.0 && c.slope_factor.is_finite(), "cones.slope_factor", "must be positive")?;

        let s = &self.census;
        check(s.grid >= 1 || s.random_points >= 1, "census.grid", "need at least one initial condition")?;
        check(s.n >= 1, "census.n", "must be >= 1")?;
        check(s.threshold > 0.0 && s.threshold.is_finite(), "census.threshold", "must be positive")?;
        check(s.min_members.is_none_or(|m| m >= 1), "census.min_members", "must be >= 1")?;
        check(s.lyapunov_n >= 1000, "census.lyapunov_n", "must be >= 1000")?;

        let u = &self.ustate;
        check(u.n_disk >= 2, "ustate.n_disk", "must be >= 2")?;
        check(u.n_iter >= 1, "ustate.n_iter", "must be >= 1")?;
        check(!u.seeds.is_empty(), "ustate.seeds", "need at least one seed circle")?;
        for (i, sp) in u.seeds.iter().enumerate() {
            check_start(sp, &format!("ustate.seeds[{i}]"))?;
        }
        check(u.lyapunov_n >= 1000, "ustate.lyapunov_n", "must be >= 1000")?;

        let t = &self.thm3;
        check(t.samples >= 1, "thm3.samples", "must be >= 1")?;
        check(t.n >= 1, "thm3.n", "must be >= 1")?;
        check(t.tol >= 0.0, "thm3.tol", "must be >= 0")?;

        let b = &self.bc;
        check(b.r > 0.0 && b.r <= 1.0, "bc.r", "must lie in (0, 1]")?;
        check(!b.n_list.is_empty() && b.n_list[0] >= 1, "bc.n_list", "must be non-empty and positive")?;
        check(b.n_list.windows(2).all(|w| w[0] < w[1]), "bc.n_list", "must be strictly increasing")?;
        check(b.samples >= 1, "bc.samples", "must be >= 1")?;

        check(self.report.tol >= 0.0, "report.tol", "must be >= 0")?;

        let model = self.model.build()?;
        if model.is_fixture() && self.kind != ExperimentKind::Lyapunov {
            return Err(invalid("model.variant", "linear fixtures only support the lyapunov experiment"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_path(text: &str) -> String {
        match ExperimentConfig::from_json(text) {
            Err(Error::InvalidConfig { path, .. }) => path,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"kind": "bc-decay"}"#).unwrap();
        assert_eq!(c.kind, ExperimentKind::BcDecay);
        assert_eq!(c.model, ModelSpec::default());
        assert_eq!(c.bc.n_list, vec![10, 20, 40, 80]);
        assert_eq!(c.seed, 1);
    }

    #[test]
    fn model_variants_parse() {
        let c =
            ExperimentConfig::from_json(r#"{"kind": "pve", "model": {"variant": "anisotropic", "beta": 2}}"#).unwrap();
        assert!(matches!(c.model, ModelSpec::Anisotropic { beta: 2, k: 3, .. }));
        let c = ExperimentConfig::from_json(
            r#"{"kind": "lyapunov", "model": {"variant": "linear", "matrix": [[2,0,0],[0,3,0],[0,0,4]]}}"#,
        )
        .unwrap();
        assert!(c.model.build().unwrap().is_fixture());
    }

    #[test]
    fn errors_carry_field_paths() {
        assert_eq!(err_path(r#"{"kind": "pve", "pve": {"N": 64, "bogus": 1}}"#), "pve.bogus");
        assert_eq!(err_path(r#"{"kind": "pve", "pve": {"N": "x"}}"#), "pve.N");
        assert_eq!(err_path(r#"{"kind": "pve", "extra": 0}"#), "extra");
        assert_eq!(err_path(r#"{"kind": "pve", "pve": {"N": 300}}"#), "pve.N");
        assert_eq!(err_path(r#"{"kind": "census", "census": {"threshold": 0}}"#), "census.threshold");
        assert_eq!(err_path(r#"{"kind": "bc-decay", "bc": {"n_list": [10, 5]}}"#), "bc.n_list");
        assert_eq!(err_path(r#"{"kind": "pve", "model": {"variant": "affine", "lambda": 1.5}}"#), "model.lambda");
        assert_eq!(
            err_path(r#"{"kind": "ustate", "ustate": {"seeds": [{"theta": 0, "fiber": [1, 1]}]}}"#),
            "ustate.seeds[0].fiber"
        );
        assert_eq!(
            err_path(r#"{"kind": "census", "model": {"variant": "linear", "matrix": [[2,0,0],[0,3,0],[0,0,4]]}}"#),
            "model.variant"
        );
        assert_eq!(err_path(r#"{"kind": "nope"}"#), "kind");
    }

    #[test]
    fn round_trips_through_json() {
        let c = ExperimentConfig::new(ExperimentKind::Report);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }
}
