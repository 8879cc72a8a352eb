//! Named experiments end to end: validated config in, CSV tables and a JSON
//! summary out.

mod config;
pub mod output;

pub use config::{
    BcSection, CensusSection, ConesSection, ExperimentConfig, ExperimentKind, LyapunovSection, ModelSpec, PveSection,
    ReportSection, StartPoint, Thm3Section, UstateSection,
};

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::certify::{cone_field_check, minimal_certifying_n, pve_constant, ConeConfig, PveReport};
use crate::cocycle::{lyapunov_trace, LyapunovConfig};
use crate::error::Result;
use crate::measure::{
    borel_cantelli_decay, center_exponent_check, physical_measure_census, u_state_probe, uniform_samples,
    volume_nonexpansion_check, CensusResult, ObservableDictionary, Trig, UStateProbe,
};
use crate::model::{check_embedding, estimate_constants, ConstantsGrid, ModelConstants, SolenoidModel};
use crate::par;
use output::{float, Table};

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub kind: &'static str,
    /// SHA-256 of the canonical config JSON with the output path removed.
    pub config_hash: String,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub scalars: BTreeMap<String, Value>,
    pub flags: BTreeMap<String, bool>,
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = Default::default();
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
struct Outcome {
    scalars: BTreeMap<String, Value>,
    flags: BTreeMap<String, bool>,
    files: Vec<String>,
}

impl Outcome {
    fn scalar(&mut self, key: &str, v: impl Serialize) {
        self.scalars.insert(key.to_string(), serde_json::to_value(v).expect("scalar serializes"));
    }

    fn flag(&mut self, key: &str, v: bool) {
        self.flags.insert(key.to_string(), v);
    }
}

/// Runs the experiment on a pool of `threads` workers (default pool when
/// `None`). Output files do not depend on the worker count.
pub fn run_with_threads(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunManifest> {
    par::with_threads(threads, || run(cfg))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    cfg.validate()?;
    let model = cfg.model.build()?;
    if !model.is_fixture() {
        check_embedding(&model, 256)?.into_result()?;
    }
    std::fs::create_dir_all(&cfg.output)?;
    let dir = cfg.output.as_path();
    let mut out = Outcome::default();
    match cfg.kind {
        ExperimentKind::Lyapunov => lyapunov(&model, cfg, dir, &mut out)?,
        ExperimentKind::Pve => {
            pve(&model, cfg, dir, &mut out)?;
        }
        ExperimentKind::Cones => cones(&model, cfg, dir, &mut out)?,
        ExperimentKind::Census => {
            census(&model, cfg, dir, &mut out)?;
        }
        ExperimentKind::Ustate => {
            ustate(&model, cfg, dir, &mut out)?;
        }
        ExperimentKind::Thm3 => thm3(&model, cfg, dir, &mut out)?,
        ExperimentKind::BcDecay => bc(&model, cfg, dir, &mut out)?,
        ExperimentKind::Report => report(&model, cfg, dir, &mut out)?,
    }
    let manifest = RunManifest {
        kind: cfg.kind.name(),
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: start.elapsed().as_secs_f64(),
        scalars: out.scalars,
        flags: out.flags,
        files: out.files,
    };
    let summary = json!({
        "kind": manifest.kind,
        "model": cfg.model,
        "seed": cfg.seed,
        "scalars": manifest.scalars,
        "flags": manifest.flags,
        "manifest": {
            "config_hash": manifest.config_hash,
            "version": manifest.version,
            "wall_time_s": manifest.wall_time_s,
            "files": manifest.files,
        },
    });
    std::fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(manifest)
}

fn table(dir: &Path, name: &str, columns: &[&str], out: &mut Outcome) -> Result<Table> {
    out.files.push(name.to_string());
    Table::create(&dir.join(name), columns)
}

fn lyapunov(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let l = &cfg.lyapunov;
    let (est, rows) = lyapunov_trace(model, &l.start.point(), &l.to_config(cfg.seed), l.checkpoints)?;
    let mut t = table(dir, "lyapunov.csv", &output::LYAPUNOV_COLUMNS, out)?;
    for r in &rows {
        t.row([
            r.n.to_string(),
            float(r.exponents[0]),
            float(r.exponents[1]),
            float(r.exponents[2]),
            float(r.residual),
        ])?;
    }
    t.finish()?;
    out.scalar("exponents", est.exponents);
    out.scalar("exponent_sum", est.sum());
    out.scalar("mean_log_det", est.mean_log_det);
    out.scalar("residual", est.residual);
    out.scalar("n", est.n);
    out.flag("sum_matches_log_det", (est.sum() - est.mean_log_det).abs() <= 1e-8);
    Ok(())
}

fn pve(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<PveReport> {
    let pc = cfg.pve.to_config();
    let rep = pve_constant(model, &pc, cfg.seed)?;
    let mut t = table(dir, "pve.csv", &output::PVE_COLUMNS, out)?;
    for s in &rep.samples {
        t.row([
            s.index.to_string(),
            float(s.point.theta),
            float(s.point.fiber[0]),
            float(s.point.fiber[1]),
            float(s.c_point),
            float(s.worst_angle),
        ])?;
    }
    t.finish()?;
    out.scalar("N", rep.n_iter);
    out.scalar("c_hat", rep.c_hat);
    out.scalar("c_hat_per_iterate", rep.c_hat_per_iterate);
    out.scalar("samples", rep.n_samples);
    out.scalar("skipped", rep.skipped);
    out.scalar("push_ratio", rep.push_ratio);
    out.flag("certified", rep.certified());
    if cfg.pve.scan_max > 0 {
        let scan = minimal_certifying_n(model, cfg.pve.scan_max, &pc, cfg.seed)?;
        let mut t = table(dir, "pve_scan.csv", &output::PVE_SCAN_COLUMNS, out)?;
        for (i, c) in scan.c_hat.iter().enumerate() {
            t.row([(i + 1).to_string(), float(*c), float(c / (i + 1) as f64)])?;
        }
        t.finish()?;
        out.scalar("minimal_certifying_n", scan.first);
    }
    Ok(rep)
}

fn cone_constants(model: &SolenoidModel, cfg: &ExperimentConfig) -> Result<ModelConstants> {
    let c = &cfg.cones;
    let base = match (c.a, c.shear_bound) {
        (Some(a), Some(k)) => ModelConstants::new(model.base_degree(), a, k)?,
        _ => estimate_constants(model, &ConstantsGrid::default())?,
    };
    let slope = c.slope.unwrap_or(base.cone_slope) * c.slope_factor;
    Ok(base.with_slope(slope))
}

fn cones(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let constants = cone_constants(model, cfg)?;
    let cc = ConeConfig { n_samples: cfg.cones.samples, n_directions: cfg.cones.directions };
    let rep = cone_field_check(model, &constants, &cc, cfg.seed)?;
    let mut t = table(dir, "cones.csv", &output::CONES_COLUMNS, out)?;
    for s in &rep.samples {
        let m = &s.margins;
        let violation = s.violation.map(|w| format!("{:?}", w.condition)).unwrap_or_default();
        t.row([
            s.index.to_string(),
            float(s.point.theta),
            float(s.point.fiber[0]),
            float(s.point.fiber[1]),
            float(m.disjoint),
            float(m.invariance_u),
            float(m.invariance_cs),
            float(m.robust_u),
            float(m.robust_cs),
            float(m.expansion),
            violation,
        ])?;
    }
    t.finish()?;
    out.scalar("constants", rep.constants);
    out.scalar("slope_u", rep.slope_u);
    out.scalar("slope_cs", rep.slope_cs);
    out.scalar("min_margins", rep.min_margins);
    out.scalar("witness", rep.witness);
    out.flag("pass_a", rep.pass_a);
    out.flag("pass_b", rep.pass_b);
    out.flag("pass_c", rep.pass_c);
    out.flag("pass", rep.pass());
    Ok(())
}

fn census(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<CensusResult> {
    let s = &cfg.census;
    let res = physical_measure_census(model, &s.grid(cfg.seed), &s.to_config(), &ObservableDictionary::default())?;
    let mut t = table(dir, "census.csv", &output::CENSUS_COLUMNS, out)?;
    for a in &res.assignments {
        let cluster = a.cluster.map_or(-1, |c| c as i64);
        t.row([
            a.grid_id.to_string(),
            float(a.point.theta),
            float(a.point.fiber[0]),
            float(a.point.fiber[1]),
            cluster.to_string(),
            float(a.sig_distance),
        ])?;
    }
    t.finish()?;
    let clusters: Vec<Value> = res
        .clusters
        .iter()
        .map(|c| {
            json!({
                "id": c.id,
                "members": c.members,
                "basin_fraction": c.basin_fraction,
                "representative": c.representative,
                "diameter": c.diameter,
                "center_exponents": c.center_exponents,
                "exponent_sum": c.exponent_sum,
                "volume_integral": c.volume_integral,
            })
        })
        .collect();
    out.scalar("cluster_count", res.clusters.len());
    out.scalar("basin_fractions", res.clusters.iter().map(|c| c.basin_fraction).collect::<Vec<_>>());
    out.scalar("basin_total", res.basin_total());
    out.scalar("unclustered", res.unclustered);
    out.scalar("grid_points", res.assignments.len());
    out.scalar("clusters", clusters);
    out.flag("resolved", !res.unresolved);
    Ok(res)
}

fn ustate(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<Vec<UStateProbe>> {
    let u = &cfg.ustate;
    let dict = ObservableDictionary::default();
    let lc = LyapunovConfig::default().with_n(u.lyapunov_n);
    let probes = u.configs().iter().map(|c| u_state_probe(model, c, &dict, &lc)).collect::<Result<Vec<_>>>()?;
    let mut t = table(dir, "ustate.csv", &output::USTATE_COLUMNS, out)?;
    for (sid, p) in probes.iter().enumerate() {
        for (j, (ob, v)) in dict.components().iter().zip(&p.signature.values).enumerate() {
            let trig = if ob.trig == Trig::Cos { "cos" } else { "sin" };
            t.row([
                sid.to_string(),
                j.to_string(),
                ob.freq.to_string(),
                trig.to_string(),
                ob.q.to_string(),
                ob.r.to_string(),
                float(*v),
            ])?;
        }
    }
    t.finish()?;
    let mut spread: f64 = 0.0;
    for (i, a) in probes.iter().enumerate() {
        for b in &probes[i + 1..] {
            spread = spread.max(a.signature.sup_distance(&b.signature));
        }
    }
    out.scalar("max_pairwise_distance", spread);
    out.scalar("center_exponents", probes.iter().map(|p| p.center_exponents).collect::<Vec<_>>());
    out.flag("signatures_agree", spread <= cfg.census.threshold);
    out.flag("center_negative", probes.iter().all(|p| p.center_exponents.iter().all(|&e| e < 0.0)));
    Ok(probes)
}

fn thm3(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let t3 = &cfg.thm3;
    let pts = uniform_samples(t3.samples, cfg.seed);
    let rep = volume_nonexpansion_check(model, &pts, t3.n, t3.tol)?;
    let mut t = table(dir, "thm3.csv", &output::THM3_COLUMNS, out)?;
    for (i, a) in rep.averages.iter().enumerate() {
        t.row([i.to_string(), t3.n.to_string(), float(*a)])?;
    }
    t.finish()?;
    out.scalar("max_average", rep.max_average);
    out.scalar("violators", rep.violators);
    out.flag("pass", rep.pass());
    Ok(())
}

fn bc(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let b = &cfg.bc;
    let tab = borel_cantelli_decay(model, b.r, &b.n_list, b.samples, cfg.seed)?;
    let mut t = table(dir, "bc.csv", &output::BC_COLUMNS, out)?;
    for r in &tab.rows {
        t.row([r.n.to_string(), float(r.r), float(r.fraction), float(r.ci_radius), float(r.bound)])?;
    }
    t.finish()?;
    out.scalar("fractions", tab.rows.iter().map(|r| r.fraction).collect::<Vec<_>>());
    out.flag("pass", tab.pass);
    Ok(())
}

fn report(model: &SolenoidModel, cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let pve_rep = pve(model, cfg, dir, out)?;
    let census_res = census(model, cfg, dir, out)?;
    let probes = ustate(model, cfg, dir, out)?;
    let check = center_exponent_check(&census_res, &pve_rep, &probes, cfg.report.tol);
    out.scalar("verdict", check.verdict);
    out.scalar("center_bound", check.bound);
    out.flag("clusters_below_bound", check.clusters.iter().all(|c| c.pass));
    out.flag("ustates_center_negative", check.ustates_pass());
    Ok(())
}
