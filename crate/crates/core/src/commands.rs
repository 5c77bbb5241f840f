//! The `analyze`, `simulate`, `verify` and `limits` entry points.
//! Each takes a parsed config plus output settings and returns the report it
//! wrote, so the binary stays a thin shell.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{analyze, Analysis};
use crate::config::ExperimentConfig;
use crate::dynamics::{simulate_stream, InteractionSystem, SimulationOptions, Trajectory};
use crate::error::{Error, Result};
use crate::harness::{run_ensemble, verify_against_prediction, EnsembleStats, VerificationReport};
use crate::spectral::{AffineLimit, LimitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    Csv,
    #[default]
    Json,
}

/// SHA-256 of the canonical config text, hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_text().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(dir, std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist")))
    }
}

/// Structure report: classes, levels, bipartiteness, drift diagnostics and
/// limit predictions. Nothing is simulated.
pub fn cmd_analyze(cfg: &ExperimentConfig) -> Result<Analysis> {
    analyze(&cfg.build_system()?)
}

/// One line per class.
pub fn analysis_csv(an: &Analysis) -> String {
    let mut s = String::from("class_id,level,members,attitude,stubborn,bipartite,period,k_invertible,kind\n");
    for c in &an.classes {
        let members: Vec<String> = c.members.iter().map(|m| m.to_string()).collect();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.id,
            c.level,
            members.join(" "),
            c.attitude,
            c.stubborn,
            c.bipartiteness.is_bipartite,
            c.bipartiteness.period,
            c.drift.diagnostics.invertible,
            c.prediction.kind.name()
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFile {
    pub run: usize,
    pub stream: u64,
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub master_seed: u64,
    pub n_runs: usize,
    pub n_steps: u64,
    pub rng: &'static str,
    pub runs: Vec<RunFile>,
}

fn write_trajectory(dir: &Path, run: usize, t: &Trajectory, format: Format) -> Result<RunFile> {
    let file = match format {
        Format::Csv => format!("run_{run:04}.csv"),
        Format::Json => format!("run_{run:04}.json"),
    };
    let path = dir.join(&file);
    match format {
        Format::Csv => {
            let mut w = create(&path)?;
            t.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
        }
        Format::Json => write_json(&path, t)?,
    }
    Ok(RunFile { run, stream: t.stream, file })
}

fn simulate_into(cfg: &ExperimentConfig, system: &InteractionSystem, dir: &Path, format: Format) -> Result<Manifest> {
    require_dir(dir)?;
    let opts = SimulationOptions::new(cfg.n_steps);
    let mut runs = Vec::with_capacity(cfg.n_runs);
    for run in 0..cfg.n_runs {
        let t = simulate_stream(system, &cfg.schedule, cfg.seed, run as u64, &opts)?;
        runs.push(write_trajectory(dir, run, &t, format)?);
    }
    let manifest = Manifest {
        config_sha256: config_hash(cfg),
        master_seed: cfg.seed,
        n_runs: cfg.n_runs,
        n_steps: cfg.n_steps,
        rng: "ChaCha8, stream = run index",
        runs,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Writes one trajectory file per run plus `manifest.json` into `dir`,
/// which must already exist.
pub fn cmd_simulate(cfg: &ExperimentConfig, dir: &Path, format: Format) -> Result<Manifest> {
    simulate_into(cfg, &cfg.build_system()?, dir, format)
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub report: VerificationReport,
    pub stats: EnsembleStats,
    pub written: Vec<PathBuf>,
}

impl VerifyOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_pass {
            0
        } else {
            1
        }
    }
}

/// Analysis, ensemble and verification. With an output directory, writes
/// `report.json`, `ensemble.csv` and (if configured) per-run trajectories
/// under `trajectories/`.
pub fn cmd_verify(cfg: &ExperimentConfig, out: Option<&Path>, format: Format) -> Result<VerifyOutcome> {
    let system = cfg.build_system()?;
    let stats = run_ensemble(&system, &cfg.schedule, cfg.seed, cfg.n_runs, cfg.n_steps)?;
    let report = verify_against_prediction(&stats, &stats.analysis.predictions(), &cfg.thresholds)?;
    let mut written = Vec::new();
    if let Some(dir) = out {
        require_dir(dir)?;
        let rp = dir.join("report.json");
        write_json(&rp, &report)?;
        written.push(rp);
        let ep = dir.join("ensemble.csv");
        let mut w = create(&ep)?;
        stats.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&ep, e))?;
        written.push(ep);
        if cfg.save_trajectories {
            let td = dir.join("trajectories");
            std::fs::create_dir_all(&td).map_err(|e| Error::io(&td, e))?;
            let m = simulate_into(cfg, &system, &td, format)?;
            written.extend(m.runs.iter().map(|r| td.join(&r.file)));
            written.push(td.join("manifest.json"));
        }
    }
    Ok(VerifyOutcome { report, stats, written })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassLimit {
    pub class_id: usize,
    pub level: usize,
    pub members: Vec<usize>,
    pub kind: &'static str,
    /// Forced solve `-K^{-1} c` (level-0 classes with forcing).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forced: Option<Vec<f64>>,
    /// Whether the forced solve lies in the unit box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_unit_box: Option<bool>,
    /// Affine recursion `U = -K^{-1}(c + sum_s B~ X_s)` for levels >= 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recursion: Option<AffineLimit>,
    /// The limit, when it does not depend on chance.
    pub resolved: Option<Vec<f64>>,
}

/// Forced and hierarchical limit solves only.
pub fn cmd_limits(cfg: &ExperimentConfig) -> Result<Vec<ClassLimit>> {
    let an = cmd_analyze(cfg)?;
    let resolved = an.resolved_limits();
    Ok(an
        .classes
        .iter()
        .map(|c| {
            let (forced, in_unit_box, recursion) = match &c.prediction.kind {
                LimitKind::Forced { limit } => (
                    Some(limit.clone()),
                    Some(limit.iter().all(|x| (-crate::spectral::UNIT_BOX_TOL..=1.0 + crate::spectral::UNIT_BOX_TOL).contains(x))),
                    None,
                ),
                LimitKind::AffineOfLowerLevels(aff) => (None, None, Some(aff.clone())),
                _ => (None, None, None),
            };
            ClassLimit {
                class_id: c.id,
                level: c.level,
                members: c.members.clone(),
                kind: c.prediction.kind.name(),
                forced,
                in_unit_box,
                recursion,
                resolved: resolved[c.id].as_ref().map(|v| v.iter().copied().collect()),
            }
        })
        .collect())
}

/// `class_id,agent,kind,limit` with an empty limit when it is random.
pub fn limits_csv(limits: &[ClassLimit]) -> String {
    let mut s = String::from("class_id,agent,kind,limit\n");
    for l in limits {
        for (k, agent) in l.members.iter().enumerate() {
            let v = l.resolved.as_ref().map(|r| format!("{:.16e}", r[k])).unwrap_or_default();
            writeln!(s, "{},{agent},{},{v}", l.class_id, l.kind).unwrap();
        }
    }
    s
}
