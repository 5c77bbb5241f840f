//! Sectioned key-value experiment configuration.
//!
//! ```text
//! # 3-cycle, competitive
//! [matrix]
//! 0 1 0
//! 0 0 1
//! 1 0 0
//!
//! [attitudes]
//! global = competitive        # or: competitive = 0 1 / cooperative = 2
//!
//! [forcing]
//! 0 = constant 1
//! 1 = piecewise 0.5@0 0@1000  # value@start-step
//!
//! [stubborn]
//! 2 = 0.8
//!
//! [schedule]
//! kind = urn                  # urn (m) or power (gamma, scale)
//! m = 1
//!
//! [run]
//! steps = 200000
//! runs = 50
//! seed = 0
//! initial = 0.5 0.5 0.5
//! out = results
//! save_trajectories = false
//!
//! [tolerance]
//! tol = 0.02
//! var_min = 0.001
//! ```
//!
//! The matrix may instead come from a file (`file = path` in `[matrix]`,
//! resolved against the config's directory) in the plain-text matrix format.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{Forcing, InteractionSystem, StepSchedule};
use crate::error::Result;
use crate::graph::{parse_matrix_text, parse_row, validate_matrix, InteractionMatrix, RowKind};
use crate::harness::Thresholds;
use crate::spectral::Attitude;

pub const DEFAULT_STEPS: u64 = 200_000;
pub const DEFAULT_RUNS: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, message: String },
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn parse(line: usize, message: impl Into<String>) -> Self {
        ConfigError::Parse { line, message: message.into() }
    }

    fn validation(field: &str, reason: impl Into<String>) -> Self {
        ConfigError::Validation { field: field.into(), reason: reason.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "line {line}: {message}"),
            ConfigError::Validation { field, reason } => write!(f, "{field}: {reason}"),
        }
    }
}

/// Every problem found in one config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config ({} error{})", self.0.len(), if self.0.len() == 1 { "" } else { "s" })?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    Inline,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttitudeSpec {
    /// One attitude for every agent.
    Global(Attitude),
    /// Explicit agent lists; `None` marks agents left unassigned (stubborn).
    PerAgent(Vec<Option<Attitude>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub matrix_source: MatrixSource,
    pub matrix: Vec<Vec<f64>>,
    pub attitudes: AttitudeSpec,
    pub forcing: BTreeMap<usize, Forcing>,
    pub stubborn: BTreeMap<usize, f64>,
    pub schedule: StepSchedule,
    pub n_steps: u64,
    pub n_runs: usize,
    pub seed: u64,
    pub initial: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub save_trajectories: bool,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// Defaults around a matrix, with one global attitude.
    pub fn new(matrix: Vec<Vec<f64>>, attitude: Attitude) -> Self {
        Self {
            matrix_source: MatrixSource::Inline,
            matrix,
            attitudes: AttitudeSpec::Global(attitude),
            forcing: BTreeMap::new(),
            stubborn: BTreeMap::new(),
            schedule: StepSchedule::default(),
            n_steps: DEFAULT_STEPS,
            n_runs: DEFAULT_RUNS,
            seed: 0,
            initial: None,
            out: None,
            save_trajectories: false,
            thresholds: Thresholds::default(),
        }
    }

    pub fn n_agents(&self) -> usize {
        self.matrix.len()
    }

    pub fn interaction_matrix(&self) -> Result<InteractionMatrix> {
        validate_matrix(&self.matrix)
    }

    pub fn build_system(&self) -> Result<InteractionSystem> {
        let mut b = InteractionSystem::builder(self.interaction_matrix()?);
        b = match &self.attitudes {
            AttitudeSpec::Global(a) => b.global_attitude(*a),
            AttitudeSpec::PerAgent(v) => b.attitudes(v.clone()),
        };
        for (&i, f) in &self.forcing {
            b = b.forcing(i, f.clone());
        }
        for (&i, &q) in &self.stubborn {
            b = b.stubborn(i, q);
        }
        if let Some(z0) = &self.initial {
            b = b.initial(z0.clone());
        }
        b.build()
    }

    /// Canonical text form; the matrix is always written inline.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let join = |v: &mut dyn Iterator<Item = String>| v.collect::<Vec<_>>().join(" ");
        s.push_str("[matrix]\n");
        for row in &self.matrix {
            s.push_str(&join(&mut row.iter().map(|x| x.to_string())));
            s.push('\n');
        }
        s.push_str("\n[attitudes]\n");
        match &self.attitudes {
            AttitudeSpec::Global(a) => writeln!(s, "global = {a}").unwrap(),
            AttitudeSpec::PerAgent(v) => {
                for att in [Attitude::Competitive, Attitude::Cooperative] {
                    let agents: Vec<String> =
                        (0..v.len()).filter(|&i| v[i] == Some(att)).map(|i| i.to_string()).collect();
                    if !agents.is_empty() {
                        writeln!(s, "{att} = {}", agents.join(" ")).unwrap();
                    }
                }
            }
        }
        if !self.forcing.is_empty() {
            s.push_str("\n[forcing]\n");
            for (i, f) in &self.forcing {
                match f {
                    Forcing::Constant(q) => writeln!(s, "{i} = constant {q}").unwrap(),
                    Forcing::Piecewise(p) => writeln!(
                        s,
                        "{i} = piecewise {}",
                        join(&mut p.iter().map(|(start, v)| format!("{v}@{start}")))
                    )
                    .unwrap(),
                    Forcing::Callback { limit, .. } => {
                        writeln!(s, "# agent {i}: callback forcing (limit {limit}) has no text form").unwrap()
                    }
                }
            }
        }
        if !self.stubborn.is_empty() {
            s.push_str("\n[stubborn]\n");
            for (i, q) in &self.stubborn {
                writeln!(s, "{i} = {q}").unwrap();
            }
        }
        s.push_str("\n[schedule]\n");
        match self.schedule {
            StepSchedule::Urn { m } => writeln!(s, "kind = urn\nm = {m}").unwrap(),
            StepSchedule::PowerLaw { gamma, scale } => {
                writeln!(s, "kind = power\ngamma = {gamma}\nscale = {scale}").unwrap()
            }
        }
        s.push_str("\n[run]\n");
        writeln!(s, "steps = {}\nruns = {}\nseed = {}", self.n_steps, self.n_runs, self.seed).unwrap();
        if let Some(z0) = &self.initial {
            writeln!(s, "initial = {}", join(&mut z0.iter().map(|x| x.to_string()))).unwrap();
        }
        if let Some(out) = &self.out {
            writeln!(s, "out = {}", out.display()).unwrap();
        }
        writeln!(s, "save_trajectories = {}", self.save_trajectories).unwrap();
        s.push_str("\n[tolerance]\n");
        let t = &self.thresholds;
        writeln!(
            s,
            "tol = {}\nvar_min = {}\ndeterministic_pass_fraction = {}",
            t.tol, t.var_min, t.deterministic_pass_fraction
        )
        .unwrap();
        s
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    Matrix,
    Attitudes,
    Forcing,
    Stubborn,
    Schedule,
    Run,
    Tolerance,
}

impl Section {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "matrix" => Section::Matrix,
            "attitudes" => Section::Attitudes,
            "forcing" => Section::Forcing,
            "stubborn" => Section::Stubborn,
            "schedule" => Section::Schedule,
            "run" => Section::Run,
            "tolerance" => Section::Tolerance,
            _ => return None,
        })
    }
}

/// Parses a config whose relative paths resolve against the working directory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    parse_config_in(text, Path::new("."))
}

/// Reads and parses a config file; relative paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(parse_config_in(&text, base)?)
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str, errs: &mut Vec<ConfigError>) -> Option<T> {
    match value.parse() {
        Ok(v) => Some(v),
        Err(_) => {
            errs.push(ConfigError::parse(line, format!("`{key}`: cannot parse `{value}`")));
            None
        }
    }
}

fn parse_agents(line: usize, value: &str, errs: &mut Vec<ConfigError>) -> Vec<usize> {
    value
        .split_whitespace()
        .filter_map(|tok| parse_num::<usize>(line, "agent list", tok, errs))
        .collect()
}

fn parse_forcing(line: usize, value: &str, errs: &mut Vec<ConfigError>) -> Option<Forcing> {
    let mut it = value.split_whitespace();
    match it.next() {
        Some("constant") => {
            let q = parse_num::<f64>(line, "constant", it.next().unwrap_or(""), errs)?;
            if it.next().is_some() {
                errs.push(ConfigError::parse(line, "constant forcing takes one value"));
                return None;
            }
            Some(Forcing::Constant(q))
        }
        Some("piecewise") => {
            let mut pieces = Vec::new();
            for tok in it {
                let Some((v, start)) = tok.split_once('@') else {
                    errs.push(ConfigError::parse(line, format!("piece `{tok}` is not value@step")));
                    return None;
                };
                let v = parse_num::<f64>(line, "piece value", v, errs)?;
                let start = parse_num::<u64>(line, "piece step", start, errs)?;
                pieces.push((start, v));
            }
            if pieces.is_empty() {
                errs.push(ConfigError::parse(line, "piecewise forcing needs at least one value@step"));
                return None;
            }
            if pieces.windows(2).any(|w| w[0].0 >= w[1].0) {
                errs.push(ConfigError::parse(line, "piece start steps must increase"));
                return None;
            }
            Some(Forcing::Piecewise(pieces))
        }
        other => {
            errs.push(ConfigError::parse(
                line,
                format!("unknown forcing kind `{}` (constant or piecewise)", other.unwrap_or("")),
            ));
            None
        }
    }
}

fn parse_bool(line: usize, key: &str, value: &str, errs: &mut Vec<ConfigError>) -> Option<bool> {
    match value {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => {
            errs.push(ConfigError::parse(line, format!("`{key}`: expected true or false, got `{value}`")));
            None
        }
    }
}

/// Parses a config, resolving `[matrix] file` against `base`. All problems
/// are collected before returning.
pub fn parse_config_in(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigErrors> {
    let mut errs = Vec::new();
    let mut section: Option<Section> = None;
    let mut seen_sections = Vec::new();
    let mut any_header = false;

    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut matrix_file: Option<(usize, String)> = None;
    let mut global: Option<Attitude> = None;
    let mut lists: Vec<(usize, Attitude, Vec<usize>)> = Vec::new();
    let mut forcing: Vec<(usize, usize, Forcing)> = Vec::new();
    let mut stubborn: Vec<(usize, usize, f64)> = Vec::new();
    let mut sched_kind: Option<String> = None;
    let (mut m, mut gamma, mut scale) = (None::<u32>, None::<f64>, None::<f64>);
    let mut cfg = ExperimentConfig::new(Vec::new(), Attitude::Competitive);

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                errs.push(ConfigError::parse(line, "unterminated section header"));
                continue;
            };
            any_header = true;
            section = Section::from_name(name.trim());
            match section {
                None => errs.push(ConfigError::parse(line, format!("unknown section [{}]", name.trim()))),
                Some(s) if seen_sections.contains(&s) => {
                    errs.push(ConfigError::parse(line, format!("section [{}] repeated", name.trim())))
                }
                Some(s) => seen_sections.push(s),
            }
            continue;
        }
        let Some(sec) = section else {
            // Lines under an unknown or malformed header were already reported.
            if !any_header {
                errs.push(ConfigError::parse(line, "entry outside any section"));
            }
            continue;
        };
        let kv = content.split_once('=').map(|(k, v)| (k.trim(), v.trim()));

        match (sec, kv) {
            (Section::Matrix, None) => match parse_row(content) {
                Ok(r) => rows.push((line, r)),
                Err(e) => errs.push(ConfigError::parse(line, e.to_string())),
            },
            (Section::Matrix, Some(("file", path))) => matrix_file = Some((line, path.to_string())),
            (Section::Attitudes, Some(("global", v))) => match v.parse::<Attitude>() {
                Ok(a) => global = Some(a),
                Err(_) if v == "auto" => global = Some(Attitude::Competitive),
                Err(e) => errs.push(ConfigError::parse(line, e.to_string())),
            },
            (Section::Attitudes, Some((k, v))) if k.parse::<Attitude>().is_ok() => {
                lists.push((line, k.parse().unwrap(), parse_agents(line, v, &mut errs)))
            }
            (Section::Forcing, Some((k, v))) => {
                if let (Some(i), Some(f)) = (parse_num::<usize>(line, "agent", k, &mut errs), parse_forcing(line, v, &mut errs)) {
                    forcing.push((line, i, f));
                }
            }
            (Section::Stubborn, Some((k, v))) => {
                if let (Some(i), Some(q)) =
                    (parse_num::<usize>(line, "agent", k, &mut errs), parse_num::<f64>(line, "stubborn value", v, &mut errs))
                {
                    stubborn.push((line, i, q));
                }
            }
            (Section::Schedule, Some(("kind", v))) => sched_kind = Some(v.to_string()),
            (Section::Schedule, Some(("m", v))) => m = parse_num(line, "m", v, &mut errs),
            (Section::Schedule, Some(("gamma", v))) => gamma = parse_num(line, "gamma", v, &mut errs),
            (Section::Schedule, Some(("scale", v))) => scale = parse_num(line, "scale", v, &mut errs),
            (Section::Run, Some(("steps", v))) => {
                // Accept 2e5 as well as 200000.
                if let Some(x) = v.parse::<u64>().ok().or_else(|| {
                    v.parse::<f64>().ok().filter(|x| *x >= 0.0 && x.fract() == 0.0 && *x < 1e18).map(|x| x as u64)
                }) {
                    cfg.n_steps = x;
                } else {
                    errs.push(ConfigError::parse(line, format!("`steps`: cannot parse `{v}`")));
                }
            }
            (Section::Run, Some(("runs", v))) => {
                if let Some(x) = parse_num(line, "runs", v, &mut errs) {
                    cfg.n_runs = x;
                }
            }
            (Section::Run, Some(("seed", v))) => {
                if let Some(x) = parse_num(line, "seed", v, &mut errs) {
                    cfg.seed = x;
                }
            }
            (Section::Run, Some(("initial", v))) => match parse_row(v) {
                Ok(r) => cfg.initial = Some(r),
                Err(e) => errs.push(ConfigError::parse(line, e.to_string())),
            },
            (Section::Run, Some(("out", v))) => cfg.out = Some(PathBuf::from(v)),
            (Section::Run, Some(("save_trajectories", v))) => {
                if let Some(b) = parse_bool(line, "save_trajectories", v, &mut errs) {
                    cfg.save_trajectories = b;
                }
            }
            (Section::Tolerance, Some(("tol", v))) => {
                if let Some(x) = parse_num(line, "tol", v, &mut errs) {
                    cfg.thresholds.tol = x;
                }
            }
            (Section::Tolerance, Some(("var_min", v))) => {
                if let Some(x) = parse_num(line, "var_min", v, &mut errs) {
                    cfg.thresholds.var_min = x;
                }
            }
            (Section::Tolerance, Some(("deterministic_pass_fraction", v))) => {
                if let Some(x) = parse_num(line, "deterministic_pass_fraction", v, &mut errs) {
                    cfg.thresholds.deterministic_pass_fraction = x;
                }
            }
            (_, Some((k, _))) => errs.push(ConfigError::parse(line, format!("unknown key `{k}`"))),
            (_, None) => errs.push(ConfigError::parse(line, format!("expected key = value, got `{content}`"))),
        }
    }

    // Matrix.
    match (matrix_file, rows.is_empty()) {
        (Some((line, _)), false) => errs.push(ConfigError::parse(line, "matrix has both a file and inline rows")),
        (Some((_, path)), true) => {
            let full = base.join(&path);
            match std::fs::read_to_string(&full) {
                Ok(t) => match parse_matrix_text(&t) {
                    Ok(r) => cfg.matrix = r,
                    Err(e) => errs.push(ConfigError::validation("matrix", format!("{}: {e}", full.display()))),
                },
                Err(e) => errs.push(ConfigError::validation("matrix", format!("{}: {e}", full.display()))),
            }
            cfg.matrix_source = MatrixSource::File(PathBuf::from(path));
        }
        (None, true) => errs.push(ConfigError::validation("matrix", "no matrix given")),
        (None, false) => cfg.matrix = rows.into_iter().map(|(_, r)| r).collect(),
    }
    let matrix = if cfg.matrix.is_empty() {
        None
    } else {
        match validate_matrix(&cfg.matrix) {
            Ok(m) => Some(m),
            Err(e) => {
                errs.push(ConfigError::validation("matrix", e.to_string()));
                None
            }
        }
    };
    let n = matrix.as_ref().map(|m| m.n_agents());
    let in_range = |field: &str, line: usize, i: usize, errs: &mut Vec<ConfigError>| match n {
        Some(n) if i >= n => {
            errs.push(ConfigError::validation(field, format!("line {line}: agent {i} out of range (n = {n})")));
            false
        }
        _ => true,
    };

    // Stubborn agents.
    for (line, i, q) in stubborn {
        if !in_range("stubborn", line, i, &mut errs) {
            continue;
        }
        if !(0.0..=1.0).contains(&q) {
            errs.push(ConfigError::validation("stubborn", format!("agent {i} value {q} is outside [0, 1]")));
        }
        if cfg.stubborn.insert(i, q).is_some() {
            errs.push(ConfigError::validation("stubborn", format!("agent {i} listed twice")));
        }
    }

    // Attitudes.
    if global.is_some() && !lists.is_empty() {
        errs.push(ConfigError::validation("attitudes", "use either `global` or explicit agent lists"));
    } else if !lists.is_empty() {
        let size = n.unwrap_or(0);
        let mut per_agent: Vec<Option<Attitude>> = vec![None; size];
        for (line, att, agents) in &lists {
            for &i in agents {
                if !in_range("attitudes", *line, i, &mut errs) {
                    continue;
                }
                if per_agent[i].replace(*att).is_some() {
                    errs.push(ConfigError::validation("attitudes", format!("agent {i} assigned twice")));
                }
            }
        }
        if n.is_some() {
            for (i, a) in per_agent.iter().enumerate() {
                if a.is_none() && !cfg.stubborn.contains_key(&i) {
                    errs.push(ConfigError::validation("attitudes", format!("agent {i} unassigned")));
                }
            }
        }
        cfg.attitudes = AttitudeSpec::PerAgent(per_agent);
    } else if let Some(a) = global {
        cfg.attitudes = AttitudeSpec::Global(a);
    }

    // Forcing.
    for (line, i, f) in forcing {
        if !in_range("forcing", line, i, &mut errs) {
            continue;
        }
        if let Some(m) = &matrix {
            if m.row_kind(i) == RowKind::Stochastic {
                errs.push(ConfigError::validation("forcing", format!("row {i} has α_i = 1")));
            }
        }
        if cfg.stubborn.contains_key(&i) {
            errs.push(ConfigError::validation("forcing", format!("agent {i} is stubborn")));
        }
        let values: Vec<f64> = match &f {
            Forcing::Constant(q) => vec![*q],
            Forcing::Piecewise(p) => p.iter().map(|x| x.1).collect(),
            Forcing::Callback { limit, .. } => vec![*limit],
        };
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            errs.push(ConfigError::validation("forcing", format!("agent {i} value {v} is outside [0, 1]")));
        }
        if cfg.forcing.insert(i, f).is_some() {
            errs.push(ConfigError::validation("forcing", format!("agent {i} listed twice")));
        }
    }

    // Schedule.
    let kind = sched_kind.as_deref().unwrap_or("urn");
    match kind {
        "urn" => {
            if gamma.is_some() || scale.is_some() {
                errs.push(ConfigError::validation("schedule", "gamma/scale apply to kind = power only"));
            }
            cfg.schedule = StepSchedule::Urn { m: m.unwrap_or(1) };
        }
        "power" | "powerlaw" => {
            if m.is_some() {
                errs.push(ConfigError::validation("schedule", "m applies to kind = urn only"));
            }
            cfg.schedule = StepSchedule::PowerLaw { gamma: gamma.unwrap_or(1.0), scale: scale.unwrap_or(1.0) };
        }
        other => errs.push(ConfigError::validation("schedule", format!("unknown kind `{other}` (urn or power)"))),
    }
    if let Err(e) = cfg.schedule.validate() {
        errs.push(ConfigError::validation("schedule", e.to_string()));
    }

    // Run and tolerances.
    if cfg.n_runs == 0 {
        errs.push(ConfigError::validation("run", "runs must be at least 1"));
    }
    if let (Some(z0), Some(n)) = (&cfg.initial, n) {
        if z0.len() != n {
            errs.push(ConfigError::validation("run", format!("initial has {} values for {n} agents", z0.len())));
        }
        if let Some(v) = z0.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            errs.push(ConfigError::validation("run", format!("initial value {v} is outside [0, 1]")));
        }
    }
    let t = cfg.thresholds;
    if !(t.tol > 0.0) {
        errs.push(ConfigError::validation("tolerance", "tol must be positive"));
    }
    if !(t.var_min >= 0.0) {
        errs.push(ConfigError::validation("tolerance", "var_min must be nonnegative"));
    }
    if !(t.deterministic_pass_fraction > 0.0 && t.deterministic_pass_fraction <= 1.0) {
        errs.push(ConfigError::validation("tolerance", "deterministic_pass_fraction must lie in (0, 1]"));
    }

    // Class-level consistency only once everything else is sound.
    if errs.is_empty() {
        if let Err(e) = cfg.build_system() {
            errs.push(ConfigError::validation("system", e.to_string()));
        }
    }

    if errs.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn validation_errors(text: &str) -> Vec<(String, String)> {
        parse_config(text)
            .unwrap_err()
            .0
            .into_iter()
            .filter_map(|e| match e {
                ConfigError::Validation { field, reason } => Some((field, reason)),
                ConfigError::Parse { .. } => None,
            })
            .collect()
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = parse_config("[matrix]\n0 1\n1 0\n[attitudes]\nglobal = competitive\n").unwrap();
        assert_eq!(cfg.schedule, StepSchedule::Urn { m: 1 });
        assert_eq!(cfg.n_steps, 200_000);
        assert_eq!(cfg.n_runs, 50);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.attitudes, AttitudeSpec::Global(Attitude::Competitive));
        assert_eq!(cfg.thresholds, Thresholds::default());
    }

    #[test]
    fn attitudes_default_to_competitive() {
        let cfg = parse_config("[matrix]\n0 1\n1 0\n").unwrap();
        assert_eq!(cfg.attitudes, AttitudeSpec::Global(Attitude::Competitive));
    }

    #[test]
    fn unassigned_agent() {
        let errs = validation_errors("[matrix]\n0 1 0\n0 0 1\n1 0 0\n[attitudes]\ncompetitive = 0 1\n");
        assert_eq!(errs, vec![("attitudes".to_string(), "agent 2 unassigned".to_string())]);
    }

    #[test]
    fn forcing_on_stochastic_row() {
        let errs = validation_errors("[matrix]\n0.3 0.3\n0.5 0.5\n[forcing]\n1 = constant 0\n");
        assert_eq!(errs, vec![("forcing".to_string(), "row 1 has α_i = 1".to_string())]);
    }

    #[test]
    fn all_errors_are_reported() {
        let text = "[matrix]\n0 1 0\n0 0 1\n1 0 0\n[attitudes]\ncompetitive = 0\n[forcing]\n1 = constant 0\n\
                    [schedule]\nkind = power\ngamma = 0.4\n[run]\nruns = x\nbogus = 1\n";
        let errs = parse_config(text).unwrap_err().0;
        assert!(errs.contains(&ConfigError::Parse { line: 13, message: "`runs`: cannot parse `x`".into() }));
        assert!(errs.contains(&ConfigError::Parse { line: 14, message: "unknown key `bogus`".into() }));
        let fields: Vec<&str> = errs
            .iter()
            .filter_map(|e| match e {
                ConfigError::Validation { field, .. } => Some(field.as_str()),
                _ => None,
            })
            .collect();
        assert_eq!(fields, ["attitudes", "attitudes", "forcing", "schedule"]);
    }

    #[test]
    fn stubborn_agents_need_no_attitude() {
        let text = "[matrix]\n1 0\n1 0\n[attitudes]\ncooperative = 1\n[stubborn]\n0 = 0.8\n";
        let cfg = parse_config(text).unwrap();
        let s = cfg.build_system().unwrap();
        assert_eq!(s.stubborn_value(0), Some(0.8));
        assert_eq!(s.agent_attitude(1), Attitude::Cooperative);
    }

    #[test]
    fn mixed_attitudes_in_one_class() {
        let errs = validation_errors("[matrix]\n0 1\n1 0\n[attitudes]\ncompetitive = 0\ncooperative = 1\n");
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].0, "system");
    }

    #[test]
    fn forcing_kinds_and_round_trip() {
        let text = "# forced\n[matrix]\n0.3 0.3   # row 0\n0.2 0.5\n[forcing]\n0 = piecewise 0.5@0 1@1000\n\
                    1 = constant 0\n[schedule]\nkind = power\ngamma = 0.75\nscale = 0.5\n\
                    [run]\nsteps = 2e4\nruns = 3\nseed = 9\ninitial = 0.1 0.9\nsave_trajectories = true\n\
                    [tolerance]\ntol = 0.05\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.forcing[&0], Forcing::Piecewise(vec![(0, 0.5), (1000, 1.0)]));
        assert_eq!(cfg.n_steps, 20_000);
        assert_eq!(cfg.schedule, StepSchedule::PowerLaw { gamma: 0.75, scale: 0.5 });
        let again = parse_config(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn per_agent_round_trip() {
        let text = "[matrix]\n0 1 0 0\n1 0 0 0\n0 0 0 1\n0 0 1 0\n[attitudes]\ncooperative = 2 3\ncompetitive = 0 1\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(parse_config(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn matrix_from_file() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "2\n0 1\n1 0\n").unwrap();
        std::fs::write(dir.path().join("c.ini"), "[matrix]\nfile = a.txt\n").unwrap();
        let cfg = load_config(&dir.path().join("c.ini")).unwrap();
        assert_eq!(cfg.matrix, vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(cfg.matrix_source, MatrixSource::File("a.txt".into()));
        let errs = validation_errors("[matrix]\nfile = /nonexistent/a.txt\n");
        assert_eq!(errs[0].0, "matrix");
    }

    #[test]
    fn structural_parse_errors() {
        let errs = parse_config("[matrix\n[nope]\n").unwrap_err().0;
        assert!(matches!(errs[0], ConfigError::Parse { line: 1, .. }));
        assert!(matches!(errs[1], ConfigError::Parse { line: 2, .. }));
        assert!(errs.contains(&ConfigError::Validation { field: "matrix".into(), reason: "no matrix given".into() }));
    }

    #[test]
    fn invalid_matrix_is_a_validation_error() {
        let errs = validation_errors("[matrix]\n0.7 0.7\n0 1\n");
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].0, "matrix");
    }
}
