//! Seeded ensembles and their comparison with predicted limits.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, Analysis};
use crate::dynamics::{simulate_stream, InteractionSystem, Sampling, SimulationOptions, StepSchedule};
use crate::error::{Error, Result};
use crate::spectral::{LimitKind, LimitPrediction};

/// Minimum ensemble size for a non-degeneracy verdict.
pub const MIN_NONDEGENERACY_RUNS: usize = 30;

const VAR_MIN_NOTE: &str =
    "var_min is an implementation convention (pilot-run calibrated); no variance bound is implied by the limit theorems";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Point and structure tolerance on final states.
    pub tol: f64,
    /// Minimum cross-run variance accepted as evidence of a random limit.
    pub var_min: f64,
    /// Fraction of runs that must meet `tol` for deterministic-half classes.
    pub deterministic_pass_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { tol: 0.02, var_min: 1e-3, deterministic_pass_fraction: 0.95 }
    }
}

/// Per-run diagnostics of one class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunDiagnostics {
    /// `max Z(i) - min Z(i)` within the class.
    pub sync_gap: f64,
    /// `max |Z(i) + Z(j) - 1|` over `i` in `I`, `j` in `J`; bipartite classes only.
    pub antisync_residual: Option<f64>,
    /// `max |Z(i) - 1/2|`.
    pub half_distance: f64,
    /// Distance to the predicted point limit (forced, stubborn, affine or half).
    pub limit_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassDiagnostics {
    pub class_id: usize,
    pub kind: &'static str,
    pub per_run: Vec<RunDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleStats {
    pub n_runs: usize,
    pub n_steps: u64,
    pub master_seed: u64,
    /// `runs x agents`.
    pub finals: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Unbiased cross-run variance per agent (0 for a single run).
    pub variance: Vec<f64>,
    pub checkpoints: Vec<u64>,
    /// `[checkpoint][run][agent]`.
    pub checkpoint_states: Vec<Vec<Vec<f64>>>,
    pub classes: Vec<ClassDiagnostics>,
    #[serde(skip)]
    pub analysis: Analysis,
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, x| m.max(x.abs()))
}

/// Diagnostics of every class for one full state.
pub fn state_diagnostics(analysis: &Analysis, system: &InteractionSystem, z: &[f64]) -> Result<Vec<RunDiagnostics>> {
    let needs_recursion = analysis
        .classes
        .iter()
        .any(|c| matches!(c.prediction.kind, LimitKind::AffineOfLowerLevels(_)));
    let recursive = if needs_recursion { Some(analysis.limits_given_level0(system, z)?) } else { None };
    Ok(analysis
        .classes
        .iter()
        .map(|c| {
            let vals: Vec<f64> = c.members.iter().map(|&i| z[i]).collect();
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let half_distance = max_abs(vals.iter().map(|v| v - 0.5));
            let antisync_residual = match &c.prediction.kind {
                LimitKind::RandomAntiSynchronized { i_side, j_side } => Some(max_abs(
                    i_side.iter().flat_map(|&i| j_side.iter().map(move |&j| z[i] + z[j] - 1.0)),
                )),
                _ => None,
            };
            let predicted = match &c.prediction.kind {
                LimitKind::AffineOfLowerLevels(_) => recursive.as_ref().map(|r| r[c.id].clone()),
                kind => kind.fixed_value(c.members.len()),
            };
            let limit_residual =
                predicted.map(|p| max_abs(vals.iter().zip(p.iter()).map(|(v, q)| v - q)));
            RunDiagnostics { sync_gap: hi - lo, antisync_residual, half_distance, limit_residual }
        })
        .collect())
}

pub fn run_ensemble(
    system: &InteractionSystem,
    schedule: &StepSchedule,
    master_seed: u64,
    n_runs: usize,
    n_steps: u64,
) -> Result<EnsembleStats> {
    run_ensemble_with_checkpoints(system, schedule, master_seed, n_runs, n_steps, &[])
}

/// Like [`run_ensemble`], also keeping every run's state at `checkpoints`.
/// Run `r` uses stream `r` of `master_seed`, so results do not depend on
/// thread scheduling.
pub fn run_ensemble_with_checkpoints(
    system: &InteractionSystem,
    schedule: &StepSchedule,
    master_seed: u64,
    n_runs: usize,
    n_steps: u64,
    checkpoints: &[u64],
) -> Result<EnsembleStats> {
    if n_runs == 0 {
        return Err(Error::TooFewRuns { needed: 1, got: 0 });
    }
    let analysis = analyze(system)?;
    let mut checkpoints: Vec<u64> = checkpoints.iter().copied().filter(|&c| c <= n_steps).collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();
    let opts = SimulationOptions::new(n_steps).sampling(Sampling::Steps(checkpoints.clone()));
    let trajectories = (0..n_runs as u64)
        .into_par_iter()
        .map(|run| simulate_stream(system, schedule, master_seed, run, &opts))
        .collect::<Result<Vec<_>>>()?;

    let n = system.n_agents();
    let finals: Vec<Vec<f64>> = trajectories.iter().map(|t| t.final_state.clone()).collect();
    let checkpoint_states = checkpoints
        .iter()
        .map(|&c| trajectories.iter().map(|t| t.state_at(c).unwrap().to_vec()).collect())
        .collect();
    let mean: Vec<f64> = (0..n).map(|i| finals.iter().map(|z| z[i]).sum::<f64>() / n_runs as f64).collect();
    let variance: Vec<f64> = (0..n)
        .map(|i| {
            if n_runs < 2 {
                0.0
            } else {
                finals.iter().map(|z| (z[i] - mean[i]).powi(2)).sum::<f64>() / (n_runs - 1) as f64
            }
        })
        .collect();

    let per_run: Vec<Vec<RunDiagnostics>> =
        finals.iter().map(|z| state_diagnostics(&analysis, system, z)).collect::<Result<_>>()?;
    let classes = analysis
        .classes
        .iter()
        .enumerate()
        .map(|(k, c)| ClassDiagnostics {
            class_id: c.id,
            kind: c.prediction.kind.name(),
            per_run: per_run.iter().map(|d| d[k]).collect(),
        })
        .collect();

    Ok(EnsembleStats {
        n_runs,
        n_steps,
        master_seed,
        finals,
        mean,
        variance,
        checkpoints,
        checkpoint_states,
        classes,
        analysis,
    })
}

impl EnsembleStats {
    /// Median over runs of a class's `half_distance` at a recorded checkpoint.
    pub fn median_half_distance_at(&self, class: usize, checkpoint: u64) -> Option<f64> {
        let k = self.checkpoints.binary_search(&checkpoint).ok()?;
        let members = &self.analysis.classes[class].members;
        let mut d: Vec<f64> = self.checkpoint_states[k]
            .iter()
            .map(|z| max_abs(members.iter().map(|&i| z[i] - 0.5)))
            .collect();
        Some(median(&mut d))
    }

    /// Writes `run,agent,z_final`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "run,agent,z_final")?;
        for (run, z) in self.finals.iter().enumerate() {
            for (agent, v) in z.iter().enumerate() {
                writeln!(w, "{run},{agent},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NondegeneracyEvidence {
    pub class_id: usize,
    pub representative_agent: usize,
    pub variance: f64,
    pub var_min: f64,
    /// Counts of the representative's finals in ten equal bins of `[0, 1]`.
    pub histogram: Vec<usize>,
    pub pass: bool,
}

/// Cross-run variance of a random-limit class's representative coordinate
/// (its smallest agent, which always lies in `I`).
pub fn nondegeneracy_test(stats: &EnsembleStats, class: usize, var_min: f64) -> Result<NondegeneracyEvidence> {
    let c = stats
        .analysis
        .classes
        .get(class)
        .ok_or_else(|| Error::MismatchedShapes(format!("no class {class}")))?;
    if !c.prediction.kind.is_random() {
        return Err(Error::NotApplicable { class, kind: c.prediction.kind.name().into() });
    }
    if stats.n_runs < MIN_NONDEGENERACY_RUNS {
        return Err(Error::TooFewRuns { needed: MIN_NONDEGENERACY_RUNS, got: stats.n_runs });
    }
    let agent = c.members[0];
    let mut histogram = vec![0; 10];
    for z in &stats.finals {
        histogram[((z[agent] * 10.0) as usize).min(9)] += 1;
    }
    let variance = stats.variance[agent];
    Ok(NondegeneracyEvidence {
        class_id: class,
        representative_agent: agent,
        variance,
        var_min,
        histogram,
        pass: variance >= var_min,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassVerdict {
    pub class_id: usize,
    pub level: usize,
    pub members: Vec<usize>,
    pub kind: &'static str,
    pub statistic_name: &'static str,
    /// Order statistic of the per-run values at the required pass fraction
    /// (the maximum when every run must pass).
    pub statistic: f64,
    pub threshold: f64,
    pub required_pass_fraction: f64,
    pub pass_fraction: f64,
    pub nondegeneracy: Option<NondegeneracyEvidence>,
    pub note: Option<String>,
    pub pass: bool,
    pub n_runs: usize,
    pub n_steps: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: u64,
    pub n_runs: usize,
    pub n_steps: u64,
    pub thresholds: Thresholds,
    pub var_min_note: &'static str,
    pub all_pass: bool,
    pub classes: Vec<ClassVerdict>,
}

pub fn verify_against_prediction(
    stats: &EnsembleStats,
    predictions: &[LimitPrediction],
    thresholds: &Thresholds,
) -> Result<VerificationReport> {
    if predictions.len() != stats.classes.len() {
        return Err(Error::MismatchedShapes(format!(
            "{} predictions for {} classes",
            predictions.len(),
            stats.classes.len()
        )));
    }
    let mut classes = Vec::with_capacity(predictions.len());
    for (pred, diag) in predictions.iter().zip(&stats.classes) {
        if pred.class_id != diag.class_id || pred.members != stats.analysis.classes[diag.class_id].members {
            return Err(Error::MismatchedShapes(format!("prediction for class {} does not match", pred.class_id)));
        }
        let (statistic_name, values, required): (&'static str, Vec<f64>, f64) = match &pred.kind {
            LimitKind::DeterministicHalf => (
                "half_distance",
                diag.per_run.iter().map(|d| d.half_distance).collect(),
                thresholds.deterministic_pass_fraction,
            ),
            LimitKind::RandomSynchronized => ("sync_gap", diag.per_run.iter().map(|d| d.sync_gap).collect(), 1.0),
            LimitKind::RandomAntiSynchronized { .. } => (
                "antisync_residual",
                diag.per_run.iter().map(|d| d.antisync_residual.unwrap_or(f64::INFINITY)).collect(),
                1.0,
            ),
            LimitKind::Forced { .. } | LimitKind::Stubborn { .. } | LimitKind::AffineOfLowerLevels(_) => (
                "limit_residual",
                diag.per_run.iter().map(|d| d.limit_residual.unwrap_or(f64::INFINITY)).collect(),
                1.0,
            ),
        };
        let n = values.len();
        let passing = values.iter().filter(|&&v| v <= thresholds.tol).count();
        let pass_fraction = passing as f64 / n as f64;
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let rank = ((required * n as f64).ceil() as usize).clamp(1, n);
        let statistic = sorted[rank - 1];
        let mut pass = pass_fraction >= required;

        let (mut nondegeneracy, mut note) = (None, None);
        if pred.kind.is_random() {
            match nondegeneracy_test(stats, pred.class_id, thresholds.var_min) {
                Ok(ev) => {
                    pass &= ev.pass;
                    nondegeneracy = Some(ev);
                }
                Err(e) => {
                    pass = false;
                    note = Some(format!("non-degeneracy not assessed: {e}"));
                }
            }
        }
        classes.push(ClassVerdict {
            class_id: pred.class_id,
            level: pred.level,
            members: pred.members.clone(),
            kind: pred.kind.name(),
            statistic_name,
            statistic,
            threshold: thresholds.tol,
            required_pass_fraction: required,
            pass_fraction,
            nondegeneracy,
            note,
            pass,
            n_runs: stats.n_runs,
            n_steps: stats.n_steps,
            seed: stats.master_seed,
        });
    }
    Ok(VerificationReport {
        seed: stats.master_seed,
        n_runs: stats.n_runs,
        n_steps: stats.n_steps,
        thresholds: *thresholds,
        var_min_note: VAR_MIN_NOTE,
        all_pass: classes.iter().all(|c| c.pass),
        classes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HierarchyResidual {
    pub class_id: usize,
    pub level: usize,
    pub mean: f64,
    pub max: f64,
}

/// `|U - U_predicted|_inf` for every class of level >= 1, where the
/// prediction feeds each state's own level-0 values through the recursion.
pub fn hierarchy_residuals_for_states(
    analysis: &Analysis,
    system: &InteractionSystem,
    states: &[Vec<f64>],
) -> Result<Vec<HierarchyResidual>> {
    let upper: Vec<_> = analysis.classes.iter().filter(|c| c.level > 0).collect();
    if upper.is_empty() || states.is_empty() {
        return Ok(Vec::new());
    }
    let mut sums = vec![0.0; upper.len()];
    let mut maxes = vec![0.0f64; upper.len()];
    for z in states {
        let limits = analysis.limits_given_level0(system, z)?;
        for (k, c) in upper.iter().enumerate() {
            let r = max_abs(c.members.iter().zip(limits[c.id].iter()).map(|(&i, u)| z[i] - u));
            sums[k] += r;
            maxes[k] = maxes[k].max(r);
        }
    }
    Ok(upper
        .iter()
        .enumerate()
        .map(|(k, c)| HierarchyResidual {
            class_id: c.id,
            level: c.level,
            mean: sums[k] / states.len() as f64,
            max: maxes[k],
        })
        .collect())
}

/// Hierarchy residuals on the ensemble's final states.
pub fn hierarchy_residuals(stats: &EnsembleStats, system: &InteractionSystem) -> Result<Vec<HierarchyResidual>> {
    hierarchy_residuals_for_states(&stats.analysis, system, &stats.finals)
}

/// Hierarchy residuals on the states recorded at `checkpoint`.
pub fn hierarchy_residuals_at(
    stats: &EnsembleStats,
    system: &InteractionSystem,
    checkpoint: u64,
) -> Result<Vec<HierarchyResidual>> {
    let k = stats
        .checkpoints
        .binary_search(&checkpoint)
        .map_err(|_| Error::MismatchedShapes(format!("step {checkpoint} was not recorded")))?;
    hierarchy_residuals_for_states(&stats.analysis, system, &stats.checkpoint_states[k])
}
