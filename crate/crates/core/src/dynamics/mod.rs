//! Exact simulation of the reinforced recursion
//! `Z_{n+1}(i) = (1 - r_n) Z_n(i) + r_n Y_{n+1}(i)` with
//! `P(Y_{n+1}(i) = 1 | F_n)` given by [`bernoulli_probabilities`].
//!
//! Given the current state the `Y_{n+1}(i)` are drawn independently, one
//! uniform per agent in ascending agent order. Each run owns a ChaCha8
//! stream derived from `(master seed, run index)`.

mod schedule;
mod system;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use schedule::StepSchedule;
pub use system::{Forcing, InteractionSystem, SystemBuilder};

use crate::error::{Error, Result};
use crate::spectral::Attitude;

const PROBABILITY_SLACK: f64 = 1e-12;

/// Generator for run `stream` of an ensemble seeded with `master`.
pub fn run_rng(master: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream);
    rng
}

fn fill_probabilities(system: &InteractionSystem, z: &[f64], n: u64, out: &mut [f64]) -> Result<()> {
    for i in 0..z.len() {
        if system.stubborn_value(i).is_some() {
            out[i] = z[i];
            continue;
        }
        let mut p = system.self_weight[i] * z[i];
        match system.agent_attitude(i) {
            Attitude::Competitive => {
                for &(j, w) in &system.neighbours[i] {
                    p += w * (1.0 - z[j]);
                }
            }
            Attitude::Cooperative => {
                for &(j, w) in &system.neighbours[i] {
                    p += w * z[j];
                }
            }
        }
        let fw = system.forcing_weight[i];
        if fw > 0.0 {
            p += fw * system.forcing_value(i, n);
        }
        if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { agent: i, value: p });
        }
        out[i] = p;
    }
    Ok(())
}

/// `P(Y_{n+1}(i) = 1 | F_n)` for every agent at state `z` and step `n`.
///
/// Competitive agents see `alpha_ij (1 - z_j)`, cooperative agents
/// `alpha_ij z_j`; forced agents add `(1 - alpha_i) q_n(i)`; stubborn agents
/// return their fixed state.
pub fn bernoulli_probabilities(system: &InteractionSystem, z: &[f64], n: u64) -> Result<Vec<f64>> {
    if z.len() != system.n_agents() {
        return Err(Error::MismatchedShapes(format!("state of length {} for {} agents", z.len(), system.n_agents())));
    }
    let mut p = vec![0.0; z.len()];
    fill_probabilities(system, z, n, &mut p)?;
    Ok(p)
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    n: u64,
    z: Vec<f64>,
    rng: ChaCha8Rng,
    p: Vec<f64>,
    innovation: Vec<f64>,
}

impl SimulationState {
    pub fn new(system: &InteractionSystem, rng: ChaCha8Rng) -> Self {
        Self::with_state(system.initial_state().to_vec(), rng)
    }

    pub fn with_state(z: Vec<f64>, rng: ChaCha8Rng) -> Self {
        let n_agents = z.len();
        Self { n: 0, z, rng, p: vec![0.0; n_agents], innovation: vec![0.0; n_agents] }
    }

    pub fn step_index(&self) -> u64 {
        self.n
    }

    pub fn z(&self) -> &[f64] {
        &self.z
    }

    /// Probabilities used by the most recent step.
    pub fn last_probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `Y_{n} - P(Y_{n} = 1 | F_{n-1})` from the most recent step.
    pub fn last_innovation(&self) -> &[f64] {
        &self.innovation
    }

    pub fn step(&mut self, system: &InteractionSystem, schedule: &StepSchedule) -> Result<()> {
        self.step_with_rate(system, schedule.rate(self.n))
    }

    /// One step with an explicit gain `r`.
    pub fn step_with_rate(&mut self, system: &InteractionSystem, r: f64) -> Result<()> {
        fill_probabilities(system, &self.z, self.n, &mut self.p)?;
        for i in 0..self.z.len() {
            let u: f64 = self.rng.random();
            let y = if u < self.p[i] { 1.0 } else { 0.0 };
            self.innovation[i] = y - self.p[i];
            if system.stubborn_value(i).is_none() {
                self.z[i] = (1.0 - r) * self.z[i] + r * y;
                debug_assert!((0.0..=1.0).contains(&self.z[i]));
            }
        }
        self.n += 1;
        Ok(())
    }
}

/// Which steps a trajectory records.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Sampling {
    /// Every step up to 100, then steps growing by a factor 1.1.
    #[default]
    Geometric,
    FinalOnly,
    /// Explicit checkpoints; step 0 and the final step are always added.
    Steps(Vec<u64>),
}

impl Sampling {
    pub fn steps(&self, n_steps: u64) -> Vec<u64> {
        let mut out = vec![0];
        match self {
            Sampling::Geometric => {
                let mut t = 1u64;
                while t <= n_steps.min(100) {
                    out.push(t);
                    t += 1;
                }
                let mut t = 100u64;
                loop {
                    // ceil(1.1 t) in integers
                    t = (t * 11).div_ceil(10);
                    if t >= n_steps {
                        break;
                    }
                    out.push(t);
                }
            }
            Sampling::FinalOnly => {}
            Sampling::Steps(v) => out.extend(v.iter().copied().filter(|&s| s <= n_steps)),
        }
        out.push(n_steps);
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    pub n_steps: u64,
    pub sampling: Sampling,
    /// Record the innovations `dM` at each sampled step.
    pub record_innovations: bool,
}

impl SimulationOptions {
    pub fn new(n_steps: u64) -> Self {
        Self { n_steps, ..Self::default() }
    }

    pub fn sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub stream: u64,
    pub steps: Vec<u64>,
    pub states: Vec<Vec<f64>>,
    pub final_state: Vec<f64>,
    /// `(step, dM_step)` pairs when requested.
    pub innovations: Option<Vec<(u64, Vec<f64>)>>,
}

impl Trajectory {
    /// State recorded at `step`, if it was sampled.
    pub fn state_at(&self, step: u64) -> Option<&[f64]> {
        self.steps.binary_search(&step).ok().map(|k| self.states[k].as_slice())
    }

    /// CSV with header `step,agent,z`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,agent,z")?;
        for (step, state) in self.steps.iter().zip(&self.states) {
            for (agent, z) in state.iter().enumerate() {
                writeln!(w, "{step},{agent},{z:.16e}")?;
            }
        }
        Ok(())
    }
}

/// Runs run 0 of an ensemble seeded with `seed`.
pub fn simulate(
    system: &InteractionSystem,
    schedule: &StepSchedule,
    seed: u64,
    options: &SimulationOptions,
) -> Result<Trajectory> {
    simulate_stream(system, schedule, seed, 0, options)
}

pub fn simulate_stream(
    system: &InteractionSystem,
    schedule: &StepSchedule,
    seed: u64,
    stream: u64,
    options: &SimulationOptions,
) -> Result<Trajectory> {
    let sample_steps = options.sampling.steps(options.n_steps);
    let mut state = SimulationState::new(system, run_rng(seed, stream));
    let mut states = Vec::with_capacity(sample_steps.len());
    let mut innovations = options.record_innovations.then(Vec::new);
    let mut next = 0;
    loop {
        if next < sample_steps.len() && sample_steps[next] == state.n {
            states.push(state.z.clone());
            if let Some(inn) = innovations.as_mut() {
                if state.n > 0 {
                    inn.push((state.n, state.innovation.clone()));
                }
            }
            next += 1;
        }
        if state.n >= options.n_steps {
            break;
        }
        state.step(system, schedule)?;
    }
    Ok(Trajectory {
        seed,
        stream,
        steps: sample_steps,
        states,
        final_state: state.z,
        innovations,
    })
}

/// Identity on `I`, `x -> 1 - x` on `J`.
pub fn bipartite_reflection(z: &[f64], j_side: &[usize]) -> Vec<f64> {
    let mut out = z.to_vec();
    for &j in j_side {
        out[j] = 1.0 - out[j];
    }
    out
}
