use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graph::{hierarchy_decomposition, HierarchyDecomposition, InteractionMatrix, RowKind};
use crate::spectral::Attitude;

/// Exogenous input sequence `q_n(i)` of a forced agent.
#[derive(Clone)]
pub enum Forcing {
    Constant(f64),
    /// `(start step, value)` pairs; the value holds from its start step until
    /// the next one. The last value is the limit.
    Piecewise(Vec<(u64, f64)>),
    /// Caller-supplied sequence with its declared limit.
    Callback { f: Arc<dyn Fn(u64) -> f64 + Send + Sync>, limit: f64 },
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Constant(q) => f.debug_tuple("Constant").field(q).finish(),
            Forcing::Piecewise(p) => f.debug_tuple("Piecewise").field(p).finish(),
            Forcing::Callback { limit, .. } => f.debug_struct("Callback").field("limit", limit).finish_non_exhaustive(),
        }
    }
}

impl PartialEq for Forcing {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Forcing::Constant(a), Forcing::Constant(b)) => a == b,
            (Forcing::Piecewise(a), Forcing::Piecewise(b)) => a == b,
            (Forcing::Callback { f: a, limit: la }, Forcing::Callback { f: b, limit: lb }) => {
                Arc::ptr_eq(a, b) && la == lb
            }
            _ => false,
        }
    }
}

impl Forcing {
    pub fn callback(limit: f64, f: impl Fn(u64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Callback { f: Arc::new(f), limit }
    }

    #[inline]
    pub fn value(&self, n: u64) -> f64 {
        match self {
            Forcing::Constant(q) => *q,
            Forcing::Piecewise(pieces) => {
                let idx = pieces.partition_point(|&(start, _)| start <= n);
                pieces[idx.saturating_sub(1)].1
            }
            Forcing::Callback { f, .. } => f(n),
        }
    }

    /// The declared limit `q(i)`.
    pub fn limit(&self) -> f64 {
        match self {
            Forcing::Constant(q) => *q,
            Forcing::Piecewise(pieces) => pieces.last().map_or(0.0, |p| p.1),
            Forcing::Callback { limit, .. } => *limit,
        }
    }

    fn validate(&self, agent: usize) -> Result<()> {
        let check = |value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(Error::OutOfUnitInterval { what: "forcing value", agent, value })
            }
        };
        match self {
            Forcing::Constant(q) => check(*q),
            Forcing::Piecewise(pieces) => {
                if pieces.is_empty() {
                    return Err(Error::OutOfUnitInterval { what: "forcing value", agent, value: f64::NAN });
                }
                pieces.iter().try_for_each(|&(_, q)| check(q))
            }
            Forcing::Callback { limit, .. } => check(*limit),
        }
    }
}

/// A validated model instance: interaction weights, level structure,
/// per-class attitudes, forcing inputs and stubborn agents.
///
/// Stubborn agents keep a constant state; their rows are replaced by unit
/// rows so that each one is a closed singleton at level 0.
#[derive(Debug, Clone)]
pub struct InteractionSystem {
    original: InteractionMatrix,
    matrix: InteractionMatrix,
    decomposition: HierarchyDecomposition,
    attitudes: Vec<Attitude>,
    class_attitudes: Vec<Attitude>,
    forcing: Vec<Option<Forcing>>,
    stubborn: Vec<Option<f64>>,
    initial: Vec<f64>,
    // Hot-loop views of the effective matrix.
    pub(crate) neighbours: Vec<Vec<(usize, f64)>>,
    pub(crate) self_weight: Vec<f64>,
    pub(crate) forcing_weight: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SystemBuilder {
    matrix: InteractionMatrix,
    global: Attitude,
    per_agent: Option<Vec<Option<Attitude>>>,
    forcing: Vec<(usize, Forcing)>,
    stubborn: Vec<(usize, f64)>,
    initial: Option<Vec<f64>>,
}

impl SystemBuilder {
    /// Gives every agent the same attitude (the default is competitive).
    pub fn global_attitude(mut self, attitude: Attitude) -> Self {
        self.global = attitude;
        self.per_agent = None;
        self
    }

    /// Per-agent attitudes; `None` is only allowed for stubborn agents.
    pub fn attitudes(mut self, attitudes: Vec<Option<Attitude>>) -> Self {
        self.per_agent = Some(attitudes);
        self
    }

    pub fn forcing(mut self, agent: usize, forcing: Forcing) -> Self {
        self.forcing.push((agent, forcing));
        self
    }

    pub fn stubborn(mut self, agent: usize, value: f64) -> Self {
        self.stubborn.push((agent, value));
        self
    }

    pub fn initial(mut self, z0: Vec<f64>) -> Self {
        self.initial = Some(z0);
        self
    }

    pub fn build(self) -> Result<InteractionSystem> {
        let n = self.matrix.n_agents();
        let mut stubborn = vec![None; n];
        for &(agent, value) in &self.stubborn {
            if agent >= n {
                return Err(Error::AgentOutOfRange(agent));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitInterval { what: "stubborn state", agent, value });
            }
            stubborn[agent] = Some(value);
        }
        let mut forcing = vec![None; n];
        for (agent, f) in self.forcing {
            if agent >= n {
                return Err(Error::AgentOutOfRange(agent));
            }
            if stubborn[agent].is_some() {
                return Err(Error::StubbornAndForced(agent));
            }
            if self.matrix.row_kind(agent) == RowKind::Stochastic {
                return Err(Error::ForcingOnStochasticRow(agent));
            }
            f.validate(agent)?;
            forcing[agent] = Some(f);
        }

        let attitudes: Vec<Option<Attitude>> = match self.per_agent {
            None => vec![Some(self.global); n],
            Some(v) => {
                if v.len() != n {
                    return Err(Error::MismatchedShapes(format!("{} attitudes for {n} agents", v.len())));
                }
                v
            }
        };

        let stubborn_rows: Vec<usize> = (0..n).filter(|&i| stubborn[i].is_some()).collect();
        let matrix = self.matrix.with_unit_rows(&stubborn_rows);
        let decomposition = hierarchy_decomposition(&matrix);

        let mut class_attitudes = Vec::with_capacity(decomposition.classes.len());
        for hc in &decomposition.classes {
            let mut seen: Option<Attitude> = None;
            for &i in hc.members() {
                if stubborn[i].is_some() {
                    continue;
                }
                let a = attitudes[i].ok_or_else(|| {
                    Error::MismatchedShapes(format!("agent {i} has no attitude"))
                })?;
                match seen {
                    Some(s) if s != a => return Err(Error::MixedAttitudes { class: hc.id }),
                    _ => seen = Some(a),
                }
            }
            // Stubborn singletons have no dynamics; the tag is immaterial.
            class_attitudes.push(seen.unwrap_or(Attitude::Cooperative));
        }
        let agent_attitudes: Vec<Attitude> =
            (0..n).map(|i| class_attitudes[decomposition.class_of(i)]).collect();

        let mut initial = match self.initial {
            Some(z0) if z0.len() != n => return Err(Error::InitialLength { got: z0.len(), expected: n }),
            Some(z0) => z0,
            None => vec![0.5; n],
        };
        for (agent, &value) in initial.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitInterval { what: "initial state", agent, value });
            }
        }
        for (i, s) in stubborn.iter().enumerate() {
            if let Some(q) = s {
                initial[i] = *q;
            }
        }

        let neighbours = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && matrix.weight(i, j) > 0.0)
                    .map(|j| (j, matrix.weight(i, j)))
                    .collect()
            })
            .collect();
        let self_weight = (0..n).map(|i| matrix.weight(i, i)).collect();
        let forcing_weight = (0..n).map(|i| (1.0 - matrix.row_sum(i)).max(0.0)).collect();

        Ok(InteractionSystem {
            original: self.matrix,
            matrix,
            decomposition,
            attitudes: agent_attitudes,
            class_attitudes,
            forcing,
            stubborn,
            initial,
            neighbours,
            self_weight,
            forcing_weight,
        })
    }
}

impl InteractionSystem {
    pub fn builder(matrix: InteractionMatrix) -> SystemBuilder {
        SystemBuilder {
            matrix,
            global: Attitude::Competitive,
            per_agent: None,
            forcing: Vec::new(),
            stubborn: Vec::new(),
            initial: None,
        }
    }

    /// Shorthand for a system with one global attitude and nothing else.
    pub fn uniform(matrix: InteractionMatrix, attitude: Attitude) -> Result<Self> {
        Self::builder(matrix).global_attitude(attitude).build()
    }

    pub fn n_agents(&self) -> usize {
        self.matrix.n_agents()
    }

    /// Matrix as supplied, before stubborn rows were replaced.
    pub fn original_matrix(&self) -> &InteractionMatrix {
        &self.original
    }

    /// Matrix that drives the dynamics.
    pub fn matrix(&self) -> &InteractionMatrix {
        &self.matrix
    }

    pub fn decomposition(&self) -> &HierarchyDecomposition {
        &self.decomposition
    }

    pub fn agent_attitude(&self, agent: usize) -> Attitude {
        self.attitudes[agent]
    }

    pub fn class_attitudes(&self) -> &[Attitude] {
        &self.class_attitudes
    }

    pub fn forcing(&self, agent: usize) -> Option<&Forcing> {
        self.forcing[agent].as_ref()
    }

    pub fn stubborn_value(&self, agent: usize) -> Option<f64> {
        self.stubborn[agent]
    }

    pub fn is_stubborn_class(&self, class: usize) -> bool {
        let m = self.decomposition.class(class).members();
        m.len() == 1 && self.stubborn[m[0]].is_some()
    }

    /// `q_n(i)`; agents without forcing see 0.
    #[inline]
    pub fn forcing_value(&self, agent: usize, n: u64) -> f64 {
        self.forcing[agent].as_ref().map_or(0.0, |f| f.value(n))
    }

    /// Declared forcing limits `q(i)`, 0 for unforced agents.
    pub fn forcing_limits(&self) -> Vec<f64> {
        self.forcing.iter().map(|f| f.as_ref().map_or(0.0, Forcing::limit)).collect()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_matrix;

    fn a(rows: &[&[f64]]) -> InteractionMatrix {
        validate_matrix(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn forcing_sequences() {
        let f = Forcing::Piecewise(vec![(0, 0.0), (10, 0.5), (1000, 1.0)]);
        assert_eq!(f.value(0), 0.0);
        assert_eq!(f.value(9), 0.0);
        assert_eq!(f.value(10), 0.5);
        assert_eq!(f.value(999), 0.5);
        assert_eq!(f.value(1000), 1.0);
        assert_eq!(f.limit(), 1.0);
        let g = Forcing::callback(1.0, |n| 1.0 - 1.0 / (n as f64 + 2.0));
        assert_eq!(g.value(0), 0.5);
        assert_eq!(g.limit(), 1.0);
        assert_eq!(g, g.clone());
    }

    #[test]
    fn forcing_requires_substochastic_row() {
        let err = InteractionSystem::builder(a(&[&[0.5, 0.5], &[0.2, 0.5]]))
            .forcing(0, Forcing::Constant(1.0))
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::ForcingOnStochasticRow(0)));
        assert!(InteractionSystem::builder(a(&[&[0.5, 0.5], &[0.2, 0.5]]))
            .forcing(1, Forcing::Constant(1.0))
            .build()
            .is_ok());
        let err = InteractionSystem::builder(a(&[&[0.5]]))
            .forcing(0, Forcing::Constant(1.5))
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::OutOfUnitInterval { .. }));
    }

    #[test]
    fn mixed_attitudes_rejected() {
        let err = InteractionSystem::builder(a(&[&[0.0, 1.0], &[1.0, 0.0]]))
            .attitudes(vec![Some(Attitude::Competitive), Some(Attitude::Cooperative)])
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::MixedAttitudes { class: 0 }));
    }

    #[test]
    fn stubborn_agents_become_closed_singletons() {
        let s = InteractionSystem::builder(a(&[&[0.0, 1.0], &[1.0, 0.0]]))
            .stubborn(1, 0.8)
            .build()
            .unwrap();
        assert_eq!(s.matrix().to_rows(), vec![vec![0.0, 1.0], vec![0.0, 1.0]]);
        assert_eq!(s.original_matrix().to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(s.initial_state(), &[0.5, 0.8]);
        let d = s.decomposition();
        assert_eq!(d.n_levels(), 2);
        assert!(s.is_stubborn_class(d.class_of(1)));
        assert!(!s.is_stubborn_class(d.class_of(0)));
        assert!(matches!(
            InteractionSystem::builder(a(&[&[0.5]])).stubborn(0, 0.5).forcing(0, Forcing::Constant(1.0)).build(),
            Err(Error::StubbornAndForced(0))
        ));
    }

    #[test]
    fn initial_state_checked() {
        assert!(matches!(
            InteractionSystem::builder(a(&[&[1.0]])).initial(vec![0.5, 0.5]).build(),
            Err(Error::InitialLength { got: 2, expected: 1 })
        ));
        assert!(InteractionSystem::builder(a(&[&[1.0]])).initial(vec![1.2]).build().is_err());
    }
}
