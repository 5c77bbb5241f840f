//! Structure report for a whole system: classes, levels, bipartiteness,
//! drift diagnostics and the predicted limit of every class.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::dynamics::InteractionSystem;
use crate::error::{Error, Result};
use crate::graph::{bipartiteness, BipartitenessReport, RowKind};
use crate::spectral::{
    affine_limit, closed_class_limit, drift_system, forced_limit, hierarchical_limit, invertibility, Attitude,
    DriftSystem, LimitKind, LimitPrediction,
};

#[derive(Debug, Clone, Serialize)]
pub struct ClassAnalysis {
    pub id: usize,
    pub level: usize,
    pub members: Vec<usize>,
    pub attitude: Attitude,
    pub stubborn: bool,
    pub dependencies: Vec<usize>,
    pub bipartiteness: BipartitenessReport,
    pub drift: DriftSystem,
    pub prediction: LimitPrediction,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub n_agents: usize,
    pub n_levels: usize,
    pub agent_order: Vec<usize>,
    pub classes: Vec<ClassAnalysis>,
}

pub fn analyze(system: &InteractionSystem) -> Result<Analysis> {
    let a = system.matrix();
    let d = system.decomposition();
    let q = system.forcing_limits();
    let mut classes = Vec::with_capacity(d.classes.len());
    for hc in &d.classes {
        let members = hc.members().to_vec();
        let attitude = system.class_attitudes()[hc.id];
        let block = d.diagonal_block(a, hc.id);
        let row_sums: Vec<f64> = members.iter().map(|&i| a.row_sum(i)).collect();
        let drift = drift_system(&block, &row_sums, attitude);
        let bip = bipartiteness(&hc.class);
        let stubborn = system.is_stubborn_class(hc.id);

        let kind = if stubborn {
            LimitKind::Stubborn { value: system.stubborn_value(members[0]).unwrap() }
        } else if hc.level > 0 {
            LimitKind::AffineOfLowerLevels(affine_limit(a, d, hc.id, attitude, &q)?)
        } else if members.iter().all(|&i| a.row_kind(i) == RowKind::Stochastic) {
            if attitude == Attitude::Competitive {
                // Cross-check the structural classification numerically.
                invertibility(&drift.k, &bip)?;
            }
            closed_class_limit(&hc.class, attitude, &bip)
        } else {
            let q_local: Vec<f64> = members.iter().map(|&i| q[i]).collect();
            let f = forced_limit(&drift.k, &drift.offset(&q_local))
                .map_err(|_| Error::SingularBlock { level: 0, class: hc.id })?;
            LimitKind::Forced { limit: f.values.iter().copied().collect() }
        };
        classes.push(ClassAnalysis {
            id: hc.id,
            level: hc.level,
            members: members.clone(),
            attitude,
            stubborn,
            dependencies: hc.dependencies.clone(),
            bipartiteness: bip,
            drift,
            prediction: LimitPrediction { class_id: hc.id, level: hc.level, members, kind },
        });
    }
    Ok(Analysis { n_agents: system.n_agents(), n_levels: d.n_levels(), agent_order: d.agent_order.clone(), classes })
}

impl Analysis {
    pub fn predictions(&self) -> Vec<LimitPrediction> {
        self.classes.iter().map(|c| c.prediction.clone()).collect()
    }

    /// Class limits that are determined without chance: deterministic,
    /// forced and stubborn classes, plus affine classes whose inputs are all
    /// determined. Random classes and their dependants map to `None`.
    pub fn resolved_limits(&self) -> Vec<Option<DVector<f64>>> {
        let mut out: Vec<Option<DVector<f64>>> = Vec::with_capacity(self.classes.len());
        for c in &self.classes {
            let v = match &c.prediction.kind {
                LimitKind::AffineOfLowerLevels(aff) => {
                    if aff.dependencies.iter().all(|dep| out[dep.class].is_some()) {
                        let inputs: Vec<DVector<f64>> =
                            out.iter().map(|o| o.clone().unwrap_or_else(|| DVector::zeros(0))).collect();
                        aff.evaluate(&inputs).ok()
                    } else {
                        None
                    }
                }
                kind => kind.fixed_value(c.members.len()),
            };
            out.push(v);
        }
        out
    }

    /// Limits of every class given one realised full state: level-0 classes
    /// take their realised values and higher levels follow the recursion.
    pub fn limits_given_level0(&self, system: &InteractionSystem, state: &[f64]) -> Result<Vec<DVector<f64>>> {
        let level0: BTreeMap<usize, DVector<f64>> = self
            .classes
            .iter()
            .filter(|c| c.level == 0)
            .map(|c| (c.id, DVector::from_iterator(c.members.len(), c.members.iter().map(|&i| state[i]))))
            .collect();
        hierarchical_limit(
            system.matrix(),
            system.decomposition(),
            system.class_attitudes(),
            &system.forcing_limits(),
            &level0,
        )
    }
}
