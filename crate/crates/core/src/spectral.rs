//! Drift matrices, Geršgorin diagnostics and limit solves.
//!
//! Every class evolves as `Z_{n+1} = Z_n + r_n (K Z_n + c_n) + r_n dM_{n+1}`.
//! For a competitive class `K = 2 diag(A) - I - A` and the time-invariant
//! offset is `c_i = alpha_i - alpha_ii`; for a cooperative class `K = A - I`
//! and `c_i = 0`. A forced agent adds `(1 - alpha_i) q_n(i)` to its offset.
//! Lower-level classes enter a class through its coupling blocks `B`, with
//! sign `-B` for competitive classes and `+B` for cooperative ones.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    bipartiteness, build_graph, communication_classes, BipartitenessReport, CommunicationClass,
    HierarchyDecomposition, InteractionMatrix, ROW_SUM_TOL,
};
use crate::ser;

/// Relative pivot below which an LU factorisation is declared singular.
pub const PIVOT_TOL: f64 = 1e-10;
/// Slack allowed when checking that a limit lies in the unit box.
pub const UNIT_BOX_TOL: f64 = 1e-9;
/// Slack used when comparing a diagonal entry with its off-diagonal row sum.
pub const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attitude {
    Competitive,
    Cooperative,
}

impl fmt::Display for Attitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Attitude::Competitive => "competitive",
            Attitude::Cooperative => "cooperative",
        })
    }
}

impl std::str::FromStr for Attitude {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "competitive" => Ok(Attitude::Competitive),
            "cooperative" => Ok(Attitude::Cooperative),
            other => Err(format!("unknown attitude {other:?}")),
        }
    }
}

fn lu_pivot_ratio(k: &DMatrix<f64>) -> f64 {
    let scale = k.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let lu = k.clone().lu();
    let u = lu.u();
    u.diagonal().iter().fold(f64::INFINITY, |acc, p| acc.min(p.abs())) / scale
}

/// Partial-pivot LU verdict: singular when the smallest pivot is below
/// [`PIVOT_TOL`] relative to the largest entry.
pub fn is_numerically_singular(k: &DMatrix<f64>) -> bool {
    lu_pivot_ratio(k) < PIVOT_TOL
}

fn lu_solve(k: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if is_numerically_singular(k) {
        return None;
    }
    k.clone().lu().solve(rhs)
}

fn lu_inverse(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if is_numerically_singular(k) {
        return None;
    }
    k.clone().lu().try_inverse()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Dominance {
    Strict,
    Tie,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GershgorinReport {
    pub rows: Vec<Dominance>,
    pub diagonally_dominant: bool,
    pub strictly_dominant_rows: Vec<usize>,
    /// Whether the off-diagonal support of `K` is strongly connected.
    pub irreducible: bool,
    /// Dominance holds, so nonzero eigenvalues have negative real part.
    pub negative_real_part_certificate: bool,
    /// Dominance, irreducibility and one strict row: `K` is invertible.
    pub invertibility_certificate: bool,
}

pub fn gershgorin_report(k: &DMatrix<f64>) -> Result<GershgorinReport> {
    let n = k.nrows();
    for i in 0..n {
        for j in 0..n {
            if k[(i, j)] > 0.0 {
                return Err(Error::PositiveEntry { row: i, col: j });
            }
        }
    }
    let rows: Vec<Dominance> = (0..n)
        .map(|i| {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| k[(i, j)].abs()).sum();
            let margin = k[(i, i)].abs() - off;
            if margin > DOMINANCE_TOL {
                Dominance::Strict
            } else if margin >= -DOMINANCE_TOL {
                Dominance::Tie
            } else {
                Dominance::Violated
            }
        })
        .collect();
    let diagonally_dominant = rows.iter().all(|&d| d != Dominance::Violated);
    let strictly_dominant_rows: Vec<usize> =
        rows.iter().enumerate().filter(|(_, &d)| d == Dominance::Strict).map(|(i, _)| i).collect();
    let support = DMatrix::from_fn(n, n, |i, j| if i != j && k[(i, j)] != 0.0 { 1.0 / n as f64 } else { 0.0 });
    let irreducible = InteractionMatrix::new(support)
        .map(|a| communication_classes(&build_graph(&a)).len() == 1)
        .unwrap_or(false);
    Ok(GershgorinReport {
        negative_real_part_certificate: diagonally_dominant,
        invertibility_certificate: diagonally_dominant && irreducible && !strictly_dominant_rows.is_empty(),
        rows,
        diagonally_dominant,
        strictly_dominant_rows,
        irreducible,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftDiagnostics {
    /// Present for competitive blocks, whose `K` has nonpositive entries.
    pub gershgorin: Option<GershgorinReport>,
    pub invertible: bool,
    /// Competitive, closed, stochastic and bipartite: singular by structure.
    pub bipartite_singular: bool,
    /// Invertibility of the `2 diag(A) + I - A` variant, for competitive blocks.
    pub printed_variant_invertible: Option<bool>,
    pub printed_variant_disagrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftSystem {
    pub attitude: Attitude,
    #[serde(serialize_with = "ser::matrix")]
    pub k: DMatrix<f64>,
    /// Time-invariant offset, without forcing.
    #[serde(serialize_with = "ser::vector")]
    pub c: DVector<f64>,
    /// `1 - alpha_i`, the weight of the forcing input on each row.
    #[serde(serialize_with = "ser::vector")]
    pub forcing_weight: DVector<f64>,
    pub diagnostics: DriftDiagnostics,
}

impl DriftSystem {
    /// Offset `c + (1 - alpha) * q` for a given forcing vector.
    pub fn offset(&self, q: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.c.len(), |i, _| self.c[i] + self.forcing_weight[i] * q[i])
    }

    /// `K z + c`.
    pub fn drift(&self, z: &DVector<f64>) -> DVector<f64> {
        &self.k * z + &self.c
    }
}

/// Builds `K` and `c` for one class block. `row_sums` are the full row sums
/// `alpha_i` of the block's agents, including weight on other classes.
pub fn drift_system(block: &DMatrix<f64>, row_sums: &[f64], attitude: Attitude) -> DriftSystem {
    let n = block.nrows();
    assert_eq!(row_sums.len(), n);
    let eye = DMatrix::<f64>::identity(n, n);
    let diag = DMatrix::from_diagonal(&block.diagonal());
    let (k, c) = match attitude {
        Attitude::Competitive => (
            &diag * 2.0 - &eye - block,
            DVector::from_fn(n, |i, _| row_sums[i] - block[(i, i)]),
        ),
        Attitude::Cooperative => (block - &eye, DVector::zeros(n)),
    };
    let forcing_weight = DVector::from_fn(n, |i, _| (1.0 - row_sums[i]).max(0.0));

    let closed_stochastic = (0..n).all(|i| (block.row(i).sum() - 1.0).abs() <= ROW_SUM_TOL);
    let structurally_bipartite = InteractionMatrix::new(block.clone())
        .ok()
        .map(|a| communication_classes(&build_graph(&a)))
        .filter(|cls| cls.len() == 1)
        .is_some_and(|cls| bipartiteness(&cls[0]).is_bipartite);
    let bipartite_singular = attitude == Attitude::Competitive && closed_stochastic && structurally_bipartite;
    let invertible = !bipartite_singular && !is_numerically_singular(&k);

    let (gershgorin, printed_variant_invertible) = match attitude {
        Attitude::Competitive => {
            let printed = &diag * 2.0 + &eye - block;
            (gershgorin_report(&k).ok(), Some(!is_numerically_singular(&printed)))
        }
        Attitude::Cooperative => (None, None),
    };
    DriftSystem {
        attitude,
        k,
        c,
        forcing_weight,
        diagnostics: DriftDiagnostics {
            gershgorin,
            invertible,
            bipartite_singular,
            printed_variant_disagrees: printed_variant_invertible.is_some_and(|p| p != invertible),
            printed_variant_invertible,
        },
    }
}

/// Numerical invertibility of a closed competitive class's `K`, checked
/// against the structural verdict (invertible iff not bipartite).
pub fn invertibility(k: &DMatrix<f64>, bipartite: &BipartitenessReport) -> Result<bool> {
    let numeric = !is_numerically_singular(k);
    if bipartite.period == 0 {
        // No internal edges: the structural criterion says nothing.
        return Ok(numeric);
    }
    let structural = !bipartite.is_bipartite;
    if numeric != structural {
        return Err(Error::InconsistentClassification { numeric, structural });
    }
    Ok(numeric)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineDependency {
    pub class: usize,
    /// Coupling block with the attitude's sign applied.
    #[serde(serialize_with = "ser::matrix")]
    pub b_tilde: DMatrix<f64>,
}

/// `U = -K^{-1} (c + sum_s B~_s X_s)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineLimit {
    #[serde(serialize_with = "ser::matrix")]
    pub neg_k_inverse: DMatrix<f64>,
    /// `c`, including the forcing limit.
    #[serde(serialize_with = "ser::vector")]
    pub offset: DVector<f64>,
    pub dependencies: Vec<AffineDependency>,
}

impl AffineLimit {
    /// Evaluates the class limit given the limits of the classes it depends on.
    pub fn evaluate(&self, values: &[DVector<f64>]) -> Result<DVector<f64>> {
        let mut rhs = self.offset.clone();
        for dep in &self.dependencies {
            let x = values.get(dep.class).ok_or(Error::MissingLevelZeroValue(dep.class))?;
            if x.len() != dep.b_tilde.ncols() {
                return Err(Error::ValueLength { class: dep.class, got: x.len(), expected: dep.b_tilde.ncols() });
            }
            rhs += &dep.b_tilde * x;
        }
        Ok(&self.neg_k_inverse * rhs)
    }

    /// The constant part `-K^{-1} c`.
    pub fn constant(&self) -> DVector<f64> {
        &self.neg_k_inverse * &self.offset
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum LimitKind {
    DeterministicHalf,
    RandomSynchronized,
    RandomAntiSynchronized { i_side: Vec<usize>, j_side: Vec<usize> },
    /// Closed class with forcing or substochastic rows: `-K^{-1} c`.
    Forced { limit: Vec<f64> },
    Stubborn { value: f64 },
    AffineOfLowerLevels(AffineLimit),
}

impl LimitKind {
    pub fn name(&self) -> &'static str {
        match self {
            LimitKind::DeterministicHalf => "DeterministicHalf",
            LimitKind::RandomSynchronized => "RandomSynchronized",
            LimitKind::RandomAntiSynchronized { .. } => "RandomAntiSynchronized",
            LimitKind::Forced { .. } => "Forced",
            LimitKind::Stubborn { .. } => "Stubborn",
            LimitKind::AffineOfLowerLevels(_) => "AffineOfLowerLevels",
        }
    }

    pub fn is_random(&self) -> bool {
        matches!(self, LimitKind::RandomSynchronized | LimitKind::RandomAntiSynchronized { .. })
    }

    /// The limit vector when it does not depend on chance or on other classes.
    pub fn fixed_value(&self, size: usize) -> Option<DVector<f64>> {
        match self {
            LimitKind::DeterministicHalf => Some(DVector::from_element(size, 0.5)),
            LimitKind::Forced { limit } => Some(DVector::from_column_slice(limit)),
            LimitKind::Stubborn { value } => Some(DVector::from_element(size, *value)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPrediction {
    pub class_id: usize,
    pub level: usize,
    pub members: Vec<usize>,
    #[serde(flatten)]
    pub kind: LimitKind,
}

/// Limit structure of a closed, stochastic, irreducible class.
pub fn closed_class_limit(
    class: &CommunicationClass,
    attitude: Attitude,
    bipartite: &BipartitenessReport,
) -> LimitKind {
    if class.internal_edges.is_empty() {
        // A lone closed agent is a plain Pólya urn whatever its attitude.
        return LimitKind::RandomSynchronized;
    }
    match (attitude, &bipartite.partition) {
        (Attitude::Cooperative, _) => LimitKind::RandomSynchronized,
        (Attitude::Competitive, Some((i, j))) if bipartite.is_bipartite => {
            LimitKind::RandomAntiSynchronized { i_side: i.clone(), j_side: j.clone() }
        }
        (Attitude::Competitive, _) => LimitKind::DeterministicHalf,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForcedLimit {
    #[serde(serialize_with = "ser::vector")]
    pub values: DVector<f64>,
    /// False when some component leaves `[0, 1]` by more than [`UNIT_BOX_TOL`],
    /// which means the inputs do not describe a valid model.
    pub in_unit_box: bool,
}

/// Solves `K x = -c`.
pub fn forced_limit(k: &DMatrix<f64>, c: &DVector<f64>) -> Result<ForcedLimit> {
    let values = lu_solve(k, &(-c)).ok_or(Error::SingularK)?;
    let in_unit_box = values.iter().all(|&v| (-UNIT_BOX_TOL..=1.0 + UNIT_BOX_TOL).contains(&v));
    Ok(ForcedLimit { values, in_unit_box })
}

/// Builds the affine limit map of a class from its block, couplings and
/// forcing limits `q` (indexed by agent; zero where there is no forcing).
pub fn affine_limit(
    a: &InteractionMatrix,
    decomposition: &HierarchyDecomposition,
    class: usize,
    attitude: Attitude,
    q: &[f64],
) -> Result<AffineLimit> {
    let hc = decomposition.class(class);
    let members = hc.members();
    let block = decomposition.diagonal_block(a, class);
    let row_sums: Vec<f64> = members.iter().map(|&i| a.row_sum(i)).collect();
    let drift = drift_system(&block, &row_sums, attitude);
    let q_local: Vec<f64> = members.iter().map(|&i| q[i]).collect();
    let neg_k_inverse = -lu_inverse(&drift.k).ok_or(Error::SingularBlock { level: hc.level, class })?;
    let sign = match attitude {
        Attitude::Competitive => -1.0,
        Attitude::Cooperative => 1.0,
    };
    let dependencies = hc
        .dependencies
        .iter()
        .map(|&s| AffineDependency { class: s, b_tilde: decomposition.coupling_block(a, class, s) * sign })
        .collect();
    Ok(AffineLimit { neg_k_inverse, offset: drift.offset(&q_local), dependencies })
}

/// Evaluates the recursive limit formula level by level. `level0_values`
/// supplies a value for every level-0 class (realised, deterministic or
/// stubborn); the result holds one vector per class id.
pub fn hierarchical_limit(
    a: &InteractionMatrix,
    decomposition: &HierarchyDecomposition,
    attitudes: &[Attitude],
    q: &[f64],
    level0_values: &BTreeMap<usize, DVector<f64>>,
) -> Result<Vec<DVector<f64>>> {
    let mut values: Vec<DVector<f64>> = Vec::with_capacity(decomposition.classes.len());
    for hc in &decomposition.classes {
        // Ids are level-ordered, so every dependency is already solved.
        let v = if hc.level == 0 {
            let v = level0_values.get(&hc.id).ok_or(Error::MissingLevelZeroValue(hc.id))?;
            if v.len() != hc.members().len() {
                return Err(Error::ValueLength { class: hc.id, got: v.len(), expected: hc.members().len() });
            }
            v.clone()
        } else {
            affine_limit(a, decomposition, hc.id, attitudes[hc.id], q)?.evaluate(&values)?
        };
        values.push(v);
    }
    Ok(values)
}
