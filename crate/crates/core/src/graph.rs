//! Interaction matrices, their support digraph, communication classes and
//! the level structure of reducible networks.
//!
//! An entry `alpha[i][j] > 0` with `i != j` is an oriented edge `(i, j)`: agent
//! `i` is influenced by agent `j`. Diagonal entries are self-reinforcement and
//! never produce edges.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance used to classify a row as stochastic and to reject row sums above 1.
pub const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Stochastic,
    Substochastic,
}

/// A validated nonnegative matrix with row sums at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    weights: DMatrix<f64>,
    row_sums: Vec<f64>,
    row_kinds: Vec<RowKind>,
}

impl InteractionMatrix {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 {
            return Err(Error::EmptyMatrix);
        }
        if weights.ncols() != n {
            return Err(Error::NonSquare { row: 0, len: weights.ncols(), expected: n });
        }
        let mut row_sums = Vec::with_capacity(n);
        let mut row_kinds = Vec::with_capacity(n);
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if w < 0.0 {
                    return Err(Error::NegativeEntry { row: i, col: j });
                }
                sum += w;
            }
            if sum > 1.0 + ROW_SUM_TOL {
                return Err(Error::RowSumExceedsOne { row: i, sum });
            }
            row_kinds.push(if (1.0 - sum).abs() <= ROW_SUM_TOL {
                RowKind::Stochastic
            } else {
                RowKind::Substochastic
            });
            row_sums.push(sum);
        }
        Ok(Self { weights, row_sums, row_kinds })
    }

    pub fn n_agents(&self) -> usize {
        self.weights.nrows()
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    /// `alpha_i`, the full row sum.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.row_sums[i]
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    pub fn row_kind(&self, i: usize) -> RowKind {
        self.row_kinds[i]
    }

    pub fn row_kinds(&self) -> &[RowKind] {
        &self.row_kinds
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_agents())
            .map(|i| self.weights.row(i).iter().copied().collect())
            .collect()
    }

    /// Renders the plain-text matrix format: `N` on the first line, then `N` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.n_agents());
        for row in self.to_rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    /// Copy of this matrix with the given rows replaced by unit rows
    /// (`alpha_ii = 1`), which makes those agents closed singletons.
    pub fn with_unit_rows(&self, rows: &[usize]) -> Self {
        let mut weights = self.weights.clone();
        for &i in rows {
            weights.row_mut(i).fill(0.0);
            weights[(i, i)] = 1.0;
        }
        Self::new(weights).expect("unit rows keep the matrix valid")
    }
}

pub fn validate_matrix(raw: &[Vec<f64>]) -> Result<InteractionMatrix> {
    let n = raw.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    for (row, r) in raw.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NonSquare { row, len: r.len(), expected: n });
        }
    }
    InteractionMatrix::new(DMatrix::from_fn(n, n, |i, j| raw[i][j]))
}

/// Parses the plain-text matrix format. Blank lines and `#` comments are ignored.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixFormat("missing dimension line".into()))?;
    let n: usize = header
        .parse()
        .map_err(|_| Error::MatrixFormat(format!("bad dimension line {header:?}")))?;
    let mut rows = Vec::with_capacity(n);
    for line in lines {
        rows.push(parse_row(line).map_err(Error::MatrixFormat)?);
    }
    if rows.len() != n {
        return Err(Error::MatrixFormat(format!("expected {n} rows, found {}", rows.len())));
    }
    Ok(rows)
}

pub(crate) fn parse_row(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("bad number {tok:?}")))
        .collect()
}

/// Off-diagonal support digraph of an interaction matrix.
#[derive(Debug, Clone)]
pub struct AgentGraph {
    out: Vec<Vec<(usize, f64)>>,
}

impl AgentGraph {
    pub fn n_vertices(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[i].iter().map(|&(j, _)| j)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.out[i].iter().any(|&(k, _)| k == j)
    }

    pub fn edge_weight(&self, i: usize, j: usize) -> Option<f64> {
        self.out[i].iter().find(|&&(k, _)| k == j).map(|&(_, w)| w)
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().map(move |&(j, _)| (i, j)))
    }

    pub fn n_edges(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }
}

pub fn build_graph(a: &InteractionMatrix) -> AgentGraph {
    let n = a.n_agents();
    let out = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && a.weight(i, j) > 0.0)
                .map(|j| (j, a.weight(i, j)))
                .collect()
        })
        .collect();
    AgentGraph { out }
}

/// A maximal set of mutually accessible agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CommunicationClass {
    /// Sorted ascending.
    pub members: Vec<usize>,
    pub internal_edges: Vec<(usize, usize)>,
}

impl CommunicationClass {
    fn from_members(g: &AgentGraph, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        let internal_edges = members
            .iter()
            .flat_map(|&i| {
                g.out_neighbors(i)
                    .filter(|j| members.binary_search(j).is_ok())
                    .map(move |j| (i, j))
            })
            .collect();
        Self { members, internal_edges }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.members.binary_search(&agent).is_ok()
    }

    /// Position of `agent` within the class, if it is a member.
    pub fn position(&self, agent: usize) -> Option<usize> {
        self.members.binary_search(&agent).ok()
    }
}

/// Strongly connected components, ordered by smallest member.
pub fn communication_classes(g: &AgentGraph) -> Vec<CommunicationClass> {
    let n = g.n_vertices();
    let mut pg = DiGraph::<(), ()>::with_capacity(n, g.n_edges());
    for _ in 0..n {
        pg.add_node(());
    }
    for (i, j) in g.edges() {
        pg.add_edge(NodeIndex::new(i), NodeIndex::new(j), ());
    }
    let mut classes: Vec<CommunicationClass> = tarjan_scc(&pg)
        .into_iter()
        .map(|scc| CommunicationClass::from_members(g, scc.into_iter().map(|v| v.index()).collect()))
        .collect();
    classes.sort_by_key(|c| c.members[0]);
    classes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockIndex {
    pub level: usize,
    pub class: usize,
    pub position: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct HierarchyClass {
    pub id: usize,
    pub level: usize,
    #[serde(flatten)]
    pub class: CommunicationClass,
    /// Other classes this class has a positive entry into, ascending by id.
    pub dependencies: Vec<usize>,
}

impl HierarchyClass {
    pub fn members(&self) -> &[usize] {
        &self.class.members
    }
}

/// Communication classes arranged by level. Class ids are assigned in
/// (level, smallest member) order, so `agent_order` lists agents level by
/// level and class by class.
#[derive(Debug, Clone, Serialize)]
pub struct HierarchyDecomposition {
    pub classes: Vec<HierarchyClass>,
    pub levels: Vec<Vec<usize>>,
    pub agent_order: Vec<usize>,
    pub block_index: Vec<BlockIndex>,
}

impl HierarchyDecomposition {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn n_agents(&self) -> usize {
        self.agent_order.len()
    }

    pub fn class(&self, id: usize) -> &HierarchyClass {
        &self.classes[id]
    }

    pub fn class_of(&self, agent: usize) -> usize {
        self.block_index[agent].class
    }

    /// `A_{m,l}`: weights among members of one class.
    pub fn diagonal_block(&self, a: &InteractionMatrix, class: usize) -> DMatrix<f64> {
        let m = self.classes[class].members();
        DMatrix::from_fn(m.len(), m.len(), |r, c| a.weight(m[r], m[c]))
    }

    /// `B_{(m,h)}^{(t,s)}`: how members of `target` are influenced by members of `source`.
    pub fn coupling_block(&self, a: &InteractionMatrix, target: usize, source: usize) -> DMatrix<f64> {
        let rows = self.classes[target].members();
        let cols = self.classes[source].members();
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| a.weight(rows[r], cols[c]))
    }

    /// `A` with rows and columns reordered by `agent_order`.
    pub fn permute(&self, a: &InteractionMatrix) -> DMatrix<f64> {
        let p = &self.agent_order;
        DMatrix::from_fn(p.len(), p.len(), |r, c| a.weight(p[r], p[c]))
    }

    /// Inverse of [`permute`](Self::permute).
    pub fn unpermute(&self, permuted: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n_agents();
        let mut rank = vec![0; n];
        for (r, &agent) in self.agent_order.iter().enumerate() {
            rank[agent] = r;
        }
        DMatrix::from_fn(n, n, |i, j| permuted[(rank[i], rank[j])])
    }

    /// Ids of the classes at level 0.
    pub fn closed_classes(&self) -> &[usize] {
        &self.levels[0]
    }
}

pub fn hierarchy_decomposition(a: &InteractionMatrix) -> HierarchyDecomposition {
    let g = build_graph(a);
    let sccs = communication_classes(&g);
    let mut scc_of = vec![0; a.n_agents()];
    for (k, c) in sccs.iter().enumerate() {
        for &v in &c.members {
            scc_of[v] = k;
        }
    }
    let deps: Vec<Vec<usize>> = sccs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let mut d: Vec<usize> = c
                .members
                .iter()
                .flat_map(|&i| g.out_neighbors(i).map(|j| scc_of[j]))
                .filter(|&t| t != k)
                .collect();
            d.sort_unstable();
            d.dedup();
            d
        })
        .collect();

    // Level = length of the longest dependency chain down to a closed class.
    let mut level: Vec<Option<usize>> = vec![None; sccs.len()];
    let mut remaining = sccs.len();
    while remaining > 0 {
        let before = remaining;
        for k in 0..sccs.len() {
            if level[k].is_some() {
                continue;
            }
            let lv: Option<Vec<usize>> = deps[k].iter().map(|&t| level[t]).collect();
            if let Some(lv) = lv {
                level[k] = Some(lv.iter().max().map_or(0, |m| m + 1));
                remaining -= 1;
            }
        }
        assert!(remaining < before, "condensation of a digraph is acyclic");
    }
    let level: Vec<usize> = level.into_iter().map(Option::unwrap).collect();

    let mut order: Vec<usize> = (0..sccs.len()).collect();
    order.sort_by_key(|&k| (level[k], sccs[k].members[0]));
    let mut new_id = vec![0; sccs.len()];
    for (id, &k) in order.iter().enumerate() {
        new_id[k] = id;
    }

    let n_levels = level.iter().max().map_or(0, |m| m + 1);
    let mut levels = vec![Vec::new(); n_levels];
    let mut classes = Vec::with_capacity(sccs.len());
    let mut agent_order = Vec::with_capacity(a.n_agents());
    let mut block_index = vec![BlockIndex { level: 0, class: 0, position: 0 }; a.n_agents()];
    for (id, &k) in order.iter().enumerate() {
        let mut dependencies: Vec<usize> = deps[k].iter().map(|&t| new_id[t]).collect();
        dependencies.sort_unstable();
        levels[level[k]].push(id);
        for (position, &v) in sccs[k].members.iter().enumerate() {
            agent_order.push(v);
            block_index[v] = BlockIndex { level: level[k], class: id, position };
        }
        classes.push(HierarchyClass {
            id,
            level: level[k],
            class: sccs[k].clone(),
            dependencies,
        });
    }
    HierarchyDecomposition { classes, levels, agent_order, block_index }
}

/// Two-colouring and period of a communication class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BipartitenessReport {
    pub is_bipartite: bool,
    /// `(I, J)`, with the smallest member in `I`.
    pub partition: Option<(Vec<usize>, Vec<usize>)>,
    /// Gcd of closed-walk lengths; 0 for a class without internal edges.
    pub period: usize,
}

/// Decides bipartiteness of the class's induced off-diagonal support and,
/// independently, its period from directed BFS levels.
pub fn bipartiteness(class: &CommunicationClass) -> BipartitenessReport {
    let members = &class.members;
    let k = members.len();
    if class.internal_edges.is_empty() {
        return BipartitenessReport { is_bipartite: false, partition: None, period: 0 };
    }
    let local = |v: usize| class.position(v).expect("edge endpoint inside class");
    let mut out = vec![Vec::new(); k];
    let mut undirected = vec![Vec::new(); k];
    for &(i, j) in &class.internal_edges {
        let (a, b) = (local(i), local(j));
        out[a].push(b);
        undirected[a].push(b);
        undirected[b].push(a);
    }

    // Two-colouring of the underlying undirected graph.
    let mut colour: Vec<Option<bool>> = vec![None; k];
    let mut bipartite = true;
    'outer: for start in 0..k {
        if colour[start].is_some() {
            continue;
        }
        colour[start] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = colour[u].unwrap();
            for &v in &undirected[u] {
                match colour[v] {
                    None => {
                        colour[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => {
                        bipartite = false;
                        break 'outer;
                    }
                    Some(_) => {}
                }
            }
        }
    }

    // Period: gcd over edges of level(u) + 1 - level(v), directed BFS levels.
    let mut depth: Vec<Option<usize>> = vec![None; k];
    depth[0] = Some(0);
    let mut queue = VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in &out[u] {
            if depth[v].is_none() {
                depth[v] = Some(depth[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    let mut period = 0usize;
    for (u, adj) in out.iter().enumerate() {
        for &v in adj {
            let (du, dv) = (depth[u].unwrap() as i64, depth[v].unwrap() as i64);
            period = gcd(period, (du + 1 - dv).unsigned_abs() as usize);
        }
    }
    debug_assert_eq!(bipartite, period % 2 == 0, "even period iff bipartite");

    let partition = bipartite.then(|| {
        let (mut i_side, mut j_side) = (Vec::new(), Vec::new());
        for (pos, &v) in members.iter().enumerate() {
            if colour[pos] == Some(false) {
                i_side.push(v);
            } else {
                j_side.push(v);
            }
        }
        (i_side, j_side)
    });
    BipartitenessReport { is_bipartite: bipartite, partition, period }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
