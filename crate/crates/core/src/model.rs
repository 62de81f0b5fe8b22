//! The SDIR network model: a directed weighted graph plus per-node parameter
//! vectors, validation against the model assumptions, edge deletion,
//! serialization, and synthetic network generation.
//!
//! Orientation convention, fixed project-wide: an edge `(source j, target i)`
//! means "j can infect i" and corresponds to the matrix entry `B[i][j]`.

use std::collections::HashSet;
use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Mat;

/// Row-sum target used when the generator rescales an offending row of `B`.
const ROW_SUM_TARGET: f64 = 1.0 - 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    /// Structural dimension problems are hard errors, distinct from a failing
    /// [`ValidationReport`].
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("edge {edge} out of range for n = {n}")]
    EdgeOutOfRange { edge: Edge, n: usize },
    #[error("self-loop edge ({0} -> {0}) is not allowed")]
    SelfLoop(usize),
    #[error("duplicate edge {edge}")]
    DuplicateEdge { edge: Edge },
    #[error("edge {edge} has non-positive or non-finite weight {weight}")]
    BadEdgeWeight { edge: Edge, weight: f64 },
    #[error("model failed validation:\n{0}")]
    Validation(ValidationReport),
    #[error("edge {edge} not present in the model")]
    MissingEdge { edge: Edge },
    #[error("malformed model document: {0}")]
    Malformed(String),
    #[error("infeasible generator spec: {0}")]
    InfeasibleGenerator(String),
}

/// A directed edge `(source, target)`: `source` can infect `target`.
///
/// The derived `Ord` is lexicographic on `(source, target)`; this is the
/// canonical edge order used everywhere (serialization, candidate
/// enumeration, deterministic tie-breaking).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
}

impl Edge {
    pub fn new(source: usize, target: usize) -> Self {
        Edge { source, target }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} -> {})", self.source, self.target)
    }
}

/// An ordered, duplicate-free set of directed edges (a deletion set `P` or a
/// candidate set `Q`). Insertion order is preserved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeSet {
    edges: Vec<Edge>,
    seen: HashSet<Edge>,
}

impl EdgeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from pairs, silently dropping duplicates. Self-loops are
    /// rejected.
    pub fn from_pairs<I: IntoIterator<Item = (usize, usize)>>(
        pairs: I,
    ) -> Result<Self, ModelError> {
        let mut set = EdgeSet::new();
        for (source, target) in pairs {
            if source == target {
                return Err(ModelError::SelfLoop(source));
            }
            set.insert(Edge::new(source, target));
        }
        Ok(set)
    }

    pub fn from_edges<I: IntoIterator<Item = Edge>>(edges: I) -> Result<Self, ModelError> {
        Self::from_pairs(edges.into_iter().map(|e| (e.source, e.target)))
    }

    /// Inserts an edge, returning false if it was already present.
    pub fn insert(&mut self, e: Edge) -> bool {
        if self.seen.insert(e) {
            self.edges.push(e);
            true
        } else {
            false
        }
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.seen.contains(e)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn as_slice(&self) -> &[Edge] {
        &self.edges
    }

    pub fn union(&self, other: &EdgeSet) -> EdgeSet {
        let mut out = self.clone();
        for e in other.iter() {
            out.insert(*e);
        }
        out
    }

    /// The edges in canonical `(source, target)` order.
    pub fn sorted(&self) -> Vec<Edge> {
        let mut v = self.edges.clone();
        v.sort();
        v
    }
}

impl FromIterator<Edge> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = Edge>>(iter: I) -> Self {
        let mut set = EdgeSet::new();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

/// Where a validation violation was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Site {
    Node(usize),
    Edge { source: usize, target: usize },
    Model,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub rule: &'static str,
    pub site: Site,
    pub message: String,
}

/// Outcome of [`validate_model`]: `ok()` holds exactly when no invariant is
/// violated.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, rule: &'static str, site: Site, message: String) {
        self.violations.push(Violation {
            rule,
            site,
            message,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "[{}] {:?}: {}", v.rule, v.site, v.message)?;
        }
        Ok(())
    }
}

/// On-disk model document. Field order here fixes the serialization key
/// order; edges are emitted as `[source, target, weight]` triples in
/// canonical order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
    pub alpha: Vec<f64>,
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta_prime: Vec<f64>,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub r0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

/// An n-node directed weighted network with per-node SDIR parameters and
/// initial expected occupations. The single source of truth for `B`, `alpha`,
/// `omega`, `delta`, `delta_prime`, and the initial state.
///
/// Construction performs the structural (hard-error) checks only; value-range
/// assumptions are reported by [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    n: usize,
    b: Mat,
    alpha: Vec<f64>,
    omega: Vec<f64>,
    delta: Vec<f64>,
    delta_prime: Vec<f64>,
    x0: Vec<f64>,
    y0: Vec<f64>,
    r0: Vec<f64>,
    /// Nonzero entries of `b` in canonical edge order.
    edges: Vec<Edge>,
    /// For each target node, its in-edges as `(source, weight)`, sorted by
    /// source.
    in_edges: Vec<Vec<(usize, f64)>>,
    metadata: Option<serde_json::Value>,
}

impl NetworkModel {
    pub fn from_document(doc: ModelDocument) -> Result<Self, ModelError> {
        let n = doc.n;
        if n == 0 {
            return Err(ModelError::Dimension("n must be positive".into()));
        }
        let check_len = |name: &str, len: usize| -> Result<(), ModelError> {
            if len != n {
                Err(ModelError::Dimension(format!(
                    "{name} has {len} entries, expected n = {n}"
                )))
            } else {
                Ok(())
            }
        };
        check_len("alpha", doc.alpha.len())?;
        check_len("omega", doc.omega.len())?;
        check_len("delta", doc.delta.len())?;
        check_len("delta_prime", doc.delta_prime.len())?;
        check_len("x0", doc.x0.len())?;
        check_len("y0", doc.y0.len())?;
        check_len("r0", doc.r0.len())?;

        let mut b = Mat::zeros(n, n);
        let mut seen = HashSet::new();
        for &(source, target, weight) in &doc.edges {
            if source >= n || target >= n {
                return Err(ModelError::EdgeOutOfRange {
                    edge: Edge::new(source, target),
                    n,
                });
            }
            if source == target {
                return Err(ModelError::SelfLoop(source));
            }
            if !seen.insert((source, target)) {
                return Err(ModelError::DuplicateEdge {
                    edge: Edge::new(source, target),
                });
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(ModelError::BadEdgeWeight {
                    edge: Edge::new(source, target),
                    weight,
                });
            }
            b.set(target, source, weight);
        }

        let mut edges: Vec<Edge> = doc.edges.iter().map(|&(s, t, _)| Edge::new(s, t)).collect();
        edges.sort();
        let mut in_edges = vec![Vec::new(); n];
        for e in &edges {
            in_edges[e.target].push((e.source, b.get(e.target, e.source)));
        }

        Ok(NetworkModel {
            n,
            b,
            alpha: doc.alpha,
            omega: doc.omega,
            delta: doc.delta,
            delta_prime: doc.delta_prime,
            x0: doc.x0,
            y0: doc.y0,
            r0: doc.r0,
            edges,
            in_edges,
            metadata: doc.metadata,
        })
    }

    /// Convenience constructor from raw parts.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        alpha: Vec<f64>,
        omega: Vec<f64>,
        delta: Vec<f64>,
        delta_prime: Vec<f64>,
        x0: Vec<f64>,
        y0: Vec<f64>,
        r0: Vec<f64>,
    ) -> Result<Self, ModelError> {
        Self::from_document(ModelDocument {
            n,
            edges,
            alpha,
            omega,
            delta,
            delta_prime,
            x0,
            y0,
            r0,
            metadata: None,
        })
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            n: self.n,
            edges: self
                .edges
                .iter()
                .map(|e| (e.source, e.target, self.b.get(e.target, e.source)))
                .collect(),
            alpha: self.alpha.clone(),
            omega: self.omega.clone(),
            delta: self.delta.clone(),
            delta_prime: self.delta_prime.clone(),
            x0: self.x0.clone(),
            y0: self.y0.clone(),
            r0: self.r0.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The infection-weight matrix: `b()[i][j]` is the probability weight
    /// that node `j` infects node `i`.
    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn delta_prime(&self) -> &[f64] {
        &self.delta_prime
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn y0(&self) -> &[f64] {
        &self.y0
    }

    pub fn r0(&self) -> &[f64] {
        &self.r0
    }

    pub fn metadata(&self) -> Option<&serde_json::Value> {
        self.metadata.as_ref()
    }

    /// Implied initial susceptible occupation `1 - x0 - y0 - r0`.
    pub fn s0(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| 1.0 - self.x0[i] - self.y0[i] - self.r0[i])
            .collect()
    }

    /// Edges with positive weight, in canonical order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, e: &Edge) -> bool {
        e.source < self.n && e.target < self.n && self.b.get(e.target, e.source) > 0.0
    }

    pub fn edge_weight(&self, e: &Edge) -> f64 {
        self.b.get(e.target, e.source)
    }

    /// In-edges of `target` as `(source, weight)`, sorted by source.
    pub fn in_edges(&self, target: usize) -> &[(usize, f64)] {
        &self.in_edges[target]
    }

    /// All current edges as a candidate set, in canonical order.
    pub fn all_edges(&self) -> EdgeSet {
        self.edges.iter().copied().collect()
    }
}

/// Checks every model invariant and returns the full list of violations.
///
/// Dimension mismatches cannot occur here: they are hard errors at
/// construction time. Likewise the zero diagonal and positivity of listed
/// edge weights hold by construction.
// Negated comparisons are deliberate: a NaN parameter must register as a
// violation, not slip through an inverted predicate.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_model(model: &NetworkModel) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = model.n;
    for i in 0..n {
        if !(model.delta[i] <= model.delta_prime[i]) {
            report.push(
                "delta_leq_delta_prime",
                Site::Node(i),
                format!(
                    "delta = {} exceeds delta_prime = {}",
                    model.delta[i], model.delta_prime[i]
                ),
            );
        }
        if !(model.alpha[i] > 0.0 && model.alpha[i] <= 1.0) {
            report.push(
                "alpha_in_unit_half_open",
                Site::Node(i),
                format!("alpha = {} outside (0, 1]", model.alpha[i]),
            );
        }
        if !(model.omega[i] + model.delta_prime[i] <= 1.0) {
            report.push(
                "omega_plus_delta_prime",
                Site::Node(i),
                format!(
                    "omega + delta_prime = {} exceeds 1",
                    model.omega[i] + model.delta_prime[i]
                ),
            );
        }
        for (name, v) in [
            ("omega", model.omega[i]),
            ("delta", model.delta[i]),
            ("delta_prime", model.delta_prime[i]),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                report.push(
                    "param_range",
                    Site::Node(i),
                    format!("{name} = {v} outside [0, 1]"),
                );
            }
        }
        let (x, y, r) = (model.x0[i], model.y0[i], model.r0[i]);
        let in_unit = |v: f64| (0.0..=1.0).contains(&v) && v.is_finite();
        if !(in_unit(x) && in_unit(y) && in_unit(r) && x + y + r <= 1.0) {
            report.push(
                "initial_state",
                Site::Node(i),
                format!("(x0, y0, r0) = ({x}, {y}, {r}) invalid: entries in [0,1], sum <= 1"),
            );
        }
        let row_sum: f64 = model.b.row(i).iter().sum();
        if !(row_sum < 1.0) {
            report.push(
                "row_sum_below_one",
                Site::Node(i),
                format!("row sum of B = {row_sum} not strictly below 1"),
            );
        }
    }
    for e in &model.edges {
        let w = model.edge_weight(e);
        if !(w < 1.0) {
            report.push(
                "weight_below_one",
                Site::Edge {
                    source: e.source,
                    target: e.target,
                },
                format!("B entry {w} not below 1"),
            );
        }
    }
    report
}

/// What to do when a deletion set references an edge the model does not have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingEdgePolicy {
    /// Skip the edge; the skipped edges are reported back to the caller.
    #[default]
    Skip,
    Error,
}

pub struct DeletionOutcome {
    pub model: NetworkModel,
    /// Edges in the deletion set that were not present (only with
    /// [`MissingEdgePolicy::Skip`]).
    pub missing: Vec<Edge>,
}

/// Returns a copy of the model with `B[target][source]` zeroed for each edge
/// of `set`; all other fields are unchanged. Missing edges are skipped.
pub fn delete_edges(model: &NetworkModel, set: &EdgeSet) -> NetworkModel {
    delete_edges_checked(model, set, MissingEdgePolicy::Skip)
        .expect("skip policy cannot fail")
        .model
}

pub fn delete_edges_checked(
    model: &NetworkModel,
    set: &EdgeSet,
    policy: MissingEdgePolicy,
) -> Result<DeletionOutcome, ModelError> {
    let mut missing = Vec::new();
    for e in set.iter() {
        if !model.has_edge(e) {
            match policy {
                MissingEdgePolicy::Skip => missing.push(*e),
                MissingEdgePolicy::Error => return Err(ModelError::MissingEdge { edge: *e }),
            }
        }
    }
    let mut doc = model.to_document();
    doc.edges
        .retain(|&(s, t, _)| !set.contains(&Edge::new(s, t)));
    let model = NetworkModel::from_document(doc)?;
    Ok(DeletionOutcome { model, missing })
}

/// Parses a model document, then validates it; validation failures are
/// returned as [`ModelError::Validation`] with the full report attached.
pub fn parse_model_document(text: &str) -> Result<NetworkModel, ModelError> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let model = NetworkModel::from_document(doc)?;
    let report = validate_model(&model);
    if !report.ok() {
        return Err(ModelError::Validation(report));
    }
    Ok(model)
}

/// Deterministic serialization: stable key order, canonical edge order, full
/// float round-trip precision. Two emits of the same model are byte-identical.
pub fn emit_model_document(model: &NetworkModel) -> String {
    let mut s = serde_json::to_string_pretty(&model.to_document()).expect("document serializes");
    s.push('\n');
    s
}

/// Parses an edge-set file: a list of `[source, target]` pairs.
pub fn parse_edge_set_document(text: &str) -> Result<EdgeSet, ModelError> {
    let pairs: Vec<(usize, usize)> =
        serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    EdgeSet::from_pairs(pairs)
}

pub fn emit_edge_set_document(set: &EdgeSet) -> String {
    let pairs: Vec<(usize, usize)> = set.iter().map(|e| (e.source, e.target)).collect();
    let mut s = serde_json::to_string(&pairs).expect("edge set serializes");
    s.push('\n');
    s
}

/// Closed uniform sampling range `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformRange {
    pub lo: f64,
    pub hi: f64,
}

impl UniformRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        UniformRange { lo, hi }
    }

    fn well_formed(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn sample(&self, rng: &mut StdRng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StarDirection {
    /// Hub infects leaves.
    Outward,
    /// Leaves infect the hub.
    Inward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Topology {
    ErdosRenyi { n: usize, p: f64 },
    Star { n: usize, direction: StarDirection },
    Path { n: usize },
    Complete { n: usize },
}

impl Topology {
    pub fn n(&self) -> usize {
        match *self {
            Topology::ErdosRenyi { n, .. }
            | Topology::Star { n, .. }
            | Topology::Path { n }
            | Topology::Complete { n } => n,
        }
    }
}

/// Specification for [`generate_network`]: a topology family plus uniform
/// samplers for every parameter and the initially-infected seed-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub topology: Topology,
    pub beta: UniformRange,
    pub alpha: UniformRange,
    pub omega: UniformRange,
    pub delta: UniformRange,
    pub delta_prime: UniformRange,
    /// Number of nodes with `x0 = 1` (initially infected).
    pub seed_nodes: usize,
    /// Number of nodes with `y0 = 1` (initially delayable), disjoint from
    /// the infected seeds.
    #[serde(default)]
    pub delayed_seed_nodes: usize,
}

impl GeneratorSpec {
    fn check_feasible(&self) -> Result<(), ModelError> {
        let err = |msg: String| Err(ModelError::InfeasibleGenerator(msg));
        for (name, r) in [
            ("beta", &self.beta),
            ("alpha", &self.alpha),
            ("omega", &self.omega),
            ("delta", &self.delta),
            ("delta_prime", &self.delta_prime),
        ] {
            if !r.well_formed() {
                return err(format!("{name} range [{}, {}] is malformed", r.lo, r.hi));
            }
        }
        if self.beta.lo <= 0.0 || self.beta.hi >= 1.0 {
            return err(format!(
                "beta range [{}, {}] must lie in (0, 1)",
                self.beta.lo, self.beta.hi
            ));
        }
        if self.alpha.lo <= 0.0 || self.alpha.hi > 1.0 {
            return err(format!(
                "alpha range [{}, {}] must lie in (0, 1]",
                self.alpha.lo, self.alpha.hi
            ));
        }
        for (name, r) in [
            ("omega", &self.omega),
            ("delta", &self.delta),
            ("delta_prime", &self.delta_prime),
        ] {
            if r.lo < 0.0 || r.hi > 1.0 {
                return err(format!(
                    "{name} range [{}, {}] must lie in [0, 1]",
                    r.lo, r.hi
                ));
            }
        }
        // Every delta draw must admit a delta_prime draw with
        // delta <= delta_prime and omega + delta_prime <= 1, whatever the
        // omega draw was.
        let lo_worst = self.delta_prime.lo.max(self.delta.hi);
        let hi_worst = self.delta_prime.hi.min(1.0 - self.omega.hi);
        if lo_worst > hi_worst {
            return err(format!(
                "delta range [{}, {}], delta_prime range [{}, {}], omega range [{}, {}] leave no \
                 feasible delta_prime (need max(delta_prime.lo, delta.hi) <= \
                 min(delta_prime.hi, 1 - omega.hi))",
                self.delta.lo,
                self.delta.hi,
                self.delta_prime.lo,
                self.delta_prime.hi,
                self.omega.lo,
                self.omega.hi
            ));
        }
        let n = self.topology.n();
        if n == 0 {
            return err("topology must have at least one node".into());
        }
        if let Topology::ErdosRenyi { p, .. } = self.topology {
            if !(0.0..=1.0).contains(&p) {
                return err(format!("edge probability {p} outside [0, 1]"));
            }
        }
        if self.seed_nodes + self.delayed_seed_nodes > n {
            return err(format!(
                "{} infected + {} delayable seeds exceed n = {n}",
                self.seed_nodes, self.delayed_seed_nodes
            ));
        }
        Ok(())
    }

    fn topology_edges(&self, rng: &mut StdRng) -> Vec<(usize, usize)> {
        match self.topology {
            Topology::ErdosRenyi { n, p } => {
                let mut edges = Vec::new();
                for source in 0..n {
                    for target in 0..n {
                        if source != target && rng.random::<f64>() < p {
                            edges.push((source, target));
                        }
                    }
                }
                edges
            }
            Topology::Star { n, direction } => (1..n)
                .map(|leaf| match direction {
                    StarDirection::Outward => (0, leaf),
                    StarDirection::Inward => (leaf, 0),
                })
                .collect(),
            Topology::Path { n } => (1..n).map(|i| (i - 1, i)).collect(),
            Topology::Complete { n } => {
                let mut edges = Vec::new();
                for source in 0..n {
                    for target in 0..n {
                        if source != target {
                            edges.push((source, target));
                        }
                    }
                }
                edges
            }
        }
    }
}

/// Generates a model from `spec`, deterministically in `(spec, seed)`. Rows
/// of `B` whose sum would reach 1 are uniformly rescaled; the affected rows
/// are recorded in the model metadata. The result always passes
/// [`validate_model`].
pub fn generate_network(spec: &GeneratorSpec, seed: u64) -> Result<NetworkModel, ModelError> {
    spec.check_feasible()?;
    let mut rng = StdRng::seed_from_u64(seed);
    let n = spec.topology.n();

    let mut edges: Vec<(usize, usize, f64)> = spec
        .topology_edges(&mut rng)
        .into_iter()
        .map(|(s, t)| (s, t, spec.beta.sample(&mut rng)))
        .collect();
    edges.sort_by_key(|&(s, t, _)| (s, t));

    // Row-sum repair: rescale any row of B reaching 1.
    let mut row_sums = vec![0.0; n];
    for &(_, target, w) in &edges {
        row_sums[target] += w;
    }
    let mut rescaled_rows = Vec::new();
    for (row, &sum) in row_sums.iter().enumerate() {
        if sum >= 1.0 {
            let factor = ROW_SUM_TARGET / sum;
            for e in edges.iter_mut().filter(|e| e.1 == row) {
                e.2 *= factor;
            }
            rescaled_rows.push(row);
        }
    }

    let alpha: Vec<f64> = (0..n).map(|_| spec.alpha.sample(&mut rng)).collect();
    let omega: Vec<f64> = (0..n).map(|_| spec.omega.sample(&mut rng)).collect();
    let delta: Vec<f64> = (0..n).map(|_| spec.delta.sample(&mut rng)).collect();
    let delta_prime: Vec<f64> = (0..n)
        .map(|i| {
            let lo = spec.delta_prime.lo.max(delta[i]);
            let hi = spec.delta_prime.hi.min(1.0 - omega[i]);
            UniformRange::new(lo, hi).sample(&mut rng)
        })
        .collect();

    let mut x0 = vec![0.0; n];
    let mut y0 = vec![0.0; n];
    let total_seeds = spec.seed_nodes + spec.delayed_seed_nodes;
    let chosen = rand::seq::index::sample(&mut rng, n, total_seeds);
    for (pos, node) in chosen.iter().enumerate() {
        if pos < spec.seed_nodes {
            x0[node] = 1.0;
        } else {
            y0[node] = 1.0;
        }
    }

    let metadata = serde_json::json!({
        "generator": {
            "topology": spec.topology,
            "seed": seed,
            "rescaled_rows": rescaled_rows,
        }
    });

    let model = NetworkModel::from_document(ModelDocument {
        n,
        edges,
        alpha,
        omega,
        delta,
        delta_prime,
        x0,
        y0,
        r0: vec![0.0; n],
        metadata: Some(metadata),
    })?;
    debug_assert!(validate_model(&model).ok());
    Ok(model)
}
