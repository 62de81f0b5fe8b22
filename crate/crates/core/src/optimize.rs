//! Edge-deletion strategies minimizing the estimated infection amount:
//! greedy on the supermodular bounds (with lazy evaluation and rank-one
//! incremental re-evaluation), the sandwich combination, an exact
//! brute-force enumerator, and a random baseline.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;
use thiserror::Error;

use crate::bounds::{sigma_lower, sigma_upper, BoundCache, BoundsError};
use crate::dynamics::estimated_infection;
use crate::model::{Edge, EdgeSet, NetworkModel};
use crate::spectral::{select_q, QVector, SpectralError};

/// Default ceiling on the number of subsets brute force will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 2_000_000;

/// Marginals below this are treated as exactly zero. Rank-one updates and
/// fresh solves disagree at the 1e-16 scale, and that dust is not monotone
/// across greedy rounds; flooring it keeps lazy, eager, and naive selection
/// order identical under ties.
const MARGINAL_NOISE_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("budget k = {k} exceeds candidate set size {available}")]
    BudgetExceedsCandidates { k: usize, available: usize },
    #[error("candidate edge {edge} has no positive weight in the model")]
    CandidateNotInModel { edge: Edge },
    #[error(
        "enumeration needs {required} subsets, above the cap of {cap}; raise the cap to proceed"
    )]
    EnumerationCapExceeded { required: u128, cap: u128 },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Which set function greedy descends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    SigmaUpper,
    SigmaLower,
    /// The exact mean-field infection amount. Supported, but it carries no
    /// approximation guarantee and costs a full linear solve per candidate.
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    GreedyUpper,
    GreedyLower,
    GreedySigma,
    Sandwich,
    BruteForce,
    RandomBaseline,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GreedyUpper => "greedy-upper",
            Method::GreedyLower => "greedy-lower",
            Method::GreedySigma => "greedy-sigma",
            Method::Sandwich => "sandwich",
            Method::BruteForce => "brute-force",
            Method::RandomBaseline => "random",
        }
    }

    /// Whether the method carries the greedy (1 - 1/e) style guarantee.
    pub fn has_guarantee(&self) -> bool {
        matches!(
            self,
            Method::GreedyUpper | Method::GreedyLower | Method::Sandwich | Method::BruteForce
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GreedyOptions {
    /// Priority-queue lazy evaluation of marginals (sound for the
    /// supermodular bound objectives; ignored for [`Objective::Sigma`]).
    pub lazy: bool,
    /// Re-evaluate bounds through the rank-one [`BoundCache`] instead of a
    /// fresh factorization per candidate.
    pub incremental: bool,
    /// Tolerance threaded into sigma evaluations.
    pub tol: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions {
            lazy: true,
            incremental: true,
            tol: crate::dynamics::DEFAULT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IterationTrace {
    pub edge: Edge,
    /// `f(P) - f(P + e)` at selection time; +inf marks a candidate that made
    /// an unstable objective finite.
    pub marginal: f64,
    /// Objective value after adding the edge.
    pub objective_value: f64,
}

#[derive(Debug, Clone)]
pub struct CandidateOutcome {
    pub method: Method,
    pub edges: Vec<Edge>,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichPick {
    Lower,
    Heuristic,
    Upper,
}

impl SandwichPick {
    pub fn as_str(&self) -> &'static str {
        match self {
            SandwichPick::Lower => "lower",
            SandwichPick::Heuristic => "heuristic",
            SandwichPick::Upper => "upper",
        }
    }
}

/// The three sandwich candidates plus the audit constituents of the
/// approximation-ratio certificate.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub lower: CandidateOutcome,
    pub heuristic: CandidateOutcome,
    pub upper: CandidateOutcome,
    pub selected: SandwichPick,
    /// sigma_U of the empty deletion set.
    pub sigma_upper_empty: f64,
    /// sigma_L evaluated at the lower-greedy solution.
    pub sigma_lower_at_lower_set: f64,
    /// (sigma_U(empty) - sigma(P_L)) / (sigma_U(empty) - sigma_L(P_L));
    /// `None` when the denominator vanishes or a constituent is infinite.
    pub guarantee_ratio_lower_route: Option<f64>,
    /// Every candidate evaluated to the +inf sentinel.
    pub all_infinite: bool,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub chosen: EdgeSet,
    /// The estimated infection amount of the chosen set (regardless of which
    /// objective drove the search).
    pub objective_sigma: f64,
    pub trace: Vec<IterationTrace>,
    pub method: Method,
    pub elapsed: Duration,
    pub sandwich: Option<SandwichReport>,
}

/// Ranking of one candidate within a greedy iteration. A candidate that
/// turns an infinite objective finite beats every finite marginal; among
/// those, smaller resulting objective is better.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Gain {
    Marginal(f64),
    Rescued { objective_after: f64 },
}

impl Gain {
    fn marginal(value: f64) -> Self {
        if value.abs() < MARGINAL_NOISE_FLOOR {
            Gain::Marginal(0.0)
        } else {
            Gain::Marginal(value)
        }
    }

    fn as_trace_marginal(&self) -> f64 {
        match self {
            Gain::Marginal(m) => *m,
            Gain::Rescued { .. } => f64::INFINITY,
        }
    }
}

impl Eq for Gain {}

impl Ord for Gain {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Gain::Rescued { objective_after: a }, Gain::Rescued { objective_after: b }) => {
                b.total_cmp(a)
            }
            (Gain::Rescued { .. }, Gain::Marginal(_)) => Ordering::Greater,
            (Gain::Marginal(_), Gain::Rescued { .. }) => Ordering::Less,
            (Gain::Marginal(a), Gain::Marginal(b)) => a.total_cmp(b),
        }
    }
}

impl PartialOrd for Gain {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Max-heap entry: higher gain first, ties broken by lowest edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct HeapEntry {
    gain: Gain,
    edge: Edge,
    stamp: usize,
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .cmp(&other.gain)
            .then_with(|| other.edge.cmp(&self.edge))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Evaluates the objective from scratch at `P`.
fn objective_value(
    objective: Objective,
    model: &NetworkModel,
    deletions: &EdgeSet,
    q: Option<&QVector>,
    tol: f64,
) -> Result<f64, OptimizeError> {
    Ok(match objective {
        Objective::SigmaUpper => sigma_upper(model, deletions, q.expect("q fixed for upper"))?,
        Objective::SigmaLower => sigma_lower(model, deletions)?,
        Objective::Sigma => estimated_infection(model, deletions, tol),
    })
}

fn check_candidates(model: &NetworkModel, candidates: &EdgeSet) -> Result<(), OptimizeError> {
    for e in candidates.iter() {
        if !model.has_edge(e) {
            return Err(OptimizeError::CandidateNotInModel { edge: *e });
        }
    }
    Ok(())
}

/// Greedy descent: k rounds, each deleting the candidate with the largest
/// objective decrease (ties to the lowest `(source, target)` edge). For the
/// bound objectives the marginals come from the rank-one cache and, by
/// default, a lazy priority queue; both toggles exist so the naive
/// full-recompute path can serve as an oracle.
pub fn greedy(
    objective: Objective,
    model: &NetworkModel,
    candidates: &EdgeSet,
    k: usize,
    options: &GreedyOptions,
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    check_candidates(model, candidates)?;
    if k > candidates.len() {
        return Err(OptimizeError::BudgetExceedsCandidates {
            k,
            available: candidates.len(),
        });
    }
    let method = match objective {
        Objective::SigmaUpper => Method::GreedyUpper,
        Objective::SigmaLower => Method::GreedyLower,
        Objective::Sigma => Method::GreedySigma,
    };
    let q = match objective {
        // q is fixed once, from the undeleted model, and reused for every P;
        // a per-P q would break marginal comparisons across sets.
        Objective::SigmaUpper => Some(select_q(model).map_err(BoundsError::from)?),
        _ => None,
    };
    let mut cache = match (objective, options.incremental) {
        (Objective::SigmaUpper, true) => Some(BoundCache::new_upper(
            model,
            q.as_ref().expect("set above"),
        )?),
        (Objective::SigmaLower, true) => Some(BoundCache::new_lower(model)?),
        _ => None,
    };

    let mut remaining: Vec<Edge> = candidates.sorted();
    let mut chosen = EdgeSet::new();
    let mut trace = Vec::with_capacity(k);
    let mut current = match &cache {
        Some(c) => c.sigma(),
        None => objective_value(objective, model, &chosen, q.as_ref(), options.tol)?,
    };
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut heap_live = false;

    for round in 0..k {
        let use_lazy = options.lazy
            && objective != Objective::Sigma
            && cache.as_ref().is_some_and(|c| c.is_valid());
        let (best_edge, best_gain) = if use_lazy {
            let scan = cache
                .as_ref()
                .and_then(|c| c.scan())
                .expect("valid cache has a scan");
            if !heap_live {
                heap.clear();
                for &edge in &remaining {
                    heap.push(HeapEntry {
                        gain: Gain::marginal(scan.marginal(edge)),
                        edge,
                        stamp: round,
                    });
                }
                heap_live = true;
            }
            loop {
                let top = heap.pop().expect("heap holds all remaining candidates");
                if top.stamp == round {
                    break (top.edge, top.gain);
                }
                heap.push(HeapEntry {
                    gain: Gain::marginal(scan.marginal(top.edge)),
                    edge: top.edge,
                    stamp: round,
                });
            }
        } else {
            heap_live = false;
            select_by_full_scan(
                objective,
                model,
                &chosen,
                &remaining,
                &cache,
                q.as_ref(),
                current,
                options,
            )?
        };

        remaining.retain(|e| *e != best_edge);
        chosen.insert(best_edge);
        if let Some(c) = cache.as_mut() {
            c.refresh(best_edge)?;
            current = c.sigma();
        } else {
            current = objective_value(objective, model, &chosen, q.as_ref(), options.tol)?;
        }
        trace.push(IterationTrace {
            edge: best_edge,
            marginal: best_gain.as_trace_marginal(),
            objective_value: current,
        });
    }

    let objective_sigma = estimated_infection(model, &chosen, options.tol);
    Ok(OptimizationResult {
        chosen,
        objective_sigma,
        trace,
        method,
        elapsed: start.elapsed(),
        sandwich: None,
    })
}

/// One full scan over the remaining candidates, used when lazy evaluation is
/// off, the objective is plain sigma, or the cache is (still) unstable.
#[allow(clippy::too_many_arguments)]
fn select_by_full_scan(
    objective: Objective,
    model: &NetworkModel,
    chosen: &EdgeSet,
    remaining: &[Edge],
    cache: &Option<BoundCache>,
    q: Option<&QVector>,
    current: f64,
    options: &GreedyOptions,
) -> Result<(Edge, Gain), OptimizeError> {
    let scan = cache.as_ref().and_then(|c| c.scan());
    let mut best: Option<(Edge, Gain)> = None;
    for &edge in remaining {
        let gain = if let Some(scan) = &scan {
            Gain::marginal(scan.marginal(edge))
        } else {
            let mut with_edge = chosen.clone();
            with_edge.insert(edge);
            let after = objective_value(objective, model, &with_edge, q, options.tol)?;
            if current.is_finite() {
                Gain::marginal(current - after)
            } else if after.is_finite() {
                Gain::Rescued {
                    objective_after: after,
                }
            } else {
                Gain::Marginal(0.0)
            }
        };
        let better = match &best {
            None => true,
            Some((_, incumbent)) => gain > *incumbent,
        };
        if better {
            best = Some((edge, gain));
        }
    }
    Ok(best.expect("remaining is non-empty while round < k <= |Q|"))
}

/// Exact minimizer by enumeration of every subset of size <= k, in
/// size-ascending lexicographic order; the first subset achieving the
/// minimum wins, so ties resolve to the lexicographically smallest set.
pub fn brute_force(
    model: &NetworkModel,
    candidates: &EdgeSet,
    k: usize,
    tol: f64,
) -> Result<OptimizationResult, OptimizeError> {
    brute_force_with_cap(model, candidates, k, tol, DEFAULT_ENUMERATION_CAP)
}

pub fn brute_force_with_cap(
    model: &NetworkModel,
    candidates: &EdgeSet,
    k: usize,
    tol: f64,
    cap: u128,
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    check_candidates(model, candidates)?;
    if k > candidates.len() {
        return Err(OptimizeError::BudgetExceedsCandidates {
            k,
            available: candidates.len(),
        });
    }
    let required = subset_count(candidates.len(), k);
    if required > cap {
        return Err(OptimizeError::EnumerationCapExceeded { required, cap });
    }
    let pool = candidates.sorted();
    let mut best_sigma = f64::INFINITY;
    let mut best_set: Option<Vec<Edge>> = None;
    for size in 0..=k {
        for combo in Combinations::new(pool.len(), size) {
            let set: EdgeSet = combo.iter().map(|&i| pool[i]).collect();
            let sigma = estimated_infection(model, &set, tol);
            if sigma < best_sigma || best_set.is_none() {
                best_sigma = sigma;
                best_set = Some(set.as_slice().to_vec());
            }
        }
    }
    let chosen: EdgeSet = best_set
        .expect("size-0 subset always evaluated")
        .into_iter()
        .collect();
    Ok(OptimizationResult {
        chosen,
        objective_sigma: best_sigma,
        trace: Vec::new(),
        method: Method::BruteForce,
        elapsed: start.elapsed(),
        sandwich: None,
    })
}

fn subset_count(n: usize, k: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for j in 0..=k.min(n) {
        if j > 0 {
            binom = binom.saturating_mul((n - j + 1) as u128) / j as u128;
        }
        total = total.saturating_add(binom);
    }
    total
}

/// Lexicographic k-combinations of {0, .., n-1}.
struct Combinations {
    n: usize,
    indices: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            indices: (0..k).collect(),
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let current = self.indices.clone();
        let k = self.indices.len();
        if k == 0 {
            self.done = true;
            return Some(current);
        }
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.indices[i] < self.n - (k - i) {
                self.indices[i] += 1;
                for j in i + 1..k {
                    self.indices[j] = self.indices[j - 1] + 1;
                }
                break;
            }
        }
        Some(current)
    }
}

/// Uniform k-subset of the candidates, deterministic in the seed.
pub fn random_baseline(
    model: &NetworkModel,
    candidates: &EdgeSet,
    k: usize,
    seed: u64,
    tol: f64,
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    check_candidates(model, candidates)?;
    if k > candidates.len() {
        return Err(OptimizeError::BudgetExceedsCandidates {
            k,
            available: candidates.len(),
        });
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, candidates.len(), k);
    let pool = candidates.as_slice();
    let chosen: EdgeSet = picked.iter().map(|i| pool[i]).collect();
    let objective_sigma = estimated_infection(model, &chosen, tol);
    Ok(OptimizationResult {
        chosen,
        objective_sigma,
        trace: Vec::new(),
        method: Method::RandomBaseline,
        elapsed: start.elapsed(),
        sandwich: None,
    })
}

/// How the sandwich picks its heuristic candidate for the exact objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeuristicP0 {
    /// Seeded uniform selection; the heuristic candidate has no bearing on
    /// the approximation certificate, so cheap is fine.
    #[default]
    Random,
    /// Greedy directly on sigma (no guarantee, full solve per candidate).
    GreedySigma,
}

/// Sandwich combination: greedy on the lower bound, greedy on the upper
/// bound, and a heuristic for the exact objective; returns whichever of the
/// three has the smallest estimated infection amount (ties resolve in that
/// order).
pub fn sandwich(
    model: &NetworkModel,
    candidates: &EdgeSet,
    k: usize,
    heuristic: HeuristicP0,
    seed: u64,
    options: &GreedyOptions,
) -> Result<OptimizationResult, OptimizeError> {
    let start = Instant::now();
    let lower_run = greedy(Objective::SigmaLower, model, candidates, k, options)?;
    let heuristic_run = match heuristic {
        HeuristicP0::Random => random_baseline(model, candidates, k, seed, options.tol)?,
        HeuristicP0::GreedySigma => greedy(Objective::Sigma, model, candidates, k, options)?,
    };
    let upper_run = greedy(Objective::SigmaUpper, model, candidates, k, options)?;

    let outcome = |run: &OptimizationResult| CandidateOutcome {
        method: run.method,
        edges: run.chosen.sorted(),
        sigma: run.objective_sigma,
    };
    let lower = outcome(&lower_run);
    let heuristic_out = outcome(&heuristic_run);
    let upper = outcome(&upper_run);

    let mut selected = SandwichPick::Lower;
    let mut best = &lower_run;
    if heuristic_run.objective_sigma < best.objective_sigma {
        selected = SandwichPick::Heuristic;
        best = &heuristic_run;
    }
    if upper_run.objective_sigma < best.objective_sigma {
        selected = SandwichPick::Upper;
        best = &upper_run;
    }

    let q = select_q(model).map_err(BoundsError::from)?;
    let sigma_upper_empty = sigma_upper(model, &EdgeSet::new(), &q)?;
    let sigma_lower_at_lower_set = sigma_lower(model, &lower_run.chosen)?;
    let ratio_num = sigma_upper_empty - lower.sigma;
    let ratio_den = sigma_upper_empty - sigma_lower_at_lower_set;
    let guarantee_ratio_lower_route =
        if ratio_num.is_finite() && ratio_den.is_finite() && ratio_den > 1e-12 {
            Some(ratio_num / ratio_den)
        } else {
            None
        };
    let all_infinite = [&lower, &heuristic_out, &upper]
        .iter()
        .all(|c| c.sigma.is_infinite());

    let chosen = best.chosen.clone();
    let objective_sigma = best.objective_sigma;
    Ok(OptimizationResult {
        chosen,
        objective_sigma,
        trace: best.trace.clone(),
        method: Method::Sandwich,
        elapsed: start.elapsed(),
        sandwich: Some(SandwichReport {
            lower,
            heuristic: heuristic_out,
            upper,
            selected,
            sigma_upper_empty,
            sigma_lower_at_lower_set,
            guarantee_ratio_lower_route,
            all_infinite,
        }),
    })
}
