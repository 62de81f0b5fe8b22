//! Mean-field dynamics and the exact stochastic SDIR process.
//!
//! The mean-field side iterates the linear system
//!
//! ```text
//! x' = (I - D + A S(0) B) x + W y
//! y' = (I - A) S(0) B x + (I - W - D') y
//! r' = D x + D' y + r
//! ```
//!
//! whose accumulated mass `m = x + y + r` only ever grows by `S(0) B x(t)`
//! per step; the estimated infection amount `sigma` is the total of that
//! growth. The stochastic side runs the per-node four-state process the
//! linear system approximates, with seeded Monte Carlo aggregation.

use std::io::Write;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::{l1_norm, LuFactors, Mat};
use crate::model::{delete_edges, EdgeSet, NetworkModel};
use crate::spectral::{build_system_matrix, spectral_radius, SystemMatrixKind};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Partial sums beyond this are reported as divergent.
const DIVERGENCE_CEILING: f64 = 1e15;
/// Seed-mixing constant (64-bit golden ratio) for per-trial RNG derivation.
const SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Expected I/D/R occupation per node at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub r: Vec<f64>,
}

impl MeanFieldState {
    pub fn zeros(n: usize) -> Self {
        MeanFieldState {
            x: vec![0.0; n],
            y: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    /// The model's stored initial state.
    pub fn from_model(model: &NetworkModel) -> Self {
        MeanFieldState {
            x: model.x0().to_vec(),
            y: model.y0().to_vec(),
            r: model.r0().to_vec(),
        }
    }

    /// Accumulated mass m = x + y + r.
    pub fn m(&self) -> Vec<f64> {
        self.x
            .iter()
            .zip(&self.y)
            .zip(&self.r)
            .map(|((x, y), r)| x + y + r)
            .collect()
    }

    /// `||x||_1 + ||y||_1`: the active (still-moving) mass.
    pub fn active_mass(&self) -> f64 {
        l1_norm(&self.x) + l1_norm(&self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(&self.y)
            .chain(&self.r)
            .all(|v| v.is_finite())
    }
}

/// One exact step of the linear mean-field system; no clamping.
pub fn mean_field_step(model: &NetworkModel, s: &MeanFieldState) -> MeanFieldState {
    let n = model.n();
    let s0 = model.s0();
    let bx = model.b().matvec(&s.x);
    let mut next = MeanFieldState::zeros(n);
    for i in 0..n {
        let inflow = s0[i] * bx[i];
        next.x[i] = (1.0 - model.delta()[i]) * s.x[i]
            + model.alpha()[i] * inflow
            + model.omega()[i] * s.y[i];
        next.y[i] = (1.0 - model.alpha()[i]) * inflow
            + (1.0 - model.omega()[i] - model.delta_prime()[i]) * s.y[i];
        next.r[i] = model.delta()[i] * s.x[i] + model.delta_prime()[i] * s.y[i] + s.r[i];
    }
    next
}

/// A recorded mean-field run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<MeanFieldState>,
    pub converged: bool,
    /// Set when the run was cut short: either the joint transition matrix has
    /// spectral radius >= 1 (detected up front) or the iteration overflowed.
    pub diverged: bool,
    /// Coordinatewise supremum of m along the trajectory (m is
    /// nondecreasing, so this is m at termination).
    pub m_star: Vec<f64>,
    pub iterations: usize,
}

impl Trajectory {
    /// `||m_star - m(0)||_1`.
    pub fn infection_amount(&self) -> f64 {
        let m0 = self.states[0].m();
        self.m_star
            .iter()
            .zip(&m0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// Iterates [`mean_field_step`] from `s0` until the active mass drops below
/// `tol` or `max_iter` is reached. If the joint transition matrix already has
/// spectral radius >= 1 the run is flagged divergent without iterating.
pub fn run_mean_field(
    model: &NetworkModel,
    s0: MeanFieldState,
    tol: f64,
    max_iter: usize,
) -> Trajectory {
    assert!(tol > 0.0, "tol must be positive");
    let block = build_system_matrix(model, SystemMatrixKind::Block, None)
        .expect("block matrix always builds");
    let rho = spectral_radius(&block.entries, crate::spectral::DEFAULT_TOL)
        .expect("nonnegative block matrix");
    if rho >= 1.0 {
        let m_star = s0.m();
        return Trajectory {
            states: vec![s0],
            converged: false,
            diverged: true,
            m_star,
            iterations: 0,
        };
    }

    let mut states = vec![s0];
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let current = states.last().expect("non-empty");
        if current.active_mass() < tol {
            converged = true;
            break;
        }
        let next = mean_field_step(model, current);
        if !next.is_finite() {
            diverged = true;
            break;
        }
        debug_assert!(mass_growth_matches_inflow(model, current, &next));
        states.push(next);
        iterations += 1;
    }
    if !converged && !diverged && states.last().expect("non-empty").active_mass() < tol {
        converged = true;
    }
    let m_star = states.last().expect("non-empty").m();
    Trajectory {
        states,
        converged,
        diverged,
        m_star,
        iterations,
    }
}

/// m(t+1) - m(t) = S(0) B x(t), entrywise.
fn mass_growth_matches_inflow(
    model: &NetworkModel,
    before: &MeanFieldState,
    after: &MeanFieldState,
) -> bool {
    let s0 = model.s0();
    let bx = model.b().matvec(&before.x);
    let m0 = before.m();
    let m1 = after.m();
    m0.iter()
        .zip(&m1)
        .zip(s0.iter().zip(&bx))
        .all(|((a, b), (s, bxi))| ((b - a) - s * bxi).abs() <= 1e-12 * (1.0 + b.abs()))
}

/// How a sigma evaluation was resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaStatus {
    /// No surviving edge carries mass out of susceptible nodes; sigma is 0
    /// exactly.
    NoCoupling,
    /// Closed-form evaluation: the joint transition matrix is stable and the
    /// accumulated-mass linear system was solved directly.
    Solved { rho_block: f64 },
    /// Fixed-point fallback converged.
    Iterated { iterations: usize },
    /// The dynamics carry unbounded mass into the measured edges; the value
    /// is the +inf sentinel.
    Divergent { rho_block: f64, detail: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaEvaluation {
    pub value: f64,
    pub status: SigmaStatus,
}

/// Estimated infection amount `sigma(P)`: `||m_star - m(0)||_1` for the
/// mean-field dynamics after deleting the edges of `P`. Divergent instances
/// yield the +inf sentinel (never silently).
pub fn estimated_infection(model: &NetworkModel, deletions: &EdgeSet, tol: f64) -> f64 {
    estimated_infection_detailed(model, deletions, tol).value
}

pub fn estimated_infection_detailed(
    model: &NetworkModel,
    deletions: &EdgeSet,
    tol: f64,
) -> SigmaEvaluation {
    let reduced = delete_edges(model, deletions);
    sigma_on(&reduced, tol)
}

/// Sigma of the model as-is (no deletion), used when the caller already
/// holds the reduced model.
pub fn sigma_on(model: &NetworkModel, tol: f64) -> SigmaEvaluation {
    let n = model.n();
    // Weight vector: sigma accumulates c . x(t) with c = B^T S(0) 1.
    let s0 = model.s0();
    let coupling = model.b().vecmat(&s0);
    if coupling.iter().all(|&c| c == 0.0) {
        return SigmaEvaluation {
            value: 0.0,
            status: SigmaStatus::NoCoupling,
        };
    }

    let block = build_system_matrix(model, SystemMatrixKind::Block, None)
        .expect("block matrix always builds");
    let rho_block = spectral_radius(&block.entries, crate::spectral::DEFAULT_TOL)
        .expect("nonnegative block matrix");

    if rho_block < 1.0 {
        // Sum the trajectory in closed form: (I - BLOCK) (sum x; sum y) =
        // (x0; y0), then sigma = c . sum_x.
        let i_minus = Mat::from_fn(2 * n, 2 * n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id - block.entries.get(i, j)
        });
        if let Ok(lu) = LuFactors::factor(&i_minus) {
            let mut rhs = Vec::with_capacity(2 * n);
            rhs.extend_from_slice(model.x0());
            rhs.extend_from_slice(model.y0());
            let sums = lu.solve(&rhs);
            let value: f64 = coupling.iter().zip(&sums[..n]).map(|(c, x)| c * x).sum();
            return SigmaEvaluation {
                value: value.max(0.0),
                status: SigmaStatus::Solved { rho_block },
            };
        }
        // Near-singular factorization: fall through to iteration.
    }
    iterate_sigma(model, &coupling, rho_block, tol)
}

/// Fixed-point fallback (also the oracle path for the closed form): iterate
/// the state, accumulating `c . x(t)`, after masking out components that can
/// never reach the measured coupling.
fn iterate_sigma(
    model: &NetworkModel,
    coupling: &[f64],
    rho_block: f64,
    tol: f64,
) -> SigmaEvaluation {
    let n = model.n();
    let mask = backward_reachable(model, coupling);
    // The mask is backward-closed, so zeroing masked-out components never
    // changes the masked-in trajectory; it is re-applied after every step so
    // the convergence test sees only mass that can still reach the coupling.
    let apply_mask = |state: &mut MeanFieldState| {
        for i in 0..n {
            if !mask[i] {
                state.x[i] = 0.0;
            }
            if !mask[n + i] {
                state.y[i] = 0.0;
            }
        }
    };
    let mut state = MeanFieldState::from_model(model);
    apply_mask(&mut state);
    let mut sigma = 0.0;
    for iteration in 0..DEFAULT_MAX_ITER {
        let inc: f64 = coupling.iter().zip(&state.x).map(|(c, x)| c * x).sum();
        sigma += inc;
        if !sigma.is_finite() || sigma > DIVERGENCE_CEILING {
            return SigmaEvaluation {
                value: f64::INFINITY,
                status: SigmaStatus::Divergent {
                    rho_block,
                    detail: format!("partial sums exceeded {DIVERGENCE_CEILING:e}"),
                },
            };
        }
        if state.active_mass() < tol {
            return SigmaEvaluation {
                value: sigma,
                status: SigmaStatus::Iterated {
                    iterations: iteration,
                },
            };
        }
        state = mean_field_step(model, &state);
        apply_mask(&mut state);
    }
    SigmaEvaluation {
        value: f64::INFINITY,
        status: SigmaStatus::Divergent {
            rho_block,
            detail: format!("no convergence within {DEFAULT_MAX_ITER} iterations"),
        },
    }
}

/// Nodes of the joint (x, y) system from which the coupling vector is
/// reachable. Mass outside this set never contributes to sigma.
fn backward_reachable(model: &NetworkModel, coupling: &[f64]) -> Vec<bool> {
    let n = model.n();
    let s0 = model.s0();
    let mut mask = vec![false; 2 * n];
    let mut queue: Vec<usize> = Vec::new();
    for (j, &c) in coupling.iter().enumerate() {
        if c > 0.0 {
            mask[j] = true;
            queue.push(j);
        }
    }
    fn push(pred: usize, queue: &mut Vec<usize>, mask: &mut [bool]) {
        if !mask[pred] {
            mask[pred] = true;
            queue.push(pred);
        }
    }
    // Predecessors in the block graph: who feeds x_i / y_i in one step.
    while let Some(node) = queue.pop() {
        let i = node % n;
        let is_x = node < n;
        if is_x {
            // x_i <- x_i (1 - delta), x_j via alpha S0 B, y_i via omega.
            if model.delta()[i] < 1.0 {
                push(i, &mut queue, &mut mask);
            }
            if model.alpha()[i] * s0[i] > 0.0 {
                for &(j, _) in model.in_edges(i) {
                    push(j, &mut queue, &mut mask);
                }
            }
            if model.omega()[i] > 0.0 {
                push(n + i, &mut queue, &mut mask);
            }
        } else {
            // y_i <- x_j via (1 - alpha) S0 B, y_i via (1 - omega - delta').
            if (1.0 - model.alpha()[i]) * s0[i] > 0.0 {
                for &(j, _) in model.in_edges(i) {
                    push(j, &mut queue, &mut mask);
                }
            }
            if model.omega()[i] + model.delta_prime()[i] < 1.0 {
                push(n + i, &mut queue, &mut mask);
            }
        }
    }
    mask
}

/// Per-node discrete state of the stochastic process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeState {
    Susceptible,
    Delayable,
    Infected,
    Recovered,
}

/// One state per node; the stochastic counterpart of S + D + I + R = 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStateVector {
    pub states: Vec<NodeState>,
}

impl NodeStateVector {
    pub fn all_susceptible(n: usize) -> Self {
        NodeStateVector {
            states: vec![NodeState::Susceptible; n],
        }
    }

    /// Samples each node independently from the categorical distribution
    /// (x0, y0, r0, implied s0); assignment is deterministic for 0/1 entries.
    pub fn sample_initial(model: &NetworkModel, rng: &mut StdRng) -> Self {
        let states = (0..model.n())
            .map(|i| {
                let u: f64 = rng.random();
                let x = model.x0()[i];
                let y = model.y0()[i];
                let r = model.r0()[i];
                if u < x {
                    NodeState::Infected
                } else if u < x + y {
                    NodeState::Delayable
                } else if u < x + y + r {
                    NodeState::Recovered
                } else {
                    NodeState::Susceptible
                }
            })
            .collect();
        NodeStateVector { states }
    }

    /// No infected or delayable node remains.
    pub fn absorbed(&self) -> bool {
        self.states
            .iter()
            .all(|s| !matches!(s, NodeState::Infected | NodeState::Delayable))
    }

    pub fn count(&self, state: NodeState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }
}

/// One synchronous step of the exact process; every transition reads the
/// time-t snapshot.
pub fn stochastic_step(
    model: &NetworkModel,
    ns: &NodeStateVector,
    rng: &mut StdRng,
) -> NodeStateVector {
    let states = &ns.states;
    let next = (0..model.n())
        .map(|i| match states[i] {
            NodeState::Susceptible => {
                // Every currently-infected in-neighbor attacks independently.
                let mut attacked = false;
                for &(j, weight) in model.in_edges(i) {
                    if states[j] == NodeState::Infected && rng.random::<f64>() < weight {
                        attacked = true;
                    }
                }
                if attacked {
                    if rng.random::<f64>() < model.alpha()[i] {
                        NodeState::Infected
                    } else {
                        NodeState::Delayable
                    }
                } else {
                    NodeState::Susceptible
                }
            }
            NodeState::Delayable => {
                let p: f64 = rng.random();
                if p < model.omega()[i] {
                    NodeState::Infected
                } else if p < model.omega()[i] + model.delta_prime()[i] {
                    NodeState::Recovered
                } else {
                    NodeState::Delayable
                }
            }
            NodeState::Infected => {
                if rng.random::<f64>() < model.delta()[i] {
                    NodeState::Recovered
                } else {
                    NodeState::Infected
                }
            }
            NodeState::Recovered => NodeState::Recovered,
        })
        .collect();
    NodeStateVector { states: next }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrialRecord {
    pub infected_count: usize,
    /// Step at which no infected or delayable node remained; `None` when the
    /// horizon was reached with activity still present.
    pub absorbed_at: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    /// Mean count of nodes that left the susceptible state (excluding nodes
    /// that started outside it).
    pub mean: f64,
    pub stderr: f64,
    /// Per node: fraction of trials in which it started susceptible and was
    /// reached.
    pub per_node_hit_rates: Vec<f64>,
    pub truncated_trials: usize,
    pub records: Vec<TrialRecord>,
}

/// Runs `trials` independent seeded simulations to absorption or `horizon`
/// steps. Per-trial RNG streams are derived from `(seed, trial index)`, so
/// results are independent of execution order and identical across runs.
pub fn monte_carlo_infection(
    model: &NetworkModel,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> MonteCarloSummary {
    assert!(trials >= 1, "at least one trial required");
    let n = model.n();
    let outcomes: Vec<(TrialRecord, Vec<bool>)> = (0..trials)
        .into_par_iter()
        .map(|trial| run_trial(model, horizon, derive_trial_seed(seed, trial as u64)))
        .collect();

    let mut sum: u64 = 0;
    let mut sum_sq: u128 = 0;
    let mut hits = vec![0u64; n];
    let mut truncated = 0usize;
    let mut records = Vec::with_capacity(trials);
    for (record, hit) in &outcomes {
        sum += record.infected_count as u64;
        sum_sq += (record.infected_count as u128) * (record.infected_count as u128);
        if record.absorbed_at.is_none() {
            truncated += 1;
        }
        for (h, &was_hit) in hits.iter_mut().zip(hit) {
            *h += u64::from(was_hit);
        }
        records.push(*record);
    }
    let t = trials as f64;
    let mean = sum as f64 / t;
    let stderr = if trials > 1 {
        let var = (sum_sq as f64 - (sum as f64) * (sum as f64) / t) / (t - 1.0);
        (var.max(0.0) / t).sqrt()
    } else {
        0.0
    };
    MonteCarloSummary {
        mean,
        stderr,
        per_node_hit_rates: hits.iter().map(|&h| h as f64 / t).collect(),
        truncated_trials: truncated,
        records,
    }
}

fn derive_trial_seed(master: u64, trial: u64) -> u64 {
    // splitmix64 over the mixed pair; decorrelates consecutive trials.
    let mut z = master ^ trial.wrapping_mul(SEED_MIX).wrapping_add(SEED_MIX);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn run_trial(model: &NetworkModel, horizon: usize, seed: u64) -> (TrialRecord, Vec<bool>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut state = NodeStateVector::sample_initial(model, &mut rng);
    let started_susceptible: Vec<bool> = state
        .states
        .iter()
        .map(|&s| s == NodeState::Susceptible)
        .collect();
    let mut absorbed_at = None;
    for step in 0..=horizon {
        if state.absorbed() {
            absorbed_at = Some(step);
            break;
        }
        if step == horizon {
            break;
        }
        state = stochastic_step(model, &state, &mut rng);
    }
    let hit: Vec<bool> = started_susceptible
        .iter()
        .zip(&state.states)
        .map(|(&was_s, &now)| was_s && now != NodeState::Susceptible)
        .collect();
    let infected_count = hit.iter().filter(|&&h| h).count();
    (
        TrialRecord {
            infected_count,
            absorbed_at,
        },
        hit,
    )
}

/// CSV with columns `t,node,x,y,r`.
pub fn write_trajectory_csv(trajectory: &Trajectory, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "t,node,x,y,r")?;
    for (t, state) in trajectory.states.iter().enumerate() {
        for node in 0..state.x.len() {
            writeln!(
                out,
                "{t},{node},{},{},{}",
                state.x[node], state.y[node], state.r[node]
            )?;
        }
    }
    Ok(())
}

/// CSV with columns `trial,infected_count,absorbed_at` (empty when
/// truncated).
pub fn write_monte_carlo_csv(
    summary: &MonteCarloSummary,
    out: &mut impl Write,
) -> std::io::Result<()> {
    writeln!(out, "trial,infected_count,absorbed_at")?;
    for (trial, record) in summary.records.iter().enumerate() {
        match record.absorbed_at {
            Some(step) => writeln!(out, "{trial},{},{step}", record.infected_count)?,
            None => writeln!(out, "{trial},{},", record.infected_count)?,
        }
    }
    Ok(())
}
