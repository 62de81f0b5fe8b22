//! Closed-form supermodular bounds on the estimated infection amount.
//!
//! For a deletion set P, with `M` the q-weighted surrogate matrix and `N` the
//! infected-block matrix of the reduced model, the infection amount is
//! bracketed by
//!
//! ```text
//! sigma_U(P) = 1^T (A + Q(I-A))^{-1} (D (I - M_{-P})^{-1} - I) (x0 + Q y0)
//! sigma_L(P) = 1^T A^{-1} (D (I - N_{-P})^{-1} - I) (x0 + W (W + D')^{-1} y0)
//! ```
//!
//! whenever the respective spectral radius is below 1; otherwise the +inf
//! sentinel is returned so set-function code can compare candidates
//! uniformly. Both bounds are non-increasing and supermodular in P, which is
//! what the greedy machinery in [`crate::optimize`] relies on.
//!
//! [`BoundCache`] keeps the explicit inverse of `(I - base)` so that deleting
//! one edge - a rank-one change - re-evaluates a bound in O(n^2) via the
//! standard rank-one inverse update instead of a fresh factorization.

use thiserror::Error;

use crate::linalg::{LuFactors, Mat};
use crate::model::{delete_edges, Edge, EdgeSet, NetworkModel};
use crate::spectral::{
    build_system_matrix, spectral_radius, QVector, SpectralError, SystemMatrixKind,
};

/// Rank-one update denominators below this trigger a full re-factorization.
const DENOM_MIN: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("assumption delta <= delta_prime violated at node {index} ({delta} > {delta_prime})")]
    AssumptionOne {
        index: usize,
        delta: f64,
        delta_prime: f64,
    },
    #[error("assumption alpha in (0, 1] violated at node {index} (alpha = {alpha})")]
    AssumptionTwo { index: usize, alpha: f64 },
    #[error("omega + delta_prime = 0 at node {index}: the delayable discount is undefined")]
    ZeroExitRate { index: usize },
    #[error("q has {got} entries, model has {expected} nodes")]
    QDimension { got: usize, expected: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn check_assumption_one(model: &NetworkModel) -> Result<(), BoundsError> {
    for i in 0..model.n() {
        if model.delta()[i] > model.delta_prime()[i] {
            return Err(BoundsError::AssumptionOne {
                index: i,
                delta: model.delta()[i],
                delta_prime: model.delta_prime()[i],
            });
        }
    }
    Ok(())
}

fn check_assumption_two(model: &NetworkModel) -> Result<(), BoundsError> {
    for i in 0..model.n() {
        let alpha = model.alpha()[i];
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(BoundsError::AssumptionTwo { index: i, alpha });
        }
    }
    Ok(())
}

fn check_exit_rates(model: &NetworkModel) -> Result<(), BoundsError> {
    for i in 0..model.n() {
        if model.omega()[i] + model.delta_prime()[i] <= 0.0 {
            return Err(BoundsError::ZeroExitRate { index: i });
        }
    }
    Ok(())
}

/// Per-instance constants of one bound: the diagonal discount `u`, the
/// weighted initial mass `v`, and the healing rates.
struct BoundFunctional {
    u: Vec<f64>,
    v: Vec<f64>,
    delta: Vec<f64>,
}

impl BoundFunctional {
    fn upper(model: &NetworkModel, q: &QVector) -> Result<Self, BoundsError> {
        if q.len() != model.n() {
            return Err(BoundsError::QDimension {
                got: q.len(),
                expected: model.n(),
            });
        }
        check_assumption_one(model)?;
        let qs = q.as_slice();
        let u = (0..model.n())
            .map(|i| 1.0 / (model.alpha()[i] + qs[i] * (1.0 - model.alpha()[i])))
            .collect();
        let v = (0..model.n())
            .map(|i| model.x0()[i] + qs[i] * model.y0()[i])
            .collect();
        Ok(BoundFunctional {
            u,
            v,
            delta: model.delta().to_vec(),
        })
    }

    fn lower(model: &NetworkModel) -> Result<Self, BoundsError> {
        check_assumption_two(model)?;
        check_exit_rates(model)?;
        let u = model.alpha().iter().map(|a| 1.0 / a).collect();
        let v = (0..model.n())
            .map(|i| {
                let w = model.omega()[i];
                let dp = model.delta_prime()[i];
                model.x0()[i] + w / (w + dp) * model.y0()[i]
            })
            .collect();
        Ok(BoundFunctional {
            u,
            v,
            delta: model.delta().to_vec(),
        })
    }

    /// `sum_i u_i (delta_i z_i - v_i)` with `z = (I - base)^{-1} v`.
    fn evaluate(&self, z: &[f64]) -> f64 {
        let total: f64 = self
            .u
            .iter()
            .zip(&self.delta)
            .zip(z.iter().zip(&self.v))
            .map(|((u, d), (z, v))| u * (d * z - v))
            .sum();
        total.max(0.0)
    }
}

/// Solves `(I - base) z = v`; `None` when the system is singular.
fn solve_resolvent(base: &Mat, v: &[f64]) -> Option<Vec<f64>> {
    let n = base.rows();
    let i_minus = Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - base.get(i, j)
    });
    LuFactors::factor(&i_minus).ok().map(|lu| lu.solve(v))
}

/// A bound value together with the spectral radius that gated it.
#[derive(Debug, Clone, Copy)]
pub struct BoundEvaluation {
    /// The bound, or +inf when `rho >= 1` (or the resolvent is singular).
    pub value: f64,
    pub rho: f64,
}

/// Upper bound on the infection amount after deleting `P`, for the fixed
/// vector `q` (chosen once per problem instance). +inf sentinel when the
/// surrogate matrix is not stable.
pub fn sigma_upper(
    model: &NetworkModel,
    deletions: &EdgeSet,
    q: &QVector,
) -> Result<f64, BoundsError> {
    sigma_upper_detailed(model, deletions, q).map(|e| e.value)
}

pub fn sigma_upper_detailed(
    model: &NetworkModel,
    deletions: &EdgeSet,
    q: &QVector,
) -> Result<BoundEvaluation, BoundsError> {
    let functional = BoundFunctional::upper(model, q)?;
    let reduced = delete_edges(model, deletions);
    let base = build_system_matrix(&reduced, SystemMatrixKind::MOfQ, Some(q))?.entries;
    evaluate_bound(&functional, &base)
}

/// Lower bound on the infection amount after deleting `P`. +inf sentinel
/// (flagged by `rho >= 1`) when the infected-block matrix is not stable; such
/// values are excluded from sandwiching by callers.
pub fn sigma_lower(model: &NetworkModel, deletions: &EdgeSet) -> Result<f64, BoundsError> {
    sigma_lower_detailed(model, deletions).map(|e| e.value)
}

pub fn sigma_lower_detailed(
    model: &NetworkModel,
    deletions: &EdgeSet,
) -> Result<BoundEvaluation, BoundsError> {
    let functional = BoundFunctional::lower(model)?;
    let reduced = delete_edges(model, deletions);
    let base = build_system_matrix(&reduced, SystemMatrixKind::N, None)?.entries;
    evaluate_bound(&functional, &base)
}

fn evaluate_bound(
    functional: &BoundFunctional,
    base: &Mat,
) -> Result<BoundEvaluation, BoundsError> {
    let rho = spectral_radius(base, crate::spectral::DEFAULT_TOL)?;
    if rho >= 1.0 {
        return Ok(BoundEvaluation {
            value: f64::INFINITY,
            rho,
        });
    }
    match solve_resolvent(base, &functional.v) {
        Some(z) => Ok(BoundEvaluation {
            value: functional.evaluate(&z),
            rho,
        }),
        None => Ok(BoundEvaluation {
            value: f64::INFINITY,
            rho,
        }),
    }
}

/// The accumulated-flux route to the same upper bound:
/// `1^T S(0) B_{-P} (I - M_{-P})^{-1} (x0 + Q y0)`. Agrees with
/// [`sigma_upper`] to solver precision; kept as an independent algebraic
/// route for cross-checking.
pub fn sigma_upper_edge_flux(
    model: &NetworkModel,
    deletions: &EdgeSet,
    q: &QVector,
) -> Result<f64, BoundsError> {
    let functional = BoundFunctional::upper(model, q)?;
    let reduced = delete_edges(model, deletions);
    let base = build_system_matrix(&reduced, SystemMatrixKind::MOfQ, Some(q))?.entries;
    let rho = spectral_radius(&base, crate::spectral::DEFAULT_TOL)?;
    if rho >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let Some(z) = solve_resolvent(&base, &functional.v) else {
        return Ok(f64::INFINITY);
    };
    let s0 = reduced.s0();
    let coupling = reduced.b().vecmat(&s0);
    Ok(coupling.iter().zip(&z).map(|(c, z)| c * z).sum())
}

/// The accumulated-flux route to the lower bound:
/// `1^T S(0) B_{-P} ((I - N)^{-1} x0 + (I - N)^{-1} (I - F)^{-1} W y0)` with
/// `F = I - W - D'`.
pub fn sigma_lower_edge_flux(
    model: &NetworkModel,
    deletions: &EdgeSet,
) -> Result<f64, BoundsError> {
    check_assumption_two(model)?;
    check_exit_rates(model)?;
    let reduced = delete_edges(model, deletions);
    let base = build_system_matrix(&reduced, SystemMatrixKind::N, None)?.entries;
    let rho = spectral_radius(&base, crate::spectral::DEFAULT_TOL)?;
    if rho >= 1.0 {
        return Ok(f64::INFINITY);
    }
    let n = model.n();
    // (I - F)^{-1} W y0 is a diagonal rescale of y0.
    let discounted: Vec<f64> = (0..n)
        .map(|i| {
            let w = model.omega()[i];
            let dp = model.delta_prime()[i];
            w / (w + dp) * model.y0()[i]
        })
        .collect();
    let Some(zx) = solve_resolvent(&base, model.x0()) else {
        return Ok(f64::INFINITY);
    };
    let Some(zy) = solve_resolvent(&base, &discounted) else {
        return Ok(f64::INFINITY);
    };
    let s0 = reduced.s0();
    let coupling = reduced.b().vecmat(&s0);
    Ok(coupling
        .iter()
        .zip(zx.iter().zip(&zy))
        .map(|(c, (x, y))| c * (x + y))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Upper,
    Lower,
}

/// Factorization state for incremental bound re-evaluation: the current base
/// matrix (`M_{-P}` or `N_{-P}`), the explicit inverse of `(I - base)` while
/// the base is stable, and the deletion set accumulated so far.
///
/// Deleting an edge only ever shrinks the base entrywise, so once the cache
/// is valid it stays valid; an invalid cache retries a full rebuild on every
/// refresh until the radius drops below 1.
#[derive(Debug, Clone)]
pub struct BoundCache {
    kind: BoundKind,
    base: Mat,
    inverse: Option<Mat>,
    deleted: EdgeSet,
    /// Radius at the last full computation; an upper bound for the current
    /// base since deletions are entrywise decreasing.
    rho_bound: f64,
    u: Vec<f64>,
    v: Vec<f64>,
    delta: Vec<f64>,
}

impl BoundCache {
    pub fn new_upper(model: &NetworkModel, q: &QVector) -> Result<Self, BoundsError> {
        let functional = BoundFunctional::upper(model, q)?;
        let base = build_system_matrix(model, SystemMatrixKind::MOfQ, Some(q))?.entries;
        Self::build(BoundKind::Upper, base, functional)
    }

    pub fn new_lower(model: &NetworkModel) -> Result<Self, BoundsError> {
        let functional = BoundFunctional::lower(model)?;
        let base = build_system_matrix(model, SystemMatrixKind::N, None)?.entries;
        Self::build(BoundKind::Lower, base, functional)
    }

    fn build(kind: BoundKind, base: Mat, functional: BoundFunctional) -> Result<Self, BoundsError> {
        let mut cache = BoundCache {
            kind,
            base,
            inverse: None,
            deleted: EdgeSet::new(),
            rho_bound: f64::INFINITY,
            u: functional.u,
            v: functional.v,
            delta: functional.delta,
        };
        cache.rebuild()?;
        Ok(cache)
    }

    fn rebuild(&mut self) -> Result<(), BoundsError> {
        let rho = spectral_radius(&self.base, crate::spectral::DEFAULT_TOL)?;
        self.rho_bound = rho;
        self.inverse = if rho < 1.0 {
            let n = self.base.rows();
            let i_minus = Mat::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - self.base.get(i, j)
            });
            LuFactors::factor(&i_minus).ok().map(|lu| lu.inverse())
        } else {
            None
        };
        Ok(())
    }

    pub fn kind(&self) -> BoundKind {
        self.kind
    }

    pub fn is_valid(&self) -> bool {
        self.inverse.is_some()
    }

    pub fn deleted(&self) -> &EdgeSet {
        &self.deleted
    }

    pub fn base(&self) -> &Mat {
        &self.base
    }

    pub fn inverse(&self) -> Option<&Mat> {
        self.inverse.as_ref()
    }

    /// The bound value at the current deletion set; +inf while invalid.
    pub fn sigma(&self) -> f64 {
        match &self.inverse {
            Some(inv) => {
                let z = inv.matvec(&self.v);
                BoundFunctional {
                    u: self.u.clone(),
                    v: self.v.clone(),
                    delta: self.delta.clone(),
                }
                .evaluate(&z)
            }
            None => f64::INFINITY,
        }
    }

    /// Adds `e` to the deletion set. Deleting a zero-weight (or already
    /// deleted) edge leaves the matrices unchanged. While valid, the stored
    /// inverse is updated by the rank-one identity; a near-zero denominator
    /// falls back to a full re-factorization.
    pub fn refresh(&mut self, e: Edge) -> Result<(), BoundsError> {
        if !self.deleted.insert(e) {
            return Ok(());
        }
        let coef = self.base.get(e.target, e.source);
        if coef == 0.0 {
            return Ok(());
        }
        self.base.set(e.target, e.source, 0.0);
        match self.inverse.take() {
            Some(mut inv) => {
                // (X + coef e_t e_s^T)^{-1} from X^{-1}.
                let denom = 1.0 + coef * inv.get(e.source, e.target);
                if denom.abs() < DENOM_MIN {
                    self.rebuild()?;
                } else {
                    let col: Vec<f64> = (0..inv.rows()).map(|r| inv.get(r, e.target)).collect();
                    let row: Vec<f64> = inv.row(e.source).to_vec();
                    let scale = coef / denom;
                    for (r, cr) in col.iter().enumerate() {
                        if *cr == 0.0 {
                            continue;
                        }
                        let factor = scale * cr;
                        for (c, rv) in row.iter().enumerate() {
                            let updated = inv.get(r, c) - factor * rv;
                            inv.set(r, c, updated);
                        }
                    }
                    self.inverse = Some(inv);
                }
            }
            None => self.rebuild()?,
        }
        #[cfg(debug_assertions)]
        self.check_inverse_consistency();
        Ok(())
    }

    #[cfg(debug_assertions)]
    fn check_inverse_consistency(&self) {
        if let Some(inv) = &self.inverse {
            let n = self.base.rows();
            let i_minus = Mat::from_fn(n, n, |i, j| {
                let id = if i == j { 1.0 } else { 0.0 };
                id - self.base.get(i, j)
            });
            let product = inv.matmul(&i_minus);
            let err = product.sub(&Mat::identity(n)).frobenius_norm();
            debug_assert!(err < 1e-8, "cache inverse drifted: residual {err:e}");
        }
    }

    /// Precomputed vectors enabling O(1) what-if evaluation of the bound
    /// after one more deletion; `None` while the cache is invalid.
    pub fn scan(&self) -> Option<WhatIfScan<'_>> {
        let inv = self.inverse.as_ref()?;
        let w = inv.matvec(&self.v);
        let weighted: Vec<f64> = self.u.iter().zip(&self.delta).map(|(u, d)| u * d).collect();
        let s = inv.vecmat(&weighted);
        let f_current: f64 = self
            .u
            .iter()
            .zip(&self.delta)
            .zip(w.iter().zip(&self.v))
            .map(|((u, d), (z, v))| u * (d * z - v))
            .sum();
        Some(WhatIfScan {
            cache: self,
            w,
            s,
            f_current: f_current.max(0.0),
        })
    }
}

/// One-deletion lookahead over a valid [`BoundCache`].
pub struct WhatIfScan<'a> {
    cache: &'a BoundCache,
    /// `(I - base)^{-1} v`.
    w: Vec<f64>,
    /// `(u . delta)^T (I - base)^{-1}`.
    s: Vec<f64>,
    f_current: f64,
}

impl WhatIfScan<'_> {
    pub fn current(&self) -> f64 {
        self.f_current
    }

    /// `f(P) - f(P + e)`: nonnegative since the bound is non-increasing.
    pub fn marginal(&self, e: Edge) -> f64 {
        let coef = self.cache.base.get(e.target, e.source);
        if coef == 0.0 {
            return 0.0;
        }
        let inv = self.cache.inverse.as_ref().expect("scan implies valid");
        let denom = 1.0 + coef * inv.get(e.source, e.target);
        (coef * self.w[e.source] * self.s[e.target] / denom).max(0.0)
    }

    pub fn sigma_after(&self, e: Edge) -> f64 {
        (self.f_current - self.marginal(e)).max(0.0)
    }
}
