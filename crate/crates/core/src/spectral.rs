//! System matrices of the linearized SDIR dynamics and spectral-radius
//! machinery for nonnegative matrices.
//!
//! The joint (x, y) update is governed by a 2n-by-2n block matrix; its
//! one-sided surrogate `M(q) = I - C(q) + (A + Q(I - A)) S(0) B` (with
//! `C(q)_i = min(delta_i, delta'_i + (1 - 1/q_i) omega_i)` and `Q = diag(q)`)
//! dominates the trajectory of `x + Q y`, so `rho(M(q)) < 1` certifies
//! convergence. With `q = 1` the surrogate reduces to the plain SIR matrix
//! `M_SIR = I - D + S(0) B`.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{dot, l1_norm, LinalgError, Mat};
use crate::model::NetworkModel;

/// Diagonal shift applied before power iteration; it makes the iteration
/// aperiodic and shifts the spectral radius by exactly the same amount.
const POWER_SHIFT: f64 = 1e-3;
/// Power-iteration cap before falling back to norm-based estimation.
const POWER_ITER_CAP: usize = 100_000;
/// Floor for q entries, which must be strictly positive.
pub const EPS_Q: f64 = 1e-6;
/// Default absolute tolerance for spectral radii.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("q entry {value} at node {index} outside (0, 1]")]
    BadQ { index: usize, value: f64 },
    #[error("q vector required for kind M_of_q and not allowed otherwise")]
    QMismatch,
    #[error("q has {got} entries, model has {expected} nodes")]
    QDimension { got: usize, expected: usize },
    #[error("assumption delta <= delta_prime violated at node {index} ({delta} > {delta_prime})")]
    AssumptionViolated {
        index: usize,
        delta: f64,
        delta_prime: f64,
    },
}

/// A vector `q` with entries in (0, 1], used to weight the delayable
/// occupation in the convergence surrogate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QVector {
    values: Vec<f64>,
}

impl QVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SpectralError> {
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0 && value <= 1.0) || !value.is_finite() {
                return Err(SpectralError::BadQ { index, value });
            }
        }
        Ok(QVector { values })
    }

    pub fn ones(n: usize) -> Self {
        QVector {
            values: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemMatrixKind {
    /// `I - D + S(0) B`: the plain SIR transition surrogate.
    MSir,
    /// `I - C(q) + (A + Q(I-A)) S(0) B`.
    MOfQ,
    /// `I - D + A S(0) B`: the infected-block transition used by the lower
    /// bound.
    N,
    /// The full 2n-by-2n joint (x, y) transition matrix.
    Block,
}

/// A nonnegative system matrix together with its kind and, for `MOfQ`, the q
/// vector it was built from.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    pub kind: SystemMatrixKind,
    pub entries: Mat,
    pub q: Option<QVector>,
}

/// `C(q)_i = min(delta_i, delta'_i + (1 - 1/q_i) omega_i)`.
fn c_of_q(model: &NetworkModel, q: &[f64]) -> Vec<f64> {
    (0..model.n())
        .map(|i| {
            let alt = model.delta_prime()[i] + (1.0 - 1.0 / q[i]) * model.omega()[i];
            model.delta()[i].min(alt)
        })
        .collect()
}

pub fn build_system_matrix(
    model: &NetworkModel,
    kind: SystemMatrixKind,
    q: Option<&QVector>,
) -> Result<SystemMatrix, SpectralError> {
    match (kind, q) {
        (SystemMatrixKind::MOfQ, Some(_)) => {}
        (SystemMatrixKind::MOfQ, None) | (_, Some(_)) => return Err(SpectralError::QMismatch),
        _ => {}
    }
    let n = model.n();
    let s0 = model.s0();
    let b = model.b();
    let entries = match kind {
        SystemMatrixKind::MSir => Mat::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 - model.delta()[i] } else { 0.0 };
            base + s0[i] * b.get(i, j)
        }),
        SystemMatrixKind::N => Mat::from_fn(n, n, |i, j| {
            let base = if i == j { 1.0 - model.delta()[i] } else { 0.0 };
            base + model.alpha()[i] * s0[i] * b.get(i, j)
        }),
        SystemMatrixKind::MOfQ => {
            let q = q.expect("checked above");
            if q.len() != n {
                return Err(SpectralError::QDimension {
                    got: q.len(),
                    expected: n,
                });
            }
            let c = c_of_q(model, q.as_slice());
            let qs = q.as_slice();
            Mat::from_fn(n, n, |i, j| {
                let base = if i == j { 1.0 - c[i] } else { 0.0 };
                let gain = model.alpha()[i] + qs[i] * (1.0 - model.alpha()[i]);
                base + gain * s0[i] * b.get(i, j)
            })
        }
        SystemMatrixKind::Block => block_matrix(model),
    };
    debug_assert!(entries.is_nonnegative());
    Ok(SystemMatrix {
        kind,
        entries,
        q: q.cloned(),
    })
}

/// The joint transition of (x, y):
/// x' = (I - D + A S(0) B) x + W y,
/// y' = (I - A) S(0) B x + (I - W - D') y.
fn block_matrix(model: &NetworkModel) -> Mat {
    let n = model.n();
    let s0 = model.s0();
    let b = model.b();
    Mat::from_fn(2 * n, 2 * n, |bi, bj| {
        let (i, j) = (bi % n, bj % n);
        match (bi < n, bj < n) {
            (true, true) => {
                let base = if i == j { 1.0 - model.delta()[i] } else { 0.0 };
                base + model.alpha()[i] * s0[i] * b.get(i, j)
            }
            (true, false) => {
                if i == j {
                    model.omega()[i]
                } else {
                    0.0
                }
            }
            (false, true) => (1.0 - model.alpha()[i]) * s0[i] * b.get(i, j),
            (false, false) => {
                if i == j {
                    1.0 - model.omega()[i] - model.delta_prime()[i]
                } else {
                    0.0
                }
            }
        }
    })
}

/// Spectral radius of a nonnegative square matrix to absolute tolerance
/// `tol`.
///
/// Power iteration runs on `mat + shift*I` (the shift keeps the iteration
/// aperiodic; the radius shifts by exactly `shift`). Whenever the iterate is
/// strictly positive, the min/max Collatz-Wielandt ratios bracket the radius
/// and certify the result. If the bracket fails to close (reducible
/// matrices), a norm-based doubling estimate `||mat^(2^s)||^(1/2^s)` takes
/// over.
pub fn spectral_radius(mat: &Mat, tol: f64) -> Result<f64, SpectralError> {
    if !mat.is_square() {
        return Err(LinalgError::NotSquare {
            rows: mat.rows(),
            cols: mat.cols(),
        }
        .into());
    }
    if let Some((row, col)) = mat.find_non_finite() {
        return Err(LinalgError::NonFinite { row, col }.into());
    }
    if tol <= 0.0 || tol.is_nan() {
        return Err(SpectralError::BadTolerance(tol));
    }
    debug_assert!(
        mat.is_nonnegative(),
        "spectral_radius requires entries >= 0"
    );
    let n = mat.rows();
    if n == 0 {
        return Ok(0.0);
    }

    let mut v = vec![1.0 / n as f64; n];
    let mut rayleigh_prev = f64::INFINITY;
    let mut plateau = 0usize;
    for _ in 0..POWER_ITER_CAP {
        let mut w = mat.matvec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += POWER_SHIFT * vi;
        }
        // Collatz-Wielandt bracket, trusted only while v is safely positive.
        if v.iter().all(|&x| x > 1e-280) {
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for (wi, vi) in w.iter().zip(&v) {
                let ratio = wi / vi;
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            if hi - lo < tol {
                return Ok(((lo + hi) / 2.0 - POWER_SHIFT).max(0.0));
            }
        }
        let rayleigh = dot(&v, &w) / dot(&v, &v);
        if (rayleigh - rayleigh_prev).abs() < tol * 0.01 {
            plateau += 1;
            if plateau >= 8 {
                break; // stuck without a certificate; use the norm estimate
            }
        } else {
            plateau = 0;
        }
        rayleigh_prev = rayleigh;
        let norm = l1_norm(&w);
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    Ok(gelfand_radius(mat, tol))
}

/// Norm-based radius estimate via repeated squaring with running
/// normalization: `mat^(2^s)` is tracked as `exp(log_scale) * a` with
/// `||a||_inf = 1`.
fn gelfand_radius(mat: &Mat, tol: f64) -> f64 {
    let mut a = mat.clone();
    let mut log_scale = 0.0f64;
    let mut best = f64::INFINITY;
    let mut prev = f64::INFINITY;
    for s in 1..=60u32 {
        let norm = a.inf_norm();
        if norm == 0.0 {
            return 0.0;
        }
        a = a.scale(1.0 / norm);
        a = a.matmul(&a);
        log_scale = 2.0 * (log_scale + norm.ln());
        let norm2 = a.inf_norm();
        if norm2 == 0.0 {
            return 0.0;
        }
        let est = ((log_scale + norm2.ln()) / 2f64.powi(s as i32)).exp();
        best = best.min(est);
        if s >= 6 && (prev - est).abs() < tol * 0.5 {
            break;
        }
        prev = est;
    }
    best.max(0.0)
}

/// Picks the q vector realizing the sharpened convergence condition: the
/// lower endpoint `omega_i / (omega_i + delta'_i - delta_i)` where that
/// denominator is positive (floored at [`EPS_Q`] when the endpoint is 0),
/// and 1 where `delta'_i = delta_i` with `omega_i = 0`.
///
/// Within this range `C(q) = D`, and the surrogate is entrywise
/// nondecreasing in q, so the lower endpoint minimizes its spectral radius;
/// in particular `rho(M(q)) <= rho(M_SIR)`.
pub fn select_q(model: &NetworkModel) -> Result<QVector, SpectralError> {
    let mut values = Vec::with_capacity(model.n());
    for i in 0..model.n() {
        let (w, d, dp) = (model.omega()[i], model.delta()[i], model.delta_prime()[i]);
        if d > dp {
            return Err(SpectralError::AssumptionViolated {
                index: i,
                delta: d,
                delta_prime: dp,
            });
        }
        let denom = w + dp - d;
        let q = if denom > 0.0 {
            (w / denom).max(EPS_Q)
        } else {
            1.0
        };
        values.push(q.min(1.0));
    }
    QVector::new(values)
}

/// Coordinate-descent refinement of q over (0, 1]^n, minimizing
/// `rho(M(q))`. Off the default path; useful when the endpoint choice of
/// [`select_q`] is not the global minimizer.
pub fn refine_q(
    model: &NetworkModel,
    start: &QVector,
    sweeps: usize,
    tol: f64,
) -> Result<(QVector, f64), SpectralError> {
    let n = model.n();
    if start.len() != n {
        return Err(SpectralError::QDimension {
            got: start.len(),
            expected: n,
        });
    }
    let rho_of = |values: &[f64]| -> Result<f64, SpectralError> {
        let q = QVector::new(values.to_vec())?;
        let m = build_system_matrix(model, SystemMatrixKind::MOfQ, Some(&q))?;
        spectral_radius(&m.entries, tol)
    };
    let grid: Vec<f64> = (1..=16).map(|k| k as f64 / 16.0).collect();
    let mut values = start.as_slice().to_vec();
    let mut best_rho = rho_of(&values)?;
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..n {
            let original = values[i];
            let mut best_here = (best_rho, original);
            for &candidate in grid.iter().chain([EPS_Q, original].iter()) {
                if candidate == original {
                    continue;
                }
                values[i] = candidate;
                let rho = rho_of(&values)?;
                if rho < best_here.0 - tol {
                    best_here = (rho, candidate);
                }
            }
            values[i] = best_here.1;
            if best_here.0 < best_rho - tol {
                best_rho = best_here.0;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((QVector::new(values)?, best_rho))
}
