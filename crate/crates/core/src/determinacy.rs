//! Linear answerability: does a bundle `S` determine a priced query `Q`?
//!
//! `S → (q, v)` holds iff there are coefficients `c` with `Σ c_i·q_i = q` and
//! `Σ c_i²·v_i ≤ v`. [`min_variance`] solves the underlying equality
//! constrained quadratic program
//!
//! ```text
//!     minimize    Σ c_i² v_i
//!     subject to  Σ c_i q_i = q
//! ```
//!
//! in closed form and returns a [`DeterminacyCertificate`] that can be checked
//! independently of the solver.
//!
//! Entries are split by variance:
//!
//! * `v_i = 0`: free in the objective. The target is reduced modulo their span
//!   first, and they absorb whatever remains in it (minimum-norm weights).
//! * `0 < v_i < ∞`: substituting `c_i = y_i / √v_i` turns the program into a
//!   minimum-norm least-squares problem, solved with a truncated SVD.
//! * `v_i = ∞`: any nonzero weight costs infinite variance, so `c_i = 0`.

use faer::{Col, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::query::{de_ext, ser_ext, LinearQuery, PricedQuery, QueryBundle};

/// Relative tolerance for span membership: `‖Σ c_i q_i − q‖₂ ≤ SPAN_TOL·max(1, ‖q‖₂)`.
pub const SPAN_TOL: f64 = 1e-9;

/// Relative slack allowed when comparing the minimal variance against `v`.
pub const VARIANCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterminacyCertificate {
    pub feasible: bool,
    /// One weight per bundle entry, in bundle order. Empty when infeasible.
    pub coefficients: Vec<f64>,
    #[serde(serialize_with = "ser_ext", deserialize_with = "de_ext")]
    pub min_variance: f64,
    pub residual_norm: f64,
}

impl DeterminacyCertificate {
    fn infeasible(residual_norm: f64) -> Self {
        DeterminacyCertificate {
            feasible: false,
            coefficients: Vec::new(),
            min_variance: f64::INFINITY,
            residual_norm,
        }
    }

    /// Re-checks the certificate against the bundle and target without
    /// trusting the solver: span residual and the variance identity.
    pub fn verify(&self, bundle: &QueryBundle, target: &LinearQuery) -> bool {
        if !self.feasible {
            return self.coefficients.is_empty() && self.min_variance == f64::INFINITY;
        }
        if self.coefficients.len() != bundle.len() {
            return false;
        }
        let residual = combination_residual(bundle, &self.coefficients, target);
        if residual > SPAN_TOL * target.norm_l2().max(1.0) {
            return false;
        }
        let variance = weighted_variance(bundle, &self.coefficients);
        variance <= self.min_variance * (1.0 + 1e-12) + f64::MIN_POSITIVE
            && self.min_variance <= variance * (1.0 + 1e-12) + f64::MIN_POSITIVE
    }
}

fn check_dims(bundle: &QueryBundle, target: &LinearQuery) -> Result<()> {
    for entry in bundle.iter() {
        target.check_len(entry.len())?;
    }
    Ok(())
}

/// `‖Σ c_i q_i − q‖₂`, skipping zero weights.
pub(crate) fn combination_residual(bundle: &QueryBundle, coeffs: &[f64], target: &LinearQuery) -> f64 {
    let mut acc: Vec<f64> = target.coefficients().iter().map(|t| -t).collect();
    for (entry, &c) in bundle.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        for (a, q) in acc.iter_mut().zip(entry.query().coefficients()) {
            *a += c * q;
        }
    }
    acc.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `Σ c_i² v_i` with the convention `0·∞ = 0`.
pub(crate) fn weighted_variance(bundle: &QueryBundle, coeffs: &[f64]) -> f64 {
    bundle
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c != 0.0)
        .map(|(e, &c)| c * c * e.variance())
        .sum()
}

fn columns(bundle: &QueryBundle, idx: &[usize], n: usize) -> Mat<f64> {
    Mat::from_fn(n, idx.len(), |r, c| bundle.entries()[idx[c]].query().coefficients()[r])
}

fn svd_tolerance(m: &Mat<f64>) -> f64 {
    let mut largest = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            largest = largest.max(m[(i, j)].abs());
        }
    }
    largest * (m.nrows().max(m.ncols()) as f64) * f64::EPSILON * 8.0
}

/// Minimum-norm least-squares solution of `m·y ≈ rhs`.
fn min_norm_solve(m: &Mat<f64>, rhs: &Col<f64>) -> Col<f64> {
    if m.ncols() == 0 || m.nrows() == 0 {
        return Col::zeros(m.ncols());
    }
    let svd = m.thin_svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let sigma_max = (0..s.nrows()).map(|k| s[k]).fold(0.0, f64::max);
    let cutoff = svd_tolerance(m).max(sigma_max * 1e-13);
    let mut y = Col::zeros(m.ncols());
    for k in 0..s.nrows() {
        if s[k] <= cutoff {
            continue;
        }
        let coef = (0..u.nrows()).map(|i| u[(i, k)] * rhs[i]).sum::<f64>() / s[k];
        for j in 0..m.ncols() {
            y[j] += coef * v[(j, k)];
        }
    }
    y
}

/// Solves `min Σ c_i² v_i s.t. Σ c_i q_i = q` over the bundle.
pub fn min_variance(bundle: &QueryBundle, target: &LinearQuery) -> Result<DeterminacyCertificate> {
    check_dims(bundle, target)?;
    let n = target.len();
    let m = bundle.len();
    let q_norm = target.norm_l2();
    let span_tol = SPAN_TOL * q_norm.max(1.0);

    if target.is_zero() {
        return Ok(DeterminacyCertificate {
            feasible: true,
            coefficients: vec![0.0; m],
            min_variance: 0.0,
            residual_norm: 0.0,
        });
    }

    let mut exact = Vec::new();
    let mut noisy = Vec::new();
    for (i, e) in bundle.iter().enumerate() {
        let v = e.variance();
        if v == 0.0 {
            exact.push(i);
        } else if v.is_finite() {
            noisy.push(i);
        }
    }

    let q = Col::from_fn(n, |i| target.coefficients()[i]);
    let a_exact = columns(bundle, &exact, n);
    let a_noisy = columns(bundle, &noisy, n);

    // Project target and noisy columns onto the orthogonal complement of the
    // zero-variance span.
    let (residual_target, reduced_noisy) = if exact.is_empty() {
        (q.clone(), a_noisy.clone())
    } else {
        let project = |v: &Col<f64>| -> Col<f64> {
            let w = min_norm_solve(&a_exact, v);
            v - &a_exact * &w
        };
        let r = project(&q);
        let mut b = a_noisy.clone();
        for j in 0..b.ncols() {
            let projected = project(&b.col(j).to_owned());
            for i in 0..n {
                b[(i, j)] = projected[i];
            }
        }
        (r, b)
    };

    let mut c_noisy = Col::<f64>::zeros(noisy.len());
    if residual_target.norm_l2() > span_tol && !noisy.is_empty() {
        let inv_sd: Vec<f64> = noisy
            .iter()
            .map(|&i| 1.0 / bundle.entries()[i].variance().sqrt())
            .collect();
        let mut weighted = reduced_noisy.clone();
        for (j, s) in inv_sd.iter().enumerate() {
            for i in 0..n {
                weighted[(i, j)] *= s;
            }
        }
        let y = min_norm_solve(&weighted, &residual_target);
        for j in 0..noisy.len() {
            c_noisy[j] = y[j] * inv_sd[j];
        }
    }

    let mut coefficients = vec![0.0; m];
    for (j, &i) in noisy.iter().enumerate() {
        coefficients[i] = c_noisy[j];
    }
    if !exact.is_empty() {
        let remainder = &q - &a_noisy * &c_noisy;
        let c_exact = min_norm_solve(&a_exact, &remainder);
        for (j, &i) in exact.iter().enumerate() {
            coefficients[i] = c_exact[j];
        }
    }

    let residual_norm = combination_residual(bundle, &coefficients, target);
    if residual_norm > span_tol {
        return Ok(DeterminacyCertificate::infeasible(residual_norm));
    }
    Ok(DeterminacyCertificate {
        feasible: true,
        min_variance: weighted_variance(bundle, &coefficients),
        coefficients,
        residual_norm,
    })
}

/// `S → Q`: the bundle linearly answers `Q` within its variance bound.
///
/// A target variance of `∞` only requires span membership; entries with
/// infinite variance may then carry weight too.
pub fn determines(bundle: &QueryBundle, target: &PricedQuery) -> Result<bool> {
    if target.variance().is_infinite() {
        check_dims(bundle, target.query())?;
        let relaxed: QueryBundle = bundle
            .iter()
            .map(|e| e.with_variance(if e.variance().is_infinite() { 1.0 } else { e.variance() }))
            .collect::<Result<_>>()?;
        return Ok(min_variance(&relaxed, target.query())?.feasible);
    }
    let cert = min_variance(bundle, target.query())?;
    Ok(cert.feasible && cert.min_variance <= target.variance() * (1.0 + VARIANCE_TOL))
}

/// Combines realized answers to the bundle into an answer for the target.
pub fn derive_answer(bundle: &QueryBundle, answers: &[f64], cert: &DeterminacyCertificate) -> Result<f64> {
    if !cert.feasible {
        return Err(Error::InfeasibleCertificate);
    }
    if answers.len() != bundle.len() {
        return Err(Error::dims(bundle.len(), answers.len()));
    }
    if cert.coefficients.len() != bundle.len() {
        return Err(Error::dims(bundle.len(), cert.coefficients.len()));
    }
    Ok(cert
        .coefficients
        .iter()
        .zip(answers)
        .filter(|(&c, _)| c != 0.0)
        .map(|(c, a)| c * a)
        .sum())
}
