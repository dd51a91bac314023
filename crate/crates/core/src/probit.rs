//! Maximum-likelihood probit regression.
//!
//! Newton iterations on the log-likelihood Σ [y·ln Φ(xβ) + (1−y)·ln(1−Φ(xβ))]
//! with the observed (negative-definite) Hessian, step-halving on
//! non-improving steps, and convergence declared when the gradient max-norm
//! falls below the tolerance. Collinear design columns are detected by a
//! pivoted LDLᵀ pass over the Gram matrix and dropped with a warning;
//! non-convergence is reported on the fit, never panicked.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::stats::auc;

#[derive(Debug, Clone, Copy)]
pub struct ProbitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ProbitOptions {
    fn default() -> Self {
        ProbitOptions {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbitFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub n_obs: usize,
    /// Design columns removed for collinearity, by name.
    pub dropped_collinear: Vec<String>,
    /// In-sample AUC of the fitted index.
    pub auc_in_sample: f64,
}

impl ProbitFit {
    /// Linear index xβ for a design row, using the kept columns.
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }
}

/// z clamped so Φ, φ, and the Mills ratio stay inside f64 range.
fn clamp_z(z: f64) -> f64 {
    z.clamp(-30.0, 30.0)
}

/// Mills ratio φ(z)/Φ(z) of the standard normal.
fn mills(normal: &Normal, z: f64) -> f64 {
    normal.pdf(z) / normal.cdf(z)
}

/// Log-likelihood of the probit at `beta`.
pub fn log_likelihood(x: &DMatrix<f64>, y: &[bool], beta: &DVector<f64>) -> f64 {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let z = x * beta;
    let mut ll = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let zi = clamp_z(z[i]);
        if yi {
            ll += normal.cdf(zi).ln();
        } else {
            ll += normal.cdf(-zi).ln();
        }
    }
    ll
}

/// Analytic gradient Xᵀs of the probit log-likelihood.
pub fn gradient(x: &DMatrix<f64>, y: &[bool], beta: &DVector<f64>) -> DVector<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let z = x * beta;
    let mut s = DVector::zeros(y.len());
    for (i, &yi) in y.iter().enumerate() {
        let zi = clamp_z(z[i]);
        s[i] = if yi { mills(&normal, zi) } else { -mills(&normal, -zi) };
    }
    x.tr_mul(&s)
}

/// Observed-information weights w_i > 0 (the Hessian is −XᵀWX).
fn hessian_weights(y: &[bool], z: &DVector<f64>) -> DVector<f64> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut w = DVector::zeros(y.len());
    for (i, &yi) in y.iter().enumerate() {
        let zi = clamp_z(z[i]);
        w[i] = if yi {
            let l = mills(&normal, zi);
            l * (l + zi)
        } else {
            let l = mills(&normal, -zi);
            l * (l - zi)
        };
        // numerical floor keeps the information matrix positive definite
        if w[i] < 1e-12 {
            w[i] = 1e-12;
        }
    }
    w
}

/// Indices of design columns that are (numerically) linear combinations of
/// earlier columns, found by pivot collapse in an LDLᵀ pass over XᵀX.
fn collinear_columns(gram: &DMatrix<f64>) -> Vec<usize> {
    let p = gram.nrows();
    let mut dropped = Vec::new();
    let mut kept: Vec<usize> = Vec::new();
    let mut factors: Vec<Vec<f64>> = vec![Vec::new(); p]; // per column: L entries over kept cols
    let mut pivots: Vec<f64> = Vec::new();
    for k in 0..p {
        let mut row_k: Vec<f64> = Vec::with_capacity(kept.len());
        for (pos, &j) in kept.iter().enumerate() {
            let mut v = gram[(k, j)];
            for q in 0..pos {
                v -= row_k[q] * factors[j][q] * pivots[q];
            }
            row_k.push(v / pivots[pos]);
        }
        let mut d = gram[(k, k)];
        for (q, &l) in row_k.iter().enumerate() {
            d -= l * l * pivots[q];
        }
        if gram[(k, k)] <= 0.0 || d <= 1e-9 * gram[(k, k)] {
            dropped.push(k);
        } else {
            factors[k] = row_k;
            pivots.push(d);
            kept.push(k);
        }
    }
    dropped
}

/// Fits the probit by Newton-Raphson. `names` labels the design columns.
pub fn fit_probit(
    x: &DMatrix<f64>,
    y: &[bool],
    names: &[String],
    opts: &ProbitOptions,
) -> Result<ProbitFit> {
    let n = x.nrows();
    if n == 0 || n != y.len() {
        return Err(Error::Data("empty or mismatched probit panel".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite regressor in probit design".into()));
    }

    // drop collinear columns up front
    let gram = x.tr_mul(x);
    let dropped_idx = collinear_columns(&gram);
    let kept_idx: Vec<usize> = (0..x.ncols()).filter(|i| !dropped_idx.contains(i)).collect();
    if kept_idx.is_empty() {
        return Err(Error::Data("all design columns are degenerate".into()));
    }
    let design = x.select_columns(&kept_idx);
    let kept_names: Vec<String> = kept_idx.iter().map(|&i| names[i].clone()).collect();
    let dropped_collinear: Vec<String> = dropped_idx.iter().map(|&i| names[i].clone()).collect();

    let p = design.ncols();
    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(&design, y, &beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let grad = gradient(&design, y, &beta);
        if grad.amax() < opts.tol {
            converged = true;
            break;
        }
        let z = &design * &beta;
        let w = hessian_weights(y, &z);
        // information matrix XᵀWX
        let mut xw = design.clone();
        for i in 0..n {
            for j in 0..p {
                xw[(i, j)] *= w[i];
            }
        }
        let info = design.tr_mul(&xw);
        let delta = match info.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => match info.lu().solve(&grad) {
                Some(d) => d,
                None => break, // singular information: report non-convergence
            },
        };
        // Newton decrement: the log-likelihood gain still achievable. On
        // large panels the gradient bottoms out at the normal-CDF's own
        // precision (~1e-10 per observation), so a vanishing decrement is
        // the scale-aware way to recognize the optimum.
        if grad.dot(&delta).abs() / 2.0 < 1e-12 {
            converged = true;
            break;
        }
        // step halving
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let candidate = &beta + step * &delta;
            let cand_ll = log_likelihood(&design, y, &candidate);
            if cand_ll.is_finite() && cand_ll >= ll - 1e-12 {
                beta = candidate;
                ll = cand_ll;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged {
        let grad = gradient(&design, y, &beta);
        converged = grad.amax() < opts.tol;
    }
    // a saturated index means the likelihood plateaued while the MLE
    // diverges (perfect separation); never report that as converged
    let z_check = &design * &beta;
    if z_check.iter().any(|&zi| zi.abs() >= 29.0) {
        converged = false;
    }

    // standard errors from the inverse information at the optimum
    let z = &design * &beta;
    let w = hessian_weights(y, &z);
    let mut xw = design.clone();
    for i in 0..n {
        for j in 0..p {
            xw[(i, j)] *= w[i];
        }
    }
    let info = design.tr_mul(&xw);
    let std_errors: Vec<f64> = match info.clone().cholesky() {
        Some(chol) => {
            let inv = chol.inverse();
            (0..p).map(|j| inv[(j, j)].max(0.0).sqrt()).collect()
        }
        None => vec![f64::NAN; p],
    };

    let scores: Vec<f64> = (0..n).map(|i| z[i]).collect();
    let auc_in_sample = auc(&scores, y).unwrap_or(0.5);

    Ok(ProbitFit {
        names: kept_names,
        coefficients: beta.iter().copied().collect(),
        std_errors,
        log_likelihood: ll,
        converged,
        iterations,
        n_obs: n,
        dropped_collinear,
        auc_in_sample,
    })
}
