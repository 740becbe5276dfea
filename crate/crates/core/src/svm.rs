//! Kernel SVM trained by SMO on a precomputed Gram matrix.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
const MAX_ITER: usize = 1_000_000;

/// Dual solution of one binary machine over all training items.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective after every update.
    pub objective: Vec<f64>,
    pub converged: bool,
}

/// SMO with maximal-violating-pair selection. `y` holds +1/-1.
pub fn smo(k: &[Vec<f64>], y: &[f64], c: f64, tol: f64) -> Result<BinarySolution> {
    let n = y.len();
    if k.len() != n {
        return Err(Error::LengthMismatch { left: k.len(), right: n });
    }
    if !(c > 0.0) || !(tol > 0.0) {
        return Err(Error::invalid("C and tol must be positive"));
    }
    let mut alpha = vec![0.0; n];
    // gradient of 0.5 a'Qa - e'a
    let mut g = vec![-1.0; n];
    let mut objective = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * g[t];
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if up && v > gmax {
                (i, gmax) = (t, v);
            }
            if low && v < gmin {
                (j, gmin) = (t, v);
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            converged = true;
            break;
        }
        let curv = (k[i][i] + k[j][j] - 2.0 * k[i][j]).max(1e-12);
        let mut step = (gmax - gmin) / curv;
        step = step.min(if y[i] > 0.0 { c - alpha[i] } else { alpha[i] });
        step = step.min(if y[j] > 0.0 { alpha[j] } else { c - alpha[j] });
        // clamping absorbs rounding in alpha + (c - alpha)
        let (ai, aj) = (alpha[i], alpha[j]);
        alpha[i] = (ai + y[i] * step).clamp(0.0, c);
        alpha[j] = (aj - y[j] * step).clamp(0.0, c);
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            g[t] += y[t] * (y[i] * di * k[t][i] + y[j] * dj * k[t][j]);
        }
        objective.push(alpha.iter().zip(&g).map(|(a, gr)| a * (1.0 - gr) / 2.0).sum());
    }
    if !converged {
        log::warn!("SMO stopped after {MAX_ITER} updates without reaching tol {tol}");
    }
    // bias from free vectors, else the middle of the feasible range
    let (mut sum, mut count) = (0.0, 0);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let v = y[t] * g[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += v;
            count += 1;
        } else {
            let at_upper = alpha[t] >= c;
            if (y[t] > 0.0) == at_upper {
                lb = lb.max(v);
            } else {
                ub = ub.min(v);
            }
        }
    }
    let rho = if count > 0 {
        sum / count as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    };
    Ok(BinarySolution { alpha, bias: -rho, objective, converged })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRef {
    pub id: String,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// One machine per class for three or more classes, a single machine
/// (positive class `classes[1]`) for two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<i64>,
    /// Training indices of all support vectors, ascending.
    pub support: Vec<usize>,
    /// Per machine, `alpha_i * y_i` aligned with `support`.
    pub coefficients: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub c: f64,
    pub kernel: KernelRef,
}

pub fn svm_train(gram: &[Vec<f64>], labels: &[i64], c: f64, tol: f64, kernel: KernelRef) -> Result<SvmModel> {
    let n = labels.len();
    if gram.len() != n {
        return Err(Error::LengthMismatch { left: gram.len(), right: n });
    }
    for i in 0..n {
        if gram[i].len() != n {
            return Err(Error::LengthMismatch { left: gram[i].len(), right: n });
        }
        for j in 0..i {
            let (a, b) = (gram[i][j], gram[j][i]);
            if (a - b).abs() > 1e-9 * 1f64.max(a.abs().max(b.abs())) {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::invalid("need at least two classes"));
    }
    let positives: Vec<i64> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let sols: Vec<BinarySolution> = positives
        .par_iter()
        .map(|&p| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == p { 1.0 } else { -1.0 }).collect();
            smo(gram, &y, c, tol)
        })
        .collect::<Result<_>>()?;
    let support: Vec<usize> = (0..n).filter(|&i| sols.iter().any(|s| s.alpha[i] > 0.0)).collect();
    let coefficients = sols
        .iter()
        .zip(&positives)
        .map(|(s, &p)| {
            support.iter().map(|&i| s.alpha[i] * if labels[i] == p { 1.0 } else { -1.0 }).collect()
        })
        .collect();
    Ok(SvmModel { classes, support, coefficients, bias: sols.iter().map(|s| s.bias).collect(), c, kernel })
}

impl SvmModel {
    /// Decision values per machine for kernel values against `support`.
    pub fn decision(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.support.len() {
            return Err(Error::LengthMismatch { left: row.len(), right: self.support.len() });
        }
        Ok(self
            .coefficients
            .iter()
            .zip(&self.bias)
            .map(|(c, b)| c.iter().zip(row).map(|(a, k)| a * k).sum::<f64>() + b)
            .collect())
    }

    /// Pick the support columns out of a row against the full training set.
    pub fn support_row(&self, full_row: &[f64]) -> Result<Vec<f64>> {
        self.support
            .iter()
            .map(|&i| full_row.get(i).copied().ok_or(Error::invalid("kernel row shorter than training set")))
            .collect()
    }
}

/// Label for kernel values against the support vectors. Ties, including a
/// zero binary decision, go to the lower class.
pub fn svm_predict(model: &SvmModel, row: &[f64]) -> Result<i64> {
    let f = model.decision(row)?;
    if model.classes.len() == 2 {
        return Ok(if f[0] > 0.0 { model.classes[1] } else { model.classes[0] });
    }
    let mut best = 0;
    for (i, &v) in f.iter().enumerate() {
        if v > f[best] {
            best = i;
        }
    }
    Ok(model.classes[best])
}
