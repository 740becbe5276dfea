//! One-class K-nearest-neighbour classifier over a dissimilarity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1 when at least `k` training items lie within `phi` of the query.
pub fn ocknn_classify(dissimilarities: &[f64], phi: f64, k: usize) -> u8 {
    u8::from(dissimilarities.iter().filter(|&&d| d <= phi).count() >= k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcKnnCalibration {
    pub phi: f64,
    pub k: usize,
    pub phi_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    /// Leave-one-out acceptance rate, `m[i][j]` for `phi_grid[i]`, `k_grid[j]`.
    pub acceptance: Vec<Vec<f64>>,
}

/// 50 thresholds from the smallest to the largest off-diagonal value.
pub fn default_phi_grid(d: &[Vec<f64>]) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo = lo.min(d[i][j]);
                hi = hi.max(d[i][j]);
            }
        }
    }
    if !lo.is_finite() {
        return vec![0.0];
    }
    if lo == hi {
        return vec![lo];
    }
    (0..50).map(|i| lo + (hi - lo) * i as f64 / 49.0).collect()
}

/// Choose `(phi, k)` on positive training data from its pairwise
/// dissimilarity matrix. `phi` is the smallest threshold with the largest
/// acceptance summed over `k`; `k` is the largest neighbour count still
/// accepting something.
pub fn ocknn_calibrate(
    d: &[Vec<f64>],
    phi_grid: Option<Vec<f64>>,
    k_grid: Option<Vec<usize>>,
) -> Result<OcKnnCalibration> {
    let n = d.len();
    if n < 2 {
        return Err(Error::invalid("calibration needs at least two training items"));
    }
    if d.iter().any(|row| row.len() != n) {
        return Err(Error::invalid("dissimilarity matrix must be square"));
    }
    let phi_grid = phi_grid.unwrap_or_else(|| default_phi_grid(d));
    let k_grid = k_grid.unwrap_or_else(|| (1..=n).collect());
    if phi_grid.is_empty() || k_grid.is_empty() {
        return Err(Error::invalid("empty calibration grid"));
    }
    let sorted: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| d[i][j]).collect();
            r.sort_by(f64::total_cmp);
            r
        })
        .collect();
    let acceptance: Vec<Vec<f64>> = phi_grid
        .iter()
        .map(|&phi| {
            let within: Vec<usize> = sorted.iter().map(|r| r.partition_point(|&x| x <= phi)).collect();
            k_grid
                .iter()
                .map(|&k| within.iter().filter(|&&c| c >= k).count() as f64 / n as f64)
                .collect()
        })
        .collect();
    let p: Vec<f64> = acceptance.iter().map(|row| row.iter().sum()).collect();
    let mut best = 0;
    for i in 1..p.len() {
        if p[i] > p[best] {
            best = i;
        }
    }
    let q: Vec<f64> = (0..k_grid.len()).map(|j| acceptance.iter().map(|row| row[j]).sum()).collect();
    let kj = (0..k_grid.len()).rev().find(|&j| q[j] != 0.0).unwrap_or(0);
    Ok(OcKnnCalibration { phi: phi_grid[best], k: k_grid[kj], phi_grid, k_grid, acceptance })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_counts_neighbours() {
        assert_eq!(ocknn_classify(&[0.1, 0.2, 0.9], 0.2, 2), 1);
        assert_eq!(ocknn_classify(&[0.1, 0.2, 0.9], 0.2, 3), 0);
        assert_eq!(ocknn_classify(&[], 1.0, 1), 0);
    }

    #[test]
    fn identical_training_items() {
        let n = 5;
        let d = vec![vec![0.0; n]; n];
        let c = ocknn_calibrate(&d, None, None).unwrap();
        assert_eq!(c.phi, 0.0);
        assert_eq!(c.k, n - 1);
    }

    #[test]
    fn rejects_small_or_ragged_input() {
        assert!(ocknn_calibrate(&[vec![0.0]], None, None).is_err());
        assert!(ocknn_calibrate(&[vec![0.0, 1.0], vec![1.0]], None, None).is_err());
    }
}
