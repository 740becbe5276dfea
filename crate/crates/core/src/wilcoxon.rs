//! Wilcoxon rank-sum test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::midranks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// `y` tends to be larger than `x`.
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Sum of the midranks of `y` in the pooled sample.
    pub w: f64,
    pub p: f64,
    pub exact: bool,
}

/// Exact null enumeration when `m + n <= EXACT_LIMIT`.
pub const EXACT_LIMIT: usize = 12;

fn pooled_ranks(x: &[f64], y: &[f64]) -> (Vec<f64>, f64) {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let w = ranks[x.len()..].iter().sum();
    (ranks, w)
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("rank-sum test needs two non-empty samples"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("rank-sum test needs finite values"));
    }
    Ok(())
}

fn combine(upper: f64, lower: f64, alt: Alternative) -> f64 {
    match alt {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => (2.0 * upper.min(lower)).min(1.0),
    }
}

/// p-value by enumerating every assignment of the pooled midranks to `y`.
pub fn rank_sum_exact(x: &[f64], y: &[f64], alt: Alternative) -> Result<RankSum> {
    check(x, y)?;
    let (ranks, w) = pooled_ranks(x, y);
    let n = y.len();
    let total = ranks.len();
    if total > 30 {
        return Err(Error::invalid("exact enumeration limited to 30 observations"));
    }
    let (mut ge, mut le, mut count) = (0u64, 0u64, 0u64);
    let eps = 1e-9;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let s: f64 = idx.iter().map(|&i| ranks[i]).sum();
        count += 1;
        if s >= w - eps {
            ge += 1;
        }
        if s <= w + eps {
            le += 1;
        }
        // next n-combination of 0..total
        let mut i = n;
        while i > 0 && idx[i - 1] == total - n + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
    let p = combine(ge as f64 / count as f64, le as f64 / count as f64, alt);
    Ok(RankSum { w, p, exact: true })
}

fn normal_sf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}

/// Normal approximation with tie-corrected variance and continuity
/// correction.
pub fn rank_sum_normal(x: &[f64], y: &[f64], alt: Alternative) -> Result<RankSum> {
    check(x, y)?;
    let (ranks, w) = pooled_ranks(x, y);
    let (m, n) = (x.len() as f64, y.len() as f64);
    let nn = m + n;
    let mean = n * (nn + 1.0) / 2.0;
    // tie correction from the midrank groups
    let mut sorted = ranks.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    let var = m * n / 12.0 * ((nn + 1.0) - ties / (nn * (nn - 1.0)));
    if var <= 0.0 {
        return Ok(RankSum { w, p: 1.0, exact: false });
    }
    let sd = var.sqrt();
    let upper = normal_sf((w - mean - 0.5) / sd).min(1.0);
    let lower = normal_sf((mean - w - 0.5) / sd).min(1.0);
    Ok(RankSum { w, p: combine(upper, lower, alt), exact: false })
}

/// Exact for small samples, normal approximation otherwise.
pub fn rank_sum(x: &[f64], y: &[f64], alt: Alternative) -> Result<RankSum> {
    if x.len() + y.len() <= EXACT_LIMIT {
        rank_sum_exact(x, y, alt)
    } else {
        rank_sum_normal(x, y, alt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exact_example() {
        let r = rank_sum(&[1.0, 2.0], &[3.0, 4.0], Alternative::Greater).unwrap();
        assert_eq!(r.w, 7.0);
        assert!((r.p - 1.0 / 6.0).abs() < 1e-15);
        assert!(r.exact);
    }

    #[test]
    fn identical_samples() {
        let r = rank_sum(&[2.0; 4], &[2.0; 4], Alternative::TwoSided).unwrap();
        assert_eq!(r.p, 1.0);
        let r = rank_sum_normal(&[2.0; 10], &[2.0; 10], Alternative::TwoSided).unwrap();
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn normal_tail() {
        assert!((normal_sf(1.959_963_984_540_054) - 0.025).abs() < 1e-10);
    }

    #[test]
    fn two_sided_is_symmetric() {
        let x = [0.3, 1.1, 2.2, 0.8, 1.9];
        let y = [2.5, 3.1, 1.7, 2.9, 3.3, 0.2];
        let a = rank_sum_exact(&x, &y, Alternative::TwoSided).unwrap().p;
        let b = rank_sum_exact(&y, &x, Alternative::TwoSided).unwrap().p;
        assert!((a - b).abs() < 1e-15);
    }
}
