//! Randomness test on interval-length distributions.
//!
//! For each level the histogram of interval lengths is compared with the
//! histogram of a fresh Gaussian replicate by symmetric KL divergence. The
//! divergence is placed on its null distribution, estimated from pairs of
//! Gaussian replicates, and the level is rejected when the null CDF exceeds
//! the confidence level.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mla::{transform, IntervalRepresentation};
use crate::rng;
use crate::signal::Signal;

/// Added to every bin before renormalizing.
pub const SKL_EPS: f64 = 1e-10;

/// Levels with fewer intervals are not tested.
pub const MIN_INTERVALS: usize = 5;

/// Normalized histogram of the interval lengths of `level` (1-based) over
/// `nb` equal bins on `[0, len_max]`; longer intervals fall in the last bin.
pub fn interval_length_pdf(rep: &IntervalRepresentation, level: usize, nb: usize, len_max: f64) -> Result<Vec<f64>> {
    if level == 0 || level > rep.levels.len() {
        return Err(Error::invalid(format!("level {level} out of range")));
    }
    let lengths: Vec<f64> = rep.levels[level - 1].iter().map(|iv| iv.length()).collect();
    if lengths.is_empty() {
        return Err(Error::LevelSkipped(level));
    }
    histogram(&lengths, nb, len_max)
}

fn histogram(lengths: &[f64], nb: usize, len_max: f64) -> Result<Vec<f64>> {
    if nb == 0 || !(len_max > 0.0) {
        return Err(Error::invalid("need nb >= 1 and len_max > 0"));
    }
    let mut h = vec![0.0; nb];
    let width = len_max / nb as f64;
    for &l in lengths {
        let b = ((l / width).floor() as usize).min(nb - 1);
        h[b] += 1.0;
    }
    let n = lengths.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    Ok(h)
}

fn smoothed_log2(p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let s: f64 = p.iter().map(|v| v + SKL_EPS).sum();
    let q: Vec<f64> = p.iter().map(|v| (v + SKL_EPS) / s).collect();
    let l = q.iter().map(|v| v.log2()).collect();
    (q, l)
}

fn skl_prepared(p: &(Vec<f64>, Vec<f64>), q: &(Vec<f64>, Vec<f64>)) -> f64 {
    let mut pq = 0.0;
    let mut qp = 0.0;
    for i in 0..p.0.len() {
        let d = p.1[i] - q.1[i];
        pq += p.0[i] * d;
        qp -= q.0[i] * d;
    }
    0.5 * (pq + qp)
}

/// Symmetric KL divergence in bits.
pub fn skl(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { left: p.len(), right: q.len() });
    }
    Ok(skl_prepared(&smoothed_log2(p), &smoothed_log2(q)).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullParams {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
    pub l: usize,
    pub k: usize,
    pub nb: usize,
    pub seed: u64,
}

/// Sorted null SKL samples per level, with the binning range used for
/// that level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullModel {
    pub params: NullParams,
    /// Longest interval seen at each level across the replicates.
    pub len_max: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

fn gaussian_signal(mu: f64, sigma: f64, l: usize, seed: u64, stream: u64) -> Result<Signal> {
    let mut rng = rng::stream(seed, stream);
    let d = Normal::new(mu, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(Signal::new((0..l).map(|_| d.sample(&mut rng)).collect()))
}

fn level_lengths(s: &Signal, k: usize) -> Result<Vec<Vec<f64>>> {
    Ok(transform(s, k)?.levels.iter().map(|l| l.iter().map(|iv| iv.length()).collect()).collect())
}

/// Per-level histograms; `None` where a level has too few intervals.
fn level_pdfs(lengths: &[Vec<f64>], nb: usize, len_max: &[f64]) -> Result<Vec<Option<Vec<f64>>>> {
    lengths
        .iter()
        .zip(len_max)
        .map(|(l, &m)| Ok(if l.len() < MIN_INTERVALS { None } else { Some(histogram(l, nb, m)?) }))
        .collect()
}

/// Pairwise SKL between `n` Gaussian replicates of length `l`, per level.
/// Each level is binned over `[0, longest interval seen at that level]`.
pub fn estimate_null(params: NullParams) -> Result<NullModel> {
    let NullParams { mu, sigma, n, l, k, nb, seed } = params.clone();
    if n < 2 || l < 3 || k < 2 || nb == 0 || !(sigma > 0.0) {
        return Err(Error::invalid("need N >= 2, l >= 3, K >= 2, nb >= 1 and sigma > 0"));
    }
    let lengths: Vec<Vec<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| level_lengths(&gaussian_signal(mu, sigma, l, seed, i as u64)?, k))
        .collect::<Result<_>>()?;
    let len_max: Vec<f64> = (0..k)
        .map(|lvl| lengths.iter().flat_map(|r| r[lvl].iter().copied()).fold(0.0, f64::max).max(1.0))
        .collect();
    let pdfs: Vec<Vec<Option<(Vec<f64>, Vec<f64>)>>> = lengths
        .par_iter()
        .map(|r| Ok(level_pdfs(r, nb, &len_max)?.into_iter().map(|p| p.map(|p| smoothed_log2(&p))).collect()))
        .collect::<Result<_>>()?;
    let samples = (0..k)
        .into_par_iter()
        .map(|lvl| {
            let mut v = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                if let Some(p) = &pdfs[i][lvl] {
                    for q in pdfs[i + 1..].iter().filter_map(|r| r[lvl].as_ref()) {
                        v.push(skl_prepared(p, q).max(0.0));
                    }
                }
            }
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    Ok(NullModel { params, len_max, samples })
}

impl NullModel {
    /// Fraction of null samples strictly below `x`; `None` for a level
    /// without samples.
    pub fn cdf(&self, level: usize, x: f64) -> Option<f64> {
        let s = self.samples.get(level.checked_sub(1)?)?;
        if s.is_empty() {
            return None;
        }
        Some(s.partition_point(|&v| v < x) as f64 / s.len() as f64)
    }

    /// Gaussian kernel density estimate with Silverman's bandwidth.
    pub fn kde(&self, level: usize, x: f64) -> Option<f64> {
        let s = self.samples.get(level.checked_sub(1)?)?;
        let h = silverman_bandwidth(s)?;
        let norm = 1.0 / (s.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        Some(norm * s.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>())
    }
}

/// `0.9 * min(sd, IQR / 1.34) * n^(-1/5)` for sorted samples.
pub fn silverman_bandwidth(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    if n < 2 {
        return None;
    }
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
    let q = |p: f64| sorted[((n - 1) as f64 * p).round() as usize];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * (n as f64).powf(-0.2);
    (h > 0.0).then_some(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
    Untestable,
}

/// `skl` and `cdf` are `None` on untestable levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub k: usize,
    pub skl: Option<f64>,
    pub cdf: Option<f64>,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomnessReport {
    pub per_level: Vec<LevelResult>,
    pub alpha: f64,
    pub null_params: NullParams,
    pub untestable_levels: Vec<usize>,
}

impl RandomnessReport {
    pub fn rejected(&self) -> Vec<usize> {
        self.per_level.iter().filter(|r| r.decision == Decision::Reject).map(|r| r.k).collect()
    }
}

/// Test `s` level by level against one fresh Gaussian replicate drawn from
/// `seed`. A level is rejected when its null CDF exceeds `alpha`.
pub fn run_test(s: &Signal, null: &NullModel, alpha: f64, seed: u64) -> Result<RandomnessReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha must lie in [0, 1]"));
    }
    let p = &null.params;
    let own = level_pdfs(&level_lengths(s, p.k)?, p.nb, &null.len_max)?;
    let replicate = gaussian_signal(p.mu, p.sigma, s.len(), seed, u64::MAX)?;
    let other = level_pdfs(&level_lengths(&replicate, p.k)?, p.nb, &null.len_max)?;
    let mut per_level = Vec::new();
    let mut untestable_levels = Vec::new();
    for lvl in 1..=p.k {
        let tested = match (&own[lvl - 1], &other[lvl - 1]) {
            (Some(a), Some(b)) => {
                let d = skl(a, b)?;
                null.cdf(lvl, d).map(|cdf| (d, cdf))
            }
            _ => None,
        };
        per_level.push(match tested {
            Some((d, cdf)) => LevelResult {
                k: lvl,
                skl: Some(d),
                cdf: Some(cdf),
                decision: if cdf > alpha { Decision::Reject } else { Decision::Accept },
            },
            None => {
                untestable_levels.push(lvl);
                LevelResult { k: lvl, skl: None, cdf: None, decision: Decision::Untestable }
            }
        });
    }
    Ok(RandomnessReport { per_level, alpha, null_params: p.clone(), untestable_levels })
}

/// Mean and standard deviation of a signal, the parameters of its null.
pub fn gaussian_fit(s: &Signal) -> (f64, f64) {
    let n = s.len() as f64;
    let m = s.samples.iter().sum::<f64>() / n;
    let v = s.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}
