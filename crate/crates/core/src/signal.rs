//! Sampled signals and the primitives shared by every other module.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of samples at consecutive integer coordinates
/// `start, start + 1, ..., start + len - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub start: i64,
}

impl Signal {
    /// Signal with 1-based coordinates.
    pub fn new(samples: Vec<f64>) -> Self {
        Signal { samples, start: 1 }
    }

    pub fn with_start(samples: Vec<f64>, start: i64) -> Self {
        Signal { samples, start }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Coordinate of the last sample.
    pub fn end(&self) -> i64 {
        self.start + self.samples.len() as i64 - 1
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at coordinate `x`, linearly interpolated between samples.
    /// Coordinates outside the domain clamp to the boundary samples.
    pub fn interpolate(&self, x: f64) -> f64 {
        let n = self.samples.len();
        let t = x - self.start as f64;
        if t <= 0.0 {
            return self.samples[0];
        }
        if t >= (n - 1) as f64 {
            return self.samples[n - 1];
        }
        let i = t.floor() as usize;
        let frac = t - i as f64;
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    /// Values at `count` equally spaced coordinates spanning `[a, b]`.
    pub fn resample(&self, a: f64, b: f64, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![self.interpolate(0.5 * (a + b))],
            _ => (0..count)
                .map(|j| self.interpolate(a + (b - a) * j as f64 / (count - 1) as f64))
                .collect(),
        }
    }
}

/// Affine map of the samples onto `[0, 1]`. A constant signal maps to zeros.
pub fn normalize_unit(s: &Signal) -> Signal {
    let (lo, hi) = (s.min(), s.max());
    let span = hi - lo;
    let samples = if s.is_empty() || span <= 0.0 {
        vec![0.0; s.len()]
    } else {
        s.samples.iter().map(|&v| (v - lo) / span).collect()
    };
    Signal::with_start(samples, s.start)
}

/// Make the first and last samples equal to the global minimum by padding
/// one sample on either side where needed. A prepended sample sits at
/// coordinate `start - 1`.
pub fn disambiguate(s: &Signal) -> Signal {
    if s.is_empty() {
        return s.clone();
    }
    let m = s.min();
    let mut samples = Vec::with_capacity(s.len() + 2);
    let mut start = s.start;
    if s.samples[0] != m {
        samples.push(m);
        start -= 1;
    }
    samples.extend_from_slice(&s.samples);
    if *s.samples.last().unwrap() != m {
        samples.push(m);
    }
    Signal::with_start(samples, start)
}

/// Three-point smoothing with weights 1/4, 1/2, 1/4. At the boundaries the
/// truncated window is renormalized.
pub fn smooth3(s: &Signal) -> Signal {
    let x = &s.samples;
    let n = x.len();
    if n < 2 {
        return s.clone();
    }
    let mut out = Vec::with_capacity(n);
    out.push((2.0 * x[0] + x[1]) / 3.0);
    for i in 1..n - 1 {
        out.push(0.25 * x[i - 1] + 0.5 * x[i] + 0.25 * x[i + 1]);
    }
    out.push((x[n - 2] + 2.0 * x[n - 1]) / 3.0);
    Signal::with_start(out, s.start)
}

/// `passes` applications of [`smooth3`].
pub fn smooth3_repeat(s: &Signal, passes: usize) -> Signal {
    let mut out = s.clone();
    for _ in 0..passes {
        out = smooth3(&out);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    Pearson,
    Spearman,
    Kendall,
}

impl std::str::FromStr for CorrelationMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(Self::Pearson),
            "spearman" => Ok(Self::Spearman),
            "kendall" => Ok(Self::Kendall),
            _ => Err(Error::invalid(format!("unknown correlation method {s:?}"))),
        }
    }
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

/// Correlation coefficient in `[-1, 1]`.
///
/// If either input is constant the result is 1 when both are constant and
/// equal, and 0 otherwise.
pub fn correlation(x: &[f64], y: &[f64], method: CorrelationMethod) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(Error::invalid("correlation of empty sequences"));
    }
    let (cx, cy) = (is_constant(x), is_constant(y));
    if cx || cy {
        return Ok(if cx && cy && x[0] == y[0] { 1.0 } else { 0.0 });
    }
    let r = match method {
        CorrelationMethod::Pearson => pearson(x, y),
        CorrelationMethod::Spearman => pearson(&midranks(x), &midranks(y)),
        CorrelationMethod::Kendall => kendall_tau_b(x, y),
    };
    Ok(r.clamp(-1.0, 1.0))
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Ranks starting at 1, ties receiving the mean of the ranks they span.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

// Without ties this is (nc - nd) / (n(n-1)/2).
fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let (mut nc, mut nd, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]).partial_cmp(&0.0).unwrap() as i64;
            let b = (y[i] - y[j]).partial_cmp(&0.0).unwrap() as i64;
            match (a, b) {
                (0, 0) => {}
                (0, _) => tx += 1,
                (_, 0) => ty += 1,
                _ if a == b => nc += 1,
                _ => nd += 1,
            }
        }
    }
    let denom = (((nc + nd + tx) as f64) * ((nc + nd + ty) as f64)).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        (nc - nd) as f64 / denom
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Threshold count from the sample differences quantized at precision `eps`:
/// the sum of the rounded step sizes divided by their greatest common divisor,
/// clamped to at least 2.
///
/// For monotone signals on an `eps` grid this counts steps, so the minimum
/// equally spaced threshold count that reconstructs exactly is one more; for
/// non-monotone signals it is an upper bound on that count minus one.
pub fn min_lossless_thresholds(s: &Signal, eps: f64) -> Result<usize> {
    if !(eps > 0.0) {
        return Err(Error::invalid("precision must be positive"));
    }
    let terms: Vec<u64> = s
        .samples
        .windows(2)
        .map(|w| ((w[1] - w[0]).abs() / eps).round() as u64)
        .filter(|&t| t > 0)
        .collect();
    if terms.is_empty() {
        return Ok(2);
    }
    let g = terms.iter().copied().fold(0, gcd);
    let k = terms.iter().sum::<u64>() / g;
    Ok((k as usize).max(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CorrelationMethod::*;

    #[test]
    fn normalize_maps_to_unit_interval() {
        let s = normalize_unit(&Signal::new(vec![2.0, 4.0, 3.0]));
        assert_eq!(s.samples, vec![0.0, 1.0, 0.5]);
        assert_eq!(normalize_unit(&Signal::new(vec![5.0; 3])).samples, vec![0.0; 3]);
    }

    #[test]
    fn disambiguate_pads_both_ends() {
        let d = disambiguate(&Signal::new(vec![1.0, 0.0, 2.0]));
        assert_eq!(d.samples, vec![0.0, 1.0, 0.0, 2.0, 0.0]);
        assert_eq!(d.start, 0);
        let d = disambiguate(&Signal::new(vec![0.0, 1.0, 0.0]));
        assert_eq!(d.samples, vec![0.0, 1.0, 0.0]);
        assert_eq!(d.start, 1);
        let d = disambiguate(&Signal::new(vec![3.0; 4]));
        assert_eq!(d.samples, vec![3.0; 4]);
    }

    #[test]
    fn smooth3_weights() {
        let s = smooth3(&Signal::new(vec![0.0, 4.0, 0.0, 0.0]));
        assert_eq!(s.samples, vec![4.0 / 3.0, 2.0, 1.0, 0.0]);
        let c = smooth3(&Signal::new(vec![7.0; 5]));
        assert!(c.samples.iter().all(|&v| (v - 7.0).abs() < 1e-15));
        assert_eq!(smooth3(&Signal::new(vec![3.0])).samples, vec![3.0]);
    }

    #[test]
    fn correlation_examples() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 2.0, 1.0];
        for m in [Pearson, Spearman, Kendall] {
            assert!((correlation(&x, &y, m).unwrap() + 1.0).abs() < 1e-12);
            assert!((correlation(&x, &x, m).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(correlation(&[1.0, 1.0], &[1.0, 1.0], Pearson).unwrap(), 1.0);
        assert_eq!(correlation(&[1.0, 1.0], &[2.0, 2.0], Pearson).unwrap(), 0.0);
        assert_eq!(correlation(&[1.0, 1.0], &[1.0, 2.0], Kendall).unwrap(), 0.0);
        assert!(matches!(
            correlation(&[1.0], &[1.0, 2.0], Pearson),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn kendall_with_ties_is_one_on_identity() {
        let x = [1.0, 1.0, 2.0, 3.0];
        assert!((correlation(&x, &x, Kendall).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kendall_matches_pair_count_without_ties() {
        let x: [f64; 5] = [0.3, 1.2, -0.5, 2.2, 0.9];
        let y = [0.1, 0.4, 0.2, 3.0, -1.0];
        let mut s = 0i32;
        for i in 0..5 {
            for j in i + 1..5 {
                s += ((x[i] - x[j]) * (y[i] - y[j])).signum() as i32;
            }
        }
        let expected = s as f64 / 10.0;
        assert!((correlation(&x, &y, Kendall).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn spearman_uses_midranks() {
        assert_eq!(midranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn lossless_threshold_examples() {
        let s = Signal::new(vec![0.0, 0.5, 1.0]);
        assert_eq!(min_lossless_thresholds(&s, 0.25).unwrap(), 2);
        assert_eq!(min_lossless_thresholds(&Signal::new(vec![0.0, 1.0]), 0.5).unwrap(), 2);
        assert_eq!(min_lossless_thresholds(&Signal::new(vec![0.3; 4]), 0.1).unwrap(), 2);
        assert!(min_lossless_thresholds(&s, 0.0).is_err());
    }

    #[test]
    fn interpolate_and_resample() {
        let s = Signal::with_start(vec![0.0, 2.0, 4.0], 3);
        assert_eq!(s.interpolate(3.5), 1.0);
        assert_eq!(s.interpolate(1.0), 0.0);
        assert_eq!(s.interpolate(9.0), 4.0);
        assert_eq!(s.resample(3.0, 5.0, 5), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
