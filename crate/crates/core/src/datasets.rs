//! Seeded signal families used by the benchmarks and the acceptance suite.

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::signal::Signal;

fn noise(len: usize, sd: f64, rng: &mut rng::Rng) -> Vec<f64> {
    if sd <= 0.0 {
        return vec![0.0; len];
    }
    let d = Normal::new(0.0, sd).expect("positive sd");
    (0..len).map(|_| d.sample(rng)).collect()
}

/// I.i.d. Gaussian samples.
pub fn gaussian(len: usize, mu: f64, sigma: f64, seed: u64) -> Signal {
    let mut rng = rng::stream(seed, 0);
    Signal::new(noise(len, sigma, &mut rng).into_iter().map(|v| v + mu).collect())
}

/// Sum of a few low-frequency sinusoids and Gaussian bumps.
pub fn smooth_composite(len: usize, seed: u64) -> Signal {
    let mut rng = rng::stream(seed, 0);
    let mut x = vec![0.0; len];
    let n = len as f64;
    for _ in 0..rng.random_range(2..=4) {
        let (a, f, ph) = (rng.random_range(0.3..1.0), rng.random_range(0.5..5.0), rng.random_range(0.0..2.0 * PI));
        for (t, v) in x.iter_mut().enumerate() {
            *v += a * (2.0 * PI * f * t as f64 / n + ph).sin();
        }
    }
    for _ in 0..rng.random_range(1..=3) {
        let (a, c, w) = (rng.random_range(-1.0..1.5), rng.random_range(0.0..n), rng.random_range(0.02..0.1) * n);
        for (t, v) in x.iter_mut().enumerate() {
            *v += a * (-0.5 * ((t as f64 - c) / w).powi(2)).exp();
        }
    }
    Signal::new(x)
}

/// Samples drawn uniformly from `q` equally spaced levels in `[0, 1]`.
pub fn quantized(len: usize, q: usize, seed: u64) -> Signal {
    let mut rng = rng::stream(seed, 0);
    let top = (q.max(2) - 1) as f64;
    Signal::new((0..len).map(|_| rng.random_range(0..q.max(2)) as f64 / top).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Rect,
    Sawtooth,
}

impl Waveform {
    pub const ALL: [Waveform; 3] = [Waveform::Sine, Waveform::Rect, Waveform::Sawtooth];

    /// Unit-amplitude value at phase `u` (in cycles).
    pub fn value(self, u: f64) -> f64 {
        let f = u.rem_euclid(1.0);
        match self {
            Waveform::Sine => (2.0 * PI * f).sin(),
            Waveform::Rect => {
                if f < 0.5 {
                    1.0
                } else {
                    -1.0
                }
            }
            Waveform::Sawtooth => 2.0 * f - 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub signals: Vec<Signal>,
    pub labels: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformTask {
    pub n_per_class: usize,
    pub len: usize,
    pub cycles: f64,
    /// Phase offsets are drawn from `[0, phase_jitter)` cycles.
    pub phase_jitter: f64,
    pub noise_lo: f64,
    pub noise_hi: f64,
}

impl Default for WaveformTask {
    fn default() -> Self {
        WaveformTask { n_per_class: 50, len: 128, cycles: 3.0, phase_jitter: 0.0, noise_lo: 0.1, noise_hi: 1.0 }
    }
}

/// `n_per_class` signals of each waveform with additive Gaussian noise whose
/// standard deviation sweeps linearly from `noise_lo` to `noise_hi` times the
/// amplitude. Labels follow `Waveform::ALL`.
pub fn waveform_set(task: &WaveformTask, seed: u64) -> LabeledSet {
    let WaveformTask { n_per_class, len, cycles, phase_jitter, noise_lo, noise_hi } = *task;
    let mut signals = Vec::new();
    let mut labels = Vec::new();
    for (c, w) in Waveform::ALL.into_iter().enumerate() {
        let mut rng = rng::stream(seed, c as u64);
        for i in 0..n_per_class {
            let level = if n_per_class > 1 {
                noise_lo + (noise_hi - noise_lo) * i as f64 / (n_per_class - 1) as f64
            } else {
                noise_lo
            };
            let phase = if phase_jitter > 0.0 { rng.random_range(0.0..phase_jitter) } else { 0.0 };
            let eps = noise(len, level, &mut rng);
            let x = (0..len).map(|t| w.value(cycles * t as f64 / len as f64 + phase) + eps[t]).collect();
            signals.push(Signal::new(x));
            labels.push(c as i64);
        }
    }
    LabeledSet { signals, labels }
}

/// Ordered family of `n` signals: a bump whose width and skew drift with
/// the index, a smaller trailing bump, mild noise and a random recording
/// gain per item.
pub fn morphing_family(n: usize, len: usize, noise_sd: f64, gain_spread: f64, seed: u64) -> Vec<Signal> {
    let mut rng = rng::stream(seed, 0);
    let l = len as f64;
    (0..n)
        .map(|i| {
            let u = i as f64 / (n.max(2) - 1) as f64;
            let gain = 1.0 + gain_spread * rng.random_range(-1.0..1.0);
            let eps = noise(len, noise_sd, &mut rng);
            let (c1, w1) = (0.3 * l, (0.03 + 0.1 * u) * l);
            let (c2, w2, a2) = ((0.55 + 0.2 * u) * l, 0.04 * l, 0.8 - 0.6 * u);
            (0..len)
                .map(|t| {
                    let t = t as f64;
                    let left = if t < c1 { w1 * (1.0 - 0.5 * u) } else { w1 };
                    let b1 = (-0.5 * ((t - c1) / left).powi(2)).exp();
                    let b2 = a2 * (-0.5 * ((t - c2) / w2).powi(2)).exp();
                    gain * (b1 + b2) + eps[t as usize]
                })
                .collect()
        })
        .map(Signal::new)
        .collect()
}
