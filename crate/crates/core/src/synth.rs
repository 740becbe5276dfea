//! Synthetic two-channel tiling-array signals with a known nucleosome mask.

use rand::Rng as _;
use rand::seq::index::sample;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Generator parameters. Lengths are in base pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// Number of nucleosomes.
    pub nn: usize,
    /// Nucleosome length.
    pub nl: usize,
    /// Mean linker length (Poisson).
    pub lambda: f64,
    /// Probe length.
    pub r: usize,
    /// Overlap between consecutive probes.
    pub o: usize,
    /// Replicates per channel.
    pub nr: usize,
    /// Fraction of delocalized nucleosomes.
    pub dp: f64,
    /// Delocalization range.
    pub dr: f64,
    /// Variance of the green cross-hybridization term.
    pub nsv: f64,
    /// Purification probability.
    pub pur: f64,
    /// Green/red amplification ratio.
    pub ra: f64,
    /// Ratio of clean-signal to noise standard deviation. Infinite means no
    /// noise, zero means noise only. JSON writes infinity as `null`.
    #[serde(with = "infinite_as_null")]
    pub snr: f64,
    pub seed: u64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            nn: 200,
            nl: 250,
            lambda: 200.0,
            r: 50,
            o: 20,
            nr: 100,
            dp: 0.0,
            dr: 0.0,
            nsv: 0.01,
            pur: 0.8,
            ra: 4.0,
            snr: f64::INFINITY,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.o >= self.r {
            return Err(Error::invalid("probe overlap must be smaller than probe length"));
        }
        if !(0.0..=1.0).contains(&self.dp) || !(0.0..=1.0).contains(&self.pur) {
            return Err(Error::invalid("dp and pur must lie in [0, 1]"));
        }
        if self.lambda < 0.0 || self.dr < 0.0 || self.nsv < 0.0 || self.ra < 0.0 || self.snr < 0.0 || self.snr.is_nan() {
            return Err(Error::invalid("lambda, dr, nsv, ra and snr must be non-negative"));
        }
        Ok(())
    }

    /// Probe count for a mask of `len` base pairs.
    pub fn probe_count(&self, len: usize) -> usize {
        if len < self.o {
            0
        } else {
            (len - self.o) / (self.r - self.o)
        }
    }

    /// 0-based half-open base-pair range of probe `i` (0-based).
    pub fn probe_range(&self, i: usize) -> (usize, usize) {
        let step = self.r - self.o;
        (step * i, step * i + self.r)
    }
}

/// Base-pair mask and nucleosome start positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub bits: Vec<u8>,
    pub starts: Vec<usize>,
}

pub fn generate_mask(cfg: &SynthConfig) -> Result<Mask> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, 0);
    let poisson = if cfg.lambda > 0.0 {
        Some(Poisson::new(cfg.lambda).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let gap = |rng: &mut rng::Rng| poisson.as_ref().map_or(0, |p| p.sample(rng) as usize);
    let mut bits = Vec::new();
    let mut starts = Vec::with_capacity(cfg.nn);
    bits.resize(gap(&mut rng), 0);
    for _ in 0..cfg.nn {
        starts.push(bits.len());
        bits.resize(bits.len() + cfg.nl, 1);
        let g = gap(&mut rng);
        bits.resize(bits.len() + g, 0);
    }
    Ok(Mask { bits, starts })
}

/// `M'[i] = 1` iff probe `i` covers at least one nucleosomal base pair.
pub fn probe_mask(cfg: &SynthConfig, bits: &[u8]) -> Vec<u8> {
    let mut prefix = vec![0usize; bits.len() + 1];
    for (i, &b) in bits.iter().enumerate() {
        prefix[i + 1] = prefix[i] + b as usize;
    }
    (0..cfg.probe_count(bits.len()))
        .map(|i| {
            let (a, b) = cfg.probe_range(i);
            u8::from(prefix[b] > prefix[a])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMetadata {
    pub seed: u64,
    pub probes: usize,
    pub base_pairs: usize,
    pub nucleosomes: usize,
    pub noise_sd: f64,
    pub config: SynthConfig,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub mask: Mask,
    pub probe_mask: Vec<u8>,
    pub clean: Vec<f64>,
    pub signal: Vec<f64>,
    pub metadata: SynthMetadata,
}

// Lower bound on the ratio before the logarithm, in case the
// cross-hybridization draw pushes it below zero.
const RATIO_FLOOR: f64 = 1e-2;

fn add_run(diff: &mut [i64], start: i64, len: usize) {
    let n = diff.len() as i64 - 1;
    let a = start.clamp(0, n);
    let b = (start + len as i64).clamp(0, n);
    if a < b {
        diff[a as usize] += 1;
        diff[b as usize] -= 1;
    }
}

fn window_sums(diff: &[i64], cfg: &SynthConfig, probes: usize) -> Vec<f64> {
    let mut cum = vec![0i64; diff.len()];
    let mut cover = 0i64;
    for i in 0..diff.len() - 1 {
        cover += diff[i];
        cum[i + 1] = cum[i] + cover;
    }
    (0..probes)
        .map(|i| {
            let (a, b) = cfg.probe_range(i);
            (cum[b] - cum[a]) as f64
        })
        .collect()
}

/// Generate mask, clean log-ratio and noisy signal.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    let mask = generate_mask(cfg)?;
    let len = mask.bits.len();
    let probes = cfg.probe_count(len);
    let pm = probe_mask(cfg, &mask.bits);

    let mut rng_deloc = rng::stream(cfg.seed, 1);
    let ndeloc = ((cfg.dp * cfg.nn as f64).round() as usize).min(cfg.nn);
    let mut delocalized = vec![false; cfg.nn];
    for i in sample(&mut rng_deloc, cfg.nn, ndeloc) {
        delocalized[i] = true;
    }

    let mut green = vec![0i64; len + 1];
    let mut rng_g = rng::stream(cfg.seed, 2);
    for _ in 0..cfg.nr {
        for (j, &s) in mask.starts.iter().enumerate() {
            let shift = if delocalized[j] && cfg.dr > 0.0 {
                rng_g.random_range(-cfg.dr / 2.0..=cfg.dr / 2.0).round() as i64
            } else {
                0
            };
            if rng_g.random::<f64>() < cfg.pur {
                add_run(&mut green, s as i64 + shift, cfg.nl);
            }
        }
    }

    let mut red = vec![0i64; len + 1];
    let mut rng_r = rng::stream(cfg.seed, 3);
    for _ in 0..cfg.nr {
        let b = rng_r.random_range(0..=cfg.r);
        let mut pos = 0usize;
        let mut size = b;
        while pos < len {
            if size > 0 && rng_r.random::<f64>() < cfg.pur {
                add_run(&mut red, pos as i64, size);
            }
            pos += size;
            size = cfg.r;
        }
    }

    let g = window_sums(&green, cfg, probes);
    let r = window_sums(&red, cfg, probes);
    let mut rng_e = rng::stream(cfg.seed, 4);
    // cross-hybridization is drawn per base pair and averaged over the window
    let eps = Normal::new(0.1, (cfg.nsv / cfg.r as f64).sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let clean: Vec<f64> = g
        .iter()
        .zip(&r)
        .map(|(&g, &r)| {
            let ratio = (cfg.ra * g + 1.0) / (r + 1.0) + eps.sample(&mut rng_e);
            ratio.max(RATIO_FLOOR).log2()
        })
        .collect();

    let sd_clean = std_dev(&clean);
    let noise_sd = if cfg.snr.is_infinite() {
        0.0
    } else if cfg.snr == 0.0 {
        sd_clean
    } else {
        sd_clean / cfg.snr
    };
    let mut rng_n = rng::stream(cfg.seed, 5);
    let signal: Vec<f64> = if noise_sd == 0.0 {
        clean.clone()
    } else {
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
        let base = if cfg.snr == 0.0 { 0.0 } else { 1.0 };
        clean.iter().map(|&v| base * v + noise.sample(&mut rng_n)).collect()
    };
    let metadata = SynthMetadata {
        seed: cfg.seed,
        probes,
        base_pairs: len,
        nucleosomes: cfg.nn,
        noise_sd,
        config: cfg.clone(),
    };
    Ok(SynthOutput { mask, probe_mask: pm, clean, signal, metadata })
}

pub(crate) fn std_dev(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Maximal runs of equal labels as `(label, start, end_exclusive)`.
pub fn runs(labels: &[u8]) -> Vec<(u8, usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let mut j = i + 1;
        while j < labels.len() && labels[j] == labels[i] {
            j += 1;
        }
        out.push((labels[i], i, j));
        i = j;
    }
    out
}

/// Recognition accuracy of predicted probe labels (1 = nucleosome,
/// 0 = linker) against the true probe mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaReport {
    pub ra: f64,
    /// Rows: true nucleosome, true linker. Columns: recognized as nucleosome,
    /// recognized as linker. Each row sums to 1 when the class occurs.
    pub confusion: [[f64; 2]; 2],
    pub regions: [usize; 2],
    pub recognized: [usize; 2],
}

/// A true region is recognized when a predicted region of the same class
/// overlaps it in at least `0.7 * len` contiguous probes.
pub fn recognition_accuracy(pred: &[u8], truth: &[u8]) -> Result<RaReport> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: truth.len() });
    }
    let pruns = runs(pred);
    let mut regions = [0usize; 2];
    let mut recognized = [0usize; 2];
    for (label, a, b) in runs(truth) {
        let row = if label == 1 { 0 } else { 1 };
        regions[row] += 1;
        let need = 0.7 * (b - a) as f64;
        let first = pruns.partition_point(|r| r.2 <= a);
        let hit = pruns[first..]
            .iter()
            .take_while(|r| r.1 < b)
            .any(|&(l, pa, pb)| l == label && (pb.min(b) - pa.max(a)) as f64 >= need);
        if hit {
            recognized[row] += 1;
        }
    }
    let total = regions[0] + regions[1];
    let ra = if total == 0 { 1.0 } else { (recognized[0] + recognized[1]) as f64 / total as f64 };
    let mut confusion = [[0.0; 2]; 2];
    for row in 0..2 {
        if regions[row] > 0 {
            let hit = recognized[row] as f64 / regions[row] as f64;
            confusion[row][row] = hit;
            confusion[row][1 - row] = 1.0 - hit;
        }
    }
    Ok(RaReport { ra, confusion, regions, recognized })
}
