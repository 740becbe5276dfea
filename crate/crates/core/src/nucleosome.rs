//! Nucleosome detection on top of interval patterns.
//!
//! The signal is smoothed, a peak template is learned from its clean local
//! maxima, and every selected pattern is scored against that template. Scores
//! become labels (linker, well-positioned or delocalized), labels become
//! expected regions, and overlapping regions are fused.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mla::{horizontal_sampling, Interval, IntervalRepresentation};
use crate::ocknn::{ocknn_calibrate, ocknn_classify};
use crate::pattern::{aggregate_patterns, select_patterns, Pattern};
use crate::signal::{normalize_unit, smooth3, Signal};
use crate::synth::recognition_accuracy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NucleosomeModel {
    pub os: usize,
    pub alpha: f64,
    /// Mean peak window, `2 * os + 1` samples.
    pub template: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub windows: Vec<Vec<f64>>,
}

impl NucleosomeModel {
    /// `(max(0, mean - 3 std), mean + 3 std)`
    pub fn default_thresholds(&self) -> (f64, f64) {
        ((self.mean - 3.0 * self.std).max(0.0), self.mean + 3.0 * self.std)
    }
}

/// Windows of radius `os` that rise strictly into their centre and fall
/// strictly after it.
pub fn training_windows(x: &[f64], os: usize) -> Vec<Vec<f64>> {
    if os == 0 || x.len() < 2 * os + 1 {
        return Vec::new();
    }
    (os..x.len() - os)
        .filter_map(|c| {
            let w = &x[c - os..=c + os];
            let rise = (1..=os).all(|j| w[j] > w[j - 1]);
            let fall = (os + 1..=2 * os).all(|j| w[j] < w[j - 1]);
            (rise && fall).then(|| w.to_vec())
        })
        .collect()
}

fn trapezoid(u: &[f64]) -> f64 {
    if u.len() < 2 {
        return u.iter().sum();
    }
    u.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum()
}

/// Area difference weighted by `1 - alpha` plus summed pointwise difference
/// weighted by `alpha`.
pub fn vector_dissimilarity(u: &[f64], v: &[f64], alpha: f64) -> f64 {
    let area = (trapezoid(u) - trapezoid(v)).abs();
    let shape: f64 = u.iter().zip(v).map(|(a, b)| (a - b).abs()).sum();
    (1.0 - alpha) * area + alpha * shape
}

/// Learn the peak template from the training windows of each fragment.
pub fn build_model(fragments: &[Signal], os: usize, alpha: f64) -> Result<NucleosomeModel> {
    let width = 2 * os + 1;
    let mut template = vec![0.0; width];
    let mut used = 0usize;
    let mut windows = Vec::new();
    for f in fragments {
        let ws = training_windows(&f.samples, os);
        if ws.is_empty() {
            continue;
        }
        for (t, w) in template.iter_mut().zip(mean_window(&ws, width)) {
            *t += w;
        }
        used += 1;
        windows.extend(ws);
    }
    if used == 0 {
        return Err(Error::NoTrainingPatterns);
    }
    template.iter_mut().for_each(|t| *t /= used as f64);
    let d: Vec<f64> = windows.iter().map(|w| vector_dissimilarity(w, &template, alpha)).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let std = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / d.len() as f64).sqrt();
    Ok(NucleosomeModel { os, alpha, template, mean, std, windows })
}

fn mean_window(ws: &[Vec<f64>], width: usize) -> Vec<f64> {
    let mut m = vec![0.0; width];
    for w in ws {
        for (a, b) in m.iter_mut().zip(w) {
            *a += b;
        }
    }
    m.iter_mut().for_each(|a| *a /= ws.len() as f64);
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase1 {
    L,
    EW,
    ED,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    L,
    W,
    D,
    F,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::L => "L",
            RegionLabel::W => "W",
            RegionLabel::D => "D",
            RegionLabel::F => "F",
        }
    }
}

/// Score at most `phi1` is `L`, at most `phi2` is `EW`, otherwise `ED`.
pub fn classify_phase1(delta: f64, phi1: f64, phi2: f64) -> Phase1 {
    if delta <= phi1 {
        Phase1::L
    } else if delta <= phi2 {
        Phase1::EW
    } else {
        Phase1::ED
    }
}

/// Region where the nucleosome of a labelled pattern is expected.
pub fn expected_region(p: &Pattern, label: Phase1) -> Result<Interval> {
    if p.is_empty() {
        return Err(Error::invalid("empty pattern"));
    }
    let l = (p.len() - 1).max(1);
    match label {
        Phase1::L => Err(Error::invalid("linker patterns have no expected region")),
        Phase1::EW => {
            let c = p.intervals[..l].iter().map(Interval::midpoint).sum::<f64>() / l as f64;
            Ok(Interval { start: c - 3.0, end: c + 3.0 })
        }
        Phase1::ED => {
            let h = (l / 2).max(1);
            let b = p.intervals[..h].iter().map(|iv| iv.start).sum::<f64>() / h as f64;
            let e = p.intervals[..h].iter().map(|iv| iv.end).sum::<f64>() / h as f64;
            Ok(Interval { start: b, end: e })
        }
    }
}

/// Fuse overlapping regions; isolated `EW` become `W` and isolated `ED`
/// become `D`. `None` regions are linkers.
pub fn classify_phase2(labels: &[Phase1], regions: &[Option<Interval>]) -> Vec<RegionLabel> {
    let mut order: Vec<usize> = (0..regions.len()).filter(|&i| regions[i].is_some()).collect();
    order.sort_by(|&a, &b| regions[a].unwrap().start.total_cmp(&regions[b].unwrap().start));
    let mut fused = vec![false; regions.len()];
    // sweep by start; a region overlaps an earlier one iff it starts before the running max end
    let mut reach: Option<(f64, usize)> = None;
    for &i in &order {
        let r = regions[i].unwrap();
        if let Some((end, j)) = reach {
            if r.start <= end {
                fused[i] = true;
                fused[j] = true;
            }
        }
        if reach.is_none_or(|(end, _)| r.end > end) {
            reach = Some((r.end, i));
        }
    }
    labels
        .iter()
        .zip(regions)
        .zip(&fused)
        .map(|((&l, r), &f)| match (l, r) {
            (_, None) | (Phase1::L, _) => RegionLabel::L,
            _ if f => RegionLabel::F,
            (Phase1::EW, _) => RegionLabel::W,
            (Phase1::ED, _) => RegionLabel::D,
        })
        .collect()
}

/// Probe span of a region, endpoints rounded to the nearest probe.
pub fn probe_span(iv: &Interval) -> (i64, i64) {
    (iv.start.round() as i64, iv.end.round() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub start_probe: i64,
    pub end_probe: i64,
    pub label: RegionLabel,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Rule,
    Ocknn,
}

impl std::str::FromStr for Classifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(Classifier::Rule),
            "ocknn" => Ok(Classifier::Ocknn),
            _ => Err(Error::invalid(format!("unknown classifier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub m: usize,
    pub alpha: f64,
    pub os: usize,
    pub classifier: Classifier,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig { k: 20, m: 5, alpha: 0.5, os: 4, classifier: Classifier::Rule }
    }
}

/// Everything computed before patterns are filtered by size.
#[derive(Debug, Clone)]
pub struct Discovery {
    pub smoothed: Signal,
    pub rep: IntervalRepresentation,
    pub model: NucleosomeModel,
    pub patterns: Vec<Pattern>,
}

pub fn discover(signal: &Signal, cfg: &PipelineConfig) -> Result<Discovery> {
    let smoothed = smooth3(signal);
    let model = build_model(std::slice::from_ref(&smoothed), cfg.os, cfg.alpha)?;
    let rep = horizontal_sampling(&normalize_unit(&smoothed), cfg.k)?;
    let patterns = aggregate_patterns(&rep);
    Ok(Discovery { smoothed, rep, model, patterns })
}

/// Pattern resampled over its widest interval to the template width.
pub fn representative(p: &Pattern, smoothed: &Signal, os: usize) -> Vec<f64> {
    let w = p.widest();
    smoothed.resample(w.start, w.end, 2 * os + 1)
}

/// Per-pattern phase-1 decision, reusable across pattern-size cut-offs.
#[derive(Debug, Clone)]
pub struct Scorer {
    classifier: Classifier,
    phi: (f64, f64),
    knn: Option<(f64, usize)>,
}

impl Scorer {
    pub fn new(d: &Discovery, classifier: Classifier) -> Result<Self> {
        let knn = match classifier {
            Classifier::Rule => None,
            Classifier::Ocknn => {
                let w = &d.model.windows;
                let dm: Vec<Vec<f64>> = w
                    .iter()
                    .map(|a| w.iter().map(|b| vector_dissimilarity(a, b, d.model.alpha)).collect())
                    .collect();
                if w.len() < 2 {
                    return Err(Error::NoTrainingPatterns);
                }
                let c = ocknn_calibrate(&dm, None, None)?;
                Some((c.phi, c.k))
            }
        };
        Ok(Scorer { classifier, phi: d.model.default_thresholds(), knn })
    }

    fn label(&self, d: &Discovery, rep_vec: &[f64], score: f64) -> Phase1 {
        match (self.classifier, self.knn) {
            (Classifier::Ocknn, Some((phi, k))) => {
                let ds: Vec<f64> =
                    d.model.windows.iter().map(|w| vector_dissimilarity(rep_vec, w, d.model.alpha)).collect();
                if ocknn_classify(&ds, phi, k) == 1 {
                    Phase1::EW
                } else {
                    Phase1::L
                }
            }
            _ => classify_phase1(score, self.phi.0, self.phi.1),
        }
    }
}

/// Label the patterns with more than `m` intervals and return their regions.
pub fn regions_for(d: &Discovery, scorer: &Scorer, m: usize) -> Result<Vec<Region>> {
    let selected = select_patterns(&d.patterns, m);
    let os = d.model.os;
    let mut labels = Vec::with_capacity(selected.len());
    let mut scores = Vec::with_capacity(selected.len());
    let mut expected = Vec::with_capacity(selected.len());
    for p in &selected {
        let v = representative(p, &d.smoothed, os);
        let score = vector_dissimilarity(&v, &d.model.template, d.model.alpha);
        let l = scorer.label(d, &v, score);
        expected.push(if l == Phase1::L { None } else { Some(expected_region(p, l)?) });
        labels.push(l);
        scores.push(score);
    }
    let finals = classify_phase2(&labels, &expected);
    let mut out: Vec<Region> = selected
        .iter()
        .zip(&expected)
        .zip(finals.iter().zip(&scores))
        .map(|((p, e), (&label, &score))| {
            let (start_probe, end_probe) = probe_span(&e.unwrap_or(p.widest()));
            Region { start_probe, end_probe, label, score }
        })
        .collect();
    out.sort_by(|a, b| a.start_probe.cmp(&b.start_probe).then(a.end_probe.cmp(&b.end_probe)));
    Ok(out)
}

pub fn classify(signal: &Signal, cfg: &PipelineConfig) -> Result<Vec<Region>> {
    let d = discover(signal, cfg)?;
    let scorer = Scorer::new(&d, cfg.classifier)?;
    regions_for(&d, &scorer, cfg.m)
}

/// Probe labels (1 = nucleosome) for a signal of `len` samples starting at
/// coordinate `start`.
pub fn probe_labels(regions: &[Region], len: usize, start: i64) -> Vec<u8> {
    let mut labels = vec![0u8; len];
    for r in regions.iter().filter(|r| r.label != RegionLabel::L) {
        let a = (r.start_probe - start).max(0);
        let b = (r.end_probe - start).min(len as i64 - 1);
        for i in a..=b {
            labels[i as usize] = 1;
        }
    }
    labels
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCalibrationRow {
    pub run: usize,
    pub k: usize,
    pub best_m: usize,
    pub best_ra: f64,
    pub ra_by_m: Vec<f64>,
}

/// For each labelled signal and each `k`, sweep `m = 0..=k` and report the
/// middle of the set of `m` values reaching the best recognition accuracy.
pub fn calibrate_m(
    runs: &[(Signal, Vec<u8>)],
    ks: &[usize],
    alpha: f64,
    os: usize,
) -> Result<Vec<MCalibrationRow>> {
    let mut rows = Vec::new();
    for (run, (signal, truth)) in runs.iter().enumerate() {
        for &k in ks {
            let cfg = PipelineConfig { k, m: 0, alpha, os, classifier: Classifier::Rule };
            let d = discover(signal, &cfg)?;
            let scorer = Scorer::new(&d, Classifier::Rule)?;
            let mut ra_by_m = Vec::with_capacity(k + 1);
            for m in 0..=k {
                let regions = regions_for(&d, &scorer, m)?;
                let pred = probe_labels(&regions, signal.len(), signal.start);
                ra_by_m.push(recognition_accuracy(&pred, truth)?.ra);
            }
            let best_ra = ra_by_m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let best: Vec<usize> = (0..=k).filter(|&m| ra_by_m[m] == best_ra).collect();
            rows.push(MCalibrationRow { run, k, best_m: best[best.len() / 2], best_ra, ra_by_m });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(center: f64, width: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (-((i as f64 - center) / width).powi(2)).exp()).collect()
    }

    #[test]
    fn windows_need_strict_monotone_flanks() {
        let x = [0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0];
        assert_eq!(training_windows(&x, 3).len(), 1);
        assert_eq!(training_windows(&x, 2).len(), 1);
        let flat = [0.0, 1.0, 1.0, 3.0, 2.0, 1.0, 0.0];
        assert!(training_windows(&flat, 3).is_empty());
    }

    #[test]
    fn model_from_identical_peaks() {
        let s = Signal::new(bump(10.0, 3.0, 21));
        let m = build_model(&[s.clone(), s], 4, 0.5).unwrap();
        assert_eq!(m.windows.len(), 2);
        assert!(m.std.abs() < 1e-12 && m.mean.abs() < 1e-12);
        assert_eq!(m.template.len(), 9);
        assert!(matches!(build_model(&[Signal::new(vec![1.0; 20])], 4, 0.5), Err(Error::NoTrainingPatterns)));
    }

    #[test]
    fn phase1_thresholds() {
        assert_eq!(classify_phase1(0.5, 1.0, 2.0), Phase1::L);
        assert_eq!(classify_phase1(1.0, 1.0, 2.0), Phase1::L);
        assert_eq!(classify_phase1(1.5, 1.0, 2.0), Phase1::EW);
        assert_eq!(classify_phase1(2.5, 1.0, 2.0), Phase1::ED);
    }

    #[test]
    fn expected_regions() {
        let iv = |a: f64, b: f64| Interval { start: a, end: b };
        let p = Pattern { first_level: 2, intervals: vec![iv(2.0, 8.0); 4] };
        assert_eq!(expected_region(&p, Phase1::ED).unwrap(), iv(2.0, 8.0));
        assert_eq!(expected_region(&p, Phase1::EW).unwrap(), iv(2.0, 8.0));
        assert!(expected_region(&p, Phase1::L).is_err());
        let single = Pattern { first_level: 1, intervals: vec![iv(10.0, 12.0)] };
        assert_eq!(expected_region(&single, Phase1::EW).unwrap(), iv(8.0, 14.0));
    }

    #[test]
    fn phase2_fuses_overlaps() {
        let iv = |a: f64, b: f64| Some(Interval { start: a, end: b });
        let labels = [Phase1::EW, Phase1::ED, Phase1::EW, Phase1::L];
        let regions = [iv(0.0, 6.0), iv(5.0, 9.0), iv(20.0, 26.0), None];
        let out = classify_phase2(&labels, &regions);
        assert_eq!(out, vec![RegionLabel::F, RegionLabel::F, RegionLabel::W, RegionLabel::L]);
        let out = classify_phase2(&[Phase1::ED], &[iv(0.0, 3.0)]);
        assert_eq!(out, vec![RegionLabel::D]);
    }

    #[test]
    fn probe_span_rounds_endpoints() {
        assert_eq!(probe_span(&Interval { start: 7.0, end: 13.0 }), (7, 13));
        assert_eq!(probe_span(&Interval { start: 7.4, end: 13.4 }), (7, 13));
        assert_eq!(probe_span(&Interval { start: 7.6, end: 13.6 }), (8, 14));
    }
}
