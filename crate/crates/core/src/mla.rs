//! Horizontal sampling into nested interval levels, and its inverse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{correlation, disambiguate, normalize_unit, CorrelationMethod, Signal};

/// Closed interval with fractional endpoints in sample coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.start <= x && x <= self.end
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

/// Level `k` (1-based) holds the closed components of `{f >= thresholds[k-1]}`
/// on the disambiguated signal, sorted by start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRepresentation {
    #[serde(rename = "K")]
    pub k: usize,
    pub thresholds: Vec<f64>,
    pub levels: Vec<Vec<Interval>>,
    /// Length of the disambiguated signal.
    pub source_length: usize,
}

impl IntervalRepresentation {
    /// The full-domain interval of level 1.
    pub fn domain(&self) -> Result<Interval> {
        self.levels
            .first()
            .and_then(|l| l.first())
            .copied()
            .ok_or(Error::EmptyRepresentation)
    }

    pub fn interval_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// All `(coordinate, threshold)` endpoint pairs, level by level.
    pub fn endpoints(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.levels.iter().zip(&self.thresholds).flat_map(|(level, &phi)| {
            level.iter().flat_map(move |iv| [(iv.start, phi), (iv.end, phi)])
        })
    }

    /// Highest level (1-based) with an interval containing `x`, or 0.
    pub fn depth_at(&self, x: f64) -> usize {
        let mut depth = 0;
        for (i, level) in self.levels.iter().enumerate() {
            let j = level.partition_point(|iv| iv.start <= x);
            if j > 0 && level[j - 1].contains(x) {
                depth = i + 1;
            } else {
                break;
            }
        }
        depth
    }

    /// For each interval at 0-based level `level + 1`, the index of its
    /// containing interval at `level`.
    pub fn parents(&self, level: usize) -> Vec<usize> {
        let parents = &self.levels[level];
        let children = &self.levels[level + 1];
        let mut out = Vec::with_capacity(children.len());
        let mut p = 0;
        for c in children {
            while p + 1 < parents.len() && parents[p].end < c.start {
                p += 1;
            }
            out.push(p);
        }
        out
    }
}

/// `K` equally spaced thresholds from 0 to 1 inclusive.
pub fn thresholds(k: usize) -> Vec<f64> {
    (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
}

/// Closed components of `{f >= phi}` for one threshold.
pub fn level_components(f: &Signal, phi: f64) -> Vec<Interval> {
    let x = &f.samples;
    let origin = f.start as f64;
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    for n in 0..x.len() {
        match (open, x[n] >= phi) {
            (None, true) => open = Some(if n == 0 { 0.0 } else { rise(x[n - 1], x[n], phi, n) }),
            (Some(start), false) => {
                out.push(Interval { start: origin + start, end: origin + fall(x[n - 1], x[n], phi, n) });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        out.push(Interval { start: origin + start, end: origin + (x.len() - 1) as f64 });
    }
    out
}

// crossing of `phi` on the segment from sample n-1 (below) to n (at or above)
fn rise(a: f64, b: f64, phi: f64, n: usize) -> f64 {
    (n - 1) as f64 + (phi - a) / (b - a)
}

// crossing of `phi` on the segment from sample n-1 (at or above) to n (below)
fn fall(a: f64, b: f64, phi: f64, n: usize) -> f64 {
    (n - 1) as f64 + (a - phi) / (a - b)
}

// All levels in one pass over the segments: each segment only touches the
// thresholds lying between its two samples.
fn all_components(f: &Signal, thresholds: &[f64]) -> Vec<Vec<Interval>> {
    let x = &f.samples;
    let k = thresholds.len();
    let origin = f.start as f64;
    let scale = (k - 1) as f64;
    let mut levels: Vec<Vec<Interval>> = vec![Vec::new(); k];
    let mut open = vec![f64::NAN; k];
    // thresholds at or below a value v: indices 0..count_le(v)
    let count_le = |v: f64| -> usize {
        let mut c = ((v * scale).floor().max(-1.0) as i64 + 1).clamp(0, k as i64) as usize;
        while c < k && thresholds[c] <= v {
            c += 1;
        }
        while c > 0 && thresholds[c - 1] > v {
            c -= 1;
        }
        c
    };
    let mut prev = count_le(x[0]);
    for o in open.iter_mut().take(prev) {
        *o = 0.0;
    }
    for n in 1..x.len() {
        let cur = count_le(x[n]);
        if cur > prev {
            for j in prev..cur {
                open[j] = rise(x[n - 1], x[n], thresholds[j], n);
            }
        } else {
            for j in cur..prev {
                let end = fall(x[n - 1], x[n], thresholds[j], n);
                levels[j].push(Interval { start: origin + open[j], end: origin + end });
            }
        }
        prev = cur;
    }
    let last = (x.len() - 1) as f64;
    for j in 0..prev {
        levels[j].push(Interval { start: origin + open[j], end: origin + last });
    }
    levels
}

/// Interval representation of a signal whose samples lie in `[0, 1]`.
pub fn horizontal_sampling(s: &Signal, k: usize) -> Result<IntervalRepresentation> {
    if k < 2 {
        return Err(Error::invalid("K must be at least 2"));
    }
    if s.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    if let Some(&v) = s.samples.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::NotNormalized(v));
    }
    let d = disambiguate(s);
    let thresholds = thresholds(k);
    let mut levels = all_components(&d, &thresholds);
    levels[0] = vec![Interval { start: d.start as f64, end: d.end() as f64 }];
    Ok(IntervalRepresentation { k, thresholds, levels, source_length: d.len() })
}

/// Normalize to `[0, 1]` and sample.
pub fn transform(s: &Signal, k: usize) -> Result<IntervalRepresentation> {
    horizontal_sampling(&normalize_unit(s), k)
}

/// Rebuild samples at the integer coordinates of the disambiguated domain.
///
/// Endpoints are interpolated linearly. Where the signal stays inside one
/// threshold band the band floor is used instead: between two endpoints of the
/// same threshold, and next to a lower endpoint that falls exactly on a
/// sample. With these rules a signal whose samples all sit on thresholds is
/// reproduced exactly.
pub fn reconstruct(rep: &IntervalRepresentation) -> Result<Signal> {
    let dom = rep.domain()?;
    let mut pts: Vec<(f64, f64)> = rep.endpoints().collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // keep the highest threshold at a repeated coordinate
    let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        match dedup.last_mut() {
            Some(last) if last.0 == p.0 => last.1 = p.1,
            _ => dedup.push(p),
        }
    }
    let (a, b) = (dom.start as i64, dom.end as i64);
    let mut out = Vec::with_capacity((b - a + 1) as usize);
    for p in a..=b {
        let x = p as f64;
        let j = dedup.partition_point(|q| q.0 < x);
        if j < dedup.len() && dedup[j].0 == x {
            out.push(dedup[j].1);
            continue;
        }
        let (l, r) = (dedup[j - 1], dedup[j]);
        let v = if l.1 == r.1 {
            let d = rep.depth_at(x);
            rep.thresholds[d.max(1) - 1]
        } else {
            let lower = if l.1 < r.1 { l } else { r };
            if lower.0.fract() == 0.0 {
                lower.1
            } else {
                l.1 + (r.1 - l.1) * (x - l.0) / (r.0 - l.0)
            }
        };
        out.push(v);
    }
    Ok(Signal::with_start(out, a))
}

/// Maximum interval count `I_max` and endpoint count `n_max` for a signal
/// of length `l` sampled with `k` thresholds.
pub fn interval_count_bound(l: usize, k: usize) -> Result<(usize, usize)> {
    if l < 3 || k < 2 {
        return Err(Error::invalid("bound needs L >= 3 and K >= 2"));
    }
    let half = l.div_ceil(2);
    Ok((half * (k - 1) + 1, 2 * half * (k - 1) + 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub k: usize,
    pub mean_rho: f64,
    pub mean_missing: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCalibration {
    pub rows: Vec<CalibrationRow>,
    pub suggested_k: usize,
}

/// Number of original samples of `s` that no endpoint of `rep` rounds to.
pub fn missing_samples(s: &Signal, rep: &IntervalRepresentation) -> usize {
    let mut hit = vec![false; s.len()];
    for (x, _) in rep.endpoints() {
        let n = x.round() as i64 - s.start;
        if (0..s.len() as i64).contains(&n) {
            hit[n as usize] = true;
        }
    }
    hit.iter().filter(|h| !**h).count()
}

/// Sweep `k = 2..=k_max` over the fragments and pick the `k` maximizing the
/// mean fidelity `(1 + rho^2) / 2` minus the mean fraction of samples left
/// without an endpoint. Ties go to the smallest `k`.
pub fn calibrate_k(fragments: &[Signal], k_max: usize) -> Result<KCalibration> {
    if k_max < 2 {
        return Err(Error::invalid("K_max must be at least 2"));
    }
    if fragments.is_empty() || fragments.iter().any(Signal::is_empty) {
        return Err(Error::invalid("calibration needs non-empty fragments"));
    }
    let normalized: Vec<Signal> = fragments.iter().map(normalize_unit).collect();
    let mean_len = normalized.iter().map(|s| s.len() as f64).sum::<f64>() / normalized.len() as f64;
    let mut rows = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        let (mut rho_sum, mut ms_sum) = (0.0, 0.0);
        for s in &normalized {
            let rep = horizontal_sampling(s, k)?;
            let rec = reconstruct(&rep)?;
            let off = (s.start - rec.start) as usize;
            let rho = correlation(&s.samples, &rec.samples[off..off + s.len()], CorrelationMethod::Pearson)?;
            rho_sum += (1.0 + rho * rho) / 2.0;
            ms_sum += missing_samples(s, &rep) as f64;
        }
        let t = normalized.len() as f64;
        let (mean_rho, mean_missing) = (rho_sum / t, ms_sum / t);
        rows.push(CalibrationRow { k, mean_rho, mean_missing, score: mean_rho - mean_missing / mean_len });
    }
    let mut best = &rows[0];
    for r in &rows[1..] {
        // scores within rounding noise count as ties
        if r.score > best.score + 1e-12 {
            best = r;
        }
    }
    let suggested_k = best.k;
    Ok(KCalibration { rows, suggested_k })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(start: f64, end: f64) -> Interval {
        Interval { start, end }
    }

    #[test]
    fn triangle() {
        let rep = horizontal_sampling(&Signal::new(vec![0.0, 1.0, 0.0]), 3).unwrap();
        assert_eq!(rep.thresholds, vec![0.0, 0.5, 1.0]);
        assert_eq!(rep.levels, vec![vec![iv(1.0, 3.0)], vec![iv(1.5, 2.5)], vec![iv(2.0, 2.0)]]);
        assert_eq!(reconstruct(&rep).unwrap().samples, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn flat_and_pulse() {
        let rep = horizontal_sampling(&Signal::new(vec![0.0; 4]), 2).unwrap();
        assert_eq!(rep.levels, vec![vec![iv(1.0, 4.0)], vec![]]);
        assert_eq!(reconstruct(&rep).unwrap().samples, vec![0.0; 4]);
        let rep = horizontal_sampling(&Signal::new(vec![0.0, 1.0, 1.0, 0.0]), 2).unwrap();
        assert_eq!(rep.levels, vec![vec![iv(1.0, 4.0)], vec![iv(2.0, 3.0)]]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(horizontal_sampling(&Signal::new(vec![0.0, 1.0]), 1).is_err());
        assert!(matches!(
            horizontal_sampling(&Signal::new(vec![0.0, 1.5]), 3),
            Err(Error::NotNormalized(_))
        ));
        let empty = IntervalRepresentation { k: 2, thresholds: vec![0.0, 1.0], levels: vec![], source_length: 0 };
        assert!(matches!(reconstruct(&empty), Err(Error::EmptyRepresentation)));
    }

    #[test]
    fn valley_and_plateau_flank_are_exact() {
        for s in [
            vec![0.0, 1.0, 0.5, 1.0, 0.0],
            vec![0.0, 0.5, 0.5, 1.0, 0.0],
            vec![0.0, 1.0, 0.5, 0.5, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 0.0],
        ] {
            let rep = horizontal_sampling(&Signal::new(s.clone()), 3).unwrap();
            assert_eq!(reconstruct(&rep).unwrap().samples, s);
        }
    }

    #[test]
    fn single_pass_matches_per_level_scan() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for trial in 0..200 {
            let len = 1 + trial % 40;
            let k = 2 + trial % 13;
            let q = (trial % 3 == 0).then_some(k);
            let samples: Vec<f64> = (0..len)
                .map(|_| match q {
                    Some(q) => (next() * q as f64).floor().min((q - 1) as f64) / (q - 1) as f64,
                    None => next(),
                })
                .collect();
            let s = Signal::new(samples);
            let rep = horizontal_sampling(&s, k).unwrap();
            let d = disambiguate(&s);
            for (lvl, &phi) in rep.thresholds.iter().enumerate().skip(1) {
                assert_eq!(rep.levels[lvl], level_components(&d, phi), "trial {trial} level {lvl}");
            }
        }
    }

    #[test]
    fn bound_examples() {
        assert_eq!(interval_count_bound(5, 3).unwrap().0, 7);
        assert_eq!(interval_count_bound(3, 2).unwrap(), (3, 6));
        assert_eq!(interval_count_bound(4, 2).unwrap().0, 3);
        assert!(interval_count_bound(2, 2).is_err());
        let zigzag = Signal::new(vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        assert_eq!(horizontal_sampling(&zigzag, 3).unwrap().interval_count(), 7);
    }

    #[test]
    fn depth_and_parents() {
        let rep = horizontal_sampling(&Signal::new(vec![0.0, 1.0, 0.5, 1.0, 0.0]), 3).unwrap();
        assert_eq!(rep.depth_at(3.0), 2);
        assert_eq!(rep.depth_at(2.0), 3);
        assert_eq!(rep.parents(1), vec![0, 0]);
    }

    #[test]
    fn ramp_calibration_picks_level_count() {
        for q in 3..7 {
            let ramp = Signal::new((0..q).map(|i| i as f64 / (q - 1) as f64).collect());
            let cal = calibrate_k(&[ramp], 12).unwrap();
            assert_eq!(cal.suggested_k, q);
            let row = &cal.rows[q - 2];
            assert!((row.mean_rho - 1.0).abs() < 1e-12);
            assert_eq!(row.mean_missing, 0.0);
        }
    }

    #[test]
    fn constant_calibration_picks_two() {
        let cal = calibrate_k(&[Signal::new(vec![3.0; 5])], 6).unwrap();
        assert_eq!(cal.suggested_k, 2);
        assert!(cal.rows.iter().all(|r| r.mean_rho == 1.0));
        assert!(calibrate_k(&[Signal::new(vec![1.0])], 1).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let s = Signal::new(vec![0.0, 0.123456789, 0.9, 1.0 / 3.0, 0.0]);
        let rep = horizontal_sampling(&s, 7).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        assert!(json.contains("\"K\":7"));
        let back: IntervalRepresentation = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
    }
}
