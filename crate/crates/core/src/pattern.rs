//! Patterns: maximal chains of nested intervals without branching.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mla::{Interval, IntervalRepresentation};

/// Intervals at consecutive levels, starting at `first_level` (1-based),
/// each containing the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub first_level: usize,
    pub intervals: Vec<Interval>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn last_level(&self) -> usize {
        self.first_level + self.intervals.len() - 1
    }

    /// The base interval, which is the widest one.
    pub fn widest(&self) -> Interval {
        self.intervals[0]
    }

    fn levels(&self, from: usize, to: usize) -> &[Interval] {
        &self.intervals[from - self.first_level..=to - self.first_level]
    }
}

/// Split a representation into patterns. A chain continues while the current
/// interval has exactly one child; each child of a branching interval starts
/// a new pattern. Every interval ends up in exactly one pattern.
pub fn aggregate_patterns(rep: &IntervalRepresentation) -> Vec<Pattern> {
    let nlev = rep.levels.len();
    // children of interval i at level l are levels[l + 1][first[l][i]..first[l][i] + count[l][i]]
    let mut first: Vec<Vec<usize>> = Vec::with_capacity(nlev);
    let mut count: Vec<Vec<usize>> = Vec::with_capacity(nlev);
    for l in 0..nlev {
        let n = rep.levels[l].len();
        let (mut f, mut c) = (vec![0usize; n], vec![0usize; n]);
        if l + 1 < nlev {
            for (ci, p) in rep.parents(l).into_iter().enumerate() {
                if c[p] == 0 {
                    f[p] = ci;
                }
                c[p] += 1;
            }
        }
        first.push(f);
        count.push(c);
    }
    let mut seeds: Vec<(usize, usize)> = (0..rep.levels.first().map_or(0, Vec::len)).map(|i| (0, i)).collect();
    for l in 0..nlev.saturating_sub(1) {
        for (p, &c) in count[l].iter().enumerate() {
            if c > 1 {
                seeds.extend((first[l][p]..first[l][p] + c).map(|ci| (l + 1, ci)));
            }
        }
    }
    seeds.sort_by(|a, b| a.0.cmp(&b.0).then(rep.levels[a.0][a.1].start.total_cmp(&rep.levels[b.0][b.1].start)));
    seeds
        .into_iter()
        .map(|(l0, i0)| {
            let (mut l, mut i) = (l0, i0);
            let mut intervals = vec![rep.levels[l][i]];
            while l + 1 < nlev && count[l][i] == 1 {
                i = first[l][i];
                l += 1;
                intervals.push(rep.levels[l][i]);
            }
            Pattern { first_level: l0 + 1, intervals }
        })
        .collect()
}

/// Keep patterns with more than `m` intervals.
pub fn select_patterns(patterns: &[Pattern], m: usize) -> Vec<Pattern> {
    patterns.iter().filter(|p| p.len() > m).cloned().collect()
}

/// Shoelace area of the polygon through the starts (bottom to top) and the
/// ends (top to bottom), one unit of height per level.
pub fn pattern_area(intervals: &[Interval]) -> f64 {
    let n = intervals.len();
    let mut v: Vec<(f64, f64)> = Vec::with_capacity(2 * n);
    v.extend(intervals.iter().enumerate().map(|(i, iv)| (iv.start, i as f64)));
    v.extend(intervals.iter().enumerate().rev().map(|(i, iv)| (iv.end, i as f64)));
    let mut twice = 0.0;
    for j in 0..v.len() {
        let (a, b) = (v[j], v[(j + 1) % v.len()]);
        twice += a.0 * b.1 - b.0 * a.1;
    }
    0.5 * twice.abs()
}

/// Dissimilarity over the levels the two patterns share: `1 - alpha` weighs
/// the area difference, `alpha` the summed width differences.
pub fn pattern_dissimilarity(r: &Pattern, s: &Pattern, alpha: f64) -> Result<f64> {
    let lo = r.first_level.max(s.first_level);
    let hi = r.last_level().min(s.last_level());
    if lo > hi {
        return Err(Error::DisjointLevels);
    }
    let (a, b) = (r.levels(lo, hi), s.levels(lo, hi));
    let area = (pattern_area(a) - pattern_area(b)).abs();
    let shape: f64 = a.iter().zip(b).map(|(x, y)| (x.length() - y.length()).abs()).sum();
    Ok((1.0 - alpha) * area + alpha * shape)
}
