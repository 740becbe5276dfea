//! Interval trees, the MLA tree and convolution kernels, Gram matrices and
//! kernel-induced distances.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mla::{transform, Interval, IntervalRepresentation};
use crate::signal::Signal;

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub interval: Interval,
    /// 0 for the root, otherwise the 1-based MLA level.
    pub level: usize,
    pub children: Vec<usize>,
}

/// Nodes are stored level by level, so every child index exceeds its parent's.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalTree {
    pub nodes: Vec<TreeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedNode {
    pub start: f64,
    pub end: f64,
    pub level: usize,
    pub children: Vec<NestedNode>,
}

impl IntervalTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0) + 1
    }

    pub fn to_nested(&self) -> NestedNode {
        fn build(t: &IntervalTree, i: usize) -> NestedNode {
            let n = &t.nodes[i];
            NestedNode {
                start: n.interval.start,
                end: n.interval.end,
                level: n.level,
                children: n.children.iter().map(|&c| build(t, c)).collect(),
            }
        }
        build(self, 0)
    }

    pub fn from_nested(root: &NestedNode) -> Self {
        let mut nodes = Vec::new();
        let mut queue = std::collections::VecDeque::from([(root, usize::MAX)]);
        while let Some((n, parent)) = queue.pop_front() {
            let id = nodes.len();
            nodes.push(TreeNode {
                interval: Interval { start: n.start, end: n.end },
                level: n.level,
                children: Vec::new(),
            });
            if parent != usize::MAX {
                nodes[parent].children.push(id);
            }
            queue.extend(n.children.iter().map(|c| (c, id)));
        }
        IntervalTree { nodes }
    }
}

/// Root `[a, b]` at level 0; each interval hangs below the interval of the
/// previous level that contains it.
pub fn signal_to_tree(rep: &IntervalRepresentation) -> Result<IntervalTree> {
    let domain = rep.domain()?;
    let mut nodes = vec![TreeNode { interval: domain, level: 0, children: Vec::new() }];
    let mut prev: Vec<usize> = vec![0];
    for (li, level) in rep.levels.iter().enumerate() {
        if level.is_empty() {
            break;
        }
        let parents = if li == 0 { vec![0; level.len()] } else { rep.parents(li - 1) };
        let mut ids = Vec::with_capacity(level.len());
        for (iv, p) in level.iter().zip(parents) {
            let id = nodes.len();
            nodes.push(TreeNode { interval: *iv, level: li + 1, children: Vec::new() });
            let parent = prev[p];
            nodes[parent].children.push(id);
            ids.push(id);
        }
        prev = ids;
    }
    Ok(IntervalTree { nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeKernelParams {
    pub delta: f64,
    pub lambda: f64,
    pub normalize: bool,
}

impl Default for TreeKernelParams {
    fn default() -> Self {
        TreeKernelParams { delta: 1.0, lambda: 0.5, normalize: true }
    }
}

impl TreeKernelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::invalid("tree kernel needs delta >= 0 and lambda in (0, 1]"));
        }
        Ok(())
    }
}

fn tree_kernel_raw(t1: &IntervalTree, t2: &IntervalTree, p: &TreeKernelParams) -> f64 {
    let (n1, n2) = (t1.len(), t2.len());
    let mut c = vec![0.0; n1 * n2];
    let mut matched = Vec::new();
    for i in (0..n1).rev() {
        let a = &t1.nodes[i];
        for j in (0..n2).rev() {
            let b = &t2.nodes[j];
            if (a.interval.length() - b.interval.length()).abs() > p.delta
                || a.children.len() != b.children.len()
            {
                continue;
            }
            let v = p.lambda
                * a.children
                    .iter()
                    .zip(&b.children)
                    .map(|(&x, &y)| 1.0 + c[x * n2 + y])
                    .product::<f64>();
            c[i * n2 + j] = v;
            matched.push(v);
        }
    }
    // summing in sorted order makes K(t1, t2) and K(t2, t1) bit-identical
    matched.sort_by(f64::total_cmp);
    matched.iter().sum()
}

/// Sum over node pairs of the subtree match score. Leaves match leaves whose
/// lengths differ by at most `delta`; internal nodes additionally need the
/// same number of children, compared in order.
pub fn tree_kernel(t1: &IntervalTree, t2: &IntervalTree, p: &TreeKernelParams) -> Result<f64> {
    p.validate()?;
    let k = tree_kernel_raw(t1, t2, p);
    if !p.normalize {
        return Ok(k);
    }
    let d = (tree_kernel_raw(t1, t1, p) * tree_kernel_raw(t2, t2, p)).sqrt();
    Ok(if d > 0.0 { k / d } else { 0.0 })
}

/// Window size `np` (even, at least 2) for `K` thresholds.
pub fn conv_window(k: usize, gamma: f64) -> Result<usize> {
    if k < 2 || !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("conv kernel needs K >= 2 and gamma in (0, 1]"));
    }
    Ok(2usize.max(2 * (gamma * k as f64 / 2.0).round() as usize))
}

/// Number of levels containing each original sample position.
pub fn depth_profile(s: &Signal, rep: &IntervalRepresentation) -> Vec<usize> {
    (s.start..=s.end()).map(|p| rep.depth_at(p as f64)).collect()
}

/// Convolution kernel from two depth profiles over `k` levels.
pub fn conv_from_depths(dx: &[usize], dy: &[usize], k: usize, np: usize) -> Result<f64> {
    if dx.len() != dy.len() {
        return Err(Error::LengthMismatch { left: dx.len(), right: dy.len() });
    }
    let hnp = np / 2;
    let mut s = 0.0;
    // window of levels [c - hnp + 1, c + hnp - 1] for centers c in [1 + hnp, K - hnp + 1]
    for c in (1 + hnp)..=(k + 1).saturating_sub(hnp) {
        let lo = c + 1 - hnp;
        let hi = c + hnp - 1;
        let count = |d: usize| (d.min(hi) + 1).saturating_sub(lo) as f64;
        let dot: f64 = dx.iter().zip(dy).map(|(&a, &b)| count(a) * count(b)).sum();
        s += dot / np as f64;
    }
    Ok(s)
}

pub fn conv_kernel(x: &Signal, y: &Signal, k: usize, gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let np = conv_window(k, gamma)?;
    let dx = depth_profile(x, &transform(x, k)?);
    let dy = depth_profile(y, &transform(y, k)?);
    conv_from_depths(&dx, &dy, k, np)
}

/// Symmetric matrix of kernel values with item identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    pub ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_symmetric(&self, tol: f64) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if self.values[i].len() != n {
                return Err(Error::LengthMismatch { left: self.values[i].len(), right: n });
            }
            for j in 0..i {
                let (a, b) = (self.values[i][j], self.values[j][i]);
                if (a - b).abs() > tol * 1f64.max(a.abs().max(b.abs())) {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        Ok(())
    }
}

/// Evaluate `kernel` on the upper triangle in parallel and mirror it.
pub fn gram_matrix<T, F>(ids: Vec<String>, items: &[T], kernel: F) -> Result<GramMatrix>
where
    T: Sync,
    F: Fn(&T, &T) -> Result<f64> + Sync,
{
    if ids.len() != items.len() {
        return Err(Error::LengthMismatch { left: ids.len(), right: items.len() });
    }
    let n = items.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel(&items[i], &items[j])).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            values[i][i + off] = v;
            values[i + off][i] = v;
        }
    }
    Ok(GramMatrix { ids, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub psd: bool,
}

/// Passes when the smallest eigenvalue is at least `-1e-8` times the largest.
pub fn psd_check(g: &GramMatrix) -> PsdReport {
    let n = g.len();
    let m = DMatrix::from_fn(n, n, |i, j| g.values[i][j]);
    let eig = SymmetricEigen::new(m).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    PsdReport { min_eigenvalue: min, max_eigenvalue: max, psd: n == 0 || min >= -1e-8 * max.abs() }
}

/// `D_ij = sqrt(k_ii + k_jj - 2 k_ij)`. Slightly negative radicands are
/// clamped to zero.
pub fn induced_distance(g: &GramMatrix) -> Result<Vec<Vec<f64>>> {
    g.check_symmetric(1e-9)?;
    let k = &g.values;
    let n = g.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let r = k[i][i] + k[j][j] - 2.0 * k[i][j];
            let tol = 1e-9 * 1f64.max(k[i][i].abs() + k[j][j].abs());
            if r < -tol {
                return Err(Error::NegativeRadicand { i, j, value: r });
            }
            let v = r.max(0.0).sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimalityFormula {
    /// `(|i - j| - 1) / (n - 2)` averaged over items.
    #[default]
    Adjacency,
    /// `|i - j - 1| / (n - 2)` summed over items.
    Literal,
}

impl std::str::FromStr for OptimalityFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adjacency" => Ok(Self::Adjacency),
            "literal" => Ok(Self::Literal),
            _ => Err(Error::invalid(format!("unknown formula {s:?}"))),
        }
    }
}

/// How far, in index distance, each item's nearest neighbour lies from its
/// temporal neighbours. Ties go to the smaller index.
pub fn distance_optimality(d: &[Vec<f64>], formula: OptimalityFormula) -> Result<f64> {
    let n = d.len();
    if n < 3 {
        return Err(Error::invalid("distance optimality needs at least 3 items"));
    }
    let mut total = 0.0;
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::LengthMismatch { left: row.len(), right: n });
        }
        let mut j = usize::MAX;
        for (k, &v) in row.iter().enumerate() {
            if k != i && (j == usize::MAX || v < row[j]) {
                j = k;
            }
        }
        let (i, j) = (i as f64, j as f64);
        total += match formula {
            OptimalityFormula::Adjacency => ((i - j).abs() - 1.0) / (n - 2) as f64,
            OptimalityFormula::Literal => (i - j - 1.0).abs() / (n - 2) as f64,
        };
    }
    Ok(match formula {
        OptimalityFormula::Adjacency => total / n as f64,
        OptimalityFormula::Literal => total,
    })
}

/// Euclidean distance matrix between equal-length signals.
pub fn euclidean_distances(signals: &[Signal]) -> Result<Vec<Vec<f64>>> {
    let n = signals.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (&signals[i].samples, &signals[j].samples);
            if a.len() != b.len() {
                return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
            }
            let v = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Ok(d)
}
