//! Gaussian-emission hidden Markov models in log space, with the
//! linker / nucleosome topology used as a detection baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mu: f64,
    pub sigma2: f64,
}

impl Gaussian {
    pub fn log_pdf(&self, x: f64) -> f64 {
        let d = x - self.mu;
        -0.5 * (2.0 * std::f64::consts::PI * self.sigma2).ln() - d * d / (2.0 * self.sigma2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hmm {
    pub labels: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub pi: Vec<f64>,
    pub emissions: Vec<Gaussian>,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Forward/backward tables and the sequence log-likelihood.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub log_likelihood: f64,
    pub log_alpha: Vec<Vec<f64>>,
    pub log_beta: Vec<Vec<f64>>,
}

impl Posterior {
    /// State posteriors `gamma[t][i]`.
    pub fn gamma(&self) -> Vec<Vec<f64>> {
        self.log_alpha
            .iter()
            .zip(&self.log_beta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y - self.log_likelihood).exp()).collect())
            .collect()
    }
}

impl Hmm {
    pub fn new(labels: Vec<String>, a: Vec<Vec<f64>>, pi: Vec<f64>, emissions: Vec<Gaussian>) -> Result<Self> {
        let hmm = Hmm { labels, a, pi, emissions };
        hmm.validate()?;
        Ok(hmm)
    }

    pub fn n_states(&self) -> usize {
        self.pi.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pi.len();
        if n == 0 {
            return Err(Error::invalid("model has no states"));
        }
        if self.a.len() != n || self.a.iter().any(|r| r.len() != n) || self.emissions.len() != n || self.labels.len() != n {
            return Err(Error::invalid("model dimensions disagree"));
        }
        let stochastic = |row: &[f64]| {
            row.iter().all(|&p| (0.0..=1.0).contains(&p)) && (row.iter().sum::<f64>() - 1.0).abs() < 1e-9
        };
        if !stochastic(&self.pi) || !self.a.iter().all(|r| stochastic(r)) {
            return Err(Error::invalid("probabilities must be non-negative and sum to 1"));
        }
        if self.emissions.iter().any(|g| !(g.sigma2 > 0.0) || !g.mu.is_finite()) {
            return Err(Error::invalid("emission variances must be positive"));
        }
        Ok(())
    }

    // predecessors[j] = (i, ln a_ij) for a_ij > 0
    fn predecessors(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n_states();
        (0..n)
            .map(|j| (0..n).filter(|&i| self.a[i][j] > 0.0).map(|i| (i, self.a[i][j].ln())).collect())
            .collect()
    }

    fn successors(&self) -> Vec<Vec<(usize, f64)>> {
        let n = self.n_states();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.a[i][j] > 0.0).map(|j| (j, self.a[i][j].ln())).collect())
            .collect()
    }

    fn log_emissions(&self, obs: &[f64]) -> Vec<Vec<f64>> {
        obs.iter().map(|&x| self.emissions.iter().map(|g| g.log_pdf(x)).collect()).collect()
    }

    /// Forward-backward pass. A sequence with zero probability reports a
    /// log-likelihood of negative infinity.
    pub fn forward_backward(&self, obs: &[f64]) -> Result<Posterior> {
        if obs.is_empty() {
            return Err(Error::invalid("empty observation sequence"));
        }
        let n = self.n_states();
        let t_len = obs.len();
        let le = self.log_emissions(obs);
        let pred = self.predecessors();
        let succ = self.successors();
        let mut la = vec![vec![f64::NEG_INFINITY; n]; t_len];
        for i in 0..n {
            la[0][i] = self.pi[i].ln() + le[0][i];
        }
        for t in 1..t_len {
            for j in 0..n {
                la[t][j] = log_sum_exp(pred[j].iter().map(|&(i, lij)| la[t - 1][i] + lij)) + le[t][j];
            }
        }
        let mut lb = vec![vec![0.0; n]; t_len];
        for t in (0..t_len - 1).rev() {
            for i in 0..n {
                lb[t][i] = log_sum_exp(succ[i].iter().map(|&(j, lij)| lij + le[t + 1][j] + lb[t + 1][j]));
            }
        }
        let ll = log_sum_exp(la[t_len - 1].iter().copied());
        Ok(Posterior { log_likelihood: ll, log_alpha: la, log_beta: lb })
    }

    pub fn log_likelihood(&self, obs: &[f64]) -> Result<f64> {
        Ok(self.forward_backward(obs)?.log_likelihood)
    }

    /// Most probable state path and its joint log-probability. Ties go to
    /// the lower state index.
    pub fn viterbi(&self, obs: &[f64]) -> Result<(Vec<usize>, f64)> {
        if obs.is_empty() {
            return Err(Error::invalid("empty observation sequence"));
        }
        let n = self.n_states();
        let le = self.log_emissions(obs);
        let pred = self.predecessors();
        let mut delta: Vec<f64> = (0..n).map(|i| self.pi[i].ln() + le[0][i]).collect();
        let mut back = vec![vec![0usize; n]; obs.len()];
        for t in 1..obs.len() {
            let mut next = vec![f64::NEG_INFINITY; n];
            for j in 0..n {
                let mut best = (f64::NEG_INFINITY, 0usize);
                for &(i, lij) in &pred[j] {
                    let v = delta[i] + lij;
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                next[j] = best.0 + le[t][j];
                back[t][j] = best.1;
            }
            delta = next;
        }
        let mut last = 0;
        for i in 1..n {
            if delta[i] > delta[last] {
                last = i;
            }
        }
        let score = delta[last];
        let mut path = vec![last; obs.len()];
        for t in (1..obs.len()).rev() {
            path[t - 1] = back[t][path[t]];
        }
        Ok((path, score))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Log-likelihood before each update and after the last one.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub variance_floor_hits: usize,
}

/// Baum-Welch re-estimation over one or more sequences. Transitions that
/// start at zero stay zero. Stops when the log-likelihood gain falls below
/// `tol * |ll|` or after `max_iter` updates.
pub fn baum_welch(init: &Hmm, seqs: &[Vec<f64>], max_iter: usize, tol: f64) -> Result<(Hmm, TrainReport)> {
    init.validate()?;
    if seqs.is_empty() || seqs.iter().any(Vec::is_empty) {
        return Err(Error::invalid("training needs non-empty sequences"));
    }
    let n = init.n_states();
    let mut hmm = init.clone();
    let mut lls = Vec::new();
    let mut floor_hits = 0;
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let mut total_ll = 0.0;
        let mut pi_acc = vec![0.0; n];
        let mut a_num = vec![vec![0.0; n]; n];
        let mut g_sum = vec![0.0; n];
        let mut g_x = vec![0.0; n];
        let mut gammas = Vec::with_capacity(seqs.len());
        let succ = hmm.successors();
        for obs in seqs {
            let post = hmm.forward_backward(obs)?;
            let ll = post.log_likelihood;
            if !ll.is_finite() {
                return Err(Error::invalid("training sequence has zero probability under the model"));
            }
            total_ll += ll;
            let gamma = post.gamma();
            let le = hmm.log_emissions(obs);
            for i in 0..n {
                pi_acc[i] += gamma[0][i];
            }
            for t in 0..obs.len() {
                for i in 0..n {
                    g_sum[i] += gamma[t][i];
                    g_x[i] += gamma[t][i] * obs[t];
                }
                if t + 1 < obs.len() {
                    for i in 0..n {
                        for &(j, lij) in &succ[i] {
                            a_num[i][j] +=
                                (post.log_alpha[t][i] + lij + le[t + 1][j] + post.log_beta[t + 1][j] - ll).exp();
                        }
                    }
                }
            }
            gammas.push(gamma);
        }
        lls.push(total_ll);
        if iterations > 0 && total_ll - lls[lls.len() - 2] <= tol * total_ll.abs() {
            converged = true;
            break;
        }
        if iterations == max_iter {
            break;
        }

        let mut next = hmm.clone();
        let s: f64 = pi_acc.iter().sum();
        next.pi = pi_acc.iter().map(|p| p / s).collect();
        for i in 0..n {
            let rs: f64 = a_num[i].iter().sum();
            if rs > 0.0 {
                next.a[i] = a_num[i].iter().map(|x| x / rs).collect();
            }
            if g_sum[i] > 0.0 {
                next.emissions[i].mu = g_x[i] / g_sum[i];
            }
        }
        let mut g_dev = vec![0.0; n];
        for (obs, gamma) in seqs.iter().zip(&gammas) {
            for (t, &x) in obs.iter().enumerate() {
                for i in 0..n {
                    let d = x - next.emissions[i].mu;
                    g_dev[i] += gamma[t][i] * d * d;
                }
            }
        }
        for i in 0..n {
            if g_sum[i] > 0.0 {
                let v = g_dev[i] / g_sum[i];
                if v < VARIANCE_FLOOR {
                    floor_hits += 1;
                    log::debug!("variance of state {} floored at {VARIANCE_FLOOR}", hmm.labels[i]);
                }
                next.emissions[i].sigma2 = v.max(VARIANCE_FLOOR);
            }
        }
        hmm = next;
        iterations += 1;
    }
    if floor_hits > 0 {
        log::warn!("variance floored at {VARIANCE_FLOOR} {floor_hits} times during training");
    }
    Ok((hmm, TrainReport { log_likelihoods: lls, iterations, converged, variance_floor_hits: floor_hits }))
}

/// Index of the linker state in [`nucleosome_hmm`].
pub const LINKER: usize = 0;

/// Initial emission statistics for the linker and nucleosome states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitStats {
    pub linker: Gaussian,
    pub nucleosome: Gaussian,
}

/// Two-means split of the observations; the lower cluster is the linker.
pub fn init_stats(obs: &[f64]) -> Result<InitStats> {
    if obs.len() < 2 {
        return Err(Error::invalid("need at least two observations"));
    }
    let mut sorted = obs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p).round() as usize];
    let (mut lo, mut hi) = (q(0.25), q(0.75));
    let mut split = 0;
    for _ in 0..100 {
        let cut = 0.5 * (lo + hi);
        split = sorted.partition_point(|&x| x < cut);
        if split == 0 || split == sorted.len() {
            break;
        }
        let nlo = sorted[..split].iter().sum::<f64>() / split as f64;
        let nhi = sorted[split..].iter().sum::<f64>() / (sorted.len() - split) as f64;
        if nlo == lo && nhi == hi {
            break;
        }
        (lo, hi) = (nlo, nhi);
    }
    let split = split.clamp(1, sorted.len() - 1);
    let stats = |x: &[f64]| {
        let m = x.iter().sum::<f64>() / x.len() as f64;
        let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64;
        Gaussian { mu: m, sigma2: v.max(VARIANCE_FLOOR) }
    };
    Ok(InitStats { linker: stats(&sorted[..split]), nucleosome: stats(&sorted[split..]) })
}

/// 18-state topology: `L`, well-positioned `N1..N8` (dwell 6 to 8) and
/// delocalized `DN1..DN9` (dwell 9 or more). The chain starts in `L`.
pub fn nucleosome_hmm(init: &InitStats) -> Hmm {
    let n = 18;
    let mut labels = vec!["L".to_string()];
    labels.extend((1..=8).map(|i| format!("N{i}")));
    labels.extend((1..=9).map(|i| format!("DN{i}")));
    let mut a = vec![vec![0.0; n]; n];
    let (l, n1, dn1) = (0, 1, 9);
    a[l][l] = 0.8;
    a[l][n1] = 0.1;
    a[l][dn1] = 0.1;
    for i in 1..=5 {
        a[i][i + 1] = 1.0;
    }
    for i in 6..=7 {
        a[i][i + 1] = 0.5;
        a[i][l] = 0.5;
    }
    a[8][l] = 1.0;
    for i in 9..17 {
        a[i][i + 1] = 1.0;
    }
    a[17][17] = 0.5;
    a[17][l] = 0.5;
    let mut pi = vec![0.0; n];
    pi[l] = 1.0;
    let mut emissions = vec![init.nucleosome; n];
    emissions[l] = init.linker;
    Hmm { labels, a, pi, emissions }
}

/// Probe labels from a state path: 0 for the linker state, 1 otherwise.
pub fn path_labels(path: &[usize]) -> Vec<u8> {
    path.iter().map(|&s| u8::from(s != LINKER)).collect()
}

/// Fit the topology to one signal and decode it into probe labels.
pub fn detect(obs: &[f64], max_iter: usize, tol: f64) -> Result<(Hmm, Vec<u8>)> {
    let init = nucleosome_hmm(&init_stats(obs)?);
    let (model, _) = baum_welch(&init, &[obs.to_vec()], max_iter, tol)?;
    let (path, _) = model.viterbi(obs)?;
    Ok((model, path_labels(&path)))
}
