//! Brute-force reference implementations checked against the library.

use mla_kit::hmm::{baum_welch, init_stats, nucleosome_hmm, Gaussian, Hmm};
use mla_kit::kernel::{conv_kernel, conv_window};
use mla_kit::mla::{transform, IntervalRepresentation};
use mla_kit::signal::{correlation, CorrelationMethod, Signal};
use mla_kit::synth::{generate, SynthConfig};
use mla_kit::wilcoxon::{rank_sum_exact, rank_sum_normal, Alternative};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Membership indicator of each original coordinate in any interval of one level.
fn b_vector(rep: &IntervalRepresentation, level: usize, s: &Signal) -> Vec<f64> {
    (s.start..=s.end())
        .map(|p| {
            let x = p as f64;
            let hit = rep.levels[level - 1].iter().any(|iv| iv.start <= x && x <= iv.end);
            if hit { 1.0 } else { 0.0 }
        })
        .collect()
}

/// Sum over window centers of the inner product of the level-window sums of
/// the B vectors, divided by the window size.
fn conv_brute(x: &Signal, y: &Signal, k: usize, gamma: f64) -> f64 {
    let np = conv_window(k, gamma).unwrap();
    let hnp = np / 2;
    let (rx, ry) = (transform(x, k).unwrap(), transform(y, k).unwrap());
    let mut total = 0.0;
    let mut c = 1 + hnp;
    while c + hnp <= k + 1 {
        let mut sx = vec![0.0; x.len()];
        let mut sy = vec![0.0; y.len()];
        for level in c + 1 - hnp..=c + hnp - 1 {
            for (a, b) in sx.iter_mut().zip(b_vector(&rx, level, x)) {
                *a += b;
            }
            for (a, b) in sy.iter_mut().zip(b_vector(&ry, level, y)) {
                *a += b;
            }
        }
        total += sx.iter().zip(&sy).map(|(a, b)| a * b).sum::<f64>() / np as f64;
        c += 1;
    }
    total
}

proptest! {
    #[test]
    fn conv_kernel_matches_brute_force(
        (x, y) in (2usize..30).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n))),
        k in 2usize..20,
        gamma in 0.05f64..=1.0,
    ) {
        let (x, y) = (Signal::new(x), Signal::new(y));
        let got = conv_kernel(&x, &y, k, gamma).unwrap();
        let want = conv_brute(&x, &y, k, gamma);
        prop_assert!((got - want).abs() <= 1e-12 * (1.0 + want.abs()), "{} vs {}", got, want);
        prop_assert!(conv_kernel(&x, &x, k, gamma).unwrap() >= 0.0);
    }
}

#[test]
fn conv_kernel_zero_signals() {
    // K = 4, gamma = 0.5: np = 2, centers 2..=4 see levels 2..=4 only, and a
    // flat signal populates level 1 alone.
    let z = Signal::new(vec![0.0; 6]);
    assert_eq!(conv_window(4, 0.5).unwrap(), 2);
    assert_eq!(conv_brute(&z, &z, 4, 0.5), 0.0);
    assert_eq!(conv_kernel(&z, &z, 4, 0.5).unwrap(), 0.0);
    // K = 6, gamma = 1: np = 6, the single center 4 covers levels 2..=6
    assert_eq!(conv_kernel(&z, &z, 6, 1.0).unwrap(), 0.0);
    assert!(conv_kernel(&z, &Signal::new(vec![0.0; 5]), 4, 0.5).is_err());
}

fn choose_sums(ranks: &[f64], n: usize) -> Vec<f64> {
    let total = ranks.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << total) {
        if mask.count_ones() as usize == n {
            out.push((0..total).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum());
        }
    }
    out
}

fn midranks_brute(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|&a| {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_wilcoxon_matches_enumeration(
        x in prop::collection::vec(0u8..6, 1..7),
        y in prop::collection::vec(0u8..6, 1..7),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let pooled: Vec<f64> = x.iter().chain(&y).copied().collect();
        let ranks = midranks_brute(&pooled);
        let w: f64 = ranks[x.len()..].iter().sum();
        let sums = choose_sums(&ranks, y.len());
        let total = sums.len() as f64;
        let upper = sums.iter().filter(|&&s| s >= w - 1e-9).count() as f64 / total;
        let lower = sums.iter().filter(|&&s| s <= w + 1e-9).count() as f64 / total;

        let g = rank_sum_exact(&x, &y, Alternative::Greater).unwrap();
        prop_assert!(g.exact);
        prop_assert!((g.w - w).abs() < 1e-9);
        prop_assert!((g.p - upper).abs() < 1e-12);
        prop_assert!((rank_sum_exact(&x, &y, Alternative::Less).unwrap().p - lower).abs() < 1e-12);
        let two = rank_sum_exact(&x, &y, Alternative::TwoSided).unwrap().p;
        prop_assert!((two - (2.0 * upper.min(lower)).min(1.0)).abs() < 1e-12);
    }
}

#[test]
fn exact_null_mass_sums_to_one() {
    for m in 1..=6 {
        for n in 1..=6 {
            let ranks: Vec<f64> = (1..=m + n).map(|r| r as f64).collect();
            let sums = choose_sums(&ranks, n);
            let lo = (n * (n + 1) / 2) as i64;
            let hi = (n * (2 * m + n + 1) / 2) as i64;
            let mut mass = 0.0;
            for w in lo..=hi {
                mass += sums.iter().filter(|&&s| s as i64 == w).count() as f64 / sums.len() as f64;
            }
            assert!((mass - 1.0).abs() < 1e-12, "m={m} n={n}");
        }
    }
}

#[test]
fn exact_and_normal_agree_at_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..6).map(|_| rng.random::<f64>() + 0.3).collect();
        for alt in [Alternative::Greater, Alternative::Less, Alternative::TwoSided] {
            let e = rank_sum_exact(&x, &y, alt).unwrap().p;
            let a = rank_sum_normal(&x, &y, alt).unwrap().p;
            worst = worst.max((e - a).abs());
        }
    }
    assert!(worst < 0.02, "max |exact - normal| = {worst}");
}

fn random_hmm(rng: &mut ChaCha8Rng, n: usize) -> Hmm {
    let row = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let a = (0..n).map(|_| row(rng)).collect();
    let pi = row(rng);
    let emissions = (0..n).map(|_| Gaussian { mu: rng.random_range(-2.0..2.0), sigma2: rng.random_range(0.3..2.0) }).collect();
    Hmm::new((0..n).map(|i| format!("s{i}")).collect(), a, pi, emissions).unwrap()
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[test]
fn forward_backward_agree_at_every_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(1..5);
        let h = random_hmm(&mut rng, n);
        let obs: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(-3.0..3.0)).collect();
        let post = h.forward_backward(&obs).unwrap();
        for t in 0..obs.len() {
            let s: Vec<f64> = (0..n).map(|i| post.log_alpha[t][i] + post.log_beta[t][i]).collect();
            assert!((log_sum_exp(&s) - post.log_likelihood).abs() < 1e-9);
            let gsum: f64 = post.gamma()[t].iter().sum();
            assert!((gsum - 1.0).abs() < 1e-9);
        }
        let (_, lp) = h.viterbi(&obs).unwrap();
        assert!(lp <= post.log_likelihood + 1e-12);
    }
}

#[test]
fn baum_welch_keeps_rows_stochastic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let h = random_hmm(&mut rng, 3);
        let obs: Vec<f64> = (0..60).map(|_| rng.random_range(-3.0..3.0)).collect();
        for iters in 1..4 {
            let (m, _) = baum_welch(&h, &[obs.clone()], iters, 0.0).unwrap();
            for row in &m.a {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            assert!((m.pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(m.emissions.iter().all(|e| e.sigma2 > 0.0));
        }
    }
}

#[test]
fn nucleosome_topology_zeros_survive_training() {
    let out = generate(&SynthConfig { nn: 20, snr: 4.0, seed: 1, ..Default::default() }).unwrap();
    let init = nucleosome_hmm(&init_stats(&out.signal).unwrap());
    let (m, _) = baum_welch(&init, &[out.signal.clone()], 5, 0.0).unwrap();
    for i in 0..18 {
        for j in 0..18 {
            if init.a[i][j] == 0.0 {
                assert_eq!(m.a[i][j], 0.0, "A[{i}][{j}]");
            }
        }
    }
}

fn clean_config(seed: u64) -> SynthConfig {
    SynthConfig { nn: 30, dp: 0.0, pur: 1.0, nsv: 1e-12, snr: f64::INFINITY, seed, ..Default::default() }
}

#[test]
fn generator_is_bit_reproducible() {
    let cfg = SynthConfig { nn: 15, snr: 2.0, dp: 0.3, dr: 40.0, seed: 42, ..Default::default() };
    let (a, b) = (generate(&cfg).unwrap(), generate(&cfg).unwrap());
    assert_eq!(a.mask, b.mask);
    assert_eq!(a.probe_mask, b.probe_mask);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.signal), bits(&b.signal));
    assert_eq!(bits(&a.clean), bits(&b.clean));
    let c = generate(&SynthConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(bits(&a.signal), bits(&c.signal));
}

#[test]
fn clean_signal_peaks_inside_every_nucleosome() {
    for seed in 0..10 {
        let cfg = clean_config(seed);
        let out = generate(&cfg).unwrap();
        let v = &out.signal;
        for &s in &out.mask.starts {
            let span: Vec<usize> = (0..v.len())
                .filter(|&i| {
                    let (a, b) = cfg.probe_range(i);
                    a < s + cfg.nl && s < b
                })
                .collect();
            assert!(!span.is_empty());
            let peak = span.iter().any(|&i| {
                let left = i == 0 || v[i] >= v[i - 1];
                let right = i + 1 == v.len() || v[i] >= v[i + 1];
                left && right
            });
            assert!(peak, "seed {seed}: no local maximum for nucleosome at {s}");
        }
    }
}

#[test]
fn clean_signal_tracks_probe_coverage() {
    for seed in 0..5 {
        let cfg = clean_config(seed);
        let out = generate(&cfg).unwrap();
        let coverage: Vec<f64> = (0..out.signal.len())
            .map(|i| {
                let (a, b) = cfg.probe_range(i);
                out.mask.bits[a..b].iter().map(|&x| x as f64).sum::<f64>() / (b - a) as f64
            })
            .collect();
        let r = correlation(&out.signal, &coverage, CorrelationMethod::Pearson).unwrap();
        assert!(r > 0.8, "seed {seed}: r = {r}");
    }
}
