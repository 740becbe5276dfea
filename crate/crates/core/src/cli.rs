//! Command-line front end for the `mla-kit` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmm::{self, Hmm};
use crate::io::{self, read_json, read_signal_csv, write_atomic, write_json};
use crate::kernel::{self, OptimalityFormula, TreeKernelParams};
use crate::mla::{self, IntervalRepresentation};
use crate::nucleosome::{self, PipelineConfig};
use crate::pattern::Pattern;
use crate::randomness::{self, NullParams};
use crate::signal::{smooth3_repeat, Signal};
use crate::svm::{self, KernelRef, SvmModel};
use crate::synth::{self, SynthConfig};

#[derive(Parser, Debug)]
#[command(name = "mla-kit", version, about = "Multi-threshold interval analysis of 1-D signals")]
struct Cli {
    /// Base seed; sub-seeds are derived from it by stream index.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for data-parallel loops.
    #[arg(long, global = true, env = "MLA_KIT_THREADS", default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Group,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Interval representations.
    #[command(subcommand)]
    Mla(MlaCmd),
    /// Nucleosome discovery and classification.
    #[command(subcommand)]
    Nuc(NucCmd),
    /// Synthetic tiling-array signals.
    #[command(subcommand)]
    Synth(SynthCmd),
    /// Hidden Markov model baseline.
    #[command(subcommand)]
    Hmm(HmmCmd),
    /// Randomness test on interval lengths.
    #[command(subcommand)]
    Randtest(RandCmd),
    /// Interval-tree kernels, Gram matrices and SVMs.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Evaluation metrics.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Timing benchmarks.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Subcommand, Debug)]
enum MlaCmd {
    /// Normalize a signal and write its interval representation.
    Transform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a signal from an interval representation.
    Reconstruct {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate reconstruction fidelity against K.
    CalibrateK {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long, default_value_t = 40)]
        k_max: usize,
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV copy of the table.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 4)]
    os: usize,
    #[arg(long, default_value = "rule")]
    classifier: String,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            k: self.k,
            m: self.m,
            alpha: self.alpha,
            os: self.os,
            classifier: self.classifier.parse()?,
        })
    }
}

#[derive(Subcommand, Debug)]
enum NucCmd {
    /// Build the nucleosome model and list the discovered patterns.
    Discover {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify regions as well-positioned, delocalized or fused.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long)]
        out: PathBuf,
        /// Optional CSV of regions.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Optional per-probe 0/1 labels.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Sweep m against recognition accuracy on synthetic runs.
    CalibrateM {
        /// Generator configuration; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [20, 30, 40])]
        ks: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 4)]
        os: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum SynthCmd {
    /// Write signal.csv, clean.csv, mask.csv and metadata.json.
    Gen {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configuration's SNR.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum HmmCmd {
    /// Fit the nucleosome HMM by Baum-Welch.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 30)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Viterbi-decode a signal with a trained model.
    Decode {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum RandCmd {
    /// Test each level of a signal against Gaussian replicates.
    Run {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 300)]
        n: usize,
        /// Replicate length; defaults to the input length.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, default_value_t = 9)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        nb: usize,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        /// CSV of the null density per level.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct KernelArgs {
    /// `tree` or `conv`.
    #[arg(long, default_value = "tree")]
    kernel: String,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Report the tree kernel without normalization.
    #[arg(long)]
    raw: bool,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    /// Smoothing passes applied before the transform.
    #[arg(long, default_value_t = 0)]
    smooth: usize,
}

#[derive(Subcommand, Debug)]
enum KernelCmd {
    /// Gram matrix over a set of signals.
    Gram {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        out: PathBuf,
        /// Induced distance matrix.
        #[arg(long)]
        distance: Option<PathBuf>,
        /// Eigenvalue diagnostic.
        #[arg(long)]
        psd: Option<PathBuf>,
    },
    /// Interval tree of one signal as nested JSON.
    Tree {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        smooth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convolution kernel between two signals.
    Conv {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train an SVM on a precomputed Gram matrix.
    SvmTrain {
        #[arg(long)]
        gram: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = svm::DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = svm::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value = "precomputed")]
        kernel_id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict labels from kernel rows against the training set.
    SvmPredict {
        #[arg(long)]
        model: PathBuf,
        /// CSV with a header row; one row of kernel values per item.
        #[arg(long)]
        rows: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// Distance optimality of a distance matrix or of the distance
    /// induced by a Gram matrix.
    DistanceOptimality {
        #[arg(long, conflicts_with = "gram", required_unless_present = "gram")]
        distance: Option<PathBuf>,
        #[arg(long)]
        gram: Option<PathBuf>,
        #[arg(long, default_value = "adjacency")]
        formula: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recognition accuracy of per-probe 0/1 labels.
    Ra {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BenchCmd {
    /// Time the MLA pipeline against HMM training and decoding.
    MlaVsHmm {
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long, default_value_t = 10)]
        nn_min: usize,
        #[arg(long, default_value_t = 100)]
        nn_max: usize,
        #[arg(long, default_value_t = 6.0)]
        snr: f64,
        /// MLA timing is averaged over this many runs.
        #[arg(long, default_value_t = 20)]
        repeat: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parse `args` (program name first), run one command and return the
/// process exit code: 0 on success, 1 for usage or validation errors, 2 for
/// runtime errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Group::Mla(c) => mla_cmd(c),
        Group::Nuc(c) => nuc_cmd(c, cli.seed),
        Group::Synth(c) => synth_cmd(c, cli.seed),
        Group::Hmm(c) => hmm_cmd(c),
        Group::Randtest(c) => rand_cmd(c, cli.seed),
        Group::Kernel(c) => kernel_cmd(c),
        Group::Eval(c) => eval_cmd(c),
        Group::Bench(c) => bench_cmd(c, cli.seed),
    }
}

fn csv_rows<S: Serialize>(rows: &[S]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::invalid(e.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::invalid(e.to_string()))
}

fn write_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut s = String::from("label\n");
    for l in labels {
        s.push_str(&format!("{l}\n"));
    }
    write_atomic(path, s.as_bytes())
}

fn read_mask(path: &Path) -> Result<Vec<u8>> {
    io::read_labels(path)?
        .into_iter()
        .map(|v| u8::try_from(v).ok().filter(|v| *v <= 1).ok_or(Error::invalid("labels must be 0 or 1")))
        .collect()
}

fn mla_cmd(c: &MlaCmd) -> Result<()> {
    match c {
        MlaCmd::Transform { input, k, out } => {
            let rep = mla::transform(&read_signal_csv(input)?, *k)?;
            write_json(out, &rep)
        }
        MlaCmd::Reconstruct { input, out } => {
            let rep: IntervalRepresentation = read_json(input)?;
            io::write_signal_csv(out, &mla::reconstruct(&rep)?)
        }
        MlaCmd::CalibrateK { input, k_max, out, csv } => {
            let signals = input.iter().map(|p| read_signal_csv(p)).collect::<Result<Vec<_>>>()?;
            let cal = mla::calibrate_k(&signals, *k_max)?;
            write_json(out, &cal)?;
            if let Some(p) = csv {
                write_atomic(p, &csv_rows(&cal.rows)?)?;
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct DiscoveryOut<'a> {
    config: &'a PipelineConfig,
    model: &'a nucleosome::NucleosomeModel,
    interval_count: usize,
    patterns: &'a [Pattern],
}

#[derive(Serialize)]
struct RegionRow {
    start_probe: i64,
    end_probe: i64,
    label: &'static str,
    score: f64,
}

#[derive(Serialize)]
struct MCalibrationOut {
    seed: u64,
    config: SynthConfig,
    rows: Vec<nucleosome::MCalibrationRow>,
}

#[derive(Serialize)]
struct MCalibrationCsvRow {
    run: usize,
    k: usize,
    best_m: usize,
    best_ra: f64,
}

fn nuc_cmd(c: &NucCmd, seed: u64) -> Result<()> {
    match c {
        NucCmd::Discover { input, pipeline, out } => {
            let cfg = pipeline.config()?;
            let d = nucleosome::discover(&read_signal_csv(input)?, &cfg)?;
            let patterns: Vec<Pattern> = crate::pattern::select_patterns(&d.patterns, cfg.m);
            write_json(
                out,
                &DiscoveryOut { config: &cfg, model: &d.model, interval_count: d.rep.interval_count(), patterns: &patterns },
            )
        }
        NucCmd::Classify { input, pipeline, out, csv, labels } => {
            let cfg = pipeline.config()?;
            let s = read_signal_csv(input)?;
            let regions = nucleosome::classify(&s, &cfg)?;
            write_json(out, &regions)?;
            if let Some(p) = csv {
                let rows: Vec<RegionRow> = regions
                    .iter()
                    .map(|r| RegionRow {
                        start_probe: r.start_probe,
                        end_probe: r.end_probe,
                        label: r.label.as_str(),
                        score: r.score,
                    })
                    .collect();
                write_atomic(p, &csv_rows(&rows)?)?;
            }
            if let Some(p) = labels {
                write_labels(p, &nucleosome::probe_labels(&regions, s.len(), s.start))?;
            }
            Ok(())
        }
        NucCmd::CalibrateM { config, runs, ks, alpha, os, out, csv } => {
            let base: SynthConfig = match config {
                Some(p) => read_json(p)?,
                None => SynthConfig::default(),
            };
            let data = (0..*runs)
                .map(|i| {
                    let cfg = SynthConfig { seed: crate::rng::child_seed(seed, i as u64), ..base.clone() };
                    let o = synth::generate(&cfg)?;
                    Ok((Signal::new(o.signal), o.probe_mask))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = nucleosome::calibrate_m(&data, ks, *alpha, *os)?;
            if let Some(p) = csv {
                let flat: Vec<MCalibrationCsvRow> = rows
                    .iter()
                    .map(|r| MCalibrationCsvRow { run: r.run, k: r.k, best_m: r.best_m, best_ra: r.best_ra })
                    .collect();
                write_atomic(p, &csv_rows(&flat)?)?;
            }
            write_json(out, &MCalibrationOut { seed, config: base, rows })
        }
    }
}

fn synth_cmd(c: &SynthCmd, seed: u64) -> Result<()> {
    let SynthCmd::Gen { config, snr, out_dir } = c;
    let mut cfg: SynthConfig = match config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    cfg.seed = seed;
    if let Some(v) = snr {
        cfg.snr = *v;
    }
    cfg.validate()?;
    let o = synth::generate(&cfg)?;
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.clone(), source })?;
    io::write_signal_csv(&out_dir.join("signal.csv"), &Signal::new(o.signal))?;
    io::write_signal_csv(&out_dir.join("clean.csv"), &Signal::new(o.clean))?;
    write_labels(&out_dir.join("mask.csv"), &o.probe_mask)?;
    write_json(&out_dir.join("metadata.json"), &o.metadata)
}

#[derive(Serialize)]
struct DecodedRow {
    position: i64,
    state: usize,
    label: u8,
}

fn hmm_cmd(c: &HmmCmd) -> Result<()> {
    match c {
        HmmCmd::Train { input, max_iter, tol, out, report } => {
            let s = read_signal_csv(input)?;
            let init = hmm::nucleosome_hmm(&hmm::init_stats(&s.samples)?);
            let (model, rep) = hmm::baum_welch(&init, &[s.samples], *max_iter, *tol)?;
            write_json(out, &model)?;
            if let Some(p) = report {
                write_json(p, &rep)?;
            }
            Ok(())
        }
        HmmCmd::Decode { model, input, out } => {
            let m: Hmm = read_json(model)?;
            m.validate()?;
            let s = read_signal_csv(input)?;
            let (path, _) = m.viterbi(&s.samples)?;
            let labels = hmm::path_labels(&path);
            let rows: Vec<DecodedRow> = path
                .iter()
                .zip(&labels)
                .enumerate()
                .map(|(i, (&state, &label))| DecodedRow { position: s.start + i as i64, state, label })
                .collect();
            write_atomic(out, &csv_rows(&rows)?)
        }
    }
}

#[derive(Serialize)]
struct DensityRow {
    level: usize,
    skl: f64,
    density: f64,
}

fn rand_cmd(c: &RandCmd, seed: u64) -> Result<()> {
    let RandCmd::Run { input, n, l, k, nb, alpha, out, plot } = c;
    let s = read_signal_csv(input)?;
    let (mu, sigma) = randomness::gaussian_fit(&s);
    if !(sigma > 0.0) {
        return Err(Error::invalid("input signal is constant"));
    }
    let params = NullParams { mu, sigma, n: *n, l: l.unwrap_or(s.len()), k: *k, nb: *nb, seed };
    let null = randomness::estimate_null(params)?;
    let report = randomness::run_test(&s, &null, *alpha, crate::rng::child_seed(seed, 1))?;
    write_json(out, &report)?;
    if let Some(p) = plot {
        let mut rows = Vec::new();
        for level in 1..=*k {
            let samples = &null.samples[level - 1];
            let Some(&top) = samples.last() else { continue };
            for i in 0..=100 {
                let x = top * i as f64 / 100.0;
                if let Some(density) = null.kde(level, x) {
                    rows.push(DensityRow { level, skl: x, density });
                }
            }
        }
        write_atomic(p, &csv_rows(&rows)?)?;
    }
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

fn kernel_cmd(c: &KernelCmd) -> Result<()> {
    match c {
        KernelCmd::Gram { input, kernel: ka, out, distance, psd } => {
            let signals = input
                .iter()
                .map(|p| Ok(smooth3_repeat(&read_signal_csv(p)?, ka.smooth)))
                .collect::<Result<Vec<_>>>()?;
            let ids: Vec<String> = input.iter().map(|p| stem(p)).collect();
            let g = match ka.kernel.as_str() {
                "tree" => {
                    let params = TreeKernelParams { delta: ka.delta, lambda: ka.lambda, normalize: !ka.raw };
                    params.validate()?;
                    let trees = signals
                        .iter()
                        .map(|s| kernel::signal_to_tree(&mla::transform(s, ka.k)?))
                        .collect::<Result<Vec<_>>>()?;
                    kernel::gram_matrix(ids, &trees, |a, b| kernel::tree_kernel(a, b, &params))?
                }
                "conv" => {
                    let np = kernel::conv_window(ka.k, ka.gamma)?;
                    let depths = signals
                        .iter()
                        .map(|s| Ok(kernel::depth_profile(s, &mla::transform(s, ka.k)?)))
                        .collect::<Result<Vec<_>>>()?;
                    kernel::gram_matrix(ids, &depths, |a, b| kernel::conv_from_depths(a, b, ka.k, np))?
                }
                other => return Err(Error::invalid(format!("unknown kernel {other:?}"))),
            };
            write_atomic(out, io::matrix_csv(&g.ids, &g.values)?.as_bytes())?;
            if let Some(p) = psd {
                write_json(p, &kernel::psd_check(&g))?;
            }
            if let Some(p) = distance {
                let d = kernel::induced_distance(&g)?;
                write_atomic(p, io::matrix_csv(&g.ids, &d)?.as_bytes())?;
            }
            Ok(())
        }
        KernelCmd::Tree { input, k, smooth, out } => {
            let s = smooth3_repeat(&read_signal_csv(input)?, *smooth);
            let t = kernel::signal_to_tree(&mla::transform(&s, *k)?)?;
            write_json(out, &t.to_nested())
        }
        KernelCmd::Conv { x, y, k, gamma, out } => {
            let v = kernel::conv_kernel(&read_signal_csv(x)?, &read_signal_csv(y)?, *k, *gamma)?;
            let doc = serde_json::json!({ "k": k, "gamma": gamma, "value": v });
            match out {
                Some(p) => write_json(p, &doc),
                None => {
                    println!("{doc}");
                    Ok(())
                }
            }
        }
        KernelCmd::SvmTrain { gram, labels, c, tol, kernel_id, out } => {
            let (_, g) = io::read_matrix_csv(gram)?;
            let y = io::read_labels(labels)?;
            let kref = KernelRef { id: kernel_id.clone(), params: serde_json::Value::Null };
            write_json(out, &svm::svm_train(&g, &y, *c, *tol, kref)?)
        }
        KernelCmd::SvmPredict { model, rows, out } => {
            let m: SvmModel = read_json(model)?;
            let mut rdr = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(rows)
                .map_err(|e| Error::Parse { path: rows.clone(), msg: e.to_string() })?;
            let mut text = String::from("label\n");
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::Parse { path: rows.clone(), msg: e.to_string() })?;
                let row = rec
                    .iter()
                    .map(|v| v.parse::<f64>().map_err(|_| Error::Parse { path: rows.clone(), msg: format!("bad value {v:?}") }))
                    .collect::<Result<Vec<_>>>()?;
                text.push_str(&format!("{}\n", svm::svm_predict(&m, &m.support_row(&row)?)?));
            }
            write_atomic(out, text.as_bytes())
        }
    }
}

fn emit(out: &Option<PathBuf>, doc: &serde_json::Value) -> Result<()> {
    match out {
        Some(p) => write_json(p, doc),
        None => {
            println!("{doc}");
            Ok(())
        }
    }
}

fn eval_cmd(c: &EvalCmd) -> Result<()> {
    match c {
        EvalCmd::DistanceOptimality { distance, gram, formula, out } => {
            let formula: OptimalityFormula = formula.parse()?;
            let d = match (distance, gram) {
                (Some(p), _) => io::read_matrix_csv(p)?.1,
                (None, Some(p)) => {
                    let (ids, values) = io::read_matrix_csv(p)?;
                    kernel::induced_distance(&kernel::GramMatrix { ids, values })?
                }
                (None, None) => return Err(Error::invalid("need --distance or --gram")),
            };
            let v = kernel::distance_optimality(&d, formula)?;
            emit(out, &serde_json::json!({ "formula": formula, "n": d.len(), "do": v }))
        }
        EvalCmd::Ra { pred, truth, out } => {
            let r = synth::recognition_accuracy(&read_mask(pred)?, &read_mask(truth)?)?;
            emit(out, &serde_json::to_value(r)?)
        }
    }
}

#[derive(Serialize)]
struct BenchRow {
    seed: u64,
    nn: usize,
    probes: usize,
    t_mla: f64,
    t_hmm: f64,
    ratio: f64,
}

/// One timing sample of the MLA pipeline and of HMM training plus
/// decoding on the same signal.
pub fn time_pipelines(signal: &[f64], repeat: usize) -> Result<(f64, f64)> {
    let s = Signal::new(signal.to_vec());
    let cfg = PipelineConfig::default();
    let t0 = Instant::now();
    for _ in 0..repeat.max(1) {
        std::hint::black_box(nucleosome::classify(&s, &cfg)?);
    }
    let t_mla = t0.elapsed().as_secs_f64() / repeat.max(1) as f64;
    let t0 = Instant::now();
    std::hint::black_box(hmm::detect(signal, 30, 1e-6)?);
    Ok((t_mla, t0.elapsed().as_secs_f64()))
}

/// Nucleosome count of run `i` out of `n`, spread evenly over the range.
pub fn bench_nn(i: usize, n: usize, lo: usize, hi: usize) -> usize {
    if n <= 1 {
        lo
    } else {
        lo + (hi - lo) * i / (n - 1)
    }
}

fn bench_cmd(c: &BenchCmd, seed: u64) -> Result<()> {
    let BenchCmd::MlaVsHmm { seeds, nn_min, nn_max, snr, repeat, out } = c;
    if nn_min > nn_max {
        return Err(Error::invalid("nn-min exceeds nn-max"));
    }
    let mut rows = Vec::new();
    for i in 0..*seeds {
        let nn = bench_nn(i, *seeds, *nn_min, *nn_max);
        let s = crate::rng::child_seed(seed, i as u64);
        let o = synth::generate(&SynthConfig { nn, snr: *snr, seed: s, ..Default::default() })?;
        let (t_mla, t_hmm) = time_pipelines(&o.signal, *repeat)?;
        rows.push(BenchRow { seed: s, nn, probes: o.signal.len(), t_mla, t_hmm, ratio: t_hmm / t_mla });
    }
    write_atomic(out, &csv_rows(&rows)?)
}
