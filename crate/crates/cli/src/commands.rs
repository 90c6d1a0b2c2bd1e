use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use evingca::data::{gaussian_blobs, generate, load_dataset, scale, SyntheticKind, SyntheticSpec};
use evingca::harness::{
    ablate_many, random_search, summarize, write_trial_jsonl, AblationDataset, Arm, SearchBudget, SearchSpace,
    TrialSummary,
};
use evingca::metrics::{ari, nmi};
use evingca::{cluster, Dataset, EvingcaConfig, IndexKind, RunReport, ScalerKind};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::args::{AblateArgs, BenchArgs, ClusterArgs, DataArgs, GenArgs, ServeArgs, TuneArgs};

/// SHA-256 over the dimension, values and labels of `ds`.
pub fn dataset_hash(ds: &Dataset) -> String {
    let mut h = Sha256::new();
    h.update((ds.dim() as u64).to_le_bytes());
    for v in ds.values() {
        h.update(v.to_le_bytes());
    }
    if let Some(labels) = ds.labels() {
        for l in labels {
            h.update(l.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct DatasetInfo {
    name: String,
    n: usize,
    d: usize,
    sha256: String,
    scaler: ScalerKind,
}

fn info(raw: &Dataset, scaler: ScalerKind) -> DatasetInfo {
    DatasetInfo {
        name: raw.name().to_string(),
        n: raw.len(),
        d: raw.dim(),
        sha256: dataset_hash(raw),
        scaler,
    }
}

/// Writes the reproducibility header to stderr.
fn header(command: &str, seed: u64, datasets: &[&DatasetInfo], config: &impl Serialize) -> Result<()> {
    let mut err = io::stderr().lock();
    writeln!(err, "# evingca {} {command}", env!("CARGO_PKG_VERSION"))?;
    writeln!(err, "# seed: {seed}")?;
    for d in datasets {
        writeln!(
            err,
            "# dataset: {} n={} d={} scaler={} sha256={}",
            d.name, d.n, d.d, d.scaler, d.sha256
        )?;
    }
    writeln!(err, "# config: {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// Unscaled data selected by `args`.
fn load_raw(args: &DataArgs, seed: u64) -> Result<Dataset> {
    if let Some(path) = &args.source.input {
        return load_dataset(path, args.truth.as_deref()).with_context(|| format!("loading {}", path.display()));
    }
    let kind = args.source.kind.expect("clap enforces one source");
    if args.truth.is_some() {
        bail!("--truth applies to --input only; generated data carries its labels");
    }
    gen_dataset(kind, args.n, args.noise, seed)
}

fn gen_dataset(kind: SyntheticKind, n: Option<usize>, noise: Option<f64>, seed: u64) -> Result<Dataset> {
    let mut spec = SyntheticSpec::new(kind, n.unwrap_or(kind.default_points()), seed);
    if let Some(noise) = noise {
        spec = spec.with_noise(noise);
    }
    Ok(generate(&spec)?)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = create_file(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// One `cluster` column, noise as `-1`.
pub fn write_labels<W: Write>(labels: &[i64], mut out: W) -> io::Result<()> {
    writeln!(out, "cluster")?;
    for l in labels {
        writeln!(out, "{l}")?;
    }
    out.flush()
}

#[derive(Serialize)]
struct ClusterOutput<'a> {
    dataset: &'a DatasetInfo,
    config: &'a EvingcaConfig,
    report: &'a RunReport,
    ari: Option<f64>,
    nmi: Option<f64>,
}

pub fn run_cluster(args: &ClusterArgs) -> Result<()> {
    let raw = load_raw(&args.data, args.seed)?;
    let ds = scale(&raw, args.data.scaler);
    let cfg = args.config.apply(ds.len(), args.seed);
    let meta = info(&raw, args.data.scaler);
    header("cluster", args.seed, &[&meta], &cfg)?;

    let out = cluster(&ds, &cfg)?;
    let truth = ds.labels();
    let output = ClusterOutput {
        dataset: &meta,
        config: &cfg,
        report: &out.report,
        ari: truth.map(|t| ari(t, &out.labels.labels)).transpose()?,
        nmi: truth.map(|t| nmi(t, &out.labels.labels)).transpose()?,
    };
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_labels(&out.labels.labels, create_file(&dir.join("labels.csv"))?)?;
            write_json(&dir.join("report.json"), &output)?;
            println!(
                "{} clusters, {} noise, {:.3}s{} -> {}",
                out.report.n_clusters,
                out.report.n_noise,
                out.report.runtime_s,
                output.ari.map(|a| format!(", ari {a:.4}")).unwrap_or_default(),
                dir.display()
            );
        }
        None => {
            write_labels(&out.labels.labels, io::stdout().lock())?;
            eprintln!("{}", serde_json::to_string(&output)?);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TuneSummary<'a> {
    #[serde(flatten)]
    summary: &'a TrialSummary,
    dataset_info: &'a DatasetInfo,
    base_config: &'a EvingcaConfig,
    budget: &'a SearchBudget,
}

pub fn run_tune(args: &TuneArgs) -> Result<()> {
    let raw = load_raw(&args.data, args.seed)?;
    let ds = scale(&raw, args.data.scaler);
    if ds.labels().is_none() {
        bail!("tuning needs ground truth; pass --truth with --input");
    }
    let base = args.config.apply(ds.len(), args.seed);
    let budget = SearchBudget {
        max_trials: args.trials,
        max_seconds: args.seconds,
        ..Default::default()
    };
    let meta = info(&raw, args.data.scaler);
    header("tune", args.seed, &[&meta], &base)?;

    let space = SearchSpace::for_dataset(ds.len());
    let outcome = random_search(&ds, &base, &space, &budget, args.seed)?;
    let summary = summarize(&outcome.log).expect("search runs at least one trial");
    let full = TuneSummary {
        summary: &summary,
        dataset_info: &meta,
        base_config: &base,
        budget: &budget,
    };
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write_trial_jsonl(&outcome.log, create_file(&dir.join("trials.jsonl"))?)?;
            write_json(&dir.join("summary.json"), &full)?;
            println!(
                "best ari {:.4} at trial {} of {} -> {}",
                summary.best_ari,
                summary.best_trial,
                summary.trials,
                dir.display()
            );
        }
        None => {
            write_trial_jsonl(&outcome.log, io::stdout().lock())?;
            eprintln!("{}", serde_json::to_string(&full)?);
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BenchPoint {
    n: usize,
    d: usize,
    seconds: f64,
    /// Time relative to the previous point of the sweep.
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct BenchReport {
    config: EvingcaConfig,
    reps: usize,
    n_sweep: Vec<BenchPoint>,
    d_sweep: Vec<BenchPoint>,
}

/// Four unit-stdev blobs at distance 10 along the first axes, min-max
/// scaled.
fn bench_blobs(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    let centers: Vec<Vec<f64>> = (0..4)
        .map(|c| {
            (0..d)
                .map(|j| if j == c % d { 10.0 * (1 + c / d) as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(scale(
        &gaussian_blobs("bench", n, &centers, &[1.0; 4], seed)?,
        ScalerKind::MinMax,
    ))
}

fn sweep(points: &[(usize, usize)], cfg: &EvingcaConfig, reps: usize, seed: u64) -> Result<Vec<BenchPoint>> {
    let mut out: Vec<BenchPoint> = Vec::new();
    for &(n, d) in points {
        let ds = bench_blobs(n, d, seed)?;
        let cfg = EvingcaConfig {
            min_cluster_size: EvingcaConfig::for_dataset(n).min_cluster_size,
            ..cfg.clone()
        };
        let mut best = f64::INFINITY;
        for _ in 0..reps.max(1) {
            let t = Instant::now();
            cluster(&ds, &cfg)?;
            best = best.min(t.elapsed().as_secs_f64());
        }
        let ratio = out.last().map(|p| best / p.seconds);
        out.push(BenchPoint {
            n,
            d,
            seconds: best,
            ratio,
        });
    }
    Ok(out)
}

pub fn run_bench(args: &BenchArgs) -> Result<()> {
    if args.sizes.is_empty() && args.dims.is_empty() {
        bail!("nothing to benchmark");
    }
    let mut cfg = args.config.apply(args.bench_n, args.seed);
    if args.config.index.is_none() {
        cfg.index = IndexKind::Accelerated;
    }
    header("bench", args.seed, &[], &cfg)?;
    let n_points: Vec<(usize, usize)> = args.sizes.iter().map(|&n| (n, args.bench_dim)).collect();
    let d_points: Vec<(usize, usize)> = args.dims.iter().map(|&d| (args.bench_n, d)).collect();
    let report = BenchReport {
        n_sweep: sweep(&n_points, &cfg, args.reps, args.seed)?,
        d_sweep: sweep(&d_points, &cfg, args.reps, args.seed)?,
        reps: args.reps,
        config: cfg,
    };
    let mut stdout = io::stdout().lock();
    for (title, rows) in [("N sweep", &report.n_sweep), ("d sweep", &report.d_sweep)] {
        if rows.is_empty() {
            continue;
        }
        writeln!(stdout, "{title}")?;
        writeln!(stdout, "{:>8} {:>6} {:>10} {:>7}", "n", "d", "seconds", "ratio")?;
        for p in rows {
            let ratio = p.ratio.map(|r| format!("{r:.2}")).unwrap_or_else(|| "-".into());
            writeln!(stdout, "{:>8} {:>6} {:>10.4} {:>7}", p.n, p.d, p.seconds, ratio)?;
        }
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(&dir.join("bench.json"), &report)?;
    }
    Ok(())
}

fn parse_arm(name: &str) -> Result<Arm> {
    Arm::ALL
        .into_iter()
        .find(|a| a.name() == name)
        .with_context(|| format!("unknown arm {name:?}"))
}

/// Development suite kinds, generated at their default sizes.
const DEV_KINDS: [SyntheticKind; 7] = [
    SyntheticKind::DensityGradient,
    SyntheticKind::Rectangle,
    SyntheticKind::EjectedMass,
    SyntheticKind::SmallLine,
    SyntheticKind::FixedDensityBlobs,
    SyntheticKind::VaryingDensityBlobs,
    SyntheticKind::Gradient50d,
];

pub fn run_ablate(args: &AblateArgs) -> Result<()> {
    let arms: Vec<Arm> = if args.arms.is_empty() {
        Arm::ALL.to_vec()
    } else {
        args.arms.iter().map(|a| parse_arm(a)).collect::<Result<_>>()?
    };
    let mut datasets = Vec::new();
    for path in &args.input {
        let data = load_dataset(path, Some(&args.truth)).with_context(|| format!("loading {}", path.display()))?;
        datasets.push(AblationDataset {
            data,
            development: false,
        });
    }
    if args.dev {
        for kind in DEV_KINDS {
            datasets.push(AblationDataset {
                data: gen_dataset(kind, None, None, args.seed)?,
                development: true,
            });
        }
    }
    let budget = SearchBudget {
        max_trials: args.trials,
        max_seconds: args.seconds,
        reruns: args.reruns,
    };
    let metas: Vec<DatasetInfo> = datasets.iter().map(|d| info(&d.data, ScalerKind::None)).collect();
    let arm_names: Vec<String> = arms.iter().map(Arm::name).collect();
    header(
        "ablate",
        args.seed,
        &metas.iter().collect::<Vec<_>>(),
        &serde_json::json!({ "arms": arm_names, "budget": budget, "alpha": args.alpha }),
    )?;

    let report = ablate_many(&datasets, &arms, &budget, args.seed, args.alpha)?;
    let mut stdout = io::stdout().lock();
    writeln!(
        stdout,
        "{:<24} {:<20} {:>8} {:>8} {:>8}",
        "dataset", "arm", "best", "mean", "std"
    )?;
    for r in &report.rows {
        writeln!(
            stdout,
            "{:<24} {:<20} {:>8.4} {:>8.4} {:>8.4}",
            r.dataset, r.arm, r.best_ari, r.rerun_mean, r.rerun_std
        )?;
    }
    match &report.tests {
        Some(tests) => {
            writeln!(
                stdout,
                "\nWilcoxon signed-rank vs baseline, Holm at alpha={}",
                args.alpha
            )?;
            writeln!(
                stdout,
                "{:<20} {:>4} {:>9} {:>9} {:>12}",
                "arm", "n", "W", "p", "significant"
            )?;
            for t in tests {
                writeln!(
                    stdout,
                    "{:<20} {:>4} {:>9.1} {:>9.4} {:>12}",
                    t.name, t.test.n, t.test.statistic, t.test.p, t.significant
                )?;
            }
        }
        None => writeln!(
            stdout,
            "\nsignificance tests skipped: need at least 5 non-development datasets"
        )?,
    }
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_json(
            &dir.join("ablation.json"),
            &serde_json::json!({ "schema_version": 1, "datasets": metas, "budget": budget, "report": report }),
        )?;
    }
    Ok(())
}

pub fn run_gen(args: &GenArgs) -> Result<()> {
    let ds = gen_dataset(args.kind, args.n, args.noise, args.seed)?;
    let meta = info(&ds, ScalerKind::None);
    header(
        "gen",
        args.seed,
        &[&meta],
        &serde_json::json!({ "kind": args.kind, "n": ds.len(), "noise": args.noise }),
    )?;
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                create_dir(parent)?;
            }
            ds.write_csv(create_file(path)?)?;
        }
        None => ds.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

pub fn run_serve(args: &ServeArgs) -> Result<()> {
    header("serve", 0, &[], &serde_json::json!({ "addr": args.addr.to_string() }))?;
    eprintln!("listening on http://{}", args.addr);
    tokio::runtime::Runtime::new()?.block_on(evingca_service::serve(args.addr))?;
    Ok(())
}
