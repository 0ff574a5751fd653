//! The `rnnmla` command line: argument definitions and command bodies.
//!
//! Data goes to the `out` writer (stdout in the binary); progress and
//! diagnostics go to stderr.

mod config;
mod report;
mod suite;

pub use config::{RawCluster, RawConfig, RunConfig};
pub use report::{accuracy_pct, bench_csv, bench_table, confusion, BenchCell, RunReport};
pub use suite::{run_suite, Check};

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::cluster_sim::{fixed_point_q, simulate_cluster};
use crate::data::{argmax_rows, gen_synth_blobs, load_split, write_csv_matrix, MultiChannelDataset};
use crate::model::{fit_variant, forward_dataset, load_model, save_model, ModelArtifact, Variant};
use crate::nucleus::{zeta, ClusterParams};

/// Bad invocation: unknown variant, malformed config, conflicting flags.
/// The binary exits with status 2 for these.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(name = "rnnmla", version, about = "Dense-nuclei random neural network classifiers")]
pub struct Cli {
    /// Worker threads for fitting (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on the training split and report test accuracy
    Train(TrainArgs),
    /// Write predicted class ids for every row of a dataset
    Predict(ModelArgs),
    /// Score a saved model on the test split of a dataset
    Eval(ModelArgs),
    /// Run all four variants on one or more datasets
    Bench(BenchArgs),
    /// Sweep the cluster activation against its two oracles
    Simulate(SimulateArgs),
    /// Run the invariant suite
    Validate,
    /// Write a synthetic blobs dataset with its manifest
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Model file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's variant
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Dataset manifest; repeat for several datasets
    #[arg(long, required = true)]
    pub manifest: Vec<PathBuf>,
    /// Also write the cells as CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Take the cluster parameters from a run config
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub lambda_plus: Option<f64>,
    #[arg(long)]
    pub lambda_minus: Option<f64>,
    /// Inhibitory inputs, comma separated
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0])]
    pub x: Vec<f64>,
    /// Simulated time per point
    #[arg(long, default_value_t = 1e5)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory to create the dataset in
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub rows: usize,
    #[arg(long, default_value_t = 4)]
    pub channels: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 25)]
    pub dim: usize,
    #[arg(long, default_value_t = 6.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(UsageError("--threads must be at least 1".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Train(a) => cmd_train(&a, out).map(|_| ()),
        Command::Predict(a) => cmd_predict(&a, out),
        Command::Eval(a) => cmd_eval(&a, out).map(|_| ()),
        Command::Bench(a) => cmd_bench(&a, out).map(|_| ()),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Validate => cmd_validate(out),
        Command::Synth(a) => cmd_synth(&a, out),
    }
}

/// Fit, timing the fit call alone; returns the model and its wall time.
fn timed_fit(cfg: &RunConfig, variant: Variant, data: &MultiChannelDataset) -> anyhow::Result<(ModelArtifact, f64)> {
    let train_cfg = cfg.train_config();
    let start = Instant::now();
    let model = fit_variant(variant, data, &train_cfg).with_context(|| format!("fitting {variant}"))?;
    Ok((model, start.elapsed().as_secs_f64()))
}

fn score(model: &ModelArtifact, test: &MultiChannelDataset) -> anyhow::Result<Vec<Vec<u64>>> {
    let predicted = argmax_rows(&forward_dataset(model, test).context("scoring the test split")?);
    Ok(confusion(&test.class_ids(), &predicted, test.class_count()))
}

fn emit(report: &RunReport, out: &mut dyn Write) -> anyhow::Result<()> {
    write!(out, "{}", report.to_table())?;
    writeln!(out, "{}", report.to_json_line())?;
    Ok(())
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> anyhow::Result<RunReport> {
    let cfg = RawConfig::from_path(&a.config)?.resolve(a.variant.as_deref(), a.seed)?;
    let split = load_split(&a.manifest).with_context(|| format!("dataset {}", a.manifest.display()))?;
    eprintln!(
        "fitting {} on {} ({} train rows, {} channels)",
        cfg.variant,
        split.manifest.name,
        split.train.rows(),
        split.train.channel_count()
    );
    let (mut model, secs) = timed_fit(&cfg, cfg.variant, &split.train)?;
    model.provenance = cfg.to_json().to_string();
    save_model(&model, &a.out).with_context(|| format!("saving {}", a.out.display()))?;
    let conf = score(&model, &split.test)?;
    let report = RunReport {
        variant: cfg.variant,
        dataset: split.manifest.name.clone(),
        accuracy: accuracy_pct(&conf),
        train_time_s: Some(secs),
        seed: cfg.seed,
        train_rows: split.train.rows(),
        test_rows: split.test.rows(),
        confusion: conf,
        config: cfg.to_json(),
    };
    emit(&report, out)?;
    Ok(report)
}

fn open_out(path: &Option<PathBuf>, out: &mut dyn Write, body: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, body).with_context(|| format!("writing {}", p.display())),
        None => out.write_all(body.as_bytes()).map_err(Into::into),
    }
}

fn check_model_fits(model: &ModelArtifact, data: &MultiChannelDataset) -> anyhow::Result<()> {
    if model.channel_dims != data.channel_dims() {
        bail!(
            "model expects channel widths {:?}, dataset has {:?}",
            model.channel_dims,
            data.channel_dims()
        );
    }
    Ok(())
}

pub fn cmd_predict(a: &ModelArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let split = load_split(&a.manifest).with_context(|| format!("dataset {}", a.manifest.display()))?;
    check_model_fits(&model, &split.all)?;
    let predicted = argmax_rows(&forward_dataset(&model, &split.all)?);
    let mut body = String::from("row,predicted\n");
    for (i, p) in predicted.iter().enumerate() {
        body.push_str(&format!("{i},{p}\n"));
    }
    open_out(&a.out, out, &body)
}

pub fn cmd_eval(a: &ModelArgs, out: &mut dyn Write) -> anyhow::Result<RunReport> {
    let model = load_model(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let split = load_split(&a.manifest).with_context(|| format!("dataset {}", a.manifest.display()))?;
    check_model_fits(&model, &split.test)?;
    let conf = score(&model, &split.test)?;
    let config: serde_json::Value = serde_json::from_str(&model.provenance).unwrap_or(serde_json::Value::Null);
    let report = RunReport {
        variant: model.variant,
        dataset: split.manifest.name.clone(),
        accuracy: accuracy_pct(&conf),
        train_time_s: None,
        seed: config.get("seed").and_then(|s| s.as_u64()).unwrap_or(0),
        train_rows: split.train.rows(),
        test_rows: split.test.rows(),
        confusion: conf,
        config,
    };
    let mut text = report.to_table();
    text.push_str(&report.to_json_line());
    text.push('\n');
    open_out(&a.out, out, &text)?;
    Ok(report)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> anyhow::Result<Vec<BenchCell>> {
    let raw = RawConfig::from_path(&a.config)?;
    // the variant key is irrelevant here; every variant is run
    let cfg = raw.resolve(Some(raw.variant.as_deref().unwrap_or("mcrnn_mla")), a.seed)?;
    let mut datasets = Vec::new();
    let mut cells = Vec::new();
    for path in &a.manifest {
        let split = match load_split(path) {
            Ok(s) => s,
            Err(e) => {
                let name = path.display().to_string();
                for v in Variant::ALL {
                    cells.push(BenchCell {
                        variant: v,
                        dataset: name.clone(),
                        outcome: Err(format!("loading dataset: {e}")),
                    });
                }
                datasets.push(name);
                continue;
            }
        };
        let name = split.manifest.name.clone();
        for v in Variant::ALL {
            eprintln!("bench: {v} on {name}");
            let outcome = timed_fit(&cfg, v, &split.train)
                .and_then(|(m, secs)| Ok((accuracy_pct(&score(&m, &split.test)?), secs)))
                .map_err(|e| format!("{e:#}"));
            cells.push(BenchCell {
                variant: v,
                dataset: name.clone(),
                outcome,
            });
        }
        datasets.push(name);
    }
    write!(out, "{}", bench_table(&datasets, &cells))?;
    let failures: Vec<&BenchCell> = cells.iter().filter(|c| c.outcome.is_err()).collect();
    if !failures.is_empty() {
        eprintln!("failed cells:");
        for c in failures {
            if let Err(e) = &c.outcome {
                eprintln!("  {} / {}: {e}", c.variant, c.dataset);
            }
        }
    }
    if let Some(p) = &a.out {
        std::fs::write(p, bench_csv(&cells)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(cells)
}

fn sim_params(a: &SimulateArgs) -> anyhow::Result<ClusterParams> {
    let mut raw = match &a.config {
        Some(p) => RawConfig::from_path(p)?.cluster,
        None => RawCluster::default(),
    };
    let set = |slot: &mut Option<f64>, v: Option<f64>| {
        if v.is_some() {
            *slot = v;
        }
    };
    if a.n.is_some() {
        raw.n = a.n;
    }
    set(&mut raw.p, a.p);
    set(&mut raw.r, a.r);
    if a.lambda.is_some() {
        raw.lambda = a.lambda;
        raw.lambda_plus = None;
        raw.lambda_minus = None;
    }
    if a.lambda_plus.is_some() || a.lambda_minus.is_some() {
        raw.lambda_plus = a.lambda_plus.or(raw.lambda_plus).or(raw.lambda);
        raw.lambda_minus = a.lambda_minus.or(raw.lambda_minus).or(raw.lambda);
        raw.lambda = None;
    }
    let cfg = RawConfig {
        cluster: raw,
        ..RawConfig::default()
    };
    Ok(cfg.resolve(Some("mcrnn_mla"), None)?.cluster)
}

pub fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let params = sim_params(a)?;
    if let Some(x) = a.x.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        bail!(UsageError(format!("x = {x}: sweep values must be finite and >= 0")));
    }
    let mut body = String::from("x,zeta,fixed_point_q,q_hat,std_err\n");
    for (i, &x) in a.x.iter().enumerate() {
        let z = zeta(&params, x)?;
        let fp = fixed_point_q(&params, x, 1e-13, 1_000_000)?;
        let sim = simulate_cluster(&params, x, a.horizon, a.seed.wrapping_add(i as u64))?;
        if sim.insufficient_statistics {
            eprintln!("warning: x = {x}: only {} events in horizon {}", sim.events, a.horizon);
        }
        body.push_str(&format!("{x},{z},{fp},{},{}\n", sim.q_hat, sim.std_err));
    }
    open_out(&a.out, out, &body)
}

pub fn cmd_validate(out: &mut dyn Write) -> anyhow::Result<()> {
    let checks = run_suite();
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag}  {:<width$}  {:>7.2}s  {}", c.name, c.seconds, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} of {} checks failed", checks.len());
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let data = gen_synth_blobs(a.rows, a.channels, a.classes, a.dim, a.separation, a.seed)?;
    write_dataset(&data, &a.out, "blobs", a.seed)?;
    writeln!(out, "{}", a.out.join("manifest.toml").display())?;
    Ok(())
}

/// Write channels, labels and a manifest for `data` under `dir`.
pub fn write_dataset(data: &MultiChannelDataset, dir: &Path, name: &str, seed: u64) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut manifest = format!("name = \"{name}\"\nlabels = \"labels.csv\"\nseed = {seed}\n");
    for (c, (m, cname)) in data.channels().iter().zip(data.channel_names()).enumerate() {
        let file = format!("channel{c}.csv");
        write_csv_matrix(dir.join(&file), m, &[])?;
        manifest.push_str(&format!(
            "\n[[channel]]\nname = \"{cname}\"\npath = \"{file}\"\nrows = {}\ncols = {}\n",
            m.nrows(),
            m.ncols()
        ));
    }
    let mut labels = String::from("label\n");
    for id in data.class_ids() {
        labels.push_str(&format!("{id}\n"));
    }
    std::fs::write(dir.join("labels.csv"), labels)?;
    std::fs::write(dir.join("manifest.toml"), manifest)?;
    Ok(())
}
