use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ercot_core::data::io::write_dataset;
use ercot_core::engine::EngineConfig;
use ercot_core::harness::{
    bench, default_output_dir, resolve_dataset, run_experiment, score_file, write_bench, write_scores,
    ExperimentConfig,
};
use ercot_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ercot", version, about = "Evolutionary multiobjective clustering of temporal data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a benchmark dataset as CSV.
    Generate(GenerateArgs),
    /// Run an algorithm several times and write results.
    Run(RunArgs),
    /// Score a partitions CSV against a labelled dataset.
    Score(ScoreArgs),
    /// Time one smoothed time step over sample counts and budgets.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Dataset name (syn1..syn8, bird_flocks).
    name: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset name or CSV path.
    #[arg(long)]
    dataset: Option<String>,
    /// ercot, static, penalty or kmeanscot.
    #[arg(long)]
    algorithm: Option<String>,
    /// Seed of the first run; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Seed of the dataset generator.
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    cmax: Option<usize>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    reinit_p: Option<f64>,
    #[arg(long)]
    cx_rate: Option<f64>,
    #[arg(long)]
    mut_rate: Option<f64>,
    #[arg(long)]
    mut_eta: Option<f64>,
    #[arg(long)]
    cv_folds: Option<usize>,
    /// Cluster count (kmeanscot).
    #[arg(long)]
    k: Option<usize>,
    /// Smoothness weight (kmeanscot).
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Dataset name or CSV path with labels.
    #[arg(long)]
    dataset: String,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    /// CSV with columns t,sample_id,cluster.
    #[arg(long)]
    partitions: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated sample counts.
    #[arg(long, value_delimiter = ',', default_values_t = [200, 400, 800])]
    sizes: Vec<usize>,
    /// Comma-separated evaluation budgets.
    #[arg(long, value_delimiter = ',', default_values_t = [500, 1000])]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    pop: usize,
    #[arg(long, default_value_t = 8)]
    cmax: usize,
    #[arg(long, default_value_t = 500)]
    cv_folds: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        })?),
        None => Box::new(io::stdout()),
    })
}

fn generate(a: GenerateArgs) -> Result<()> {
    let name = a
        .dataset
        .or(a.name)
        .ok_or_else(|| Error::InvalidConfig("no dataset given".into()))?;
    let data = resolve_dataset(&name, a.seed)?;
    write_dataset(&data, sink(a.out.as_deref())?)
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &a.config {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        cfg.apply_text(&text)?;
    }
    let overrides: [(&str, Option<String>); 16] = [
        ("dataset", a.dataset),
        ("algorithm", a.algorithm),
        ("seed", a.seed.map(|v| v.to_string())),
        ("data-seed", a.data_seed.map(|v| v.to_string())),
        ("runs", a.runs.map(|v| v.to_string())),
        ("pop", a.pop.map(|v| v.to_string())),
        ("cmax", a.cmax.map(|v| v.to_string())),
        ("budget", a.budget.map(|v| v.to_string())),
        ("reinit-p", a.reinit_p.map(|v| v.to_string())),
        ("cx-rate", a.cx_rate.map(|v| v.to_string())),
        ("mut-rate", a.mut_rate.map(|v| v.to_string())),
        ("mut-eta", a.mut_eta.map(|v| v.to_string())),
        ("cv-folds", a.cv_folds.map(|v| v.to_string())),
        ("k", a.k.map(|v| v.to_string())),
        ("alpha", a.alpha.map(|v| v.to_string())),
        ("out", a.out.map(|v| v.to_string_lossy().into_owned())),
    ];
    let out_given = overrides[15].1.is_some() || a.config.is_some();
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, &v)?;
        }
    }
    if !out_given {
        cfg.output_dir = default_output_dir(&cfg.dataset, cfg.algorithm);
    }
    let exp = run_experiment(&cfg)?;
    let mut line = format!(
        "{} on {}: {} run(s) written to {}",
        cfg.algorithm,
        cfg.dataset,
        exp.results.len(),
        cfg.output_dir.display()
    );
    if let (Some((m, s)), Some((n, t))) = (exp.mri(), exp.mnmi()) {
        line += &format!("; mRI {m:.4} ± {s:.4}, mNMI {n:.4} ± {t:.4}");
    }
    println!("{line}");
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let data = resolve_dataset(&a.dataset, a.data_seed)?;
    let series = score_file(&a.partitions, &data)?;
    write_scores(&series, sink(a.out.as_deref())?)
}

fn run_bench(a: BenchArgs) -> Result<()> {
    let base = EngineConfig {
        population: a.pop,
        c_max: a.cmax,
        cv_folds: a.cv_folds,
        seed: a.seed,
        ..EngineConfig::default()
    };
    let rows = bench(&a.sizes, &a.budgets, &base, a.repeats)?;
    write_bench(&rows, sink(a.out.as_deref())?)
}

/// A closed stdout (e.g. piping into `head`) is not a failure.
fn broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io { source, .. } => Some(source),
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(source) => Some(source),
            _ => None,
        },
        _ => None,
    };
    io.is_some_and(|s| s.kind() == io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Score(a) => score(a),
        Command::Bench(a) => run_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::from(2)
        }
    }
}
