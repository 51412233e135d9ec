//! Experiment driver: dataset resolution, repeated runs, scoring, timing and
//! the CSV/JSON files they produce.
//!
//! Files written by [`run_experiment`] into the output directory:
//!
//! | file | columns |
//! |------|---------|
//! | `run_{i}.json` | serialized [`RunResult`] |
//! | `run_{i}_partitions.csv` | `t,sample_id,cluster` |
//! | `per_run.csv` | `run,seed,mri,mnmi` |
//! | `summary.csv` | `algorithm,dataset,runs,mri_mean,mri_std,mnmi_mean,mnmi_std` |
//! | `per_time.csv` | `t,ri_mean,ri_std,nmi_mean,nmi_std,clusters_mean` |
//! | `alpha.csv` | `t,alpha_mean,alpha_std` (ERCOT only) |
//! | `timing.csv` | `run,t,seconds` |
//!
//! Scores are omitted when the dataset has no labels. Standard deviations are
//! sample deviations, zero for a single run.

pub mod config;

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::baselines::run_kmeans_cot;
use crate::data::io::load_dataset;
use crate::data::synthetic::{gen_moving_gaussians, named_dataset, GaussianClusterSpec, DATASET_NAMES};
use crate::data::TemporalDataset;
use crate::engine::{run_strategy, run_time_step, EngineConfig, RunResult, Strategy};
use crate::error::{Error, Result};
use crate::genome::Partition;
use crate::metrics::{score_partitions, ScoreSeries};

pub use config::{Algorithm, ExperimentConfig};

/// Built-in name (generated with `seed`) or path to a dataset CSV.
pub fn resolve_dataset(spec: &str, seed: u64) -> Result<TemporalDataset> {
    let lower = spec.to_ascii_lowercase();
    if DATASET_NAMES.contains(&lower.as_str()) {
        return named_dataset(&lower, seed);
    }
    let path = Path::new(spec);
    if path.is_file() {
        return load_dataset(path);
    }
    Err(Error::UnknownDataset(spec.to_string()))
}

pub fn run_algorithm(
    data: &TemporalDataset,
    algorithm: Algorithm,
    engine: &EngineConfig,
    k: Option<usize>,
    alpha: f64,
) -> Result<RunResult> {
    match algorithm {
        Algorithm::Ercot => run_strategy(data, engine, Strategy::Ercot),
        Algorithm::Static => run_strategy(data, engine, Strategy::Static),
        Algorithm::Penalty => run_strategy(data, engine, Strategy::Penalty),
        Algorithm::KMeansCot => {
            let k = k.ok_or_else(|| Error::InvalidConfig("kmeanscot needs k".into()))?;
            run_kmeans_cot(data, k, alpha, engine)
        }
    }
}

/// Mean and sample standard deviation; the deviation is 0 below two values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// In-memory outcome of an experiment.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub results: Vec<RunResult>,
    /// One series per run when the dataset is labelled.
    pub scores: Option<Vec<ScoreSeries>>,
}

impl Experiment {
    pub fn mri(&self) -> Option<(f64, f64)> {
        self.scores
            .as_ref()
            .map(|s| mean_std(&s.iter().map(|x| x.m_ri).collect::<Vec<_>>()))
    }

    pub fn mnmi(&self) -> Option<(f64, f64)> {
        self.scores
            .as_ref()
            .map(|s| mean_std(&s.iter().map(|x| x.m_nmi).collect::<Vec<_>>()))
    }

    /// Mean alpha per time index over runs, for times that have one.
    pub fn mean_alpha(&self) -> Vec<(usize, f64, f64)> {
        let Some(first) = self.results.first() else {
            return Vec::new();
        };
        (0..first.steps.len())
            .filter_map(|k| {
                let vals: Vec<f64> = self.results.iter().filter_map(|r| r.steps[k].alpha).collect();
                (!vals.is_empty()).then(|| {
                    let (m, s) = mean_std(&vals);
                    (first.steps[k].t, m, s)
                })
            })
            .collect()
    }
}

/// Run `cfg.runs` independent runs on `data`; run `i` uses seed `seed + i`.
pub fn run_runs(data: &TemporalDataset, cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let results: Vec<RunResult> = (0..cfg.runs)
        .into_par_iter()
        .map(|i| {
            let engine = EngineConfig {
                seed: cfg.engine.seed.wrapping_add(i as u64),
                ..cfg.engine.clone()
            };
            run_algorithm(data, cfg.algorithm, &engine, cfg.k, cfg.alpha)
        })
        .collect::<Result<_>>()?;
    let scores = if data.has_labels() {
        Some(
            results
                .iter()
                .map(|r| score_partitions(&r.partitions(), data))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    Ok(Experiment { results, scores })
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn write_partitions<W: Write>(partitions: &[Partition], times: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "sample_id", "cluster"])?;
    for (p, t) in partitions.iter().zip(times) {
        for (id, c) in p.iter() {
            w.write_record([t.to_string(), id.to_string(), c.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Partitions in time order from a `t,sample_id,cluster` CSV.
pub fn read_partitions<R: Read>(input: R) -> Result<Vec<(usize, Partition)>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "sample_id", "cluster"] {
        return Err(Error::Parse {
            line: 1,
            reason: "expected header t,sample_id,cluster".into(),
        });
    }
    let mut groups: Vec<(usize, Vec<(u64, usize)>)> = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |k: usize| -> Result<u64> {
            rec.get(k).and_then(|v| v.trim().parse().ok()).ok_or_else(|| Error::Parse {
                line,
                reason: format!("bad field {}", k + 1),
            })
        };
        let (t, id, c) = (field(0)? as usize, field(1)?, field(2)? as usize);
        match groups.last_mut() {
            Some((last, rows)) if *last == t => rows.push((id, c)),
            Some((last, _)) if *last > t => {
                return Err(Error::Parse {
                    line,
                    reason: "time indices must be ascending".into(),
                })
            }
            _ => groups.push((t, vec![(id, c)])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|(t, rows)| {
            let mut active: Vec<usize> = rows.iter().map(|r| r.1).collect();
            active.sort_unstable();
            active.dedup();
            (t, Partition::new(rows, active))
        })
        .collect())
}

/// Score a partitions CSV against a labelled dataset.
pub fn score_file(path: &Path, data: &TemporalDataset) -> Result<ScoreSeries> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parts: Vec<Partition> = read_partitions(f)?.into_iter().map(|(_, p)| p).collect();
    score_partitions(&parts, data)
}

pub fn write_scores<W: Write>(s: &ScoreSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "ri", "nmi"])?;
    for p in &s.per_time {
        w.write_record([p.t.to_string(), p.ri.to_string(), p.nmi.to_string()])?;
    }
    w.write_record(["mean".to_string(), s.m_ri.to_string(), s.m_nmi.to_string()])?;
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Write every output file of an experiment into `dir`.
pub fn write_experiment(exp: &Experiment, cfg: &ExperimentConfig, dataset: &str, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, r) in exp.results.iter().enumerate() {
        let json = serde_json::to_string_pretty(r)?;
        let path = dir.join(format!("run_{i}.json"));
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        let times: Vec<usize> = r.steps.iter().map(|s| s.t).collect();
        write_partitions(&r.partitions(), &times, create(&dir.join(format!("run_{i}_partitions.csv")))?)?;
    }

    let mut timing = csv_writer(&dir.join("timing.csv"))?;
    timing.write_record(["run", "t", "seconds"])?;
    for (i, r) in exp.results.iter().enumerate() {
        for s in &r.steps {
            timing.write_record([i.to_string(), s.t.to_string(), s.seconds.to_string()])?;
        }
    }
    timing.flush().map_err(|e| Error::io(dir, e))?;

    if cfg.algorithm == Algorithm::Ercot {
        let mut w = csv_writer(&dir.join("alpha.csv"))?;
        w.write_record(["t", "alpha_mean", "alpha_std"])?;
        for (t, m, s) in exp.mean_alpha() {
            w.write_record([t.to_string(), m.to_string(), s.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }

    let horizon = exp.results.first().map_or(0, |r| r.steps.len());
    let mut per_time = csv_writer(&dir.join("per_time.csv"))?;
    per_time.write_record(["t", "ri_mean", "ri_std", "nmi_mean", "nmi_std", "clusters_mean"])?;
    for k in 0..horizon {
        let t = exp.results[0].steps[k].t;
        let clusters: Vec<f64> = exp.results.iter().map(|r| r.steps[k].n_clusters as f64).collect();
        let (ri, nmi) = match &exp.scores {
            Some(sc) => (
                mean_std(&sc.iter().map(|s| s.per_time[k].ri).collect::<Vec<_>>()),
                mean_std(&sc.iter().map(|s| s.per_time[k].nmi).collect::<Vec<_>>()),
            ),
            None => ((f64::NAN, f64::NAN), (f64::NAN, f64::NAN)),
        };
        per_time.write_record([
            t.to_string(),
            fmt_opt(ri.0),
            fmt_opt(ri.1),
            fmt_opt(nmi.0),
            fmt_opt(nmi.1),
            mean_std(&clusters).0.to_string(),
        ])?;
    }
    per_time.flush().map_err(|e| Error::io(dir, e))?;

    if let Some(scores) = &exp.scores {
        let mut w = csv_writer(&dir.join("per_run.csv"))?;
        w.write_record(["run", "seed", "mri", "mnmi"])?;
        for (i, (r, s)) in exp.results.iter().zip(scores).enumerate() {
            w.write_record([i.to_string(), r.seed.to_string(), s.m_ri.to_string(), s.m_nmi.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(dir, e))?;
    }

    let mut w = csv_writer(&dir.join("summary.csv"))?;
    w.write_record(["algorithm", "dataset", "runs", "mri_mean", "mri_std", "mnmi_mean", "mnmi_std"])?;
    let (mri, mnmi) = (exp.mri(), exp.mnmi());
    w.write_record([
        cfg.algorithm.name().to_string(),
        dataset.to_string(),
        exp.results.len().to_string(),
        fmt_opt(mri.map_or(f64::NAN, |v| v.0)),
        fmt_opt(mri.map_or(f64::NAN, |v| v.1)),
        fmt_opt(mnmi.map_or(f64::NAN, |v| v.0)),
        fmt_opt(mnmi.map_or(f64::NAN, |v| v.1)),
    ])?;
    w.flush().map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// Empty string for a missing value.
fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Resolve the dataset, run, and write outputs to `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Experiment> {
    cfg.validate()?;
    let data = resolve_dataset(&cfg.dataset, cfg.data_seed)?;
    let exp = run_runs(&data, cfg)?;
    write_experiment(&exp, cfg, &data.name, &cfg.output_dir)?;
    Ok(exp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub samples: usize,
    pub budget: usize,
    /// Median wall-clock seconds of one ERCOT time step with accumulation.
    pub seconds: f64,
}

/// Two-snapshot dataset of four drifting 2-D Gaussian clusters, `samples` in total.
pub fn bench_dataset(samples: usize, seed: u64) -> Result<TemporalDataset> {
    let base = samples / 4;
    let specs = [[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]]
        .iter()
        .enumerate()
        .map(|(c, m)| GaussianClusterSpec::new(m.to_vec(), 0.5, base + usize::from(c < samples % 4)))
        .collect();
    gen_moving_gaussians(specs, 2, 2, vec![0.3, 0.3], seed)
}

/// Time the second step of ERCOT for every `(size, budget)` cell, taking the
/// median of `repeats` runs.
pub fn bench(sizes: &[usize], budgets: &[usize], base: &EngineConfig, repeats: usize) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for &samples in sizes {
        let data = bench_dataset(samples, base.seed)?;
        let snaps = data.snapshots();
        for &budget in budgets {
            let cfg = EngineConfig { budget, ..base.clone() };
            cfg.validate()?;
            let mut times = Vec::with_capacity(repeats.max(1));
            for rep in 0..repeats.max(1) {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(rep as u64));
                let (state, _) = run_time_step(&snaps[0], None, &cfg, Strategy::Ercot, &mut rng)?;
                let start = Instant::now();
                run_time_step(&snaps[1], Some((&snaps[0], &state)), &cfg, Strategy::Ercot, &mut rng)?;
                times.push(start.elapsed().as_secs_f64());
            }
            times.sort_by(f64::total_cmp);
            rows.push(BenchRow {
                samples,
                budget,
                seconds: times[times.len() / 2],
            });
        }
    }
    Ok(rows)
}

pub fn write_bench<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["samples", "budget", "seconds"])?;
    for r in rows {
        w.write_record([r.samples.to_string(), r.budget.to_string(), r.seconds.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Output directory default: `out/<dataset>_<algorithm>`.
pub fn default_output_dir(dataset: &str, algorithm: Algorithm) -> PathBuf {
    let stem = Path::new(dataset)
        .file_stem()
        .map_or_else(|| dataset.to_string(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("out").join(format!("{stem}_{algorithm}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_cases() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn partitions_round_trip() {
        let p = vec![
            Partition::new(vec![(0, 1), (3, 0), (5, 1)], vec![0, 1]),
            Partition::new(vec![(0, 2), (3, 2), (9, 0)], vec![0, 2]),
        ];
        let mut buf = Vec::new();
        write_partitions(&p, &[1, 2], &mut buf).unwrap();
        let back = read_partitions(buf.as_slice()).unwrap();
        assert_eq!(back[0], (1, p[0].clone()));
        assert_eq!(back[1], (2, p[1].clone()));
    }

    #[test]
    fn unknown_dataset() {
        assert!(matches!(resolve_dataset("syn99", 0), Err(Error::UnknownDataset(_))));
        assert_eq!(resolve_dataset("SYN1", 0).unwrap().horizon(), 10);
    }

    #[test]
    fn bench_sizes() {
        let d = bench_dataset(203, 1).unwrap();
        assert_eq!(d.snapshots()[0].len(), 203);
    }
}
