use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::EngineConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ercot,
    Static,
    Penalty,
    KMeansCot,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ercot => "ercot",
            Algorithm::Static => "static",
            Algorithm::Penalty => "penalty",
            Algorithm::KMeansCot => "kmeanscot",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ercot" => Ok(Algorithm::Ercot),
            "static" | "staticec" => Ok(Algorithm::Static),
            "penalty" | "penaltyec" => Ok(Algorithm::Penalty),
            "kmeanscot" | "k-meanscot" | "kmeans" => Ok(Algorithm::KMeansCot),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Everything needed to run and record a multi-run experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Built-in dataset name or path to a dataset CSV.
    pub dataset: String,
    /// Seed of the dataset generator (ignored for files).
    pub data_seed: u64,
    pub algorithm: Algorithm,
    pub engine: EngineConfig,
    pub runs: usize,
    /// Cluster count for k-meansCOT.
    pub k: Option<usize>,
    /// Smoothness weight for k-meansCOT.
    pub alpha: f64,
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dataset: "syn1".into(),
            data_seed: 0,
            algorithm: Algorithm::Ercot,
            engine: EngineConfig::default(),
            runs: 1,
            k: None,
            alpha: 0.5,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("bad value `{value}` for `{key}`")))
}

impl ExperimentConfig {
    /// Set one field by its key. Keys match the long CLI flags without the
    /// leading dashes.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let e = &mut self.engine;
        match key.as_str() {
            "dataset" => self.dataset = value.trim().to_string(),
            "data-seed" => self.data_seed = parse(&key, value)?,
            "algorithm" => self.algorithm = value.trim().parse()?,
            "seed" => e.seed = parse(&key, value)?,
            "runs" => self.runs = parse(&key, value)?,
            "pop" | "population" => e.population = parse(&key, value)?,
            "cmax" | "c-max" => e.c_max = parse(&key, value)?,
            "budget" => e.budget = parse(&key, value)?,
            "reinit-p" => e.reinit_fraction = parse(&key, value)?,
            "cx-rate" => e.crossover_rate = parse(&key, value)?,
            "mut-rate" => e.mutation_rate = parse(&key, value)?,
            "mut-eta" => e.mutation_eta = parse(&key, value)?,
            "cv-folds" => e.cv_folds = parse(&key, value)?,
            "k" => self.k = Some(parse(&key, value)?),
            "alpha" => self.alpha = parse(&key, value)?,
            "out" | "output-dir" => self.output_dir = PathBuf::from(value.trim()),
            _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` file; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: n + 1,
                reason: format!("expected key=value, got `{line}`"),
            })?;
            self.set(k, v).map_err(|e| Error::Parse {
                line: n + 1,
                reason: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        self.engine.validate()?;
        if self.algorithm == Algorithm::KMeansCot {
            match self.k {
                Some(k) if k >= 2 => {}
                Some(k) => return Err(Error::InvalidConfig(format!("k = {k} < 2"))),
                None => return Err(Error::InvalidConfig("kmeanscot needs --k".into())),
            }
            if !(0.0..=1.0).contains(&self.alpha) {
                return Err(Error::InvalidConfig(format!("alpha {} outside [0, 1]", self.alpha)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_value_text() {
        let cfg = ExperimentConfig::from_text(
            "# experiment\ndataset = syn3\nalgorithm=penalty\nruns = 30\npop=50\nbudget = 500 # half\nreinit_p=0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.dataset, "syn3");
        assert_eq!(cfg.algorithm, Algorithm::Penalty);
        assert_eq!(cfg.runs, 30);
        assert_eq!(cfg.engine.population, 50);
        assert_eq!(cfg.engine.budget, 500);
        assert_eq!(cfg.engine.reinit_fraction, 0.5);
        assert_eq!(cfg.engine.c_max, 8);
    }

    #[test]
    fn reports_bad_lines() {
        let err = ExperimentConfig::from_text("runs=1\nnope\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(ExperimentConfig::from_text("color=blue").is_err());
        assert!(ExperimentConfig::from_text("runs=abc").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.algorithm = Algorithm::KMeansCot;
        assert!(cfg.validate().is_err());
        cfg.k = Some(4);
        assert!(cfg.validate().is_ok());
        cfg.engine.budget = 150;
        assert!(cfg.validate().is_err());
    }
}
