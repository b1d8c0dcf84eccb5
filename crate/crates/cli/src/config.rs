//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};
use xchurn::bo::BoConfig;
use xchurn::dataio::{SyntheticSpec, SyntheticTask, TaskKind};
use xchurn::methods::{MethodSpec, OverlapMode};
use xchurn::nn::{OptimizerKind, TrainConfig};
use xchurn::protocol::ComparisonConfig;

use crate::CliError;

/// Every recognised key with its default value.
pub const DEFAULTS: &[(&str, &str)] = &[
    ("dataset", "synthetic"),
    ("task", "binary_classification"),
    ("split", ""),
    ("synth.n", "500"),
    ("synth.d", "20"),
    ("synth.class_sep", "1.5"),
    ("synth.noise_sd", "0.5"),
    ("seed", "0"),
    ("seeds", "0..10"),
    ("canonical_seeds", "0,1,2"),
    ("test_frac", "0.2"),
    ("resamples", "10000"),
    ("methods", "bagging:5,deep_ensemble:5,twin:10"),
    ("hidden_dims", "256,256"),
    ("learning_rate", "0.001"),
    ("weight_decay", "0.0001"),
    ("clip_norm", "1"),
    ("batch_size", "64"),
    ("epochs", "30"),
    ("optimizer", "adamw"),
    ("lambda_grid", "0,1,3,10,30,100,300"),
    ("tolerance", "0.02"),
    ("overlap", "bootstrap"),
    ("lambda", "10"),
    ("overlap_modes", "disjoint,bootstrap,shared"),
    ("bo.trials", "50"),
    ("bo.init_random", "5"),
    ("bo.folds", "3"),
    ("bo.delta", "0.02"),
    ("bo.penalty", "100"),
    ("bo.lo", "0.001"),
    ("bo.hi", "10000"),
    ("bo.grid_points", "512"),
    ("bo.fold_seed", "99"),
    ("loop.trajectories", "10"),
    ("loop.budget", "10"),
    ("loop.init_size", "50"),
    ("loop.init_seed", "0"),
    ("triage.sizes", "2,3,5,10"),
    ("triage.subsets", "30"),
    ("triage.review_frac", "0.3"),
    ("nscale.m", "2,3,5,10"),
    ("predictions", ""),
    ("input", ""),
];

/// Where the data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub trajectories: usize,
    pub budget: usize,
    pub init_size: usize,
    pub init_seed: u64,
}

#[derive(Debug, Clone)]
pub struct TriageConfig {
    pub sizes: Vec<usize>,
    pub subsets: usize,
    pub review_frac: f64,
}

/// A fully validated configuration with every default filled in.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: DataSource,
    pub task: TaskKind,
    pub split: Option<PathBuf>,
    /// Seeds the synthetic generator, bootstrap CIs and triage subsets.
    pub seed: u64,
    pub comparison: ComparisonConfig,
    pub methods: Vec<MethodSpec>,
    pub lambda_grid: Vec<f64>,
    pub tolerance: f64,
    pub overlap: OverlapMode,
    pub lambda: f64,
    pub overlap_modes: Vec<OverlapMode>,
    pub bo: BoConfig,
    pub trajectory: TrajectoryConfig,
    pub triage: TriageConfig,
    pub nscale_m: Vec<usize>,
    pub predictions: Option<PathBuf>,
    pub input: Option<PathBuf>,
    resolved: BTreeMap<String, String>,
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
            line: i + 1,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Syntax {
                line: i + 1,
                msg: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Parse a `k=v` override given on the command line.
pub fn parse_override(s: &str) -> Result<(String, String), CliError> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| CliError::config(s, "override must look like `key=value`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::config(key, format!("`{value}` is not {what}"))
}

fn scalar<T: FromStr>(key: &str, v: &str, what: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| bad(key, v, what))
}

fn list<T: FromStr>(key: &str, v: &str, what: &str) -> Result<Vec<T>, CliError> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| scalar(key, s.trim(), what)).collect()
}

/// A comma list of seeds, or a half-open range `a..b`.
fn seed_list(key: &str, v: &str) -> Result<Vec<u64>, CliError> {
    match v.split_once("..") {
        Some((a, b)) => {
            let a: u64 = scalar(key, a.trim(), "a seed")?;
            let b: u64 = scalar(key, b.trim(), "a seed")?;
            Ok((a..b).collect())
        }
        None => list(key, v, "an unsigned integer"),
    }
}

fn parsed<T: FromStr<Err = xchurn::Error>>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|e: xchurn::Error| CliError::config(key, e.to_string()))
}

fn existing(key: &str, v: &str) -> Result<Option<PathBuf>, CliError> {
    if v.is_empty() {
        return Ok(None);
    }
    let p = PathBuf::from(v);
    if !p.exists() {
        return Err(CliError::config(key, format!("path `{v}` does not exist")));
    }
    Ok(Some(p))
}

impl RunConfig {
    /// Defaults, then each layer of overrides in order. Unknown keys are errors.
    pub fn from_layers(layers: &[Vec<(String, String)>]) -> Result<Self, CliError> {
        let mut m: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for layer in layers {
            for (k, v) in layer {
                match m.get_mut(k) {
                    Some(slot) => *slot = v.clone(),
                    None => return Err(CliError::config(k, "unknown key")),
                }
            }
        }
        Self::from_resolved(m)
    }

    /// Read an optional config file, then apply `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut layers = Vec::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.to_path_buf(),
                source: e,
            })?;
            layers.push(parse_pairs(&text)?);
        }
        layers.push(overrides.to_vec());
        Self::from_layers(&layers)
    }

    fn from_resolved(m: BTreeMap<String, String>) -> Result<Self, CliError> {
        let g = |k: &str| m[k].as_str();
        let task: TaskKind = parsed("task", g("task"))?;
        let seed: u64 = scalar("seed", g("seed"), "an unsigned integer")?;

        let data = if g("dataset") == "synthetic" {
            let n = scalar("synth.n", g("synth.n"), "a row count")?;
            let d = scalar("synth.d", g("synth.d"), "a feature count")?;
            let kind = if task.is_classification() {
                SyntheticTask::Classification {
                    class_sep: scalar("synth.class_sep", g("synth.class_sep"), "a real number")?,
                }
            } else {
                SyntheticTask::Regression {
                    noise_sd: scalar("synth.noise_sd", g("synth.noise_sd"), "a real number")?,
                }
            };
            DataSource::Synthetic(SyntheticSpec { n, d, task: kind })
        } else {
            DataSource::File(existing("dataset", g("dataset"))?.unwrap())
        };

        let hidden_dims = list("hidden_dims", g("hidden_dims"), "a layer width")?;
        let train = TrainConfig {
            hidden_dims,
            learning_rate: scalar("learning_rate", g("learning_rate"), "a real number")?,
            weight_decay: scalar("weight_decay", g("weight_decay"), "a real number")?,
            clip_norm: scalar("clip_norm", g("clip_norm"), "a real number")?,
            batch_size: scalar("batch_size", g("batch_size"), "a batch size")?,
            epochs: scalar("epochs", g("epochs"), "an epoch count")?,
            dropout_p: 0.0,
            optimizer: parsed::<OptimizerKind>("optimizer", g("optimizer"))?,
            task,
        };
        train.validate().map_err(|e| CliError::config("train", e.to_string()))?;

        let mut comparison = ComparisonConfig::new(train);
        comparison.seeds = seed_list("seeds", g("seeds"))?;
        comparison.canonical_seeds = seed_list("canonical_seeds", g("canonical_seeds"))?;
        comparison.test_frac = scalar("test_frac", g("test_frac"), "a fraction")?;
        comparison.resamples = scalar("resamples", g("resamples"), "a resample count")?;
        comparison.ci_seed = seed;
        comparison.validate().map_err(|e| CliError::config("seeds", e.to_string()))?;
        if !(comparison.test_frac > 0.0 && comparison.test_frac < 1.0) {
            return Err(CliError::config("test_frac", "must lie in (0, 1)"));
        }

        let methods = g("methods")
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parsed::<MethodSpec>("methods", s))
            .collect::<Result<Vec<_>, _>>()?;
        if methods.is_empty() {
            return Err(CliError::config("methods", "at least one method is required"));
        }

        let overlap_modes = g("overlap_modes")
            .split(',')
            .map(|s| parsed::<OverlapMode>("overlap_modes", s.trim()))
            .collect::<Result<Vec<_>, _>>()?;

        let mut bo = BoConfig {
            trials: scalar("bo.trials", g("bo.trials"), "a trial count")?,
            init_random: scalar("bo.init_random", g("bo.init_random"), "a trial count")?,
            folds: scalar("bo.folds", g("bo.folds"), "a fold count")?,
            delta: scalar("bo.delta", g("bo.delta"), "a real number")?,
            penalty: scalar("bo.penalty", g("bo.penalty"), "a real number")?,
            lo: scalar("bo.lo", g("bo.lo"), "a real number")?,
            hi: scalar("bo.hi", g("bo.hi"), "a real number")?,
            grid_points: scalar("bo.grid_points", g("bo.grid_points"), "a grid size")?,
            fold_seed: scalar("bo.fold_seed", g("bo.fold_seed"), "an unsigned integer")?,
            ..BoConfig::default()
        };
        bo.overlap = parsed("overlap", g("overlap"))?;
        bo.validate().map_err(|e| CliError::config("bo", e.to_string()))?;

        let lambda_grid: Vec<f64> = list("lambda_grid", g("lambda_grid"), "a real number")?;
        if lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(CliError::config("lambda_grid", "λ values must be finite and ≥ 0"));
        }

        Ok(Self {
            data,
            task,
            split: existing("split", g("split"))?,
            seed,
            comparison,
            methods,
            lambda_grid,
            tolerance: scalar("tolerance", g("tolerance"), "a real number")?,
            overlap: bo.overlap,
            lambda: scalar("lambda", g("lambda"), "a real number")?,
            overlap_modes,
            bo,
            trajectory: TrajectoryConfig {
                trajectories: scalar("loop.trajectories", g("loop.trajectories"), "a count")?,
                budget: scalar("loop.budget", g("loop.budget"), "a count")?,
                init_size: scalar("loop.init_size", g("loop.init_size"), "a count")?,
                init_seed: scalar("loop.init_seed", g("loop.init_seed"), "an unsigned integer")?,
            },
            triage: TriageConfig {
                sizes: list("triage.sizes", g("triage.sizes"), "a subset size")?,
                subsets: scalar("triage.subsets", g("triage.subsets"), "a count")?,
                review_frac: scalar("triage.review_frac", g("triage.review_frac"), "a fraction")?,
            },
            nscale_m: list("nscale.m", g("nscale.m"), "a member count")?,
            predictions: existing("predictions", g("predictions"))?,
            input: existing("input", g("input"))?,
            resolved: m,
        })
    }

    /// Sorted `key=value` lines of the resolved configuration.
    pub fn canonical(&self) -> String {
        self.resolved.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of [`RunConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.resolved.get(key).map(String::as_str)
    }
}
