//! Plain `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tgcn_core::graph::{Basis, GraphKind};
use tgcn_core::metrics::EvalMode;
use tgcn_core::model::{OutputBlock, TGCNConfig, TrainConfig};
use tgcn_core::series::Normalization;

use crate::error::{CliError, CliResult};

/// Which segment `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Val,
    Test,
}

impl std::fmt::Display for EvalSplit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EvalSplit::Val => "val",
            EvalSplit::Test => "test",
        })
    }
}

impl FromStr for EvalSplit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "val" => Ok(EvalSplit::Val),
            "test" => Ok(EvalSplit::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: Option<PathBuf>,
    pub header: bool,
    pub steps_per_day: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub normalization: Normalization,
    pub graph_kind: GraphKind,
    pub sparsity: f64,
    pub band: Option<usize>,
    /// Road-distance matrix for the spatial graph.
    pub road_distances: Option<PathBuf>,
    pub sigma2: Option<f64>,
    pub epsilon: Option<f64>,
    pub model: TGCNConfig,
    pub train: TrainConfig,
    pub workers: usize,
    pub output: PathBuf,
    pub graph: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub mode: EvalMode,
    pub eval_horizon: Option<usize>,
    pub eval_split: EvalSplit,
    pub predict_input: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: None,
            header: false,
            steps_per_day: 288,
            train_frac: 0.7,
            val_frac: 0.1,
            normalization: Normalization::Global,
            graph_kind: GraphKind::Temporal,
            sparsity: 0.05,
            band: None,
            road_distances: None,
            sigma2: None,
            epsilon: None,
            model: TGCNConfig::default(),
            train: TrainConfig::default(),
            workers: 1,
            output: PathBuf::from("out"),
            graph: None,
            checkpoint: None,
            mode: EvalMode::Direct,
            eval_horizon: None,
            eval_split: EvalSplit::Test,
            predict_input: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "data",
    "header",
    "steps_per_day",
    "train_frac",
    "val_frac",
    "normalization",
    "graph_kind",
    "sparsity",
    "band",
    "road_distances",
    "sigma2",
    "epsilon",
    "n_blocks",
    "layers_per_block",
    "channels",
    "cheb_k",
    "kt",
    "input_len",
    "horizon",
    "output_block",
    "basis",
    "epochs",
    "batch_size",
    "lr",
    "lr_decay",
    "decay_every",
    "seed",
    "workers",
    "output",
    "graph",
    "checkpoint",
    "mode",
    "eval_horizon",
    "eval_split",
    "predict_input",
];

const NONE: &str = "none";

fn parse<T: FromStr>(key: &str, v: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{v}`: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, v: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if v == NONE {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| NONE.to_string(), |x| x.to_string())
}

fn fmt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| NONE.to_string(), |x| x.display().to_string())
}

impl ExperimentConfig {
    /// Parses config text. Relative paths are taken relative to `base`.
    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut pairs = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(CliError::Config(format!("line {}: unknown key `{k}`", no + 1)));
            }
            if pairs.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{k}`", no + 1)));
            }
        }
        let mut cfg = Self::default();
        for (k, v) in &pairs {
            cfg.set(k, v, base)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> CliResult<()> {
        let path = |v: &str| -> Option<PathBuf> {
            (v != NONE).then(|| {
                let p = PathBuf::from(v);
                if p.is_absolute() {
                    p
                } else {
                    base.join(p)
                }
            })
        };
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "data" => self.data = path(v),
            "header" => self.header = parse(key, v)?,
            "steps_per_day" => self.steps_per_day = parse(key, v)?,
            "train_frac" => self.train_frac = parse(key, v)?,
            "val_frac" => self.val_frac = parse(key, v)?,
            "normalization" => self.normalization = parse(key, v)?,
            "graph_kind" => self.graph_kind = parse(key, v)?,
            "sparsity" => self.sparsity = parse(key, v)?,
            "band" => self.band = parse_opt(key, v)?,
            "road_distances" => self.road_distances = path(v),
            "sigma2" => self.sigma2 = parse_opt(key, v)?,
            "epsilon" => self.epsilon = parse_opt(key, v)?,
            "n_blocks" => m.n_blocks = parse(key, v)?,
            "layers_per_block" => m.layers_per_block = parse(key, v)?,
            "channels" => m.channels = parse(key, v)?,
            "cheb_k" => m.cheb_k = parse(key, v)?,
            "kt" => m.kt = parse(key, v)?,
            "input_len" => m.input_len = parse(key, v)?,
            "horizon" => m.horizon = parse(key, v)?,
            "output_block" => m.output_block = parse::<OutputBlock>(key, v)?,
            "basis" => m.basis = parse::<Basis>(key, v)?,
            "epochs" => t.epochs = parse(key, v)?,
            "batch_size" => t.batch_size = parse(key, v)?,
            "lr" => t.lr = parse(key, v)?,
            "lr_decay" => t.lr_decay = parse(key, v)?,
            "decay_every" => t.decay_every = parse(key, v)?,
            "seed" => t.seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "output" => self.output = path(v).unwrap_or_else(|| PathBuf::from(".")),
            "graph" => self.graph = path(v),
            "checkpoint" => self.checkpoint = path(v),
            "mode" => self.mode = parse(key, v)?,
            "eval_horizon" => self.eval_horizon = parse_opt(key, v)?,
            "eval_split" => self.eval_split = parse(key, v)?,
            "predict_input" => self.predict_input = path(v),
            other => return Err(CliError::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn value_of(&self, key: &str) -> String {
        let (m, t) = (&self.model, &self.train);
        match key {
            "data" => fmt_path(&self.data),
            "header" => self.header.to_string(),
            "steps_per_day" => self.steps_per_day.to_string(),
            "train_frac" => self.train_frac.to_string(),
            "val_frac" => self.val_frac.to_string(),
            "normalization" => self.normalization.to_string(),
            "graph_kind" => self.graph_kind.to_string(),
            "sparsity" => self.sparsity.to_string(),
            "band" => fmt_opt(&self.band),
            "road_distances" => fmt_path(&self.road_distances),
            "sigma2" => fmt_opt(&self.sigma2),
            "epsilon" => fmt_opt(&self.epsilon),
            "n_blocks" => m.n_blocks.to_string(),
            "layers_per_block" => m.layers_per_block.to_string(),
            "channels" => m.channels.to_string(),
            "cheb_k" => m.cheb_k.to_string(),
            "kt" => m.kt.to_string(),
            "input_len" => m.input_len.to_string(),
            "horizon" => m.horizon.to_string(),
            "output_block" => m.output_block.to_string(),
            "basis" => m.basis.to_string(),
            "epochs" => t.epochs.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "lr" => t.lr.to_string(),
            "lr_decay" => t.lr_decay.to_string(),
            "decay_every" => t.decay_every.to_string(),
            "seed" => t.seed.to_string(),
            "workers" => self.workers.to_string(),
            "output" => self.output.display().to_string(),
            "graph" => fmt_path(&self.graph),
            "checkpoint" => fmt_path(&self.checkpoint),
            "mode" => self.mode.to_string(),
            "eval_horizon" => fmt_opt(&self.eval_horizon),
            "eval_split" => self.eval_split.to_string(),
            "predict_input" => fmt_path(&self.predict_input),
            other => unreachable!("no key `{other}`"),
        }
    }

    /// Every key with its effective value; parses back to the same config.
    pub fn resolved_text(&self) -> String {
        let mut out = String::from("# resolved configuration\n");
        for key in KEYS {
            writeln!(out, "{key} = {}", self.value_of(key)).unwrap();
        }
        out
    }

    /// Makes every path absolute so the resolved file works from anywhere.
    pub fn absolutize(&mut self) -> CliResult<()> {
        let abs = |p: &mut PathBuf| -> CliResult<()> {
            *p = std::path::absolute(&*p).map_err(|e| CliError::io(p, e))?;
            Ok(())
        };
        for p in [
            &mut self.data,
            &mut self.road_distances,
            &mut self.graph,
            &mut self.checkpoint,
            &mut self.predict_input,
        ]
        .into_iter()
        .flatten()
        {
            abs(p)?;
        }
        abs(&mut self.output)
    }

    pub fn data_path(&self) -> CliResult<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::Config("no `data` file configured".into()))
    }

    pub fn graph_path(&self) -> PathBuf {
        self.graph.clone().unwrap_or_else(|| self.output.join("graph.csv"))
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.output.join("model.ckpt"))
    }

    pub fn validate(&self) -> CliResult<()> {
        let frac_ok = self.train_frac > 0.0
            && self.val_frac > 0.0
            && self.train_frac + self.val_frac < 1.0;
        if !frac_ok {
            return Err(CliError::Config(format!(
                "split fractions {} / {} must be positive and sum below 1",
                self.train_frac, self.val_frac
            )));
        }
        if !(self.sparsity > 0.0 && self.sparsity <= 1.0) {
            return Err(CliError::Config(format!("sparsity {} must lie in (0, 1]", self.sparsity)));
        }
        if self.steps_per_day == 0 || self.workers == 0 {
            return Err(CliError::Config("steps_per_day and workers must be at least 1".into()));
        }
        self.model.validate()?;
        self.train.validate()?;
        Ok(())
    }
}
