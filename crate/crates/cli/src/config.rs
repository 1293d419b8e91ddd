//! Experiment configuration from flags and `key=value` files.
//!
//! File keys are the long flag names without dashes prefix, e.g.
//!
//! ```text
//! # 4-shot PT-SNN
//! train = data/train.jsonl
//! test = data/test.jsonl
//! method = ptsnn
//! k = 4
//! m-runs = 3
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. A flag given on the
//! command line overrides the same key from the file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fewshot_core::eval::{EvalConfig, Method};
use fewshot_core::numkit::{AdamWHyper, HeadKind};
use fewshot_core::probe::ProbeConfig;
use fewshot_core::snn::{Aggregator, SoeConfig};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub const KEYS: &[&str] = &[
    "train",
    "test",
    "method",
    "k",
    "m-runs",
    "aggregator",
    "head",
    "hidden",
    "epochs",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "weight-decay",
    "batch-size",
    "prefer-pooled",
    "seed-base",
    "model-tag",
    "out",
    "verbose",
];

/// Parsed `key=value` file contents.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("config line {}: expected key=value", i + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError(format!("config line {}: unknown key {key:?}", i + 1)));
            }
            if map.insert(key.to_owned(), value.trim().to_owned()).is_some() {
                return Err(ConfigError(format!("config line {}: duplicate key {key:?}", i + 1)));
            }
        }
        Ok(Self(map))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The flag value if given, else the parsed file value, else `None`.
    pub fn pick<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, ConfigError>
    where
        T: FromStr,
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.0
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| ConfigError(format!("config key {key}: {e}"))))
            .transpose()
    }
}

/// Training knobs shared by `evaluate` and `train-soe`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainKnobs {
    pub head: Option<HeadKind>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub weight_decay: Option<f64>,
    pub batch_size: Option<usize>,
    pub prefer_pooled: Option<bool>,
}

impl TrainKnobs {
    pub fn merged(self, file: &KeyValues) -> Result<Self, ConfigError> {
        Ok(Self {
            head: file.pick("head", self.head)?,
            hidden: file.pick("hidden", self.hidden)?,
            epochs: file.pick("epochs", self.epochs)?,
            lr: file.pick("lr", self.lr)?,
            beta1: file.pick("beta1", self.beta1)?,
            beta2: file.pick("beta2", self.beta2)?,
            eps: file.pick("eps", self.eps)?,
            weight_decay: file.pick("weight-decay", self.weight_decay)?,
            batch_size: file.pick("batch-size", self.batch_size)?,
            prefer_pooled: file.pick("prefer-pooled", self.prefer_pooled)?,
        })
    }

    pub fn hyper(&self) -> AdamWHyper {
        let d = AdamWHyper::default();
        AdamWHyper {
            lr: self.lr.unwrap_or(d.lr),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            eps: self.eps.unwrap_or(d.eps),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
        }
    }

    pub fn soe(&self) -> Result<SoeConfig, ConfigError> {
        let d = SoeConfig::default();
        let config = SoeConfig {
            hyper: self.hyper(),
            epochs: self.epochs.unwrap_or(d.epochs),
            hidden: self.hidden.unwrap_or(d.hidden),
            head: self.head.unwrap_or(d.head),
            batch_size: self.batch_size.or(d.batch_size),
            prefer_pooled: self.prefer_pooled.unwrap_or(d.prefer_pooled),
        };
        config.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(config)
    }

    pub fn probe(&self) -> Result<ProbeConfig, ConfigError> {
        let d = ProbeConfig::default();
        let config = ProbeConfig {
            hyper: self.hyper(),
            epochs: self.epochs.unwrap_or(d.epochs),
        };
        config.hyper.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(config)
    }
}

/// Fully resolved `evaluate` configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train: PathBuf,
    pub test: PathBuf,
    pub method: Method,
    pub k: usize,
    pub m_runs: usize,
    pub out: PathBuf,
    pub eval: EvalConfig,
}

/// Raw `evaluate` inputs before merging with a config file.
#[derive(Debug, Clone, Default)]
pub struct ExperimentArgs {
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub method: Option<Method>,
    pub k: Option<usize>,
    pub m_runs: Option<usize>,
    pub aggregator: Option<Aggregator>,
    pub seed_base: Option<u64>,
    pub model_tag: Option<String>,
    pub out: Option<PathBuf>,
    pub verbose: Option<bool>,
    pub knobs: TrainKnobs,
}

impl ExperimentConfig {
    pub fn resolve(args: ExperimentArgs, file: &KeyValues) -> Result<Self, ConfigError> {
        let required = |v: Option<PathBuf>, key: &str| {
            v.filter(|p| !p.as_os_str().is_empty())
                .ok_or_else(|| ConfigError(format!("missing required setting `{key}`")))
        };
        let train = required(file.pick("train", args.train)?, "train")?;
        let test = required(file.pick("test", args.test)?, "test")?;
        let out = required(file.pick("out", args.out)?, "out")?;
        let method = file.pick("method", args.method)?.unwrap_or(Method::PtSnn);
        let k = file.pick("k", args.k)?.unwrap_or(4);
        let m_runs = file.pick("m-runs", args.m_runs)?.unwrap_or(3);
        if k == 0 {
            return Err(ConfigError("k must be at least 1".into()));
        }
        if m_runs == 0 {
            return Err(ConfigError("m-runs must be at least 1".into()));
        }
        let knobs = args.knobs.merged(file)?;
        let eval = EvalConfig {
            aggregator: file.pick("aggregator", args.aggregator)?.unwrap_or_default(),
            soe: knobs.soe()?,
            probe: knobs.probe()?,
            seed_base: file.pick("seed-base", args.seed_base)?.unwrap_or(0),
            model_tag: file.pick("model-tag", args.model_tag)?.unwrap_or_default(),
            verbose: file.pick("verbose", args.verbose)?.unwrap_or(false),
        };
        Ok(Self {
            train,
            test,
            method,
            k,
            m_runs,
            out,
            eval,
        })
    }
}
