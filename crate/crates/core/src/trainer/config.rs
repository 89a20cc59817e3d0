use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters and ablation switches for one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub hidden: usize,
    pub dropout: f64,
    /// Pool fraction: top/bottom `r`, middle `2r` of each class.
    pub r: f64,
    /// Fraction of edges whose gradient qualifies them for attachment.
    pub m: f64,
    /// Weight of the intra-class term; inter gets `1 − eta`.
    pub eta: f64,
    /// Synthesized nodes per class for each mixup kind.
    pub k: usize,
    pub warmup: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub weight_decay: f64,
    pub row_normalize: bool,
    pub no_inter: bool,
    pub no_intra: bool,
    pub no_edge: bool,
    pub low_edge: bool,
    /// Compute edge gradients every epoch for the report series, not only
    /// when attachment needs them.
    pub track_edge_gradients: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            hidden: 64,
            dropout: 0.5,
            r: 0.1,
            m: 0.1,
            eta: 0.5,
            k: 10,
            warmup: 20,
            max_epochs: 300,
            patience: 100,
            seed: 0,
            weight_decay: 5e-4,
            row_normalize: true,
            no_inter: false,
            no_intra: false,
            no_edge: false,
            low_edge: false,
            track_edge_gradients: true,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "lr",
    "hidden",
    "dropout",
    "r",
    "m",
    "eta",
    "k",
    "warmup",
    "max_epochs",
    "patience",
    "seed",
    "weight_decay",
    "row_normalize",
    "no_inter",
    "no_intra",
    "no_edge",
    "low_edge",
    "track_edge_gradients",
];

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl TrainConfig {
    /// Sets one field from its textual form. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "lr" => self.lr = parse(key, value)?,
            "hidden" => self.hidden = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "r" => self.r = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "warmup" => self.warmup = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "row_normalize" => self.row_normalize = parse(key, value)?,
            "no_inter" => self.no_inter = parse(key, value)?,
            "no_intra" => self.no_intra = parse(key, value)?,
            "no_edge" => self.no_edge = parse(key, value)?,
            "low_edge" => self.low_edge = parse(key, value)?,
            "track_edge_gradients" => self.track_edge_gradients = parse(key, value)?,
            _ => {
                return Err(Error::config(
                    key,
                    format!("unknown key (expected one of: {})", CONFIG_KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "expected key=value"))?;
        self.set(k, v)
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::config(line, format!("line {}: expected key = value", n + 1))
            })?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every field as `key = value`, parseable by [`from_text`].
    ///
    /// [`from_text`]: TrainConfig::from_text
    pub fn to_text(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let _ = writeln!(out, "{key} = {}", value[key]);
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, msg))
            }
        };
        check(self.lr > 0.0 && self.lr.is_finite(), "lr", format!("{} must be positive", self.lr))?;
        check(self.hidden > 0, "hidden", "must be positive".into())?;
        check((0.0..1.0).contains(&self.dropout), "dropout", format!("{} outside [0, 1)", self.dropout))?;
        check(self.r > 0.0 && self.r <= 0.5, "r", format!("{} outside (0, 0.5]", self.r))?;
        check(self.m > 0.0 && self.m <= 1.0, "m", format!("{} outside (0, 1]", self.m))?;
        check((0.0..=1.0).contains(&self.eta), "eta", format!("{} outside [0, 1]", self.eta))?;
        check(
            self.weight_decay >= 0.0 && self.weight_decay.is_finite(),
            "weight_decay",
            format!("{} must be non-negative", self.weight_decay),
        )?;
        check(self.max_epochs > 0, "max_epochs", "must be positive".into())?;
        check(
            !(self.no_edge && self.low_edge),
            "low_edge",
            "cannot be combined with no_edge".into(),
        )?;
        Ok(())
    }

    /// Whether any mixup phase runs after warmup.
    pub fn mixup_enabled(&self) -> bool {
        !(self.no_inter && self.no_intra)
    }
}
