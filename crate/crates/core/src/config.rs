//! Flat `key = value` run configuration.
//!
//! ```text
//! # network
//! channels = 16
//! rfa_count = 2
//! qps = 27,37
//! loss = focal
//! alphas = 27:0.25,37:0.35
//! ```
//! Unknown keys are rejected. [`RunConfig::to_text`] writes every key, so the
//! echo of a run reproduces it exactly.

use std::fs;
use std::path::{Path, PathBuf};

use crate::codec::CodecConfig;
use crate::dataset::BuildOptions;
use crate::error::{Error, Result};
use crate::net::{NetworkConfig, QpDomain, QpEncoding, Variant};
use crate::train::{LossConfig, LossMode, Schedule, TrainProtocol};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub codec: CodecConfig,
    pub build: BuildOptions,
    pub valid_ratio: f64,
    pub schedule: Schedule,
    pub anchor_qp: i32,
    pub warm_start_lr: f64,
    pub loss: LossConfig,
    pub init_seed: u64,
    pub checkpoint_every: usize,
    pub train_data: Option<PathBuf>,
    pub valid_data: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub init_weights: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let network = NetworkConfig::default();
        let build = BuildOptions {
            qps: network.qp_domain.qps().to_vec(),
            ..Default::default()
        };
        RunConfig {
            codec: build.codec,
            network,
            build,
            valid_ratio: 7.0 / 8.0,
            schedule: Schedule::default(),
            anchor_qp: 37,
            warm_start_lr: 1e-5,
            loss: LossConfig::default(),
            init_seed: 0,
            checkpoint_every: 0,
            train_data: None,
            valid_data: None,
            out_dir: None,
            init_weights: None,
        }
    }
}

fn cfg_err(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = {value:?}: expected {what}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| cfg_err(key, value, what))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(cfg_err(key, value, "a boolean")),
    }
}

pub fn parse_qp_list(value: &str) -> Result<Vec<i32>> {
    value
        .split(',')
        .map(|q| q.trim().parse::<i32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| cfg_err("qps", value, "a comma-separated QP list"))
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub const KEYS: &'static [&'static str] = &[
        "channels",
        "rfa_count",
        "variant",
        "qps",
        "qp_encoding",
        "block_size",
        "deblock",
        "dc_prediction",
        "patch",
        "stride",
        "psnr_low",
        "psnr_high",
        "valid_ratio",
        "epochs",
        "batch_size",
        "lr",
        "decay_factor",
        "decay_every",
        "finetune_epochs",
        "finetune_lr",
        "max_steps",
        "anchor_qp",
        "warm_start_lr",
        "loss",
        "alphas",
        "gamma",
        "epsilon",
        "seed",
        "init_seed",
        "checkpoint_every",
        "train_data",
        "valid_data",
        "out_dir",
        "init_weights",
    ];

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut qps: Option<Vec<i32>> = None;
        let mut encoding = QpEncoding::List;
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", no + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "qps" => qps = Some(parse_qp_list(value)?),
                "qp_encoding" => {
                    encoding = match value {
                        "list" => QpEncoding::List,
                        "range" => QpEncoding::Range,
                        _ => return Err(cfg_err(key, value, "list or range")),
                    }
                }
                _ => cfg.set(key, value)?,
            }
        }
        let qps = qps.unwrap_or_else(|| cfg.network.qp_domain.qps().to_vec());
        cfg.network.qp_domain = match encoding {
            QpEncoding::List => QpDomain::list(qps.clone())?,
            QpEncoding::Range => {
                let (lo, hi) = (*qps.iter().min().expect("non-empty"), *qps.iter().max().expect("non-empty"));
                QpDomain::range(lo, hi)?
            }
        };
        cfg.build.qps = qps;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Applies one override. `qps` and `qp_encoding` go through
    /// [`RunConfig::parse`] so the domain stays consistent.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.schedule;
        match key {
            "channels" => self.network.channels = parse_num(key, value, "a positive integer")?,
            "rfa_count" => self.network.rfa_count = parse_num(key, value, "a positive integer")?,
            "variant" => self.network.variant = value.parse::<Variant>().map_err(|_| cfg_err(key, value, "qpam, qp_map or plain"))?,
            "qps" | "qp_encoding" => {
                let mut text = self.to_text();
                text.push_str(&format!("{key} = {value}\n"));
                *self = RunConfig::parse(&text)?;
            }
            "block_size" => self.codec.block_size = parse_num(key, value, "4, 8 or 16")?,
            "deblock" => self.codec.deblock = parse_bool(key, value)?,
            "dc_prediction" => self.codec.dc_prediction = parse_bool(key, value)?,
            "patch" => self.build.patch = parse_num(key, value, "a positive integer")?,
            "stride" => self.build.stride = parse_num(key, value, "a positive integer")?,
            "psnr_low" => self.build.psnr_low = parse_num(key, value, "a number")?,
            "psnr_high" => self.build.psnr_high = parse_num(key, value, "a number")?,
            "valid_ratio" => self.valid_ratio = parse_num(key, value, "a fraction")?,
            "epochs" => s.total_epochs = parse_num(key, value, "a positive integer")?,
            "batch_size" => s.batch_size = parse_num(key, value, "a positive integer")?,
            "lr" => s.initial_lr = parse_num(key, value, "a number")?,
            "decay_factor" => s.decay_factor = parse_num(key, value, "a number")?,
            "decay_every" => s.decay_every = parse_num(key, value, "a positive integer")?,
            "finetune_epochs" => s.finetune_epochs = parse_num(key, value, "a positive integer")?,
            "finetune_lr" => s.finetune_lr = parse_num(key, value, "a number")?,
            "max_steps" => {
                s.max_steps = match value {
                    "" | "none" => None,
                    v => Some(parse_num(key, v, "a positive integer or none")?),
                }
            }
            "seed" => s.seed = parse_num(key, value, "an unsigned integer")?,
            "anchor_qp" => self.anchor_qp = parse_num(key, value, "a QP")?,
            "warm_start_lr" => self.warm_start_lr = parse_num(key, value, "a number")?,
            "loss" => self.loss.mode = value.parse::<LossMode>()?,
            "alphas" => self.loss.alphas = LossConfig::parse_alphas(value)?,
            "gamma" => self.loss.gamma = parse_num(key, value, "a number")?,
            "epsilon" => self.loss.epsilon = parse_num(key, value, "a number")?,
            "init_seed" => self.init_seed = parse_num(key, value, "an unsigned integer")?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, value, "an unsigned integer")?,
            "train_data" => self.train_data = opt_path(value),
            "valid_data" => self.valid_data = opt_path(value),
            "out_dir" => self.out_dir = opt_path(value),
            "init_weights" => self.init_weights = opt_path(value),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        self.build.codec = self.codec;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| match e {
            Error::InvalidArgument(m) => Error::Config(m),
            other => other,
        };
        self.network.validate().map_err(cfg)?;
        self.build.validate().map_err(cfg)?;
        self.schedule.validate()?;
        self.loss.validate(&[])?;
        if !(self.valid_ratio > 0.0 && self.valid_ratio < 1.0) {
            return Err(Error::Config(format!("valid_ratio {} outside (0, 1)", self.valid_ratio)));
        }
        if !(self.warm_start_lr > 0.0) {
            return Err(Error::Config("warm_start_lr must be positive".into()));
        }
        Ok(())
    }

    pub fn protocol(&self, kind: &str) -> Result<TrainProtocol> {
        Ok(match kind.parse::<TrainProtocol>()? {
            TrainProtocol::Separate { .. } => TrainProtocol::Separate {
                anchor_qp: self.anchor_qp,
                warm_start_lr: self.warm_start_lr,
            },
            p => p,
        })
    }

    /// Every key with its resolved value.
    pub fn to_text(&self) -> String {
        let s = &self.schedule;
        let n = &self.network;
        let qps: Vec<String> = n.qp_domain.qps().iter().map(|q| q.to_string()).collect();
        let encoding = match n.qp_domain.encoding() {
            QpEncoding::List => "list",
            QpEncoding::Range => "range",
        };
        let lines = [
            ("channels", n.channels.to_string()),
            ("rfa_count", n.rfa_count.to_string()),
            ("variant", n.variant.tag().to_string()),
            ("qps", qps.join(",")),
            ("qp_encoding", encoding.to_string()),
            ("block_size", self.codec.block_size.to_string()),
            ("deblock", self.codec.deblock.to_string()),
            ("dc_prediction", self.codec.dc_prediction.to_string()),
            ("patch", self.build.patch.to_string()),
            ("stride", self.build.stride.to_string()),
            ("psnr_low", self.build.psnr_low.to_string()),
            ("psnr_high", self.build.psnr_high.to_string()),
            ("valid_ratio", self.valid_ratio.to_string()),
            ("epochs", s.total_epochs.to_string()),
            ("batch_size", s.batch_size.to_string()),
            ("lr", s.initial_lr.to_string()),
            ("decay_factor", s.decay_factor.to_string()),
            ("decay_every", s.decay_every.to_string()),
            ("finetune_epochs", s.finetune_epochs.to_string()),
            ("finetune_lr", s.finetune_lr.to_string()),
            ("max_steps", s.max_steps.map(|m| m.to_string()).unwrap_or_else(|| "none".into())),
            ("anchor_qp", self.anchor_qp.to_string()),
            ("warm_start_lr", self.warm_start_lr.to_string()),
            ("loss", self.loss.mode.to_string()),
            ("alphas", self.loss.alphas_text()),
            ("gamma", self.loss.gamma.to_string()),
            ("epsilon", self.loss.epsilon.to_string()),
            ("seed", s.seed.to_string()),
            ("init_seed", self.init_seed.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("train_data", path_text(&self.train_data)),
            ("valid_data", path_text(&self.valid_data)),
            ("out_dir", path_text(&self.out_dir)),
            ("init_weights", path_text(&self.init_weights)),
        ];
        debug_assert_eq!(lines.len(), Self::KEYS.len());
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
