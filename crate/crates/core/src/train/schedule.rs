use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub total_epochs: usize,
    pub batch_size: usize,
    pub initial_lr: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub finetune_epochs: usize,
    pub finetune_lr: f64,
    pub seed: u64,
    /// Stops after this many optimizer steps, possibly mid-epoch.
    pub max_steps: Option<usize>,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            total_epochs: 100,
            batch_size: 64,
            initial_lr: 1e-4,
            decay_factor: 0.5,
            decay_every: 25,
            finetune_epochs: 50,
            finetune_lr: 1e-5,
            seed: 0,
            max_steps: None,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.total_epochs == 0 || self.batch_size == 0 || self.decay_every == 0 || self.finetune_epochs == 0 {
            return bad("epochs, batch size and decay interval must be positive".into());
        }
        for (name, v) in [
            ("initial_lr", self.initial_lr),
            ("decay_factor", self.decay_factor),
            ("finetune_lr", self.finetune_lr),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_steps == Some(0) {
            return bad("max_steps must be positive".into());
        }
        Ok(())
    }

    pub fn lr_at_epoch(&self, epoch: usize) -> f64 {
        self.initial_lr * self.decay_factor.powi((epoch / self.decay_every) as i32)
    }

    /// The fine-tuning phase: `finetune_epochs` at a constant `finetune_lr`.
    pub fn finetune_phase(&self) -> Schedule {
        Schedule {
            total_epochs: self.finetune_epochs,
            initial_lr: self.finetune_lr,
            decay_factor: 1.0,
            ..self.clone()
        }
    }

    /// Same schedule starting from `lr`.
    pub fn with_initial_lr(&self, lr: f64) -> Schedule {
        Schedule {
            initial_lr: lr,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrainProtocol {
    /// One network over all QPs.
    Combined,
    /// The anchor QP first, then each other QP warm-started from it.
    Separate { anchor_qp: i32, warm_start_lr: f64 },
    /// Continue given weights with the focal loss.
    FinetuneFocal,
}

impl TrainProtocol {
    pub fn separate() -> Self {
        TrainProtocol::Separate {
            anchor_qp: 37,
            warm_start_lr: 1e-5,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TrainProtocol::Combined => "combined",
            TrainProtocol::Separate { .. } => "separate",
            TrainProtocol::FinetuneFocal => "focal",
        }
    }
}

impl fmt::Display for TrainProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TrainProtocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "combined" => Ok(TrainProtocol::Combined),
            "separate" => Ok(TrainProtocol::separate()),
            "focal" | "finetune" => Ok(TrainProtocol::FinetuneFocal),
            other => Err(Error::Config(format!("unknown protocol {other:?} (combined|separate|focal)"))),
        }
    }
}
