use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::autograd::{Graph, Real, Tensor, Var};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    Mse,
    Focal,
}

impl fmt::Display for LossMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossMode::Mse => "mse",
            LossMode::Focal => "focal",
        })
    }
}

impl FromStr for LossMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossMode::Mse),
            "focal" => Ok(LossMode::Focal),
            other => Err(Error::Config(format!("unknown loss mode {other:?} (mse|focal)"))),
        }
    }
}

pub fn default_alphas() -> BTreeMap<i32, f64> {
    [(22, 0.1), (27, 0.25), (32, 0.3), (37, 0.35)].into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossConfig {
    pub mode: LossMode,
    pub alphas: BTreeMap<i32, f64>,
    pub gamma: f64,
    pub epsilon: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            mode: LossMode::Mse,
            alphas: default_alphas(),
            gamma: 1.0,
            epsilon: 1e-12,
        }
    }
}

impl LossConfig {
    pub fn focal() -> Self {
        LossConfig {
            mode: LossMode::Focal,
            ..Default::default()
        }
    }

    pub fn alpha(&self, qp: i32) -> Result<f64> {
        self.alphas
            .get(&qp)
            .copied()
            .ok_or_else(|| Error::Config(format!("no focal alpha for qp {qp}")))
    }

    /// Checks the constants, and that every QP in `qps` has an alpha when the
    /// focal loss is selected.
    pub fn validate(&self, qps: &[i32]) -> Result<()> {
        if let Some((q, a)) = self.alphas.iter().find(|(_, a)| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::Config(format!("alpha for qp {q} must be positive, got {a}")));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.mode == LossMode::Focal {
            for &q in qps {
                self.alpha(q)?;
            }
        }
        Ok(())
    }

    /// `22:0.1,27:0.25,…`
    pub fn alphas_text(&self) -> String {
        self.alphas
            .iter()
            .map(|(q, a)| format!("{q}:{a}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_alphas(s: &str) -> Result<BTreeMap<i32, f64>> {
        let bad = || Error::Config(format!("alphas must look like 22:0.1,27:0.25, got {s:?}"));
        s.split(',')
            .map(|item| {
                let (q, a) = item.trim().split_once(':').ok_or_else(bad)?;
                Ok((q.trim().parse().map_err(|_| bad())?, a.trim().parse().map_err(|_| bad())?))
            })
            .collect()
    }

    /// Per-sample loss from reconstruction and input MSE.
    pub fn sample_loss(&self, qp: i32, l_rec: f64, l_init: f64) -> Result<f64> {
        match self.mode {
            LossMode::Mse => Ok(l_rec),
            LossMode::Focal => {
                let alpha = self.alpha(qp)?;
                if self.gamma == 0.0 {
                    return Ok(alpha * l_rec);
                }
                Ok(alpha * l_rec.powf(1.0 + self.gamma) / l_init.max(self.epsilon).powf(self.gamma))
            }
        }
    }
}

/// Per-sample mean squared error of two N×… tensors.
pub fn per_sample_mse<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Vec<f64>> {
    if a.shape() != b.shape() || a.shape().is_empty() {
        return Err(invalid!("shape mismatch {:?} vs {:?}", a.shape(), b.shape()));
    }
    let n = a.shape()[0];
    let per = a.numel() / n.max(1);
    Ok((0..n)
        .map(|i| {
            let s: f64 = a.data()[i * per..(i + 1) * per]
                .iter()
                .zip(&b.data()[i * per..(i + 1) * per])
                .map(|(&x, &y)| {
                    let d = x.to_f64().unwrap_or(f64::NAN) - y.to_f64().unwrap_or(f64::NAN);
                    d * d
                })
                .sum();
            s / per as f64
        })
        .collect())
}

/// Batch MSE: mean over samples of the per-pixel MSE.
pub fn loss_mse<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<f64> {
    let v = per_sample_mse(pred, target)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// `R = 1 - L_rec / max(L_init, eps)` per sample.
pub fn psnr_gain_rate<T: Real>(pred: &Tensor<T>, target: &Tensor<T>, input: &Tensor<T>, epsilon: f64) -> Result<Vec<f64>> {
    let rec = per_sample_mse(pred, target)?;
    let init = per_sample_mse(input, target)?;
    Ok(rec.iter().zip(&init).map(|(r, i)| 1.0 - r / i.max(epsilon)).collect())
}

/// Numeric focal loss, averaged over the batch.
pub fn focal_mse_value<T: Real>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
    input: &Tensor<T>,
    qps: &[i32],
    config: &LossConfig,
) -> Result<f64> {
    let rec = per_sample_mse(pred, target)?;
    let init = per_sample_mse(input, target)?;
    if qps.len() != rec.len() {
        return Err(invalid!("{} QPs for batch of {}", qps.len(), rec.len()));
    }
    let focal = LossConfig {
        mode: LossMode::Focal,
        ..config.clone()
    };
    let mut s = 0.0;
    for ((&q, &r), &i) in qps.iter().zip(&rec).zip(&init) {
        s += focal.sample_loss(q, r, i)?;
    }
    Ok(s / rec.len() as f64)
}

/// Differentiable batch loss. `input` is the network's luma input; it only
/// enters the focal weights and carries no gradient.
pub fn loss_graph<T: Real>(
    g: &mut Graph<T>,
    pred: Var,
    target: Var,
    input: &Tensor<T>,
    qps: &[i32],
    config: &LossConfig,
) -> Result<Var> {
    let rec = g.sample_mse(pred, target)?;
    if config.mode == LossMode::Mse {
        return Ok(g.mean(rec));
    }
    let init = per_sample_mse(input, g.value(target))?;
    if qps.len() != init.len() {
        return Err(invalid!("{} QPs for batch of {}", qps.len(), init.len()));
    }
    let factors = qps
        .iter()
        .zip(&init)
        .map(|(&q, &l)| Ok(T::of(config.alpha(q)? / l.max(config.epsilon).powf(config.gamma))))
        .collect::<Result<Vec<T>>>()?;
    let lifted = if config.gamma == 0.0 {
        rec
    } else {
        g.powf(rec, T::of(1.0 + config.gamma))
    };
    let weighted = g.scale_const(lifted, factors)?;
    Ok(g.mean(weighted))
}
