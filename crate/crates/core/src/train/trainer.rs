use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::loss::{loss_graph, per_sample_mse, LossConfig, LossMode};
use super::schedule::{Schedule, TrainProtocol};
use crate::autograd::{AdamState, Graph, Tensor};
use crate::dataset::DatasetFile;
use crate::error::{invalid, Error, Result};
use crate::eval::psnr_from_mse;
use crate::net::{prepare_input, qpalf_forward, save_weights, NetVars, NetworkConfig, QpBatch, QpalfWeights, Variant};
use crate::par::Exec;

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub exec: Exec,
    /// Writes `<tag>_epoch<N>.qpw` here every `checkpoint_every` epochs.
    pub checkpoint_dir: Option<PathBuf>,
    pub checkpoint_every: usize,
    pub tag: String,
    pub valid_batch: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            exec: Exec::default(),
            checkpoint_dir: None,
            checkpoint_every: 0,
            tag: "qpalf".into(),
            valid_batch: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub steps: usize,
    pub train_loss: f64,
    pub valid_loss: Option<f64>,
    pub valid_psnr_gain: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

pub const HISTORY_HEADER: &str = "epoch,lr,train_loss,valid_loss,valid_psnr_gain";

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        let mut s = format!("{HISTORY_HEADER}\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.epoch,
                e.lr,
                e.train_loss,
                opt(e.valid_loss),
                opt(e.valid_psnr_gain)
            );
        }
        s
    }

    pub fn total_steps(&self) -> usize {
        self.epochs.iter().map(|e| e.steps).sum()
    }
}

/// Filter quality on one validation record, in [0, 1] units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleEval {
    pub qp: i32,
    pub mse_in: f64,
    /// Output clipped to [0, 1].
    pub mse_out: f64,
    pub loss: f64,
}

impl SampleEval {
    pub fn psnr_gain(&self) -> f64 {
        psnr_from_mse(self.mse_out, 1.0) - psnr_from_mse(self.mse_in, 1.0)
    }

    pub fn gain_rate(&self) -> f64 {
        1.0 - self.mse_out / self.mse_in
    }
}

/// Runs the network over every record in `data`.
pub fn evaluate_samples(
    weights: &QpalfWeights,
    data: &DatasetFile,
    loss: &LossConfig,
    batch: usize,
) -> Result<Vec<SampleEval>> {
    let mut out = Vec::with_capacity(data.len());
    let idx: Vec<usize> = (0..data.len()).collect();
    for chunk in idx.chunks(batch.max(1)) {
        let b = data.batch(chunk);
        let pred = weights.infer(&b.recon, &b.qps)?;
        let clipped = Tensor::new(pred.shape().to_vec(), pred.data().iter().map(|v| v.clamp(0.0, 1.0)).collect())?;
        let rec = per_sample_mse(&pred, &b.orig)?;
        let out_mse = per_sample_mse(&clipped, &b.orig)?;
        let init = per_sample_mse(&b.recon, &b.orig)?;
        for i in 0..chunk.len() {
            out.push(SampleEval {
                qp: b.qps[i],
                mse_in: init[i],
                mse_out: out_mse[i],
                loss: loss.sample_loss(b.qps[i], rec[i], init[i])?,
            });
        }
    }
    Ok(out)
}

/// Mean PSNR gain per QP.
pub fn gain_by_qp(samples: &[SampleEval]) -> BTreeMap<i32, f64> {
    let mut acc: BTreeMap<i32, (f64, usize)> = BTreeMap::new();
    for s in samples {
        let g = s.psnr_gain();
        if g.is_finite() {
            let e = acc.entry(s.qp).or_default();
            e.0 += g;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(q, (s, n))| (q, s / n as f64)).collect()
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.filter(|x| x.is_finite()).fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn check_consumable(config: &NetworkConfig, data: &DatasetFile) -> Result<()> {
    if config.variant == Variant::Qpam {
        if let Some(q) = data.qps().iter().find(|q| !config.qp_domain.qps().contains(q)) {
            return Err(Error::Config(format!(
                "dataset qp {q} is not in the network QP domain {:?}",
                config.qp_domain.qps()
            )));
        }
    }
    Ok(())
}

/// Optimizes `weights` on `data` following `schedule`.
pub fn fit(
    mut weights: QpalfWeights,
    data: &DatasetFile,
    valid: Option<&DatasetFile>,
    schedule: &Schedule,
    loss: &LossConfig,
    opts: &TrainOptions,
) -> Result<(QpalfWeights, TrainHistory)> {
    schedule.validate()?;
    if data.is_empty() {
        return Err(invalid!("training dataset is empty"));
    }
    loss.validate(data.qps())?;
    check_consumable(&weights.config, data)?;
    if let Some(v) = valid {
        loss.validate(v.qps())?;
    }
    let valid = valid.filter(|v| !v.is_empty());

    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut adam = AdamState::new(&weights.store);
    let mut history = TrainHistory::default();
    let mut step = 0usize;
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..schedule.total_epochs {
        if schedule.max_steps.is_some_and(|m| step >= m) {
            break;
        }
        let lr = schedule.lr_at_epoch(epoch);
        order.shuffle(&mut rng);
        let (mut loss_sum, mut seen, mut steps) = (0.0, 0usize, 0usize);
        for chunk in order.chunks(schedule.batch_size) {
            if schedule.max_steps.is_some_and(|m| step >= m) {
                break;
            }
            let l = train_step(&mut weights, &mut adam, data, chunk, loss, lr, opts.exec)
                .map_err(|e| match e {
                    Error::Numerical(m) => Error::Numerical(format!("epoch {epoch}, step {step}: {m}")),
                    other => other,
                })?;
            loss_sum += l * chunk.len() as f64;
            seen += chunk.len();
            steps += 1;
            step += 1;
        }
        let (valid_loss, valid_psnr_gain) = match valid {
            Some(v) => {
                let s = evaluate_samples(&weights, v, loss, opts.valid_batch)?;
                (mean(s.iter().map(|e| e.loss)), mean(s.iter().map(|e| e.psnr_gain())))
            }
            None => (None, None),
        };
        let rec = EpochRecord {
            epoch,
            lr,
            steps,
            train_loss: loss_sum / seen.max(1) as f64,
            valid_loss,
            valid_psnr_gain,
        };
        log::info!(
            "{} epoch {epoch}: lr {lr:e} train {:.6e} valid {:?} gain {:?} dB",
            opts.tag,
            rec.train_loss,
            valid_loss,
            valid_psnr_gain
        );
        history.epochs.push(rec);
        if let Some(dir) = &opts.checkpoint_dir {
            if opts.checkpoint_every > 0 && (epoch + 1) % opts.checkpoint_every == 0 {
                save_weights(&weights, dir.join(format!("{}_epoch{}.qpw", opts.tag, epoch + 1)))?;
            }
        }
    }
    Ok((weights, history))
}

fn train_step(
    weights: &mut QpalfWeights,
    adam: &mut AdamState<f32>,
    data: &DatasetFile,
    indices: &[usize],
    loss: &LossConfig,
    lr: f64,
    exec: Exec,
) -> Result<f64> {
    let b = data.batch(indices);
    weights.store.zero_grad();
    let mut g = Graph::<f32>::with_exec(exec);
    let vars = NetVars::bind(&mut g, &weights.store, &weights.config, true)?;
    let x = g.constant(prepare_input(&weights.config, &b.recon, &b.qps)?);
    let y = g.constant(b.orig);
    let qb = QpBatch::new(&weights.config.qp_domain, &b.qps)?;
    let pred = qpalf_forward(&mut g, x, &qb, &vars, &weights.config)?;
    let l = loss_graph(&mut g, pred, y, &b.recon, &b.qps, loss)?;
    let value = g.value(l).item() as f64;
    if !value.is_finite() {
        return Err(Error::Numerical(format!("loss is {value}")));
    }
    g.backward(l, &mut weights.store)?;
    adam.step(&mut weights.store, lr as f32);
    if weights.store.iter().any(|p| !p.tensor.all_finite()) {
        return Err(Error::Numerical("non-finite weights after update".into()));
    }
    Ok(value)
}

/// One trained network.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    pub tag: String,
    /// The QP a per-QP model was trained for.
    pub qp: Option<i32>,
    pub weights: QpalfWeights,
    pub history: TrainHistory,
}

/// Trains from `init` under the combined or separate protocol. Separate
/// returns the anchor model first, then the others in ascending QP order.
pub fn train(
    init: QpalfWeights,
    data: &DatasetFile,
    valid: Option<&DatasetFile>,
    schedule: &Schedule,
    protocol: TrainProtocol,
    loss: &LossConfig,
    opts: &TrainOptions,
) -> Result<Vec<TrainedModel>> {
    match protocol {
        TrainProtocol::Combined => {
            let o = TrainOptions { tag: "combined".into(), ..opts.clone() };
            let (weights, history) = fit(init, data, valid, schedule, loss, &o)?;
            Ok(vec![TrainedModel { tag: o.tag, qp: None, weights, history }])
        }
        TrainProtocol::Separate { anchor_qp, warm_start_lr } => {
            if !data.qps().contains(&anchor_qp) {
                return Err(Error::Config(format!("anchor qp {anchor_qp} not in dataset {:?}", data.qps())));
            }
            let subset = |qp: i32| -> Result<(DatasetFile, Option<DatasetFile>)> {
                Ok((data.select_qp(qp)?, valid.map(|v| v.select_qp(qp)).transpose()?))
            };
            let run = |w: QpalfWeights, qp: i32, s: &Schedule| -> Result<TrainedModel> {
                let (d, v) = subset(qp)?;
                let o = TrainOptions { tag: format!("qp{qp}"), ..opts.clone() };
                let (weights, history) = fit(w, &d, v.as_ref(), s, loss, &o)?;
                Ok(TrainedModel { tag: o.tag, qp: Some(qp), weights, history })
            };
            let anchor = run(init, anchor_qp, schedule)?;
            let warm = schedule.with_initial_lr(warm_start_lr);
            let mut out = vec![anchor.clone()];
            for &qp in data.qps().iter().filter(|&&q| q != anchor_qp) {
                out.push(run(anchor.weights.clone(), qp, &warm)?);
            }
            Ok(out)
        }
        TrainProtocol::FinetuneFocal => finetune(init, data, valid, schedule, loss, opts).map(|m| vec![m]),
    }
}

/// Continues `weights` with the focal loss for the fine-tuning phase.
pub fn finetune(
    weights: QpalfWeights,
    data: &DatasetFile,
    valid: Option<&DatasetFile>,
    schedule: &Schedule,
    loss: &LossConfig,
    opts: &TrainOptions,
) -> Result<TrainedModel> {
    if loss.mode != LossMode::Focal {
        return Err(Error::Config("fine-tuning requires the focal loss".into()));
    }
    let o = TrainOptions { tag: "focal".into(), ..opts.clone() };
    let (weights, history) = fit(weights, data, valid, &schedule.finetune_phase(), loss, &o)?;
    Ok(TrainedModel { tag: o.tag, qp: None, weights, history })
}
