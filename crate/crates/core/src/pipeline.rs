//! File-level operations behind each command-line subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use crate::codec::{encode_decode_with_stats, load_luma, save_pgm, CodecConfig, FramePlane};
use crate::config::RunConfig;
use crate::dataset::{build_dataset, list_images, report_csv, shuffle_mix, split_train_valid, BuildOptions, DatasetFile};
use crate::error::{invalid, Error, Result};
use crate::eval::{
    bd_rate, bd_report_csv, filter_frame, gain_rate_cdf, mse, parse_rd_csv, psnr, rd_curve, rd_gate, ssim,
    tensor_to_plane, MetricsRow, RdRow, DEFAULT_LAMBDA_SCALE,
};
use crate::net::{load_weights, load_weights_any, save_weights, QpalfWeights};
use crate::par::Exec;
use crate::train::{train, LossMode, TrainOptions, TrainProtocol};

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncodeReport {
    pub qp: i32,
    pub bpp: f64,
    pub mse: f64,
    pub psnr: f64,
    pub ssim: Option<f64>,
}

pub const ENCODE_HEADER: &str = "qp,bpp,mse,psnr,ssim";

impl EncodeReport {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.6},{:.6},{},{}",
            self.qp,
            self.bpp,
            self.mse,
            crate::eval::format_db(self.psnr),
            self.ssim.map(|s| format!("{s:.6}")).unwrap_or_default()
        )
    }
}

/// Codes one image and writes the reconstruction as PGM.
pub fn encode_file(input: &Path, dims: Option<(usize, usize)>, codec: &CodecConfig, out: &Path) -> Result<EncodeReport> {
    codec.validate()?;
    let orig = load_luma(input, dims)?;
    let coded = encode_decode_with_stats(&orig, codec)?;
    save_pgm(&coded.recon, out)?;
    let small = orig.width() < 11 || orig.height() < 11;
    Ok(EncodeReport {
        qp: codec.qp,
        bpp: coded.bits_per_pixel,
        mse: mse(&orig, &coded.recon)?,
        psnr: psnr(&orig, &coded.recon)?,
        ssim: if small { None } else { Some(ssim(&orig, &coded.recon)?) },
    })
}

#[derive(Clone, Debug)]
pub struct BuildRequest {
    pub images_dir: PathBuf,
    pub options: BuildOptions,
    pub out: PathBuf,
    /// Image-level validation split written here, when set.
    pub valid_out: Option<PathBuf>,
    pub valid_ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildSummary {
    pub train_records: usize,
    pub valid_records: Option<usize>,
    pub train_images: Vec<PathBuf>,
    pub valid_images: Vec<PathBuf>,
}

/// `train.qpds` gets its report at `train.report.csv`.
pub fn report_path_for(dataset: &Path) -> PathBuf {
    dataset.with_extension("report.csv")
}

pub fn build_dataset_files(req: &BuildRequest, exec: Exec) -> Result<BuildSummary> {
    let images = list_images(&req.images_dir)?;
    let (train_images, valid_images) = match req.valid_out {
        Some(_) => split_train_valid(&images, req.valid_ratio, req.seed)?,
        None => (images, Vec::new()),
    };
    let (data, report) = build_dataset(&train_images, &req.options, exec)?;
    let data = shuffle_mix(vec![data], req.seed)?;
    data.save(&req.out)?;
    write(&report_path_for(&req.out), report_csv(&report))?;
    let mut valid_records = None;
    if let Some(vpath) = &req.valid_out {
        let (valid, vreport) = build_dataset(&valid_images, &req.options, exec)?;
        valid.save(vpath)?;
        write(&report_path_for(vpath), report_csv(&vreport))?;
        valid_records = Some(valid.len());
    }
    Ok(BuildSummary {
        train_records: data.len(),
        valid_records,
        train_images,
        valid_images,
    })
}

pub const RESOLVED_CONFIG: &str = "resolved.cfg";

/// Trains per `cfg` and writes `<tag>.qpw`, `<tag>_history.csv` and the
/// resolved configuration into the output directory. Returns the weight
/// paths.
pub fn run_training(cfg: &RunConfig, protocol: TrainProtocol, exec: Exec) -> Result<Vec<PathBuf>> {
    let mut cfg = cfg.clone();
    if protocol == TrainProtocol::FinetuneFocal {
        cfg.loss.mode = LossMode::Focal;
    }
    let out = cfg
        .out_dir
        .clone()
        .ok_or_else(|| Error::Config("out_dir is not set".into()))?;
    let train_path = cfg
        .train_data
        .clone()
        .ok_or_else(|| Error::Config("train_data is not set".into()))?;
    ensure_dir(&out)?;
    write(
        &out.join(RESOLVED_CONFIG),
        format!("# protocol = {protocol}\n{}", cfg.to_text()),
    )?;

    let data = DatasetFile::load(&train_path)?;
    let valid = cfg.valid_data.as_ref().map(DatasetFile::load).transpose()?;
    let init = match (&cfg.init_weights, protocol) {
        (Some(p), _) => load_weights(p, &cfg.network)?,
        (None, TrainProtocol::FinetuneFocal) => {
            return Err(Error::Config("the focal protocol needs initial weights (--init)".into()))
        }
        (None, _) => QpalfWeights::init(&cfg.network, cfg.init_seed)?,
    };
    let opts = TrainOptions {
        exec,
        checkpoint_dir: Some(out.clone()),
        checkpoint_every: cfg.checkpoint_every,
        ..Default::default()
    };
    let models = train(init, &data, valid.as_ref(), &cfg.schedule, protocol, &cfg.loss, &opts)?;
    let mut paths = Vec::with_capacity(models.len());
    for m in models {
        let wpath = out.join(format!("{}.qpw", m.tag));
        save_weights(&m.weights, &wpath)?;
        write(&out.join(format!("{}_history.csv", m.tag)), m.history.to_csv())?;
        paths.push(wpath);
    }
    Ok(paths)
}

/// Filters every record with 8-bit re-quantized output. The flag reports the
/// gate decision for that patch.
pub fn evaluate_dataset(weights: &QpalfWeights, data: &DatasetFile, batch: usize, exec: Exec) -> Result<Vec<MetricsRow>> {
    let p = data.patch_size();
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut rows = Vec::with_capacity(data.len());
    for chunk in idx.chunks(batch.max(1)) {
        let b = data.batch(chunk);
        let pred = weights.infer(&b.recon, &b.qps)?;
        let per = p * p;
        let chunk_rows = exec.map_range(chunk.len(), |i| -> Result<MetricsRow> {
            let rec = &data.records()[chunk[i]];
            let orig = FramePlane::new(p, p, rec.orig.clone())?;
            let input = FramePlane::new(p, p, rec.recon.clone())?;
            let out = tensor_to_plane(&pred.data()[i * per..(i + 1) * per], p, p)?;
            let gate = rd_gate(&orig, &input, &out, rec.qp, DEFAULT_LAMBDA_SCALE, 1)?;
            let (mse_in, mse_out) = (mse(&orig, &input)?, mse(&orig, &out)?);
            let small = p < 11;
            Ok(MetricsRow {
                frame: chunk[i].to_string(),
                qp: rec.qp,
                psnr_in: psnr(&orig, &input)?,
                psnr_out: psnr(&orig, &out)?,
                ssim_in: if small { f64::NAN } else { ssim(&orig, &input)? },
                ssim_out: if small { f64::NAN } else { ssim(&orig, &out)? },
                gain_rate: if mse_in > 0.0 { 1.0 - mse_out / mse_in } else { 0.0 },
                flag: gate.enabled,
            })
        });
        for r in chunk_rows {
            rows.push(r?);
        }
    }
    Ok(rows)
}

pub const METRICS_FILE: &str = "metrics.csv";
pub const CDF_FILE: &str = "gain_rate_cdf.csv";

/// Writes the metrics and gain-rate CDF CSVs; returns the mean gain rate.
pub fn write_eval(rows: &[MetricsRow], out_dir: &Path) -> Result<f64> {
    ensure_dir(out_dir)?;
    write(&out_dir.join(METRICS_FILE), crate::eval::metrics_csv(rows))?;
    let rates: Vec<f64> = rows.iter().map(|r| r.gain_rate).collect();
    write(&out_dir.join(CDF_FILE), gain_rate_cdf(&rates)?.to_csv())?;
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

pub fn eval_files(weights: &Path, valid: &Path, out_dir: &Path, exec: Exec) -> Result<(Vec<MetricsRow>, f64)> {
    let w = load_weights_any(weights)?;
    let data = DatasetFile::load(valid)?;
    if data.is_empty() {
        return Err(invalid!("{}: no records", valid.display()));
    }
    let rows = evaluate_dataset(&w, &data, 32, exec)?;
    let mean = write_eval(&rows, out_dir)?;
    Ok((rows, mean))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FilterReport {
    pub psnr_in: Option<f64>,
    pub psnr_out: Option<f64>,
    pub flag: bool,
}

pub fn filter_file(
    input: &Path,
    orig: Option<&Path>,
    dims: Option<(usize, usize)>,
    qp: i32,
    weights: &Path,
    gate: bool,
    out: &Path,
) -> Result<FilterReport> {
    if gate && orig.is_none() {
        return Err(invalid!("gating needs the original frame (--orig)"));
    }
    let w = load_weights_any(weights)?;
    let recon = load_luma(input, dims)?;
    let orig = orig.map(|p| load_luma(p, dims)).transpose()?;
    if let Some(o) = &orig {
        if !o.same_dims(&recon) {
            return Err(invalid!("original and reconstruction sizes differ"));
        }
    }
    let outcome = filter_frame(&recon, qp, &w, if gate { orig.as_ref() } else { None })?;
    save_pgm(&outcome.output, out)?;
    Ok(FilterReport {
        psnr_in: orig.as_ref().map(|o| psnr(o, &recon)).transpose()?,
        psnr_out: orig.as_ref().map(|o| psnr(o, &outcome.output)).transpose()?,
        flag: outcome.flag,
    })
}

/// Mean rate and PSNR per QP over `images`, optionally after filtering.
/// A filtered frame pays one flag bit.
pub fn rd_points(
    images: &[PathBuf],
    qps: &[i32],
    codec: &CodecConfig,
    filter: Option<(&QpalfWeights, bool)>,
    exec: Exec,
) -> Result<Vec<RdRow>> {
    if images.is_empty() {
        return Err(invalid!("no images for the RD curve"));
    }
    let origs = images.iter().map(|p| load_luma(p, None)).collect::<Result<Vec<_>>>()?;
    let mut qps = qps.to_vec();
    qps.sort_unstable();
    qps.dedup();
    let mut rows = Vec::with_capacity(qps.len());
    for qp in qps {
        let cfg = CodecConfig { qp, ..*codec };
        cfg.validate()?;
        let per = exec.map(&origs, |orig| -> Result<(f64, f64)> {
            let coded = encode_decode_with_stats(orig, &cfg)?;
            let mut bpp = coded.bits_per_pixel;
            let out = match filter {
                Some((w, gate)) => {
                    bpp += 1.0 / (orig.width() * orig.height()) as f64;
                    filter_frame(&coded.recon, qp, w, gate.then_some(orig))?.output
                }
                None => coded.recon,
            };
            Ok((bpp, psnr(orig, &out)?))
        });
        let per = per.into_iter().collect::<Result<Vec<_>>>()?;
        let n = per.len() as f64;
        rows.push(RdRow {
            qp,
            bpp: per.iter().map(|p| p.0).sum::<f64>() / n,
            psnr: per.iter().map(|p| p.1).sum::<f64>() / n,
        });
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// BD-rate of `test` against `anchor` RD CSVs; returns the percentage and
/// the report CSV.
pub fn bdrate_files(anchor: &Path, test: &Path) -> Result<(f64, String)> {
    let a = parse_rd_csv(&read_text(anchor)?)?;
    let t = parse_rd_csv(&read_text(test)?)?;
    let bd = bd_rate(&rd_curve(&a)?, &rd_curve(&t)?)?;
    Ok((bd, bd_report_csv(a.len(), t.len(), bd)))
}
