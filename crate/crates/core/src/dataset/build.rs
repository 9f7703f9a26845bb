use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::file::DatasetFile;
use super::patches::{
    extract_patches, filter_by_psnr, PatchRecord, DEFAULT_PATCH, DEFAULT_PSNR_HIGH, DEFAULT_PSNR_LOW, DEFAULT_STRIDE,
};
use crate::codec::{encode_decode, load_luma, CodecConfig};
use crate::error::{invalid, Error, Result};
use crate::par::Exec;

#[derive(Clone, Debug, PartialEq)]
pub struct BuildOptions {
    pub qps: Vec<i32>,
    /// Template for every encode; its `qp` is overwritten per pass.
    pub codec: CodecConfig,
    pub patch: usize,
    pub stride: usize,
    pub psnr_low: f64,
    pub psnr_high: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            qps: vec![22, 27, 32, 37],
            codec: CodecConfig::new(22),
            patch: DEFAULT_PATCH,
            stride: DEFAULT_STRIDE,
            psnr_low: DEFAULT_PSNR_LOW,
            psnr_high: DEFAULT_PSNR_HIGH,
        }
    }
}

impl BuildOptions {
    pub fn validate(&self) -> Result<()> {
        if self.qps.is_empty() {
            return Err(invalid!("no QPs to build"));
        }
        for &qp in &self.qps {
            CodecConfig { qp, ..self.codec }.validate()?;
        }
        if self.patch == 0 || self.stride == 0 {
            return Err(invalid!("patch size and stride must be positive"));
        }
        if !(self.psnr_low <= self.psnr_high) {
            return Err(invalid!("PSNR bounds [{}, {}] are empty", self.psnr_low, self.psnr_high));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReportRow {
    pub image: String,
    pub qp: i32,
    pub extracted: usize,
    pub kept: usize,
    pub rejected_low: usize,
    pub rejected_high: usize,
}

pub const REPORT_HEADER: &str = "image,qp,extracted,kept,rejected_low,rejected_high";

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut s = format!("{REPORT_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.image, r.qp, r.extracted, r.kept, r.rejected_low, r.rejected_high
        );
    }
    s
}

/// PGM files in `dir`, sorted by name.
pub fn list_images(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(invalid!("{}: no .pgm images", dir.display()));
    }
    Ok(out)
}

fn image_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Encodes every image at every QP, extracts patches and drops those outside
/// the PSNR range. Images are processed in parallel; records are appended in
/// image-then-QP order so the result does not depend on scheduling.
pub fn build_dataset(images: &[PathBuf], opts: &BuildOptions, exec: Exec) -> Result<(DatasetFile, Vec<ReportRow>)> {
    opts.validate()?;
    if images.is_empty() {
        return Err(invalid!("no input images"));
    }
    let per_image = exec.map(images, |path| -> Result<Option<Vec<(Vec<PatchRecord>, ReportRow)>>> {
        let orig = match load_luma(path, None) {
            Ok(p) => p,
            Err(e) => {
                log::warn!("skipping {}: {e}", path.display());
                return Ok(None);
            }
        };
        let mut parts = Vec::with_capacity(opts.qps.len());
        for &qp in &opts.qps {
            let recon = encode_decode(&orig, &CodecConfig { qp, ..opts.codec })?;
            let all = extract_patches(&recon, &orig, qp, opts.patch, opts.stride)?;
            let extracted = all.len();
            let (kept, c) = filter_by_psnr(all, opts.psnr_low, opts.psnr_high);
            parts.push((
                kept,
                ReportRow {
                    image: image_name(path),
                    qp,
                    extracted,
                    kept: c.kept,
                    rejected_low: c.rejected_low,
                    rejected_high: c.rejected_high,
                },
            ));
        }
        Ok(Some(parts))
    });

    let mut records = Vec::new();
    let mut report = Vec::new();
    for parts in per_image {
        for (recs, row) in parts?.into_iter().flatten() {
            records.extend(recs);
            report.push(row);
        }
    }
    if records.is_empty() {
        return Err(invalid!("dataset build produced no records"));
    }
    Ok((DatasetFile::new(opts.patch, opts.qps.clone(), records)?, report))
}

/// Concatenates datasets and applies a seeded uniform permutation.
pub fn shuffle_mix(files: Vec<DatasetFile>, seed: u64) -> Result<DatasetFile> {
    let patch = files
        .first()
        .ok_or_else(|| invalid!("nothing to mix"))?
        .patch_size();
    let mut qps = Vec::new();
    let mut records = Vec::new();
    for f in files {
        if f.patch_size() != patch {
            return Err(invalid!("cannot mix patch sizes {patch} and {}", f.patch_size()));
        }
        qps.extend_from_slice(f.qps());
        records.extend(f.into_records());
    }
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    DatasetFile::new(patch, qps, records)
}

/// Seeded image-level split; `ratio` is the training fraction. Both parts
/// keep the input order.
pub fn split_train_valid<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let n = items.len();
    if n < 2 {
        return Err(invalid!("need at least 2 images to split, got {n}"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid!("train ratio {ratio} outside (0, 1)"));
    }
    let n_train = ((n as f64 * ratio).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train_idx = idx[..n_train].to_vec();
    let mut valid_idx = idx[n_train..].to_vec();
    train_idx.sort_unstable();
    valid_idx.sort_unstable();
    Ok((
        train_idx.iter().map(|&i| items[i].clone()).collect(),
        valid_idx.iter().map(|&i| items[i].clone()).collect(),
    ))
}
