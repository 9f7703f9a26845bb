//! Patch datasets built from coded images.

mod build;
mod file;
mod patches;

pub use build::{
    build_dataset, list_images, report_csv, shuffle_mix, split_train_valid, BuildOptions, ReportRow, REPORT_HEADER,
};
pub use file::{Batch, DatasetFile, DATASET_MAGIC};
pub use patches::{
    extract_patches, filter_by_psnr, patch_count, FilterCounts, PatchRecord, DEFAULT_PATCH, DEFAULT_PSNR_HIGH,
    DEFAULT_PSNR_LOW, DEFAULT_STRIDE,
};
