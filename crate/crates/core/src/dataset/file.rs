//! Dataset container:
//!
//! ```text
//! magic     "QPDS0001"
//! patch     u32 LE
//! count     u64 LE
//! n_qps     u8, then n_qps QP bytes
//! records   count × (qp u8, recon patch², orig patch²)
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::patches::PatchRecord;
use crate::autograd::Tensor;
use crate::codec::MAX_QP;
use crate::error::{invalid, Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"QPDS0001";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetFile {
    patch_size: usize,
    qps: Vec<i32>,
    records: Vec<PatchRecord>,
}

/// Normalized tensors for a set of records: recon and orig are N×1×P×P in
/// [0, 1].
#[derive(Clone, Debug)]
pub struct Batch {
    pub recon: Tensor<f32>,
    pub orig: Tensor<f32>,
    pub qps: Vec<i32>,
}

impl DatasetFile {
    /// `qps` is the build's QP list; every record must use one of them.
    pub fn new(patch_size: usize, mut qps: Vec<i32>, records: Vec<PatchRecord>) -> Result<Self> {
        if patch_size == 0 {
            return Err(invalid!("patch size must be positive"));
        }
        qps.sort_unstable();
        qps.dedup();
        if qps.len() > u8::MAX as usize {
            return Err(invalid!("{} QPs exceed the container limit", qps.len()));
        }
        if let Some(q) = qps.iter().find(|q| !(0..=MAX_QP).contains(*q)) {
            return Err(invalid!("qp {q} outside 0..={MAX_QP}"));
        }
        for r in &records {
            if r.size != patch_size {
                return Err(invalid!("record of size {} in a {patch_size} dataset", r.size));
            }
            if qps.binary_search(&r.qp).is_err() {
                return Err(invalid!("record qp {} not in dataset QP list {qps:?}", r.qp));
            }
        }
        Ok(DatasetFile { patch_size, qps, records })
    }

    pub fn patch_size(&self) -> usize {
        self.patch_size
    }

    pub fn qps(&self) -> &[i32] {
        &self.qps
    }

    pub fn records(&self) -> &[PatchRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PatchRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn qp_histogram(&self) -> BTreeMap<i32, usize> {
        let mut h = BTreeMap::new();
        for r in &self.records {
            *h.entry(r.qp).or_insert(0) += 1;
        }
        h
    }

    /// Records with the given QP, keeping order.
    pub fn select_qp(&self, qp: i32) -> Result<DatasetFile> {
        DatasetFile::new(
            self.patch_size,
            vec![qp],
            self.records.iter().filter(|r| r.qp == qp).cloned().collect(),
        )
    }

    pub fn header_len(&self) -> usize {
        8 + 4 + 8 + 1 + self.qps.len()
    }

    pub fn encoded_len(&self) -> usize {
        self.header_len() + self.records.len() * (1 + 2 * self.patch_size * self.patch_size)
    }

    pub fn batch(&self, indices: &[usize]) -> Batch {
        let n = self.patch_size * self.patch_size;
        let mut recon = Vec::with_capacity(indices.len() * n);
        let mut orig = Vec::with_capacity(indices.len() * n);
        let mut qps = Vec::with_capacity(indices.len());
        for &i in indices {
            let r = &self.records[i];
            recon.extend(r.recon.iter().map(|&v| v as f32 / 255.0));
            orig.extend(r.orig.iter().map(|&v| v as f32 / 255.0));
            qps.push(r.qp);
        }
        let shape = vec![indices.len(), 1, self.patch_size, self.patch_size];
        Batch {
            recon: Tensor::new(shape.clone(), recon).expect("batch shape"),
            orig: Tensor::new(shape, orig).expect("batch shape"),
            qps,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&(self.patch_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        out.push(self.qps.len() as u8);
        out.extend(self.qps.iter().map(|&q| q as u8));
        for r in &self.records {
            out.push(r.qp as u8);
            out.extend_from_slice(&r.recon);
            out.extend_from_slice(&r.orig);
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != DATASET_MAGIC {
            return Err(Error::BadMagic { expected: "QPDS0001" });
        }
        if bytes.len() < 21 {
            return Err(Error::Truncated(format!("dataset header needs 21 bytes, have {}", bytes.len())));
        }
        let patch = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let nq = bytes[20] as usize;
        let header = 21 + nq;
        if bytes.len() < header {
            return Err(Error::Truncated("dataset QP list".into()));
        }
        let qps: Vec<i32> = bytes[21..header].iter().map(|&q| q as i32).collect();
        let rec_len = 1 + 2 * patch * patch;
        let body = (bytes.len() - header) as u64;
        let need = count
            .checked_mul(rec_len as u64)
            .ok_or_else(|| Error::Parse(format!("record count {count} overflows")))?;
        if body < need {
            return Err(Error::Truncated(format!(
                "header promises {count} records ({need} bytes), body has {body}"
            )));
        }
        if body > need {
            return Err(Error::Parse(format!("{} trailing bytes after {count} records", body - need)));
        }
        let pp = patch * patch;
        let records = bytes[header..]
            .chunks_exact(rec_len)
            .map(|c| PatchRecord {
                qp: c[0] as i32,
                size: patch,
                recon: c[1..1 + pp].to_vec(),
                orig: c[1 + pp..].to_vec(),
            })
            .collect();
        DatasetFile::new(patch, qps, records).map_err(|e| Error::Parse(format!("dataset contents: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}
