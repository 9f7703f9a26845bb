//! Weight file: `QPALFWT1` magic, a u32-LE length-prefixed UTF-8 manifest,
//! then every tensor as little-endian f32 in canonical order.
//!
//! ```text
//! version=1
//! channels=64
//! rfa_count=6
//! variant=qpam
//! encoding=list
//! qps=22,27,32,37
//! tensor head.conv.w 64,1,3,3 0
//! tensor head.conv.b 64 2304
//! ...
//! ```
//! Tensor offsets are byte offsets into the blob.

use std::fs;
use std::path::Path;

use super::config::{NetworkConfig, Variant};
use super::domain::{QpDomain, QpEncoding};
use super::weights::{param_specs, QpalfWeights};
use crate::autograd::Tensor;
use crate::error::{Error, Result};

pub const WEIGHT_MAGIC: &[u8; 8] = b"QPALFWT1";
pub const WEIGHT_VERSION: u32 = 1;

fn encoding_tag(e: QpEncoding) -> &'static str {
    match e {
        QpEncoding::List => "list",
        QpEncoding::Range => "range",
    }
}

pub fn encode_weights(weights: &QpalfWeights) -> Vec<u8> {
    let cfg = &weights.config;
    let qps: Vec<String> = cfg.qp_domain.qps().iter().map(|q| q.to_string()).collect();
    let mut manifest = format!(
        "version={WEIGHT_VERSION}\nchannels={}\nrfa_count={}\nvariant={}\nencoding={}\nqps={}\n",
        cfg.channels,
        cfg.rfa_count,
        cfg.variant.tag(),
        encoding_tag(cfg.qp_domain.encoding()),
        qps.join(","),
    );
    let mut offset = 0usize;
    for p in weights.store.iter() {
        let dims: Vec<String> = p.tensor.shape().iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!("tensor {} {} {offset}\n", p.name, dims.join(",")));
        offset += 4 * p.tensor.numel();
    }

    let mut out = Vec::with_capacity(12 + manifest.len() + offset);
    out.extend_from_slice(WEIGHT_MAGIC);
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    out.extend_from_slice(manifest.as_bytes());
    for p in weights.store.iter() {
        for v in p.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Manifest {
    config: NetworkConfig,
    tensors: Vec<(String, Vec<usize>, usize)>,
}

fn parse_manifest(text: &str) -> Result<Manifest> {
    let bad = |msg: String| Error::Parse(format!("weight manifest: {msg}"));
    let mut version = None;
    let mut channels = None;
    let mut rfa_count = None;
    let mut variant = None;
    let mut encoding = None;
    let mut qps: Option<Vec<i32>> = None;
    let mut tensors = Vec::new();

    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        if let Some(rest) = line.strip_prefix("tensor ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [name, shape, off] = parts[..] else {
                return Err(bad(format!("malformed tensor line {line:?}")));
            };
            let shape = shape
                .split(',')
                .map(|d| d.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| bad(format!("shape in {line:?}: {e}")))?;
            let off = off.parse::<usize>().map_err(|e| bad(format!("offset in {line:?}: {e}")))?;
            tensors.push((name.to_string(), shape, off));
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed line {line:?}")))?;
        let num = |v: &str| v.parse::<usize>().map_err(|e| bad(format!("{key}: {e}")));
        match key {
            "version" => version = Some(value.parse::<u32>().map_err(|e| bad(format!("version: {e}")))?),
            "channels" => channels = Some(num(value)?),
            "rfa_count" => rfa_count = Some(num(value)?),
            "variant" => variant = Some(value.parse::<Variant>()?),
            "encoding" => {
                encoding = Some(match value {
                    "list" => QpEncoding::List,
                    "range" => QpEncoding::Range,
                    other => return Err(bad(format!("unknown encoding {other:?}"))),
                })
            }
            "qps" => {
                qps = Some(
                    value
                        .split(',')
                        .map(|q| q.parse::<i32>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| bad(format!("qps: {e}")))?,
                )
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }

    let version = version.ok_or_else(|| bad("missing version".into()))?;
    if version != WEIGHT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let qps = qps.ok_or_else(|| bad("missing qps".into()))?;
    let domain = match encoding.ok_or_else(|| bad("missing encoding".into()))? {
        QpEncoding::List => QpDomain::list(qps)?,
        QpEncoding::Range => {
            let d = QpDomain::range(qps[0], *qps.last().expect("non-empty"))?;
            if d.qps() != qps.as_slice() {
                return Err(bad("range encoding with non-contiguous qps".into()));
            }
            d
        }
    };
    let config = NetworkConfig::new(
        channels.ok_or_else(|| bad("missing channels".into()))?,
        rfa_count.ok_or_else(|| bad("missing rfa_count".into()))?,
        variant.ok_or_else(|| bad("missing variant".into()))?,
        domain,
    )?;
    Ok(Manifest { config, tensors })
}

/// Decodes a weight file, taking the configuration from its manifest.
pub fn decode_weights(bytes: &[u8]) -> Result<QpalfWeights> {
    if bytes.len() < 8 || &bytes[..8] != WEIGHT_MAGIC {
        return Err(Error::BadMagic { expected: "QPALFWT1" });
    }
    if bytes.len() < 12 {
        return Err(Error::Truncated("missing manifest length".into()));
    }
    let mlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let blob_start = 12 + mlen;
    if bytes.len() < blob_start {
        return Err(Error::Truncated(format!(
            "manifest needs {mlen} bytes, {} available",
            bytes.len() - 12
        )));
    }
    let text = std::str::from_utf8(&bytes[12..blob_start])
        .map_err(|e| Error::Parse(format!("weight manifest is not UTF-8: {e}")))?;
    let manifest = parse_manifest(text)?;
    let specs = param_specs(&manifest.config);
    if specs.len() != manifest.tensors.len() {
        return Err(Error::Parse(format!(
            "manifest lists {} tensors, configuration needs {}",
            manifest.tensors.len(),
            specs.len()
        )));
    }
    let blob = &bytes[blob_start..];
    let mut expected_offset = 0usize;
    let mut tensors = Vec::with_capacity(specs.len());
    for (spec, (name, shape, off)) in specs.iter().zip(&manifest.tensors) {
        if &spec.name != name || &spec.shape != shape {
            return Err(Error::Parse(format!(
                "tensor {name} {shape:?} does not match expected {} {:?}",
                spec.name, spec.shape
            )));
        }
        if *off != expected_offset {
            return Err(Error::Parse(format!("tensor {name} at offset {off}, expected {expected_offset}")));
        }
        let n: usize = shape.iter().product();
        let end = off + 4 * n;
        if blob.len() < end {
            return Err(Error::Truncated(format!(
                "blob has {} bytes, tensor {name} needs up to {end}",
                blob.len()
            )));
        }
        let data = blob[*off..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        tensors.push(Tensor::new(shape.clone(), data)?);
        expected_offset = end;
    }
    if blob.len() != expected_offset {
        return Err(Error::Parse(format!(
            "{} trailing bytes after weight blob",
            blob.len() - expected_offset
        )));
    }
    QpalfWeights::from_tensors(manifest.config, tensors)
}

pub fn save_weights(weights: &QpalfWeights, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_weights(weights)).map_err(|e| Error::io(path, e))
}

/// Loads a weight file, whatever configuration it carries.
pub fn load_weights_any(path: impl AsRef<Path>) -> Result<QpalfWeights> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_weights(&bytes)
}

/// Loads a weight file and checks it was written for `expected`.
pub fn load_weights(path: impl AsRef<Path>, expected: &NetworkConfig) -> Result<QpalfWeights> {
    let w = load_weights_any(path)?;
    if &w.config != expected {
        return Err(Error::ConfigMismatch(format!(
            "file has C={} D={} variant={} qps={:?}, requested C={} D={} variant={} qps={:?}",
            w.config.channels,
            w.config.rfa_count,
            w.config.variant,
            w.config.qp_domain.qps(),
            expected.channels,
            expected.rfa_count,
            expected.variant,
            expected.qp_domain.qps()
        )));
    }
    Ok(w)
}
