use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::config::{NetworkConfig, Variant, BLOCKS_PER_RFA};
use crate::autograd::{ParamStore, Tensor};
use crate::error::{invalid, Result};

/// Initial QPAM entry: softplus of this is exactly 1.
pub const IDENTITY_ATTENTION_LOGIT: f64 = 0.541_324_854_612_918_1; // ln(e − 1)
pub const INITIAL_PRELU_SLOPE: f32 = 0.25;

// Scale factors applied on top of He-normal initialization. Branch-final
// convolutions start small so deep stacks begin near the identity.
const BRANCH_OUT_SCALE: f64 = 0.1;
const FUSE_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;
const RECON_SCALE: f64 = 0.0;
const HEAD_SCALE: f64 = 0.1;

/// Parameter name and shape, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

fn spec(name: impl Into<String>, shape: &[usize]) -> ParamSpec {
    ParamSpec {
        name: name.into(),
        shape: shape.to_vec(),
    }
}

/// Canonical parameter list for a configuration.
pub fn param_specs(config: &NetworkConfig) -> Vec<ParamSpec> {
    let c = config.channels;
    let m = config.qp_domain.m();
    let mut out = vec![
        spec("head.conv.w", &[c, config.input_channels(), 3, 3]),
        spec("head.conv.b", &[c]),
        spec("head.prelu", &[c]),
    ];
    for d in 1..=config.rfa_count {
        for k in 1..=BLOCKS_PER_RFA {
            let p = format!("rfa{d}.rb{k}");
            out.push(spec(format!("{p}.conv1.w"), &[c, c, 3, 3]));
            out.push(spec(format!("{p}.conv1.b"), &[c]));
            if config.variant == Variant::Qpam {
                out.push(spec(format!("{p}.qpam.U"), &[c, m]));
            }
            out.push(spec(format!("{p}.prelu"), &[c]));
            out.push(spec(format!("{p}.conv2.w"), &[c, c, 3, 3]));
            out.push(spec(format!("{p}.conv2.b"), &[c]));
        }
        out.push(spec(format!("rfa{d}.fuse.w"), &[c, BLOCKS_PER_RFA * c, 1, 1]));
        out.push(spec(format!("rfa{d}.fuse.b"), &[c]));
    }
    out.push(spec("global.fuse.w", &[c, config.rfa_count * c, 1, 1]));
    out.push(spec("global.fuse.b", &[c]));
    out.push(spec("recon.conv.w", &[1, c, 3, 3]));
    out.push(spec("recon.conv.b", &[1]));
    out
}

/// Closed-form scalar count of the topology.
pub fn count_params(config: &NetworkConfig) -> usize {
    let c = config.channels;
    let d = config.rfa_count;
    let m = config.qp_domain.m();
    let head = 9 * config.input_channels() * c + 2 * c;
    let qpam = if config.variant == Variant::Qpam { c * m } else { 0 };
    let block = 18 * c * c + 3 * c + qpam;
    let rfa = BLOCKS_PER_RFA * block + 3 * c * c + c;
    let global = d * c * c + c;
    let recon = 9 * c + 1;
    head + d * rfa + global + recon
}

/// Named parameters of one network together with the configuration that
/// produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct QpalfWeights {
    pub config: NetworkConfig,
    pub store: ParamStore<f32>,
}

impl QpalfWeights {
    /// Builds weights from tensors supplied in canonical order.
    pub fn from_tensors(config: NetworkConfig, tensors: Vec<Tensor<f32>>) -> Result<Self> {
        config.validate()?;
        let specs = param_specs(&config);
        if specs.len() != tensors.len() {
            return Err(invalid!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            ));
        }
        let mut store = ParamStore::new();
        for (s, t) in specs.into_iter().zip(tensors) {
            if t.shape() != s.shape.as_slice() {
                return Err(invalid!("{}: shape {:?} != {:?}", s.name, t.shape(), s.shape));
            }
            store.insert(s.name, t)?;
        }
        Ok(QpalfWeights { config, store })
    }

    /// He-normal convolutions (with per-role scale factors), zero biases,
    /// PReLU slopes 0.25 and identity QP attention.
    pub fn init(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensors = param_specs(config)
            .iter()
            .map(|s| {
                let name = s.name.as_str();
                if name.ends_with(".b") {
                    Tensor::zeros(s.shape.clone())
                } else if name.ends_with("prelu") {
                    Tensor::full(s.shape.clone(), INITIAL_PRELU_SLOPE)
                } else if name.ends_with("qpam.U") {
                    Tensor::full(s.shape.clone(), IDENTITY_ATTENTION_LOGIT as f32)
                } else {
                    let fan_in: usize = s.shape[1..].iter().product();
                    let scale = if name.ends_with("conv2.w") {
                        BRANCH_OUT_SCALE
                    } else if name.contains("fuse") {
                        FUSE_SCALE
                    } else if name.starts_with("recon") {
                        RECON_SCALE
                    } else if name.starts_with("head") {
                        HEAD_SCALE
                    } else {
                        1.0
                    };
                    let std = (2.0 / fan_in as f64).sqrt() * scale;
                    let normal = Normal::new(0.0, std).expect("finite std");
                    Tensor::from_fn(s.shape.clone(), |_| normal.sample(&mut rng) as f32)
                }
            })
            .collect();
        let mut w = Self::from_tensors(config.clone(), tensors)?;
        w.center_head();
        Ok(w)
    }

    /// Sets the head bias to `-0.5 * sum(w)` per output channel so mid-grey
    /// input gives zero pre-activations.
    fn center_head(&mut self) {
        let (c, per) = {
            let w = self.get("head.conv.w").expect("head weight");
            (w.shape()[0], w.numel() / w.shape()[0])
        };
        let sums: Vec<f32> = (0..c)
            .map(|o| self.get("head.conv.w").expect("head weight").data()[o * per..(o + 1) * per].iter().sum())
            .collect();
        let b = self.get_mut("head.conv.b").expect("head bias");
        for (b, s) in b.data_mut().iter_mut().zip(sums) {
            *b = -0.5 * s;
        }
    }

    pub fn numel(&self) -> usize {
        self.store.numel()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.store.by_name(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<f32>> {
        self.store.by_name_mut(name)
    }

    /// Zeroes the reconstruction convolution, making the network the identity.
    pub fn zero_reconstruction(&mut self) {
        for name in ["recon.conv.w", "recon.conv.b"] {
            if let Some(t) = self.get_mut(name) {
                t.data_mut().fill(0.0);
            }
        }
    }
}
