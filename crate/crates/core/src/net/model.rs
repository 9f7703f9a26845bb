//! Graph construction for the QPALF network.
//!
//! ```text
//! F0 = prelu(conv3x3(X))
//! Fd = RFA_d(F(d-1))                    d = 1..D
//! F  = F0 + conv1x1([F1, …, FD])
//! Ŷ  = X + conv3x3(F)
//! ```
//!
//! Each RFA chains three residual blocks
//! `h ↦ h + conv(prelu(qpam(conv(h))))` and fuses their outputs with a 1×1
//! convolution.

use super::config::{NetworkConfig, Variant, BLOCKS_PER_RFA};
use super::domain::QpDomain;
use super::weights::{param_specs, QpalfWeights};
use crate::autograd::{Graph, ParamStore, Real, Tensor, Var};
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug)]
pub struct ConvVars {
    pub w: Var,
    pub b: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct BlockVars {
    pub conv1: ConvVars,
    pub qpam: Option<Var>,
    pub prelu: Var,
    pub conv2: ConvVars,
}

#[derive(Clone, Debug)]
pub struct RfaVars {
    pub blocks: [BlockVars; BLOCKS_PER_RFA],
    pub fuse: ConvVars,
}

/// Graph variables for every network parameter.
#[derive(Clone, Debug)]
pub struct NetVars {
    pub head: ConvVars,
    pub head_prelu: Var,
    pub rfas: Vec<RfaVars>,
    pub global_fuse: ConvVars,
    pub recon: ConvVars,
}

impl NetVars {
    /// Binds `store` (laid out per `config`) into `g`. Trainable bindings
    /// accumulate gradients into the store on backward; otherwise parameters
    /// enter as constants.
    pub fn bind<T: Real>(
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        config: &NetworkConfig,
        trainable: bool,
    ) -> Result<Self> {
        let specs = param_specs(config);
        if specs.len() != store.len() {
            return Err(invalid!(
                "weight store has {} tensors, configuration needs {}",
                store.len(),
                specs.len()
            ));
        }
        let vars: Vec<Var> = (0..store.len())
            .map(|i| {
                if trainable {
                    g.param(store, i)
                } else {
                    g.constant(store.get(i).tensor.clone())
                }
            })
            .collect();
        Self::from_vars(g, &vars, config)
    }

    /// Groups variables given in canonical parameter order.
    pub fn from_vars<T: Real>(g: &Graph<T>, vars: &[Var], config: &NetworkConfig) -> Result<Self> {
        let specs = param_specs(config);
        if specs.len() != vars.len() {
            return Err(invalid!("{} variables, configuration needs {}", vars.len(), specs.len()));
        }
        for (v, s) in vars.iter().zip(&specs) {
            if g.shape(*v) != s.shape.as_slice() {
                return Err(invalid!("{}: shape {:?} != {:?}", s.name, g.shape(*v), s.shape));
            }
        }
        let mut it = vars.iter().copied();
        let mut next = || it.next().expect("spec count checked");
        let conv = |next: &mut dyn FnMut() -> Var| ConvVars { w: next(), b: next() };

        let head = conv(&mut next);
        let head_prelu = next();
        let mut rfas = Vec::with_capacity(config.rfa_count);
        for _ in 0..config.rfa_count {
            let mut block = || {
                let conv1 = conv(&mut next);
                let qpam = (config.variant == Variant::Qpam).then(&mut next);
                let prelu = next();
                let conv2 = conv(&mut next);
                BlockVars { conv1, qpam, prelu, conv2 }
            };
            let blocks = [block(), block(), block()];
            let fuse = conv(&mut next);
            rfas.push(RfaVars { blocks, fuse });
        }
        let global_fuse = conv(&mut next);
        let recon = conv(&mut next);
        Ok(NetVars {
            head,
            head_prelu,
            rfas,
            global_fuse,
            recon,
        })
    }
}

/// QP selector for a batch: one one-hot column per sample.
#[derive(Clone, Debug)]
pub struct QpBatch {
    indices: Vec<usize>,
    m: usize,
}

impl QpBatch {
    pub fn new(domain: &QpDomain, qps: &[i32]) -> Result<Self> {
        if qps.is_empty() {
            return Err(invalid!("empty QP batch"));
        }
        Ok(QpBatch {
            indices: qps.iter().map(|&q| domain.index_of(q)).collect(),
            m: domain.m(),
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    fn uniform(&self) -> bool {
        self.indices.windows(2).all(|w| w[0] == w[1])
    }

    /// Swaps every index through `f`; used to probe QP conditioning.
    pub fn remapped(&self, f: impl Fn(usize) -> usize) -> Self {
        QpBatch {
            indices: self.indices.iter().map(|&i| f(i)).collect(),
            m: self.m,
        }
    }
}

fn conv<T: Real>(g: &mut Graph<T>, x: Var, c: ConvVars) -> Result<Var> {
    let k = g.shape(c.w)[2];
    g.conv2d(x, c.w, c.b, k / 2)
}

/// `F' = softplus(U · onehot(q)) ⊗ F`, broadcast over space.
pub fn qpam_forward<T: Real>(g: &mut Graph<T>, f: Var, qps: &QpBatch, u: Var) -> Result<Var> {
    let (c, m) = match *g.shape(u) {
        [c, m] => (c, m),
        ref s => return Err(invalid!("QPAM matrix must be 2-D, got {s:?}")),
    };
    let (n, fc) = match *g.shape(f) {
        [n, fc, _, _] => (n, fc),
        ref s => return Err(invalid!("QPAM input must be 4-D, got {s:?}")),
    };
    if fc != c {
        return Err(invalid!("QPAM: feature has {fc} channels, U has {c} rows"));
    }
    if qps.m != m {
        return Err(invalid!("QPAM: one-hot length {} != U columns {m}", qps.m));
    }
    if qps.len() != n {
        return Err(invalid!("QPAM: {} QPs for batch of {n}", qps.len()));
    }
    let attention = if qps.uniform() {
        let mut v = vec![T::zero(); m];
        v[qps.indices[0]] = T::one();
        let v = g.constant(Tensor::new(vec![m], v)?);
        let logits = g.matmul(u, v)?;
        g.softplus(logits)
    } else {
        let mut v = vec![T::zero(); m * n];
        for (s, &i) in qps.indices.iter().enumerate() {
            v[i * n + s] = T::one();
        }
        let v = g.constant(Tensor::new(vec![m, n], v)?);
        let logits = g.matmul(u, v)?;
        let sp = g.softplus(logits);
        g.transpose(sp)?
    };
    g.mul_channel(f, attention)
}

pub fn residual_block_forward<T: Real>(g: &mut Graph<T>, x: Var, qps: &QpBatch, p: &BlockVars) -> Result<Var> {
    let mut h = conv(g, x, p.conv1)?;
    if let Some(u) = p.qpam {
        h = qpam_forward(g, h, qps, u)?;
    }
    let h = g.prelu(h, p.prelu)?;
    let h = conv(g, h, p.conv2)?;
    g.add(x, h)
}

pub fn rfa_forward<T: Real>(g: &mut Graph<T>, x: Var, qps: &QpBatch, p: &RfaVars) -> Result<Var> {
    let mut outs = [x; BLOCKS_PER_RFA];
    let mut h = x;
    for (slot, block) in outs.iter_mut().zip(&p.blocks) {
        h = residual_block_forward(g, h, qps, block)?;
        *slot = h;
    }
    let cat = g.concat_channels(&outs)?;
    conv(g, cat, p.fuse)
}

/// Full network on an N×Cin×H×W input whose channel 0 is luma in [0, 1].
/// The output is not clipped.
pub fn qpalf_forward<T: Real>(
    g: &mut Graph<T>,
    input: Var,
    qps: &QpBatch,
    p: &NetVars,
    config: &NetworkConfig,
) -> Result<Var> {
    let (_, cin, h, w) = g.value(input).dims4()?;
    if cin != config.input_channels() {
        return Err(invalid!(
            "{} network expects {} input channels, got {cin}",
            config.variant,
            config.input_channels()
        ));
    }
    if h < 3 || w < 3 {
        return Err(invalid!("input must be at least 3x3, got {h}x{w}"));
    }
    let luma = if cin == 1 {
        input
    } else {
        let l = g.value(input).channel(0)?;
        g.constant(l)
    };

    let f0 = conv(g, input, p.head)?;
    let f0 = g.prelu(f0, p.head_prelu)?;
    let mut fd = f0;
    let mut features = Vec::with_capacity(p.rfas.len());
    for rfa in &p.rfas {
        fd = rfa_forward(g, fd, qps, rfa)?;
        features.push(fd);
    }
    let cat = g.concat_channels(&features)?;
    let fused = conv(g, cat, p.global_fuse)?;
    let global = g.add(f0, fused)?;
    let residual = conv(g, global, p.recon)?;
    g.add(luma, residual)
}

/// Constant plane `q / 63` used by the QP-map variant.
pub fn qp_map_plane(q: i32, h: usize, w: usize) -> Tensor<f32> {
    Tensor::full(vec![1, 1, h, w], q as f32 / 63.0)
}

/// Appends the QP plane when the variant needs it; `luma` is N×1×H×W.
pub fn prepare_input(config: &NetworkConfig, luma: &Tensor<f32>, qps: &[i32]) -> Result<Tensor<f32>> {
    let (n, c, h, w) = luma.dims4()?;
    if c != 1 {
        return Err(invalid!("expected single-channel luma, got {c} channels"));
    }
    if qps.len() != n {
        return Err(invalid!("{} QPs for batch of {n}", qps.len()));
    }
    if config.variant != Variant::QpMap {
        return Ok(luma.clone());
    }
    let hw = h * w;
    let mut data = Vec::with_capacity(2 * n * hw);
    for (s, &q) in qps.iter().enumerate() {
        data.extend_from_slice(&luma.data()[s * hw..(s + 1) * hw]);
        data.extend_from_slice(qp_map_plane(q, h, w).data());
    }
    Tensor::new(vec![n, 2, h, w], data)
}

impl QpalfWeights {
    /// Inference on an N×1×H×W luma batch in [0, 1]; one QP per sample.
    pub fn infer(&self, luma: &Tensor<f32>, qps: &[i32]) -> Result<Tensor<f32>> {
        let input = prepare_input(&self.config, luma, qps)?;
        let mut g = Graph::<f32>::new();
        let vars = NetVars::bind(&mut g, &self.store, &self.config, false)?;
        let x = g.constant(input);
        let batch = QpBatch::new(&self.config.qp_domain, qps)?;
        let y = qpalf_forward(&mut g, x, &batch, &vars, &self.config)?;
        Ok(g.value(y).clone())
    }
}
