//! Tape-based reverse-mode differentiation.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! [`Graph::gradients`] walks the tape backwards once and returns the
//! gradient of a scalar loss with respect to every node that requires one.

use super::kernels::{self, ConvGeom};
use super::param::ParamStore;
use super::tensor::{Real, Tensor};
use crate::error::{invalid, Result};
use crate::par::Exec;

/// Handle to a node in a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op<T> {
    Leaf { param: Option<usize> },
    Conv2d { x: Var, w: Var, b: Var, geom: ConvGeom },
    Prelu { x: Var, slope: Var },
    Softplus { x: Var },
    Add { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    MulChannel { x: Var, factor: Var, per_sample: bool },
    Concat { parts: Vec<Var> },
    MatMul { a: Var, b: Var, m: usize, k: usize, n: usize },
    Transpose { x: Var, rows: usize, cols: usize },
    Sum { x: Var },
    Mean { x: Var },
    SampleMse { pred: Var, target: Var },
    Powf { x: Var, p: T },
    ScaleConst { x: Var, factors: Vec<T> },
}

struct Node<T> {
    op: Op<T>,
    value: Tensor<T>,
    requires_grad: bool,
}

pub struct Graph<T: Real = f32> {
    nodes: Vec<Node<T>>,
    exec: Exec,
}

impl<T: Real> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradients produced by one backward pass, indexed by [`Var`].
pub struct Gradients<T> {
    grads: Vec<Option<Vec<T>>>,
}

impl<T: Real> Gradients<T> {
    pub fn of(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }
}

fn add_into<T: Real>(slot: &mut Option<Vec<T>>, delta: &[T]) {
    match slot {
        Some(g) => {
            for (a, &d) in g.iter_mut().zip(delta) {
                *a = *a + d;
            }
        }
        None => *slot = Some(delta.to_vec()),
    }
}

fn add_owned<T: Real>(slot: &mut Option<Vec<T>>, delta: Vec<T>) {
    match slot {
        Some(g) => {
            for (a, d) in g.iter_mut().zip(delta) {
                *a = *a + d;
            }
        }
        None => *slot = Some(delta),
    }
}

pub(crate) fn softplus_scalar<T: Real>(x: T) -> T {
    // log(1 + e^x) = max(x, 0) + log(1 + e^-|x|)
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid_scalar<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            exec: Exec::default(),
        }
    }

    pub fn with_exec(exec: Exec) -> Self {
        Graph {
            nodes: Vec::new(),
            exec,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Leaf node; gradients are tracked when `tensor.requires_grad` is set.
    pub fn leaf(&mut self, tensor: Tensor<T>) -> Var {
        let rg = tensor.requires_grad;
        let mut value = tensor;
        value.grad = None;
        self.push(Op::Leaf { param: None }, value, rg)
    }

    /// Leaf that never receives a gradient.
    pub fn constant(&mut self, mut tensor: Tensor<T>) -> Var {
        tensor.requires_grad = false;
        self.leaf(tensor)
    }

    /// Leaf bound to parameter `index` of `store`; [`Graph::backward`]
    /// accumulates into that parameter.
    pub fn param(&mut self, store: &ParamStore<T>, index: usize) -> Var {
        let mut value = store.get(index).tensor.clone();
        value.grad = None;
        self.push(Op::Leaf { param: Some(index) }, value, true)
    }

    /// Binds every parameter of `store`, in order.
    pub fn params(&mut self, store: &ParamStore<T>) -> Vec<Var> {
        (0..store.len()).map(|i| self.param(store, i)).collect()
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, pad: usize) -> Result<Var> {
        let (n, cin, h, wd) = self.value(x).dims4()?;
        let (cout, wcin, kh, kw) = self.value(w).dims4()?;
        if wcin != cin {
            return Err(invalid!("conv2d: input has {cin} channels, weight expects {wcin}"));
        }
        if kh != kw || !(kh == 1 || kh == 3) {
            return Err(invalid!("conv2d: kernel must be 1x1 or 3x3, got {kh}x{kw}"));
        }
        if pad != kh / 2 {
            return Err(invalid!("conv2d: padding must be {} for a {kh}x{kh} kernel", kh / 2));
        }
        if self.shape(b) != [cout] {
            return Err(invalid!("conv2d: bias shape {:?} != [{cout}]", self.shape(b)));
        }
        let geom = ConvGeom { n, cin, cout, h, w: wd, k: kh, pad };
        let mut out = vec![T::zero(); n * cout * h * wd];
        kernels::conv2d_forward(
            &geom,
            self.value(x).data(),
            self.value(w).data(),
            self.value(b).data(),
            &mut out,
            self.exec,
        );
        let value = Tensor::new(vec![n, cout, h, wd], out)?;
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(Op::Conv2d { x, w, b, geom }, value, rg))
    }

    pub fn prelu(&mut self, x: Var, slope: Var) -> Result<Var> {
        let xs = self.value(x);
        let c = *xs.shape().get(1).ok_or_else(|| invalid!("prelu: input needs a channel axis"))?;
        if self.value(slope).numel() != c {
            return Err(invalid!(
                "prelu: {} slopes for {c} channels",
                self.value(slope).numel()
            ));
        }
        let plane: usize = xs.shape()[2..].iter().product();
        let a = self.value(slope).data();
        let data: Vec<T> = xs
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| if v >= T::zero() { v } else { a[(i / plane) % c] * v })
            .collect();
        let value = Tensor::new(xs.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(slope);
        Ok(self.push(Op::Prelu { x, slope }, value, rg))
    }

    pub fn softplus(&mut self, x: Var) -> Var {
        let xs = self.value(x);
        let data = xs.data().iter().map(|&v| softplus_scalar(v)).collect();
        let value = Tensor::new(xs.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(x);
        self.push(Op::Softplus { x }, value, rg)
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(invalid!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape(a),
                self.shape(b)
            ));
        }
        Ok(())
    }

    fn zip_map(&self, a: Var, b: Var, f: impl Fn(T, T) -> T) -> Tensor<T> {
        let (va, vb) = (self.value(a), self.value(b));
        let data = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(va.shape().to_vec(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let value = self.zip_map(a, b, |x, y| x + y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Add { a, b }, value, rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let value = self.zip_map(a, b, |x, y| x - y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Sub { a, b }, value, rg))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let value = self.zip_map(a, b, |x, y| x * y);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::Mul { a, b }, value, rg))
    }

    /// Multiplies an N×C×… tensor by per-channel factors. `factor` holds
    /// either C values (shared by every sample) or N·C values in
    /// sample-major order.
    pub fn mul_channel(&mut self, x: Var, factor: Var) -> Result<Var> {
        let xs = self.value(x);
        let (n, c) = match xs.shape() {
            [n, c, ..] => (*n, *c),
            s => return Err(invalid!("mul_channel: input shape {s:?} lacks a channel axis")),
        };
        let fl = self.value(factor).numel();
        let per_sample = if fl == c {
            false
        } else if fl == n * c {
            true
        } else {
            return Err(invalid!(
                "mul_channel: {fl} factors incompatible with {n}x{c} channels"
            ));
        };
        let plane: usize = xs.shape()[2..].iter().product();
        let f = self.value(factor).data();
        let data = xs
            .data()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let nc = i / plane;
                let idx = if per_sample { nc } else { nc % c };
                v * f[idx]
            })
            .collect();
        let value = Tensor::new(xs.shape().to_vec(), data)?;
        let rg = self.rg(x) || self.rg(factor);
        Ok(self.push(Op::MulChannel { x, factor, per_sample }, value, rg))
    }

    /// Concatenates 4-D tensors along the channel axis.
    pub fn concat_channels(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or_else(|| invalid!("concat: no inputs"))?;
        let (n, _, h, w) = self.value(first).dims4()?;
        let mut channels = Vec::with_capacity(parts.len());
        for &p in parts {
            let (pn, pc, ph, pw) = self.value(p).dims4()?;
            if (pn, ph, pw) != (n, h, w) {
                return Err(invalid!(
                    "concat: shape {:?} incompatible with {:?}",
                    self.shape(p),
                    self.shape(first)
                ));
            }
            channels.push(pc);
        }
        let total: usize = channels.iter().sum();
        let hw = h * w;
        let mut data = Vec::with_capacity(n * total * hw);
        for b in 0..n {
            for (&p, &pc) in parts.iter().zip(&channels) {
                let src = self.value(p).data();
                data.extend_from_slice(&src[b * pc * hw..(b + 1) * pc * hw]);
            }
        }
        let value = Tensor::new(vec![n, total, h, w], data)?;
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(Op::Concat { parts: parts.to_vec() }, value, rg))
    }

    /// Matrix product of an m×k and a k×n tensor (a 1-D right operand is
    /// treated as a column vector).
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = match *self.shape(a) {
            [m, k] => (m, k),
            ref s => return Err(invalid!("matmul: left operand must be 2-D, got {s:?}")),
        };
        let (kb, n, out_shape) = match *self.shape(b) {
            [kb] => (kb, 1, vec![m]),
            [kb, n] => (kb, n, vec![m, n]),
            ref s => return Err(invalid!("matmul: right operand must be 1-D or 2-D, got {s:?}")),
        };
        if kb != k {
            return Err(invalid!("matmul: inner dimensions {k} and {kb} differ"));
        }
        let mut out = vec![T::zero(); m * n];
        T::gemm(
            m,
            k,
            n,
            T::one(),
            self.value(a).data(),
            (k as isize, 1),
            self.value(b).data(),
            (n as isize, 1),
            T::zero(),
            &mut out,
            (n as isize, 1),
        );
        let value = Tensor::new(out_shape, out)?;
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Op::MatMul { a, b, m, k, n }, value, rg))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let (rows, cols) = match *self.shape(x) {
            [r, c] => (r, c),
            ref s => return Err(invalid!("transpose: expected 2-D, got {s:?}")),
        };
        let src = self.value(x).data();
        let mut out = vec![T::zero(); rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                out[c * rows + r] = src[r * cols + c];
            }
        }
        let value = Tensor::new(vec![cols, rows], out)?;
        let rg = self.rg(x);
        Ok(self.push(Op::Transpose { x, rows, cols }, value, rg))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s: T = self.value(x).data().iter().copied().sum();
        let rg = self.rg(x);
        self.push(Op::Sum { x }, Tensor::scalar(s), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let s: T = v.data().iter().copied().sum();
        let m = s / T::of(v.numel() as f64);
        let rg = self.rg(x);
        self.push(Op::Mean { x }, Tensor::scalar(m), rg)
    }

    /// Per-sample mean squared error: N×… inputs give an N-vector.
    pub fn sample_mse(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape(pred, target, "sample_mse")?;
        let shape = self.shape(pred).to_vec();
        let n = *shape.first().ok_or_else(|| invalid!("sample_mse: scalar input"))?;
        let per = shape[1..].iter().product::<usize>();
        let (p, t) = (self.value(pred).data(), self.value(target).data());
        let denom = T::of(per as f64);
        let data = (0..n)
            .map(|i| {
                let s: T = p[i * per..(i + 1) * per]
                    .iter()
                    .zip(&t[i * per..(i + 1) * per])
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum();
                s / denom
            })
            .collect();
        let value = Tensor::new(vec![n], data)?;
        let rg = self.rg(pred) || self.rg(target);
        Ok(self.push(Op::SampleMse { pred, target }, value, rg))
    }

    /// Elementwise `x^p`; inputs must be non-negative when `p` is fractional.
    pub fn powf(&mut self, x: Var, p: T) -> Var {
        let xs = self.value(x);
        let data = xs.data().iter().map(|&v| v.powf(p)).collect();
        let value = Tensor::new(xs.shape().to_vec(), data).expect("same shape");
        let rg = self.rg(x);
        self.push(Op::Powf { x, p }, value, rg)
    }

    /// Elementwise product with constant factors of the same length.
    pub fn scale_const(&mut self, x: Var, factors: Vec<T>) -> Result<Var> {
        let xs = self.value(x);
        if factors.len() != xs.numel() {
            return Err(invalid!(
                "scale_const: {} factors for {} values",
                factors.len(),
                xs.numel()
            ));
        }
        let data = xs.data().iter().zip(&factors).map(|(&v, &f)| v * f).collect();
        let value = Tensor::new(xs.shape().to_vec(), data)?;
        let rg = self.rg(x);
        Ok(self.push(Op::ScaleConst { x, factors }, value, rg))
    }

    /// Smallest |input| over every PReLU node, i.e. distance to the nearest
    /// kink. `None` when the graph has no PReLU.
    pub fn prelu_kink_margin(&self) -> Option<T> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Prelu { x, .. } => self
                    .value(x)
                    .data()
                    .iter()
                    .map(|v| v.abs())
                    .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min(v)))),
                _ => None,
            })
            .fold(None, |m: Option<T>, v| Some(m.map_or(v, |m| m.min(v))))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn gradients(&self, loss: Var) -> Result<Gradients<T>> {
        if self.value(loss).numel() != 1 {
            return Err(invalid!(
                "backward requires a scalar loss, got shape {:?}",
                self.shape(loss)
            ));
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(gout) = grads[idx].take() else {
                continue;
            };
            self.backprop_node(node, &gout, &mut grads);
            grads[idx] = Some(gout);
        }
        Ok(Gradients { grads })
    }

    /// Reverse pass that accumulates parameter gradients into `store`.
    /// Repeated calls accumulate; zero the store between steps.
    pub fn backward(&self, loss: Var, store: &mut ParamStore<T>) -> Result<()> {
        let grads = self.gradients(loss)?;
        for (i, node) in self.nodes.iter().enumerate() {
            if let Op::Leaf { param: Some(p) } = node.op {
                if let Some(g) = grads.grads[i].as_deref() {
                    store.get_mut(p).tensor.accumulate_grad(g);
                }
            }
        }
        Ok(())
    }

    fn backprop_node(&self, node: &Node<T>, gout: &[T], grads: &mut [Option<Vec<T>>]) {
        match &node.op {
            Op::Leaf { .. } => {}
            Op::Conv2d { x, w, b, geom } => {
                let cg = kernels::conv2d_backward(
                    geom,
                    self.value(*x).data(),
                    self.value(*w).data(),
                    gout,
                    self.rg(*x),
                    self.exec,
                );
                if self.rg(*w) {
                    add_owned(&mut grads[w.0], cg.weight);
                }
                if self.rg(*b) {
                    add_owned(&mut grads[b.0], cg.bias);
                }
                if let Some(dx) = cg.input {
                    add_owned(&mut grads[x.0], dx);
                }
            }
            Op::Prelu { x, slope } => {
                let xs = self.value(*x);
                let c = xs.shape()[1];
                let plane: usize = xs.shape()[2..].iter().product();
                let a = self.value(*slope).data();
                if self.rg(*x) {
                    let dx: Vec<T> = xs
                        .data()
                        .iter()
                        .zip(gout)
                        .enumerate()
                        .map(|(i, (&v, &g))| if v >= T::zero() { g } else { a[(i / plane) % c] * g })
                        .collect();
                    add_owned(&mut grads[x.0], dx);
                }
                if self.rg(*slope) {
                    let mut da = vec![T::zero(); c];
                    for (i, (&v, &g)) in xs.data().iter().zip(gout).enumerate() {
                        if v < T::zero() {
                            let ch = (i / plane) % c;
                            da[ch] = da[ch] + v * g;
                        }
                    }
                    add_owned(&mut grads[slope.0], da);
                }
            }
            Op::Softplus { x } => {
                let dx = self
                    .value(*x)
                    .data()
                    .iter()
                    .zip(gout)
                    .map(|(&v, &g)| g * sigmoid_scalar(v))
                    .collect();
                add_owned(&mut grads[x.0], dx);
            }
            Op::Add { a, b } => {
                if self.rg(*a) {
                    add_into(&mut grads[a.0], gout);
                }
                if self.rg(*b) {
                    add_into(&mut grads[b.0], gout);
                }
            }
            Op::Sub { a, b } => {
                if self.rg(*a) {
                    add_into(&mut grads[a.0], gout);
                }
                if self.rg(*b) {
                    let neg: Vec<T> = gout.iter().map(|&g| -g).collect();
                    add_owned(&mut grads[b.0], neg);
                }
            }
            Op::Mul { a, b } => {
                if self.rg(*a) {
                    let d = gout.iter().zip(self.value(*b).data()).map(|(&g, &y)| g * y).collect();
                    add_owned(&mut grads[a.0], d);
                }
                if self.rg(*b) {
                    let d = gout.iter().zip(self.value(*a).data()).map(|(&g, &y)| g * y).collect();
                    add_owned(&mut grads[b.0], d);
                }
            }
            Op::MulChannel { x, factor, per_sample } => {
                let xs = self.value(*x);
                let c = xs.shape()[1];
                let plane: usize = xs.shape()[2..].iter().product();
                let f = self.value(*factor).data();
                let index = |i: usize| {
                    let nc = i / plane;
                    if *per_sample {
                        nc
                    } else {
                        nc % c
                    }
                };
                if self.rg(*x) {
                    let dx = gout.iter().enumerate().map(|(i, &g)| g * f[index(i)]).collect();
                    add_owned(&mut grads[x.0], dx);
                }
                if self.rg(*factor) {
                    let mut df = vec![T::zero(); f.len()];
                    for (i, (&g, &v)) in gout.iter().zip(xs.data()).enumerate() {
                        let j = index(i);
                        df[j] = df[j] + g * v;
                    }
                    add_owned(&mut grads[factor.0], df);
                }
            }
            Op::Concat { parts } => {
                let (n, total, h, w) = node.value.dims4().expect("4-D");
                let hw = h * w;
                let mut offset = 0;
                for &p in parts {
                    let pc = self.shape(p)[1];
                    if self.rg(p) {
                        let mut d = Vec::with_capacity(n * pc * hw);
                        for b in 0..n {
                            let start = (b * total + offset) * hw;
                            d.extend_from_slice(&gout[start..start + pc * hw]);
                        }
                        add_owned(&mut grads[p.0], d);
                    }
                    offset += pc;
                }
            }
            Op::MatMul { a, b, m, k, n } => {
                let (m, k, n) = (*m, *k, *n);
                if self.rg(*a) {
                    // dA = dC · Bᵀ
                    let mut da = vec![T::zero(); m * k];
                    T::gemm(m, n, k, T::one(), gout, (n as isize, 1), self.value(*b).data(), (1, n as isize), T::zero(), &mut da, (k as isize, 1));
                    add_owned(&mut grads[a.0], da);
                }
                if self.rg(*b) {
                    // dB = Aᵀ · dC
                    let mut db = vec![T::zero(); k * n];
                    T::gemm(k, m, n, T::one(), self.value(*a).data(), (1, k as isize), gout, (n as isize, 1), T::zero(), &mut db, (n as isize, 1));
                    add_owned(&mut grads[b.0], db);
                }
            }
            Op::Transpose { x, rows, cols } => {
                let mut d = vec![T::zero(); rows * cols];
                for r in 0..*rows {
                    for c in 0..*cols {
                        d[r * cols + c] = gout[c * rows + r];
                    }
                }
                add_owned(&mut grads[x.0], d);
            }
            Op::Sum { x } => {
                let d = vec![gout[0]; self.value(*x).numel()];
                add_owned(&mut grads[x.0], d);
            }
            Op::Mean { x } => {
                let n = self.value(*x).numel();
                let d = vec![gout[0] / T::of(n as f64); n];
                add_owned(&mut grads[x.0], d);
            }
            Op::SampleMse { pred, target } => {
                let (p, t) = (self.value(*pred).data(), self.value(*target).data());
                let n = gout.len();
                let per = p.len() / n;
                let two_over = T::of(2.0) / T::of(per as f64);
                let diff = |sign: T| -> Vec<T> {
                    p.iter()
                        .zip(t)
                        .enumerate()
                        .map(|(i, (&a, &b))| sign * gout[i / per] * two_over * (a - b))
                        .collect()
                };
                if self.rg(*pred) {
                    add_owned(&mut grads[pred.0], diff(T::one()));
                }
                if self.rg(*target) {
                    add_owned(&mut grads[target.0], diff(-T::one()));
                }
            }
            Op::Powf { x, p } => {
                let d = self
                    .value(*x)
                    .data()
                    .iter()
                    .zip(gout)
                    .map(|(&v, &g)| if *p == T::zero() { T::zero() } else { g * *p * v.powf(*p - T::one()) })
                    .collect();
                add_owned(&mut grads[x.0], d);
            }
            Op::ScaleConst { x, factors } => {
                let d = gout.iter().zip(factors).map(|(&g, &f)| g * f).collect();
                add_owned(&mut grads[x.0], d);
            }
        }
    }
}
