#![allow(dead_code)]

use std::path::PathBuf;

use qpalf::autograd::{finite_diff_check, finite_diff_check_with_margin, GradCheckReport, Graph, Tensor, Var};
use qpalf::dataset::{build_dataset, list_images, shuffle_mix, split_train_valid, BuildOptions, DatasetFile};
use qpalf::net::{qpam_forward, qpalf_forward, NetVars, NetworkConfig, QpBatch, QpDomain, QpalfWeights, Variant};
use qpalf::par::Exec;
use qpalf::train::{fit, loss_graph, LossConfig, Schedule, TrainOptions};
use qpalf::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const H: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

pub fn testdata() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata")
}

pub fn images() -> Vec<PathBuf> {
    list_images(testdata().join("images")).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(lo..hi))
}

/// Uniform in ±[0.1, 1], away from the PReLU kink.
pub fn off_kink(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| {
        let m = rng.random_range(0.1..1.0);
        if rng.random_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

/// Direct nested-loop convolution with zero padding, stride 1.
pub fn naive_conv(x: &Tensor<f64>, w: &Tensor<f64>, b: &Tensor<f64>, pad: usize) -> Vec<f64> {
    let (n, cin, h, wd) = x.dims4().unwrap();
    let (cout, _, kh, kw) = w.dims4().unwrap();
    let oh = h + 2 * pad + 1 - kh;
    let ow = wd + 2 * pad + 1 - kw;
    let mut out = vec![0.0; n * cout * oh * ow];
    for s in 0..n {
        for o in 0..cout {
            for y in 0..oh {
                for xo in 0..ow {
                    let mut acc = b.data()[o];
                    for c in 0..cin {
                        for i in 0..kh {
                            for j in 0..kw {
                                let yy = y as isize + i as isize - pad as isize;
                                let xx = xo as isize + j as isize - pad as isize;
                                if yy < 0 || xx < 0 || yy >= h as isize || xx >= wd as isize {
                                    continue;
                                }
                                acc += x.data()[((s * cin + c) * h + yy as usize) * wd + xx as usize]
                                    * w.data()[((o * cin + c) * kh + i) * kw + j];
                            }
                        }
                    }
                    out[((s * cout + o) * oh + y) * ow + xo] = acc;
                }
            }
        }
    }
    out
}

type OpFn = Box<dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var>>;

pub struct OpCase {
    pub name: &'static str,
    pub f: OpFn,
    pub inputs: Vec<Tensor<f64>>,
}

fn case(name: &'static str, inputs: Vec<Tensor<f64>>, f: impl Fn(&mut Graph<f64>, &[Var]) -> Result<Var> + 'static) -> OpCase {
    OpCase {
        name,
        f: Box::new(f),
        inputs,
    }
}

/// Every differentiable graph op, reduced to a scalar through a fixed random
/// projection so each output coordinate gets a distinct weight.
pub fn op_cases(seed: u64) -> Vec<OpCase> {
    let mut r = rng(seed);
    let proj = |r: &mut ChaCha8Rng, n: usize| uniform(r, &[n], -1.0, 1.0);
    fn project(g: &mut Graph<f64>, y: Var, p: &Tensor<f64>) -> Result<Var> {
        let shape = g.shape(y).to_vec();
        let p = g.constant(p.clone().reshape(shape)?);
        let m = g.mul(y, p)?;
        Ok(g.sum(m))
    }

    let mut cases = Vec::new();
    for (k, pad) in [(3usize, 1usize), (1, 0)] {
        let p = proj(&mut r, 2 * 3 * (5 + 2 * pad + 1 - k) * (4 + 2 * pad + 1 - k));
        cases.push(case(
            if k == 3 { "conv2d_3x3" } else { "conv2d_1x1" },
            vec![
                uniform(&mut r, &[2, 2, 5, 4], -1.0, 1.0),
                uniform(&mut r, &[3, 2, k, k], -1.0, 1.0),
                uniform(&mut r, &[3], -1.0, 1.0),
            ],
            move |g, v| {
                let y = g.conv2d(v[0], v[1], v[2], pad)?;
                project(g, y, &p)
            },
        ));
    }
    let p = proj(&mut r, 2 * 3 * 3 * 3);
    cases.push(case(
        "prelu",
        vec![off_kink(&mut r, &[2, 3, 3, 3]), uniform(&mut r, &[3], 0.05, 0.5)],
        move |g, v| {
            let y = g.prelu(v[0], v[1])?;
            project(g, y, &p)
        },
    ));
    let p = proj(&mut r, 6);
    cases.push(case("softplus", vec![uniform(&mut r, &[6], -4.0, 4.0)], move |g, v| {
        let y = g.softplus(v[0]);
        project(g, y, &p)
    }));
    for name in ["add", "sub", "mul"] {
        let p = proj(&mut r, 12);
        cases.push(case(
            name,
            vec![uniform(&mut r, &[3, 4], -1.0, 1.0), uniform(&mut r, &[3, 4], -1.0, 1.0)],
            move |g, v| {
                let y = match name {
                    "add" => g.add(v[0], v[1])?,
                    "sub" => g.sub(v[0], v[1])?,
                    _ => g.mul(v[0], v[1])?,
                };
                project(g, y, &p)
            },
        ));
    }
    let p = proj(&mut r, 2 * 3 * 2 * 2);
    let p2 = p.clone();
    cases.push(case(
        "mul_channel_shared",
        vec![uniform(&mut r, &[2, 3, 2, 2], -1.0, 1.0), uniform(&mut r, &[3], 0.1, 2.0)],
        move |g, v| {
            let y = g.mul_channel(v[0], v[1])?;
            project(g, y, &p)
        },
    ));
    cases.push(case(
        "mul_channel_per_sample",
        vec![uniform(&mut r, &[2, 3, 2, 2], -1.0, 1.0), uniform(&mut r, &[2, 3], 0.1, 2.0)],
        move |g, v| {
            let y = g.mul_channel(v[0], v[1])?;
            project(g, y, &p2)
        },
    ));
    let p = proj(&mut r, 2 * 6 * 2 * 3);
    cases.push(case(
        "concat_channels",
        vec![
            uniform(&mut r, &[2, 1, 2, 3], -1.0, 1.0),
            uniform(&mut r, &[2, 2, 2, 3], -1.0, 1.0),
            uniform(&mut r, &[2, 3, 2, 3], -1.0, 1.0),
        ],
        move |g, v| {
            let y = g.concat_channels(v)?;
            project(g, y, &p)
        },
    ));
    let p = proj(&mut r, 3 * 2);
    cases.push(case(
        "matmul",
        vec![uniform(&mut r, &[3, 4], -1.0, 1.0), uniform(&mut r, &[4, 2], -1.0, 1.0)],
        move |g, v| {
            let y = g.matmul(v[0], v[1])?;
            project(g, y, &p)
        },
    ));
    let p = proj(&mut r, 3);
    cases.push(case(
        "matmul_vector",
        vec![uniform(&mut r, &[3, 4], -1.0, 1.0), uniform(&mut r, &[4], -1.0, 1.0)],
        move |g, v| {
            let y = g.matmul(v[0], v[1])?;
            project(g, y, &p)
        },
    ));
    let p = proj(&mut r, 12);
    cases.push(case("transpose", vec![uniform(&mut r, &[3, 4], -1.0, 1.0)], move |g, v| {
        let y = g.transpose(v[0])?;
        project(g, y, &p)
    }));
    cases.push(case("sum", vec![uniform(&mut r, &[2, 3], -1.0, 1.0)], |g, v| {
        let m = g.mul(v[0], v[0])?;
        Ok(g.sum(m))
    }));
    cases.push(case("mean", vec![uniform(&mut r, &[2, 3], -1.0, 1.0)], |g, v| {
        let m = g.mul(v[0], v[0])?;
        Ok(g.mean(m))
    }));
    let p = proj(&mut r, 3);
    cases.push(case(
        "sample_mse",
        vec![uniform(&mut r, &[3, 1, 2, 2], 0.0, 1.0), uniform(&mut r, &[3, 1, 2, 2], 0.0, 1.0)],
        move |g, v| {
            let y = g.sample_mse(v[0], v[1])?;
            project(g, y, &p)
        },
    ));
    let p = proj(&mut r, 5);
    cases.push(case("powf", vec![uniform(&mut r, &[5], 0.2, 2.0)], move |g, v| {
        let y = g.powf(v[0], 2.5);
        project(g, y, &p)
    }));
    let factors: Vec<f64> = (0..4).map(|_| r.random_range(-2.0..2.0)).collect();
    cases.push(case("scale_const", vec![uniform(&mut r, &[4], -1.0, 1.0)], move |g, v| {
        let y = g.scale_const(v[0], factors.clone())?;
        let m = g.mul(y, y)?;
        Ok(g.sum(m))
    }));

    let domain = QpDomain::default();
    for (name, qps) in [("qpam_uniform_batch", vec![27, 27]), ("qpam_mixed_batch", vec![22, 37])] {
        let batch = QpBatch::new(&domain, &qps).unwrap();
        let p = proj(&mut r, 2 * 3 * 2 * 2);
        cases.push(case(
            name,
            vec![uniform(&mut r, &[2, 3, 2, 2], -1.0, 1.0), uniform(&mut r, &[3, domain.m()], -1.0, 1.0)],
            move |g, v| {
                let y = qpam_forward(g, v[0], &batch, v[1])?;
                project(g, y, &p)
            },
        ));
    }
    cases
}

pub fn check_op(c: &OpCase) -> GradCheckReport {
    finite_diff_check(&c.f, &c.inputs, H).unwrap_or_else(|e| panic!("{}: {e}", c.name))
}

/// Weights with every tensor perturbed so that no gradient is trivially zero.
pub fn randomized_weights(config: &NetworkConfig, seed: u64, noise: f64) -> QpalfWeights {
    let mut w = QpalfWeights::init(config, seed).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let normal = Normal::new(0.0, noise).unwrap();
    for p in w.store.iter_mut() {
        for v in p.tensor.data_mut() {
            *v += normal.sample(&mut r) as f32;
        }
    }
    w
}

/// Kink margin for the whole-network check; a step of `H` moves any PReLU
/// input by far less than this.
pub const NET_KINK_MARGIN: f64 = 1e-4;

/// Focal MSE through a full C=8, D=2, m=4 network, checked against every
/// parameter. Resamples the base point when it lies on a PReLU kink.
pub fn network_focal_gradcheck(seed: u64) -> (u64, GradCheckReport) {
    let config = NetworkConfig::new(8, 2, Variant::Qpam, QpDomain::default()).unwrap();
    for attempt in 0..32u64 {
        let s = seed + attempt;
        let w = randomized_weights(&config, s, 0.05);
        let store = w.store.cast::<f64>();
        let inputs: Vec<Tensor<f64>> = store.iter().map(|p| p.tensor.clone()).collect();
        let mut r = rng(s);
        let x = uniform(&mut r, &[2, 1, 4, 4], 0.0, 1.0);
        let target = Tensor::from_fn(vec![2, 1, 4, 4], |i| x.data()[i] + r.random_range(-0.1..0.1));
        let qps = vec![22, 37];
        let loss = LossConfig::focal();
        let cfg = config.clone();
        let res = finite_diff_check_with_margin(
            |g, vars| {
                let nv = NetVars::from_vars(g, vars, &cfg)?;
                let xv = g.constant(x.clone());
                let batch = QpBatch::new(&cfg.qp_domain, &qps)?;
                let y = qpalf_forward(g, xv, &batch, &nv, &cfg)?;
                let t = g.constant(target.clone());
                loss_graph(g, y, t, &x, &qps, &loss)
            },
            &inputs,
            H,
            NET_KINK_MARGIN,
        );
        match res {
            Ok(report) => return (s, report),
            Err(qpalf::Error::Evaluation(_)) => continue,
            Err(e) => panic!("network gradcheck: {e}"),
        }
    }
    panic!("no kink-free base point in 32 attempts");
}

pub const TOY_QPS: [i32; 2] = [27, 37];

/// Train/valid split of the bundled images coded at 27 and 37.
pub fn toy_datasets() -> (DatasetFile, DatasetFile) {
    let (train_imgs, valid_imgs) = split_train_valid(&images(), 7.0 / 8.0, 0).unwrap();
    let opts = BuildOptions {
        qps: TOY_QPS.to_vec(),
        ..Default::default()
    };
    let (train, _) = build_dataset(&train_imgs, &opts, Exec::default()).unwrap();
    let (valid, _) = build_dataset(&valid_imgs, &opts, Exec::default()).unwrap();
    (shuffle_mix(vec![train], 1).unwrap(), valid)
}

pub fn toy_config() -> NetworkConfig {
    NetworkConfig::new(16, 2, Variant::Qpam, QpDomain::list(TOY_QPS.to_vec()).unwrap()).unwrap()
}

/// C=16, D=2 QPAM network, 300 steps at batch 16 and lr 1e-4.
pub fn train_toy(train: &DatasetFile) -> QpalfWeights {
    let init = QpalfWeights::init(&toy_config(), 0).unwrap();
    let schedule = Schedule {
        batch_size: 16,
        initial_lr: 1e-4,
        max_steps: Some(300),
        seed: 0,
        ..Default::default()
    };
    let (w, history) = fit(init, train, None, &schedule, &LossConfig::default(), &TrainOptions::default()).unwrap();
    assert_eq!(history.total_steps(), 300);
    w
}
