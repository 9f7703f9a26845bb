//! Acceptance criteria 1–13. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any fails.

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use qpalf::autograd::{Graph, Tensor};
use qpalf::codec::{encode_decode, load_pgm, CodecConfig, FramePlane};
use qpalf::config::RunConfig;
use qpalf::dataset::{
    build_dataset, extract_patches, patch_count, BuildOptions, DatasetFile, DEFAULT_PATCH, DEFAULT_STRIDE,
};
use qpalf::eval::{bd_rate, filter_frame, rd_gate, sse, RdCurve, RdPoint, DEFAULT_LAMBDA_SCALE};
use qpalf::net::{
    load_weights_any, qpam_forward, qpalf_forward, save_weights, NetVars, NetworkConfig, QpBatch, QpDomain,
    QpalfWeights, Variant, IDENTITY_ATTENTION_LOGIT,
};
use qpalf::par::Exec;
use qpalf::pipeline::{build_dataset_files, eval_files, report_path_for, run_training, BuildRequest, CDF_FILE, METRICS_FILE};
use qpalf::train::{
    evaluate_samples, focal_mse_value, gain_by_qp, loss_graph, loss_mse, per_sample_mse, LossConfig, LossMode,
    Schedule, TrainProtocol,
};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Duration, Box<dyn FnMut() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn c1_gradients() -> Outcome {
    let mut worst: (f64, &str) = (0.0, "");
    let mut ops = 0;
    for seed in 0..3 {
        for c in op_cases(seed) {
            let r = check_op(&c);
            ensure!(r.max_rel_error <= GRAD_TOL, "{} seed {seed}: rel error {:e}", c.name, r.max_rel_error);
            if r.max_rel_error >= worst.0 {
                worst = (r.max_rel_error, c.name);
            }
            ops += 1;
        }
    }
    let (seed, r) = network_focal_gradcheck(0);
    ensure!(
        r.max_rel_error <= GRAD_TOL,
        "network (seed {seed}): rel error {:e} at input {} index {}",
        r.max_rel_error,
        r.worst_input,
        r.worst_index
    );
    Ok(format!(
        "{ops} op checks, worst {:.1e} ({}); network {} coords, max rel error {:.1e}",
        worst.0, worst.1, r.checked, r.max_rel_error
    ))
}

fn c2_conv_oracle() -> Outcome {
    let mut r = rng(2);
    let mut worst = 0.0f64;
    let trials = 300;
    for _ in 0..trials {
        let (n, cin, cout) = (r.random_range(1..=4), r.random_range(1..=4), r.random_range(1..=4));
        let (h, w) = (r.random_range(1..=8), r.random_range(1..=8));
        let k = if r.random_bool(0.5) { 1 } else { 3 };
        let x = uniform(&mut r, &[n, cin, h, w], -1.0, 1.0);
        let wt = uniform(&mut r, &[cout, cin, k, k], -1.0, 1.0);
        let b = uniform(&mut r, &[cout], -1.0, 1.0);
        let expected = naive_conv(&x, &wt, &b, k / 2);
        let mut g = Graph::<f64>::new();
        let (xv, wv, bv) = (g.constant(x), g.constant(wt), g.constant(b));
        let y = g.conv2d(xv, wv, bv, k / 2).map_err(err)?;
        for (a, e) in g.value(y).data().iter().zip(&expected) {
            worst = worst.max((a - e).abs());
        }
    }
    ensure!(worst <= 1e-6, "max abs error {worst:e}");
    Ok(format!("{trials} random shapes, max abs error {worst:.1e}"))
}

fn c3_residual_identities() -> Outcome {
    let config = NetworkConfig::new(8, 2, Variant::Qpam, QpDomain::default()).map_err(err)?;
    let mut r = rng(3);
    let x = uniform(&mut r, &[3, 1, 12, 10], 0.0, 1.0).cast::<f32>();
    let qps = [22, 32, 37];

    let mut w = randomized_weights(&config, 3, 0.1);
    w.zero_reconstruction();
    let y = w.infer(&x, &qps).map_err(err)?;
    ensure!(
        y.data().iter().zip(x.data()).all(|(a, b)| a.to_bits() == b.to_bits()),
        "zero reconstruction is not the identity"
    );

    let mut qpam = randomized_weights(&config, 4, 0.1);
    let mut plain_tensors = Vec::new();
    for p in qpam.store.iter_mut() {
        if p.name.ends_with("qpam.U") {
            p.tensor.data_mut().fill(IDENTITY_ATTENTION_LOGIT as f32);
        } else {
            plain_tensors.push(p.tensor.clone());
        }
    }
    let plain_cfg = NetworkConfig { variant: Variant::Plain, ..config.clone() };
    let plain = QpalfWeights::from_tensors(plain_cfg, plain_tensors).map_err(err)?;
    let a = qpam.infer(&x, &qps).map_err(err)?;
    let b = plain.infer(&x, &qps).map_err(err)?;
    let diff = a.data().iter().zip(b.data()).map(|(p, q)| (p - q).abs()).fold(0.0f32, f32::max);
    ensure!(diff <= 1e-6, "QPAM vs plain differ by {diff:e}");
    Ok(format!("identity bit-exact; QPAM vs plain max diff {diff:.1e}"))
}

fn c4_one_hot_locality() -> Outcome {
    let domain = QpDomain::default();
    let mut r = rng(4);
    let f = uniform(&mut r, &[3, 5, 4, 4], -1.0, 1.0);
    let u = uniform(&mut r, &[5, domain.m()], -1.0, 1.0);
    for qps in [vec![27, 27, 27], vec![22, 37, 22]] {
        let active: Vec<usize> = qps.iter().map(|&q| domain.index_of(q)).collect();
        let mut u2 = u.clone();
        for (i, v) in u2.data_mut().iter_mut().enumerate() {
            if !active.contains(&(i % domain.m())) {
                *v += r.random_range(-5.0..5.0);
            }
        }
        let run = |u: &Tensor<f64>| -> Result<Vec<u64>, String> {
            let mut g = Graph::<f64>::new();
            let batch = QpBatch::new(&domain, &qps).map_err(err)?;
            let (fv, uv) = (g.constant(f.clone()), g.constant(u.clone()));
            let y = qpam_forward(&mut g, fv, &batch, uv).map_err(err)?;
            Ok(g.value(y).data().iter().map(|v| v.to_bits()).collect())
        };
        ensure!(run(&u)? == run(&u2)?, "inactive columns changed the output for {qps:?}");
    }

    let config = NetworkConfig::new(4, 2, Variant::Qpam, domain.clone()).map_err(err)?;
    let w = randomized_weights(&config, 4, 0.1);
    let store = w.store.cast::<f64>();
    let mut g = Graph::<f64>::new();
    let vars: Vec<_> = store.iter().map(|p| g.leaf(p.tensor.clone().with_grad())).collect();
    let nv = NetVars::from_vars(&g, &vars, &config).map_err(err)?;
    let x = uniform(&mut r, &[2, 1, 8, 8], 0.0, 1.0);
    let t = Tensor::from_fn(vec![2, 1, 8, 8], |i| x.data()[i] + 0.05 * ((i % 7) as f64 - 3.0) / 3.0);
    let qps = [32, 32];
    let batch = QpBatch::new(&domain, &qps).map_err(err)?;
    let xv = g.constant(x.clone());
    let y = qpalf_forward(&mut g, xv, &batch, &nv, &config).map_err(err)?;
    let tv = g.constant(t);
    let loss = loss_graph(&mut g, y, tv, &x, &qps, &LossConfig::focal()).map_err(err)?;
    let grads = g.gradients(loss).map_err(err)?;
    let active = domain.index_of(32);
    let mut checked = 0;
    for (p, v) in store.iter().zip(&vars) {
        if !p.name.ends_with("qpam.U") {
            continue;
        }
        let gu = grads.of(*v).ok_or("no gradient for U")?;
        let m = domain.m();
        ensure!(
            gu.iter().enumerate().all(|(i, &d)| i % m == active || d == 0.0),
            "{}: nonzero gradient outside the active column",
            p.name
        );
        ensure!(gu.iter().enumerate().any(|(i, &d)| i % m == active && d != 0.0), "{}: active column has zero gradient", p.name);
        checked += 1;
    }
    Ok(format!("forward bit-identical; {checked} U gradients zero outside the active column"))
}

struct Toy {
    weights: QpalfWeights,
    valid: DatasetFile,
}

fn c5_toy_training(toy: &mut Option<Toy>) -> Outcome {
    let (train, valid) = toy_datasets();
    let weights = train_toy(&train);
    let samples = evaluate_samples(&weights, &valid, &LossConfig::default(), 32).map_err(err)?;
    let gains = gain_by_qp(&samples);
    let text = gains.iter().map(|(q, g)| format!("qp{q} {g:+.3} dB")).collect::<Vec<_>>().join(", ");
    *toy = Some(Toy { weights, valid: valid.clone() });
    ensure!(gains.len() == TOY_QPS.len(), "missing QPs in validation: {text}");
    ensure!(gains.values().all(|&g| g > 0.0), "validation gain not positive: {text}");
    Ok(format!("{} train / {} valid patches; {text}", train.len(), valid.len()))
}

fn c6_qp_conditioning(toy: &Option<Toy>) -> Outcome {
    let toy = toy.as_ref().ok_or("criterion 5 model unavailable")?;
    let (lo, hi) = (TOY_QPS[0], TOY_QPS[1]);
    let swap = |q: i32| if q == lo { hi } else { lo };
    let (mut correct, mut swapped, mut n) = (0.0, 0.0, 0usize);
    let idx: Vec<usize> = (0..toy.valid.len()).collect();
    for chunk in idx.chunks(32) {
        let b = toy.valid.batch(chunk);
        let other: Vec<i32> = b.qps.iter().map(|&q| swap(q)).collect();
        let y = toy.weights.infer(&b.recon, &b.qps).map_err(err)?;
        let ys = toy.weights.infer(&b.recon, &other).map_err(err)?;
        correct += per_sample_mse(&y, &b.orig).map_err(err)?.iter().sum::<f64>();
        swapped += per_sample_mse(&ys, &b.orig).map_err(err)?.iter().sum::<f64>();
        n += chunk.len();
    }
    let (correct, swapped) = (correct / n as f64, swapped / n as f64);
    ensure!(correct < swapped, "correct one-hot MSE {correct:e} >= swapped {swapped:e}");
    Ok(format!("mean valid MSE correct {correct:.4e} < swapped {swapped:.4e}"))
}

fn c7_focal_algebra() -> Outcome {
    let mut r = rng(7);
    let pred = uniform(&mut r, &[4, 1, 6, 6], 0.0, 1.0);
    let target = uniform(&mut r, &[4, 1, 6, 6], 0.0, 1.0);
    let input = uniform(&mut r, &[4, 1, 6, 6], 0.0, 1.0);
    let qps = [22, 27, 32, 37];
    let ones = LossConfig {
        mode: LossMode::Focal,
        alphas: qps.iter().map(|&q| (q, 1.0)).collect(),
        gamma: 0.0,
        epsilon: 1e-12,
    };
    let mse = loss_mse(&pred, &target).map_err(err)?;
    ensure!(focal_mse_value(&pred, &target, &input, &qps, &ones).map_err(err)? == mse, "numeric focal(γ=0, α=1) != MSE");
    let mut g = Graph::<f64>::new();
    let (pv, tv) = (g.constant(pred.clone()), g.constant(target.clone()));
    let l = loss_graph(&mut g, pv, tv, &input, &qps, &ones).map_err(err)?;
    ensure!(g.value(l).item() == mse, "graph focal(γ=0, α=1) != MSE");

    let focal = LossConfig::focal();
    let residual = |q: i32| -> Result<f64, String> {
        let t = Tensor::<f64>::full(vec![1, 1, 4, 4], 0.5);
        let p = Tensor::<f64>::full(vec![1, 1, 4, 4], 0.55);
        let x = Tensor::<f64>::full(vec![1, 1, 4, 4], 0.6);
        focal_mse_value(&p, &t, &x, &[q], &focal).map_err(err)
    };
    let ratio = residual(22)? / residual(37)?;
    ensure!((ratio - 0.1 / 0.35).abs() <= 1e-9, "qp22/qp37 ratio {ratio}");

    let mut checks = 0;
    for _ in 0..20_000 {
        let gamma = r.random_range(0.0..3.0);
        let cfg = LossConfig { gamma, ..LossConfig::focal() };
        let q = qps[r.random_range(0..4)];
        let (rec, init, d) = (r.random_range(1e-6..1.0), r.random_range(1e-6..1.0), r.random_range(1e-4..1.0));
        let base = cfg.sample_loss(q, rec, init).map_err(err)?;
        ensure!(cfg.sample_loss(q, rec + d, init).map_err(err)? > base, "not increasing in L_rec (γ={gamma})");
        let harder = cfg.sample_loss(q, rec, init + d).map_err(err)?;
        ensure!(if gamma > 0.0 { harder < base } else { harder == base }, "wrong trend in L_init (γ={gamma})");
        checks += 1;
    }
    Ok(format!("γ=0 exact; ratio {ratio:.12}; {checks} monotonicity draws"))
}

fn c8_schedule() -> Outcome {
    let s = Schedule::default();
    let lrs: Vec<f64> = (0..100).map(|e| s.lr_at_epoch(e)).collect();
    for (k, want) in [1e-4, 5e-5, 2.5e-5, 1.25e-5].into_iter().enumerate() {
        let block = &lrs[25 * k..25 * (k + 1)];
        ensure!(block.iter().all(|&v| v == want), "epochs {}..{}: {block:?}", 25 * k, 25 * (k + 1));
    }
    Ok("1e-4 x25, 5e-5 x25, 2.5e-5 x25, 1.25e-5 x25".into())
}

fn c9_bd_rate() -> Outcome {
    let base = [(0.35, 31.2), (0.61, 34.0), (1.05, 36.9), (1.80, 39.7)];
    let curve = |k: f64| RdCurve::new(base.iter().map(|&(r, p)| RdPoint { rate: r * k, psnr: p }).collect());
    let a = curve(1.0).map_err(err)?;
    let same = bd_rate(&a, &a).map_err(err)?;
    let up = bd_rate(&a, &curve(1.1).map_err(err)?).map_err(err)?;
    let down = bd_rate(&a, &curve(0.9).map_err(err)?).map_err(err)?;
    ensure!(same.abs() <= 1e-9, "identical: {same}");
    ensure!((up - 10.0).abs() <= 1e-3, "x1.1: {up}");
    ensure!((down + 10.0).abs() <= 1e-3, "x0.9: {down}");
    Ok(format!("identical {same:.1e}%, x1.1 {up:+.6}%, x0.9 {down:+.6}%"))
}

fn c10_codec() -> Outcome {
    let mut lines = Vec::new();
    for p in images() {
        let img = load_pgm(&p).map_err(err)?;
        let mut prev = -1.0;
        for qp in [22, 27, 32, 37] {
            let m = qpalf::eval::mse(&img, &encode_decode(&img, &CodecConfig::new(qp)).map_err(err)?).map_err(err)?;
            ensure!(m >= prev, "{}: MSE decreased at qp {qp}", p.display());
            prev = m;
        }
        let m4 = qpalf::eval::mse(&img, &encode_decode(&img, &CodecConfig::new(4)).map_err(err)?).map_err(err)?;
        ensure!(m4 <= 1.0, "{}: qp4 MSE {m4}", p.display());
        lines.push(m4);
    }
    for (w, h, v) in [(16, 16, 0u8), (24, 40, 128), (64, 8, 255), (13, 27, 77)] {
        let flat = FramePlane::filled(w, h, v);
        for qp in [22, 37, 51] {
            let out = encode_decode(&flat, &CodecConfig::new(qp)).map_err(err)?;
            ensure!(out == flat, "constant {v} {w}x{h} at qp {qp} not exact");
        }
    }
    let worst = lines.iter().cloned().fold(0.0, f64::max);
    Ok(format!("{} images monotone; worst qp4 MSE {worst:.3}; constant frames exact", lines.len()))
}

fn c11_dataset() -> Outcome {
    let mut sizes = 0;
    for w in (40..=200).step_by(7) {
        for h in [64, 65, 80, 81, 100, 143] {
            let orig = FramePlane::filled(w, h, 90);
            let recon = FramePlane::filled(w, h, 92);
            let n = extract_patches(&recon, &orig, 32, DEFAULT_PATCH, DEFAULT_STRIDE).map_err(err)?.len();
            let f = |d: usize| if d < 64 { 0 } else { (d - 64) / 16 + 1 };
            ensure!(n == f(w) * f(h) && patch_count(w, 64, 16) == f(w), "{w}x{h}: {n} patches");
            sizes += 1;
        }
    }
    let (data, _) = build_dataset(&images(), &BuildOptions::default(), Exec::default()).map_err(err)?;
    ensure!(
        data.records().iter().all(|r| (20.0..=50.0).contains(&r.psnr())),
        "a kept record is outside [20, 50] dB"
    );
    let dir = tempfile::tempdir().map_err(err)?;
    let dpath = dir.path().join("d.qpds");
    data.save(&dpath).map_err(err)?;
    let bytes = fs::read(&dpath).map_err(err)?;
    let back = DatasetFile::load(&dpath).map_err(err)?;
    ensure!(back == data && back.encode() == bytes, "dataset round trip differs");

    let w = randomized_weights(&NetworkConfig::default(), 11, 0.1);
    let wpath = dir.path().join("w.qpw");
    save_weights(&w, &wpath).map_err(err)?;
    let wb = fs::read(&wpath).map_err(err)?;
    let w2 = load_weights_any(&wpath).map_err(err)?;
    save_weights(&w2, dir.path().join("w2.qpw")).map_err(err)?;
    ensure!(
        w2 == w && fs::read(dir.path().join("w2.qpw")).map_err(err)? == wb,
        "weight round trip differs"
    );
    Ok(format!("{sizes} sizes; {} records in [20, 50] dB; files round-trip", data.len()))
}

fn c12_gate(toy: &Option<Toy>) -> Outcome {
    let config = NetworkConfig::new(4, 1, Variant::Qpam, QpDomain::default()).map_err(err)?;
    let identity = QpalfWeights::init(&config, 0).map_err(err)?;
    let mut frames = 0;
    let mut enabled = 0;
    for (i, p) in images().iter().enumerate() {
        let img = load_pgm(p).map_err(err)?;
        let crop = img.crop(0, 0, 96, 96).map_err(err)?;
        for qp in [22, 27, 32, 37] {
            let coded = encode_decode(&crop, &CodecConfig::new(qp)).map_err(err)?;
            let d = rd_gate(&crop, &coded, &coded, qp, DEFAULT_LAMBDA_SCALE, 1).map_err(err)?;
            ensure!(!d.enabled, "identity enabled the flag");
            let out = filter_frame(&coded, qp, &identity, Some(&crop)).map_err(err)?;
            ensure!(!out.flag && out.output == coded, "identity network enabled the flag");
            let random = randomized_weights(&config, i as u64 * 4 + qp as u64, 0.2);
            let out = filter_frame(&coded, qp, &random, Some(&crop)).map_err(err)?;
            ensure!(
                sse(&crop, &out.output).map_err(err)? <= sse(&crop, &coded).map_err(err)?,
                "gated output worse than unfiltered"
            );
            enabled += out.flag as usize;
            frames += 1;
        }
    }
    let mut trained = (0, 0);
    if let Some(toy) = toy {
        for p in images() {
            let img = load_pgm(&p).map_err(err)?;
            for qp in TOY_QPS {
                let coded = encode_decode(&img, &CodecConfig::new(qp)).map_err(err)?;
                let out = filter_frame(&coded, qp, &toy.weights, Some(&img)).map_err(err)?;
                ensure!(
                    sse(&img, &out.output).map_err(err)? <= sse(&img, &coded).map_err(err)?,
                    "trained filter: gated output worse than unfiltered"
                );
                trained.0 += out.flag as usize;
                trained.1 += 1;
            }
        }
    }
    Ok(format!(
        "identity never flagged on {frames} frames; random filters on {enabled}/{frames}, trained filter on {}/{}; never worse",
        trained.0, trained.1
    ))
}

fn pipeline_run(root: &std::path::Path, exec: Exec) -> Result<Vec<(String, Vec<u8>)>, String> {
    let train = root.join("train.qpds");
    let valid = root.join("valid.qpds");
    let req = BuildRequest {
        images_dir: testdata().join("images"),
        options: BuildOptions { qps: vec![22, 37], ..Default::default() },
        out: train.clone(),
        valid_out: Some(valid.clone()),
        valid_ratio: 7.0 / 8.0,
        seed: 5,
    };
    build_dataset_files(&req, exec).map_err(err)?;
    let mut cfg = RunConfig::default();
    for (k, v) in [("channels", "8"), ("rfa_count", "1"), ("qps", "22,37"), ("batch_size", "16"), ("max_steps", "50"), ("seed", "5")] {
        cfg.set(k, v).map_err(err)?;
    }
    cfg.train_data = Some(train.clone());
    cfg.valid_data = Some(valid.clone());
    cfg.out_dir = Some(root.join("run"));
    let weights = run_training(&cfg, TrainProtocol::Combined, exec).map_err(err)?;
    eval_files(&weights[0], &valid, &root.join("eval"), exec).map_err(err)?;
    let files = [
        report_path_for(&train),
        report_path_for(&valid),
        root.join("run/combined_history.csv"),
        root.join("eval").join(METRICS_FILE),
        root.join("eval").join(CDF_FILE),
    ];
    files
        .iter()
        .map(|p| Ok((p.strip_prefix(root).unwrap().display().to_string(), fs::read(p).map_err(err)?)))
        .collect()
}

fn c13_determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().map_err(err)?, tempfile::tempdir().map_err(err)?);
    let first = pipeline_run(a.path(), Exec::Parallel)?;
    let second = pipeline_run(b.path(), Exec::Sequential)?;
    for ((name, x), (_, y)) in first.iter().zip(&second) {
        ensure!(x == y, "{name} differs between runs");
    }
    Ok(format!("{} CSVs byte-identical across parallel and sequential runs", first.len()))
}

fn main() {
    // `cargo test -- --list` and similar probes expect no work.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut toy = None;
    let criteria: Vec<Criterion> = vec![
        (1, "gradient suite", Duration::from_secs(60), Box::new(c1_gradients)),
        (2, "convolution oracle", Duration::from_secs(30), Box::new(c2_conv_oracle)),
        (3, "residual identities", Duration::from_secs(10), Box::new(c3_residual_identities)),
        (4, "one-hot locality", Duration::from_secs(10), Box::new(c4_one_hot_locality)),
        (5, "toy training", Duration::from_secs(600), Box::new(|| c5_toy_training(&mut toy))),
    ];
    let mut failed = run_all(criteria);
    let rest: Vec<Criterion> = vec![
        (6, "QP conditioning", Duration::from_secs(60), Box::new(|| c6_qp_conditioning(&toy))),
        (7, "focal loss algebra", Duration::from_secs(30), Box::new(c7_focal_algebra)),
        (8, "schedule", Duration::from_secs(1), Box::new(c8_schedule)),
        (9, "BD-rate oracle", Duration::from_secs(1), Box::new(c9_bd_rate)),
        (10, "codec monotonicity", Duration::from_secs(30), Box::new(c10_codec)),
        (11, "dataset formula", Duration::from_secs(30), Box::new(c11_dataset)),
        (12, "gate strictness", Duration::from_secs(10), Box::new(|| c12_gate(&toy))),
        (13, "end-to-end determinism", Duration::from_secs(300), Box::new(c13_determinism)),
    ];
    failed += run_all(rest);
    println!("acceptance: {} of 13 criteria failed", failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn run_all(criteria: Vec<Criterion>) -> usize {
    let mut failed = 0;
    for (n, name, budget, mut f) in criteria {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(&mut f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let took = start.elapsed();
        let res = match res {
            Ok(detail) if took > budget => Err(format!("{detail}; exceeded {budget:?} budget")),
            other => other,
        };
        let (status, detail) = match &res {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {n:>2} {status} [{:.1}s] {name}: {detail}", took.as_secs_f64());
        failed += res.is_err() as usize;
    }
    failed
}
