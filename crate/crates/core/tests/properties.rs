mod common;

use proptest::prelude::*;
use qpalf::codec::{encode_decode, CodecConfig, FramePlane};
use qpalf::dataset::{extract_patches, filter_by_psnr, patch_count, DatasetFile, PatchRecord};
use qpalf::eval::{bd_rate, filter_frame, gain_rate_cdf, psnr, rd_gate, ssim, RdCurve, RdPoint, DEFAULT_LAMBDA_SCALE};
use qpalf::net::{decode_weights, encode_weights, NetworkConfig, QpDomain, QpalfWeights, Variant};
use qpalf::train::{focal_mse_value, loss_mse, LossConfig, LossMode};

fn plane_strategy(max: usize) -> impl Strategy<Value = FramePlane> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |s| FramePlane::new(w, h, s).unwrap())
    })
}

fn plane_pair(min: usize, max: usize) -> impl Strategy<Value = (FramePlane, FramePlane)> {
    (min..=max, min..=max).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(any::<u8>(), w * h),
            prop::collection::vec(any::<u8>(), w * h),
        )
            .prop_map(move |(a, b)| (FramePlane::new(w, h, a).unwrap(), FramePlane::new(w, h, b).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patch_grid_matches_formula(w in 40usize..160, h in 40usize..160, size in prop::sample::select(vec![16usize, 32, 64]), stride in 4usize..24) {
        let orig = FramePlane::filled(w, h, 100);
        let recon = FramePlane::filled(w, h, 101);
        let patches = extract_patches(&recon, &orig, 32, size, stride).unwrap();
        let expect = |d: usize| if d < size { 0 } else { (d - size) / stride + 1 };
        prop_assert_eq!(patch_count(w, size, stride), expect(w));
        prop_assert_eq!(patches.len(), expect(w) * expect(h));
    }

    #[test]
    fn psnr_and_ssim_are_symmetric((a, b) in plane_pair(11, 24)) {
        let p1 = psnr(&a, &b).unwrap();
        let p2 = psnr(&b, &a).unwrap();
        prop_assert!(p1 == p2 || (p1.is_infinite() && p2.is_infinite()));
        let s1 = ssim(&a, &b).unwrap();
        let s2 = ssim(&b, &a).unwrap();
        prop_assert!((s1 - s2).abs() < 1e-12);
        prop_assert!(s1 <= 1.0 + 1e-12);
    }

    #[test]
    fn self_similarity_is_perfect(a in plane_strategy(24).prop_filter("ssim window", |p| p.width() >= 11 && p.height() >= 11)) {
        prop_assert!(psnr(&a, &a).unwrap().is_infinite());
        prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bd_rate_of_scaled_curve(k in 0.5f64..2.0, base in 0.1f64..0.5, step in 1.2f64..2.0, p0 in 25.0f64..35.0, dp in 1.0f64..4.0) {
        let anchor: Vec<RdPoint> = (0..4).map(|i| RdPoint { rate: base * step.powi(i), psnr: p0 + dp * i as f64 }).collect();
        let test: Vec<RdPoint> = anchor.iter().map(|p| RdPoint { rate: p.rate * k, psnr: p.psnr }).collect();
        let bd = bd_rate(&RdCurve::new(anchor).unwrap(), &RdCurve::new(test).unwrap()).unwrap();
        prop_assert!((bd - (k - 1.0) * 100.0).abs() < 1e-6, "bd {} k {}", bd, k);
    }

    #[test]
    fn cdf_is_monotone_and_complete(values in prop::collection::vec(-1.0f64..1.0, 1..200)) {
        let c = gain_rate_cdf(&values).unwrap();
        prop_assert!(c.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(c.points.last().unwrap().1, 1.0);
        for &v in &values {
            let below = values.iter().filter(|&&x| x <= v).count() as f64 / values.len() as f64;
            prop_assert!((c.fraction_at(v) - below).abs() < 1e-12);
        }
    }

    #[test]
    fn dataset_round_trip(n in 1usize..12, size in 1usize..9, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let qps = [22, 27, 32, 37];
        let records: Vec<PatchRecord> = (0..n)
            .map(|i| {
                use rand::Rng;
                let recon = (0..size * size).map(|_| r.random()).collect();
                let orig = (0..size * size).map(|_| r.random()).collect();
                PatchRecord::new(qps[i % 4], size, recon, orig).unwrap()
            })
            .collect();
        let file = DatasetFile::new(size, qps.to_vec(), records).unwrap();
        let bytes = file.encode();
        prop_assert_eq!(bytes.len(), file.encoded_len());
        let back = DatasetFile::decode(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.encode(), bytes);
    }

    #[test]
    fn psnr_filter_keeps_only_bounded_records(noise in prop::collection::vec(0u8..80, 16)) {
        let records: Vec<PatchRecord> = noise
            .iter()
            .map(|&d| {
                let orig = vec![100u8; 16];
                let recon = orig.iter().enumerate().map(|(i, &o)| if i % 2 == 0 { o + d } else { o - d.min(100) }).collect();
                PatchRecord::new(32, 4, recon, orig).unwrap()
            })
            .collect();
        let n = records.len();
        let (kept, counts) = filter_by_psnr(records, 20.0, 50.0);
        prop_assert!(kept.iter().all(|r| (20.0..=50.0).contains(&r.psnr())));
        prop_assert_eq!(counts.kept + counts.rejected_low + counts.rejected_high, n);
    }

    #[test]
    fn focal_monotone_in_rec_and_init(l_rec in 1e-6f64..1.0, d in 1e-6f64..1.0, l_init in 1e-6f64..1.0, gamma in 0.0f64..3.0, qp in prop::sample::select(vec![22, 27, 32, 37])) {
        let cfg = LossConfig { gamma, ..LossConfig::focal() };
        let base = cfg.sample_loss(qp, l_rec, l_init).unwrap();
        prop_assert!(cfg.sample_loss(qp, l_rec + d, l_init).unwrap() > base);
        let harder = cfg.sample_loss(qp, l_rec, l_init + d).unwrap();
        if gamma > 0.0 {
            prop_assert!(harder < base);
        } else {
            prop_assert_eq!(harder, base);
        }
    }

    #[test]
    fn focal_without_focus_is_mse(vals in prop::collection::vec(0.0f64..1.0, 48), qps in prop::collection::vec(prop::sample::select(vec![22, 27, 32, 37]), 3)) {
        use qpalf::autograd::Tensor;
        let t = |o: usize| Tensor::new(vec![3, 1, 2, 2], vals[o..o + 12].to_vec()).unwrap();
        let (pred, target, input) = (t(0), t(12), t(24));
        let ones = qps.iter().map(|&q| (q, 1.0)).collect();
        let cfg = LossConfig { mode: LossMode::Focal, alphas: ones, gamma: 0.0, epsilon: 1e-12 };
        prop_assert_eq!(focal_mse_value(&pred, &target, &input, &qps, &cfg).unwrap(), loss_mse(&pred, &target).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn weights_round_trip(c in 1usize..6, d in 1usize..3, variant in prop::sample::select(vec![Variant::Qpam, Variant::QpMap, Variant::Plain]), seed in any::<u64>()) {
        let cfg = NetworkConfig::new(c, d, variant, QpDomain::default()).unwrap();
        let w = QpalfWeights::init(&cfg, seed).unwrap();
        let bytes = encode_weights(&w);
        let back = decode_weights(&bytes).unwrap();
        prop_assert_eq!(&back, &w);
        prop_assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn gate_never_worse(seed in any::<u64>(), qp in prop::sample::select(vec![22, 27, 32, 37])) {
        let mut r = common::rng(seed);
        use rand::Rng;
        let (w, h) = (24, 20);
        let orig = FramePlane::new(w, h, (0..w * h).map(|_| r.random()).collect()).unwrap();
        let coded = encode_decode(&orig, &CodecConfig::new(qp)).unwrap();
        let cfg = NetworkConfig::new(2, 1, Variant::Qpam, QpDomain::default()).unwrap();
        let weights = common::randomized_weights(&cfg, seed, 0.3);
        let out = filter_frame(&coded, qp, &weights, Some(&orig)).unwrap();
        let d = out.decision.unwrap();
        prop_assert!(qpalf::eval::sse(&orig, &out.output).unwrap() <= qpalf::eval::sse(&orig, &coded).unwrap());
        prop_assert_eq!(out.flag, d.ssd_filtered < d.ssd_unfiltered);
        let identity = rd_gate(&orig, &coded, &coded, qp, DEFAULT_LAMBDA_SCALE, 1).unwrap();
        prop_assert!(!identity.enabled);
    }
}
