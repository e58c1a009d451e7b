use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use proptest::prelude::*;

use nodal_lab::cascade::{binomial_group_sizes, lln_tail, lln_tail_exact};
use nodal_lab::doubling::{doubling_index, tilde_index, DoublingParams};
use nodal_lab::eigen::Eigenfunction;
use nodal_lab::field::{ScaledField, TrigPolyField};
use nodal_lab::geometry::{CubeSpec, ManifoldId};
use nodal_lab::nodal::squares::{clip_to_box, seg_len};
use nodal_lab::nodal::{extract_nodal_2d, NodalOptions, Region2, SegmentIndex};
use nodal_lab::runner::records::quantile;
use nodal_lab::runner::{read_records, Record};

fn torus_eigenvalue() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![1u64, 2, 5, 10, 13, 25, 50, 65, 85, 100])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn doubling_scalar_invariance(seed in 0u64..1000, c in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let f = TrigPolyField::random(2, 3, 4, 2.0, seed);
        let g = ScaledField { factor: c, inner: &f };
        let q = CubeSpec::new(vec![0.2, -0.1], 0.15).unwrap();
        let p = DoublingParams::default();
        let a = doubling_index(&f, &q, &p).unwrap().index;
        let b = doubling_index(&g, &q, &p).unwrap().index;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn doubling_nonnegative(lambda in torus_eigenvalue(), seed in 0u64..100, x in 0.0..TAU, y in 0.0..TAU, h in 0.02..0.3f64) {
        let u = Eigenfunction::synth_random(ManifoldId::Torus2, lambda, seed).unwrap();
        let q = CubeSpec::new(vec![x, y], h).unwrap();
        let n = doubling_index(&u, &q, &DoublingParams::default()).unwrap().index;
        prop_assert!(n >= -1e-3, "{n}");
    }

    #[test]
    fn tilde_monotone_in_depth(lambda in torus_eigenvalue(), seed in 0u64..100) {
        let u = Eigenfunction::synth_random(ManifoldId::Torus2, lambda, seed).unwrap();
        let q = CubeSpec::new(vec![1.0, 2.0], 0.2).unwrap();
        let n = doubling_index(&u, &q, &DoublingParams::default()).unwrap().index;
        let mut last = n;
        for depth in 1..=3 {
            let t = tilde_index(&u, &q, &DoublingParams { tilde_depth: depth, ..Default::default() }).unwrap().value;
            prop_assert!(t >= last);
            last = t;
        }
    }

    #[test]
    fn group_sizes_sum_to_power(j in 0u32..=30, y in 2u64..=1_000_000) {
        let sum = binomial_group_sizes(j, y).into_iter().fold(BigUint::zero(), |a, b| a + b);
        prop_assert_eq!(sum, BigUint::from(y).pow(j));
    }

    #[test]
    fn tail_matches_exact(j in 1u32..=200, y in 2u64..=64) {
        let (num, den) = lln_tail_exact(j, y);
        let exact = num.to_f64().unwrap() / den.to_f64().unwrap();
        let t = lln_tail(j, y);
        prop_assert!((0.0..=1.0).contains(&t));
        if den.to_f64().unwrap().is_finite() {
            prop_assert!((t - exact).abs() <= 1e-9, "{t} {exact}");
        }
    }

    #[test]
    fn clipped_segments_stay_in_box(ax in -2.0..2.0f64, ay in -2.0..2.0f64, bx in -2.0..2.0f64, by in -2.0..2.0f64) {
        let (lo, hi) = ([-0.5, -0.25], [0.75, 1.0]);
        if let Some(s) = clip_to_box([ax, ay], [bx, by], lo, hi) {
            for p in s {
                prop_assert!(p[0] >= lo[0] - 1e-12 && p[0] <= hi[0] + 1e-12);
                prop_assert!(p[1] >= lo[1] - 1e-12 && p[1] <= hi[1] + 1e-12);
            }
            prop_assert!(seg_len(&s) <= seg_len(&[[ax, ay], [bx, by]]) + 1e-12);
        }
    }

    #[test]
    fn segment_index_matches_brute_force(
        segs in prop::collection::vec((0.0..TAU, 0.0..TAU, -0.3..0.3f64, -0.3..0.3f64), 1..40),
        px in 0.0..TAU,
        py in 0.0..TAU,
        buckets in 1usize..20,
    ) {
        let segments: Vec<[[f64; 2]; 2]> = segs.iter().map(|&(x, y, dx, dy)| [[x, y], [x + dx, y + dy]]).collect();
        let idx = SegmentIndex::new(segments.clone(), buckets);
        let brute = SegmentIndex::new(segments, 1);
        prop_assert!((idx.distance([px, py]) - brute.distance([px, py])).abs() < 1e-12);
    }

    #[test]
    fn quantiles_are_ordered(mut v in prop::collection::vec(-1e3..1e3f64, 1..50)) {
        v.sort_by(f64::total_cmp);
        let qs: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 1.0].iter().map(|&p| quantile(&v, p)).collect();
        prop_assert!(qs.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(qs[0], v[0]);
        prop_assert_eq!(qs[4], v[v.len() - 1]);
    }

    #[test]
    fn records_round_trip(lambda in 1u64..100_000, seed in any::<u64>(), value in -1e6..1e6f64) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let r = Record::new(ManifoldId::Torus3, lambda, seed, "q", value).with("k", 1.5);
        let mut buf = Vec::new();
        nodal_lab::runner::records::write_records(&mut buf, [&r]).unwrap();
        std::fs::write(&path, buf).unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), vec![r]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn nodal_length_translation_invariant(lambda in torus_eigenvalue(), seed in 0u64..50, sx in 0.0..TAU, sy in 0.0..TAU) {
        let u = Eigenfunction::synth_random(ManifoldId::Torus2, lambda, seed).unwrap();
        let v = u.translated(&[sx, sy]).unwrap();
        let opts = NodalOptions::default();
        let a = extract_nodal_2d(&u, &Region2::Torus, 512, &opts).unwrap().total_measure;
        let b = extract_nodal_2d(&v, &Region2::Torus, 512, &opts).unwrap().total_measure;
        prop_assert!((a - b).abs() <= 0.01 * a, "{a} {b}");
    }

    #[test]
    fn nodal_length_scale_invariant(lambda in torus_eigenvalue(), seed in 0u64..50, c in 0.1..10.0f64) {
        let u = Eigenfunction::synth_random(ManifoldId::Torus2, lambda, seed).unwrap();
        let opts = NodalOptions::default();
        let a = extract_nodal_2d(&u, &Region2::Torus, 256, &opts).unwrap().total_measure;
        let b = extract_nodal_2d(&u.scaled(-c), &Region2::Torus, 256, &opts).unwrap().total_measure;
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }
}
