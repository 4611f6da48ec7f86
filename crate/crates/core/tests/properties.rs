mod common;

use bcbound_core::bound::{off_diagonal_ratio, ratio, ratio_sequence_for_weights, tail_ratio};
use bcbound_core::gram::{GramData, GramSource};
use bcbound_core::weights::{optimal_weights, DEFAULT_CUTOFF};
use bcbound_core::{BoundConfig, EventSeqModel, WeightScheme};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// A random model, a horizon and signed weights, all derived from one seed.
fn setup(seed: u64, nonempty: bool) -> (common::RandomModel, usize, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rm = common::random_model(&mut rng, nonempty);
    let n = rng.random_range(1..=3 * rm.period());
    let w = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
    (rm, n, w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ratio_is_scale_invariant(seed in any::<u64>(), c in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64]) {
        let (rm, n, w) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        let scaled: Vec<f64> = w.iter().map(|x| c * x).collect();
        // the guard is absolute, so scaling may move a tiny denominator across it
        if let (Ok(a), Ok(b)) = (ratio(&g, &w, n), ratio(&g, &scaled, n)) {
            prop_assert!(rel_close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn ratio_is_permutation_equivariant(seed in any::<u64>(), shuffle in any::<u64>()) {
        let (rm, n, w) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for i in (1..n).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let p: Vec<f64> = perm.iter().map(|&k| g.prob(k)).collect();
        let m = DMatrix::from_fn(n, n, |i, j| g.joint(perm[i], perm[j]));
        let gp = GramData::from_matrix(p, &m).unwrap();
        let wp: Vec<f64> = perm.iter().map(|&k| w[k]).collect();
        if let (Ok(a), Ok(b)) = (ratio(&g, &w, n), ratio(&gp, &wp, n)) {
            prop_assert!(rel_close(a, b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn ratio_never_exceeds_exact_union(seed in any::<u64>()) {
        let (rm, n, w) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        if let Ok(r) = ratio(&g, &w, n) {
            let u = rm.union(1, n);
            prop_assert!(r <= u + 1e-9, "ratio {r} > union {u}");
        }
    }

    #[test]
    fn optimal_weights_dominate_random_weights(seed in any::<u64>()) {
        let (rm, n, _) = setup(seed, true);
        let g = rm.model.gram(n).unwrap();
        let opt = optimal_weights(&g, n, DEFAULT_CUTOFF).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..100 {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();
            if let Ok(r) = ratio(&g, &u, n) {
                prop_assert!(r <= opt.value + 1e-9, "{r} > optimal {}", opt.value);
            }
        }
        let max_abs = opt.weights.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!((max_abs - 1.0).abs() < 1e-12);
        let pw: f64 = opt.weights.iter().enumerate().map(|(i, x)| x * g.prob(i)).sum();
        prop_assert!(pw >= 0.0);
    }

    #[test]
    fn incremental_sequence_matches_direct_ratio(seed in any::<u64>()) {
        let (rm, n, w) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        let rep = ratio_sequence_for_weights(&g, WeightScheme::Explicit(w.clone()), w.clone(), &BoundConfig::default()).unwrap();
        prop_assert_eq!(rep.horizon(), n);
        let mut best: Option<f64> = None;
        for k in 1..=n {
            let direct = ratio(&g, &w, k).ok();
            match (rep.ratio_at(k), direct) {
                (Some(a), Some(b)) => prop_assert!(rel_close(a, b, 1e-9), "k={k}: {a} vs {b}"),
                (None, None) => {}
                (a, b) => prop_assert!(false, "k={k}: {a:?} vs {b:?}"),
            }
            if let Some(r) = direct {
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
            let sum: f64 = (0..k).map(|i| w[i] * rm.prob(i + 1)).sum();
            prop_assert!(rel_close(rep.partial_sums[k - 1], sum, 1e-12));
        }
        match (rep.running_max[n - 1], best) {
            (Some(a), Some(b)) => prop_assert!(rel_close(a, b, 1e-9)),
            (a, b) => prop_assert_eq!(a.is_some(), b.is_some()),
        }
    }

    #[test]
    fn tail_ratio_is_one_from_the_start(seed in any::<u64>()) {
        let (rm, n, w) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        if let Ok(t) = tail_ratio(&g, &w, 1, n) {
            prop_assert_eq!(t, 1.0);
        }
    }

    #[test]
    fn off_diagonal_ratio_matches_pair_sums(seed in any::<u64>()) {
        let (rm, n, w) = setup(seed, true);
        if n < 2 {
            return Ok(());
        }
        let g = rm.model.gram(n).unwrap();
        let w: Vec<f64> = w.iter().map(|x| x.abs()).collect();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 1..=n {
            for j in i + 1..=n {
                num += w[i - 1] * w[j - 1] * rm.prob(i) * rm.prob(j);
                den += w[i - 1] * w[j - 1] * rm.joint(i, j);
            }
        }
        match off_diagonal_ratio(&g, &w, n) {
            Ok(r) => prop_assert!(rel_close(r, num / den, 1e-9), "{r} vs {}", num / den),
            Err(_) => prop_assert!(den <= 1e-12),
        }
    }

    #[test]
    fn gram_csv_round_trips(seed in any::<u64>()) {
        let (rm, n, _) = setup(seed, false);
        let g = rm.model.gram(n).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GramData::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn periodic_union_grows_to_limsup(seed in any::<u64>()) {
        let (rm, _, _) = setup(seed, false);
        let limsup = rm.model.exact_limsup().unwrap();
        let mut prev = 0.0;
        for n in 1..=2 * rm.period() {
            let u = rm.model.exact_union(1, n).unwrap().unwrap();
            prop_assert!(u >= prev - 1e-15);
            prop_assert!((u - rm.union(1, n)).abs() < 1e-12);
            if n >= rm.period() {
                prop_assert!((u - limsup).abs() < 1e-12);
            }
            prev = u;
        }
    }
}

#[test]
fn parity_joint_is_quarter_within_one_period() {
    for bits in 2..=5 {
        let model = EventSeqModel::pairwise_parity(bits).unwrap();
        let n = (1usize << bits) - 1;
        let g = model.gram(n).unwrap();
        for i in 0..n {
            assert_eq!(g.prob(i), 0.5);
            for j in 0..n {
                let expected = if i == j { 0.5 } else { 0.25 };
                assert_eq!(g.joint(i, j), expected, "bits={bits} ({i},{j})");
            }
        }
        assert_eq!(model.exact_union(1, n).unwrap(), Some(1.0));
    }
}

#[test]
fn parity_periodic_extension_stalls_at_period_ratio() {
    // with the 2^m - 1 events repeated, R at every period multiple equals
    // (2^m - 1) / 2^m rather than approaching one
    let model = EventSeqModel::pairwise_parity(3).unwrap();
    let g = model.gram_source(1400).unwrap();
    for k in [1, 2, 10, 200] {
        let n = 7 * k;
        let r = ratio(&g, &vec![1.0; n], n).unwrap();
        assert!((r - 0.875).abs() < 1e-12, "n={n}: {r}");
    }
    let r7 = ratio(&g, &[1.0; 7], 7).unwrap();
    assert!((r7 - 7.0 / 8.0).abs() < 1e-12);
}

#[test]
fn random_gram_entries_respect_frechet_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let rm = common::random_model(&mut rng, false);
        let n = 2 * rm.period();
        let g = rm.model.gram(n).unwrap();
        assert!(g.violations(1e-8).is_empty());
        assert!(g.check_psd(1e-8).passed());
    }
}
