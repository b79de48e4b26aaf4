//! Cross-module invariants on seeded and generated inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paley_core::charsum::{
    chain_bound_check, double_char_sum_convolution, double_char_sum_direct, min_size_above, SubsetPair,
};
use paley_core::clique::{clique_number, DEFAULT_NODE_BUDGET};
use paley_core::etf::SeidelMatrix;
use paley_core::extractor::{ext, flat_bias, output_distribution, stat_distance, Pmf};
use paley_core::masks::{masks_of_sizes, MaskTables};
use paley_core::rip::{check_rip_sandwich, rip_exact, rip_lower_search, rip_upper_coherence, DEFAULT_BUDGET};
use paley_core::{FieldCtx, Subset};

const PRIMES: [u64; 6] = [13, 17, 29, 37, 53, 97];

#[test]
fn sum_paths_agree_on_seeded_pairs() {
    for p in PRIMES {
        let ctx = FieldCtx::paley(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(p);
        for _ in 0..10_000 {
            let a = rng.gen_range(1..=p as usize);
            let b = rng.gen_range(1..=p as usize);
            let s = Subset::random(p as usize, a, &mut rng);
            let t = Subset::random(p as usize, b, &mut rng);
            let direct = double_char_sum_direct(&ctx, &s, &t);
            assert_eq!(direct, double_char_sum_convolution(&ctx, &s, &t), "p = {p}");
            assert_eq!(direct, double_char_sum_direct(&ctx, &t, &s), "p = {p}");
        }
    }
}

#[test]
fn sum_symmetric_exhaustive_13() {
    let ctx = FieldCtx::paley(13).unwrap();
    let tables = MaskTables::new(&ctx).unwrap();
    let sets = masks_of_sizes(13, 1..=13, u128::MAX).unwrap();
    for (i, &s) in sets.iter().enumerate() {
        for &t in &sets[i..] {
            assert_eq!(tables.sum(s, t), tables.sum(t, s));
        }
    }
}

#[test]
fn search_exact_coherence_ordering() {
    for p in [13u64, 17, 29] {
        let ctx = FieldCtx::paley(p).unwrap();
        let s = SeidelMatrix::build(&ctx).unwrap();
        let omega = clique_number(&ctx, DEFAULT_NODE_BUDGET).unwrap().omega;
        let root = (p as f64).sqrt();
        let mut prev = 0.0;
        for k in 1..=5 {
            let exact = rip_exact(&s, k, DEFAULT_BUDGET).unwrap();
            let lower = rip_lower_search(&s, k, 2000, 3).unwrap();
            let upper = rip_upper_coherence(p, k);
            assert!(lower.delta_lower <= exact.delta_upper + 1e-12, "p = {p}, K = {k}");
            assert!(exact.delta_upper <= upper + 1e-12, "p = {p}, K = {k}");
            assert!(exact.delta_upper >= prev - 1e-12, "p = {p}, K = {k}");
            let clique_floor = (k.min(omega) as f64 - 1.0) / root;
            assert!(exact.delta_upper >= clique_floor - 1e-12, "p = {p}, K = {k}");
            prev = exact.delta_upper;
        }
    }
}

#[test]
fn rip_reports_deterministic_across_workers() {
    let ctx = FieldCtx::paley(37).unwrap();
    let s = SeidelMatrix::build(&ctx).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let e = rip_exact(&s, 4, DEFAULT_BUDGET).unwrap();
                let l = rip_lower_search(&s, 6, 500, 11).unwrap();
                (e.csv_row(), e.witness, l.csv_row(), l.witness)
            })
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn sandwich_holds_with_exact_delta() {
    let ctx = FieldCtx::paley(29).unwrap();
    let s = SeidelMatrix::build(&ctx).unwrap();
    let delta = rip_exact(&s, 4, DEFAULT_BUDGET).unwrap().delta_upper;
    let sets = masks_of_sizes(29, 1..=4, u128::MAX).unwrap();
    for &m in &sets {
        let u = Subset::from_mask(29, m).to_vec();
        assert!(check_rip_sandwich(&s, &u, delta).unwrap().holds, "{u:?}");
    }
}

#[test]
fn chain_never_violated_with_exact_delta() {
    let ctx = FieldCtx::paley(17).unwrap();
    let s = SeidelMatrix::build(&ctx).unwrap();
    let delta = rip_exact(&s, 4, DEFAULT_BUDGET).unwrap().delta_upper;
    let tau = -delta.ln() / 17f64.ln();
    let gamma = tau / 2.0;
    let min = min_size_above(17, 0.5 - tau + gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..2000 {
        let a = rng.gen_range(min..=17);
        let b = rng.gen_range(min..=17);
        let pair = SubsetPair::new(Subset::random(17, a, &mut rng), Subset::random(17, b, &mut rng));
        let r = chain_bound_check(&ctx, &pair, delta, tau, gamma).unwrap();
        assert!(r.bounds["final"].satisfied);
    }
}

#[test]
fn ext_symmetric_exhaustive() {
    for p in [5u64, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97] {
        let ctx = FieldCtx::paley(p).unwrap();
        for x in 0..p {
            for y in x..p {
                assert_eq!(ext(&ctx, x, y).unwrap(), ext(&ctx, y, x).unwrap());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bias_is_distance_to_uniform(seed in any::<u64>(), pi in 0usize..6) {
        let p = PRIMES[pi];
        let ctx = FieldCtx::paley(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Subset::random(p as usize, rng.gen_range(1..=p as usize), &mut rng);
        let t = Subset::random(p as usize, rng.gen_range(1..=p as usize), &mut rng);
        let r = flat_bias(&ctx, &s, &t).unwrap();
        let out = output_distribution(&ctx, &Pmf::flat(&s).unwrap(), &Pmf::flat(&t).unwrap()).unwrap();
        let d = stat_distance(&out, &Pmf::uniform_bit()).unwrap();
        prop_assert!((d - r.bias).abs() < 1e-12);
        prop_assert!(r.bias >= 0.0 && r.bias <= 0.5);
        prop_assert_eq!(r.bias_den, 2 * (s.len() * t.len()) as u64);
    }

    #[test]
    fn union_split_identity(seed in any::<u64>()) {
        let ctx = FieldCtx::paley(41).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Subset::random(41, rng.gen_range(0..=41), &mut rng);
        let t = Subset::random(41, rng.gen_range(0..=41), &mut rng);
        let sum = |a: &Subset, b: &Subset| double_char_sum_direct(&ctx, a, b);
        let lhs = sum(&s, &t);
        let doubled = sum(&s.union(&t), &s.union(&t)) - sum(&s.difference(&t), &s.difference(&t))
            - sum(&t.difference(&s), &t.difference(&s)) + sum(&s.intersection(&t), &s.intersection(&t));
        prop_assert_eq!(doubled, 2 * lhs);
    }
}
