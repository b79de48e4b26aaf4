//! Acceptance criteria 1–9. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use paley_core::charsum::{decomposition_check, double_char_sum, property_p_exhaustive, self_sum, SubsetPair};
use paley_core::clique::{clique_number, is_clique, DEFAULT_NODE_BUDGET};
use paley_core::combin::colex_next;
use paley_core::etf::{verify_etf, EtfMatrix, SeidelMatrix};
use paley_core::extractor::{count_ones_direct, extractor_error_bound, flat_bias, worst_flat_bias, BiasMode};
use paley_core::pipeline::{
    fit_constants, monotonicity_violations, run_implication, run_scaling_study, scaling_csv, GammaChoice,
    ImplicationConfig, ImplicationStatus, ScalingConfig, SweepMode,
};
use paley_core::rip::{check_tech_bound, rayleigh_indicator, rip_exact, RipMode, DEFAULT_BUDGET};
use paley_core::search::SearchConfig;
use paley_core::{FieldCtx, Subset};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("took {took:?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

fn gauss_sums() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in [5u64, 13, 17, 29, 37, 41, 53] {
        let ctx = FieldCtx::paley(p).map_err(|e| e.to_string())?;
        let root = (p as f64).sqrt();
        for a in 1..p {
            // Σ_x ψ(a x²) summed here from the definition
            let direct: Complex64 = (0..p)
                .map(|x| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ((a * x * x) % p) as f64 / p as f64))
                .sum();
            let lib = ctx.gauss_sum(a).map_err(|e| e.to_string())?;
            let chi = ctx.chi(a).map_err(|e| e.to_string())? as f64;
            let err = (direct - chi * root).norm().max((lib - chi * root).norm());
            worst = worst.max(err);
            ensure!(err < 1e-9, "p = {p}, a = {a}: error {err:e}");
        }
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("max |G(a) - chi(a)sqrt(p)| = {worst:.2e}"))
}

fn column_gram(etf: &EtfMatrix, i: usize, j: usize) -> Complex64 {
    etf.column(i).iter().zip(etf.column(j)).map(|(a, b)| a * b.conj()).sum()
}

fn etf_verification() -> Outcome {
    let start = Instant::now();
    for p in [13u64, 17, 29, 37] {
        let ctx = FieldCtx::paley(p).map_err(|e| e.to_string())?;
        let etf = EtfMatrix::build(&ctx).map_err(|e| e.to_string())?;
        let r = verify_etf(&etf, 1e-9);
        ensure!(r.max_norm_deviation < 1e-12, "p = {p}: norm deviation {:e}", r.max_norm_deviation);
        ensure!(r.max_equiangularity_deviation < 1e-9, "p = {p}: equiangularity {:e}", r.max_equiangularity_deviation);
        ensure!(r.max_tightness_deviation < 1e-9, "p = {p}: tightness {:e}", r.max_tightness_deviation);
        let n = etf.cols();
        let mu = 1.0 / (p as f64).sqrt();
        let rows = etf.rows();
        for i in 0..n {
            ensure!((column_gram(&etf, i, i).norm() - 1.0).abs() < 1e-12, "p = {p}: column {i} not unit");
            for j in 0..n {
                if i == j {
                    continue;
                }
                let g = column_gram(&etf, i, j);
                ensure!((g.norm() - mu).abs() < 1e-9, "p = {p}: |G_{i}{j}| = {}", g.norm());
                if i < p as usize && j < p as usize {
                    let chi = ctx.chi(((i + p as usize - j) % p as usize) as u64).unwrap() as f64;
                    ensure!((g.re * (p as f64).sqrt() - chi).abs() < 1e-6 && g.im.abs() < 1e-6, "p = {p}: sqrt(p) G_{i}{j} = {g}");
                }
            }
        }
        for a in 0..rows {
            for b in 0..rows {
                let v: Complex64 = (0..n).map(|c| etf.get(a, c) * etf.get(b, c).conj()).sum();
                let want = if a == b { 2.0 } else { 0.0 };
                ensure!((v - want).norm() < 1e-9, "p = {p}: (Phi Phi*)_{a}{b} = {v}");
            }
        }
    }
    within(Duration::from_secs(5), start)?;
    Ok("p in {13,17,29,37}".into())
}

fn brute_force_delta(etf: &EtfMatrix, k: usize) -> f64 {
    let n = etf.cols();
    let mut comb: Vec<usize> = (0..k).collect();
    let mut best = 0.0f64;
    loop {
        let m = DMatrix::from_fn(k, k, |a, b| {
            let g = column_gram(etf, comb[a], comb[b]);
            g.re - if a == b { 1.0 } else { 0.0 }
        });
        let eig = m.symmetric_eigenvalues();
        best = best.max(eig.iter().fold(0.0f64, |acc, e| acc.max(e.abs())));
        if !colex_next(&mut comb, n) {
            break;
        }
    }
    best
}

fn rip_exactness() -> Outcome {
    let start = Instant::now();
    for p in [13u64, 17, 29, 37, 53] {
        let ctx = FieldCtx::paley(p).map_err(|e| e.to_string())?;
        let s = SeidelMatrix::build(&ctx).map_err(|e| e.to_string())?;
        let mut prev = -1.0;
        for k in 1..=4 {
            let r = rip_exact(&s, k, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            ensure!(r.mode == RipMode::Exact, "p = {p}, K = {k}: not exact");
            match k {
                1 => ensure!(r.delta_upper.abs() < 1e-12, "delta_1({p}) = {}", r.delta_upper),
                2 => ensure!((r.delta_upper - 1.0 / (p as f64).sqrt()).abs() < 1e-12, "delta_2({p}) = {}", r.delta_upper),
                _ => {}
            }
            ensure!(r.delta_upper >= prev - 1e-12, "p = {p}: delta_{k} < delta_{}", k - 1);
            prev = r.delta_upper;
        }
    }
    let ctx = FieldCtx::paley(13).unwrap();
    let s = SeidelMatrix::build(&ctx).unwrap();
    let exact = rip_exact(&s, 3, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure!(exact.subsets_examined == 364, "examined {} supports", exact.subsets_examined);
    let oracle = brute_force_delta(&EtfMatrix::build(&ctx).unwrap(), 3);
    ensure!((exact.delta_upper - oracle).abs() < 1e-6, "delta_3(13) = {} but oracle {oracle}", exact.delta_upper);
    within(Duration::from_secs(120), start)?;
    Ok(format!("delta_3(13) = {:.12} (oracle {oracle:.12})", exact.delta_upper))
}

fn lemma_suite() -> Outcome {
    let start = Instant::now();
    let mut worst_dev = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for p in [13u64, 17, 29, 37, 41, 53] {
        let ctx = FieldCtx::paley(p).map_err(|e| e.to_string())?;
        let s = SeidelMatrix::build(&ctx).map_err(|e| e.to_string())?;
        let etf = EtfMatrix::build(&ctx).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(p);
        for _ in 0..1000 {
            let size = rng.gen_range(1..=p as usize);
            let u = Subset::random(p as usize, size, &mut rng).to_vec();
            let fast = rayleigh_indicator(&s, &u).map_err(|e| e.to_string())?;
            let sum: Vec<Complex64> = (0..etf.rows())
                .map(|r| u.iter().map(|&c| etf.get(r, c)).sum())
                .collect();
            let form: f64 = sum.iter().map(|z| z.norm_sqr()).sum();
            worst_dev = worst_dev.max((fast - form).abs());
            ensure!((fast - form).abs() < 1e-6, "p = {p}: indicator {fast} vs quadratic form {form}");
        }
        for k in 1..=4 {
            let delta = rip_exact(&s, k, DEFAULT_BUDGET).map_err(|e| e.to_string())?.delta_upper;
            let r = check_tech_bound(&s, k, delta, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            worst_ratio = worst_ratio.max(r.max_ratio);
            ensure!(r.holds() && r.max_ratio <= 1.0 + 1e-12, "p = {p}, K = {k}: max ratio {}", r.max_ratio);
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("indicator deviation {worst_dev:.2e}, max tech ratio {worst_ratio:.12}"))
}

fn decomposition() -> Outcome {
    for p in [13u64, 17, 29, 37, 53, 97] {
        let ctx = FieldCtx::paley(p).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + p);
        for _ in 0..10_000 {
            let a = rng.gen_range(1..=p as usize);
            let b = rng.gen_range(1..=p as usize);
            let pair = SubsetPair::new(Subset::random(p as usize, a, &mut rng), Subset::random(p as usize, b, &mut rng));
            let r = decomposition_check(&ctx, &pair).map_err(|e| e.to_string())?;
            ensure!(r.corrected_residual == 0, "p = {p}: corrected residual {}", r.corrected_residual);
            let expected = r.lhs - self_sum(&ctx, &pair.s.intersection(&pair.t));
            ensure!(r.printed_residual == expected, "p = {p}: printed residual {} vs {expected}", r.printed_residual);
        }
    }
    Ok("10^4 pairs per prime, p in {13,17,29,37,53,97}".into())
}

fn theorem_chain() -> Outcome {
    let start = Instant::now();
    let ctx13 = FieldCtx::paley(13).unwrap();
    let cfg13 = ImplicationConfig {
        epsilon: 0.05,
        gamma: GammaChoice::FractionOfTau(0.5),
        k_max: 4,
        ..ImplicationConfig::default()
    };
    let r = run_implication(&ctx13, &cfg13).map_err(|e| e.to_string())?;
    ensure!(r.status == ImplicationStatus::Completed, "p = 13: status {:?}", r.status);
    ensure!(r.delta_measured.mode == RipMode::Exact && r.params.k == 4, "p = 13: delta_4 not exact");
    ensure!((r.tau + (r.delta_measured.delta_upper).ln() / 13f64.ln()).abs() < 1e-15, "p = 13: tau mismatch");
    ensure!((r.params.gamma - r.tau / 2.0).abs() < 1e-15, "p = 13: gamma is not tau/2");
    let sw = r.charsum_worst.as_ref().ok_or("p = 13: no sweep")?;
    ensure!(sw.mode == SweepMode::Exhaustive, "p = 13: sweep not exhaustive");
    ensure!(sw.violations["final"] == 0 && r.pass, "p = 13: {} violations", sw.violations["final"]);
    let pairs13 = sw.pairs_checked;

    let ctx29 = FieldCtx::paley(29).unwrap();
    let cfg29 = ImplicationConfig {
        k_max: 5,
        samples: 100_000,
        seed: 29,
        search: SearchConfig { seed: 29, ..SearchConfig::default() },
        ..cfg13
    };
    let r = run_implication(&ctx29, &cfg29).map_err(|e| e.to_string())?;
    ensure!(r.status == ImplicationStatus::Completed, "p = 29: status {:?}", r.status);
    let sw = r.charsum_worst.as_ref().ok_or("p = 29: no sweep")?;
    ensure!(sw.mode == SweepMode::SampledAdversarial, "p = 29: unexpected sweep mode");
    ensure!(sw.pairs_checked >= 100_000, "p = 29: only {} pairs", sw.pairs_checked);
    ensure!(sw.violations["final"] == 0 && r.pass, "p = 29: {} violations", sw.violations["final"]);
    within(Duration::from_secs(600), start)?;
    Ok(format!(
        "p = 13: {pairs13} representative pairs; p = 29: {} pairs, worst |sum|/|S||T| = {}",
        sw.pairs_checked, sw.worst_ratio
    ))
}

fn cliques() -> Outcome {
    // independent oracle at 13: every vertex subset against a squares table
    let squares: Vec<bool> = {
        let mut t = vec![false; 13];
        for x in 1..13 {
            t[x * x % 13] = true;
        }
        t
    };
    let mut oracle = 0u32;
    for mask in 1u32..1 << 13 {
        let v: Vec<usize> = (0..13).filter(|i| mask >> i & 1 == 1).collect();
        let ok = v.iter().enumerate().all(|(i, &a)| v[i + 1..].iter().all(|&b| squares[(a + 13 - b) % 13]));
        if ok {
            oracle = oracle.max(mask.count_ones());
        }
    }
    let ctx = FieldCtx::paley(13).unwrap();
    let r = clique_number(&ctx, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
    ensure!(r.omega == 3 && oracle == 3, "omega(13) = {}, oracle {oracle}", r.omega);
    let mut checked = 0;
    for p in (5u64..=200).filter(|&p| p % 4 == 1 && paley_core::field::is_prime(p)) {
        let ctx = FieldCtx::paley(p).unwrap();
        let r = clique_number(&ctx, DEFAULT_NODE_BUDGET).map_err(|e| e.to_string())?;
        ensure!(is_clique(&ctx, &r.witness) && r.witness.len() == r.omega, "p = {p}: bad witness");
        ensure!(r.omega as f64 <= ((p as f64 / 2.0).sqrt() + 1.0).floor(), "p = {p}: omega {} above bound", r.omega);
        let w = r.omega as i64;
        ensure!(self_sum(&ctx, &r.witness) == w * (w - 1), "p = {p}: clique sum mismatch");
        checked += 1;
    }
    Ok(format!("omega(13) = 3; {checked} primes up to 200 within sqrt(p/2)+1"))
}

fn extractor_bias() -> Outcome {
    let start = Instant::now();
    let mut tested = 0u64;
    for p in [13u64, 17, 29, 37, 53, 97] {
        let ctx = FieldCtx::paley(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7 * p);
        for _ in 0..500 {
            let a = rng.gen_range(1..=p as usize);
            let b = rng.gen_range(1..=p as usize);
            let s = Subset::random(p as usize, a, &mut rng);
            let t = Subset::random(p as usize, b, &mut rng);
            let r = flat_bias(&ctx, &s, &t).map_err(|e| e.to_string())?;
            ensure!(r.pr_one_num == 2 * count_ones_direct(&ctx, &s, &t), "p = {p}: closed form mismatch");
            tested += 1;
        }
        let all = Subset::full(p as usize);
        let r = flat_bias(&ctx, &all, &all).map_err(|e| e.to_string())?;
        // bias_num / bias_den = p / 2p² = 1/(2p)
        ensure!(r.bias_num * 2 * p == r.bias_den, "p = {p}: full-field bias {}/{}", r.bias_num, r.bias_den);
        let zero = worst_flat_bias(&ctx, 0.0, BiasMode::Search, &SearchConfig::default(), DEFAULT_BUDGET)
            .map_err(|e| e.to_string())?;
        ensure!(zero.bias_num * 2 == zero.bias_den, "p = {p}: k = 0 bias {}", zero.bias);
    }
    let ctx = FieldCtx::paley(13).unwrap();
    let pp = property_p_exhaustive(&ctx, 0.5, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    let bound = extractor_error_bound(&ctx, &pp).map_err(|e| e.to_string())?;
    let k = 0.5 * 13f64.log2();
    let worst = worst_flat_bias(&ctx, k, BiasMode::Exhaustive, &SearchConfig::default(), DEFAULT_BUDGET)
        .map_err(|e| e.to_string())?;
    ensure!(worst.bias <= bound, "worst flat bias {} exceeds bound {bound}", worst.bias);
    let sum = double_char_sum(&ctx, &SubsetPair::new(worst.s.clone(), worst.t.clone())).unwrap();
    ensure!(
        (sum + worst.s.intersection_len(&worst.t) as i64).unsigned_abs() == worst.bias_num,
        "argmax pair does not reproduce its bias"
    );
    within(Duration::from_secs(300), start)?;
    Ok(format!("{tested} closed-form checks; p = 13: worst flat bias {} <= bound {bound}", worst.bias))
}

fn scaling() -> Outcome {
    let primes = [13u64, 17, 29, 37, 53, 73, 97];
    let cfg = ScalingConfig {
        k_max: 4,
        seed: 9,
        ..ScalingConfig::default()
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_scaling_study(&primes, &cfg))
    };
    let one = run(1).map_err(|e| e.to_string())?;
    let four = run(4).map_err(|e| e.to_string())?;
    let again = run(4).map_err(|e| e.to_string())?;
    let (a, b, c) = (scaling_csv(&one), scaling_csv(&four), scaling_csv(&again));
    ensure!(a == b && b == c, "scaling CSV differs across runs or worker counts");
    ensure!(one.len() == primes.len() * 4, "{} rows", one.len());
    ensure!(one.iter().all(|r| r.mode == RipMode::Exact), "a row is not exact");
    ensure!(monotonicity_violations(&one).is_empty(), "delta_K not monotone");
    ensure!(one.iter().filter(|r| r.k >= 2).all(|r| r.ratio.is_finite() && r.ratio > 0.0), "bad ratio");
    let fit = fit_constants(&one).map_err(|e| e.to_string())?;
    ensure!(fit.residuals.iter().all(|r| r.is_finite()) && fit.c1_hat.is_finite() && fit.c2_hat.is_finite(), "non-finite fit");
    Ok(format!(
        "{} rows byte-identical for 1 and 4 workers; c1_hat = {:.6}, c2_hat = {:.6}, rms residual {:.3e}",
        one.len(),
        fit.c1_hat,
        fit.c2_hat,
        fit.rms_residual
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("Gauss-sum identity", gauss_sums),
        ("ETF verification", etf_verification),
        ("RIP exactness", rip_exactness),
        ("indicator and tech bound", lemma_suite),
        ("decomposition identity", decomposition),
        ("character-sum chain", theorem_chain),
        ("clique number", cliques),
        ("extractor bias", extractor_bias),
        ("scaling study", scaling),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.2}s) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.2}s) {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
