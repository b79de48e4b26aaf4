//! End-to-end runs: RIP measurement, the character-sum chain over a size
//! window, the extractor bound it implies, and the δ_K scaling study.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::charsum::{chain_bound_check, min_size_above, PropertyPReport, SearchMode, SubsetPair};
use crate::combin::binomial_sum;
use crate::error::{Error, Result};
use crate::etf::SeidelMatrix;
use crate::extractor::extractor_error_bound;
use crate::field::FieldCtx;
use crate::format::sig12;
use crate::masks::{masks_of_sizes, MaskTables, MAX_MASK_P};
use crate::rip::{rip_best_available, RipMode, RipReport};
use crate::search::{local_search, Objective, SearchConfig};
use crate::subset::Subset;

/// θ, τ, γ with ¾θ + γ < θ < α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParameterChoice {
    pub alpha: f64,
    pub theta: f64,
    pub tau: f64,
    pub gamma: f64,
}

pub fn select_parameters(alpha: f64) -> Result<ParameterChoice> {
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::BadAlpha(alpha));
    }
    let theta = alpha * (1.0 - 1e-3);
    let tau = 0.5 - 0.75 * theta;
    let gamma = theta / 8.0;
    if !(0.75 * theta + gamma < theta && theta < alpha) {
        return Err(Error::BadAlpha(alpha));
    }
    Ok(ParameterChoice {
        alpha,
        theta,
        tau,
        gamma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum GammaChoice {
    Absolute(f64),
    /// γ = f·τ.
    FractionOfTau(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImplicationConfig {
    pub epsilon: f64,
    pub gamma: GammaChoice,
    /// Largest K handed to the RIP stage.
    pub k_max: usize,
    pub rip_budget: u128,
    pub rip_iters: u64,
    /// Pair count above which the window sweep samples instead.
    pub sweep_budget: u128,
    pub samples: u64,
    pub search: SearchConfig,
    pub seed: u64,
}

impl Default for ImplicationConfig {
    fn default() -> Self {
        ImplicationConfig {
            epsilon: 0.05,
            gamma: GammaChoice::FractionOfTau(0.5),
            k_max: 6,
            rip_budget: crate::rip::DEFAULT_BUDGET,
            rip_iters: 20_000,
            sweep_budget: 1 << 26,
            samples: 100_000,
            search: SearchConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineParams {
    pub p: u64,
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(rename = "K")]
    pub k: usize,
    /// ⌈p^{1/2+ε}⌉ before clamping.
    #[serde(rename = "K_target")]
    pub k_target: usize,
    pub clamped: bool,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicationStatus {
    Completed,
    /// γ ≥ τ (or τ ≤ 0) at this p.
    Degenerate,
    /// No integer size lies in the window.
    EmptyWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    Exhaustive,
    SampledAdversarial,
}

#[derive(Debug, Clone, Serialize)]
pub struct BetaPiecewise {
    pub in_window: f64,
    pub above_window: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub mode: SweepMode,
    pub min_size: usize,
    pub max_size: usize,
    pub pairs_checked: u64,
    /// Failed checks per chain link.
    pub violations: BTreeMap<String, u64>,
    /// Pairs with |S ∪ T| > K, where δ_K does not govern the first link.
    pub pairs_beyond_k: u64,
    pub worst_sum: i64,
    pub worst_ratio: f64,
    /// worst |Σ| / (4p^{−γ}|S||T|).
    pub worst_final_fraction: f64,
    pub worst_pair: SubsetPair,
}

#[derive(Debug, Clone, Serialize)]
pub struct ImplicationReport {
    pub params: PipelineParams,
    pub status: ImplicationStatus,
    pub delta_measured: RipReport,
    pub tau: f64,
    pub alpha: f64,
    pub beta_piecewise: BetaPiecewise,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charsum_worst: Option<SweepSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extractor_bound: Option<f64>,
    /// Whether δ_K < √2 − 1; informational only.
    pub delta_below_sqrt2_minus_1: bool,
    pub pass: bool,
}

/// Largest integer ≤ p^e, snapping values within 1e−9 of an integer.
fn floor_pow(p: u64, e: f64) -> usize {
    let v = (p as f64).powf(e);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.floor() as usize
    }
}

fn ceil_pow(p: u64, e: f64) -> usize {
    let v = (p as f64).powf(e);
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

#[derive(Clone)]
struct Acc {
    pairs: u64,
    beyond_k: u64,
    violations: BTreeMap<String, u64>,
    worst: Option<(i64, SubsetPair)>,
}

impl Acc {
    fn new() -> Self {
        Acc {
            pairs: 0,
            beyond_k: 0,
            violations: BTreeMap::new(),
            worst: None,
        }
    }

    fn is_worse(a: &(i64, SubsetPair), b: &(i64, SubsetPair)) -> bool {
        let na = a.0.unsigned_abs() as u128 * (b.1.s.len() * b.1.t.len()) as u128;
        let nb = b.0.unsigned_abs() as u128 * (a.1.s.len() * a.1.t.len()) as u128;
        na.cmp(&nb)
            .then_with(|| b.1.s.cmp(&a.1.s))
            .then_with(|| b.1.t.cmp(&a.1.t))
            .is_gt()
    }

    fn merge(mut self, other: Acc) -> Acc {
        self.pairs += other.pairs;
        self.beyond_k += other.beyond_k;
        for (k, v) in other.violations {
            *self.violations.entry(k).or_default() += v;
        }
        self.worst = match (self.worst, other.worst) {
            (Some(a), Some(b)) => Some(if Self::is_worse(&b, &a) { b } else { a }),
            (a, b) => a.or(b),
        };
        self
    }
}

struct Checker<'a> {
    ctx: &'a FieldCtx,
    delta: f64,
    tau: f64,
    gamma: f64,
    k: usize,
}

impl Checker<'_> {
    fn check(&self, pair: SubsetPair) -> Result<Acc> {
        let report = chain_bound_check(self.ctx, &pair, self.delta, self.tau, self.gamma)?;
        let mut acc = Acc::new();
        acc.pairs = 1;
        acc.beyond_k = (pair.s.union(&pair.t).len() > self.k) as u64;
        for (name, b) in &report.bounds {
            acc.violations.insert(name.clone(), (!b.satisfied) as u64);
        }
        acc.worst = Some((report.sum, pair));
        Ok(acc)
    }
}

fn sweep_exhaustive(chk: &Checker, sizes: std::ops::RangeInclusive<usize>, budget: u128) -> Result<Option<Acc>> {
    let ctx = chk.ctx;
    if ctx.p() > MAX_MASK_P {
        return Ok(None);
    }
    let p = ctx.size();
    let n_sets = binomial_sum(p as u64, sizes.clone().map(|m| m as u64));
    if n_sets > budget {
        return Ok(None);
    }
    let tables = MaskTables::new(ctx)?;
    let sets = masks_of_sizes(p, sizes, budget)?;
    let reps: Vec<u64> = sets.par_iter().copied().filter(|&s| tables.is_canonical(s)).collect();
    if reps.len() as u128 * sets.len() as u128 > budget {
        return Ok(None);
    }
    // every check is invariant under the affine maps, so orbit representatives
    // for S suffice
    let acc = reps
        .par_iter()
        .map(|&s| {
            let s = Subset::from_mask(p, s);
            sets.iter().try_fold(Acc::new(), |acc, &t| {
                Ok::<_, Error>(acc.merge(chk.check(SubsetPair::new(s.clone(), Subset::from_mask(p, t)))?))
            })
        })
        .try_reduce(Acc::new, |a, b| Ok(a.merge(b)))?;
    Ok(Some(acc))
}

fn sweep_sampled(
    chk: &Checker,
    sizes: std::ops::RangeInclusive<usize>,
    samples: u64,
    search: &SearchConfig,
    seed: u64,
) -> Result<Acc> {
    let p = chk.ctx.size();
    let (lo, hi) = (*sizes.start(), *sizes.end());
    let sampled = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let a = rng.gen_range(lo..=hi);
            let b = rng.gen_range(lo..=hi);
            let pair = SubsetPair::new(Subset::random(p, a, &mut rng), Subset::random(p, b, &mut rng));
            chk.check(pair)
        })
        .try_reduce(Acc::new, |a, b| Ok(a.merge(b)))?;
    let mut adversarial = Acc::new();
    for a in lo..=hi {
        for b in a..=hi {
            let hit = local_search(chk.ctx, a, b, Objective::CharSum, search, None);
            adversarial = adversarial.merge(chk.check(SubsetPair::new(hit.s, hit.t))?);
        }
    }
    Ok(sampled.merge(adversarial))
}

/// Measures δ_K, derives τ, and runs the chain check over every pair in the
/// size window (p^{1/2−τ+γ}, p^{1/2+ε}].
pub fn run_implication(ctx: &FieldCtx, cfg: &ImplicationConfig) -> Result<ImplicationReport> {
    if !ctx.is_1mod4() {
        return Err(Error::WrongResidueClass(ctx.p()));
    }
    if cfg.epsilon.is_nan() || cfg.epsilon <= 0.0 {
        return Err(Error::BadParameter(format!("epsilon must be positive, got {}", cfg.epsilon)));
    }
    let p = ctx.p();
    let k_target = ceil_pow(p, 0.5 + cfg.epsilon);
    let k = k_target.min(cfg.k_max);
    if k < 2 {
        return Err(Error::BadSparsity(k));
    }
    let seidel = SeidelMatrix::build(ctx)?;
    let delta = rip_best_available(&seidel, k, cfg.rip_budget, cfg.rip_iters, cfg.seed)?;
    let pf = p as f64;
    let tau = -delta.delta_upper.ln() / pf.ln();
    let gamma = match cfg.gamma {
        GammaChoice::Absolute(g) => g,
        GammaChoice::FractionOfTau(f) => f * tau,
    };
    let params = PipelineParams {
        p,
        epsilon: cfg.epsilon,
        gamma,
        theta: None,
        k,
        k_target,
        clamped: k < k_target,
        tau,
    };
    let mut report = ImplicationReport {
        params,
        status: ImplicationStatus::Completed,
        tau,
        alpha: 0.5 - tau + gamma,
        beta_piecewise: BetaPiecewise {
            in_window: gamma,
            above_window: 0.05 * cfg.epsilon * cfg.epsilon,
        },
        charsum_worst: None,
        extractor_bound: None,
        delta_below_sqrt2_minus_1: delta.delta_upper < std::f64::consts::SQRT_2 - 1.0,
        delta_measured: delta,
        pass: false,
    };
    if !(tau > 0.0 && gamma > 0.0 && gamma < tau) {
        report.status = ImplicationStatus::Degenerate;
        return Ok(report);
    }
    let lo = min_size_above(p, 0.5 - tau + gamma);
    let hi = floor_pow(p, 0.5 + cfg.epsilon).min(ctx.size());
    if lo > hi {
        report.status = ImplicationStatus::EmptyWindow;
        return Ok(report);
    }
    let chk = Checker {
        ctx,
        delta: report.delta_measured.delta_upper,
        tau,
        gamma,
        k,
    };
    let (mode, acc) = match sweep_exhaustive(&chk, lo..=hi, cfg.sweep_budget)? {
        Some(acc) => (SweepMode::Exhaustive, acc),
        None => (
            SweepMode::SampledAdversarial,
            sweep_sampled(&chk, lo..=hi, cfg.samples, &cfg.search, cfg.seed)?,
        ),
    };
    let (worst_sum, worst_pair) = acc.worst.expect("nonempty window");
    let area = (worst_pair.s.len() * worst_pair.t.len()) as f64;
    let worst_ratio = worst_sum.unsigned_abs() as f64 / area;
    let pp = PropertyPReport::from_worst(
        p,
        report.alpha,
        lo,
        match mode {
            SweepMode::Exhaustive => SearchMode::Exhaustive,
            SweepMode::SampledAdversarial => SearchMode::LocalSearch,
        },
        worst_sum,
        worst_pair.clone(),
        acc.pairs,
        1.0,
    );
    report.extractor_bound = Some(extractor_error_bound(ctx, &pp)?);
    report.pass = acc.pairs > 0 && acc.violations.get("final").copied().unwrap_or(0) == 0;
    report.charsum_worst = Some(SweepSummary {
        mode,
        min_size: lo,
        max_size: hi,
        pairs_checked: acc.pairs,
        violations: acc.violations,
        pairs_beyond_k: acc.beyond_k,
        worst_sum,
        worst_ratio,
        worst_final_fraction: worst_ratio / (4.0 * pf.powf(-gamma)),
        worst_pair,
    });
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub p: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub mode: RipMode,
    pub delta_lower: f64,
    pub delta_upper: f64,
    pub conjecture_bound: f64,
    pub ratio: f64,
}

impl ScalingRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.p,
            self.k,
            self.mode.as_str(),
            sig12(self.delta_lower),
            sig12(self.delta_upper),
            sig12(self.conjecture_bound),
            sig12(self.ratio)
        )
    }
}

pub const SCALING_NOTE: &str = "# conjecture_bound = sqrt(K/p)*log2(K)*log2(p)";
pub const SCALING_HEADER: &str = "p,K,mode,delta_lower,delta_upper,conjecture_bound,ratio";

/// √(K/p)·log₂K·log₂p.
pub fn conjecture_bound(p: u64, k: usize) -> f64 {
    (k as f64 / p as f64).sqrt() * (k as f64).log2() * (p as f64).log2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConfig {
    pub k_max: usize,
    pub rip_budget: u128,
    pub rip_iters: u64,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            k_max: 4,
            rip_budget: crate::rip::DEFAULT_BUDGET,
            rip_iters: 20_000,
            seed: 0,
        }
    }
}

/// Best available δ_K bracket for every (p, K ≤ K_max), sorted by (p, K).
pub fn run_scaling_study(primes: &[u64], cfg: &ScalingConfig) -> Result<Vec<ScalingRow>> {
    let mut primes = primes.to_vec();
    primes.sort_unstable();
    primes.dedup();
    let mut rows = Vec::new();
    for p in primes {
        let ctx = FieldCtx::paley(p)?;
        let seidel = SeidelMatrix::build(&ctx)?;
        for k in 1..=cfg.k_max.min(seidel.dim()) {
            let r = rip_best_available(&seidel, k, cfg.rip_budget, cfg.rip_iters, cfg.seed)?;
            let bound = conjecture_bound(p, k);
            let ratio = if r.delta_lower == 0.0 { 0.0 } else { r.delta_lower / bound };
            rows.push(ScalingRow {
                p,
                k,
                mode: r.mode,
                delta_lower: r.delta_lower,
                delta_upper: r.delta_upper,
                conjecture_bound: bound,
                ratio,
            });
        }
    }
    Ok(rows)
}

/// Note line, header and one line per row, LF-terminated.
pub fn scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = format!("{SCALING_NOTE}\n{SCALING_HEADER}\n");
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// (p, K) pairs where an exact δ_K drops below the exact δ_{K−1}.
pub fn monotonicity_violations(rows: &[ScalingRow]) -> Vec<(u64, usize)> {
    rows.windows(2)
        .filter(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.p == b.p
                && b.k == a.k + 1
                && a.mode == RipMode::Exact
                && b.mode == RipMode::Exact
                && b.delta_lower < a.delta_lower - 1e-12
        })
        .map(|w| (w[1].p, w[1].k))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n_rows: usize,
    pub c1_hat: f64,
    pub c2_hat: f64,
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
}

/// Least squares for log δ_K − ½log(K/p) − log log₂K = log c₁ + c₂·log log₂p
/// over exact rows with K ≥ 2.
pub fn fit_constants(rows: &[ScalingRow]) -> Result<FitReport> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mode == RipMode::Exact && r.k >= 2 && r.delta_lower > 0.0)
        .map(|r| {
            let (k, p) = (r.k as f64, r.p as f64);
            let y = r.delta_lower.ln() - 0.5 * (k / p).ln() - k.log2().ln();
            (p.log2().ln(), y)
        })
        .collect();
    if pts.len() < 8 {
        return Err(Error::TooFewRows {
            needed: 8,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
    let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(Error::BadParameter("fit needs at least two distinct primes".into()));
    }
    let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = pts.iter().map(|q| q.1 - intercept - slope * q.0).collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    Ok(FitReport {
        n_rows: pts.len(),
        c1_hat: intercept.exp(),
        c2_hat: slope,
        residuals,
        rms_residual,
    })
}
