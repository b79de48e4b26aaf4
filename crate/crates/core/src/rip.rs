//! RIP constants of the Paley ETF, read off integer Seidel submatrices.
//!
//! For a support U the Gram submatrix is I + S_U/√p, so the support's
//! deviation from isometry is max(λ_max(S_U), −λ_min(S_U))/√p and δ_K is its
//! maximum over all |U| = K.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::combin::{binomial, binomial_sum, par_reduce_ksubsets};
use crate::eigen::{self, extreme_eigenvalues, MAX_DIM};
use crate::error::{Error, Result};
use crate::etf::SeidelMatrix;
use crate::format::sig12;

/// Default enumeration budget for exact mode.
pub const DEFAULT_BUDGET: u128 = 1 << 31;

/// Relative float slack when comparing a computed ratio against 1.
pub const RATIO_SLACK: f64 = 1e-12;

/// Eigenvalue residual tolerance for witness verification.
pub const EIG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RipMode {
    Exact,
    SearchLower,
    CoherenceUpper,
}

impl RipMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RipMode::Exact => "exact",
            RipMode::SearchLower => "search-lower",
            RipMode::CoherenceUpper => "coherence-upper",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RipReport {
    pub p: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub mode: RipMode,
    pub delta_lower: f64,
    pub delta_upper: f64,
    pub witness: Vec<usize>,
    pub subsets_examined: u64,
    pub elapsed_s: f64,
}

impl RipReport {
    pub const CSV_HEADER: &'static str = "p,K,mode,delta_lower,delta_upper";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.p,
            self.k,
            self.mode.as_str(),
            sig12(self.delta_lower),
            sig12(self.delta_upper)
        )
    }
}

/// (K − 1)/√p, the Gershgorin bound from coherence 1/√p.
pub fn rip_upper_coherence(p: u64, k: usize) -> f64 {
    k.saturating_sub(1) as f64 / (p as f64).sqrt()
}

fn check_k(s: &SeidelMatrix, k: usize) -> Result<()> {
    if k == 0 || k > MAX_DIM || k > s.dim() {
        return Err(Error::BadSparsity(k));
    }
    Ok(())
}

/// Spectral radius of S_U. Gershgorin caps it at |U| − 1 since every
/// off-diagonal entry is ±1; the cap only removes float excess.
pub fn support_radius(s: &SeidelMatrix, cols: &[usize]) -> f64 {
    let mut buf = Vec::with_capacity(cols.len() * cols.len());
    s.principal_into(cols, &mut buf);
    let (lo, hi) = extreme_eigenvalues(&mut buf, cols.len());
    hi.max(-lo).min(cols.len().saturating_sub(1) as f64)
}

/// A support scored by its spectral radius.
///
/// Radii are compared on a 1e−9 grid so that supports with the same exact
/// spectrum tie; ties go to the lexicographically smallest support.
#[derive(Debug, Clone)]
struct Scored {
    grid: i64,
    radius: f64,
    support: Vec<usize>,
}

impl Scored {
    fn new(radius: f64, support: Vec<usize>) -> Self {
        Scored {
            grid: (radius * 1e9).round() as i64,
            radius,
            support,
        }
    }

    fn better_than(&self, other: &Self) -> bool {
        match self.grid.cmp(&other.grid) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.support < other.support,
        }
    }

    fn best(a: Self, b: Self) -> Self {
        if b.better_than(&a) {
            b
        } else {
            a
        }
    }
}

/// Exact δ_K by enumerating every K-column support.
pub fn rip_exact(s: &SeidelMatrix, k: usize, budget: u128) -> Result<RipReport> {
    check_k(s, k)?;
    let total = binomial(s.dim() as u64, k as u64);
    if total > budget {
        return Err(Error::budget(total, budget));
    }
    let start = Instant::now();
    let best = par_reduce_ksubsets(
        s.dim(),
        k,
        |cols| Scored::new(support_radius(s, cols), cols.to_vec()),
        Scored::best,
    )
    .expect("at least one support");
    // residual guard on the witness
    eigen::extreme_eigs(&s.principal(&best.support), EIG_TOL)?;
    let delta = best.radius / s.sqrt_p();
    Ok(RipReport {
        p: s.p(),
        k,
        mode: RipMode::Exact,
        delta_lower: delta,
        delta_upper: delta,
        witness: best.support,
        subsets_examined: total as u64,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Greedy growth from `start`: repeatedly add the column maximizing
/// |Σ S_U|, ties to the smallest column.
fn greedy_grow(s: &SeidelMatrix, start: &[usize], k: usize) -> Vec<usize> {
    let n = s.dim();
    let mut inside = vec![false; n];
    let mut row = vec![0i64; n];
    let mut total = 0i64;
    let mut support = Vec::with_capacity(k);
    let mut queue = start.iter().copied();
    while support.len() < k {
        let c = match queue.next() {
            Some(c) => c,
            None => {
                let mut pick: Option<(i64, usize)> = None;
                for c in (0..n).filter(|&c| !inside[c]) {
                    let score = (total + 2 * row[c]).abs();
                    if pick.is_none_or(|(b, _)| score > b) {
                        pick = Some((score, c));
                    }
                }
                pick.expect("k <= dim").1
            }
        };
        total += 2 * row[c];
        inside[c] = true;
        support.push(c);
        for (x, r) in row.iter_mut().enumerate() {
            *r += s.get(x, c) as i64;
        }
    }
    support.sort_unstable();
    support
}

/// Lower bound on δ_K from greedy growth plus seeded swap hill-climbing.
///
/// Independent of the worker count: greedy starts are reduced under a total
/// order and the hill-climb is sequential.
pub fn rip_lower_search(s: &SeidelMatrix, k: usize, iters: u64, seed: u64) -> Result<RipReport> {
    check_k(s, k)?;
    let start = Instant::now();
    let n = s.dim();
    let upper = rip_upper_coherence(s.p(), k);
    if k == 1 {
        return Ok(RipReport {
            p: s.p(),
            k,
            mode: RipMode::SearchLower,
            delta_lower: 0.0,
            delta_upper: upper,
            witness: vec![0],
            subsets_examined: 1,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
    }
    // Translations of 𝔽_p fix the last column, so pairs {0, j} reach every
    // pair orbit.
    let mut best = (1..n)
        .into_par_iter()
        .map(|j| {
            let sup = greedy_grow(s, &[0, j], k);
            Scored::new(support_radius(s, &sup), sup)
        })
        .reduce_with(Scored::best)
        .expect("n >= 2");
    let mut examined = (n - 1) as u64;
    if k < n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..iters {
            let pos = rng.gen_range(0..k);
            let mut c = rng.gen_range(0..n - k);
            // c-th column outside the support
            for &u in &best.support {
                if u <= c {
                    c += 1;
                }
            }
            let mut cand = best.support.clone();
            cand[pos] = c;
            cand.sort_unstable();
            let scored = Scored::new(support_radius(s, &cand), cand);
            examined += 1;
            if scored.better_than(&best) {
                best = scored;
            }
        }
    }
    Ok(RipReport {
        p: s.p(),
        k,
        mode: RipMode::SearchLower,
        delta_lower: best.radius / s.sqrt_p(),
        delta_upper: upper,
        witness: best.support,
        subsets_examined: examined,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Coherence-only bracket [0, (K − 1)/√p].
pub fn rip_coherence_report(p: u64, k: usize) -> RipReport {
    RipReport {
        p,
        k,
        mode: RipMode::CoherenceUpper,
        delta_lower: 0.0,
        delta_upper: rip_upper_coherence(p, k),
        witness: Vec::new(),
        subsets_examined: 0,
        elapsed_s: 0.0,
    }
}

/// Exact when the enumeration fits the budget, seeded search otherwise.
pub fn rip_best_available(
    s: &SeidelMatrix,
    k: usize,
    budget: u128,
    iters: u64,
    seed: u64,
) -> Result<RipReport> {
    match rip_exact(s, k, budget) {
        Err(Error::BudgetExceeded { .. }) => rip_lower_search(s, k, iters, seed),
        other => other,
    }
}

fn field_columns(s: &SeidelMatrix, u: &[usize]) -> Result<Vec<usize>> {
    let mut cols = u.to_vec();
    cols.sort_unstable();
    cols.dedup();
    for &c in &cols {
        if c == s.last_column() {
            return Err(Error::LastColumnInSubset);
        }
        if c > s.last_column() {
            return Err(Error::OutOfRange {
                x: c as u64,
                p: s.p(),
            });
        }
    }
    Ok(cols)
}

/// |U| + (1/√p)·Σ_{u,v ∈ U} χ(u − v) for U ⊆ 𝔽_p.
pub fn rayleigh_indicator(s: &SeidelMatrix, u: &[usize]) -> Result<f64> {
    let cols = field_columns(s, u)?;
    Ok(cols.len() as f64 + s.entry_sum(&cols) as f64 / s.sqrt_p())
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub holds: bool,
    pub value: f64,
    pub lower_margin: f64,
    pub upper_margin: f64,
}

/// Checks (1 − δ)|U| ≤ 1_Uᵀ G 1_U ≤ (1 + δ)|U|.
pub fn check_rip_sandwich(s: &SeidelMatrix, u: &[usize], delta: f64) -> Result<SandwichReport> {
    let cols = field_columns(s, u)?;
    if cols.is_empty() {
        return Err(Error::EmptySet);
    }
    let size = cols.len() as f64;
    let value = rayleigh_indicator(s, &cols)?;
    let lower_margin = value - (1.0 - delta) * size;
    let upper_margin = (1.0 + delta) * size - value;
    Ok(SandwichReport {
        holds: lower_margin >= 0.0 && upper_margin >= 0.0,
        value,
        lower_margin,
        upper_margin,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TechBoundReport {
    pub p: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub delta: f64,
    /// max over U of |Σ χ(u − v)| / (δ·√p·|U|).
    pub max_ratio: f64,
    pub argmax: Vec<usize>,
    pub violations: u64,
    pub subsets_examined: u64,
}

impl TechBoundReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone)]
struct RatioAcc {
    ratio: f64,
    support: Vec<usize>,
    violations: u64,
}

impl RatioAcc {
    fn merge(a: Self, b: Self) -> Self {
        let violations = a.violations + b.violations;
        let take_b = match b.ratio.partial_cmp(&a.ratio).unwrap_or(Ordering::Equal) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => b.support < a.support,
        };
        let mut out = if take_b { b } else { a };
        out.violations = violations;
        out
    }
}

/// Verifies |Σ_{u,v ∈ U} χ(u − v)| ≤ δ·√p·|U| for every U ⊆ 𝔽_p, |U| ≤ K.
pub fn check_tech_bound(
    s: &SeidelMatrix,
    k: usize,
    delta: f64,
    budget: u128,
) -> Result<TechBoundReport> {
    if k == 0 {
        return Err(Error::BadSparsity(k));
    }
    let p = s.p() as usize;
    let k = k.min(p);
    let total = binomial_sum(p as u64, 1..=k as u64);
    if total > budget {
        return Err(Error::budget(total, budget));
    }
    let scale = delta * s.sqrt_p();
    let ratio_of = |cols: &[usize]| -> f64 {
        let sum = s.entry_sum(cols).unsigned_abs() as f64;
        if sum == 0.0 {
            0.0
        } else if scale <= 0.0 {
            f64::INFINITY
        } else {
            (sum / cols.len() as f64) / scale
        }
    };
    let best = (1..=k)
        .filter_map(|size| {
            par_reduce_ksubsets(
                p,
                size,
                |cols| {
                    let ratio = ratio_of(cols);
                    RatioAcc {
                        ratio,
                        support: cols.to_vec(),
                        violations: u64::from(ratio > 1.0 + RATIO_SLACK),
                    }
                },
                RatioAcc::merge,
            )
        })
        .reduce(RatioAcc::merge)
        .expect("k >= 1");
    Ok(TechBoundReport {
        p: s.p(),
        k,
        delta,
        max_ratio: best.ratio,
        argmax: best.support,
        violations: best.violations,
        subsets_examined: total as u64,
    })
}
