//! Double character sums Σ_{s∈S, t∈T} χ(s − t) and the checks built on them.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::masks::{masks_of_sizes, MaskTables};
use crate::rip::RATIO_SLACK;
use crate::search::{local_search, Objective, SearchConfig, SearchHit};
use crate::subset::{mask_lex_cmp, words_for, Subset};

/// Upper limit on the number of qualifying sets an exhaustive scan will list.
const MAX_LISTED_SETS: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetPair {
    #[serde(rename = "S")]
    pub s: Subset,
    #[serde(rename = "T")]
    pub t: Subset,
}

impl SubsetPair {
    pub fn new(s: Subset, t: Subset) -> Self {
        assert_eq!(s.universe(), t.universe(), "universe mismatch");
        SubsetPair { s, t }
    }

    pub fn from_indices(p: usize, s: &[usize], t: &[usize]) -> Self {
        SubsetPair::new(
            Subset::from_indices(p, s.iter().copied()),
            Subset::from_indices(p, t.iter().copied()),
        )
    }

    fn nonempty(&self) -> Result<()> {
        if self.s.is_empty() || self.t.is_empty() {
            Err(Error::EmptySet)
        } else {
            Ok(())
        }
    }
}

/// O(|S||T|) table lookups.
pub fn double_char_sum_direct(ctx: &FieldCtx, s: &Subset, t: &Subset) -> i64 {
    let t_list = t.to_vec();
    s.iter()
        .map(|x| t_list.iter().map(|&y| ctx.chi_diff(x, y) as i64).sum::<i64>())
        .sum()
}

/// Σ_d χ(d)·|S ∩ (T + d)| with word-level popcounts.
pub fn double_char_sum_convolution(ctx: &FieldCtx, s: &Subset, t: &Subset) -> i64 {
    let p = ctx.size();
    // bit i of `doubled` is T[i mod p], so T + d is the window at offset p − d
    let mut doubled = vec![0u64; words_for(2 * p)];
    for y in t.iter() {
        for z in [y, y + p] {
            doubled[z / 64] |= 1 << (z % 64);
        }
    }
    (1..p)
        .map(|d| {
            let chi = ctx.chi_table()[d] as i64;
            chi * s.window_intersection_len(&doubled, p - d) as i64
        })
        .sum()
}

/// Exact Σ_{s∈S, t∈T} χ(s − t), choosing the cheaper path.
pub fn double_char_sum(ctx: &FieldCtx, pair: &SubsetPair) -> Result<i64> {
    pair.nonempty()?;
    let work = pair.s.len() * pair.t.len();
    if work > ctx.size() * words_for(ctx.size()) {
        Ok(double_char_sum_convolution(ctx, &pair.s, &pair.t))
    } else {
        Ok(double_char_sum_direct(ctx, &pair.s, &pair.t))
    }
}

/// Σ_{u,v ∈ U} χ(u − v); zero for the empty set.
pub fn self_sum(ctx: &FieldCtx, u: &Subset) -> i64 {
    double_char_sum_direct(ctx, u, u)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub lhs: i64,
    pub union_sum: i64,
    pub s_minus_t_sum: i64,
    pub t_minus_s_sum: i64,
    pub intersection_sum: i64,
    /// Σ_{S∪T} − Σ_{S∖T} − Σ_{T∖S}.
    pub printed_rhs: i64,
    /// printed_rhs − lhs.
    pub printed_residual: i64,
    /// Σ_{S∪T} − Σ_{S∖T} − Σ_{T∖S} + Σ_{S∩T}, which equals 2·lhs.
    pub corrected_rhs_doubled: i64,
    /// corrected_rhs_doubled − 2·lhs.
    pub corrected_residual: i64,
}

/// Evaluates the three-term split of Σ_{S,T} and its corrected four-term form.
pub fn decomposition_check(ctx: &FieldCtx, pair: &SubsetPair) -> Result<DecompositionReport> {
    if !ctx.is_1mod4() {
        return Err(Error::WrongResidueClass(ctx.p()));
    }
    let (s, t) = (&pair.s, &pair.t);
    let lhs = double_char_sum_direct(ctx, s, t);
    let union_sum = self_sum(ctx, &s.union(t));
    let s_minus_t_sum = self_sum(ctx, &s.difference(t));
    let t_minus_s_sum = self_sum(ctx, &t.difference(s));
    let intersection_sum = self_sum(ctx, &s.intersection(t));
    let printed_rhs = union_sum - s_minus_t_sum - t_minus_s_sum;
    let corrected_rhs_doubled = printed_rhs + intersection_sum;
    Ok(DecompositionReport {
        lhs,
        union_sum,
        s_minus_t_sum,
        t_minus_s_sum,
        intersection_sum,
        printed_rhs,
        printed_residual: printed_rhs - lhs,
        corrected_rhs_doubled,
        corrected_residual: corrected_rhs_doubled - 2 * lhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    /// The quantity being bounded.
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
}

impl BoundCheck {
    pub fn new(value: f64, bound: f64) -> Self {
        BoundCheck {
            value,
            bound,
            slack: bound - value,
            satisfied: value <= bound * (1.0 + RATIO_SLACK),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CharSumReport {
    pub sum: i64,
    pub ratio: f64,
    pub bounds: BTreeMap<String, BoundCheck>,
}

impl CharSumReport {
    fn new(ctx: &FieldCtx, pair: &SubsetPair) -> Result<Self> {
        let sum = double_char_sum(ctx, pair)?;
        Ok(CharSumReport {
            sum,
            ratio: sum.unsigned_abs() as f64 / (pair.s.len() * pair.t.len()) as f64,
            bounds: BTreeMap::new(),
        })
    }

    pub fn all_satisfied(&self) -> bool {
        self.bounds.values().all(|b| b.satisfied)
    }
}

/// Smallest integer size strictly above p^exponent. Powers within 1e−9 of an
/// integer are treated as that integer.
pub fn min_size_above(p: u64, exponent: f64) -> usize {
    let t = (p as f64).powf(exponent);
    let r = t.round();
    if (t - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize + 1
    } else {
        t.floor().max(0.0) as usize + 1
    }
}

/// Link-by-link check of
/// |Σ| ≤ δ√p(|S∪T| + |S∖T| + |T∖S| + |S∩T|) ≤ 2δ√p(|S| + |T|) ≤ 4p^{−γ}|S||T|.
pub fn chain_bound_check(
    ctx: &FieldCtx,
    pair: &SubsetPair,
    delta: f64,
    tau: f64,
    gamma: f64,
) -> Result<CharSumReport> {
    pair.nonempty()?;
    if !(gamma > 0.0 && gamma < tau) {
        return Err(Error::SizeWindowViolated(format!(
            "need 0 < gamma < tau, got gamma = {gamma}, tau = {tau}"
        )));
    }
    let p = ctx.p() as f64;
    if delta > p.powf(-tau) * (1.0 + RATIO_SLACK) {
        return Err(Error::BadParameter(format!(
            "delta = {delta} exceeds p^-tau = {}",
            p.powf(-tau)
        )));
    }
    let min_size = min_size_above(ctx.p(), 0.5 - tau + gamma);
    let (ns, nt) = (pair.s.len(), pair.t.len());
    if ns < min_size || nt < min_size {
        return Err(Error::SizeWindowViolated(format!(
            "|S| = {ns}, |T| = {nt} must exceed p^(1/2 - tau + gamma) (minimum size {min_size})"
        )));
    }
    let mut report = CharSumReport::new(ctx, pair)?;
    let (s, t) = (&pair.s, &pair.t);
    let inter = s.intersection_len(t);
    let split_sizes = (s.union(t).len() + (ns - inter) + (nt - inter) + inter) as f64;
    let scale = delta * p.sqrt();
    let lhs = report.sum.unsigned_abs() as f64;
    let split = scale * split_sizes;
    let sizes = 2.0 * scale * (ns + nt) as f64;
    let target = 4.0 * p.powf(-gamma) * (ns * nt) as f64;
    report.bounds.insert("set_split".into(), BoundCheck::new(lhs, split));
    report.bounds.insert("size_sum".into(), BoundCheck::new(split, sizes));
    report.bounds.insert("size_window".into(), BoundCheck::new(sizes, target));
    report.bounds.insert("final".into(), BoundCheck::new(lhs, target));
    Ok(report)
}

/// Checks |Σ| ≤ p^{−0.05ε²}|S||T| when one set exceeds p^ε and the other
/// p^{1/2+ε}. The bound is asymptotic, so only the margin is reported.
pub fn karatsuba_check(ctx: &FieldCtx, pair: &SubsetPair, epsilon: f64) -> Result<CharSumReport> {
    pair.nonempty()?;
    if epsilon <= 0.0 {
        return Err(Error::BadParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let small = min_size_above(ctx.p(), epsilon);
    let large = min_size_above(ctx.p(), 0.5 + epsilon);
    let (ns, nt) = (pair.s.len(), pair.t.len());
    let ok = (ns >= small && nt >= large) || (nt >= small && ns >= large);
    if !ok {
        return Err(Error::SizeWindowViolated(format!(
            "need one size > p^eps ({small} or more) and the other > p^(1/2+eps) ({large} or more)"
        )));
    }
    let mut report = CharSumReport::new(ctx, pair)?;
    let factor = (ctx.p() as f64).powf(-0.05 * epsilon * epsilon);
    report.bounds.insert(
        "karatsuba".into(),
        BoundCheck::new(report.sum.unsigned_abs() as f64, factor * (ns * nt) as f64),
    );
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    Exhaustive,
    LocalSearch,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyPReport {
    pub p: u64,
    pub alpha: f64,
    pub min_size: usize,
    pub search_mode: SearchMode,
    pub worst_ratio: f64,
    pub worst_sum: i64,
    pub worst_pair: SubsetPair,
    /// −log_p(worst_ratio); absent when the worst ratio is 0.
    pub implied_beta: Option<f64>,
    pub query_beta: Option<f64>,
    /// worst_ratio·p^β for the queried β: the smallest C that works there.
    pub empirical_c_at_beta: Option<f64>,
    pub pairs_examined: u64,
    /// Pairs a plain scan would visit per pair actually visited.
    pub symmetry_reduction: f64,
}

impl PropertyPReport {
    /// Report for a worst pair found by some scan; the ratio and implied β
    /// are derived from the exact sum.
    #[allow(clippy::too_many_arguments)]
    pub fn from_worst(
        p: u64,
        alpha: f64,
        min_size: usize,
        search_mode: SearchMode,
        worst_sum: i64,
        worst_pair: SubsetPair,
        pairs_examined: u64,
        symmetry_reduction: f64,
    ) -> Self {
        let worst_ratio =
            worst_sum.unsigned_abs() as f64 / (worst_pair.s.len() * worst_pair.t.len()) as f64;
        let implied_beta = (worst_ratio > 0.0).then(|| -worst_ratio.ln() / (p as f64).ln());
        PropertyPReport {
            p,
            alpha,
            min_size,
            search_mode,
            worst_ratio,
            worst_sum,
            worst_pair,
            implied_beta,
            query_beta: None,
            empirical_c_at_beta: None,
            pairs_examined,
            symmetry_reduction,
        }
    }

    /// Records the constant C = worst_ratio·p^β needed at the queried β.
    pub fn at_beta(mut self, beta: f64) -> Self {
        self.query_beta = Some(beta);
        self.empirical_c_at_beta = Some(self.worst_ratio * (self.p as f64).powf(beta));
        self
    }
}

#[derive(Clone, Copy)]
struct MaskBest {
    sum: i64,
    s: u64,
    t: u64,
}

impl MaskBest {
    fn abs_over(&self) -> (u128, u128) {
        (
            self.sum.unsigned_abs() as u128,
            (self.s.count_ones() * self.t.count_ones()) as u128,
        )
    }

    /// Larger |Σ|/(|S||T|), then lexicographically smaller (S, T).
    fn best(a: Self, b: Self) -> Self {
        let (na, da) = a.abs_over();
        let (nb, db) = b.abs_over();
        let ord = (nb * da)
            .cmp(&(na * db))
            .then_with(|| mask_lex_cmp(a.s, b.s))
            .then_with(|| mask_lex_cmp(a.t, b.t));
        if ord == std::cmp::Ordering::Greater {
            b
        } else {
            a
        }
    }
}

/// Worst |Σ|/(|S||T|) over every pair with |S|, |T| > p^α.
///
/// S runs over orbit representatives of x ↦ a·x + b (χ(a) = +1), which
/// preserves the ratio; T runs over all qualifying sets.
pub fn property_p_exhaustive(ctx: &FieldCtx, alpha: f64, budget: u128) -> Result<PropertyPReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::BadParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let p = ctx.size();
    let min_size = min_size_above(ctx.p(), alpha);
    if min_size > p {
        return Err(Error::BadParameter(format!("no subset of F_{p} has more than p^{alpha} elements")));
    }
    let sizes = min_size..=p;
    let n_sets = crate::combin::binomial_sum(p as u64, sizes.clone().map(|m| m as u64));
    if n_sets > budget {
        return Err(Error::budget(n_sets, budget));
    }
    let tables = MaskTables::new(ctx)?;
    let sets = masks_of_sizes(p, sizes, MAX_LISTED_SETS.min(budget))?;
    let reps: Vec<u64> = sets.par_iter().copied().filter(|&s| tables.is_canonical(s)).collect();
    let pairs = reps.len() as u128 * sets.len() as u128;
    if pairs > budget {
        return Err(Error::budget(pairs, budget));
    }
    let best = reps
        .par_iter()
        .map(|&s| {
            sets.iter()
                .map(|&t| MaskBest { sum: tables.sum(s, t), s, t })
                .reduce(MaskBest::best)
                .expect("nonempty")
        })
        .reduce_with(MaskBest::best)
        .expect("nonempty");
    let full = sets.len() as f64 * sets.len() as f64;
    Ok(PropertyPReport::from_worst(
        ctx.p(),
        alpha,
        min_size,
        SearchMode::Exhaustive,
        best.sum,
        SubsetPair::new(Subset::from_mask(p, best.s), Subset::from_mask(p, best.t)),
        pairs as u64,
        full / pairs as f64,
    ))
}

/// Local-search lower bound on the worst ratio, over size pairs drawn from
/// `sizes` (each must exceed p^α).
pub fn property_p_search(
    ctx: &FieldCtx,
    alpha: f64,
    sizes: &[usize],
    cfg: &SearchConfig,
) -> Result<PropertyPReport> {
    property_p_search_from(ctx, alpha, sizes, cfg, None)
}

/// As [`property_p_search`], with the first restart of every size pair that
/// matches `init` starting from it.
pub fn property_p_search_from(
    ctx: &FieldCtx,
    alpha: f64,
    sizes: &[usize],
    cfg: &SearchConfig,
    init: Option<&SubsetPair>,
) -> Result<PropertyPReport> {
    let min_size = min_size_above(ctx.p(), alpha);
    let mut sizes: Vec<usize> = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(Error::BadParameter("no sizes given".into()));
    }
    if let Some(&m) = sizes.iter().find(|&&m| m < min_size || m > ctx.size()) {
        return Err(Error::SizeWindowViolated(format!(
            "size {m} outside ({}, {}]",
            (ctx.p() as f64).powf(alpha),
            ctx.p()
        )));
    }
    let mut best: Option<SearchHit> = None;
    let mut evaluated = 0u64;
    for (i, &a) in sizes.iter().enumerate() {
        for &b in &sizes[i..] {
            let start = init.filter(|pair| pair.s.len() == a && pair.t.len() == b);
            let hit = local_search(
                ctx,
                a,
                b,
                Objective::CharSum,
                cfg,
                start.map(|pair| (&pair.s, &pair.t)),
            );
            evaluated += hit.evaluated;
            best = Some(match best {
                Some(cur) if hit.cmp_normalized(&cur, Objective::CharSum).is_le() => cur,
                _ => hit,
            });
        }
    }
    let best = best.expect("nonempty sizes");
    Ok(PropertyPReport::from_worst(
        ctx.p(),
        alpha,
        min_size,
        SearchMode::LocalSearch,
        best.sum,
        SubsetPair::new(best.s, best.t),
        evaluated,
        1.0,
    ))
}

/// One row of a bulk pair scan: `p,|S|,|T|,sum,ratio`.
pub fn scan_row(ctx: &FieldCtx, pair: &SubsetPair) -> Result<String> {
    let sum = double_char_sum(ctx, pair)?;
    let ratio = sum.unsigned_abs() as f64 / (pair.s.len() * pair.t.len()) as f64;
    Ok(format!(
        "{},{},{},{},{}",
        ctx.p(),
        pair.s.len(),
        pair.t.len(),
        sum,
        crate::format::sig12(ratio)
    ))
}

pub const SCAN_HEADER: &str = "p,|S|,|T|,sum,ratio";
