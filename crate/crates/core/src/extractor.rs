//! The Paley graph extractor Ext(x, y) and exact biases on flat sources.

use rayon::prelude::*;
use serde::Serialize;

use crate::charsum::{double_char_sum, PropertyPReport, SubsetPair};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::masks::{masks_of_sizes, MaskTables, MAX_MASK_P};
use crate::search::{local_search, Objective, SearchConfig};
use crate::subset::{mask_lex_cmp, Subset};

/// Pairs above this count are not cross-checked by enumeration.
pub const ENUMERATION_LIMIT: usize = 1_000_000;

const PMF_TOL: f64 = 1e-12;

pub fn ext(ctx: &FieldCtx, x: u64, y: u64) -> Result<u8> {
    let p = ctx.p();
    for v in [x, y] {
        if v >= p {
            return Err(Error::OutOfRange { x: v, p });
        }
    }
    Ok(ext_unchecked(ctx, x as usize, y as usize))
}

#[inline]
fn ext_unchecked(ctx: &FieldCtx, x: usize, y: usize) -> u8 {
    (x == y || ctx.chi_diff(x, y) == 1) as u8
}

/// A probability mass function on `0..len`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if let Some(q) = probs.iter().find(|q| !(q.is_finite() && **q >= 0.0)) {
            return Err(Error::InvalidPmf(format!("negative or non-finite mass {q}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::InvalidPmf(format!("masses sum to {total}")));
        }
        Ok(Pmf { probs })
    }

    pub fn point(len: usize, at: usize) -> Self {
        let mut probs = vec![0.0; len];
        probs[at] = 1.0;
        Pmf { probs }
    }

    pub fn flat(set: &Subset) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptySet);
        }
        let mass = 1.0 / set.len() as f64;
        let mut probs = vec![0.0; set.universe()];
        for x in set.iter() {
            probs[x] = mass;
        }
        Ok(Pmf { probs })
    }

    pub fn uniform_bit() -> Self {
        Pmf { probs: vec![0.5, 0.5] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// H_∞ in bits.
pub fn min_entropy(d: &Pmf) -> f64 {
    let max = d.probs.iter().copied().fold(0.0, f64::max);
    // -0.0 for point masses otherwise
    0.0 - max.log2()
}

pub fn stat_distance(a: &Pmf, b: &Pmf) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SupportMismatch);
    }
    Ok(0.5 * a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).sum::<f64>())
}

/// Distribution of Ext(X, Y) for independent X ~ dx, Y ~ dy on 𝔽_p.
pub fn output_distribution(ctx: &FieldCtx, dx: &Pmf, dy: &Pmf) -> Result<Pmf> {
    let p = ctx.size();
    if dx.len() != p || dy.len() != p {
        return Err(Error::SupportMismatch);
    }
    let mut one = 0.0;
    for (x, &px) in dx.probs.iter().enumerate().filter(|(_, q)| **q > 0.0) {
        for (y, &py) in dy.probs.iter().enumerate() {
            if ext_unchecked(ctx, x, y) == 1 {
                one += px * py;
            }
        }
    }
    let one = one.clamp(0.0, 1.0);
    Ok(Pmf { probs: vec![1.0 - one, one] })
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub p: u64,
    pub k_bits: f64,
    pub size: usize,
    /// |Σχ + |S ∩ T||, the numerator of |Pr[1] − ½|.
    pub bias_num: u64,
    /// 2|S||T|.
    pub bias_den: u64,
    pub bias: f64,
    /// Pr[Ext = 1] = pr_one_num / bias_den.
    pub pr_one_num: u64,
    pub k_s: f64,
    pub k_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_beta: Option<f64>,
    #[serde(rename = "S")]
    pub s: Subset,
    #[serde(rename = "T")]
    pub t: Subset,
    /// Distinct (S, T) pairs scored to find this one.
    pub pairs_examined: u64,
}

impl BiasReport {
    fn from_parts(ctx: &FieldCtx, s: Subset, t: Subset, sum: i64, pairs_examined: u64) -> Self {
        let (ns, nt) = (s.len() as u64, t.len() as u64);
        let inter = s.intersection_len(&t) as i64;
        let signed = sum + inter;
        let den = 2 * ns * nt;
        let k_s = (ns as f64).log2();
        let k_t = (nt as f64).log2();
        BiasReport {
            p: ctx.p(),
            k_bits: k_s.min(k_t),
            size: ns.min(nt) as usize,
            bias_num: signed.unsigned_abs(),
            bias_den: den,
            bias: signed.unsigned_abs() as f64 / den as f64,
            pr_one_num: ((ns * nt) as i64 + signed) as u64,
            k_s,
            k_t,
            bound_beta: None,
            s,
            t,
            pairs_examined,
        }
    }

    /// Pr[Ext = 1] = (|S||T| + Σχ + |S∩T|) / (2|S||T|).
    pub fn pr_one(&self) -> f64 {
        self.pr_one_num as f64 / self.bias_den as f64
    }

    /// Records the β with p^{−β} = bias.
    pub fn with_beta(mut self) -> Self {
        self.bound_beta = (self.bias > 0.0).then(|| -self.bias.ln() / (self.p as f64).ln());
        self
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{}",
            self.p,
            crate::format::sig12(self.k_bits),
            self.size,
            crate::format::sig12(self.bias)
        )
    }
}

pub const BIAS_CSV_HEADER: &str = "p,k,size,bias";

/// #{(x, y) ∈ S × T : Ext(x, y) = 1} by direct enumeration.
pub fn count_ones_direct(ctx: &FieldCtx, s: &Subset, t: &Subset) -> u64 {
    let t_list = t.to_vec();
    s.iter()
        .map(|x| t_list.iter().filter(|&&y| ext_unchecked(ctx, x, y) == 1).count() as u64)
        .sum()
}

/// Exact bias of Ext on flat sources over S and T. The closed form is
/// checked against enumeration when |S||T| ≤ [`ENUMERATION_LIMIT`].
pub fn flat_bias(ctx: &FieldCtx, s: &Subset, t: &Subset) -> Result<BiasReport> {
    let pair = SubsetPair::new(s.clone(), t.clone());
    let sum = double_char_sum(ctx, &pair)?;
    let report = BiasReport::from_parts(ctx, pair.s, pair.t, sum, 1);
    if s.len() * t.len() <= ENUMERATION_LIMIT {
        let direct = 2 * count_ones_direct(ctx, s, t);
        if direct != report.pr_one_num {
            return Err(Error::CrossCheckFailed(format!(
                "closed form {}/{} but enumeration {}/{}",
                report.pr_one_num, report.bias_den, direct, report.bias_den
            )));
        }
    }
    Ok(report)
}

/// Flat-source size for min-entropy k: ⌈2^k⌉, with 2^k within 1e−9 of an
/// integer taken as that integer.
pub fn flat_size(k: f64) -> usize {
    let v = k.exp2();
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        v.ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BiasMode {
    Exhaustive,
    Search,
}

/// Largest flat bias over |S| = |T| = ⌈2^k⌉.
///
/// Exhaustive mode scans S over affine-orbit representatives against every T;
/// search mode runs the local-search kernel and gives a lower bound.
pub fn worst_flat_bias(
    ctx: &FieldCtx,
    k: f64,
    mode: BiasMode,
    cfg: &SearchConfig,
    budget: u128,
) -> Result<BiasReport> {
    let p = ctx.size();
    if k.is_nan() || k < 0.0 {
        return Err(Error::BadParameter(format!("k must be nonnegative, got {k}")));
    }
    let size = flat_size(k);
    if size > p {
        return Err(Error::EntropyTooHigh { k, size: size as u64, p: ctx.p() });
    }
    let mut report = match mode {
        BiasMode::Exhaustive => exhaustive_bias(ctx, size, budget)?,
        BiasMode::Search => {
            let hit = local_search(ctx, size, size, Objective::Bias, cfg, None);
            BiasReport::from_parts(ctx, hit.s, hit.t, hit.sum, hit.evaluated)
        }
    };
    report.k_bits = k;
    Ok(report)
}

fn exhaustive_bias(ctx: &FieldCtx, size: usize, budget: u128) -> Result<BiasReport> {
    if ctx.p() > MAX_MASK_P {
        return Err(Error::FieldTooLarge { p: ctx.p(), limit: MAX_MASK_P });
    }
    let p = ctx.size();
    let tables = MaskTables::new(ctx)?;
    let sets = masks_of_sizes(p, [size], budget)?;
    let reps: Vec<u64> = sets.par_iter().copied().filter(|&s| tables.is_canonical(s)).collect();
    let pairs = reps.len() as u128 * sets.len() as u128;
    if pairs > budget {
        return Err(Error::budget(pairs, budget));
    }
    let score = |s: u64, t: u64| {
        let v = tables.sum(s, t) + (s & t).count_ones() as i64;
        (v.unsigned_abs(), s, t)
    };
    let better = |a: (u64, u64, u64), b: (u64, u64, u64)| {
        let ord = b
            .0
            .cmp(&a.0)
            .then_with(|| mask_lex_cmp(a.1, b.1))
            .then_with(|| mask_lex_cmp(a.2, b.2));
        if ord == std::cmp::Ordering::Greater {
            b
        } else {
            a
        }
    };
    let (_, s, t) = reps
        .par_iter()
        .map(|&s| sets.iter().map(|&t| score(s, t)).reduce(better).expect("nonempty"))
        .reduce_with(better)
        .expect("nonempty");
    let sum = tables.sum(s, t);
    Ok(BiasReport::from_parts(
        ctx,
        Subset::from_mask(p, s),
        Subset::from_mask(p, t),
        sum,
        pairs as u64,
    ))
}

/// Extractor error bound ½(worst_ratio + 1/⌈p^α⌉) implied by a property-𝒫
/// report, with the diagonal term included.
pub fn extractor_error_bound(ctx: &FieldCtx, report: &PropertyPReport) -> Result<f64> {
    if report.p != ctx.p() {
        return Err(Error::PrimeMismatch { report: report.p, ctx: ctx.p() });
    }
    let min_size = flat_size(report.alpha * (ctx.p() as f64).log2());
    Ok(0.5 * (report.worst_ratio + 1.0 / min_size as f64))
}
