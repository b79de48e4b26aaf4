//! Single-word subset machinery for exhaustive scans at p < 64.

use std::cmp::Ordering;

use crate::combin::{binomial_sum, colex_next};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::subset::mask_lex_cmp;

pub const MAX_MASK_P: u64 = 63;

/// Per-element masks of χ(x − ·) = +1 and = −1, and the affine group
/// x ↦ a·x + b with χ(a) = +1 as permutations.
pub struct MaskTables {
    p: usize,
    plus: Vec<u64>,
    minus: Vec<u64>,
    group: Vec<Vec<u8>>,
}

impl MaskTables {
    pub fn new(ctx: &FieldCtx) -> Result<Self> {
        if ctx.p() > MAX_MASK_P {
            return Err(Error::FieldTooLarge {
                p: ctx.p(),
                limit: MAX_MASK_P,
            });
        }
        let p = ctx.size();
        let mut plus = vec![0u64; p];
        let mut minus = vec![0u64; p];
        for x in 0..p {
            for t in 0..p {
                match ctx.chi_diff(x, t) {
                    1 => plus[x] |= 1 << t,
                    -1 => minus[x] |= 1 << t,
                    _ => {}
                }
            }
        }
        let mut group = Vec::new();
        for a in ctx.qr_set().iter() {
            for b in 0..p {
                group.push((0..p).map(|x| ((a * x + b) % p) as u8).collect());
            }
        }
        Ok(MaskTables {
            p,
            plus,
            minus,
            group,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn group_order(&self) -> usize {
        self.group.len()
    }

    /// Σ_{s∈S, t∈T} χ(s − t).
    #[inline]
    pub fn sum(&self, s: u64, t: u64) -> i64 {
        let mut bits = s;
        let mut acc = 0i64;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc += (self.plus[x] & t).count_ones() as i64 - (self.minus[x] & t).count_ones() as i64;
        }
        acc
    }

    fn apply(perm: &[u8], s: u64) -> u64 {
        let mut bits = s;
        let mut out = 0u64;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            out |= 1 << perm[x];
        }
        out
    }

    /// True when `s` is the lexicographically smallest set in its orbit.
    pub fn is_canonical(&self, s: u64) -> bool {
        self.group
            .iter()
            .all(|g| mask_lex_cmp(Self::apply(g, s), s) != Ordering::Less)
    }
}

/// All subsets of `0..p` with size in `sizes`, in (size, colex) order.
pub fn masks_of_sizes(p: usize, sizes: impl IntoIterator<Item = usize>, limit: u128) -> Result<Vec<u64>> {
    let sizes: Vec<usize> = sizes.into_iter().filter(|&m| m <= p).collect();
    let count = binomial_sum(p as u64, sizes.iter().map(|&m| m as u64));
    if count > limit {
        return Err(Error::budget(count, limit));
    }
    let mut out = Vec::with_capacity(count as usize);
    for m in sizes {
        let mut comb: Vec<usize> = (0..m).collect();
        loop {
            out.push(comb.iter().fold(0u64, |acc, &x| acc | 1 << x));
            if m == 0 || !colex_next(&mut comb, p) {
                break;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_direct() {
        let ctx = FieldCtx::paley(13).unwrap();
        let t = MaskTables::new(&ctx).unwrap();
        let (s, u) = (0b1_0011_0101u64, 0b1100_1010_0001u64);
        let direct: i64 = (0..13)
            .filter(|x| s >> x & 1 == 1)
            .flat_map(|x| (0..13).filter(move |y| u >> y & 1 == 1).map(move |y| (x, y)))
            .map(|(x, y)| ctx.chi_diff(x, y) as i64)
            .sum();
        assert_eq!(t.sum(s, u), direct);
        assert_eq!(t.group_order(), 78);
    }

    #[test]
    fn orbit_representatives_partition() {
        let ctx = FieldCtx::paley(13).unwrap();
        let t = MaskTables::new(&ctx).unwrap();
        let sets = masks_of_sizes(13, [4], u128::MAX).unwrap();
        assert_eq!(sets.len(), 715);
        let reps = sets.iter().filter(|&&s| t.is_canonical(s)).count();
        // Burnside-free sanity: every orbit has at most 78 elements
        assert!(reps * 78 >= 715);
        assert!(t.is_canonical(0b1111));
    }
}
