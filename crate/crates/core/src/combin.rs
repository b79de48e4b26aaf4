//! k-subset enumeration in colexicographic order, with ranking so that
//! disjoint rank ranges can be handed to separate workers.

use rayon::prelude::*;

/// Saturating binomial coefficient.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i + 1) as u128,
            None => return u128::MAX,
        };
    }
    acc
}

/// Σ_{k ∈ sizes} C(n, k), saturating.
pub fn binomial_sum<I: IntoIterator<Item = u64>>(n: u64, sizes: I) -> u128 {
    sizes
        .into_iter()
        .fold(0u128, |acc, k| acc.saturating_add(binomial(n, k)))
}

/// The k-subset of `0..` with the given colex rank.
pub fn colex_unrank(mut rank: u128, k: usize) -> Vec<usize> {
    let mut out = vec![0usize; k];
    for i in (0..k).rev() {
        // largest c with C(c, i + 1) <= rank
        let mut c = i;
        while binomial(c as u64 + 1, i as u64 + 1) <= rank {
            c += 1;
        }
        rank -= binomial(c as u64, i as u64 + 1);
        out[i] = c;
    }
    out
}

pub fn colex_rank(comb: &[usize]) -> u128 {
    comb.iter()
        .enumerate()
        .map(|(i, &c)| binomial(c as u64, i as u64 + 1))
        .sum()
}

/// Advances `comb` to its colex successor within `0..n`; false when exhausted.
pub fn colex_next(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    for i in 0..k {
        let limit = if i + 1 < k { comb[i + 1] } else { n };
        if comb[i] + 1 < limit {
            comb[i] += 1;
            for (j, c) in comb.iter_mut().enumerate().take(i) {
                *c = j;
            }
            return true;
        }
    }
    false
}

const CHUNK: u128 = 1 << 13;

/// Maps every k-subset of `0..n` and folds the results with `reduce`.
///
/// `reduce` must be associative and commutative (a max under a total order,
/// say); the result is then independent of the number of workers.
pub fn par_reduce_ksubsets<T, M, R>(n: usize, k: usize, map: M, reduce: R) -> Option<T>
where
    T: Send,
    M: Fn(&[usize]) -> T + Sync,
    R: Fn(T, T) -> T + Sync,
{
    let total = binomial(n as u64, k as u64);
    if total == 0 {
        return None;
    }
    if k == 0 {
        return Some(map(&[]));
    }
    let chunks = total.div_ceil(CHUNK);
    (0..chunks as u64)
        .into_par_iter()
        .filter_map(|c| {
            let start = c as u128 * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut comb = colex_unrank(start, k);
            let mut acc = map(&comb);
            let mut rank = start + 1;
            while rank < end {
                colex_next(&mut comb, n);
                acc = reduce(acc, map(&comb));
                rank += 1;
            }
            Some(acc)
        })
        .reduce_with(&reduce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(14, 3), 364);
        assert_eq!(binomial(13, 4), 715);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(100, 50), 100891344545564193334812497256);
        assert_eq!(binomial(200, 100), u128::MAX);
        assert_eq!(binomial(1000, 500), u128::MAX);
        assert_eq!(binomial_sum(13, 4..=13), 7814);
    }

    #[test]
    fn colex_walk_matches_rank() {
        let (n, k) = (9, 4);
        let mut comb: Vec<usize> = (0..k).collect();
        let mut rank = 0u128;
        loop {
            assert_eq!(colex_rank(&comb), rank);
            assert_eq!(colex_unrank(rank, k), comb);
            rank += 1;
            if !colex_next(&mut comb, n) {
                break;
            }
        }
        assert_eq!(rank, binomial(n as u64, k as u64));
    }

    #[test]
    fn parallel_reduce_counts_everything() {
        let count = par_reduce_ksubsets(30, 4, |_| 1u64, |a, b| a + b).unwrap();
        assert_eq!(count as u128, binomial(30, 4));
        let max_sum = par_reduce_ksubsets(30, 4, |c| c.iter().sum::<usize>(), usize::max);
        assert_eq!(max_sum, Some(29 + 28 + 27 + 26));
        assert!(par_reduce_ksubsets(3, 4, |_| 1, |a: i32, b| a + b).is_none());
    }
}
