//! Fixed-universe bitsets over `0..n`.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORD: usize = 64;

/// A subset of `0..universe`, one bit per element.
///
/// Ordering is lexicographic on the increasing element sequence, which is the
/// tie-break order used by every deterministic reduction in the crate.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    universe: usize,
    words: Vec<u64>,
}

pub fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

impl Subset {
    pub fn empty(universe: usize) -> Self {
        Subset {
            universe,
            words: vec![0; words_for(universe)],
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::empty(universe);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.trim();
        s
    }

    /// Panics if any index is outside the universe.
    pub fn from_indices<I: IntoIterator<Item = usize>>(universe: usize, items: I) -> Self {
        let mut s = Self::empty(universe);
        for x in items {
            s.insert(x);
        }
        s
    }

    pub fn try_from_indices<I: IntoIterator<Item = usize>>(
        universe: usize,
        items: I,
    ) -> Option<Self> {
        let mut s = Self::empty(universe);
        for x in items {
            if x >= universe {
                return None;
            }
            s.insert(x);
        }
        Some(s)
    }

    /// Only valid for universes of at most 64 elements.
    pub fn from_mask(universe: usize, mask: u64) -> Self {
        assert!(universe <= WORD);
        let mut s = Self::empty(universe);
        if universe > 0 {
            s.words[0] = mask;
            s.trim();
        }
        s
    }

    pub fn to_mask(&self) -> u64 {
        assert!(self.universe <= WORD);
        self.words.first().copied().unwrap_or(0)
    }

    /// A uniformly random subset of the given size.
    pub fn random<R: Rng + ?Sized>(universe: usize, size: usize, rng: &mut R) -> Self {
        let picked = rand::seq::index::sample(rng, universe, size);
        Self::from_indices(universe, picked.iter())
    }

    fn trim(&mut self) {
        let rem = self.universe % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn insert(&mut self, x: usize) {
        assert!(x < self.universe, "element {x} outside universe {}", self.universe);
        self.words[x / WORD] |= 1 << (x % WORD);
    }

    #[inline]
    pub fn remove(&mut self, x: usize) {
        if x < self.universe {
            self.words[x / WORD] &= !(1 << (x % WORD));
        }
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        x < self.universe && self.words[x / WORD] >> (x % WORD) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let t = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(i * WORD + t)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.universe, other.universe, "universe mismatch");
        Subset {
            universe: self.universe,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a & !b)
    }

    /// |self ∩ other| without materializing the intersection.
    pub fn intersection_len(&self, other: &Self) -> usize {
        assert_eq!(self.universe, other.universe, "universe mismatch");
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// |self ∩ window| where `window` is the `universe`-bit slice of `bits`
    /// starting at bit `offset`.
    pub(crate) fn window_intersection_len(&self, bits: &[u64], offset: usize) -> usize {
        let shift = offset % WORD;
        let base = offset / WORD;
        let mut total = 0usize;
        for (i, &w) in self.words.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let lo = bits.get(base + i).copied().unwrap_or(0);
            let chunk = if shift == 0 {
                lo
            } else {
                let hi = bits.get(base + i + 1).copied().unwrap_or(0);
                (lo >> shift) | (hi << (WORD - shift))
            };
            total += (w & chunk).count_ones() as usize;
        }
        total
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Lexicographic order on increasing element sequences of two masks.
pub fn mask_lex_cmp(a: u64, b: u64) -> Ordering {
    let (mut a, mut b) = (a, b);
    loop {
        match (a == 0, b == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (x, y) = (a.trailing_zeros(), b.trailing_zeros());
        if x != y {
            return x.cmp(&y);
        }
        a &= a - 1;
        b &= b - 1;
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Deserializes from an element list; the universe becomes `max + 1`.
impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(deserializer)?;
        let universe = items.iter().max().map_or(0, |m| m + 1);
        Ok(Subset::from_indices(universe, items))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop_assert_eq, proptest};

    #[test]
    fn basic_ops() {
        let a = Subset::from_indices(70, [0, 3, 64, 69]);
        let b = Subset::from_indices(70, [3, 5, 69]);
        assert_eq!(a.len(), 4);
        assert_eq!(a.union(&b).to_vec(), vec![0, 3, 5, 64, 69]);
        assert_eq!(a.intersection(&b).to_vec(), vec![3, 69]);
        assert_eq!(a.difference(&b).to_vec(), vec![0, 64]);
        assert_eq!(a.intersection_len(&b), 2);
        assert_eq!(Subset::full(70).len(), 70);
        assert!(Subset::empty(70).is_empty());
        assert!(Subset::try_from_indices(5, [5]).is_none());
    }

    #[test]
    fn lexicographic_order() {
        let s = |v: &[usize]| Subset::from_indices(10, v.iter().copied());
        assert!(s(&[0, 1, 4]) < s(&[0, 2]));
        assert!(s(&[0, 1]) < s(&[0, 1, 2]));
        assert!(s(&[]) < s(&[0]));
        assert_eq!(mask_lex_cmp(0b10011, 0b101), Ordering::Less);
        assert_eq!(mask_lex_cmp(0b11, 0b111), Ordering::Less);
    }

    proptest! {
        #[test]
        fn mask_order_matches_subset_order(a in any::<u64>(), b in any::<u64>()) {
            let (sa, sb) = (Subset::from_mask(64, a), Subset::from_mask(64, b));
            prop_assert_eq!(mask_lex_cmp(a, b), sa.cmp(&sb));
        }

        #[test]
        fn window_matches_naive(
            n in 1usize..200,
            seed_a in any::<u64>(),
            seed_b in any::<u64>(),
            offset_frac in 0.0f64..1.0,
        ) {
            use rand::SeedableRng;
            let mut ra = rand_chacha::ChaCha8Rng::seed_from_u64(seed_a);
            let mut rb = rand_chacha::ChaCha8Rng::seed_from_u64(seed_b);
            let a = Subset::random(n, ra.gen_range(0..=n), &mut ra);
            let b = Subset::random(2 * n, rb.gen_range(0..=2 * n), &mut rb);
            let offset = ((n as f64) * offset_frac) as usize;
            let naive = (0..n).filter(|&x| a.contains(x) && b.contains(x + offset)).count();
            prop_assert_eq!(a.window_intersection_len(b.words(), offset), naive);
        }
    }
}
