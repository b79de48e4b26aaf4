//! Seeded local search over subset pairs (S, T) of fixed sizes.
//!
//! One engine serves two objectives: |Σχ(s − t)| for property-𝒫 searches
//! and |Σχ(s − t) + |S ∩ T|| for extractor bias. Each step swaps one element
//! of S or T and keeps the swap only if the objective strictly improves.
//! Row sums against the other set are maintained so a step costs O(p).

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::field::FieldCtx;
use crate::subset::Subset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    CharSum,
    Bias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SearchConfig {
    /// Swap proposals per restart.
    pub iters: u64,
    pub restarts: u32,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            iters: 2000,
            restarts: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchHit {
    pub s: Subset,
    pub t: Subset,
    pub sum: i64,
    pub intersection: usize,
    pub evaluated: u64,
}

impl SearchHit {
    pub fn score(&self, objective: Objective) -> u64 {
        match objective {
            Objective::CharSum => self.sum.unsigned_abs(),
            Objective::Bias => (self.sum + self.intersection as i64).unsigned_abs(),
        }
    }

    /// Objective divided by |S||T|, compared exactly.
    pub fn cmp_normalized(&self, other: &Self, objective: Objective) -> Ordering {
        let a = self.score(objective) as u128 * (other.s.len() * other.t.len()) as u128;
        let b = other.score(objective) as u128 * (self.s.len() * self.t.len()) as u128;
        a.cmp(&b)
            .then_with(|| other.s.cmp(&self.s))
            .then_with(|| other.t.cmp(&self.t))
    }
}

struct State<'a> {
    ctx: &'a FieldCtx,
    s: Subset,
    t: Subset,
    s_list: Vec<usize>,
    t_list: Vec<usize>,
    /// row[x] = Σ_{t∈T} χ(x − t)
    row: Vec<i64>,
    /// col[y] = Σ_{s∈S} χ(s − y)
    col: Vec<i64>,
    sum: i64,
    inter: usize,
}

impl<'a> State<'a> {
    fn new(ctx: &'a FieldCtx, s: Subset, t: Subset) -> Self {
        let p = ctx.size();
        let s_list = s.to_vec();
        let t_list = t.to_vec();
        let row: Vec<i64> = (0..p)
            .map(|x| t_list.iter().map(|&y| ctx.chi_diff(x, y) as i64).sum())
            .collect();
        let col: Vec<i64> = (0..p)
            .map(|y| s_list.iter().map(|&x| ctx.chi_diff(x, y) as i64).sum())
            .collect();
        let sum = s_list.iter().map(|&x| row[x]).sum();
        let inter = s.intersection_len(&t);
        State {
            ctx,
            s,
            t,
            s_list,
            t_list,
            row,
            col,
            sum,
            inter,
        }
    }

    fn score(&self, sum: i64, inter: usize, objective: Objective) -> u64 {
        match objective {
            Objective::CharSum => sum.unsigned_abs(),
            Objective::Bias => (sum + inter as i64).unsigned_abs(),
        }
    }

    /// Proposes one swap and applies it when it strictly improves.
    fn step<R: Rng>(&mut self, rng: &mut R, objective: Objective) {
        let p = self.ctx.size();
        let current = self.score(self.sum, self.inter, objective);
        let on_s = rng.gen_bool(0.5);
        let (list, own, other) = if on_s {
            (&self.s_list, &self.s, &self.t)
        } else {
            (&self.t_list, &self.t, &self.s)
        };
        if list.len() == p || list.is_empty() {
            return;
        }
        let pos = rng.gen_range(0..list.len());
        let out = list[pos];
        let incoming = loop {
            let x = rng.gen_range(0..p);
            if !own.contains(x) {
                break x;
            }
        };
        let marginal = if on_s { &self.row } else { &self.col };
        let new_sum = self.sum + marginal[incoming] - marginal[out];
        let new_inter = self.inter + other.contains(incoming) as usize - other.contains(out) as usize;
        if self.score(new_sum, new_inter, objective) <= current {
            return;
        }
        let ctx = self.ctx;
        if on_s {
            self.s.remove(out);
            self.s.insert(incoming);
            self.s_list[pos] = incoming;
            for (y, c) in self.col.iter_mut().enumerate() {
                *c += ctx.chi_diff(incoming, y) as i64 - ctx.chi_diff(out, y) as i64;
            }
        } else {
            self.t.remove(out);
            self.t.insert(incoming);
            self.t_list[pos] = incoming;
            for (x, r) in self.row.iter_mut().enumerate() {
                *r += ctx.chi_diff(x, incoming) as i64 - ctx.chi_diff(x, out) as i64;
            }
        }
        self.sum = new_sum;
        self.inter = new_inter;
    }
}

fn restart_rng(seed: u64, restart: u32, size_s: usize, size_t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((restart as u64) << 40) ^ ((size_s as u64) << 20) ^ size_t as u64);
    rng
}

/// Best pair found for the given sizes. Restart 0 starts from `init` when
/// supplied; the rest start from seeded random pairs. Deterministic for a
/// fixed config regardless of the worker count.
pub fn local_search(
    ctx: &FieldCtx,
    size_s: usize,
    size_t: usize,
    objective: Objective,
    cfg: &SearchConfig,
    init: Option<(&Subset, &Subset)>,
) -> SearchHit {
    let p = ctx.size();
    let restarts = cfg.restarts.max(1);
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(cfg.seed, r, size_s, size_t);
            let (s, t) = match (r, init) {
                (0, Some((s, t))) => (s.clone(), t.clone()),
                _ => (
                    Subset::random(p, size_s, &mut rng),
                    Subset::random(p, size_t, &mut rng),
                ),
            };
            let mut state = State::new(ctx, s, t);
            for _ in 0..cfg.iters {
                state.step(&mut rng, objective);
            }
            SearchHit {
                s: state.s,
                t: state.t,
                sum: state.sum,
                intersection: state.inter,
                evaluated: cfg.iters + 1,
            }
        })
        .reduce_with(|a, b| {
            let evaluated = a.evaluated + b.evaluated;
            let mut best = if b.cmp_normalized(&a, objective) == Ordering::Greater {
                b
            } else {
                a
            };
            best.evaluated = evaluated;
            best
        })
        .expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_sum(ctx: &FieldCtx, s: &Subset, t: &Subset) -> i64 {
        s.iter()
            .flat_map(|x| t.iter().map(move |y| (x, y)))
            .map(|(x, y)| ctx.chi_diff(x, y) as i64)
            .sum()
    }

    #[test]
    fn incremental_state_stays_exact() {
        let ctx = FieldCtx::paley(29).unwrap();
        for objective in [Objective::CharSum, Objective::Bias] {
            let cfg = SearchConfig { iters: 300, restarts: 3, seed: 11 };
            let hit = local_search(&ctx, 6, 9, objective, &cfg, None);
            assert_eq!(hit.s.len(), 6);
            assert_eq!(hit.t.len(), 9);
            assert_eq!(hit.sum, direct_sum(&ctx, &hit.s, &hit.t));
            assert_eq!(hit.intersection, hit.s.intersection_len(&hit.t));
        }
    }

    #[test]
    fn search_never_worsens_init() {
        let ctx = FieldCtx::paley(29).unwrap();
        let q = ctx.qr_set().clone();
        let base = direct_sum(&ctx, &q, &q).unsigned_abs();
        let cfg = SearchConfig { iters: 500, restarts: 1, seed: 2 };
        let hit = local_search(&ctx, q.len(), q.len(), Objective::CharSum, &cfg, Some((&q, &q)));
        assert!(hit.score(Objective::CharSum) >= base);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let ctx = FieldCtx::paley(37).unwrap();
        let cfg = SearchConfig { iters: 200, restarts: 6, seed: 5 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| local_search(&ctx, 7, 7, Objective::Bias, &cfg, None))
        };
        let (a, b) = (run(1), run(4));
        assert_eq!((a.s, a.t, a.sum), (b.s, b.t, b.sum));
    }
}
