//! Maximum cliques of the Paley graph G_p (x ~ y iff χ(x − y) = +1).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::subset::{words_for, Subset};

pub const DEFAULT_NODE_BUDGET: u64 = 1 << 32;

#[derive(Debug, Clone, Serialize)]
pub struct CliqueReport {
    pub p: u64,
    pub omega: usize,
    pub witness: Subset,
    /// √(p/2) + 1.
    pub hp_bound: f64,
    pub nodes_explored: u64,
}

type Bits = Vec<u64>;

fn bit_iter(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(i, &w)| {
        let mut w = w;
        std::iter::from_fn(move || {
            (w != 0).then(|| {
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                i * 64 + t
            })
        })
    })
}

fn and(a: &[u64], b: &[u64]) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn popcount(a: &[u64]) -> usize {
    a.iter().map(|w| w.count_ones() as usize).sum()
}

struct Search<'a> {
    adj: &'a [Bits],
    best: Vec<usize>,
    current: Vec<usize>,
    nodes: u64,
    budget: u64,
}

impl Search<'_> {
    /// Greedy coloring of `cand` in the given vertex order. Returns vertices
    /// with their color numbers, ascending by color.
    fn color(&self, order: &[usize]) -> Vec<(usize, usize)> {
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for &v in order {
            let slot = classes
                .iter()
                .position(|cls| cls.iter().all(|&u| self.adj[v][u / 64] >> (u % 64) & 1 == 0));
            match slot {
                Some(i) => classes[i].push(v),
                None => classes.push(vec![v]),
            }
        }
        classes
            .into_iter()
            .enumerate()
            .flat_map(|(c, cls)| cls.into_iter().map(move |v| (v, c + 1)))
            .collect()
    }

    fn expand(&mut self, cand: Bits) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::budget(self.nodes as u128, self.budget as u128));
        }
        // higher degree inside the candidate set colors first
        let mut order: Vec<usize> = bit_iter(&cand).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(popcount(&and(&self.adj[v], &cand))), v));
        let colored = self.color(&order);
        let mut cand = cand;
        for &(v, c) in colored.iter().rev() {
            if self.current.len() + c <= self.best.len() {
                return Ok(());
            }
            self.current.push(v);
            let next = and(&cand, &self.adj[v]);
            if next.iter().all(|&w| w == 0) {
                if self.current.len() > self.best.len() {
                    self.best = self.current.clone();
                }
            } else {
                self.expand(next)?;
            }
            self.current.pop();
            cand[v / 64] &= !(1 << (v % 64));
        }
        Ok(())
    }
}

/// Exact ω(G_p). The graph is vertex-transitive, so the search only looks at
/// cliques through 0.
pub fn clique_number(ctx: &FieldCtx, node_budget: u64) -> Result<CliqueReport> {
    if !ctx.is_1mod4() {
        return Err(Error::WrongResidueClass(ctx.p()));
    }
    let p = ctx.size();
    let adj: Vec<Bits> = (0..p)
        .map(|x| {
            let mut row = vec![0u64; words_for(p)];
            for y in (0..p).filter(|&y| ctx.chi_diff(x, y) == 1) {
                row[y / 64] |= 1 << (y % 64);
            }
            row
        })
        .collect();
    let mut search = Search {
        adj: &adj,
        best: vec![0],
        current: vec![0],
        nodes: 0,
        budget: node_budget,
    };
    search.expand(adj[0].clone())?;
    let witness = Subset::from_indices(p, search.best.iter().copied());
    if !is_clique(ctx, &witness) {
        return Err(Error::CrossCheckFailed(format!("witness {witness:?} is not a clique")));
    }
    let hp_bound = (p as f64 / 2.0).sqrt() + 1.0;
    let omega = witness.len();
    if omega as f64 > hp_bound.floor() {
        return Err(Error::CrossCheckFailed(format!(
            "omega = {omega} exceeds sqrt(p/2) + 1 = {hp_bound}"
        )));
    }
    Ok(CliqueReport {
        p: ctx.p(),
        omega,
        witness,
        hp_bound,
        nodes_explored: search.nodes,
    })
}

/// All pairwise differences are quadratic residues.
pub fn is_clique(ctx: &FieldCtx, w: &Subset) -> bool {
    let v = w.to_vec();
    v.iter()
        .enumerate()
        .all(|(i, &x)| v[i + 1..].iter().all(|&y| ctx.chi_diff(x, y) == 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charsum::self_sum;

    #[test]
    fn small_primes() {
        let c = FieldCtx::paley(13).unwrap();
        let r = clique_number(&c, DEFAULT_NODE_BUDGET).unwrap();
        assert_eq!(r.omega, 3);
        assert!(is_clique(&c, &r.witness));
        assert!(is_clique(&c, &Subset::from_indices(13, [0, 1, 4])));
        assert!(!is_clique(&c, &Subset::from_indices(13, [0, 1, 2])));
        assert_eq!(r.hp_bound.floor(), 3.0);
        let w = r.witness.len() as i64;
        assert_eq!(self_sum(&c, &r.witness), w * (w - 1));
    }

    #[test]
    fn frozen_clique_numbers() {
        // independent networkx max-clique oracle
        let table = [
            (5, 2), (13, 3), (17, 3), (29, 4), (37, 4), (41, 5), (53, 5),
            (61, 5), (73, 5), (89, 5), (97, 6), (101, 5), (109, 6),
        ];
        for (p, omega) in table {
            let c = FieldCtx::paley(p).unwrap();
            let r = clique_number(&c, DEFAULT_NODE_BUDGET).unwrap();
            assert_eq!(r.omega, omega, "p = {p}");
            assert!(r.witness.contains(0));
        }
    }

    #[test]
    fn budget_and_class() {
        let c = FieldCtx::paley(97).unwrap();
        assert!(matches!(clique_number(&c, 3), Err(Error::BudgetExceeded { .. })));
        let c = FieldCtx::new(7, false).unwrap();
        assert_eq!(clique_number(&c, 10).unwrap_err(), Error::WrongResidueClass(7));
    }
}
