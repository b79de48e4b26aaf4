//! The Paley equiangular tight frame Φ_p and its exact integer Seidel form.
//!
//! Columns `0..p` are indexed by the field elements in increasing order and
//! column `p` is the extra column (1, 0, …, 0). Rows after the first are
//! indexed by the quadratic residues in increasing order. Any other labeling
//! permutes columns, which leaves every reported quantity unchanged.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::format::sig12;

/// Largest p accepted for dense full-matrix operations.
pub const MAX_DENSE_P: u64 = 1 << 12;

fn check_dense(ctx: &FieldCtx) -> Result<()> {
    if !ctx.is_1mod4() {
        return Err(Error::WrongResidueClass(ctx.p()));
    }
    if ctx.p() > MAX_DENSE_P {
        return Err(Error::FieldTooLarge {
            p: ctx.p(),
            limit: MAX_DENSE_P,
        });
    }
    Ok(())
}

/// Dense complex (p+1)/2 × (p+1) matrix, column-major.
#[derive(Debug, Clone)]
pub struct EtfMatrix {
    p: u64,
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl EtfMatrix {
    pub fn build(ctx: &FieldCtx) -> Result<Self> {
        check_dense(ctx)?;
        let p = ctx.p();
        let rows = (p as usize).div_ceil(2);
        let cols = p as usize + 1;
        let top = 1.0 / (p as f64).sqrt();
        let scale = (2.0 / p as f64).sqrt();
        let residues = ctx.residues();
        let mut data = vec![Complex64::new(0.0, 0.0); rows * cols];
        for j in 0..p as usize {
            let col = &mut data[j * rows..(j + 1) * rows];
            col[0] = Complex64::new(top, 0.0);
            for (k, &b) in residues.iter().enumerate() {
                col[k + 1] = ctx.psi_unchecked(b * j as u64 % p) * scale;
            }
        }
        data[p as usize * rows] = Complex64::new(1.0, 0.0);
        Ok(EtfMatrix {
            p,
            rows,
            cols,
            data,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    /// G = Φᵀ·conj(Φ), i.e. G_ij = ⟨φ_i, φ_j⟩.
    pub fn gram(&self) -> Gram {
        let n = self.cols;
        let entries: Vec<Complex64> = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let ci = self.column(i);
                (0..n).map(move |j| {
                    ci.iter()
                        .zip(self.column(j))
                        .map(|(a, b)| a * b.conj())
                        .sum::<Complex64>()
                })
            })
            .collect();
        let max_imag = entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
        Gram {
            dim: n,
            data: entries.iter().map(|z| z.re).collect(),
            max_imag,
        }
    }

    /// CSV, one line per row; entries as `re±imi`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|c| {
                    let z = self.get(r, c);
                    let sign = if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
                        '-'
                    } else {
                        '+'
                    };
                    format!("{}{}{}i", sig12(z.re), sign, sig12(z.im.abs()))
                })
                .collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

/// Real part of the Gram matrix plus the largest discarded imaginary part.
#[derive(Debug, Clone)]
pub struct Gram {
    dim: usize,
    data: Vec<f64>,
    max_imag: f64,
}

impl Gram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn max_imag(&self) -> f64 {
        self.max_imag
    }

    /// 1ᵀ G 1 over the given columns.
    pub fn quadratic_form(&self, cols: &[usize]) -> f64 {
        cols.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j)).sum::<f64>())
            .sum()
    }
}

/// Integer matrix S with Gram(Φ_p) = I + S/√p.
#[derive(Debug, Clone)]
pub struct SeidelMatrix {
    p: u64,
    dim: usize,
    data: Vec<i8>,
}

impl SeidelMatrix {
    pub fn build(ctx: &FieldCtx) -> Result<Self> {
        check_dense(ctx)?;
        let p = ctx.size();
        let dim = p + 1;
        let mut data = vec![0i8; dim * dim];
        for i in 0..p {
            for j in 0..p {
                data[i * dim + j] = ctx.chi_diff(i, j);
            }
            data[i * dim + p] = 1;
            data[p * dim + i] = 1;
        }
        Ok(SeidelMatrix {
            p: ctx.p(),
            dim,
            data,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn sqrt_p(&self) -> f64 {
        (self.p as f64).sqrt()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the extra, non-field column.
    pub fn last_column(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.dim + j]
    }

    /// S_U as integer rows.
    pub fn principal(&self, cols: &[usize]) -> Vec<Vec<i64>> {
        cols.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j) as i64).collect())
            .collect()
    }

    /// S_U written row-major into `buf`.
    pub(crate) fn principal_into(&self, cols: &[usize], buf: &mut Vec<f64>) {
        buf.clear();
        for &i in cols {
            for &j in cols {
                buf.push(self.get(i, j) as f64);
            }
        }
    }

    /// Σ_{u,v ∈ cols} S_uv.
    pub fn entry_sum(&self, cols: &[usize]) -> i64 {
        cols.iter()
            .map(|&i| cols.iter().map(|&j| self.get(i, j) as i64).sum::<i64>())
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// max |√p·(G − I) − S| entrywise.
    pub fn gram_deviation(&self, gram: &Gram) -> f64 {
        let root = self.sqrt_p();
        (0..self.dim)
            .into_par_iter()
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        let id = if i == j { 1.0 } else { 0.0 };
                        (root * (gram.get(i, j) - id) - self.get(i, j) as f64).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.dim {
            let line: Vec<String> = (0..self.dim).map(|j| self.get(i, j).to_string()).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtfVerifyReport {
    pub p: u64,
    pub rows: usize,
    pub cols: usize,
    pub tol: f64,
    pub max_norm_deviation: f64,
    pub max_equiangularity_deviation: f64,
    pub max_tightness_deviation: f64,
    pub max_gram_imaginary: f64,
    pub coherence: f64,
    pub pass: bool,
}

/// Unit norms, equiangularity at 1/√p and tightness Φ·Φ* = 2I.
pub fn verify_etf(etf: &EtfMatrix, tol: f64) -> EtfVerifyReport {
    let gram = etf.gram();
    let n = etf.cols();
    let mu = 1.0 / (etf.p() as f64).sqrt();
    let norm_dev = (0..n)
        .map(|i| (gram.get(i, i) - 1.0).abs())
        .fold(0.0, f64::max);
    let (equi_dev, coherence) = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n).filter(|&j| j != i).fold((0.0f64, 0.0f64), |(d, c), j| {
                let g = gram.get(i, j).abs();
                (d.max((g - mu).abs()), c.max(g))
            })
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let m = etf.rows();
    let tight_dev = (0..m)
        .into_par_iter()
        .map(|r| {
            (0..m)
                .map(|s| {
                    let z: Complex64 = (0..n).map(|c| etf.get(r, c) * etf.get(s, c).conj()).sum();
                    let target = if r == s { 2.0 } else { 0.0 };
                    (z - Complex64::new(target, 0.0)).norm()
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    EtfVerifyReport {
        p: etf.p(),
        rows: m,
        cols: n,
        tol,
        max_norm_deviation: norm_dev,
        max_equiangularity_deviation: equi_dev,
        max_tightness_deviation: tight_dev,
        max_gram_imaginary: gram.max_imag(),
        coherence,
        pass: norm_dev <= tol && equi_dev <= tol && tight_dev <= tol && gram.max_imag() <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u64) -> FieldCtx {
        FieldCtx::paley(p).unwrap()
    }

    #[test]
    fn shape_and_border() {
        let etf = EtfMatrix::build(&ctx(13)).unwrap();
        assert_eq!((etf.rows(), etf.cols()), (7, 14));
        let last = etf.column(13);
        assert_eq!(last[0], Complex64::new(1.0, 0.0));
        assert!(last[1..].iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        for j in 0..13 {
            assert!((etf.get(0, j).re - 1.0 / 13f64.sqrt()).abs() < 1e-15);
        }
        // ‖φ_3‖² = 1/13 + 6·(2/13)
        let n2: f64 = etf.column(2).iter().map(|z| z.norm_sqr()).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_3_mod_4() {
        let c = FieldCtx::new(7, false).unwrap();
        assert_eq!(EtfMatrix::build(&c).unwrap_err(), Error::WrongResidueClass(7));
        assert_eq!(SeidelMatrix::build(&c).unwrap_err(), Error::WrongResidueClass(7));
    }

    #[test]
    fn gram_entries() {
        let c = ctx(13);
        let g = EtfMatrix::build(&c).unwrap().gram();
        let mu = 1.0 / 13f64.sqrt();
        for i in 0..14 {
            assert!((g.get(i, i) - 1.0).abs() < 1e-12);
        }
        // χ(0 − 1) = χ(12) = +1
        assert!((g.get(0, 1) - mu).abs() < 1e-12);
        for j in 0..13 {
            assert!((g.get(j, 13) - mu).abs() < 1e-12);
        }
        assert!(g.max_imag() < 1e-9);
    }

    #[test]
    fn seidel_properties() {
        for p in [13, 17, 29] {
            let c = ctx(p);
            let s = SeidelMatrix::build(&c).unwrap();
            assert!(s.is_symmetric());
            for i in 0..s.dim() {
                assert_eq!(s.get(i, i), 0);
                for j in 0..s.dim() {
                    if i != j {
                        assert_eq!(s.get(i, j).abs(), 1);
                    }
                }
            }
            for i in 0..p as usize {
                let row: i64 = (0..p as usize).map(|j| s.get(i, j) as i64).sum();
                assert_eq!(row, 0);
            }
            let g = EtfMatrix::build(&c).unwrap().gram();
            assert!(s.gram_deviation(&g) < 1e-6);
        }
    }

    #[test]
    fn tight_frame_at_13_and_17() {
        for p in [13, 17] {
            let r = verify_etf(&EtfMatrix::build(&ctx(p)).unwrap(), 1e-9);
            assert!(r.pass, "{r:?}");
            assert!((r.coherence - 1.0 / (p as f64).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_dumps() {
        let c = ctx(5);
        let csv = SeidelMatrix::build(&c).unwrap().to_csv();
        let first: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
        assert_eq!(first, vec!["0", "1", "-1", "-1", "1", "1"]);
        let etf = EtfMatrix::build(&c).unwrap().to_csv();
        assert_eq!(etf.lines().count(), 3);
        assert!(etf.lines().next().unwrap().ends_with(",1+0i"));
    }
}
