//! Arithmetic over the prime field 𝔽_p: the quadratic character χ, the
//! canonical additive character ψ and direct Gauss-sum evaluation.
//!
//! Residues are always the canonical representatives `0..p`. Every
//! subtraction goes through [`FieldCtx::sub`] so that χ(s − t) is looked up
//! at a single normalization point.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::subset::Subset;

/// Largest prime accepted for a table-backed context.
pub const MAX_FIELD_P: u64 = 1 << 20;

/// An odd prime together with its quadratic character table.
///
/// Immutable after construction, so it can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct FieldCtx {
    p: u64,
    requires_1mod4: bool,
    chi: Vec<i8>,
    qr: Subset,
    n_bits: u32,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut b = (base % modulus) as u128;
    let mut acc: u128 = 1 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// ⌈log₂ p⌉.
pub fn ceil_log2(p: u64) -> u32 {
    if p <= 1 {
        0
    } else {
        64 - (p - 1).leading_zeros()
    }
}

impl FieldCtx {
    /// Builds the context, computing χ by Euler's criterion.
    pub fn new(p: u64, require_1mod4: bool) -> Result<Self> {
        if p > MAX_FIELD_P {
            return Err(Error::FieldTooLarge {
                p,
                limit: MAX_FIELD_P,
            });
        }
        if require_1mod4 && (p % 4 != 1 || !is_prime(p)) {
            return Err(Error::WrongResidueClass(p));
        }
        if p < 3 || p % 2 == 0 {
            return Err(Error::EvenOrTooSmall(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let half = (p - 1) / 2;
        let mut chi = vec![0i8; p as usize];
        let mut qr = Subset::empty(p as usize);
        for x in 1..p {
            let e = mod_pow(x, half, p);
            if e == 1 {
                chi[x as usize] = 1;
                qr.insert(x as usize);
            } else {
                debug_assert_eq!(e, p - 1);
                chi[x as usize] = -1;
            }
        }
        Ok(FieldCtx {
            p,
            requires_1mod4: require_1mod4,
            chi,
            qr,
            n_bits: ceil_log2(p),
        })
    }

    /// Shorthand for `new(p, true)`, the setting of every Paley object.
    pub fn paley(p: u64) -> Result<Self> {
        Self::new(p, true)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// Number of field elements as an index bound.
    pub fn size(&self) -> usize {
        self.p as usize
    }

    pub fn requires_1mod4(&self) -> bool {
        self.requires_1mod4
    }

    pub fn is_1mod4(&self) -> bool {
        self.p % 4 == 1
    }

    /// n = ⌈log₂ p⌉, the bit length of a field element.
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn chi_table(&self) -> &[i8] {
        &self.chi
    }

    /// The quadratic residues as a bitset over 𝔽_p.
    pub fn qr_set(&self) -> &Subset {
        &self.qr
    }

    /// Quadratic residues in increasing order.
    pub fn residues(&self) -> Vec<u64> {
        self.qr.iter().map(|x| x as u64).collect()
    }

    fn check(&self, x: u64) -> Result<()> {
        if x >= self.p {
            Err(Error::OutOfRange { x, p: self.p })
        } else {
            Ok(())
        }
    }

    pub fn chi(&self, x: u64) -> Result<i8> {
        self.check(x)?;
        Ok(self.chi[x as usize])
    }

    /// (a − b) mod p for canonical residues.
    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        let p = self.p as usize;
        if a >= b {
            a - b
        } else {
            a + p - b
        }
    }

    /// χ(a − b) without range checks; both arguments must be `< p`.
    #[inline]
    pub fn chi_diff(&self, a: usize, b: usize) -> i8 {
        self.chi[self.sub(a, b)]
    }

    /// ψ(x) = exp(2πi·x/p).
    pub fn psi(&self, x: u64) -> Result<Complex64> {
        self.check(x)?;
        Ok(self.psi_unchecked(x))
    }

    pub(crate) fn psi_unchecked(&self, x: u64) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * (x % self.p) as f64 / self.p as f64)
    }

    /// Σ_{x ∈ 𝔽_p} ψ(a·x²) by direct summation.
    pub fn gauss_sum(&self, a: u64) -> Result<Complex64> {
        self.check(a)?;
        if !self.is_1mod4() {
            return Err(Error::WrongResidueClass(self.p));
        }
        if a == 0 {
            return Err(Error::ZeroArgument);
        }
        let p = self.p;
        Ok((0..p)
            .map(|x| self.psi_unchecked(((a as u128 * x as u128 * x as u128) % p as u128) as u64))
            .sum())
    }

    /// max_a |Σψ(a x²) − χ(a)√p| over all a ∈ 𝔽_p*.
    pub fn gauss_sum_max_error(&self) -> Result<f64> {
        let root = (self.p as f64).sqrt();
        let mut worst = 0.0f64;
        for a in 1..self.p {
            let g = self.gauss_sum(a)?;
            let expected = Complex64::new(self.chi[a as usize] as f64 * root, 0.0);
            worst = worst.max((g - expected).norm());
        }
        Ok(worst)
    }
}
