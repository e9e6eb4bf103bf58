//! Finite expansions `Σ d_e ϖ^e` with rational digits, the elements of
//! `k((ϖ))` the engine needs as cell centers and map coefficients. The residue
//! field has characteristic zero, so digits add and multiply without carries.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PadicError {
    #[error("digit at exponent {0} is zero")]
    ZeroDigit(i64),
    #[error("exponents must be strictly increasing ({0} after {1})")]
    Unordered(i64, i64),
}

/// Sparse expansion; digits are nonzero and exponents strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PadicConstant {
    terms: Vec<(i64, BigRational)>,
}

impl PadicConstant {
    pub fn zero() -> Self {
        PadicConstant { terms: Vec::new() }
    }

    pub fn new(terms: Vec<(i64, BigRational)>) -> Result<Self, PadicError> {
        for w in terms.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(PadicError::Unordered(w[1].0, w[0].0));
            }
        }
        if let Some((e, _)) = terms.iter().find(|(_, d)| d.is_zero()) {
            return Err(PadicError::ZeroDigit(*e));
        }
        Ok(PadicConstant { terms })
    }

    /// Collects terms, summing repeated exponents and dropping zeros.
    pub fn from_terms(terms: impl IntoIterator<Item = (i64, BigRational)>) -> Self {
        let mut acc: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (e, d) in terms {
            *acc.entry(e).or_insert_with(BigRational::zero) += d;
        }
        PadicConstant { terms: acc.into_iter().filter(|(_, d)| !d.is_zero()).collect() }
    }

    /// `d ϖ^e`.
    pub fn monomial(e: i64, d: BigRational) -> Self {
        Self::from_terms([(e, d)])
    }

    pub fn uniformizer_power(e: i64) -> Self {
        Self::monomial(e, BigRational::one())
    }

    pub fn from_int(v: i64) -> Self {
        Self::monomial(0, BigRational::from_integer(BigInt::from(v)))
    }

    pub fn terms(&self) -> &[(i64, BigRational)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Valuation; `None` for zero.
    pub fn ord(&self) -> Option<i64> {
        self.terms.first().map(|(e, _)| *e)
    }

    pub fn digit(&self, e: i64) -> BigRational {
        match self.terms.binary_search_by_key(&e, |(x, _)| *x) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => BigRational::zero(),
        }
    }

    /// The first `n` digits from the valuation on.
    pub fn ac(&self, n: usize) -> Option<Vec<BigRational>> {
        let o = self.ord()?;
        Some((0..n as i64).map(|k| self.digit(o + k)).collect())
    }

    pub fn neg(&self) -> Self {
        PadicConstant { terms: self.terms.iter().map(|(e, d)| (*e, -d)).collect() }
    }

    pub fn add(&self, other: &PadicConstant) -> Self {
        Self::from_terms(self.terms.iter().chain(&other.terms).cloned())
    }

    pub fn sub(&self, other: &PadicConstant) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PadicConstant) -> Self {
        Self::from_terms(self.terms.iter().flat_map(|(a, x)| other.terms.iter().map(move |(b, y)| (a + b, x * y))))
    }

    /// Terms with exponent below `e`.
    pub fn truncated_below(&self, e: i64) -> Self {
        PadicConstant { terms: self.terms.iter().filter(|(x, _)| *x < e).cloned().collect() }
    }

    /// `self / other` with all terms of exponent below `precision`; exact
    /// whenever the true quotient is a finite expansion supported there.
    pub fn div_truncated(&self, other: &PadicConstant, precision: i64) -> Option<Self> {
        let o = other.ord()?;
        let Some(s) = self.ord() else {
            return Some(Self::zero());
        };
        let len = (precision - s + o).max(1) as usize;
        let inv = series_inverse(&other.ac(len)?, len);
        let inv = Self::from_terms(inv.into_iter().enumerate().map(|(k, d)| (k as i64 - o, d)));
        Some(self.mul(&inv).truncated_below(precision))
    }
}

/// Multiplies two digit strings as truncated power series.
pub fn series_mul(a: &[BigRational], b: &[BigRational], len: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Inverse of a power series with nonzero constant term, to `len` terms.
pub fn series_inverse(a: &[BigRational], len: usize) -> Vec<BigRational> {
    assert!(!a.is_empty() && !a[0].is_zero(), "series is not a unit");
    let mut inv = vec![BigRational::zero(); len];
    if len == 0 {
        return inv;
    }
    inv[0] = a[0].recip();
    for k in 1..len {
        let mut s = BigRational::zero();
        for j in 1..=k {
            if let Some(aj) = a.get(j) {
                s += aj * &inv[k - j];
            }
        }
        inv[k] = -s * &inv[0];
    }
    inv
}

impl fmt::Display for PadicConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (e, d)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "({e} {d})")?;
        }
        f.write_str(")")
    }
}
