//! Dense integer polynomials with exact arbitrary-precision coefficients.
//!
//! Coefficients are stored by exponent with trailing zeros stripped, so the
//! zero polynomial is the empty vector and has no degree. Division is only
//! supported by divisors with leading coefficient `±1`; every divisor used in
//! the crate is a product of cyclotomic polynomials, which are monic.
//!
//! Text form is a space separated list of `exponent:coefficient` pairs in
//! ascending exponent order, for example `0:1 1:1 8:1 9:1`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::digits::DigitSet;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn zero() -> Self {
        IntPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        IntPoly { coeffs: vec![BigInt::one()] }
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntPoly { coeffs };
        p.normalize();
        p
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `c * x^exp`
    pub fn monomial(exp: usize, c: impl Into<BigInt>) -> Self {
        let mut coeffs = vec![BigInt::zero(); exp + 1];
        coeffs[exp] = c.into();
        Self::from_coeffs(coeffs)
    }

    /// `x^n - 1`
    pub fn x_pow_minus_one(n: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[0] = BigInt::from(-1);
        coeffs[n] += BigInt::one();
        Self::from_coeffs(coeffs)
    }

    /// Mask polynomial `sum_{d in D} x^d`.
    pub fn mask(digits: &DigitSet) -> Self {
        let max = digits.max() as usize;
        let mut coeffs = vec![BigInt::zero(); max + 1];
        for &d in digits.as_slice() {
            coeffs[d as usize] = BigInt::one();
        }
        Self::from_coeffs(coeffs)
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn coeff(&self, exp: usize) -> BigInt {
        self.coeffs.get(exp).cloned().unwrap_or_default()
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// Nonzero terms as `(exponent, coefficient)`, ascending.
    pub fn terms(&self) -> impl Iterator<Item = (usize, &BigInt)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero())
    }

    pub fn eval_at_one(&self) -> BigInt {
        self.coeffs.iter().sum()
    }

    /// True when every coefficient is 0 or 1.
    pub fn is_mask(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero() || c.is_one())
    }

    /// Exponents carrying coefficient 1, if this is a 0/1 polynomial.
    pub fn support_if_mask(&self) -> Option<Vec<u64>> {
        if !self.is_mask() {
            return None;
        }
        Some(self.terms().map(|(e, _)| e as u64).collect())
    }

    pub fn multiply(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        let rhs: Vec<(usize, &BigInt)> = other.terms().collect();
        for (i, a) in self.terms() {
            for &(j, b) in &rhs {
                out[i + j] += a * b;
            }
        }
        IntPoly::from_coeffs(out)
    }

    pub fn add(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let out = (0..n).map(|k| self.coeff(k) + other.coeff(k)).collect();
        IntPoly::from_coeffs(out)
    }

    pub fn sub(&self, other: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let out = (0..n).map(|k| self.coeff(k) - other.coeff(k)).collect();
        IntPoly::from_coeffs(out)
    }

    /// Substitution `x -> x^n`.
    pub fn compose_power(&self, n: usize) -> Result<IntPoly> {
        if n == 0 {
            return Err(Error::InvalidArgument("composePower needs n >= 1".into()));
        }
        if self.is_zero() {
            return Ok(IntPoly::zero());
        }
        let deg = self.coeffs.len() - 1;
        let new_len = deg
            .checked_mul(n)
            .and_then(|d| d.checked_add(1))
            .ok_or_else(|| Error::Overflow(format!("degree {deg} * {n}")))?;
        let mut out = vec![BigInt::zero(); new_len];
        for (k, c) in self.terms() {
            out[k * n] = c.clone();
        }
        Ok(IntPoly::from_coeffs(out))
    }

    /// Reduction modulo `x^n - 1`: exponents folded mod `n`.
    pub fn fold_mod_xn_minus_one(&self, n: usize) -> IntPoly {
        assert!(n > 0, "fold modulus must be positive");
        if self.coeffs.len() <= n {
            return self.clone();
        }
        let mut out = vec![BigInt::zero(); n];
        for (k, c) in self.terms() {
            out[k % n] += c;
        }
        IntPoly::from_coeffs(out)
    }

    /// Quotient of exact division, `None` when the remainder is nonzero.
    ///
    /// The divisor must have leading coefficient `±1`. A machine-word pass
    /// runs first; it hands over to big integers on overflow.
    pub fn divide_exact(&self, divisor: &IntPoly) -> Result<Option<IntPoly>> {
        let lead = divisor
            .leading()
            .ok_or_else(|| Error::InvalidArgument("division by the zero polynomial".into()))?;
        if !lead.abs().is_one() {
            return Err(Error::InvalidArgument(format!(
                "divisor must have leading coefficient ±1, got {lead}"
            )));
        }
        if self.is_zero() {
            return Ok(Some(IntPoly::zero()));
        }
        if self.coeffs.len() < divisor.coeffs.len() {
            return Ok(None);
        }
        if let Some(fast) = self.divide_exact_small(divisor) {
            return Ok(fast);
        }
        Ok(self.divide_exact_big(divisor))
    }

    /// `None` on overflow; `Some(result)` otherwise.
    fn divide_exact_small(&self, divisor: &IntPoly) -> Option<Option<IntPoly>> {
        let mut rem: Vec<i128> = self
            .coeffs
            .iter()
            .map(|c| c.to_i128())
            .collect::<Option<_>>()?;
        let lead = divisor.leading()?.to_i128()?;
        let dd = divisor.coeffs.len() - 1;
        let lower: Vec<(usize, i128)> = divisor
            .terms()
            .filter(|(e, _)| *e < dd)
            .map(|(e, c)| c.to_i128().map(|c| (e, c)))
            .collect::<Option<_>>()?;
        let mut quot = vec![0i128; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let q = c * lead;
            quot[i - dd] = q;
            rem[i] = 0;
            let shift = i - dd;
            for &(e, a) in &lower {
                let slot = &mut rem[shift + e];
                *slot = slot.checked_sub(q.checked_mul(a)?)?;
            }
        }
        if rem[..dd].iter().any(|&c| c != 0) {
            return Some(None);
        }
        Some(Some(IntPoly::from_coeffs(
            quot.into_iter().map(BigInt::from).collect(),
        )))
    }

    fn divide_exact_big(&self, divisor: &IntPoly) -> Option<IntPoly> {
        let mut rem = self.coeffs.clone();
        let lead = divisor.leading().cloned().unwrap_or_default();
        let dd = divisor.coeffs.len() - 1;
        let lower: Vec<(usize, BigInt)> = divisor
            .terms()
            .filter(|(e, _)| *e < dd)
            .map(|(e, c)| (e, c.clone()))
            .collect();
        let mut quot = vec![BigInt::zero(); rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            if rem[i].is_zero() {
                continue;
            }
            let q = &rem[i] * &lead;
            rem[i] = BigInt::zero();
            let shift = i - dd;
            for (e, a) in &lower {
                rem[shift + e] -= &q * a;
            }
            quot[i - dd] = q;
        }
        if rem[..dd].iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::from_coeffs(quot))
    }

    pub fn divides(&self, dividend: &IntPoly) -> Result<bool> {
        Ok(dividend.divide_exact(self)?.is_some())
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in self.terms() {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{e}:{c}")?;
            first = false;
        }
        Ok(())
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly[{self}]")
    }
}

impl FromStr for IntPoly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut coeffs: Vec<BigInt> = Vec::new();
        let mut last: Option<usize> = None;
        for tok in s.split_whitespace() {
            let (e, c) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected exponent:coefficient, got {tok:?}")))?;
            let e: usize = e
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in {tok:?}")))?;
            let c: BigInt = c
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient in {tok:?}")))?;
            if last.is_some_and(|l| e <= l) {
                return Err(Error::Parse("exponents must be strictly ascending".into()));
            }
            last = Some(e);
            if coeffs.len() <= e {
                coeffs.resize(e + 1, BigInt::zero());
            }
            coeffs[e] = c;
        }
        Ok(IntPoly::from_coeffs(coeffs))
    }
}

impl std::ops::Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        self.multiply(rhs)
    }
}
