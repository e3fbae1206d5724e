use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::gcd_all;
use crate::error::{Error, Result};

/// A finite set of distinct non-negative integers, kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DigitSet {
    digits: Vec<u64>,
}

impl DigitSet {
    /// Rejects empty input and repeated digits.
    pub fn new(digits: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut digits: Vec<u64> = digits.into_iter().collect();
        if digits.is_empty() {
            return Err(Error::InvalidDigitSet("digit set is empty".into()));
        }
        digits.sort_unstable();
        if let Some(w) = digits.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidDigitSet(format!("duplicate digit {}", w[0])));
        }
        Ok(DigitSet { digits })
    }

    pub fn from_signed(digits: &[i64]) -> Result<Self> {
        let unsigned = digits
            .iter()
            .map(|&d| {
                u64::try_from(d).map_err(|_| Error::InvalidDigitSet(format!("negative digit {d}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(unsigned)
    }

    /// `{0, 1, ..., b-1}`
    pub fn standard(b: u64) -> Self {
        DigitSet { digits: (0..b).collect() }
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn max(&self) -> u64 {
        *self.digits.last().expect("digit sets are nonempty")
    }

    pub fn contains(&self, d: u64) -> bool {
        self.digits.binary_search(&d).is_ok()
    }

    pub fn gcd(&self) -> u64 {
        gcd_all(&self.digits)
    }
}

impl TryFrom<Vec<u64>> for DigitSet {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        DigitSet::new(v)
    }
}

impl From<DigitSet> for Vec<u64> {
    fn from(d: DigitSet) -> Vec<u64> {
        d.digits
    }
}

impl fmt::Display for DigitSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, d) in self.digits.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "}}")
    }
}
