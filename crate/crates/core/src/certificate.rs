//! Serializable verdicts for tile digit set analysis.
//!
//! Certificates carry the verdict, the first-hit blocking and its kernel
//! indices, the `(P_k)` order, and the spectrum checks. Loading a certificate
//! always re-verifies it: the blocking must be a blocking of the tree of the
//! stated base and its kernel must divide the mask of the stated digits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::par::Exec;
use crate::phitree::{pk_order_mask, search_blocking, validate_tile_input, Blocking, SearchStats};
use crate::spectra::{prime_power_spectrum, t1_holds, t2_holds, structure_from_spectrum, StructureViolation};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "tile")]
    Tile,
    #[serde(rename = "not-tile")]
    NotTile,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub base: u64,
    pub digits: Vec<u64>,
    pub verdict: Verdict,
    pub blocking: Option<Vec<u64>>,
    pub kernel: Option<Vec<u64>>,
    pub pk_order: Option<u32>,
    pub prime_power_spectrum: Vec<u64>,
    pub t1: bool,
    pub t2: bool,
    pub prime_power_exponents: BTreeMap<u64, Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure_violation: Option<StructureViolation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protasov_blocking: Option<Vec<String>>,
    #[serde(default)]
    pub stats: SearchStats,
    pub schema_version: u32,
}

impl Certificate {
    pub fn is_tile(&self) -> bool {
        self.verdict == Verdict::Tile
    }

    pub fn digit_set(&self) -> Result<DigitSet> {
        DigitSet::new(self.digits.iter().copied())
    }

    pub fn blocking(&self) -> Result<Option<Blocking>> {
        self.blocking
            .as_ref()
            .map(|b| Blocking::new(self.base, b.iter().copied().collect()))
            .transpose()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificates serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificates serialize")
    }

    /// Parses and re-verifies.
    pub fn from_json(text: &str) -> Result<Self> {
        let cert: Certificate =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cert.verify()?;
        Ok(cert)
    }

    /// Re-checks the claims. For a tile verdict this is one exact division
    /// of the mask by the kernel; a not-tile verdict is re-derived by
    /// running the search again.
    pub fn verify(&self) -> Result<()> {
        let reject = |m: String| Err(Error::CertificateRejected(m));
        if self.schema_version != SCHEMA_VERSION {
            return reject(format!("unsupported schema version {}", self.schema_version));
        }
        let digits = self.digit_set()?;
        if digits.as_slice() != self.digits.as_slice() {
            return reject("digits must be listed in ascending order".into());
        }
        validate_tile_input(self.base, &digits)?;
        let mask = IntPoly::mask(&digits);
        match self.verdict {
            Verdict::Tile => {
                let Some(blocking) = self.blocking()? else {
                    return reject("tile verdict without a blocking".into());
                };
                if self.kernel.as_ref() != self.blocking.as_ref() {
                    return reject("kernel indices differ from the blocking".into());
                }
                if mask.divide_exact(&blocking.kernel())?.is_none() {
                    return reject("kernel polynomial does not divide the mask".into());
                }
                if self.pk_order.is_none() {
                    return reject("tile verdict without a (P_k) order".into());
                }
            }
            Verdict::NotTile => {
                if self.blocking.is_some() || self.kernel.is_some() || self.pk_order.is_some() {
                    return reject("not-tile verdict carries tile evidence".into());
                }
                let again = search_blocking(self.base, &mask, Exec::default())?;
                if again.blocking.is_some() {
                    return reject("a dividing blocking exists".into());
                }
            }
        }
        Ok(())
    }
}

/// Runs the full analysis of `D` for base `b`.
pub fn decide_tile_digit_set(b: u64, d: &DigitSet) -> Result<Certificate> {
    decide_tile_digit_set_with(b, d, Exec::default())
}

pub fn decide_tile_digit_set_with(b: u64, d: &DigitSet, exec: Exec) -> Result<Certificate> {
    validate_tile_input(b, d)?;
    let mask = IntPoly::mask(d);
    let outcome = search_blocking(b, &mask, exec)?;
    let spectrum = prime_power_spectrum(&mask);
    let structure = structure_from_spectrum(b, &spectrum);
    let (verdict, blocking, pk_order) = match &outcome.blocking {
        Some(n) => {
            let order = pk_order_mask(b, &mask).order;
            debug_assert!(order.is_some(), "blocking found but (P_k) fails");
            let idx: Vec<u64> = n.indices().iter().copied().collect();
            (Verdict::Tile, Some(idx), order)
        }
        None => (Verdict::NotTile, None, None),
    };
    Ok(Certificate {
        base: b,
        digits: d.as_slice().to_vec(),
        verdict,
        kernel: blocking.clone(),
        blocking,
        pk_order,
        t1: t1_holds(d.len() as u64, &spectrum),
        t2: t2_holds(&mask, &spectrum),
        prime_power_spectrum: spectrum.into_iter().collect(),
        prime_power_exponents: structure.exponents,
        structure_violation: structure.violation,
        protasov_blocking: None,
        stats: outcome.stats,
        schema_version: SCHEMA_VERSION,
    })
}

/// Analyzes many digit sets for the same base.
pub fn analyze_batch(b: u64, sets: &[DigitSet], exec: Exec) -> Vec<Result<Certificate>> {
    exec.map(sets, |d| decide_tile_digit_set_with(b, d, Exec::Sequential))
}
