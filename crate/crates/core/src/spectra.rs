//! Spectra of mask polynomials and the Coven–Meyerowitz style conditions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::arith::{euler_phi, factorize};
use crate::cyclo::{cyc_divides, phi_at_one, IndexSet};
use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::par::Exec;

/// Scan budget used when proving completeness below the quadratic bound.
const COMPLETENESS_SCAN_LIMIT: u64 = 2_000_000;

fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Prime powers `q > 1` with `Φ_q | p`.
///
/// Candidates run over every prime power with `q <= 2 deg(p)`; since
/// `φ(p^a) >= p^a / 2` nothing larger can divide, so the result is complete.
pub fn prime_power_spectrum(p: &IntPoly) -> IndexSet {
    prime_power_spectrum_with(p, Exec::default())
}

pub fn prime_power_spectrum_with(p: &IntPoly, exec: Exec) -> IndexSet {
    let Some(deg) = p.degree() else {
        return IndexSet::new();
    };
    let bound = 2 * deg as u64;
    let mut candidates = Vec::new();
    for prime in primes_up_to(bound) {
        let mut q = prime;
        while q <= bound {
            candidates.push(q);
            q *= prime;
        }
    }
    exec.filter(&candidates, |&q| cyc_divides(q, p))
        .into_iter()
        .collect()
}

/// Spectrum restricted to `s <= cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralSpectrum {
    pub indices: IndexSet,
    pub cap: u64,
    /// True when no `s > cap` can have `Φ_s | p` because `φ(s) > deg p`.
    pub complete: bool,
}

pub fn general_spectrum(p: &IntPoly, cap: u64) -> Result<GeneralSpectrum> {
    general_spectrum_with(p, cap, Exec::default())
}

pub fn general_spectrum_with(p: &IntPoly, cap: u64, exec: Exec) -> Result<GeneralSpectrum> {
    if cap < 2 {
        return Err(Error::InvalidArgument("spectrum cap must be >= 2".into()));
    }
    let deg = p.degree().unwrap_or(0) as u64;
    let candidates: Vec<u64> = (2..=cap).collect();
    let indices = exec
        .filter(&candidates, |&s| cyc_divides(s, p))
        .into_iter()
        .collect();
    // phi(s) >= sqrt(s/2): beyond 2 deg^2 nothing divides.
    let quadratic = 2 * deg * deg;
    let complete = cap >= quadratic
        || (quadratic - cap <= COMPLETENESS_SCAN_LIMIT
            && (cap + 1..=quadratic).all(|s| euler_phi(s) > deg));
    Ok(GeneralSpectrum { indices, cap, complete })
}

/// Prime-power spectrum, its split by prime, and optionally the general
/// spectrum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub prime_power_spectrum: IndexSet,
    pub per_prime_exponents: BTreeMap<u64, Vec<u32>>,
    pub general_spectrum: Option<GeneralSpectrum>,
}

impl SpectrumReport {
    pub fn new(p: &IntPoly, general_cap: Option<u64>) -> Result<Self> {
        let prime_power_spectrum = prime_power_spectrum(p);
        let per_prime_exponents = split_by_prime(&prime_power_spectrum);
        let general_spectrum = general_cap.map(|cap| general_spectrum(p, cap)).transpose()?;
        Ok(SpectrumReport { prime_power_spectrum, per_prime_exponents, general_spectrum })
    }
}

fn split_by_prime(spectrum: &IndexSet) -> BTreeMap<u64, Vec<u32>> {
    let mut out: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
    for &q in spectrum {
        if let [(prime, a)] = factorize(q).as_slice() {
            out.entry(*prime).or_default().push(*a);
        }
    }
    for v in out.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    out
}

/// `#D = ∏_{s ∈ S_D} Φ_s(1)`.
pub fn check_t1(d: &DigitSet) -> bool {
    let s = prime_power_spectrum(&IntPoly::mask(d));
    t1_holds(d.len() as u64, &s)
}

pub(crate) fn t1_holds(size: u64, spectrum: &IndexSet) -> bool {
    let prod = spectrum
        .iter()
        .fold(1u64, |acc, &s| acc.saturating_mul(phi_at_one(s)));
    prod == size
}

/// Every product of spectrum elements with pairwise distinct prime bases
/// (at least two factors) indexes a cyclotomic factor of the mask.
pub fn check_t2(d: &DigitSet) -> bool {
    let mask = IntPoly::mask(d);
    let s = prime_power_spectrum(&mask);
    t2_holds(&mask, &s)
}

pub(crate) fn t2_holds(mask: &IntPoly, spectrum: &IndexSet) -> bool {
    let by_prime: Vec<Vec<u64>> = {
        let mut m: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
        for &q in spectrum {
            if let [(prime, _)] = factorize(q).as_slice() {
                m.entry(*prime).or_default().push(q);
            }
        }
        m.into_values().collect()
    };
    // Walk every choice of "skip or pick one power" per prime.
    fn walk(groups: &[Vec<u64>], product: Option<u64>, picked: usize, mask: &IntPoly) -> bool {
        let Some((first, rest)) = groups.split_first() else {
            return match product {
                _ if picked < 2 => true,
                None => false,
                Some(n) => cyc_divides(n, mask),
            };
        };
        if !walk(rest, product, picked, mask) {
            return false;
        }
        first.iter().all(|&q| {
            let next = product.and_then(|p| p.checked_mul(q));
            walk(rest, next, picked + 1, mask)
        })
    }
    walk(&by_prime, Some(1), 0, mask)
}

/// Clause of the prime-power spectrum structure theorem that failed first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum StructureViolation {
    /// (a) a spectrum element is a power of a prime not dividing `b`.
    ForeignPrime { prime: u64, power: u64 },
    /// (b) prime `p^α || b` contributes a number of powers other than `α`.
    WrongCount { prime: u64, expected: u32, found: u32 },
    /// (c) the exponents of `p` miss a residue class modulo `α`.
    IncompleteResidues { prime: u64, modulus: u32, exponents: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureReport {
    /// Prime -> sorted exponents `a` with `Φ_{p^a} | P_D`.
    pub exponents: BTreeMap<u64, Vec<u32>>,
    pub violation: Option<StructureViolation>,
}

impl StructureReport {
    pub fn passes(&self) -> bool {
        self.violation.is_none()
    }
}

/// Tests whether the prime-power spectrum of `D` has the shape forced on
/// every tile digit set of `b`: for each `p^α || b`, exactly `α` powers of
/// `p` whose exponents are a complete residue system mod `α`, and nothing
/// else.
pub fn check_prime_power_structure(b: u64, d: &DigitSet) -> Result<StructureReport> {
    if d.len() as u64 != b {
        return Err(Error::WrongCardinality { base: b, got: d.len() });
    }
    let s = prime_power_spectrum(&IntPoly::mask(d));
    Ok(structure_from_spectrum(b, &s))
}

pub(crate) fn structure_from_spectrum(b: u64, spectrum: &IndexSet) -> StructureReport {
    let b_factors = factorize(b);
    let mut exponents = split_by_prime(spectrum);
    for &(p, _) in &b_factors {
        exponents.entry(p).or_default();
    }
    let violation = (|| {
        for &q in spectrum {
            if let [(p, _)] = factorize(q).as_slice() {
                if b % p != 0 {
                    return Some(StructureViolation::ForeignPrime { prime: *p, power: q });
                }
            }
        }
        for &(p, alpha) in &b_factors {
            let exps = &exponents[&p];
            if exps.len() as u32 != alpha {
                return Some(StructureViolation::WrongCount {
                    prime: p,
                    expected: alpha,
                    found: exps.len() as u32,
                });
            }
        }
        for &(p, alpha) in &b_factors {
            let exps = &exponents[&p];
            let mut residues: Vec<u32> = exps.iter().map(|a| a % alpha).collect();
            residues.sort_unstable();
            residues.dedup();
            if residues.len() as u32 != alpha {
                return Some(StructureViolation::IncompleteResidues {
                    prime: p,
                    modulus: alpha,
                    exponents: exps.clone(),
                });
            }
        }
        None
    })();
    StructureReport { exponents, violation }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::cyclotomic;

    fn ds(d: &[u64]) -> DigitSet {
        DigitSet::new(d.iter().copied()).unwrap()
    }

    fn mask(d: &[u64]) -> IntPoly {
        IntPoly::mask(&ds(d))
    }

    #[test]
    fn prime_power_examples() {
        assert_eq!(prime_power_spectrum(&mask(&[0, 1, 8, 9])), IndexSet::from([2, 16]));
        assert_eq!(prime_power_spectrum(&mask(&[0, 1, 4, 5])), IndexSet::from([2, 8]));
        assert_eq!(prime_power_spectrum(&mask(&[0, 1, 2, 3, 4, 5])), IndexSet::from([2, 3]));
    }

    #[test]
    fn general_examples() {
        let g = general_spectrum(&mask(&[0, 1, 8, 9]), 100).unwrap();
        assert_eq!(g.indices, IndexSet::from([2, 16]));
        assert!(g.complete);
        // brute force over the full quadratic range agrees
        let full = general_spectrum(&mask(&[0, 1, 8, 9]), 162).unwrap();
        assert_eq!(full.indices, g.indices);

        let g = general_spectrum(&mask(&[0, 1, 2, 3, 4, 5]), 10).unwrap();
        assert_eq!(g.indices, IndexSet::from([2, 3, 6]));
        let g = general_spectrum(&IntPoly::from_i64s(&[1, 0, 1]), 10).unwrap();
        assert_eq!(g.indices, IndexSet::from([4]));
        assert!(general_spectrum(&IntPoly::one(), 1).is_err());
    }

    #[test]
    fn incomplete_when_cap_too_small() {
        let g = general_spectrum(&mask(&[0, 1, 8, 9]), 20).unwrap();
        assert!(!g.complete);
        assert_eq!(g.indices, IndexSet::from([2, 16]));
    }

    #[test]
    fn t1_examples() {
        assert!(check_t1(&ds(&[0, 1, 8, 9])));
        assert!(!check_t1(&ds(&[0, 1, 3])));
        assert!(check_t1(&ds(&[0, 1])));
        // brute force: 1 + x + x^3 has no cyclotomic factor at all
        let m = mask(&[0, 1, 3]);
        assert!((2..=18).all(|s| m.divide_exact(&cyclotomic(s)).unwrap().is_none()));
    }

    #[test]
    fn t2_examples() {
        assert!(check_t2(&ds(&[0, 1, 8, 9])));
        assert!(check_t2(&ds(&[0, 1, 2, 3, 4, 5])));
        assert!(check_t2(&ds(&[0, 1, 2, 3, 8, 9, 10, 11])));
        // {0,1,2} ⊕ {0,4}: P = Φ3(x) Φ2(x^4) = Φ3 Φ8 exactly, so Φ24 is absent
        let d = ds(&[0, 1, 2, 4, 5, 6]);
        let s = prime_power_spectrum(&IntPoly::mask(&d));
        assert_eq!(s, IndexSet::from([3, 8]));
        assert!(!check_t2(&d));
    }

    #[test]
    fn prime_power_structure_examples() {
        let r = check_prime_power_structure(4, &ds(&[0, 1, 8, 9])).unwrap();
        assert!(r.passes());
        assert_eq!(r.exponents[&2], vec![1, 4]);

        let r = check_prime_power_structure(4, &ds(&[0, 1, 4, 5])).unwrap();
        assert_eq!(
            r.violation,
            Some(StructureViolation::IncompleteResidues { prime: 2, modulus: 2, exponents: vec![1, 3] })
        );

        let r = check_prime_power_structure(6, &ds(&[0, 1, 2, 3, 4, 5])).unwrap();
        assert!(r.passes());
        assert_eq!(r.exponents[&2], vec![1]);
        assert_eq!(r.exponents[&3], vec![1]);

        assert!(matches!(
            check_prime_power_structure(4, &ds(&[0, 1, 2])),
            Err(Error::WrongCardinality { .. })
        ));
    }

    #[test]
    fn structure_clause_order() {
        // {0,1,2}: 1+x+x^2 = Φ3, b = 3 passes; b = 2 would be cardinality error
        let r = structure_from_spectrum(4, &IndexSet::from([2, 3]));
        assert!(matches!(r.violation, Some(StructureViolation::ForeignPrime { prime: 3, .. })));
        let r = structure_from_spectrum(4, &IndexSet::from([2]));
        assert!(matches!(r.violation, Some(StructureViolation::WrongCount { prime: 2, expected: 2, found: 1 })));
    }
}
