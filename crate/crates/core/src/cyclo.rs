//! Cyclotomic polynomials and the index arithmetic of `Φ_d(x^b)`.
//!
//! Polynomials are generated from `x^n - 1 = ∏_{d | n} Φ_d(x)` for squarefree
//! `n`; a non-squarefree index reduces to its radical through
//! `Φ_n(x) = Φ_rad(n)(x^{n / rad(n)})`. Results are memoized in a process-wide
//! [`CycCache`] that can be persisted to disk.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::One;

use crate::arith::{divisors, euler_phi, factorize, radical};
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;

/// Sorted set of cyclotomic indices naming a product `∏ Φ_e`.
pub type IndexSet = BTreeSet<u64>;

/// A cyclotomic index `n >= 2` with its factorization and totient.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycIndex {
    value: u64,
    factors: Vec<(u64, u32)>,
    phi: u64,
}

impl CycIndex {
    pub fn new(value: u64) -> Result<Self> {
        if value < 2 {
            return Err(Error::InvalidArgument(format!(
                "cyclotomic index must be >= 2, got {value}"
            )));
        }
        let factors = factorize(value);
        let phi = factors.iter().fold(value, |acc, &(p, _)| acc / p * (p - 1));
        Ok(CycIndex { value, factors, phi })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    /// Degree of `Φ_value`.
    pub fn euler_phi(&self) -> u64 {
        self.phi
    }

    pub fn prime_power(&self) -> Option<(u64, u32)> {
        match self.factors.as_slice() {
            [(p, a)] => Some((*p, *a)),
            _ => None,
        }
    }
}

impl fmt::Display for CycIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Φ_{}", self.value)
    }
}

/// `Φ_n(1)`: `p` when `n = p^a`, otherwise 1 (0 for `n = 1`).
pub fn phi_at_one(n: u64) -> u64 {
    if n == 1 {
        return 0;
    }
    match factorize(n).as_slice() {
        [(p, _)] => *p,
        _ => 1,
    }
}

const CACHE_HEADER: &str = "# tile-digits cyclotomic cache v1";

/// Memo of generated cyclotomic polynomials, keyed by index.
///
/// Reads take a shared lock; inserts are serialized behind the write lock.
#[derive(Default)]
pub struct CycCache {
    entries: RwLock<HashMap<u64, Arc<IntPoly>>>,
}

impl CycCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by [`cyclotomic`].
    pub fn global() -> &'static CycCache {
        static GLOBAL: OnceLock<CycCache> = OnceLock::new();
        GLOBAL.get_or_init(CycCache::new)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: u64) -> Arc<IntPoly> {
        if let Some(hit) = self.entries.read().expect("cache lock poisoned").get(&n) {
            return Arc::clone(hit);
        }
        let poly = Arc::new(self.generate(n));
        let mut w = self.entries.write().expect("cache lock poisoned");
        Arc::clone(w.entry(n).or_insert(poly))
    }

    fn generate(&self, n: u64) -> IntPoly {
        assert!(n >= 1, "cyclotomic index must be positive");
        if n == 1 {
            return IntPoly::from_i64s(&[-1, 1]);
        }
        let rad = radical(n);
        if rad < n {
            return self
                .get(rad)
                .compose_power((n / rad) as usize)
                .expect("positive exponent");
        }
        let mut denom = IntPoly::one();
        for d in divisors(n) {
            if d < n {
                denom = denom.multiply(&self.get(d));
            }
        }
        IntPoly::x_pow_minus_one(n as usize)
            .divide_exact(&denom)
            .expect("cyclotomic products are monic")
            .expect("x^n - 1 is divisible by its proper cyclotomic factors")
    }

    /// Loads records from `path`, merging them into this cache.
    ///
    /// Every record is structurally checked (degree, monic, reciprocal,
    /// value at 1) and every 16th is regenerated and compared. Records that
    /// fail are dropped and will be regenerated on demand. Returns the
    /// number of records accepted.
    pub fn load(&self, path: &Path) -> Result<usize> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == CACHE_HEADER => {}
            Some(Ok(h)) => {
                return Err(Error::Parse(format!("unrecognized cache header {h:?}")));
            }
            Some(Err(e)) => return Err(e.into()),
            None => return Ok(0),
        }
        let mut accepted = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((n, body)) = line.split_once(' ') else {
                continue;
            };
            let Ok(n) = n.parse::<u64>() else { continue };
            let Ok(poly) = body.parse::<IntPoly>() else {
                continue;
            };
            if n < 2 || !plausible_cyclotomic(n, &poly) {
                continue;
            }
            if i % 16 == 0 && poly != self.generate(n) {
                continue;
            }
            accepted.push((n, Arc::new(poly)));
        }
        let count = accepted.len();
        let mut w = self.entries.write().expect("cache lock poisoned");
        for (n, p) in accepted {
            w.entry(n).or_insert(p);
        }
        Ok(count)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let r = self.entries.read().expect("cache lock poisoned");
        let mut keys: Vec<u64> = r.keys().copied().filter(|&n| n >= 2).collect();
        keys.sort_unstable();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{CACHE_HEADER}")?;
        for n in keys {
            writeln!(out, "{n} {}", r[&n])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn plausible_cyclotomic(n: u64, p: &IntPoly) -> bool {
    let deg = euler_phi(n) as usize;
    if p.degree() != Some(deg) || !p.coeff(0).is_one() || !p.coeff(deg).is_one() {
        return false;
    }
    if (0..=deg).any(|k| p.coeff(k) != p.coeff(deg - k)) {
        return false;
    }
    p.eval_at_one() == BigInt::from(phi_at_one(n))
}

/// `Φ_n` for `n >= 1`, served from the global cache.
pub fn cyclotomic(n: u64) -> Arc<IntPoly> {
    CycCache::global().get(n)
}

/// Indices `E` with `Φ_d(x^b) = ∏_{e ∈ E} Φ_e(x)`.
///
/// Applies `Φ_s(x^p) = Φ_{sp}` when `p | s` and `Φ_s(x^p) = Φ_s Φ_{sp}`
/// otherwise, once per prime factor of `b` counted with multiplicity.
pub fn expand_indices(d: u64, b: u64) -> Result<IndexSet> {
    if d < 1 || b < 1 {
        return Err(Error::InvalidArgument(format!("expand_indices({d}, {b})")));
    }
    let mut current: IndexSet = BTreeSet::from([d]);
    for (p, mult) in factorize(b) {
        for _ in 0..mult {
            let mut next = IndexSet::new();
            for &e in &current {
                let ep = e
                    .checked_mul(p)
                    .ok_or_else(|| Error::Overflow(format!("index {e} * {p}")))?;
                if e % p != 0 {
                    next.insert(e);
                }
                next.insert(ep);
            }
            current = next;
        }
    }
    Ok(current)
}

/// Indices of the factors of `Φ_d(x^{b^j})`.
pub fn expand_indices_pow(d: u64, b: u64, j: u32) -> Result<IndexSet> {
    let mut current: IndexSet = BTreeSet::from([d]);
    for _ in 0..j {
        let mut next = IndexSet::new();
        for &e in &current {
            next.extend(expand_indices(e, b)?);
        }
        current = next;
    }
    Ok(current)
}

/// Product `∏_{e ∈ indices} Φ_e`.
pub fn product_of(indices: &IndexSet) -> IntPoly {
    indices
        .iter()
        .fold(IntPoly::one(), |acc, &e| acc.multiply(&cyclotomic(e)))
}

/// Whether `Φ_s` divides `p`.
///
/// `p` is first reduced modulo `x^s - 1`, which `Φ_s` divides, so the long
/// division never runs on more than `s` coefficients.
pub fn cyc_divides(s: u64, p: &IntPoly) -> bool {
    let Some(deg) = p.degree() else {
        return true;
    };
    if euler_phi(s) as usize > deg {
        return false;
    }
    let folded = p.fold_mod_xn_minus_one(s as usize);
    if folded.is_zero() {
        return true;
    }
    folded
        .divide_exact(&cyclotomic(s))
        .expect("cyclotomic polynomials are monic")
        .is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;

    fn p(c: &[i64]) -> IntPoly {
        IntPoly::from_i64s(c)
    }

    /// Plain recursion on `x^n - 1 = ∏ Φ_d`, no radical shortcut.
    fn cyclotomic_by_recursion(n: u64, memo: &mut HashMap<u64, IntPoly>) -> IntPoly {
        if let Some(hit) = memo.get(&n) {
            return hit.clone();
        }
        let mut denom = IntPoly::one();
        for d in divisors(n) {
            if d < n {
                denom = denom.multiply(&cyclotomic_by_recursion(d, memo));
            }
        }
        let out = IntPoly::x_pow_minus_one(n as usize)
            .divide_exact(&denom)
            .unwrap()
            .unwrap();
        memo.insert(n, out.clone());
        out
    }

    #[test]
    fn small_cyclotomics() {
        assert_eq!(*cyclotomic(1), p(&[-1, 1]));
        assert_eq!(*cyclotomic(2), p(&[1, 1]));
        assert_eq!(*cyclotomic(6), p(&[1, -1, 1]));
        assert_eq!(*cyclotomic(12), p(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn cyclotomic_six_by_hand_division() {
        // x^6 - 1 divided by Φ_1 Φ_2 Φ_3 = (x - 1)(x + 1)(x^2 + x + 1)
        let denom = p(&[-1, 1]).multiply(&p(&[1, 1])).multiply(&p(&[1, 1, 1]));
        let q = IntPoly::x_pow_minus_one(6).divide_exact(&denom).unwrap().unwrap();
        assert_eq!(q, p(&[1, -1, 1]));
    }

    #[test]
    fn radical_route_matches_recursion() {
        let mut memo = HashMap::new();
        for n in 1..=400u64 {
            assert_eq!(*cyclotomic(n), cyclotomic_by_recursion(n, &mut memo), "n = {n}");
        }
    }

    #[test]
    fn product_over_divisors_is_xn_minus_one() {
        for n in 1..=300u64 {
            let prod = divisors(n)
                .into_iter()
                .fold(IntPoly::one(), |acc, d| acc.multiply(&cyclotomic(d)));
            assert_eq!(prod, IntPoly::x_pow_minus_one(n as usize), "n = {n}");
        }
    }

    #[test]
    fn degree_is_totient() {
        for n in 1..=2000u64 {
            assert_eq!(cyclotomic(n).degree(), Some(euler_phi(n) as usize), "n = {n}");
        }
    }

    #[test]
    fn prime_power_by_substitution() {
        for prime in [2u64, 3, 5, 7] {
            for alpha in 0..=4u32 {
                let lhs = cyclotomic(prime.pow(alpha + 1));
                let rhs = cyclotomic(prime)
                    .compose_power(prime.pow(alpha) as usize)
                    .unwrap();
                assert_eq!(*lhs, rhs);
            }
        }
    }

    #[test]
    fn phi_at_one_values() {
        assert_eq!(phi_at_one(16), 2);
        assert_eq!(phi_at_one(6), 1);
        assert_eq!(phi_at_one(3), 3);
        for n in 2..200u64 {
            assert_eq!(cyclotomic(n).eval_at_one(), BigInt::from(phi_at_one(n)));
        }
    }

    /// Factor `Φ_d(x^b)` by trial division against every `Φ_e` with `e | d b`.
    fn expand_by_trial_division(d: u64, b: u64) -> IndexSet {
        let mut rest = cyclotomic(d).compose_power(b as usize).unwrap();
        let mut found = IndexSet::new();
        for e in divisors(d * b) {
            if let Some(q) = rest.divide_exact(&cyclotomic(e)).unwrap() {
                found.insert(e);
                rest = q;
            }
        }
        assert_eq!(rest, IntPoly::one());
        found
    }

    #[test]
    fn expand_examples() {
        assert_eq!(expand_indices(3, 6).unwrap(), IndexSet::from([9, 18]));
        assert_eq!(expand_indices(2, 6).unwrap(), IndexSet::from([4, 12]));
        assert_eq!(expand_indices(4, 12).unwrap(), IndexSet::from([16, 48]));
        assert_eq!(expand_indices(6, 6).unwrap(), IndexSet::from([36]));
        assert_eq!(expand_by_trial_division(2, 6), IndexSet::from([4, 12]));
        assert_eq!(expand_by_trial_division(4, 12), IndexSet::from([16, 48]));
    }

    #[test]
    fn expand_matches_polynomial_product() {
        for d in 1..=50u64 {
            for b in 2..=30u64 {
                let idx = expand_indices(d, b).unwrap();
                assert!(idx.iter().all(|e| e % d == 0));
                let lhs = product_of(&idx);
                let rhs = cyclotomic(d).compose_power(b as usize).unwrap();
                assert_eq!(lhs, rhs, "d = {d}, b = {b}");
            }
        }
    }

    #[test]
    fn expand_growth_when_sharing_prime() {
        for d in 2..=200u64 {
            for b in 2..=30u64 {
                if gcd(d, b) > 1 {
                    for e in expand_indices(d, b).unwrap() {
                        assert!(e >= 2 * d);
                    }
                }
            }
        }
    }

    #[test]
    fn distinct_divisors_give_coprime_expansions() {
        for b in 2..=24u64 {
            let divs: Vec<u64> = divisors(b).into_iter().filter(|&d| d > 1).collect();
            for &d1 in &divs {
                for &d2 in &divs {
                    if d1 == d2 {
                        continue;
                    }
                    for u1 in 0..=3 {
                        for u2 in 0..=3 {
                            let a = expand_indices_pow(d1, b, u1).unwrap();
                            let c = expand_indices_pow(d2, b, u2).unwrap();
                            assert!(a.is_disjoint(&c), "b={b} d1={d1} d2={d2} u1={u1} u2={u2}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn divides_examples() {
        let mask = p(&[1, 1, 0, 0, 0, 0, 0, 0, 1, 1]);
        assert!(cyc_divides(2, &mask));
        assert!(cyc_divides(16, &mask));
        assert!(!cyc_divides(4, &mask));
        // long division oracle for the negative case
        assert!(mask.divide_exact(&cyclotomic(4)).unwrap().is_none());
    }

    #[test]
    fn divides_agrees_with_plain_division() {
        let masks = [
            p(&[1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 1]),
            p(&[1, 0, 1, 0, 1, 0, 1, 1, 1]),
            p(&[1, 1, 1, 1, 1, 1]),
        ];
        for m in &masks {
            for s in 2..40 {
                let direct = m.divide_exact(&cyclotomic(s)).unwrap().is_some();
                assert_eq!(cyc_divides(s, m), direct, "s = {s}, m = {m}");
            }
        }
    }

    #[test]
    fn cache_roundtrip_and_corruption() {
        let cache = CycCache::new();
        for n in 2..60 {
            cache.get(n);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cyc.cache");
        cache.save(&path).unwrap();
        let fresh = CycCache::new();
        assert_eq!(fresh.load(&path).unwrap(), 58);
        for n in 2..60 {
            assert_eq!(*fresh.get(n), *cyclotomic(n));
        }

        let text = std::fs::read_to_string(&path).unwrap();
        let corrupted = text.replace("\n6 0:1 1:-1 2:1\n", "\n6 0:1 1:1 2:1\n");
        assert_ne!(text, corrupted);
        std::fs::write(&path, corrupted).unwrap();
        let again = CycCache::new();
        assert_eq!(again.load(&path).unwrap(), 57);
        assert_eq!(*again.get(6), p(&[1, -1, 1]));
    }

    #[test]
    fn cache_rejects_unknown_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cyc.cache");
        std::fs::write(&path, "# something else\n2 0:1 1:1\n").unwrap();
        assert!(CycCache::new().load(&path).is_err());
    }

    #[test]
    fn cyc_index_fields() {
        let c = CycIndex::new(72).unwrap();
        assert_eq!(c.factors(), &[(2, 3), (3, 2)]);
        assert_eq!(c.euler_phi(), 24);
        assert!(CycIndex::new(1).is_err());
        assert_eq!(CycIndex::new(9).unwrap().prime_power(), Some((3, 2)));
    }
}
