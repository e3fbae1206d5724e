//! The integer-labelled digit-string tree and a second, independent
//! decision procedure built on it.
//!
//! Level-`k` vertices are the integers `m ∈ [1, b^k)` with `b ∤ m`, written
//! as `k` base-`b` digits. The children of a level-`k` vertex `m` are
//! `ℓ·b^k + m` for `ℓ < b`. Each vertex maps to the cyclotomic index
//! `τ(m) = b^k / gcd(m, b^k)`, whose cyclotomic vanishes at `e^{2πi m/b^k}`.
//! Root evaluation is replaced by exact divisibility `Φ_τ | P_D`.
//!
//! Nothing here reuses the Φ-tree search; the two procedures agree only
//! because the underlying mathematics does.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::arith::{checked_pow, euler_phi, factorize, gcd};
use crate::cyclo::cyc_divides;
use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::par::Exec;

/// A vertex of the digit-string tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DigitString {
    level: u32,
    value: u64,
}

impl DigitString {
    pub fn new(value: u64, level: u32, b: u64) -> Result<Self> {
        if b < 2 || level == 0 {
            return Err(Error::InvalidArgument("need base >= 2 and level >= 1".into()));
        }
        let top = checked_pow(b, level)?;
        if value == 0 || value >= top || value % b == 0 {
            return Err(Error::InvalidArgument(format!(
                "{value} is not a level-{level} vertex for base {b}"
            )));
        }
        Ok(DigitString { level, value })
    }

    /// Builds from digits `j_k … j_1`, most significant first.
    pub fn from_digits(digits: &[u64], b: u64) -> Result<Self> {
        let mut value: u64 = 0;
        for &j in digits {
            if j >= b {
                return Err(Error::InvalidArgument(format!("digit {j} out of range for base {b}")));
            }
            value = value
                .checked_mul(b)
                .and_then(|v| v.checked_add(j))
                .ok_or_else(|| Error::Overflow("digit string value".into()))?;
        }
        DigitString::new(value, digits.len() as u32, b)
    }

    /// Parses the textual form produced by [`DigitString::display`].
    pub fn parse(text: &str, b: u64) -> Result<Self> {
        let digits: Vec<u64> = if b <= 36 {
            text.chars()
                .map(|c| {
                    c.to_digit(36)
                        .map(u64::from)
                        .ok_or_else(|| Error::Parse(format!("bad digit {c:?}")))
                })
                .collect::<Result<_>>()?
        } else {
            text.split('.')
                .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(e.to_string())))
                .collect::<Result<_>>()?
        };
        DigitString::from_digits(&digits, b)
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Digits `j_k … j_1`, most significant first.
    pub fn digits(&self, b: u64) -> Vec<u64> {
        let mut out = vec![0; self.level as usize];
        let mut v = self.value;
        for slot in out.iter_mut().rev() {
            *slot = v % b;
            v /= b;
        }
        out
    }

    pub fn children(&self, b: u64) -> Result<Vec<DigitString>> {
        let step = checked_pow(b, self.level)?;
        checked_pow(b, self.level + 1)?;
        Ok((0..b)
            .map(|l| DigitString { level: self.level + 1, value: l * step + self.value })
            .collect())
    }

    /// The parent, dropping the leading digit; `None` at level 1.
    pub fn parent(&self, b: u64) -> Option<DigitString> {
        if self.level == 1 {
            return None;
        }
        let step = b.pow(self.level - 1);
        Some(DigitString { level: self.level - 1, value: self.value % step })
    }

    pub fn display(&self, b: u64) -> impl fmt::Display + '_ {
        DigitsDisplay { s: *self, b }
    }
}

struct DigitsDisplay {
    s: DigitString,
    b: u64,
}

impl fmt::Display for DigitsDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.s.digits(self.b);
        if self.b <= 36 {
            for d in digits {
                let c = char::from_digit(d as u32, 36).expect("digit below 36");
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = digits.iter().map(u64::to_string).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// `τ(j) = b^k / gcd(m_j, b^k)`.
pub fn tau_index(j: &DigitString, b: u64) -> u64 {
    let top = b.pow(j.level);
    top / gcd(j.value, top)
}

/// All level-`k` vertices in increasing order of value.
pub fn level_vertices(b: u64, k: u32) -> Result<Vec<DigitString>> {
    let top = checked_pow(b, k)?;
    Ok((1..top)
        .filter(|m| m % b != 0)
        .map(|m| DigitString { level: k, value: m })
        .collect())
}

/// The level at which `d` occurs as a τ value: the least `k` with `d | b^k`.
pub fn tau_level(d: u64, b: u64) -> Option<u32> {
    if d < 2 {
        return None;
    }
    let bf = factorize(b);
    let mut k = 0u32;
    for (p, e) in factorize(d) {
        let eb = bf.iter().find(|(q, _)| *q == p)?.1;
        k = k.max(e.div_ceil(eb));
    }
    Some(k)
}

/// The vertices mapped to `d` by τ.
pub fn tau_fiber(d: u64, b: u64) -> Result<Vec<DigitString>> {
    let Some(k) = tau_level(d, b) else {
        return Ok(Vec::new());
    };
    let top = checked_pow(b, k)?;
    let a = top / d;
    Ok((1..d)
        .filter(|&u| gcd(u, d) == 1)
        .map(|u| a * u)
        .filter(|m| m % b != 0)
        .map(|m| DigitString { level: k, value: m })
        .collect())
}

/// Smallest depth at which every vertex has `φ(τ) > degree`, so no vertex
/// at that level or below can be blocked.
pub fn default_depth_bound(b: u64, degree: u64) -> u32 {
    let bf = factorize(b);
    let mut k = 1u32;
    loop {
        // A level-k index has, for some p | b, full p-adic valuation k·v_p(b).
        let min_phi = bf
            .iter()
            .map(|&(p, e)| {
                let n = e * k;
                p.checked_pow(n - 1)
                    .and_then(|q| q.checked_mul(p - 1))
                    .unwrap_or(u64::MAX)
            })
            .min()
            .unwrap_or(u64::MAX);
        if min_phi > degree {
            return k;
        }
        k += 1;
    }
}

/// A symmetric blocking of the digit-string tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexBlocking {
    pub base: u64,
    pub vertices: BTreeSet<DigitString>,
}

impl VertexBlocking {
    /// The τ image, a set of cyclotomic indices.
    pub fn tau_image(&self) -> BTreeSet<u64> {
        self.vertices.iter().map(|v| tau_index(v, self.base)).collect()
    }

    pub fn strings(&self) -> Vec<String> {
        self.vertices.iter().map(|v| v.display(self.base).to_string()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProtasovOutcome {
    Blocking(VertexBlocking),
    /// A vertex none of whose descendants can be blocked.
    Absent { witness: DigitString },
    /// Some branch reached the depth bound while blocking was still possible.
    Inconclusive { depth: u32 },
}

impl ProtasovOutcome {
    pub fn blocking(&self) -> Option<&VertexBlocking> {
        match self {
            ProtasovOutcome::Blocking(b) => Some(b),
            _ => None,
        }
    }
}

enum Branch {
    Ok,
    Dead(DigitString),
    Cut(u32),
}

struct Walker<'a> {
    b: u64,
    mask: &'a IntPoly,
    deg: u64,
    depth_bound: u32,
    memo: HashMap<u64, bool>,
    hits: Vec<DigitString>,
}

impl Walker<'_> {
    fn divides(&mut self, d: u64) -> bool {
        let mask = self.mask;
        *self.memo.entry(d).or_insert_with(|| cyc_divides(d, mask))
    }

    fn walk(&mut self, v: DigitString) -> Result<Branch> {
        let d = tau_index(&v, self.b);
        if self.divides(d) {
            self.hits.push(v);
            return Ok(Branch::Ok);
        }
        if euler_phi(d) > self.deg {
            return Ok(Branch::Dead(v));
        }
        if v.level >= self.depth_bound {
            return Ok(Branch::Cut(v.level));
        }
        let mut cut = None;
        for c in v.children(self.b)? {
            match self.walk(c)? {
                Branch::Ok => {}
                Branch::Dead(w) => return Ok(Branch::Dead(w)),
                Branch::Cut(k) => cut = Some(k),
            }
        }
        Ok(cut.map_or(Branch::Ok, Branch::Cut))
    }
}

/// Depth-first first-hit search for a blocking of the digit-string tree
/// whose vertices all satisfy `Φ_τ | P_D`.
pub fn protasov_decide(b: u64, d: &DigitSet, depth_bound: u32) -> Result<ProtasovOutcome> {
    protasov_decide_with(b, d, depth_bound, Exec::default())
}

/// As [`protasov_decide`], with the depth bound set so that an
/// inconclusive result cannot occur.
pub fn protasov_decide_default(b: u64, d: &DigitSet) -> Result<ProtasovOutcome> {
    let deg = d.max();
    protasov_decide(b, d, default_depth_bound(b, deg))
}

pub fn protasov_decide_with(
    b: u64,
    d: &DigitSet,
    depth_bound: u32,
    exec: Exec,
) -> Result<ProtasovOutcome> {
    if depth_bound < 1 {
        return Err(Error::InvalidArgument("depth bound must be >= 1".into()));
    }
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    if d.len() as u64 != b {
        return Err(Error::WrongCardinality { base: b, got: d.len() });
    }
    let mask = IntPoly::mask(d);
    let deg = d.max();
    let roots = level_vertices(b, 1)?;
    let branches = exec.map(&roots, |&v| {
        let mut w = Walker {
            b,
            mask: &mask,
            deg,
            depth_bound,
            memo: HashMap::new(),
            hits: Vec::new(),
        };
        w.walk(v).map(|r| (r, w.hits))
    });
    let mut hits = BTreeSet::new();
    let mut cut = None;
    for branch in branches {
        let (res, h) = branch?;
        match res {
            Branch::Ok => hits.extend(h),
            Branch::Dead(w) => return Ok(ProtasovOutcome::Absent { witness: w }),
            Branch::Cut(k) => cut = Some(k),
        }
    }
    if let Some(depth) = cut {
        return Ok(ProtasovOutcome::Inconclusive { depth });
    }
    let mut closed = hits.clone();
    let taus: BTreeSet<u64> = hits.iter().map(|v| tau_index(v, b)).collect();
    for t in taus {
        closed.extend(tau_fiber(t, b)?);
    }
    Ok(ProtasovOutcome::Blocking(VertexBlocking { base: b, vertices: closed }))
}

/// Outcome of the bounded root-condition check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KenyonReport {
    pub holds: bool,
    /// `(m, k)` pairs with `Φ_{b^k / gcd(m, b^k)} | P_D`, in order of `m`.
    pub witnesses: Vec<(u64, u32)>,
    pub failing_m: Option<u64>,
}

impl KenyonReport {
    pub fn witness(&self, m: u64) -> Option<u32> {
        self.witnesses.iter().find(|(mm, _)| *mm == m).map(|&(_, k)| k)
    }
}

/// Checks, for every `1 ≤ m ≤ m_max`, that some `k` has
/// `Φ_{b^k / gcd(m, b^k)} | P_D`. This is a necessary condition for `D` to
/// be a tile digit set.
///
/// The index sequence is a divisor chain in `k`; once `b^k > m` and its
/// totient exceeds `deg P_D` no later `k` can succeed.
pub fn kenyon_bounded_check(b: u64, d: &DigitSet, m_max: u64) -> Result<KenyonReport> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let mask = IntPoly::mask(d);
    let deg = d.max();
    let mut memo: HashMap<u64, bool> = HashMap::new();
    let mut witnesses = Vec::new();
    for m in 1..=m_max {
        let mut k = 1u32;
        let mut found = None;
        loop {
            let top = checked_pow(b, k)?;
            let idx = top / gcd(m, top);
            if idx > 1 {
                if *memo.entry(idx).or_insert_with(|| cyc_divides(idx, &mask)) {
                    found = Some(k);
                    break;
                }
                if top > m && euler_phi(idx) > deg {
                    break;
                }
            }
            k += 1;
        }
        match found {
            Some(k) => witnesses.push((m, k)),
            None => return Ok(KenyonReport { holds: false, witnesses, failing_m: Some(m) }),
        }
    }
    Ok(KenyonReport { holds: true, witnesses, failing_m: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cyclo::expand_indices;

    fn ds(d: &[u64]) -> DigitSet {
        DigitSet::new(d.iter().copied()).unwrap()
    }

    fn s(text: &str, b: u64) -> DigitString {
        DigitString::parse(text, b).unwrap()
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau_index(&s("3", 6), 6), 2);
        assert_eq!(tau_index(&s("1", 6), 6), 6);
        assert_eq!(tau_index(&s("5", 6), 6), 6);
        assert_eq!(tau_index(&s("2", 6), 6), 3);
        assert_eq!(tau_index(&s("4", 6), 6), 3);
        assert_eq!(s("12", 6).value(), 8);
        assert_eq!(tau_index(&s("12", 6), 6), 9);
        assert_eq!(tau_index(&s("02", 6), 6), 18);
    }

    #[test]
    fn string_forms() {
        let v = s("02", 4);
        assert_eq!(v.level(), 2);
        assert_eq!(v.value(), 2);
        assert_eq!(v.display(4).to_string(), "02");
        assert_eq!(v.parent(4), Some(s("2", 4)));
        assert!(DigitString::parse("10", 4).is_err());
        assert!(DigitString::parse("4", 4).is_err());
        let big = DigitString::from_digits(&[3, 40], 50).unwrap();
        assert_eq!(big.display(50).to_string(), "3.40");
        assert_eq!(DigitString::parse("3.40", 50).unwrap(), big);
        let kids: Vec<u64> = s("3", 4).children(4).unwrap().iter().map(|c| c.value()).collect();
        assert_eq!(kids, vec![3, 7, 11, 15]);
    }

    #[test]
    fn equal_tau_means_equal_level_and_parent_tau() {
        for b in 2..=12u64 {
            let mut seen: HashMap<u64, u32> = HashMap::new();
            for k in 1..=3 {
                for v in level_vertices(b, k).unwrap() {
                    let t = tau_index(&v, b);
                    assert_eq!(*seen.entry(t).or_insert(k), k, "b={b} τ={t}");
                }
            }
            for k in 2..=3 {
                let mut parent_tau: HashMap<u64, u64> = HashMap::new();
                for v in level_vertices(b, k).unwrap() {
                    let pt = tau_index(&v.parent(b).unwrap(), b);
                    let t = tau_index(&v, b);
                    assert_eq!(*parent_tau.entry(t).or_insert(pt), pt);
                }
            }
        }
    }

    #[test]
    fn fiber_sizes_are_totients() {
        for b in 2..=12u64 {
            let mut counts: HashMap<u64, u64> = HashMap::new();
            for k in 1..=3 {
                for v in level_vertices(b, k).unwrap() {
                    *counts.entry(tau_index(&v, b)).or_default() += 1;
                }
            }
            for (d, c) in counts {
                assert_eq!(c, euler_phi(d), "b={b} d={d}");
                let fiber = tau_fiber(d, b).unwrap();
                assert_eq!(fiber.len() as u64, c);
                assert!(fiber.iter().all(|v| tau_index(v, b) == d));
            }
        }
    }

    #[test]
    fn children_tau_match_expansion() {
        for b in 2..=12u64 {
            for k in 1..=2 {
                for v in level_vertices(b, k).unwrap() {
                    let got: BTreeSet<u64> =
                        v.children(b).unwrap().iter().map(|c| tau_index(c, b)).collect();
                    let want = expand_indices(tau_index(&v, b), b).unwrap();
                    assert_eq!(got, want, "b={b} m={}", v.value());
                }
            }
        }
    }

    #[test]
    fn decide_examples() {
        let out = protasov_decide(4, &ds(&[0, 1, 8, 9]), 8).unwrap();
        let blk = out.blocking().unwrap();
        let mut want = vec!["2".to_string()];
        for m in (1..16).step_by(2) {
            want.push(DigitString::new(m, 2, 4).unwrap().display(4).to_string());
        }
        assert_eq!(blk.strings(), want);
        assert_eq!(blk.tau_image(), BTreeSet::from([2, 16]));

        assert!(matches!(
            protasov_decide(4, &ds(&[0, 1, 4, 5]), 8).unwrap(),
            ProtasovOutcome::Absent { .. }
        ));

        let all = protasov_decide(6, &DigitSet::standard(6), 4).unwrap();
        assert_eq!(
            all.blocking().unwrap().vertices,
            level_vertices(6, 1).unwrap().into_iter().collect()
        );
    }

    #[test]
    fn shallow_bound_is_inconclusive() {
        let out = protasov_decide(4, &ds(&[0, 1, 8, 9]), 1).unwrap();
        assert_eq!(out, ProtasovOutcome::Inconclusive { depth: 1 });
        assert!(protasov_decide(4, &ds(&[0, 1, 8, 9]), 0).is_err());
    }

    #[test]
    fn default_bound_exhausts_branches() {
        assert_eq!(default_depth_bound(4, 9), 3);
        for (b, d) in [(4, vec![0, 1, 8, 9]), (4, vec![0, 1, 4, 5]), (6, vec![0, 1, 2, 9, 10, 11])] {
            let out = protasov_decide_default(b, &ds(&d)).unwrap();
            assert!(!matches!(out, ProtasovOutcome::Inconclusive { .. }));
        }
    }

    #[test]
    fn kenyon_examples() {
        let r = kenyon_bounded_check(4, &ds(&[0, 1, 8, 9]), 10).unwrap();
        assert!(r.holds);
        assert_eq!(r.witness(1), Some(2));
        assert_eq!(r.witness(2), Some(1));

        let r = kenyon_bounded_check(4, &ds(&[0, 1, 4, 5]), 10).unwrap();
        assert!(!r.holds);
        assert_eq!(r.failing_m, Some(1));

        for b in 2..=9u64 {
            let r = kenyon_bounded_check(b, &DigitSet::standard(b), 20).unwrap();
            assert!(r.holds);
            for (m, k) in r.witnesses {
                if m % b != 0 {
                    assert_eq!(k, 1);
                }
            }
        }
    }
}
