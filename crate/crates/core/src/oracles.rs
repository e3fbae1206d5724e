//! Brute-force and geometric cross-checks.
//!
//! None of these decide tiling of the line by themselves. They exist to
//! catch errors in the blocking search: every tile digit set is an integer
//! tile, the interval approximants of a tile keep their measure, and sums
//! `D ⊕ bD ⊕ …` of a tile digit set stay direct.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::arith::{factorize, lcm};
use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::par::Exec;
use crate::phitree::{search_blocking, Blocking};
use crate::spectra::prime_power_spectrum;

/// `A ⊕ L` covers every residue modulo `period` exactly once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidueTiling {
    pub period: u64,
    pub complement: Vec<u64>,
}

impl ResidueTiling {
    pub fn verify(&self, a: &[u64]) -> bool {
        covers_once(a, &self.complement, self.period)
    }
}

fn covers_once(a: &[u64], l: &[u64], n: u64) -> bool {
    if n == 0 || (a.len() as u64).checked_mul(l.len() as u64) != Some(n) {
        return false;
    }
    let mut seen = vec![false; n as usize];
    for &x in a {
        for &t in l {
            let r = ((x % n + t % n) % n) as usize;
            if seen[r] {
                return false;
            }
            seen[r] = true;
        }
    }
    true
}

/// Largest period for which residue arrays are allocated.
const MAX_PERIOD: u64 = 10_000_000;
/// Backtracking nodes allowed per candidate period.
const NODE_BUDGET: u64 = 2_000_000;

/// Default scan limit: four times the spectrum period, at most `10^5`.
pub fn default_period_cap(a: &[u64]) -> u64 {
    let size = a.len() as u64;
    let base = spectrum_period(a).unwrap_or_else(|| {
        let max = a.iter().copied().max().unwrap_or(0);
        size.saturating_mul(max + 1)
    });
    base.saturating_mul(4).min(100_000).max(size)
}

/// `lcm` of the prime-power spectrum of `A`, when nonempty and not huge.
fn spectrum_period(a: &[u64]) -> Option<u64> {
    let set = DigitSet::new(a.iter().copied()).ok()?;
    let spectrum = prime_power_spectrum(&IntPoly::mask(&set));
    if spectrum.is_empty() {
        return None;
    }
    spectrum.iter().try_fold(1u64, |acc, &s| lcm(acc, s).ok())
}

/// Searches for a complement `L` with `A ⊕ L ≡ Z_n`.
///
/// The spectrum period `n = lcm S_A` is tried first with the explicit
/// complement `∏ Φ_s(x^{t(s)})` over prime powers `s | n` outside `S_A`,
/// `t(s)` the largest divisor of `n` prime to `s`, then by backtracking.
/// After that, periods that are multiples of `#A` up to `period_cap` are
/// scanned by backtracking.
pub fn integer_tile_check(a: &DigitSet, period_cap: u64) -> Result<Option<ResidueTiling>> {
    integer_tile_check_with(a, period_cap, Exec::Sequential)
}

pub fn integer_tile_check_with(
    a: &DigitSet,
    period_cap: u64,
    exec: Exec,
) -> Result<Option<ResidueTiling>> {
    if !a.contains(0) {
        return Err(Error::InvalidDigitSet("0 must be an element".into()));
    }
    let size = a.len() as u64;
    if period_cap < size {
        return Err(Error::InvalidArgument(format!(
            "period cap {period_cap} is below the set size {size}"
        )));
    }
    let elems = a.as_slice();
    if let Some(n) = spectrum_period(elems).filter(|&n| n <= MAX_PERIOD && n % size == 0) {
        if let Some(t) = explicit_complement(a, n) {
            return Ok(Some(t));
        }
        if let Some(l) = backtrack(elems, n) {
            return Ok(Some(ResidueTiling { period: n, complement: l }));
        }
    }
    let periods: Vec<u64> = (1..=period_cap / size)
        .map(|k| k * size)
        .filter(|&n| n <= MAX_PERIOD)
        .collect();
    let found = exec.map(&periods, |&n| backtrack(elems, n));
    Ok(periods
        .iter()
        .zip(found)
        .find_map(|(&n, l)| l.map(|l| ResidueTiling { period: n, complement: l })))
}

fn explicit_complement(a: &DigitSet, n: u64) -> Option<ResidueTiling> {
    let spectrum = prime_power_spectrum(&IntPoly::mask(a));
    let mut l: Vec<u64> = vec![0];
    for (p, e) in factorize(n) {
        let full = p.pow(e);
        let coprime = n / full;
        let mut s = 1;
        for _ in 0..e {
            s *= p;
            if spectrum.contains(&s) {
                continue;
            }
            // Φ_s(x^t) = Σ_{i<p} x^{i·t·s/p}
            let step = (coprime * (s / p)) % n;
            let mut next = Vec::with_capacity(l.len() * p as usize);
            for &x in &l {
                for i in 0..p {
                    next.push((x + i * step) % n);
                }
            }
            l = next;
        }
    }
    l.sort_unstable();
    let tiling = ResidueTiling { period: n, complement: l };
    tiling.verify(a.as_slice()).then_some(tiling)
}

/// Fills the smallest uncovered residue with some translate of `A`.
fn backtrack(a: &[u64], n: u64) -> Option<Vec<u64>> {
    let size = a.len() as u64;
    if n % size != 0 {
        return None;
    }
    let nn = n as usize;
    let reduced: Vec<usize> = a.iter().map(|&x| (x % n) as usize).collect();
    {
        let mut distinct = reduced.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() != reduced.len() {
            return None;
        }
    }
    let mut covered = vec![false; nn];
    let fits = |covered: &[bool], t: usize| reduced.iter().all(|&y| !covered[(t + y) % nn]);
    let mark = |covered: &mut [bool], t: usize, v: bool| {
        for &y in &reduced {
            covered[(t + y) % nn] = v;
        }
    };
    // Each frame: (residue being filled, next element of A to try, translate placed).
    let mut frames: Vec<(usize, usize, Option<usize>)> = vec![(0, 0, None)];
    let mut nodes = 0u64;
    while let Some(frame) = frames.last_mut() {
        nodes += 1;
        if nodes > NODE_BUDGET {
            return None;
        }
        let (r, next, placed) = *frame;
        if let Some(t) = placed {
            mark(&mut covered, t, false);
            frame.2 = None;
        }
        let Some(i) = (next..reduced.len()).find(|&i| fits(&covered, (r + nn - reduced[i]) % nn))
        else {
            frames.pop();
            continue;
        };
        let t = (r + nn - reduced[i]) % nn;
        mark(&mut covered, t, true);
        *frame = (r, i + 1, Some(t));
        match (r + 1..nn).find(|&j| !covered[j]) {
            Some(j) => frames.push((j, 0, None)),
            None => {
                let mut l: Vec<u64> = frames.iter().filter_map(|f| f.2).map(|t| t as u64).collect();
                l.sort_unstable();
                return Some(l);
            }
        }
    }
    None
}

/// A finite union of disjoint closed intervals with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalUnion {
    intervals: Vec<(BigRational, BigRational)>,
}

impl IntervalUnion {
    /// Sorts and merges overlapping or touching intervals.
    pub fn new(mut intervals: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if intervals.iter().any(|(l, r)| l > r) {
            return Err(Error::InvalidArgument("interval with left > right".into()));
        }
        intervals.sort();
        let mut out: Vec<(BigRational, BigRational)> = Vec::new();
        for (l, r) in intervals {
            match out.last_mut() {
                Some(last) if l <= last.1 => {
                    if r > last.1 {
                        last.1 = r;
                    }
                }
                _ => out.push((l, r)),
            }
        }
        Ok(IntervalUnion { intervals: out })
    }

    pub fn intervals(&self) -> &[(BigRational, BigRational)] {
        &self.intervals
    }

    pub fn measure(&self) -> BigRational {
        self.intervals
            .iter()
            .fold(BigRational::zero(), |acc, (l, r)| acc + (r - l))
    }

    /// Horizontal strip drawing, `width` pixels wide.
    pub fn to_svg(&self, width: u32) -> String {
        let height = 40;
        let lo = self.intervals.first().map(|i| i.0.clone()).unwrap_or_else(BigRational::zero);
        let hi = self.intervals.last().map(|i| i.1.clone()).unwrap_or_else(BigRational::zero);
        let span = (&hi - &lo).to_f64().unwrap_or(1.0).max(f64::MIN_POSITIVE);
        let x = |v: &BigRational| (v - &lo).to_f64().unwrap_or(0.0) / span * f64::from(width - 20) + 10.0;
        let mut svg = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\">\n"
        );
        for (l, r) in &self.intervals {
            let (a, b) = (x(l), x(r));
            svg.push_str(&format!(
                "  <rect x=\"{a:.3}\" y=\"10\" width=\"{:.3}\" height=\"20\" fill=\"black\"/>\n",
                (b - a).max(0.5)
            ));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

impl fmt::Display for IntervalUnion {
    /// One interval per line as `p/q r/s`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (l, r) in &self.intervals {
            writeln!(f, "{}/{} {}/{}", l.numer(), l.denom(), r.numer(), r.denom())?;
        }
        Ok(())
    }
}

impl FromStr for IntervalUnion {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let frac = |t: &str| -> Result<BigRational> {
            let (p, q) = t
                .split_once('/')
                .ok_or_else(|| Error::Parse(format!("expected p/q, got {t:?}")))?;
            let p: BigInt = p.parse().map_err(|_| Error::Parse(format!("bad numerator {p:?}")))?;
            let q: BigInt = q.parse().map_err(|_| Error::Parse(format!("bad denominator {q:?}")))?;
            if q.is_zero() {
                return Err(Error::Parse("zero denominator".into()));
            }
            Ok(BigRational::new(p, q))
        };
        let mut intervals = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut it = line.split_whitespace();
            let (Some(l), Some(r), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("expected two fractions: {line:?}")));
            };
            intervals.push((frac(l)?, frac(r)?));
        }
        IntervalUnion::new(intervals)
    }
}

/// The `depth`-th approximant `∪_{v ∈ D_depth} b^{-depth}(v + [0, max D/(b-1)])`
/// of `T(b, D)`, with `D_depth = {Σ_{i<depth} b^i d_i}`.
pub fn tile_intervals(b: u64, d: &DigitSet, depth: u32) -> Result<IntervalUnion> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let mut values: Vec<BigInt> = vec![BigInt::zero()];
    let mut scale = BigInt::from(1u32);
    for _ in 0..depth {
        let mut next: Vec<BigInt> = Vec::with_capacity(values.len() * d.len());
        for v in &values {
            for &x in d.as_slice() {
                next.push(v + &scale * x);
            }
        }
        next.sort();
        next.dedup();
        values = next;
        scale *= b;
    }
    // Integer endpoints over the common denominator (b - 1)·b^depth.
    let denom = &scale * (b - 1);
    let width = BigInt::from(d.max());
    let mut ends: Vec<(BigInt, BigInt)> = values
        .into_iter()
        .map(|v| {
            let left = v * (b - 1);
            let right = &left + &width;
            (left, right)
        })
        .collect();
    ends.sort();
    let mut merged: Vec<(BigInt, BigInt)> = Vec::new();
    for (l, r) in ends {
        match merged.last_mut() {
            Some(last) if l <= last.1 => {
                if r > last.1 {
                    last.1 = r;
                }
            }
            _ => merged.push((l, r)),
        }
    }
    let intervals = merged
        .into_iter()
        .map(|(l, r)| {
            (
                BigRational::new(l, denom.clone()),
                BigRational::new(r, denom.clone()),
            )
        })
        .collect();
    Ok(IntervalUnion { intervals })
}

/// Smallest `k ≤ depth` for which `D ⊕ bD ⊕ … ⊕ b^{k-1}D` has repeated sums.
///
/// A heuristic early warning only: it never overrides the blocking verdict.
pub fn direct_sum_diagnostic(b: u64, d: &DigitSet, depth: u32) -> Result<Option<u32>> {
    if depth < 1 {
        return Err(Error::InvalidArgument("depth must be >= 1".into()));
    }
    let mut sums: Vec<u128> = vec![0];
    let mut scale: u128 = 1;
    for k in 1..=depth {
        let mut next = Vec::with_capacity(sums.len() * d.len());
        for &s in &sums {
            for &x in d.as_slice() {
                let v = scale
                    .checked_mul(u128::from(x))
                    .and_then(|t| t.checked_add(s))
                    .ok_or_else(|| Error::Overflow("sum set element".into()))?;
                next.push(v);
            }
        }
        let total = next.len();
        next.sort_unstable();
        next.dedup();
        if next.len() != total {
            return Ok(Some(k));
        }
        sums = next;
        scale = scale
            .checked_mul(u128::from(b))
            .ok_or_else(|| Error::Overflow("b^k".into()))?;
    }
    Ok(None)
}

/// Outcome of [`abs_cont_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbsContReport {
    pub absolutely_continuous: bool,
    pub blocking: Option<Blocking>,
    /// `#D / b`, present when `b | #D`.
    pub ratio: Option<u64>,
}

/// Absolute continuity of the self-similar measure for `(b, D)` with any
/// number of digits: holds iff a blocking of cyclotomics divides `P_D`.
/// Acceptance forces `b | #D`.
pub fn abs_cont_check(b: u64, d: &DigitSet) -> Result<AbsContReport> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let mask = IntPoly::mask(d);
    if mask.degree() == Some(0) {
        return Ok(AbsContReport { absolutely_continuous: false, blocking: None, ratio: None });
    }
    let outcome = search_blocking(b, &mask, Exec::default())?;
    let m = d.len() as u64;
    let ratio = (m % b == 0).then_some(m / b);
    Ok(AbsContReport {
        absolutely_continuous: outcome.blocking.is_some(),
        blocking: outcome.blocking,
        ratio,
    })
}
