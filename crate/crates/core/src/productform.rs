//! Constructors for the product-form families of tile digit sets.
//!
//! A [`Decomposition`] splits a complete residue system mod `b` as
//! `E_0 ⊕ … ⊕ E_k` and attaches exponents `0 = l_0 ≤ l_1 ≤ … ≤ l_k`; the
//! product form is `E_0 ⊕ b^{l_1} E_1 ⊕ … ⊕ b^{l_k} E_k`. The modulo
//! variant builds the same sum stage by stage, letting the caller replace
//! any digit by another in the same class modulo the stage modulus `n_i`.
//! Higher-order forms regroup the digits of a lower-order construction into
//! new parts and scale those.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::arith::{checked_pow, divisors, euler_phi, lcm};
use crate::cyclo::{cyc_divides, cyclotomic, expand_indices_pow, IndexSet};
use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::phitree::Blocking;

/// Parts `E_0, …, E_k` with exponents `l_1, …, l_k` for base `b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    base: u64,
    parts: Vec<Vec<u64>>,
    exponents: Vec<u32>,
}

impl Decomposition {
    /// `exponents` lists `l_1, …, l_k`, one fewer than `parts`.
    pub fn new(base: u64, parts: Vec<Vec<u64>>, exponents: Vec<u32>) -> Result<Self> {
        let parts: Vec<Vec<u64>> = parts
            .into_iter()
            .map(|p| {
                let set: BTreeSet<u64> = p.iter().copied().collect();
                if set.len() != p.len() {
                    return Err(Error::InvalidDecomposition("repeated element in a part".into()));
                }
                Ok(set.into_iter().collect())
            })
            .collect::<Result<_>>()?;
        if !validate_decomposition(&parts, base)? {
            return Err(Error::InvalidDecomposition(format!(
                "parts do not form a complete residue system modulo {base}"
            )));
        }
        if parts.len() > 1 && parts.iter().any(|p| p.len() < 2) {
            return Err(Error::InvalidDecomposition("parts need at least two elements".into()));
        }
        if exponents.len() + 1 != parts.len() {
            return Err(Error::InvalidDecomposition(format!(
                "{} parts need {} exponents, got {}",
                parts.len(),
                parts.len() - 1,
                exponents.len()
            )));
        }
        if exponents.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidDecomposition("exponents must be non-decreasing".into()));
        }
        Ok(Decomposition { base, parts, exponents })
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn parts(&self) -> &[Vec<u64>] {
        &self.parts
    }

    /// `l_1, …, l_k`.
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// `l_i`, with `l_0 = 0`.
    pub fn exponent(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            self.exponents[i - 1]
        }
    }

    pub fn stages(&self) -> usize {
        self.parts.len()
    }
}

/// Whether `∏ P_{E_i}(x) ≡ 1 + x + … + x^{b-1} (mod x^b - 1)`.
pub fn validate_decomposition(parts: &[Vec<u64>], b: u64) -> Result<bool> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    if parts.is_empty() {
        return Err(Error::InvalidDecomposition("no parts".into()));
    }
    let mut count: u64 = 1;
    for p in parts {
        if p.is_empty() {
            return Err(Error::InvalidDecomposition("empty part".into()));
        }
        if !p.contains(&0) {
            return Err(Error::InvalidDecomposition("every part must contain 0".into()));
        }
        count = count.saturating_mul(p.len() as u64);
    }
    if count != b {
        return Ok(false);
    }
    let n = b as usize;
    let mut acc = vec![0u64; n];
    acc[0] = 1;
    for p in parts {
        let mut next = vec![0u64; n];
        for (r, &c) in acc.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for &e in p {
                next[(r + (e % b) as usize) % n] += c;
            }
        }
        acc = next;
    }
    Ok(acc.iter().all(|&c| c == 1))
}

/// Sums `Σ scale_i · g_i` over all choices; fails if two choices collide.
fn scaled_direct_sum(parts: &[Vec<u64>], scales: &[u64]) -> Result<Vec<u64>> {
    let mut acc: Vec<u64> = vec![0];
    for (p, &s) in parts.iter().zip(scales) {
        let mut next = Vec::with_capacity(acc.len() * p.len());
        for &a in &acc {
            for &e in p {
                let v = e
                    .checked_mul(s)
                    .and_then(|t| t.checked_add(a))
                    .ok_or_else(|| Error::Overflow(format!("{a} + {s}·{e}")))?;
                next.push(v);
            }
        }
        acc = next;
    }
    let total = acc.len();
    acc.sort_unstable();
    acc.dedup();
    if acc.len() != total {
        return Err(Error::NotDirectSum(format!(
            "{} of {} sums are distinct",
            acc.len(),
            total
        )));
    }
    Ok(acc)
}

fn scales(dec: &Decomposition) -> Result<Vec<u64>> {
    (0..dec.stages())
        .map(|i| checked_pow(dec.base, dec.exponent(i)))
        .collect()
}

/// `E_0 ⊕ b^{l_1} E_1 ⊕ … ⊕ b^{l_k} E_k`.
pub fn build_product_form(dec: &Decomposition) -> Result<DigitSet> {
    let digits = scaled_direct_sum(&dec.parts, &scales(dec)?)?;
    DigitSet::new(digits)
}

/// Stage data of a modulo product form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModuloTrace {
    pub base: u64,
    /// `S_i`: divisors `d > 1` of `b` with `Φ_d | P_{E_i}`.
    pub psi: Vec<IndexSet>,
    /// Indices of `K^{(i)} = Ψ_0(x) Ψ_1(x^{b^{l_1}}) ⋯ Ψ_i(x^{b^{l_i}})`.
    pub kernels: Vec<IndexSet>,
    /// `n_i = lcm K^{(i)}`.
    pub moduli: Vec<u64>,
    /// Replacements `(from, to)` applied at each stage.
    pub representatives: Vec<Vec<(u64, u64)>>,
    /// `D^{(0)}, …, D^{(k)}`.
    pub stages: Vec<Vec<u64>>,
}

impl ModuloTrace {
    /// Indices of the final kernel `K^{(k)}`.
    pub fn kernel(&self) -> &IndexSet {
        self.kernels.last().expect("at least one stage")
    }
}

/// Computes `S_i`, `K^{(i)}` and `n_i` for every stage and checks
/// `b^{l_i} | n_i | b^{l_i + 1}`.
pub fn stage_kernels(dec: &Decomposition) -> Result<ModuloTrace> {
    let b = dec.base;
    let small: Vec<u64> = divisors(b).into_iter().filter(|&d| d > 1).collect();
    let mut psi = Vec::new();
    let mut kernels: Vec<IndexSet> = Vec::new();
    let mut moduli = Vec::new();
    let mut acc = IndexSet::new();
    for (i, part) in dec.parts.iter().enumerate() {
        let mask = IntPoly::mask(&DigitSet::new(part.iter().copied())?);
        let s_i: IndexSet = small.iter().copied().filter(|&d| cyc_divides(d, &mask)).collect();
        let l = dec.exponent(i);
        for &d in &s_i {
            acc.extend(expand_indices_pow(d, b, l)?);
        }
        let n = acc.iter().try_fold(1u64, |a, &s| lcm(a, s))?;
        let lo = checked_pow(b, l)?;
        let hi = checked_pow(b, l + 1)?;
        if n % lo != 0 || hi % n != 0 {
            return Err(Error::InvalidDecomposition(format!(
                "stage {i}: modulus {n} is not between {lo} and {hi} in divisibility"
            )));
        }
        psi.push(s_i);
        kernels.push(acc.clone());
        moduli.push(n);
    }
    Ok(ModuloTrace {
        base: b,
        psi,
        kernels,
        moduli,
        representatives: vec![Vec::new(); dec.stages()],
        stages: Vec::new(),
    })
}

/// How digits are moved within their class at each stage.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Representatives {
    /// Keep every digit.
    #[default]
    Identity,
    /// Per-stage `(from, to)` replacements; missing stages keep every digit.
    Explicit(Vec<Vec<(u64, u64)>>),
    /// Reduce every digit into `[0, n_i)`.
    Reduce,
}

fn apply_stage(
    stage: usize,
    candidate: Vec<u64>,
    modulus: u64,
    reps: &Representatives,
) -> Result<(Vec<u64>, Vec<(u64, u64)>)> {
    let mut applied = Vec::new();
    let mut out: Vec<u64> = match reps {
        Representatives::Identity => candidate.clone(),
        Representatives::Reduce => candidate
            .iter()
            .map(|&v| {
                let r = v % modulus;
                if r != v {
                    applied.push((v, r));
                }
                r
            })
            .collect(),
        Representatives::Explicit(all) => {
            let mut out = candidate.clone();
            let mut used = BTreeSet::new();
            for &(from, to) in all.get(stage).map(Vec::as_slice).unwrap_or(&[]) {
                if from % modulus != to % modulus {
                    return Err(Error::InvalidRepresentative { stage, from, to, modulus });
                }
                if !used.insert(from) {
                    return Err(Error::StageCollision {
                        stage,
                        msg: format!("{from} is replaced twice"),
                    });
                }
                let Some(slot) = out.iter_mut().find(|v| **v == from) else {
                    return Err(Error::StageCollision {
                        stage,
                        msg: format!("{from} is not a digit of this stage"),
                    });
                };
                *slot = to;
                applied.push((from, to));
            }
            out
        }
    };
    let total = out.len();
    out.sort_unstable();
    out.dedup();
    if out.len() != total {
        return Err(Error::StageCollision {
            stage,
            msg: format!("only {} of {} digits remain distinct", out.len(), total),
        });
    }
    Ok((out, applied))
}

/// Builds `D^{(k)}` through `D^{(i)} ≡ D^{(i-1)} ⊕ b^{l_i} E_i (mod n_i)`
/// and checks that the kernel `K^{(k)}` divides the final mask.
pub fn build_modulo_product_form(
    dec: &Decomposition,
    reps: &Representatives,
) -> Result<(DigitSet, ModuloTrace)> {
    let moduli = stage_kernels(dec)?.moduli;
    build_staged(dec, reps, &moduli)
}

fn build_staged(
    dec: &Decomposition,
    reps: &Representatives,
    moduli: &[u64],
) -> Result<(DigitSet, ModuloTrace)> {
    if let Representatives::Explicit(all) = reps {
        if all.len() > dec.stages() {
            return Err(Error::InvalidArgument(format!(
                "{} representative stages for {} parts",
                all.len(),
                dec.stages()
            )));
        }
    }
    let mut trace = stage_kernels(dec)?;
    let scales = scales(dec)?;
    let mut current: Vec<u64> = vec![0];
    for (i, part) in dec.parts.iter().enumerate() {
        let candidate = scaled_direct_sum(&[current.clone(), part.clone()], &[1, scales[i]])
            .map_err(|e| Error::StageCollision { stage: i, msg: e.to_string() })?;
        let (next, applied) = apply_stage(i, candidate, moduli[i], reps)?;
        trace.representatives[i] = applied;
        trace.stages.push(next.clone());
        current = next;
    }
    trace.moduli = moduli.to_vec();
    let digits = DigitSet::new(current)?;
    check_kernel(&trace, &digits)?;
    Ok((digits, trace))
}

/// Weak product form: the product form with a single modulus
/// `b^{l_k + 1}` applied at the last stage.
pub fn build_weak_product_form(
    dec: &Decomposition,
    last_stage: &Representatives,
) -> Result<(DigitSet, ModuloTrace)> {
    let k = dec.stages() - 1;
    let mut moduli = stage_kernels(dec)?.moduli;
    moduli[k] = checked_pow(dec.base, dec.exponent(k) + 1)?;
    let reps = match last_stage {
        Representatives::Identity => Representatives::Identity,
        Representatives::Reduce => {
            // Reduce only at the last stage.
            let (d, mut trace) = build_staged(dec, &Representatives::Identity, &moduli)?;
            let (out, applied) =
                apply_stage(k, d.as_slice().to_vec(), moduli[k], &Representatives::Reduce)?;
            let digits = DigitSet::new(out.clone())?;
            trace.representatives[k] = applied;
            trace.stages[k] = out;
            check_kernel(&trace, &digits)?;
            return Ok((digits, trace));
        }
        Representatives::Explicit(all) => {
            if all.len() != 1 {
                return Err(Error::InvalidArgument(
                    "weak product forms take replacements for the last stage only".into(),
                ));
            }
            let mut per_stage = vec![Vec::new(); k];
            per_stage.push(all[0].clone());
            Representatives::Explicit(per_stage)
        }
    };
    build_staged(dec, &reps, &moduli)
}

fn check_kernel(trace: &ModuloTrace, digits: &DigitSet) -> Result<()> {
    let mask = IntPoly::mask(digits);
    match trace.kernel().iter().find(|&&s| !cyc_divides(s, &mask)) {
        Some(s) => Err(Error::InvalidKernel(format!(
            "Φ_{s} of the stage kernel does not divide the result"
        ))),
        None => Ok(()),
    }
}

/// Regroups the digits of `inner` as `G_0 ⊕ … ⊕ G_k` and returns
/// `G_0 ⊕ b^{l_1} G_1 ⊕ … ⊕ b^{l_k} G_k`.
pub fn build_higher_order_product_form(
    b: u64,
    inner: &DigitSet,
    groups: &[Vec<u64>],
    exponents: &[u32],
) -> Result<DigitSet> {
    if groups.is_empty() {
        return Err(Error::InvalidRegrouping("no groups".into()));
    }
    if exponents.len() + 1 != groups.len() {
        return Err(Error::InvalidRegrouping(format!(
            "{} groups need {} exponents, got {}",
            groups.len(),
            groups.len() - 1,
            exponents.len()
        )));
    }
    if exponents.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidRegrouping("exponents must be non-decreasing".into()));
    }
    let ones = vec![1; groups.len()];
    let regrouped = scaled_direct_sum(groups, &ones)
        .map_err(|e| Error::InvalidRegrouping(e.to_string()))?;
    if regrouped.as_slice() != inner.as_slice() {
        return Err(Error::InvalidRegrouping(format!(
            "groups multiply out to {} digits that differ from the inner set",
            regrouped.len()
        )));
    }
    let mut scales = vec![1];
    for &l in exponents {
        scales.push(checked_pow(b, l)?);
    }
    DigitSet::new(scaled_direct_sum(groups, &scales)?)
}

/// Factors a kernel polynomial into distinct cyclotomic indices.
pub fn kernel_indices(kernel: &IntPoly) -> Result<IndexSet> {
    let Some(deg) = kernel.degree() else {
        return Err(Error::InvalidKernel("zero polynomial".into()));
    };
    let mut rest = kernel.clone();
    let mut out = IndexSet::new();
    let bound = 2 * (deg as u64).pow(2) + 2;
    let mut s = 2u64;
    while rest.degree().unwrap_or(0) > 0 && s <= bound {
        let left = rest.degree().unwrap_or(0) as u64;
        if euler_phi(s) <= left {
            if let Some(q) = rest.divide_exact(&cyclotomic(s))? {
                if cyc_divides(s, &q) && q.degree().unwrap_or(0) > 0 {
                    return Err(Error::InvalidKernel(format!("Φ_{s} divides more than once")));
                }
                out.insert(s);
                rest = q;
            }
        }
        s += 1;
    }
    if rest != IntPoly::one() {
        return Err(Error::InvalidKernel(format!("leftover factor {rest}")));
    }
    Ok(out)
}

/// `P = K·Q` as a digit set when every coefficient is 0 or 1 and
/// `P(1) = b`; `K` is given by its blocking indices.
pub fn lift_kernel(b: u64, kernel: &IndexSet, q: &IntPoly) -> Result<Option<DigitSet>> {
    let blocking = Blocking::new(b, kernel.clone())
        .map_err(|e| Error::InvalidKernel(e.to_string()))?;
    if q.eval_at_one() != 1.into() {
        return Err(Error::InvalidArgument("Q(1) must be 1".into()));
    }
    let p = blocking.kernel().multiply(q);
    if p.eval_at_one() != b.into() {
        return Ok(None);
    }
    match p.support_if_mask() {
        Some(digits) => Ok(Some(DigitSet::new(digits)?)),
        None => Ok(None),
    }
}

/// As [`lift_kernel`] with `K` given as a polynomial.
pub fn lift_kernel_poly(b: u64, kernel: &IntPoly, q: &IntPoly) -> Result<Option<DigitSet>> {
    lift_kernel(b, &kernel_indices(kernel)?, q)
}

/// The kind of a construction recipe.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Recipe {
    Product {
        base: u64,
        parts: Vec<Vec<u64>>,
        #[serde(default)]
        exponents: Vec<u32>,
    },
    Modulo {
        base: u64,
        parts: Vec<Vec<u64>>,
        #[serde(default)]
        exponents: Vec<u32>,
        #[serde(default)]
        representatives: Vec<Vec<(u64, u64)>>,
        #[serde(default)]
        reduce: bool,
    },
    Weak {
        base: u64,
        parts: Vec<Vec<u64>>,
        #[serde(default)]
        exponents: Vec<u32>,
        #[serde(default)]
        representatives: Vec<(u64, u64)>,
        #[serde(default)]
        reduce: bool,
    },
    HigherOrder {
        base: u64,
        inner: Box<Recipe>,
        groups: Vec<Vec<u64>>,
        #[serde(default)]
        exponents: Vec<u32>,
    },
}

/// Output of [`Recipe::build`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Construction {
    pub base: u64,
    pub digits: DigitSet,
    /// 1 for product, modulo and weak forms; one more than the inner
    /// construction for regroupings.
    pub order: u32,
    /// Stage data of the innermost modulo construction.
    pub trace: Option<ModuloTrace>,
}

impl Recipe {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn base(&self) -> u64 {
        match self {
            Recipe::Product { base, .. }
            | Recipe::Modulo { base, .. }
            | Recipe::Weak { base, .. }
            | Recipe::HigherOrder { base, .. } => *base,
        }
    }

    pub fn build(&self) -> Result<Construction> {
        match self {
            Recipe::Product { base, parts, exponents } => {
                let dec = Decomposition::new(*base, parts.clone(), exponents.clone())?;
                let digits = build_product_form(&dec)?;
                Ok(Construction { base: *base, digits, order: 1, trace: None })
            }
            Recipe::Modulo { base, parts, exponents, representatives, reduce } => {
                let dec = Decomposition::new(*base, parts.clone(), exponents.clone())?;
                let reps = pick_reps(*reduce, representatives.is_empty(), || {
                    Representatives::Explicit(representatives.clone())
                })?;
                let (digits, trace) = build_modulo_product_form(&dec, &reps)?;
                Ok(Construction { base: *base, digits, order: 1, trace: Some(trace) })
            }
            Recipe::Weak { base, parts, exponents, representatives, reduce } => {
                let dec = Decomposition::new(*base, parts.clone(), exponents.clone())?;
                let reps = pick_reps(*reduce, representatives.is_empty(), || {
                    Representatives::Explicit(vec![representatives.clone()])
                })?;
                let (digits, trace) = build_weak_product_form(&dec, &reps)?;
                Ok(Construction { base: *base, digits, order: 1, trace: Some(trace) })
            }
            Recipe::HigherOrder { base, inner, groups, exponents } => {
                if inner.base() != *base {
                    return Err(Error::InvalidRegrouping(format!(
                        "inner recipe has base {} instead of {base}",
                        inner.base()
                    )));
                }
                let inner = inner.build()?;
                let digits =
                    build_higher_order_product_form(*base, &inner.digits, groups, exponents)?;
                Ok(Construction { base: *base, digits, order: inner.order + 1, trace: inner.trace })
            }
        }
    }
}

fn pick_reps(
    reduce: bool,
    none_given: bool,
    explicit: impl FnOnce() -> Representatives,
) -> Result<Representatives> {
    match (reduce, none_given) {
        (true, true) => Ok(Representatives::Reduce),
        (true, false) => Err(Error::InvalidArgument(
            "give either representatives or reduce, not both".into(),
        )),
        (false, true) => Ok(Representatives::Identity),
        (false, false) => Ok(explicit()),
    }
}
