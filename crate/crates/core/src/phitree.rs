//! The tree of cyclotomic polynomials attached to a base `b`, blockings of
//! that tree, and the decision procedure for tile digit sets.
//!
//! Roots of the tree are the indices `d | b, d > 1`; the children of `Φ_e`
//! are the cyclotomic factors of `Φ_e(x^b)`. Every index occurs at most once
//! in the tree and each child is at least twice its parent, which bounds
//! every search below. A blocking is a finite node set met exactly once by
//! every infinite root path; its kernel polynomial is `∏_{e ∈ N} Φ_e`.
//! `D` (with `#D = b`) is a tile digit set exactly when some blocking has all
//! of its cyclotomics dividing the mask `P_D`.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::arith::{divisors, euler_phi, gcd};
use crate::cyclo::{cyc_divides, expand_indices, product_of, IndexSet};
use crate::digits::DigitSet;
use crate::error::{Error, Result};
use crate::intpoly::IntPoly;
use crate::par::Exec;

/// First level of the tree: divisors of `b` exceeding 1.
pub fn root_indices(b: u64) -> IndexSet {
    divisors(b).into_iter().filter(|&d| d > 1).collect()
}

/// Cyclotomic factors of `Φ_e(x^b)`.
pub fn children(e: u64, b: u64) -> Result<IndexSet> {
    if e < 2 || gcd(e, b) == 1 {
        return Err(Error::NotInTree { index: e, base: b });
    }
    expand_indices(e, b)
}

/// A node of the tree with its depth and parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhiNode {
    pub index: u64,
    pub depth: u32,
    pub parent: Option<u64>,
}

/// Walks the tree from the roots, returning every node whose index does not
/// exceed `max_index`.
pub fn nodes_up_to(b: u64, max_index: u64) -> Vec<PhiNode> {
    let mut out = Vec::new();
    let mut queue: VecDeque<PhiNode> = root_indices(b)
        .into_iter()
        .filter(|&d| d <= max_index)
        .map(|index| PhiNode { index, depth: 0, parent: None })
        .collect();
    while let Some(node) = queue.pop_front() {
        out.push(node);
        for c in children(node.index, b).expect("tree nodes share a prime with b") {
            if c <= max_index {
                queue.push_back(PhiNode { index: c, depth: node.depth + 1, parent: Some(node.index) });
            }
        }
    }
    out
}

/// A verified blocking of the tree of `base`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Blocking {
    base: u64,
    indices: IndexSet,
}

impl Blocking {
    /// Checks that every root path meets `indices` exactly once.
    pub fn new(base: u64, indices: IndexSet) -> Result<Self> {
        verify_blocking(base, &indices)?;
        Ok(Blocking { base, indices })
    }

    /// The blocking formed by the roots.
    pub fn roots(base: u64) -> Self {
        Blocking { base, indices: root_indices(base) }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn indices(&self) -> &IndexSet {
        &self.indices
    }

    /// Degree of the kernel polynomial, `∑ φ(e)`.
    pub fn kernel_degree(&self) -> u64 {
        self.indices.iter().map(|&e| euler_phi(e)).sum()
    }

    /// `K(x) = ∏_{e ∈ N} Φ_e(x)`.
    pub fn kernel(&self) -> IntPoly {
        product_of(&self.indices)
    }

    /// Replaces `d` by its children.
    pub fn refine(&self, d: u64) -> Result<Blocking> {
        if !self.indices.contains(&d) {
            return Err(Error::InvalidArgument(format!("{d} is not in the blocking")));
        }
        let mut indices = self.indices.clone();
        indices.remove(&d);
        indices.extend(children(d, self.base)?);
        Ok(Blocking { base: self.base, indices })
    }
}

fn verify_blocking(base: u64, indices: &IndexSet) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let Some(&max) = indices.iter().next_back() else {
        return Err(Error::InvalidBlocking("empty set".into()));
    };
    // Paths stop at the first member; any path climbing above `max` misses.
    let mut hits = 0usize;
    let mut stack: Vec<u64> = root_indices(base).into_iter().collect();
    while let Some(e) = stack.pop() {
        if indices.contains(&e) {
            hits += 1;
            continue;
        }
        if e > max {
            return Err(Error::InvalidBlocking(format!(
                "the path through {e} avoids every member"
            )));
        }
        stack.extend(children(e, base)?);
    }
    if hits != indices.len() {
        return Err(Error::InvalidBlocking(
            "some members are off the tree or below another member".into(),
        ));
    }
    Ok(())
}

/// `K(x) = ∏_{e ∈ N} Φ_e(x)` for a verified blocking.
pub fn kernel_from_blocking(n: &Blocking) -> IntPoly {
    n.kernel()
}

/// `(N \ {d}) ∪ children(d)`; the kernel changes by `Φ_d(x^b) / Φ_d(x)`.
pub fn refine_blocking(n: &Blocking, d: u64) -> Result<Blocking> {
    n.refine(d)
}

/// Counters gathered by the blocking search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub max_depth: u32,
}

impl SearchStats {
    fn merge(&mut self, other: SearchStats) {
        self.nodes_visited += other.nodes_visited;
        self.max_depth = self.max_depth.max(other.max_depth);
    }
}

/// Result of the first-hit blocking search over a mask polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub blocking: Option<Blocking>,
    /// A node whose subtree contains no dividing cyclotomic, when the
    /// search fails.
    pub dead_end: Option<u64>,
    pub stats: SearchStats,
}

/// Depth-first first-hit search for a blocking whose members all divide
/// `mask`.
///
/// A node that divides `mask` joins the blocking and its subtree is skipped.
/// A node with `φ(e) > deg mask` fails its branch: every descendant index is
/// a multiple of `e`, so its totient is at least `φ(e)`. Root branches are
/// independent and are searched concurrently under [`Exec::Parallel`].
pub fn search_blocking(b: u64, mask: &IntPoly, exec: Exec) -> Result<SearchOutcome> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let deg = mask
        .degree()
        .ok_or_else(|| Error::InvalidArgument("mask polynomial is zero".into()))? as u64;
    let roots: Vec<u64> = root_indices(b).into_iter().collect();
    let branches = exec.map(&roots, |&r| {
        let mut hits = Vec::new();
        let mut stats = SearchStats::default();
        let res = explore(r, 0, b, mask, deg, &mut hits, &mut stats);
        (res, hits, stats)
    });
    let mut stats = SearchStats::default();
    let mut all_hits = IndexSet::new();
    let mut dead_end = None;
    for (res, hits, s) in branches {
        stats.merge(s);
        match res {
            Ok(()) => all_hits.extend(hits),
            Err(e) => {
                dead_end.get_or_insert(e);
            }
        }
    }
    if let Some(dead) = dead_end {
        return Ok(SearchOutcome { blocking: None, dead_end: Some(dead), stats });
    }
    let blocking = Blocking::new(b, all_hits)?;
    Ok(SearchOutcome { blocking: Some(blocking), dead_end: None, stats })
}

fn explore(
    e: u64,
    depth: u32,
    b: u64,
    mask: &IntPoly,
    deg: u64,
    hits: &mut Vec<u64>,
    stats: &mut SearchStats,
) -> std::result::Result<(), u64> {
    stats.nodes_visited += 1;
    stats.max_depth = stats.max_depth.max(depth);
    if cyc_divides(e, mask) {
        hits.push(e);
        return Ok(());
    }
    if euler_phi(e) > deg {
        return Err(e);
    }
    let kids = children(e, b).map_err(|_| e)?;
    for c in kids {
        explore(c, depth + 1, b, mask, deg, hits, stats)?;
    }
    Ok(())
}

pub(crate) fn validate_tile_input(b: u64, d: &DigitSet) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    if d.len() as u64 != b {
        return Err(Error::WrongCardinality { base: b, got: d.len() });
    }
    if !d.contains(0) {
        return Err(Error::InvalidDigitSet("0 must be a digit".into()));
    }
    let g = d.gcd();
    if g != 1 {
        return Err(Error::NormalizedInputRequired(g));
    }
    Ok(())
}

/// Every blocking whose members all divide `mask`, at most `limit` of them,
/// sorted. A dividing node may either close its path or be replaced by
/// dividing blockings of its subtree.
pub fn dividing_blockings(b: u64, mask: &IntPoly, limit: usize) -> Result<Vec<Blocking>> {
    let deg = mask
        .degree()
        .ok_or_else(|| Error::InvalidArgument("mask polynomial is zero".into()))? as u64;
    let mut memo: HashMap<u64, Vec<IndexSet>> = HashMap::new();
    let mut combined: Vec<IndexSet> = vec![IndexSet::new()];
    for r in root_indices(b) {
        let opts = subtree_options(r, b, mask, deg, limit, &mut memo)?;
        combined = cross(&combined, &opts, limit);
        if combined.is_empty() {
            break;
        }
    }
    let mut out = combined
        .into_iter()
        .map(|s| Blocking::new(b, s))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn cross(left: &[IndexSet], right: &[IndexSet], limit: usize) -> Vec<IndexSet> {
    let mut out = Vec::new();
    'outer: for l in left {
        for r in right {
            if out.len() >= limit {
                break 'outer;
            }
            let mut s = l.clone();
            s.extend(r.iter().copied());
            out.push(s);
        }
    }
    out
}

fn subtree_options(
    e: u64,
    b: u64,
    mask: &IntPoly,
    deg: u64,
    limit: usize,
    memo: &mut HashMap<u64, Vec<IndexSet>>,
) -> Result<Vec<IndexSet>> {
    if let Some(hit) = memo.get(&e) {
        return Ok(hit.clone());
    }
    let mut opts = Vec::new();
    if cyc_divides(e, mask) {
        opts.push(IndexSet::from([e]));
    }
    if euler_phi(e) <= deg {
        let mut deeper: Vec<IndexSet> = vec![IndexSet::new()];
        for c in children(e, b)? {
            let sub = subtree_options(c, b, mask, deg, limit, memo)?;
            deeper = cross(&deeper, &sub, limit);
            if deeper.is_empty() {
                break;
            }
        }
        for s in deeper {
            if opts.len() >= limit {
                break;
            }
            opts.push(s);
        }
    }
    memo.insert(e, opts.clone());
    Ok(opts)
}

/// All blockings with kernel degree at most `max_degree`, generated by
/// repeated refinement starting from the root blocking. Sorted by kernel
/// degree, then by index set.
pub fn enumerate_kernels(b: u64, max_degree: u64) -> Result<Vec<Blocking>> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    if max_degree < b - 1 {
        return Err(Error::InvalidArgument(format!(
            "max degree {max_degree} is below the smallest kernel degree {}",
            b - 1
        )));
    }
    let start = Blocking::roots(b);
    let mut seen: BTreeSet<IndexSet> = BTreeSet::from([start.indices.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut out = Vec::new();
    while let Some(n) = queue.pop_front() {
        for &d in &n.indices {
            let refined = n.refine(d)?;
            if refined.kernel_degree() <= max_degree && seen.insert(refined.indices.clone()) {
                queue.push_back(refined);
            }
        }
        out.push(n);
    }
    for n in &out {
        verify_blocking(b, &n.indices)?;
    }
    out.sort_by(|a, c| a.kernel_degree().cmp(&c.kernel_degree()).then_with(|| a.indices.cmp(&c.indices)));
    Ok(out)
}

/// Outcome of the `(P_1)` check: the least `j(d)` with `Φ_d(x^{b^j}) | P_D`
/// for each `d | b, d > 1`, or `None` where no such `j` exists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct P1Report {
    pub holds: bool,
    pub witnesses: BTreeMap<u64, Option<u32>>,
}

pub fn check_p1(b: u64, d: &DigitSet) -> Result<P1Report> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    Ok(check_p1_mask(b, &IntPoly::mask(d)))
}

pub(crate) fn check_p1_mask(b: u64, mask: &IntPoly) -> P1Report {
    let deg = mask.degree().unwrap_or(0) as u64;
    let witnesses: BTreeMap<u64, Option<u32>> = root_indices(b)
        .into_iter()
        .map(|d| (d, full_divisibility_level(d, b, mask, deg)))
        .collect();
    let holds = witnesses.values().all(Option::is_some);
    P1Report { holds, witnesses }
}

/// Least `j` with every factor of `Φ_t(x^{b^j})` dividing `mask`, searched
/// while `φ(t) b^j <= deg`.
fn full_divisibility_level(t: u64, b: u64, mask: &IntPoly, deg: u64) -> Option<u32> {
    let mut level: IndexSet = IndexSet::from([t]);
    let mut width = euler_phi(t);
    let mut j = 0u32;
    while width <= deg {
        if level.iter().all(|&e| cyc_divides(e, mask)) {
            return Some(j);
        }
        level = level
            .iter()
            .flat_map(|&e| expand_indices(e, b).expect("small indices"))
            .collect();
        width = width.checked_mul(b)?;
        j += 1;
    }
    None
}

/// Smallest `k` for which condition `(P_k)` holds, with the per-divisor
/// orders it is assembled from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PkReport {
    pub order: Option<u32>,
    pub per_divisor: BTreeMap<u64, Option<u32>>,
}

/// Smallest `k` with `(P_k)`, or `None` when no finite `k` exists.
pub fn pk_order(b: u64, d: &DigitSet) -> Result<Option<u32>> {
    validate_tile_input(b, d)?;
    Ok(pk_order_mask(b, &IntPoly::mask(d)).order)
}

/// `(P_k)` order of an arbitrary mask, with no cardinality requirement.
pub fn pk_order_mask(b: u64, mask: &IntPoly) -> PkReport {
    let deg = mask.degree().unwrap_or(0) as u64;
    let mut memo = HashMap::new();
    let per_divisor: BTreeMap<u64, Option<u32>> = root_indices(b)
        .into_iter()
        .map(|d| (d, node_order(d, b, mask, deg, &mut memo)))
        .collect();
    let order = per_divisor
        .values()
        .try_fold(0u32, |acc, o| o.map(|o| acc.max(o)));
    PkReport { order, per_divisor }
}

/// `order(t) = 1` when some `Φ_t(x^{b^j})` divides the mask outright.
/// Otherwise take the least `j_1` at which some factor of `Φ_t(x^{b^{j_1}})`
/// divides, and `order(t) = 1 + max` of the orders of all factors at that
/// level. `None` when no level has a dividing factor.
fn node_order(
    t: u64,
    b: u64,
    mask: &IntPoly,
    deg: u64,
    memo: &mut HashMap<u64, Option<u32>>,
) -> Option<u32> {
    if let Some(&hit) = memo.get(&t) {
        return hit;
    }
    let mut level: IndexSet = IndexSet::from([t]);
    let mut first_hit: Option<IndexSet> = None;
    let mut full_possible = true;
    let mut result = None;
    loop {
        // factors whose totient exceeds deg never divide, nor do their descendants
        let viable: IndexSet = level.iter().copied().filter(|&e| euler_phi(e) <= deg).collect();
        if viable.len() < level.len() {
            full_possible = false;
        }
        if viable.is_empty() {
            break;
        }
        let dividing = viable.iter().filter(|&&e| cyc_divides(e, mask)).count();
        if full_possible && dividing == level.len() {
            result = Some(1);
            break;
        }
        if dividing > 0 && first_hit.is_none() {
            first_hit = Some(level.clone());
        }
        level = viable
            .iter()
            .flat_map(|&e| expand_indices(e, b).expect("small indices"))
            .collect();
    }
    if result.is_none() {
        if let Some(factors) = first_hit {
            result = factors
                .iter()
                .try_fold(0u32, |acc, &f| node_order(f, b, mask, deg, memo).map(|o| acc.max(o)))
                .map(|m| m + 1);
        }
    }
    memo.insert(t, result);
    result
}

/// Graphviz rendering of the tree down to `max_index`. Members of
/// `blocking` are filled and not expanded; nodes whose cyclotomic divides
/// `mask` are outlined.
pub fn tree_dot(
    b: u64,
    max_index: u64,
    blocking: Option<&Blocking>,
    mask: Option<&IntPoly>,
) -> Result<String> {
    if b < 2 {
        return Err(Error::InvalidArgument("base must be >= 2".into()));
    }
    let mut out = format!("digraph phi_tree_{b} {{\n  node [shape=ellipse];\n");
    let mut edges = String::new();
    let mut queue: VecDeque<u64> = root_indices(b).into_iter().collect();
    while let Some(e) = queue.pop_front() {
        let blocked = blocking.is_some_and(|n| n.indices().contains(&e));
        let divides = mask.is_some_and(|m| cyc_divides(e, m));
        let mut attrs = vec![format!("label=\"Φ_{e}\"")];
        if blocked {
            attrs.push("style=filled".into());
            attrs.push("fillcolor=lightblue".into());
        }
        if divides {
            attrs.push("penwidth=2".into());
        }
        out.push_str(&format!("  n{e} [{}];\n", attrs.join(", ")));
        if blocked {
            continue;
        }
        for c in children(e, b)? {
            if c <= max_index {
                edges.push_str(&format!("  n{e} -> n{c};\n"));
                queue.push_back(c);
            }
        }
    }
    out.push_str(&edges);
    out.push_str("}\n");
    Ok(out)
}
