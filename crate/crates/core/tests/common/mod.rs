//! Test-side oracles and random suites. The polynomial code here is a
//! separate dense `i128` implementation so it can check the library.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use tile_digits::productform::{
    build_modulo_product_form, build_product_form, stage_kernels, Decomposition,
    Representatives,
};
use tile_digits::DigitSet;

pub type Dense = Vec<i128>;

pub fn trim(mut p: Dense) -> Dense {
    while p.len() > 1 && *p.last().unwrap() == 0 {
        p.pop();
    }
    p
}

pub fn mul(a: &[i128], b: &[i128]) -> Dense {
    let mut out = vec![0i128; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

/// Quotient and remainder by a monic divisor.
pub fn divmod(a: &[i128], m: &[i128]) -> (Dense, Dense) {
    assert_eq!(*m.last().unwrap(), 1);
    let mut r = a.to_vec();
    if r.len() < m.len() {
        return (vec![0], trim(r));
    }
    let dq = r.len() - m.len();
    let mut q = vec![0i128; dq + 1];
    for i in (0..=dq).rev() {
        let c = r[i + m.len() - 1];
        q[i] = c;
        if c != 0 {
            for (j, &mj) in m.iter().enumerate() {
                r[i + j] -= c * mj;
            }
        }
    }
    (trim(q), trim(r))
}

pub fn is_zero(p: &[i128]) -> bool {
    p.iter().all(|&c| c == 0)
}

pub fn compose_power(p: &[i128], n: usize) -> Dense {
    let mut out = vec![0i128; (p.len() - 1) * n + 1];
    for (i, &c) in p.iter().enumerate() {
        out[i * n] = c;
    }
    out
}

fn mobius(mut n: u64) -> i32 {
    let mut k = 0;
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            n /= p;
            if n % p == 0 {
                return 0;
            }
            k += 1;
        }
        p += 1;
    }
    if n > 1 {
        k += 1;
    }
    if k % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `Φ_n = ∏_{d | n} (x^d - 1)^{μ(n/d)}`, multiplying first and dividing after.
pub fn cyclotomic_mobius(n: u64) -> Dense {
    let divs: Vec<u64> = (1..=n).filter(|d| n % d == 0).collect();
    let mut acc: Dense = vec![1];
    for &d in &divs {
        if mobius(n / d) == 1 {
            let mut f = vec![0i128; d as usize + 1];
            f[0] = -1;
            f[d as usize] = 1;
            acc = mul(&acc, &f);
        }
    }
    for &d in &divs {
        if mobius(n / d) == -1 {
            let mut f = vec![0i128; d as usize + 1];
            f[0] = -1;
            f[d as usize] = 1;
            let (q, r) = divmod(&acc, &f);
            assert!(is_zero(&r));
            acc = q;
        }
    }
    acc
}

pub fn totient_brute(n: u64) -> u64 {
    (1..=n).filter(|&k| gcd(k, n) == 1).count() as u64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn mask_dense(d: &[u64]) -> Dense {
    let mut out = vec![0i128; *d.iter().max().unwrap() as usize + 1];
    for &x in d {
        out[x as usize] += 1;
    }
    out
}

pub fn to_dense(p: &tile_digits::IntPoly) -> Dense {
    use num_traits::ToPrimitive;
    let mut v: Dense = p.coeffs().iter().map(|c| c.to_i128().unwrap()).collect();
    if v.is_empty() {
        v.push(0);
    }
    v
}

/// Divides out the common factor so that `gcd(D) = 1`.
pub fn normalize(mut d: Vec<u64>) -> Vec<u64> {
    let g = d.iter().fold(0, |acc, &x| gcd(acc, x));
    if g > 1 {
        for x in &mut d {
            *x /= g;
        }
    }
    d.sort_unstable();
    d
}

/// `0` plus `b - 1` distinct random digits in `[1, max]`, normalized.
pub fn random_digit_set<R: Rng>(rng: &mut R, b: u64, max: u64) -> DigitSet {
    let mut pool: Vec<u64> = (1..=max).collect();
    pool.shuffle(rng);
    let mut d: Vec<u64> = pool[..(b - 1) as usize].to_vec();
    d.push(0);
    DigitSet::new(normalize(d)).unwrap()
}

/// A complete residue system mod `b` with random lifts below `max`.
pub fn random_residue_system<R: Rng>(rng: &mut R, b: u64, max: u64) -> DigitSet {
    let mut d = vec![0];
    for r in 1..b {
        let k = rng.gen_range(0..=(max - r) / b);
        d.push(r + k * b);
    }
    DigitSet::new(normalize(d)).unwrap()
}

/// Ordered factorization of `b` into factors `> 1`, chosen at random.
pub fn random_factorization<R: Rng>(rng: &mut R, b: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut rest = b;
    while rest > 1 {
        let divs: Vec<u64> = (2..=rest).filter(|d| rest % d == 0).collect();
        let d = *divs.choose(rng).unwrap();
        out.push(d);
        rest /= d;
    }
    out
}

/// A random decomposition `E_0 ⊕ … ⊕ E_k ≡ Z_b`: mixed-radix parts with
/// each nonzero element lifted by a random multiple of `b`.
pub fn random_decomposition<R: Rng>(rng: &mut R, b: u64, max_lift: u64, max_exp: u32) -> Decomposition {
    loop {
        let sizes = random_factorization(rng, b);
        let mut parts = Vec::new();
        let mut radix = 1;
        for &m in &sizes {
            let part: Vec<u64> = (0..m)
                .map(|i| if i == 0 { 0 } else { i * radix + b * rng.gen_range(0..=max_lift) })
                .collect();
            parts.push(part);
            radix *= m;
        }
        let mut exps: Vec<u32> = (1..parts.len()).map(|_| rng.gen_range(0..=max_exp)).collect();
        exps.sort_unstable();
        if let Ok(dec) = Decomposition::new(b, parts, exps) {
            if build_product_form(&dec).is_ok() {
                return dec;
            }
        }
    }
}

/// A random product form with the modulo adjustments of each stage.
pub fn random_modulo_form<R: Rng>(rng: &mut R, b: u64) -> (DigitSet, Decomposition) {
    loop {
        let dec = random_decomposition(rng, b, 2, 2);
        let Ok(trace) = stage_kernels(&dec) else { continue };
        // Move a few digits of each stage by multiples of the stage modulus.
        let mut staged: Vec<u64> = vec![0];
        let mut reps = Vec::new();
        for (i, part) in dec.parts().iter().enumerate() {
            let scale = b.pow(dec.exponent(i));
            let mut cand: Vec<u64> = staged
                .iter()
                .flat_map(|&a| part.iter().map(move |&e| a + scale * e))
                .collect();
            cand.sort_unstable();
            let mut stage = Vec::new();
            for v in cand.iter_mut() {
                if *v != 0 && rng.gen_bool(0.3) {
                    let to = *v + trace.moduli[i] * rng.gen_range(1..=2);
                    stage.push((*v, to));
                    *v = to;
                }
            }
            reps.push(stage);
            staged = cand;
        }
        if let Ok((d, _)) = build_modulo_product_form(&dec, &Representatives::Explicit(reps)) {
            if d.gcd() == 1 {
                return (d, dec);
            }
        }
    }
}
