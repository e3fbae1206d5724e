//! Exact analysis of tile digit sets for self-similar tiles `T(b, D)` on the
//! real line.
//!
//! A digit set `D` (with `#D = b`, `0 ∈ D`, `gcd(D) = 1`) is a tile digit
//! set when the attractor of `x ↦ (x + d) / b` tiles the line. The crate
//! decides this by searching the tree of cyclotomic factors of `Φ_d(x^b)`
//! for a blocking whose cyclotomics all divide the mask polynomial
//! `P_D(x) = ∑ x^d`, and cross-checks the answer against an independent
//! search over `b`-adic digit strings. Everything is exact integer or
//! rational arithmetic.
//!
//! Batch and candidate loops use rayon when the default `parallel` feature
//! is enabled; see [`par::Exec`].

pub mod arith;
pub mod certificate;
pub mod cyclo;
pub mod digits;
pub mod error;
pub mod intpoly;
pub mod oracles;
pub mod par;
pub mod phitree;
pub mod productform;
pub mod protasov;
pub mod spectra;

pub use certificate::{analyze_batch, decide_tile_digit_set, Certificate, Verdict};
pub use cyclo::{cyc_divides, cyclotomic, expand_indices, CycCache, CycIndex, IndexSet};
pub use digits::DigitSet;
pub use error::{Error, Result};
pub use intpoly::IntPoly;
pub use par::Exec;
pub use phitree::Blocking;
