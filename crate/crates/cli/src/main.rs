//! `tiledigits`: decide, construct and inspect tile digit sets.
//!
//! Exit codes: 0 tile (or success), 1 not-tile (or nothing found),
//! 2 usage or input error, 3 disagreement between independent checks.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tile_digits::certificate::decide_tile_digit_set;
use tile_digits::cyclo::CycCache;
use tile_digits::oracles::{
    default_period_cap, direct_sum_diagnostic, integer_tile_check, tile_intervals, IntervalUnion,
};
use tile_digits::phitree::{enumerate_kernels, search_blocking, tree_dot};
use tile_digits::productform::Recipe;
use tile_digits::protasov::{
    default_depth_bound, kenyon_bounded_check, protasov_decide, ProtasovOutcome,
};
use tile_digits::{Certificate, DigitSet, Exec, IntPoly};

const EXIT_TILE: u8 = 0;
const EXIT_NOT_TILE: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_DISAGREE: u8 = 3;

/// Range of m checked by the bounded root condition in cross-check mode.
const KENYON_M_MAX: u64 = 200;

#[derive(Parser)]
#[command(name = "tiledigits", version, about = "Exact analysis of tile digit sets")]
struct Cli {
    /// Cyclotomic cache file, loaded before and saved after the command.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
    Svg,
}

#[derive(Args)]
struct DigitInput {
    #[arg(long)]
    base: u64,
    /// Comma-separated digits, e.g. 0,1,8,9.
    #[arg(long, value_parser = parse_digits)]
    digits: DigitSet,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether a digit set tiles and print its certificate.
    Analyze {
        #[command(flatten)]
        input: DigitInput,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Also run the digit-string search and the bounded root check.
        #[arg(long)]
        cross_check: bool,
        /// Depth bound for the digit-string search (default: exhaustive).
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Analyze one digit set per line of a file (digits separated by commas).
    Batch {
        #[arg(long)]
        base: u64,
        #[arg(long)]
        file: PathBuf,
    },
    /// Re-verify a saved certificate.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Build a digit set from a JSON recipe and certify it.
    Construct {
        #[arg(long)]
        recipe: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        cross_check: bool,
    },
    /// List blockings of the tree with kernel degree at most --max-degree.
    Kernels {
        #[arg(long)]
        base: u64,
        #[arg(long)]
        max_degree: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Render the tree of cyclotomic indices in DOT.
    Tree {
        #[arg(long)]
        base: u64,
        #[arg(long)]
        max_index: u64,
    },
    /// Exact interval approximation of the attractor.
    Geometry {
        #[command(flatten)]
        input: DigitInput,
        #[arg(long, default_value_t = 1)]
        depth: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Print one `p/q r/s` line per interval instead of the summary.
        #[arg(long)]
        pairs: bool,
    },
    /// Integer tiling search and direct-sum diagnostic.
    Oracle {
        #[arg(long, value_parser = parse_digits)]
        digits: DigitSet,
        #[arg(long)]
        period_cap: Option<u64>,
        /// Base for the direct-sum diagnostic.
        #[arg(long)]
        base: Option<u64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Fill the cyclotomic cache with Φ_n for n up to --max-index.
    Cache {
        #[arg(long)]
        max_index: u64,
    },
}

fn parse_digits(text: &str) -> Result<DigitSet, String> {
    let mut values = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let v: u64 = part
            .parse()
            .map_err(|_| format!("{part:?} is not a non-negative integer"))?;
        values.push(v);
    }
    DigitSet::new(values).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(path) = &cli.cache {
        if path.exists() {
            CycCache::global()
                .load(path)
                .with_context(|| format!("loading cache {}", path.display()))?;
        }
    }
    let code = match cli.command {
        Command::Analyze { input, format, cross_check, depth } => {
            analyze(input.base, &input.digits, format, cross_check, depth)?
        }
        Command::Batch { base, file } => batch(base, &file)?,
        Command::Verify { certificate } => verify(&certificate)?,
        Command::Construct { recipe, format, cross_check } => construct(&recipe, format, cross_check)?,
        Command::Kernels { base, max_degree, format } => kernels(base, max_degree, format)?,
        Command::Tree { base, max_index } => {
            print!("{}", tree_dot(base, max_index, None, None)?);
            EXIT_TILE
        }
        Command::Geometry { input, depth, format, pairs } => {
            geometry(input.base, &input.digits, depth, format, pairs)?
        }
        Command::Oracle { digits, period_cap, base, format } => oracle(&digits, period_cap, base, format)?,
        Command::Cache { max_index } => {
            let Some(path) = &cli.cache else {
                bail!("cache requires --cache PATH");
            };
            for n in 1..=max_index {
                CycCache::global().get(n);
            }
            println!("{} cyclotomic polynomials cached in {}", CycCache::global().len(), path.display());
            EXIT_TILE
        }
    };
    if let Some(path) = &cli.cache {
        CycCache::global()
            .save(path)
            .with_context(|| format!("saving cache {}", path.display()))?;
    }
    Ok(code)
}

fn verdict_code(cert: &Certificate) -> u8 {
    if cert.is_tile() {
        EXIT_TILE
    } else {
        EXIT_NOT_TILE
    }
}

/// Runs the independent checks and records the digit-string blocking.
/// Returns a description of the first disagreement.
fn cross_check(cert: &mut Certificate, depth: Option<u32>) -> anyhow::Result<Option<String>> {
    let d = cert.digit_set()?;
    let b = cert.base;
    let depth = depth.unwrap_or_else(|| default_depth_bound(b, DigitSet::max(&d)));
    match protasov_decide(b, &d, depth)? {
        ProtasovOutcome::Blocking(vb) => {
            cert.protasov_blocking = Some(vb.strings());
            let image: Vec<u64> = vb.tau_image().into_iter().collect();
            match &cert.blocking {
                None => return Ok(Some("digit-string search found a blocking".into())),
                Some(idx) if *idx != image => {
                    return Ok(Some(format!(
                        "digit-string blocking maps to {image:?}, tree blocking is {idx:?}"
                    )))
                }
                Some(_) => {}
            }
        }
        ProtasovOutcome::Absent { witness } => {
            if cert.is_tile() {
                return Ok(Some(format!(
                    "digit-string search found the unblockable vertex {}",
                    witness.display(b)
                )));
            }
        }
        ProtasovOutcome::Inconclusive { depth } => {
            eprintln!("warning: digit-string search inconclusive at depth {depth}");
        }
    }
    let kenyon = kenyon_bounded_check(b, &d, KENYON_M_MAX)?;
    if cert.is_tile() && !kenyon.holds {
        return Ok(Some(format!(
            "root condition fails at m = {}",
            kenyon.failing_m.unwrap_or_default()
        )));
    }
    Ok(None)
}

fn analyze(
    b: u64,
    d: &DigitSet,
    format: Format,
    cross: bool,
    depth: Option<u32>,
) -> anyhow::Result<u8> {
    let mut cert = decide_tile_digit_set(b, d)?;
    let disagreement = if cross { cross_check(&mut cert, depth)? } else { None };
    emit_certificate(&cert, format)?;
    if let Some(msg) = disagreement {
        eprintln!("DISAGREEMENT: {msg}");
        return Ok(EXIT_DISAGREE);
    }
    Ok(verdict_code(&cert))
}

fn emit_certificate(cert: &Certificate, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Json => println!("{}", cert.to_json()),
        Format::Text => print!("{}", certificate_text(cert)),
        Format::Dot => {
            let d = cert.digit_set()?;
            let mask = IntPoly::mask(&d);
            let blocking = cert.blocking()?;
            let max_index = match &blocking {
                Some(n) => *n.indices().iter().next_back().expect("nonempty blocking"),
                None => {
                    let outcome = search_blocking(cert.base, &mask, Exec::default())?;
                    outcome.dead_end.unwrap_or(cert.base)
                }
            };
            print!("{}", tree_dot(cert.base, max_index, blocking.as_ref(), Some(&mask))?);
        }
        Format::Svg => bail!("svg output is only available for geometry"),
    }
    Ok(())
}

fn set_text(values: &[u64]) -> String {
    let inner: Vec<String> = values.iter().map(u64::to_string).collect();
    format!("{{{}}}", inner.join(","))
}

fn certificate_text(cert: &Certificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "base: {}", cert.base);
    let _ = writeln!(s, "digits: {}", set_text(&cert.digits));
    let verdict = if cert.is_tile() { "tile" } else { "not-tile" };
    let _ = writeln!(s, "verdict: {verdict}");
    if let Some(b) = &cert.blocking {
        let _ = writeln!(s, "blocking: {}", set_text(b));
        let factors: Vec<String> = b.iter().map(|e| format!("Φ_{e}")).collect();
        let _ = writeln!(s, "kernel: {}", factors.join(" "));
    }
    if let Some(k) = cert.pk_order {
        let _ = writeln!(s, "(P_k) order: {k}");
    }
    let _ = writeln!(s, "prime-power spectrum: {}", set_text(&cert.prime_power_spectrum));
    let _ = writeln!(s, "T1: {}", if cert.t1 { "holds" } else { "fails" });
    let _ = writeln!(s, "T2: {}", if cert.t2 { "holds" } else { "fails" });
    for (p, exps) in &cert.prime_power_exponents {
        let e: Vec<u64> = exps.iter().map(|&x| u64::from(x)).collect();
        let _ = writeln!(s, "exponents of {p}: {}", set_text(&e));
    }
    match &cert.structure_violation {
        None => {
            let _ = writeln!(s, "prime-power structure: consistent");
        }
        Some(v) => {
            let _ = writeln!(s, "prime-power structure: fails ({})", serde_json::to_string(v).unwrap_or_default());
        }
    }
    if let Some(strings) = &cert.protasov_blocking {
        let _ = writeln!(s, "digit-string blocking: {}", strings.join(" "));
    }
    let _ = writeln!(
        s,
        "search: {} nodes, depth {}",
        cert.stats.nodes_visited, cert.stats.max_depth
    );
    s
}

fn batch(b: u64, file: &Path) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let sets: Vec<DigitSet> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_digits(l).map_err(anyhow::Error::msg))
        .collect::<anyhow::Result<_>>()?;
    let results = tile_digits::analyze_batch(b, &sets, Exec::default());
    let mut failed = false;
    for (d, r) in sets.iter().zip(results) {
        match r {
            Ok(cert) => println!("{}", cert.to_json()),
            Err(e) => {
                failed = true;
                println!("{}", json!({ "digits": d.as_slice(), "error": e.to_string() }));
            }
        }
    }
    Ok(if failed { EXIT_ERROR } else { EXIT_TILE })
}

fn verify(path: &Path) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cert = Certificate::from_json(text.trim())?;
    println!("certificate verified: {}", if cert.is_tile() { "tile" } else { "not-tile" });
    Ok(verdict_code(&cert))
}

fn construct(path: &Path, format: Format, cross: bool) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let recipe = Recipe::from_json(&text)?;
    let built = recipe.build()?;
    let mut cert = decide_tile_digit_set(built.base, &built.digits)?;
    let disagreement = if cross { cross_check(&mut cert, None)? } else { None };
    match format {
        Format::Json => println!(
            "{}",
            json!({
                "digits": built.digits.as_slice(),
                "order": built.order,
                "trace": built.trace,
                "certificate": serde_json::to_value(&cert)?,
            })
        ),
        Format::Text => {
            println!("constructed: {}", built.digits);
            println!("construction order: {}", built.order);
            if let Some(t) = &built.trace {
                let moduli: Vec<String> = t.moduli.iter().map(u64::to_string).collect();
                println!("stage moduli: {}", moduli.join(" "));
            }
            print!("{}", certificate_text(&cert));
        }
        other => emit_certificate(&cert, other)?,
    }
    if let Some(msg) = disagreement {
        eprintln!("DISAGREEMENT: {msg}");
        return Ok(EXIT_DISAGREE);
    }
    if !cert.is_tile() {
        eprintln!("DISAGREEMENT: constructed digit set is not a tile digit set");
        return Ok(EXIT_DISAGREE);
    }
    Ok(EXIT_TILE)
}

fn kernels(b: u64, max_degree: u64, format: Format) -> anyhow::Result<u8> {
    let list = enumerate_kernels(b, max_degree)?;
    match format {
        Format::Json => {
            let rows: Vec<_> = list
                .iter()
                .map(|n| json!({ "indices": n.indices(), "degree": n.kernel_degree() }))
                .collect();
            println!("{}", serde_json::to_string(&rows)?);
        }
        Format::Text => {
            for n in &list {
                let idx: Vec<u64> = n.indices().iter().copied().collect();
                println!("{}  degree {}", set_text(&idx), n.kernel_degree());
            }
        }
        _ => bail!("kernels supports text and json output"),
    }
    Ok(EXIT_TILE)
}

fn rational_text(q: &num_rational::BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn union_text(u: &IntervalUnion) -> String {
    let parts: Vec<String> = u
        .intervals()
        .iter()
        .map(|(l, r)| format!("[{},{}]", rational_text(l), rational_text(r)))
        .collect();
    format!("{} measure {}", parts.join(" ∪ "), rational_text(&u.measure()))
}

fn geometry(b: u64, d: &DigitSet, depth: u32, format: Format, pairs: bool) -> anyhow::Result<u8> {
    let u = tile_intervals(b, d, depth)?;
    match format {
        Format::Text if pairs => print!("{u}"),
        Format::Text => println!("{}", union_text(&u)),
        Format::Svg => print!("{}", u.to_svg(800)),
        Format::Json => {
            let ivs: Vec<_> = u
                .intervals()
                .iter()
                .map(|(l, r)| json!([rational_text(l), rational_text(r)]))
                .collect();
            println!("{}", json!({ "intervals": ivs, "measure": rational_text(&u.measure()) }));
        }
        Format::Dot => bail!("geometry supports text, json and svg output"),
    }
    Ok(EXIT_TILE)
}

fn oracle(d: &DigitSet, cap: Option<u64>, base: Option<u64>, format: Format) -> anyhow::Result<u8> {
    let cap = cap.unwrap_or_else(|| default_period_cap(d.as_slice()));
    let tiling = integer_tile_check(d, cap)?;
    let diag = match base {
        Some(b) => direct_sum_diagnostic(b, d, 4)?,
        None => None,
    };
    match format {
        Format::Json => println!(
            "{}",
            json!({ "tiling": tiling, "period_cap": cap, "direct_sum_collision_level": diag })
        ),
        Format::Text => {
            match &tiling {
                Some(t) => println!("integer tile: period {}, L={}", t.period, set_text(&t.complement)),
                None => println!("no integer tiling with period up to {cap}"),
            }
            if let Some(b) = base {
                match diag {
                    Some(k) => println!("direct-sum diagnostic (heuristic, base {b}): sums repeat at level {k}"),
                    None => println!("direct-sum diagnostic (heuristic, base {b}): no repeats up to level 4"),
                }
            }
        }
        _ => bail!("oracle supports text and json output"),
    }
    Ok(if tiling.is_some() { EXIT_TILE } else { EXIT_NOT_TILE })
}
