//! The `salem` command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or precondition
//! error, 3 I/O or schema error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde::Serialize;

use crate::ap_verifier::ap_report;
use crate::cantor_tree::{
    build_tree, derive_seed, load_tree, schedule_a, schedule_b, tree_to_json, MeasureTree, Schedule,
};
use crate::discrete_ap::{
    behrend_sphere_with_threshold, double_embed, is_ap_free, property_ii_oracle, uniformity_sweep, BaseSet, Method,
    ResidueSet, BEHREND_EXHAUSTIVE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::fourier::{decay_profile, increment_scan, mu_hat_batch_tree, DecayProfile, DEFAULT_K_CAP};
use crate::regularity::{dyadic_radii, frostman_scan, parse_rational, resolution_floor, theorem_b_mass_check};
use crate::svg::{emit_svg, LogLogPlot};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Parsed and validated command line.
#[derive(Debug, Parser)]
#[command(name = "salem", version, about = "Random Cantor-series measures with AP-free supports")]
pub struct RunConfig {
    /// Print errors as single-line JSON on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// AP-free set in {1..m'}, optionally doubled into Z/mZ.
    Behrend(BehrendArgs),
    /// Build a random tree and write it as JSON.
    Build(BuildArgs),
    /// Fourier coefficients of mu_n as CSV.
    Fourier(FourierArgs),
    /// Dyadic decay profile, optionally plotted.
    Decay(DecayArgs),
    /// Martingale increments between two levels.
    Increments(IncrementArgs),
    /// Ball-mass ratios and regularity constants.
    Regularity(RegularityArgs),
    /// Finite-depth progression certificate.
    VerifyAp(VerifyArgs),
    /// Uniformity versus progressions in Z/nZ.
    UniformityDemo(UniformityArgs),
}

#[derive(Debug, Args)]
pub struct BehrendArgs {
    #[arg(long = "m-prime", conflicts_with = "m", required_unless_present = "m")]
    pub m_prime: Option<u64>,
    /// Modulus for the doubled set; uses m' = floor(m/5).
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, default_value_t = BEHREND_EXHAUSTIVE_THRESHOLD)]
    pub threshold: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    #[value(name = "custom")]
    Custom,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long, value_enum)]
    pub variant: VariantArg,
    #[arg(long)]
    pub m: Option<u64>,
    /// Base set as comma-separated residues; defaults to the doubled Behrend set.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<u64>>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub depth: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Store every translation instead of re-deriving from the seed.
    #[arg(long)]
    pub materialize: bool,
}

#[derive(Debug, Args)]
pub struct TreeArg {
    #[arg(long)]
    pub tree: PathBuf,
    /// Level n; defaults to the tree depth.
    #[arg(long)]
    pub level: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FourierArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub k_min: i64,
    #[arg(long, default_value_t = 64, allow_hyphen_values = true)]
    pub k_max: i64,
    /// Explicit frequencies; overrides the range.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ks: Option<Vec<i64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    #[arg(long, default_value_t = 1)]
    pub k_min: i64,
    #[arg(long, default_value_t = 100_000)]
    pub k_max: i64,
    /// Re-run on this many trees with seeds derived from the tree's seed.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Sigma of the envelope overlay; defaults to the schedule's t.
    #[arg(long)]
    pub target_sigma: Option<f64>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IncrementArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, default_value_t = DEFAULT_K_CAP)]
    pub k_cap: i64,
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Include every per-frequency increment in the output.
    #[arg(long)]
    pub per_k: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegularityArgs {
    #[command(flatten)]
    pub tree: TreeArg,
    /// Target exponent; defaults to the schedule's t.
    #[arg(long)]
    pub t: Option<f64>,
    /// `dyadic` or comma-separated rationals such as `1/4,1/8`.
    #[arg(long, default_value = "dyadic")]
    pub radii: String,
    #[arg(long, default_value_t = crate::regularity::DEFAULT_GRID)]
    pub grid: u64,
    /// Mass check at r = 1/(n+1)! on the given levels (variant B trees).
    #[arg(long)]
    pub theorem_b: bool,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    /// Levels for the mass check, e.g. `4-12` or `4,6,8`.
    #[arg(long)]
    pub levels: Option<String>,
    /// CSV of every (x, r, mass, ratio) sample.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub tree: PathBuf,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Real-line progressions only (no wraparound).
    #[arg(long)]
    pub line: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct UniformityArgs {
    #[arg(long, default_value_t = 2)]
    pub n_min: u64,
    #[arg(long, default_value_t = 14)]
    pub exhaustive_max: u64,
    #[arg(long, default_value_t = 20)]
    pub random_max: u64,
    #[arg(long, default_value_t = 2000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Cross-field checks that clap cannot express.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        match &self.command {
            Command::Build(b) => match b.variant {
                VariantArg::A if b.m.is_none() || b.t.is_none() => bad("variant A needs --m and --t"),
                VariantArg::A => Ok(()),
                _ if b.t.is_some() => bad("--t applies to variant A only"),
                VariantArg::B if b.m.is_some() || b.x.is_some() => {
                    bad("variant B takes no --m or --x; its bases are fixed")
                }
                VariantArg::Custom if b.m.is_none() || b.x.is_none() => bad("custom variant needs --m and --x"),
                _ => Ok(()),
            },
            Command::Fourier(f) if f.ks.is_none() && f.k_min > f.k_max => bad("--k-min exceeds --k-max"),
            Command::Decay(d) if d.k_min < 1 || d.k_min > d.k_max => bad("need 1 <= --k-min <= --k-max"),
            Command::Decay(d) if d.seeds == Some(0) => bad("--seeds must be positive"),
            Command::Increments(i) if i.seeds == Some(0) => bad("--seeds must be positive"),
            Command::Increments(i) if i.k_cap < 1 => bad("--k-cap must be positive"),
            _ => Ok(()),
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::Precondition(_) | Error::DepthExceeded { .. } => EXIT_USAGE,
        Error::Schema(_) | Error::Io(_) | Error::Json(_) => EXIT_IO,
    }
}

fn report_error(json: bool, kind: &str, message: &str) {
    if json {
        let line = serde_json::json!({ "error": kind, "message": message });
        eprintln!("{line}");
    } else {
        eprintln!("salem: {message}");
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let json = argv.iter().any(|a| a == "--json");
    let config = match RunConfig::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return EXIT_OK;
        }
        Err(e) => {
            if json {
                report_error(true, "usage", e.to_string().lines().next().unwrap_or("usage error"));
            } else {
                let _ = e.print();
            }
            return EXIT_USAGE;
        }
    };
    let result = config.validate().and_then(|()| with_thread_pool(|| dispatch(&config)));
    match result {
        Ok(code) => code,
        Err(e) => {
            report_error(config.json, e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

/// Runs `f` on a pool sized by `SALEM_THREADS` (unset or 0: rayon's default).
fn with_thread_pool<R: Send>(f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    let threads = match std::env::var("SALEM_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidArgument(format!("SALEM_THREADS must be an integer, got {v:?}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(&s, out)
}

fn dispatch(config: &RunConfig) -> Result<i32> {
    match &config.command {
        Command::Behrend(a) => behrend(a),
        Command::Build(a) => build(a),
        Command::Fourier(a) => fourier(a),
        Command::Decay(a) => decay(a),
        Command::Increments(a) => increments(a),
        Command::Regularity(a) => regularity(a),
        Command::VerifyAp(a) => verify_ap(a),
        Command::UniformityDemo(a) => uniformity(a),
    }
}

fn level_of(tree: &MeasureTree, level: Option<usize>) -> usize {
    level.unwrap_or(tree.depth())
}

fn behrend(a: &BehrendArgs) -> Result<i32> {
    let m_prime = a.m_prime.unwrap_or_else(|| a.m.unwrap_or(0) / 5);
    let set = behrend_sphere_with_threshold(m_prime, a.threshold);
    let doubled = match a.m {
        Some(m) => {
            let x = double_embed(&set.elements, m)?;
            let oracle = property_ii_oracle(&x);
            Some(serde_json::json!({
                "m": m,
                "elements": x.elements(),
                "size": x.len(),
                "property_ii": oracle,
                "ap_free": is_ap_free(x.elements()),
                "density_exponent": if m > 1 && !x.is_empty() {
                    Some((x.len() as f64).ln() / (m as f64).ln())
                } else {
                    None
                },
            }))
        }
        None => None,
    };
    emit_json(
        &serde_json::json!({
            "behrend": set,
            "size": set.elements.len(),
            "ap_free": is_ap_free(&set.elements),
            "doubled": doubled,
        }),
        None,
    )?;
    Ok(EXIT_OK)
}

fn build(a: &BuildArgs) -> Result<i32> {
    let schedule = match a.variant {
        VariantArg::A => {
            let m = a.m.expect("validated");
            let x = match &a.x {
                Some(x) => ResidueSet::new(m, x.iter().copied())?,
                None => double_embed(&behrend_sphere_with_threshold(m / 5, BEHREND_EXHAUSTIVE_THRESHOLD).elements, m)?,
            };
            schedule_a(m, &x, a.t.expect("validated"), a.depth)?
        }
        VariantArg::B => schedule_b(a.depth)?,
        VariantArg::Custom => {
            let set = ResidueSet::new(a.m.expect("validated"), a.x.clone().expect("validated"))?;
            Schedule::custom(vec![BaseSet { set, method: Method::Given }; a.depth])?
        }
    };
    let tree = build_tree(&schedule, a.seed, a.depth)?;
    emit(&tree_to_json(&tree, a.materialize)?, a.out.as_deref())?;
    Ok(EXIT_OK)
}

fn fourier(a: &FourierArgs) -> Result<i32> {
    let tree = load_tree(&a.tree.tree)?;
    let n = level_of(&tree, a.tree.level);
    let ks: Vec<i64> = match &a.ks {
        Some(ks) => ks.clone(),
        None => (a.k_min..=a.k_max).collect(),
    };
    let coeffs = mu_hat_batch_tree(&tree, n, &ks)?;
    emit(&coeffs.to_csv(), a.out.as_deref())?;
    Ok(EXIT_OK)
}

/// Trees sharing `tree`'s schedule and depth, with seeds derived from its seed.
fn reseeded(tree: &MeasureTree, count: Option<u64>) -> Result<Vec<MeasureTree>> {
    match count {
        None => Ok(vec![tree.clone()]),
        Some(k) => (0..k).map(|i| build_tree(tree.schedule(), derive_seed(tree.seed(), i), tree.depth())).collect(),
    }
}

#[derive(Serialize)]
struct DecayRun {
    seed: u64,
    profile: DecayProfile,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

fn decay(a: &DecayArgs) -> Result<i32> {
    let base = load_tree(&a.tree.tree)?;
    let n = level_of(&base, a.tree.level);
    let ks: Vec<i64> = (a.k_min..=a.k_max).collect();
    let mut runs = Vec::new();
    for tree in reseeded(&base, a.seeds)? {
        let profile = decay_profile(&mu_hat_batch_tree(&tree, n, &ks)?, a.k_min)?;
        runs.push(DecayRun { seed: tree.seed(), profile });
    }
    let sigma_median = median(runs.iter().filter_map(|r| r.profile.fit.map(|f| f.sigma_hat)).collect());
    if let Some(path) = &a.svg {
        let target = a.target_sigma.or(base.schedule().t());
        std::fs::write(path, emit_svg(&LogLogPlot::from_profile(&runs[0].profile, target)?)?)?;
    }
    emit_json(
        &serde_json::json!({ "level": n, "k_min": a.k_min, "k_max": a.k_max,
                             "sigma_hat_median": sigma_median, "runs": runs }),
        a.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn increments(a: &IncrementArgs) -> Result<i32> {
    let base = load_tree(&a.tree.tree)?;
    let n = a.tree.level.unwrap_or(base.depth().saturating_sub(1));
    let mut runs = Vec::new();
    let mut with_exceedance = 0u64;
    for tree in reseeded(&base, a.seeds)? {
        let mut report = increment_scan(&tree, n, a.sigma, a.k_cap)?;
        with_exceedance += (report.exceedance_count > 0) as u64;
        if !a.per_k {
            report.increments.clear();
        }
        runs.push(serde_json::json!({ "seed": tree.seed(), "report": report }));
    }
    let total = runs.len() as f64;
    emit_json(
        &serde_json::json!({
            "level": n,
            "sigma": a.sigma,
            "seeds": runs.len(),
            "event_frequency": with_exceedance as f64 / total,
            "runs": runs,
        }),
        a.out.as_deref(),
    )?;
    Ok(EXIT_OK)
}

fn parse_levels(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad level list {spec:?}"));
    if let Some((lo, hi)) = spec.split_once('-') {
        let lo: usize = lo.trim().parse().map_err(|_| bad())?;
        let hi: usize = hi.trim().parse().map_err(|_| bad())?;
        return Ok((lo..=hi).collect());
    }
    spec.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

fn regularity(a: &RegularityArgs) -> Result<i32> {
    let tree = load_tree(&a.tree.tree)?;
    if a.theorem_b {
        let levels = match &a.levels {
            Some(l) => parse_levels(l)?,
            None => (4.min(tree.depth())..=tree.depth()).collect(),
        };
        let report = theorem_b_mass_check(&tree, &levels, a.epsilon)?;
        emit_json(&report, a.out.as_deref())?;
        return Ok(if report.all_hold { EXIT_OK } else { EXIT_FAILED });
    }
    let n = level_of(&tree, a.tree.level);
    let t =
        a.t.or(tree.schedule().t())
            .ok_or_else(|| Error::InvalidArgument("--t is required for trees without a schedule exponent".into()))?;
    let radii: Vec<BigRational> = if a.radii == "dyadic" {
        dyadic_radii(&resolution_floor(&tree, n))
    } else {
        a.radii.split(',').map(parse_rational).collect::<Result<_>>()?
    };
    let report = frostman_scan(&tree, n, t, &radii, a.grid)?;
    if let Some(path) = &a.dump {
        report.write_dump(std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    if let Some(path) = &a.svg {
        std::fs::write(path, emit_svg(&LogLogPlot::from_regularity(&report)?)?)?;
    }
    emit_json(&report, a.out.as_deref())?;
    let holds = report.reference.as_ref().is_none_or(|r| r.upper_holds && r.lower_holds);
    Ok(if holds { EXIT_OK } else { EXIT_FAILED })
}

fn verify_ap(a: &VerifyArgs) -> Result<i32> {
    let tree = load_tree(&a.tree)?;
    let n = a.depth.unwrap_or(tree.depth());
    let cert = ap_report(&tree, n, a.line)?;
    emit_json(&cert, a.out.as_deref())?;
    Ok(if cert.certified { EXIT_OK } else { EXIT_FAILED })
}

fn uniformity(a: &UniformityArgs) -> Result<i32> {
    let sweep = uniformity_sweep(a.n_min, a.exhaustive_max, a.random_max, a.samples, a.seed)?;
    emit_json(&sweep, a.out.as_deref())?;
    Ok(if sweep.counterexamples.is_empty() { EXIT_OK } else { EXIT_FAILED })
}
