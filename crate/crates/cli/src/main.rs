use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dikey::bounds::{
    k_ad_dw, k_upper_ppt_block, k_upper_ppt_params, region_sweep, rho_d_bounds, threshold_search, verify_decomposition,
    BoundReport, DecompositionReport, RegionPoint,
};
use dikey::channels::{device_channel_statistics, is_completely_copositive, transpose_channel_attack};
use dikey::devices::{device_statistics, distribution_distance, transpose_attack};
use dikey::document::{Device, DeviceBody, DeviceDocument, SCHEMA_VERSION};
use dikey::linalg::{is_ppt, DenseLimit};
use dikey::states::{
    bell_power_params, default_p, make_rho_d, privacy_squeeze, BellParams, BlockNorms, UnitaryChoice, UnitaryKind,
    BOB_CUT,
};
use serde::Serialize;

/// Bounds on device-independent key for PPT states built from private-state blocks.
#[derive(Parser)]
#[command(name = "dikey", version)]
struct Cli {
    /// Largest matrix side any command may materialize.
    #[arg(long, global = true, env = "DIKEY_DENSE_LIMIT", default_value_t = DenseLimit::DEFAULT_SIDE as u64,
          value_parser = clap::value_parser!(u64).range(4..))]
    dense_limit: u64,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build ρ_d and report its squeezed parameters, block norms, PPT witness and bounds.
    State(StateArgs),
    /// Key lower bound and PPT upper bound, for ρ_d or explicit Bell parameters.
    Bounds(BoundsArgs),
    /// Sweep the gap region over a grid in (a, α), with γ = αa and β = 1/2 − α.
    Region(RegionArgs),
    /// Least d in [lo, hi] for which ρ_d shows a gap; fails if there is none.
    Threshold(ThresholdArgs),
    /// Apply the transpose attack to a device document.
    Attack(AttackArgs),
    /// Check the correlated/anticorrelated decomposition of the partial transpose of ρ_d.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct StateArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value_t = Unitary::Fourier)]
    unitary: Unitary,
    /// Mixing weight; defaults to 1/(√d+1).
    #[arg(long)]
    p: Option<f64>,
    /// `none` skips every matrix and reports closed-form values only.
    #[arg(long, value_enum, default_value_t = Checks::All)]
    checks: Checks,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["d", "alpha"]))]
struct BoundsArgs {
    #[arg(long)]
    d: Option<u64>,
    #[arg(long, requires_all = ["beta", "gamma", "delta"])]
    alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    beta: Option<f64>,
    #[arg(long, requires = "alpha")]
    gamma: Option<f64>,
    #[arg(long, requires = "alpha")]
    delta: Option<f64>,
    /// Copies combined by advantage distillation.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    m: u32,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 101)]
    a_grid: usize,
    #[arg(long, default_value_t = 101)]
    alpha_grid: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    lo: u64,
    #[arg(long)]
    hi: u64,
}

#[derive(Args)]
struct AttackArgs {
    /// Device document (JSON).
    #[arg(long)]
    device: PathBuf,
    /// Expected device kind; inferred from the document if omitted.
    #[arg(long, value_enum)]
    kind: Option<Kind>,
    /// Write the attacked device document here; otherwise it is embedded in the report.
    #[arg(long)]
    attacked_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value_t = Unitary::Fourier)]
    unitary: Unitary,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unitary {
    Fourier,
    Hadamard,
}

impl From<Unitary> for UnitaryKind {
    fn from(u: Unitary) -> Self {
        match u {
            Unitary::Fourier => UnitaryKind::Fourier,
            Unitary::Hadamard => UnitaryKind::Hadamard,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Checks {
    All,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    State,
    Channel,
}

#[derive(Serialize)]
struct StateReport {
    schema_version: u32,
    d: usize,
    unitary: Option<UnitaryKind>,
    p: f64,
    params: BellParams,
    block_norms: BlockNorms,
    /// Absent when no matrices were built.
    ppt: Option<PptWitness>,
    lower: f64,
    /// Only reported when the PPT upper bound applies.
    bounds: Option<BoundReport>,
}

#[derive(Serialize)]
struct PptWitness {
    ppt: bool,
    min_eigenvalue: f64,
}

#[derive(Serialize)]
struct BoundsReport {
    schema_version: u32,
    d: Option<u64>,
    params: BellParams,
    m: u32,
    #[serde(flatten)]
    report: BoundReport,
}

#[derive(Serialize)]
struct RegionReport<'a> {
    schema_version: u32,
    a_grid: usize,
    alpha_grid: usize,
    points: &'a [RegionPoint],
}

#[derive(Serialize)]
struct AttackReport {
    schema_version: u32,
    kind: Kind,
    /// Smallest eigenvalue of the state's partial transpose, or of the
    /// output-transposed Choi matrix.
    witness_min_eigenvalue: f64,
    distance: f64,
    attacked_out: Option<PathBuf>,
    attacked: Option<DeviceDocument>,
}

#[derive(Serialize)]
struct VerifyReport {
    schema_version: u32,
    d: usize,
    unitary: UnitaryKind,
    p: f64,
    holds: bool,
    #[serde(flatten)]
    report: DecompositionReport,
}

const VERIFY_TOL: f64 = 1e-9;
const PPT_P_SLACK: f64 = 1e-12;

fn check_p(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        bail!("p = {p} outside [0, 1]");
    }
    Ok(p)
}

fn rho_d_params(p: f64) -> Result<BellParams> {
    let w = (1.0 - p) / 2.0;
    Ok(BellParams::new(w, p / 2.0, w, 0.0)?)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn cmd_state(args: &StateArgs, limit: DenseLimit) -> Result<String> {
    if args.d == 0 {
        bail!("d must be at least 1");
    }
    let p = check_p(args.p.unwrap_or_else(|| default_p(args.d)))?;
    let report = match args.checks {
        Checks::None => {
            let params = rho_d_params(p)?;
            let w = params.alpha;
            let lower = k_ad_dw(&params, 1)?;
            // ρ_d is PPT exactly when p ≥ 1/(√d+1)
            let bounds = if p >= default_p(args.d) - PPT_P_SLACK {
                Some(BoundReport::new(lower, k_upper_ppt_params(&params)?))
            } else {
                None
            };
            StateReport {
                schema_version: SCHEMA_VERSION,
                d: args.d,
                unitary: None,
                p,
                params,
                block_norms: BlockNorms { a1: w, a2: w, b1: params.beta, b2: params.beta, c: w, d: 0.0 },
                ppt: None,
                lower,
                bounds,
            }
        }
        Checks::All => {
            let side = args.d.checked_mul(args.d).and_then(|n| n.checked_mul(4)).context("d too large")?;
            limit.check(side)?;
            let u = UnitaryChoice::new(args.unitary.into(), args.d)?;
            let s = make_rho_d(args.d, &u, p, limit)?;
            let params = privacy_squeeze(&s)?;
            let ppt = is_ppt(s.density_matrix(), &BOB_CUT)?;
            let lower = k_ad_dw(&params, 1)?;
            let bounds = if ppt.ppt { Some(BoundReport::new(lower, k_upper_ppt_block(&s)?)) } else { None };
            StateReport {
                schema_version: SCHEMA_VERSION,
                d: args.d,
                unitary: Some(u.kind()),
                p,
                params,
                block_norms: s.block_norms(),
                ppt: Some(PptWitness { ppt: ppt.ppt, min_eigenvalue: ppt.min_eigenvalue }),
                lower,
                bounds,
            }
        }
    };
    json(&report)
}

fn cmd_bounds(args: &BoundsArgs) -> Result<String> {
    let (params, report) = match (args.d, args.alpha) {
        (Some(d), _) => {
            if d == 0 {
                bail!("d must be at least 1");
            }
            let params = rho_d_params(1.0 / ((d as f64).sqrt() + 1.0))?;
            let report = if args.m == 1 {
                rho_d_bounds(d)?
            } else {
                let powered = bell_power_params(&params, args.m)?;
                BoundReport::new(k_ad_dw(&params, args.m)?, k_upper_ppt_params(&powered)?)
            };
            (params, report)
        }
        (None, Some(alpha)) => {
            let (beta, gamma, delta) = (args.beta.unwrap(), args.gamma.unwrap(), args.delta.unwrap());
            let params = BellParams::normalized(alpha, beta, gamma, delta)?;
            let powered = bell_power_params(&params, args.m)?;
            (params, BoundReport::new(k_ad_dw(&params, args.m)?, k_upper_ppt_params(&powered)?))
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    json(&BoundsReport { schema_version: SCHEMA_VERSION, d: args.d, params, m: args.m, report })
}

fn cmd_region(args: &RegionArgs) -> Result<String> {
    let points = region_sweep(args.a_grid, args.alpha_grid)?;
    Ok(match args.format {
        Format::Json => json(&RegionReport {
            schema_version: SCHEMA_VERSION,
            a_grid: args.a_grid,
            alpha_grid: args.alpha_grid,
            points: &points,
        })?,
        Format::Csv => {
            let mut out = String::from("a,alpha,entropy,threshold,in_gap\n");
            for pt in &points {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    pt.a, pt.alpha, pt.entropy_value, pt.threshold_value, pt.in_gap
                ));
            }
            out
        }
    })
}

fn cmd_threshold(args: &ThresholdArgs) -> Result<String> {
    if args.lo >= args.hi {
        bail!("need lo < hi, got [{}, {}]", args.lo, args.hi);
    }
    if args.lo == 0 {
        bail!("lo must be at least 1");
    }
    let d = threshold_search(rho_d_bounds, args.lo, args.hi)?;
    Ok(format!("{d}\n"))
}

fn cmd_attack(args: &AttackArgs, limit: DenseLimit) -> Result<String> {
    let text = fs::read_to_string(&args.device).with_context(|| format!("reading {}", args.device.display()))?;
    let doc = DeviceDocument::from_json(&text)?;
    // refuse oversized documents before any matrix is built
    let dims = match &doc.body {
        DeviceBody::State { dims, .. } | DeviceBody::Channel { dims, .. } => *dims,
    };
    limit.check(dims[0].saturating_mul(dims[1]))?;
    let device = doc.to_device()?;
    let found = match device {
        Device::State(_) => Kind::State,
        Device::Channel(_) => Kind::Channel,
    };
    if let Some(kind) = args.kind {
        if kind != found {
            bail!("--kind does not match the document, which describes a {} device", json_kind(found));
        }
    }
    let (attacked, witness, distance) = match &device {
        Device::State(dev) => {
            let attacked = transpose_attack(dev)?;
            let witness = is_ppt(dev.state(), &[1])?.min_eigenvalue;
            let distance = distribution_distance(&device_statistics(dev), &device_statistics(&attacked))?;
            (Device::State(attacked), witness, distance)
        }
        Device::Channel(dev) => {
            limit.check(dims[0].saturating_mul(dev.channel().d_out()))?;
            let attacked = transpose_channel_attack(dev)?;
            let witness = is_completely_copositive(dev.channel()).min_eigenvalue;
            let distance =
                distribution_distance(&device_channel_statistics(dev)?, &device_channel_statistics(&attacked)?)?;
            (Device::Channel(attacked), witness, distance)
        }
    };
    let attacked_doc = DeviceDocument::from_device(&attacked);
    let embedded = match &args.attacked_out {
        Some(path) => {
            write_file(path, &attacked_doc.to_json())?;
            None
        }
        None => Some(attacked_doc),
    };
    json(&AttackReport {
        schema_version: SCHEMA_VERSION,
        kind: found,
        witness_min_eigenvalue: witness,
        distance,
        attacked_out: args.attacked_out.clone(),
        attacked: embedded,
    })
}

fn json_kind(k: Kind) -> &'static str {
    match k {
        Kind::State => "state",
        Kind::Channel => "channel",
    }
}

fn cmd_verify(args: &VerifyArgs, limit: DenseLimit) -> Result<String> {
    if args.d == 0 {
        bail!("d must be at least 1");
    }
    let p = check_p(args.p.unwrap_or_else(|| default_p(args.d)))?;
    let side = args.d.checked_mul(args.d).and_then(|n| n.checked_mul(4)).context("d too large")?;
    limit.check(side)?;
    let u = UnitaryChoice::new(args.unitary.into(), args.d)?;
    let s = make_rho_d(args.d, &u, p, limit)?;
    let report = verify_decomposition(&s)?;
    json(&VerifyReport {
        schema_version: SCHEMA_VERSION,
        d: args.d,
        unitary: u.kind(),
        p,
        holds: report.holds(VERIFY_TOL),
        report,
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: &Cli) -> Result<String> {
    let limit = DenseLimit(usize::try_from(cli.dense_limit).context("dense limit too large")?);
    match &cli.command {
        Command::State(a) => cmd_state(a, limit),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Region(a) => cmd_region(a),
        Command::Threshold(a) => cmd_threshold(a),
        Command::Attack(a) => cmd_attack(a, limit),
        Command::Verify(a) => cmd_verify(a, limit),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|text| match &cli.output {
        Some(path) => write_file(path, &text),
        None => io::stdout().lock().write_all(text.as_bytes()).context("writing to stdout"),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
