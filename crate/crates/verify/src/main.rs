use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grushin_core::hermite::{default_grid, projection_kernel_eigsum_on, KernelRoute};
use grushin_core::io::{read_field, write_field, write_kernel};
use grushin_core::quadrature::TensorGrid;
use grushin_core::restriction::{restriction_apply, RestrictionConfig};
use grushin_core::weyl::projection_kernel_laguerre_on;
use grushin_core::Error;
use grushin_verify::report::write_outputs;
use grushin_verify::scenarios::{parse_pqr, run_scenario, MuGrid, ScenarioId, ScenarioParams, ScenarioSpec};

/// Verification harness for the Grushin spectral machinery.
#[derive(Parser)]
#[command(name = "verify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Laguerre envelope constants across k (plus the special-function suite).
    LemmaEnvelope(ScenarioArgs),
    /// Uniform boundedness of the weighted Laguerre L1 integral.
    LemmaL1(ScenarioArgs),
    /// Weyl-transform route against the eigensum for P_k(a).
    WeylIdentity(ScenarioArgs),
    /// Covariance, sup growth and L^q to L^2 ratios of P_k(a).
    ProjectionEstimate(ScenarioArgs),
    /// mu-scaling of the restriction operator.
    RestrictionScaling(ScenarioArgs),
    /// Knapp-type field, its routes and the closed form at mu = 1.
    Knapp(ScenarioArgs),
    /// Projection algebra, eigenrelations and spectral synthesis.
    Synthesis(ScenarioArgs),
    /// Write a projection kernel table to a binary file.
    ExportKernel(ExportArgs),
    /// Apply the restriction operator to a stored field.
    ApplyRestriction(ApplyArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    d1: Option<usize>,
    #[arg(long)]
    d2: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    /// `a:b:n`, n geometrically spaced values of mu.
    #[arg(long, value_parser = parse_mu_grid)]
    mu_grid: Option<MuGrid>,
    /// `p,q,r`; fractions and `inf` are accepted.
    #[arg(long, value_parser = parse_pqr_arg)]
    pqr: Option<[f64; 3]>,
    /// Points per x-axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a_values: Option<Vec<f64>>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Directory for `<scenario>.report.json` and `<scenario>.data.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON parameter file; its fields override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RouteArg {
    Eigensum,
    Laguerre,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, default_value_t = 1)]
    d1: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, value_enum, default_value = "eigensum")]
    route: RouteArg,
    /// Points per axis; the default grid follows the sampling policy.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    kmax: usize,
    #[arg(long)]
    support_tol: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_mu_grid(s: &str) -> Result<MuGrid, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pqr_arg(s: &str) -> Result<[f64; 3], String> {
    parse_pqr(s).map_err(|e| e.to_string())
}

const USAGE: u8 = 2;
const FAILED: u8 = 1;

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(USAGE)
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Io(_) | Error::QuadratureFailure(_) => {
            eprintln!("error: {e}");
            ExitCode::from(FAILED)
        }
        _ => usage(e),
    }
}

fn params_from(args: ScenarioArgs) -> Result<ScenarioParams, Error> {
    let flags = ScenarioParams {
        d1: args.d1,
        d2: args.d2,
        kmax: args.kmax,
        mu_grid: args.mu_grid,
        pqr: args.pqr,
        grid: args.grid,
        seed: args.seed,
        k_values: args.k_values,
        a_values: args.a_values,
        deltas: None,
        gamma: args.gamma,
        trials: args.trials,
        out: args.out,
    };
    match args.config {
        None => Ok(flags),
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
            let file: ScenarioParams =
                serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {e}", path.display())))?;
            Ok(flags.overlay(file))
        }
    }
}

fn scenario(id: ScenarioId, args: ScenarioArgs) -> ExitCode {
    let params = match params_from(args) {
        Ok(p) => p,
        Err(e) => return usage(e),
    };
    let out = params.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let spec = ScenarioSpec { scenario: id, params };
    let (report, data) = match run_scenario(&spec) {
        Ok(r) => r,
        Err(e) => return exit_for(&e),
    };
    for c in &report.checks {
        let tag = if c.pass { "pass" } else { "FAIL" };
        let kind = if c.primary { "" } else { " (supplementary)" };
        println!("[{tag}] {}{kind}", c.describe());
    }
    match write_outputs(&out, &report, &data) {
        Ok((json, csv)) => println!("{}: {:?}; wrote {} and {}", id, report.verdict, json.display(), csv.display()),
        Err(e) => return exit_for(&e),
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(FAILED)
    }
}

fn export_kernel(args: ExportArgs) -> Result<(), Error> {
    let grid = match args.grid {
        Some(n) => {
            let half = ((2 * args.k + args.d1 + 4) as f64 / args.a.abs()).sqrt();
            TensorGrid::uniform(args.d1, n, half)?
        }
        None => default_grid(args.d1, args.k, args.a)?,
    };
    let kernel = match args.route {
        RouteArg::Eigensum => projection_kernel_eigsum_on(args.k, args.a, &grid)?,
        RouteArg::Laguerre => projection_kernel_laguerre_on(args.k, args.a, &grid)?,
    };
    write_kernel(&args.out, &kernel)?;
    let route = match kernel.route {
        KernelRoute::Eigensum => "eigensum",
        KernelRoute::Laguerre => "laguerre",
    };
    println!("wrote {route} kernel k = {}, a = {}, {} points to {}", args.k, args.a, kernel.n(), args.out.display());
    Ok(())
}

fn apply_restriction(args: ApplyArgs) -> Result<(), Error> {
    let f = read_field(Path::new(&args.input))?;
    let mut cfg = RestrictionConfig::new(args.mu, args.kmax);
    if let Some(t) = args.support_tol {
        cfg.support_tol = t;
    }
    let out = restriction_apply(&f, &cfg)?;
    write_field(&args.out, &out.field)?;
    println!("level norms {:?}; tail estimate {:e}; {} sphere points", out.level_norms, out.tail_estimate, out.sphere_points);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = |r: Result<(), Error>| match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_for(&e),
    };
    match cli.command {
        Command::LemmaEnvelope(a) => scenario(ScenarioId::LemmaEnvelope, a),
        Command::LemmaL1(a) => scenario(ScenarioId::LemmaL1, a),
        Command::WeylIdentity(a) => scenario(ScenarioId::WeylIdentity, a),
        Command::ProjectionEstimate(a) => scenario(ScenarioId::ProjectionEstimate, a),
        Command::RestrictionScaling(a) => scenario(ScenarioId::RestrictionScaling, a),
        Command::Knapp(a) => scenario(ScenarioId::Knapp, a),
        Command::Synthesis(a) => scenario(ScenarioId::Synthesis, a),
        Command::ExportKernel(a) => run(export_kernel(a)),
        Command::ApplyRestriction(a) => run(apply_restriction(a)),
    }
}
