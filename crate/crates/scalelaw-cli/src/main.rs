//! `scalelaw`: measurement tables in, fitted laws and design answers out.
//!
//! Every subcommand writes its artifacts atomically under `--out` and prints
//! either the JSON report or the plot-ready CSV on stdout (`--format`).
//! Identical arguments, input files and seed give byte-identical artifacts.
//! Exit codes: 0 success, 2 bad input, 3 ill-posed fit, 4 infeasible design
//! question; every error line starts with a machine-parsable `code:` prefix.

use clap::{Args, Parser, Subcommand, ValueEnum};
use scalelaw::forms::Eps0Mode;
use scalelaw::synth::NoiseModel;
use std::path::PathBuf;
use std::process::ExitCode;

mod run;

#[derive(Parser)]
#[command(
    name = "scalelaw",
    version,
    about = "Fit, cross-validate, extrapolate and exploit generalization-error scaling laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Print the JSON report (same bytes as report.json).
    Json,
    /// Print the plot-ready CSV table instead.
    Csv,
}

/// How pruning tables are subsampled in stability runs.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMode {
    /// Whole (depth, width, data) curves with all their densities.
    #[value(alias = "configurations")]
    Curves,
    /// Individual measurements, each one trained network.
    #[value(alias = "networks")]
    Points,
}

#[derive(Args)]
struct OutArgs {
    /// Directory artifacts are written to (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// What to print on stdout.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct FitArgs {
    /// Root seed; restart initializations derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random restarts of the local optimizer.
    #[arg(long, default_value_t = 100)]
    restarts: usize,
}

fn parse_eps0(s: &str) -> Result<Eps0Mode, String> {
    if s.eq_ignore_ascii_case("free") {
        return Ok(Eps0Mode::FreeParameter);
    }
    if let Some(k) = s.strip_prefix("fixed:") {
        let classes: u32 = k
            .parse()
            .map_err(|_| format!("expected a class count after 'fixed:', got '{k}'"))?;
        if classes < 2 {
            return Err("class count must be at least 2".into());
        }
        return Ok(Eps0Mode::FixedFromClasses { classes });
    }
    Err(format!("expected 'free' or 'fixed:<classes>', got '{s}'"))
}

fn parse_noise(s: &str) -> Result<NoiseModel, String> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or_default();
    let mut num = |what: &str| -> Result<f64, String> {
        parts
            .next()
            .ok_or_else(|| format!("{kind} noise needs {what}"))?
            .parse::<f64>()
            .map_err(|e| format!("bad {what}: {e}"))
    };
    let model = match kind {
        "none" => NoiseModel::None,
        "lognormal" => NoiseModel::Lognormal { sigma: num("a relative std, lognormal:<sigma>")? },
        "dip" => NoiseModel::Dip {
            depth: num("a depth, dip:<depth>:<sigma>")?,
            sigma: num("a relative std, dip:<depth>:<sigma>")?,
        },
        other => return Err(format!("unknown noise model '{other}'; use none, lognormal:<sigma>, or dip:<depth>:<sigma>")),
    };
    if parts.next().is_some() {
        return Err(format!("trailing fields in noise spec '{s}'"));
    }
    Ok(model)
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got '{s}'"))?;
    let lo: f64 = lo.parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

#[derive(Subcommand)]
enum Command {
    /// Fit the dense landscape form to an m,n,error table.
    FitDense {
        input: PathBuf,
        /// Random-guess level: free (fitted) or fixed:<classes>.
        #[arg(long, value_parser = parse_eps0, default_value = "free")]
        eps0: Eps0Mode,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit the pruning transition of a single (depth, width, data) curve.
    FitPrune {
        input: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit the joint pruning form across depth, width, density and data.
    FitPruneJoint {
        input: PathBuf,
        /// Fix the depth exponent at 0 instead of fitting it.
        #[arg(long)]
        fix_phi: bool,
        /// Fix the width exponent at 0 instead of fitting it.
        #[arg(long)]
        fix_psi: bool,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// K-fold cross-validation; the table kind is sniffed from the header.
    Cv {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        /// Random-guess level for dense tables.
        #[arg(long, value_parser = parse_eps0, default_value = "free")]
        eps0: Eps0Mode,
        #[arg(long)]
        fix_phi: bool,
        #[arg(long)]
        fix_psi: bool,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Fit a small-scale region and predict the held-out large-scale one.
    Extrapolate {
        input: PathBuf,
        /// Dense tables: training keeps m at or below every cut, predictions
        /// cover points strictly larger in both axes; lists sweep all pairs.
        #[arg(long, value_delimiter = ',')]
        m_cut: Option<Vec<f64>>,
        /// Dense tables: training keeps n at or below every cut.
        #[arg(long, value_delimiter = ',')]
        n_cut: Option<Vec<f64>>,
        /// Pruning tables: train on networks with depth at or below this cut.
        #[arg(long)]
        l_cut: Option<f64>,
        /// Pruning tables: train on networks with width scale at or below
        /// this cut. Together with --l-cut this picks the small corner of the
        /// family; everything outside it is predicted at all densities.
        #[arg(long)]
        w_cut: Option<f64>,
        #[arg(long, value_parser = parse_eps0, default_value = "free")]
        eps0: Eps0Mode,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Answer design questions from a published preset law.
    #[command(subcommand)]
    Design(DesignCmd),
    /// Generate synthetic measurement tables from a known law.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Fit-quality spread under repeated subsampling of the table.
    Stability {
        input: PathBuf,
        /// Subsample sizes to test, e.g. 5,10,15,25,40.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 30)]
        repeats: usize,
        /// Sampling unit for pruning tables (dense rows are always configurations).
        #[arg(long, value_enum, default_value_t = SampleMode::Curves)]
        mode: SampleMode,
        #[arg(long, value_parser = parse_eps0, default_value = "free")]
        eps0: Eps0Mode,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Print the published parameter catalog.
    Presets {
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

/// Inputs to the design solvers are raw units (parameter and example
/// counts) converted through the preset's base sizes; `--fractional`
/// switches to the law's native units where m = n = 1 is the base
/// configuration.
#[derive(Subcommand)]
enum DesignCmd {
    /// Largest model worth training against a fixed dataset.
    MaxModel {
        #[arg(long)]
        preset: String,
        /// Dataset budget (examples; with --fractional, a fraction).
        #[arg(long)]
        n_lim: f64,
        /// Diminishing-returns threshold: data term = t x model term.
        #[arg(long, alias = "T", default_value_t = 10.0)]
        t: f64,
        #[arg(long)]
        fractional: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Largest dataset worth collecting for a fixed model.
    MaxData {
        #[arg(long)]
        preset: String,
        /// Model budget (parameters; with --fractional, a fraction).
        #[arg(long)]
        m_lim: f64,
        #[arg(long, alias = "T", default_value_t = 10.0)]
        t: f64,
        #[arg(long)]
        fractional: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cheapest (m, n) under compute proportional to m*n.
    OptimalPair {
        #[arg(long)]
        preset: String,
        /// Target core error above the irreducible floor.
        #[arg(long)]
        excess: f64,
        #[arg(long)]
        fractional: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Iso-error contour: the n reaching the target at each model size.
    Contour {
        #[arg(long)]
        preset: String,
        /// Error level to hold, in the preset's units.
        #[arg(long)]
        target: f64,
        #[arg(long)]
        m_min: f64,
        #[arg(long)]
        m_max: f64,
        /// Geometric sweep resolution between m-min and m-max.
        #[arg(long, default_value_t = 25)]
        points: usize,
        /// Closed-form power-law-region approximation instead of bisection.
        #[arg(long)]
        fast: bool,
        #[arg(long)]
        fractional: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cheapest pruned configuration (l * w^2 * d) meeting an error target.
    PruneMin {
        #[arg(long)]
        preset: String,
        /// Joint pruning parameters: eps_up,gamma,p_prime,phi,psi.
        #[arg(long, value_delimiter = ',', required = true)]
        joint: Vec<f64>,
        /// Dataset size (examples; with --fractional, a fraction). Default: full dataset.
        #[arg(long)]
        n: Option<f64>,
        /// One target gives a single answer; several trace the envelope.
        #[arg(long, value_delimiter = ',', required = true)]
        target: Vec<f64>,
        /// Depth of the base (m = 1) network.
        #[arg(long, default_value_t = 20.0)]
        base_depth: f64,
        /// Width scale of the base network.
        #[arg(long, default_value_t = 1.0)]
        base_width: f64,
        /// Depth search range, lo:hi.
        #[arg(long, value_parser = parse_range, default_value = "4:64")]
        l_range: (f64, f64),
        /// Width-scale search range, lo:hi.
        #[arg(long, value_parser = parse_range, default_value = "0.25:4")]
        w_range: (f64, f64),
        /// Coarse grid resolution per axis before refinement.
        #[arg(long, default_value_t = 13)]
        coarse: usize,
        #[arg(long)]
        fractional: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Dense m,n,error table from a preset or explicit truth.
    Dense {
        #[arg(long)]
        preset: Option<String>,
        /// Explicit truth: alpha,beta,b,c_inf,eta,eps0 (overrides --preset).
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<f64>>,
        /// Model-size fractions; default is 4^-k for k below --levels.
        #[arg(long, value_delimiter = ',')]
        m_scales: Option<Vec<f64>>,
        /// Dataset fractions; default is 2^-k for k below --levels.
        #[arg(long, value_delimiter = ',')]
        n_scales: Option<Vec<f64>>,
        #[arg(long, default_value_t = 7)]
        levels: u32,
        #[arg(long, default_value_t = 1)]
        replicates: u32,
        /// none, lognormal:<sigma>, or dip:<depth>:<sigma> (pruning only).
        #[arg(long, value_parser = parse_noise, default_value = "none")]
        noise: NoiseModel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory the table is written to.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Pruning family table; anchors come from the dense law.
    Prune {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, value_delimiter = ',')]
        truth: Option<Vec<f64>>,
        /// Joint pruning truth: eps_up,gamma,p_prime,phi,psi.
        #[arg(long, value_delimiter = ',', required = true)]
        joint: Vec<f64>,
        #[arg(long, default_value_t = 20.0)]
        base_depth: f64,
        #[arg(long, default_value_t = 1.0)]
        base_width: f64,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
        depths: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        widths: Vec<f64>,
        /// Dataset fractions.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        ns: Vec<f64>,
        /// Density ladder length: d = 0.8^i for i = 0..=ladder.
        #[arg(long, default_value_t = 27)]
        ladder: u32,
        #[arg(long, default_value_t = 1)]
        replicates: u32,
        #[arg(long, value_parser = parse_noise, default_value = "none")]
        noise: NoiseModel,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("SCALELAW_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => scalelaw::exec::limit_threads(n),
            _ => {
                eprintln!("code:invalid: SCALELAW_THREADS must be a positive integer, got '{v}'");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    match run::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("code:{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
