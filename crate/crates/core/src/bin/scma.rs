use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use scma::channel::{ChannelMode, SnrConvention};
use scma::codebook::{Design, PhaseRule};
use scma::detector::{complexity_report, Engine, DEFAULT_MAX_ITER};
use scma::io::{read_system, write_system};
use scma::simulator::{
    compare_power_variation, compare_shaping, parse_snr_range, run_sweep, write_comparison_csv,
    write_csv, CompareOptions, DetectorSettings, SimConfig, StoppingRule, POWER_VARIATION_GRID,
    SHAPING_GRID,
};
use scma::{Result, ScmaError};

#[derive(Parser)]
#[command(name = "scma", version, about = "SCMA codebook design and link-level simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scheme {
    T16,
    #[value(name = "4pt")]
    FourPoint,
    Lowproj,
    Lds,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phases {
    Lds,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Awgn,
    Downlink,
    Uplink,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    PerLayer,
    Total,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Mpa,
    MpaCollapsed,
    Split,
    Map,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    PowerVariation,
    Shaping,
}

#[derive(Subcommand)]
enum Command {
    /// Build a system and write it as JSON.
    Design {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        j: usize,
        #[arg(long, default_value_t = 4)]
        m: usize,
        #[arg(long, value_enum, default_value = "4pt")]
        scheme: Scheme,
        /// Layer phase rule.
        #[arg(long, value_enum, default_value = "lds")]
        phases: Phases,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print constellation metrics and detector complexity of a system file.
    Analyze { system: PathBuf },
    /// Run an SNR sweep and write CSV.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long, value_enum, default_value = "awgn")]
        channel: ChannelArg,
        /// `a:b:step` in dB, inclusive.
        #[arg(long, default_value = "0:10:2")]
        snr: String,
        #[arg(long = "snr-conv", value_enum, default_value = "per-layer")]
        snr_conv: ConventionArg,
        #[arg(long, value_enum, default_value = "mpa")]
        engine: EngineArg,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        iters: usize,
        #[arg(long, default_value_t = 0.0)]
        damping: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "min-errors", default_value_t = 100)]
        min_errors: u64,
        #[arg(long = "max-trials", default_value_t = 1_000_000)]
        max_trials: u64,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        /// Record wall time per point in the `seconds` column.
        #[arg(long)]
        timing: bool,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a paired SCMA vs LDS experiment and write CSV.
    Compare {
        #[arg(long, value_enum)]
        experiment: Experiment,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `a:b:step` in dB; defaults depend on the experiment.
        #[arg(long)]
        snr: Option<String>,
        /// Layer counts for the power-variation experiment.
        #[arg(long, value_delimiter = ',', default_value = "2,4,6")]
        layers: Vec<usize>,
        #[arg(long = "min-errors", default_value_t = 100)]
        min_errors: u64,
        #[arg(long = "max-trials", default_value_t = 1_000_000)]
        max_trials: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
        iters: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn design_of(scheme: Scheme, m: usize) -> Result<Design> {
    let (design, expected) = match scheme {
        Scheme::T16 => (Design::ScmaT16, 16),
        Scheme::FourPoint => (Design::Scma4pt, 4),
        Scheme::Lowproj => (Design::ScmaLowProj, 16),
        Scheme::Lds => return Ok(Design::LdsQam(m)),
    };
    if m != expected {
        return Err(ScmaError::Parameter(format!("scheme {} has M = {expected}, not {m}", design.name())));
    }
    Ok(design)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn analyze(path: &Path) -> Result<()> {
    let s = read_system(path)?;
    let m = s.mother().metrics();
    let fmt_list = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
    println!("design            {}", s.design());
    println!("K N J M           {} {} {} {}", s.resources(), s.graph().weight(), s.num_layers(), s.order());
    println!("overloading       {:.4}", s.graph().overloading());
    println!("d_e_min           {:.6}", m.d_e_min);
    println!("d_p_min           {:.6}", m.d_p_min);
    println!(
        "projections       {}",
        m.projections_per_dim.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    );
    println!("dim_power         {}", fmt_list(&m.dim_power));
    println!("dim_power_spread  {:.6}", m.dim_power_spread);
    println!();
    println!("resource  degree  plain  collapsed  split");
    for (k, c) in complexity_report(&s).resources.iter().enumerate() {
        let split = c.split.map_or("-".to_string(), |(a, b)| format!("{a}+{b}"));
        println!("{k:>8}  {:>6}  {:>5}  {:>9}  {split}", c.degree, c.plain, c.collapsed);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design { k, n, j, m, scheme, phases, out } => {
            let rule = match phases {
                Phases::Lds => PhaseRule::Lds,
                Phases::Unit => PhaseRule::Unit,
            };
            let system = design_of(scheme, m)?.build(k, n, j, rule)?;
            write_system(&system, &out)
        }
        Command::Analyze { system } => analyze(&system),
        Command::Simulate {
            system,
            channel,
            snr,
            snr_conv,
            engine,
            iters,
            damping,
            seed,
            min_errors,
            max_trials,
            workers,
            timing,
            out,
        } => {
            let system = read_system(&system)?;
            let config = SimConfig {
                channel: match channel {
                    ChannelArg::Awgn => ChannelMode::Awgn,
                    ChannelArg::Downlink => ChannelMode::Downlink,
                    ChannelArg::Uplink => ChannelMode::UplinkRayleigh,
                },
                convention: match snr_conv {
                    ConventionArg::PerLayer => SnrConvention::PerLayer,
                    ConventionArg::Total => SnrConvention::Total,
                },
                snr_grid: parse_snr_range(&snr)?,
                seed,
                stopping: StoppingRule { min_errors, max_trials },
                detector: DetectorSettings {
                    engine: match engine {
                        EngineArg::Mpa => Engine::Mpa,
                        EngineArg::MpaCollapsed => Engine::MpaCollapsed,
                        EngineArg::Split => Engine::Split,
                        EngineArg::Map => Engine::MapOracle,
                    },
                    max_iter: iters,
                    damping,
                },
                workers,
                record_timing: timing,
            };
            let result = run_sweep(&system, &config)?;
            write_csv(&result, output(out.as_deref())?)
        }
        Command::Compare {
            experiment,
            seed,
            snr,
            layers,
            min_errors,
            max_trials,
            iters,
            workers,
            out,
        } => {
            let opts = CompareOptions {
                stopping: StoppingRule { min_errors, max_trials },
                max_iter: iters,
                workers,
            };
            let grid = snr.as_deref().map(parse_snr_range).transpose()?;
            let cmp = match experiment {
                Experiment::PowerVariation => compare_power_variation(
                    grid.as_deref().unwrap_or(&POWER_VARIATION_GRID),
                    &layers,
                    seed,
                    &opts,
                )?,
                Experiment::Shaping => compare_shaping(grid.as_deref().unwrap_or(&SHAPING_GRID), seed, &opts)?,
            };
            write_comparison_csv(&cmp, output(out.as_deref())?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
