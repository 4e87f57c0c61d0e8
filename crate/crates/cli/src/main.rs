//! Command-line front end for the inequality lab.
//!
//! Exit codes: 0 all checks passed, 1 some check failed (listed on stderr),
//! 2 invalid configuration, 3 numerical or I/O failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Failure;
use config::{load, ConfigError, OneOrMany, RecoverFile, SettingKind, SharpnessFile, StechkinFile, VerifyFile};

#[derive(Parser)]
#[command(name = "lkcharge", version, about = "Landau-Kolmogorov inequalities for charges: checks, curves, recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command. Each overrides the config file.
#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// TOML config file for this command.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution per axis.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the inequalities on a family of inputs.
    Verify {
        #[command(flatten)]
        common: Common,
        /// extremal-charge, zero-charge, corrupted-extremal, density, extremal-mixed or trig-mixed.
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Scale; repeat for several.
        #[arg(long)]
        h: Vec<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        terms: Option<usize>,
        #[arg(long)]
        equality_tol: Option<f64>,
        #[arg(long)]
        slack_tol: Option<f64>,
    },
    /// Sweep the best approximation error and the modulus of continuity.
    StechkinCurve {
        #[command(flatten)]
        common: Common,
        /// charge or mixed.
        #[arg(long)]
        setting: Option<String>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n_min: Option<f64>,
        #[arg(long)]
        n_max: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        delta_min: Option<f64>,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        delta_points: Option<usize>,
        /// Scale of an extremal run; repeat for several.
        #[arg(long)]
        attained_h: Vec<f64>,
    },
    /// Recover the derivative from perturbed charges over a delta grid.
    Recover {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Perturbation size; repeat for several.
        #[arg(long)]
        delta: Vec<f64>,
        #[arg(long)]
        hug_tol: Option<f64>,
        /// Skip the per-delta field dumps.
        #[arg(long)]
        no_dump: bool,
    },
    /// Exploratory search for near-extremal functions of the mixed inequality.
    SharpnessSearch {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
    },
}

fn list(v: Vec<f64>) -> Option<OneOrMany> {
    (!v.is_empty()).then_some(OneOrMany::Many(v))
}

fn or<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

fn run(cli: Cli) -> anyhow::Result<Vec<Failure>> {
    match cli.command {
        Command::Verify { common, case, d, m, h, count, terms, equality_tol, slack_tol } => {
            let f: VerifyFile = load(common.config.as_deref(), "verify")?;
            let cfg = VerifyFile {
                case: or(case, f.case),
                d: or(d, f.d),
                m: or(m, f.m),
                h: or(list(h), f.h),
                grid: or(common.grid, f.grid),
                count: or(count, f.count),
                terms: or(terms, f.terms),
                equality_tol: or(equality_tol, f.equality_tol),
                slack_tol: or(slack_tol, f.slack_tol),
                seed: or(common.seed, f.seed),
                out: or(common.out, f.out),
                ..f
            }
            .finish()?;
            commands::verify::run(&cfg)
        }
        Command::StechkinCurve {
            common,
            setting,
            d,
            m,
            n_min,
            n_max,
            n_points,
            delta_min,
            delta_max,
            delta_points,
            attained_h,
        } => {
            let f: StechkinFile = load(common.config.as_deref(), "stechkin-curve")?;
            let setting = match setting.as_deref() {
                None => f.setting,
                Some("charge") => Some(SettingKind::Charge),
                Some("mixed") => Some(SettingKind::Mixed),
                Some(other) => return Err(ConfigError(format!("unknown setting {other:?}; expected charge or mixed")).into()),
            };
            let cfg = StechkinFile {
                setting,
                d: or(d, f.d),
                m: or(m, f.m),
                n_min: or(n_min, f.n_min),
                n_max: or(n_max, f.n_max),
                n_points: or(n_points, f.n_points),
                delta_min: or(delta_min, f.delta_min),
                delta_max: or(delta_max, f.delta_max),
                delta_points: or(delta_points, f.delta_points),
                attained_h: or(list(attained_h), f.attained_h),
                grid: or(common.grid, f.grid),
                seed: or(common.seed, f.seed),
                out: or(common.out, f.out),
                ..f
            }
            .finish()?;
            commands::stechkin::run(&cfg)
        }
        Command::Recover { common, d, m, delta, hug_tol, no_dump } => {
            let f: RecoverFile = load(common.config.as_deref(), "recover")?;
            let cfg = RecoverFile {
                d: or(d, f.d),
                m: or(m, f.m),
                deltas: or(list(delta), f.deltas),
                grid: or(common.grid, f.grid),
                hug_tol: or(hug_tol, f.hug_tol),
                dump_fields: if no_dump { Some(false) } else { f.dump_fields },
                seed: or(common.seed, f.seed),
                out: or(common.out, f.out),
                ..f
            }
            .finish()?;
            commands::recover::run(&cfg)
        }
        Command::SharpnessSearch { common, d, m, budget } => {
            let f: SharpnessFile = load(common.config.as_deref(), "sharpness-search")?;
            if common.grid.is_some() {
                return Err(ConfigError("sharpness-search is grid-free; --grid does not apply".into()).into());
            }
            let cfg = SharpnessFile {
                d: or(d, f.d),
                m: or(m, f.m),
                budget: or(budget, f.budget),
                seed: or(common.seed, f.seed),
                out: or(common.out, f.out),
            }
            .finish()?;
            commands::sharpness::run(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(failures) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(failures) => {
            for f in &failures {
                eprintln!("FAIL\t{}\t{}", f.case, f.reason);
            }
            ExitCode::from(1)
        }
        Err(e) if e.downcast_ref::<ConfigError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
