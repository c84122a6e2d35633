use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tvdisc::commands::{self, EpsArgs, Output, ValItArgs};
use tvdisc::formats::{parse_discount, parse_dynamic_policy, parse_instance, Instance};
use tvdisc::report::to_text;
use tvdisc_core::reduction::Method;
use tvdisc_core::{BigUint, Settings};

/// Equilibria of MDPs whose discount factor changes over time.
#[derive(Parser)]
#[command(name = "tvdisc", version)]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(flatten)]
    tuning: Tuning,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Tuning {
    /// Float-path tolerance under which Q-values count as tied.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tie_tolerance: f64,
    /// Largest horizon materialized step by step.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    horizon_cap: usize,
    /// Largest number of static policies enumerated.
    #[arg(long, global = true, default_value_t = 10_000)]
    enumeration_cap: usize,
    /// Players past the switch time checked one by one.
    #[arg(long, global = true, default_value_t = 5)]
    tail_extra: usize,
}

#[derive(Args)]
struct Model {
    /// Instance file (JSON).
    instance: PathBuf,
    /// Discount file replacing the instance's "discount" entry.
    #[arg(long)]
    discount: Option<PathBuf>,
    /// Use exact rational arithmetic even without "p/q" inputs.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct ValItFlags {
    /// Constant discount of the finite-horizon problem.
    #[arg(long)]
    gamma: String,
    /// Horizon T (any size; materialized up to the horizon cap).
    #[arg(long)]
    horizon: String,
    /// Flagged action at the start state.
    #[arg(long)]
    action: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Brute,
    Exhaustive,
    Constructed,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal static policy for a constant discount.
    Solve {
        #[command(flatten)]
        model: Model,
        /// Constant discount factor.
        #[arg(long)]
        gamma: String,
    },
    /// Exact subgame-perfect equilibrium through the degenerate set.
    Spe {
        #[command(flatten)]
        model: Model,
        /// Write the dynamic policy here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Epsilon-equilibrium for a discount whose limit stays below 1 - c.
    EpsSpe {
        #[command(flatten)]
        model: Model,
        /// Target epsilon.
        #[arg(long)]
        eps: String,
        /// Margin with g(t) <= 1 - c for all t (required unless --unknown-gap).
        #[arg(long)]
        c: Option<String>,
        /// Choose the tail relative to the separation of degenerate points.
        #[arg(long)]
        unknown_gap: bool,
        /// Separation D, as a rational or as 2^k.
        #[arg(long, requires = "unknown_gap")]
        separation: Option<String>,
        /// Write the dynamic policy here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Degenerate discount factors with isolating intervals.
    GammaSet {
        #[command(flatten)]
        model: Model,
        /// Refine intervals to at most this width.
        #[arg(long, default_value = "1/1000000")]
        width: String,
    },
    /// One-shot-deviation check of a dynamic policy.
    Verify {
        #[command(flatten)]
        model: Model,
        /// Dynamic policy file (JSON).
        policy: PathBuf,
        /// Tolerated deviation gain.
        #[arg(long, default_value = "0")]
        eps: String,
        /// Compute the degenerate set to certify players past the horizon.
        #[arg(long)]
        gamma_set: bool,
    },
    /// Build the down-step gadget for a finite-horizon instance.
    Reduce {
        /// Instance file (JSON).
        instance: PathBuf,
        #[command(flatten)]
        valit: ValItFlags,
        /// Write the gadget here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Is the flagged action optimal at step 0 of finite-horizon value iteration?
    Valit {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        valit: ValItFlags,
    },
    /// Does the gadget of a finite-horizon instance admit an equilibrium
    /// starting with the flagged action?
    SpeStart {
        /// Instance file (JSON).
        instance: PathBuf,
        #[command(flatten)]
        valit: ValItFlags,
        /// How to decide existence.
        #[arg(long, value_enum, default_value_t = MethodArg::Exhaustive)]
        method: MethodArg,
    },
    /// Worked demonstrations.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Preference reversal between a smaller-sooner and a larger-later reward.
    Reversal,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load(path: &Path, discount: Option<&Path>) -> Result<Instance> {
    let mut instance = parse_instance(&read(path)?).with_context(|| format!("{}", path.display()))?;
    if let Some(d) = discount {
        let (g, exact) = parse_discount(&read(d)?).with_context(|| format!("{}", d.display()))?;
        instance.discount = Some(g);
        instance.exact |= exact;
    }
    Ok(instance)
}

fn load_model(model: &Model) -> Result<(Instance, bool)> {
    let instance = load(&model.instance, model.discount.as_deref())?;
    let exact = model.exact || instance.exact;
    Ok((instance, exact))
}

fn valit_args(flags: &ValItFlags) -> Result<ValItArgs> {
    Ok(ValItArgs {
        gamma: commands::rational(&flags.gamma, "--gamma")?,
        horizon: flags.horizon.trim().parse::<BigUint>().ok().context("--horizon must be a nonnegative integer")?,
        action: flags.action.clone(),
    })
}

fn run(cli: Cli) -> Result<Output> {
    let t = &cli.tuning;
    let settings = Settings {
        tie_tolerance: t.tie_tolerance,
        horizon_cap: t.horizon_cap,
        enumeration_cap: t.enumeration_cap,
        tail_extra: t.tail_extra,
        ..Settings::default()
    };
    match cli.command {
        Command::Solve { model, gamma } => {
            let (instance, exact) = load_model(&model)?;
            let exact = exact || gamma.contains('/');
            commands::solve(&instance, &commands::rational(&gamma, "--gamma")?, exact, &settings)
        }
        Command::Spe { model, output } => {
            let (instance, exact) = load_model(&model)?;
            commands::spe(&instance, exact, output, &settings)
        }
        Command::EpsSpe { model, eps, c, unknown_gap, separation, output } => {
            let (instance, exact) = load_model(&model)?;
            let args = EpsArgs {
                eps: commands::rational(&eps, "--eps")?,
                c: c.as_deref().map(|c| commands::rational(c, "--c")).transpose()?,
                unknown_gap,
                separation: separation.as_deref().map(commands::separation).transpose()?,
            };
            commands::eps_spe(&instance, &args, exact, output, &settings)
        }
        Command::GammaSet { model, width } => {
            let (instance, _) = load_model(&model)?;
            commands::gamma_set(&instance, &commands::rational(&width, "--width")?, &settings)
        }
        Command::Verify { model, policy, eps, gamma_set } => {
            let (instance, exact) = load_model(&model)?;
            let dp = parse_dynamic_policy(&read(&policy)?, &instance.mdp)
                .with_context(|| format!("{}", policy.display()))?;
            let eps = commands::rational(&eps, "--eps")?;
            commands::verify(&instance, &dp, &eps, gamma_set, exact, &settings)
        }
        Command::Reduce { instance, valit, output } => {
            commands::reduce(&load(&instance, None)?, &valit_args(&valit)?, output)
        }
        Command::Valit { model, valit } => {
            let (instance, exact) = load_model(&model)?;
            commands::valit(&instance, &valit_args(&valit)?, exact || valit.gamma.contains('/'), &settings)
        }
        Command::SpeStart { instance, valit, method } => {
            let method = match method {
                MethodArg::Brute => Method::Brute,
                MethodArg::Exhaustive => Method::Exhaustive,
                MethodArg::Constructed => Method::Constructed,
            };
            commands::spe_start(&load(&instance, None)?, &valit_args(&valit)?, method, &settings)
        }
        Command::Demo { which: Demo::Reversal } => commands::demo_reversal(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli) {
        Ok(out) => {
            for (path, text) in &out.files {
                if let Err(e) = fs::write(path, text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            match (&out.raw, format) {
                (Some(raw), _) => print!("{raw}"),
                (None, Format::Json) => print!("{}", tvdisc::formats::to_json(&out.report)),
                (None, Format::Text) => print!("{}", to_text(&out.report)),
            }
            ExitCode::from(if out.verdict { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
