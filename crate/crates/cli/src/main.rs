use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use aixilab_core::approx::{fraction, parse_rational, DEFAULT_K_MAX};
use aixilab_core::env::spec::EnvSpec;
use aixilab_core::harness::{check_cmd, compare_prop41, simulate, value_cmd, Outcome, RunSpec};
use aixilab_core::mixture::ClassSpec;
use aixilab_core::{Discount, EnvRef, Error, History, MixtureEnv, ValueQuery, Variant};
use clap::{Args, Parser, Subcommand};

/// Exact expectimax agents for semimeasure environments.
#[derive(Parser)]
#[command(name = "aixilab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that an environment is a chronological semimeasure.
    Check {
        #[arg(long)]
        env: PathBuf,
        /// Prefix length to check up to.
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Optimal value of a history (or of a history and a pending action).
    Value {
        #[command(flatten)]
        model: ModelArgs,
        /// Steps as `a:e` pairs, optionally ending in a bare pending action, e.g. `0:1,1:0,1`.
        #[arg(long, default_value = "")]
        history: String,
        #[arg(long, default_value = "iterative")]
        variant: String,
        #[arg(long, default_value = "geometric:1/2")]
        discount: String,
        /// Horizon to expand to; defaults to the finite lifetime or the effective horizon.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: u32,
        /// Also print the unnormalized numerator and denominator.
        #[arg(long)]
        debug: bool,
    },
    /// Run an agent against an environment.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        /// `exact`, `eps:1/K` or `schedule:harmonic|dyadic|constant:1/K`.
        #[arg(long, default_value = "exact")]
        agent: String,
        /// Comma-separated action preference, most preferred first.
        #[arg(long)]
        tie_order: Option<String>,
        #[arg(long, default_value = "recursive")]
        variant: String,
        #[arg(long, default_value = "geometric:1/2")]
        discount: String,
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: u32,
        #[arg(long)]
        horizon: Option<usize>,
        /// Write the JSON-lines trace here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Both exact agents on the environment that ends after action 0.
    CompareProp41 {
        #[arg(long, default_value = "1/4")]
        eps_r: String,
        #[arg(long, default_value = "geometric:1/2")]
        discount: String,
        #[arg(long, default_value_t = 3)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        kmax: u32,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long)]
    env: PathBuf,
    /// Class file; the agent plans in the mixture over it.
    #[arg(long)]
    class: Option<PathBuf>,
}

enum Failure {
    /// Validation failed or a comparison did not match.
    Rejected,
    Error(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected) => ExitCode::from(1),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e:#}");
            let unresolved = e.downcast_ref::<Error>().is_some_and(Error::is_unresolved);
            ExitCode::from(if unresolved { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Check { env, depth } => {
            let env = EnvSpec::load(&env)?.build(None)?;
            let report = check_cmd(&env, depth);
            print!("{report}");
            if !report.is_valid() {
                return Err(Failure::Rejected);
            }
        }
        Command::Value {
            model,
            history,
            variant,
            discount,
            horizon,
            kmax,
            debug,
        } => {
            let env = load_model(&model)?;
            let history = History::parse(&history, env.alphabet())?;
            let mut query = ValueQuery::new(
                env,
                Discount::parse(&discount)?,
                history,
                Variant::parse(&variant)?,
            )
            .with_k_max(kmax);
            if let Some(h) = horizon {
                query = query.with_horizon_cap(h);
            }
            let report = value_cmd(&query)?;
            match report.value.exact_value() {
                Some(v) => println!("value: {}", fraction(v)),
                None => println!("value: {}", report.value),
            }
            println!("horizon: {}", report.horizon);
            if debug {
                println!("numerator: {}", report.numerator);
                println!("denominator: {}", fraction(&report.denominator));
                println!("Gamma_t: {}", fraction(&report.gamma_t));
                println!("conditional: {}", report.conditional());
            }
        }
        Command::Simulate {
            model,
            agent,
            tie_order,
            variant,
            discount,
            steps,
            seed,
            kmax,
            horizon,
            trace,
        } => {
            let spec = RunSpec {
                env: EnvSpec::load(&model.env)?,
                class: model.class.as_deref().map(ClassSpec::load).transpose()?,
                agent,
                tie_order,
                variant: Variant::parse(&variant)?,
                discount: Discount::parse(&discount)?,
                steps,
                seed,
                k_max: kmax,
                horizon_cap: horizon,
            };
            let result = simulate(&spec.resolve()?)?;
            match trace {
                Some(path) => result.write_trace(&path)?,
                None => print!("{}", result.trace()),
            }
            let acts: Vec<String> = result.actions().iter().map(|a| a.0.to_string()).collect();
            let ended = match result.outcome {
                Outcome::Completed => "completed".to_string(),
                Outcome::EnvironmentEnded { t } => format!("environment ended at t={t}"),
            };
            eprintln!(
                "actions [{}], {ended}, total {}",
                acts.join(","),
                fraction(&result.total)
            );
        }
        Command::CompareProp41 {
            eps_r,
            discount,
            steps,
            kmax,
        } => {
            let report = compare_prop41(
                &parse_rational(&eps_r)?,
                &Discount::parse(&discount)?,
                steps,
                kmax,
            )?;
            println!("{report}");
            if !report.pass() {
                return Err(Failure::Rejected);
            }
        }
    }
    Ok(())
}

fn load_model(args: &ModelArgs) -> aixilab_core::Result<EnvRef> {
    match &args.class {
        Some(path) => Ok(Arc::new(MixtureEnv::new(
            ClassSpec::load(path)?.build(None)?,
        ))),
        None => EnvSpec::load(&args.env)?.build(None),
    }
}
