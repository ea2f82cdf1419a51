//! `pilotwave`: runs scenario files against the simulation library and writes data,
//! plots and a manifest for each run.

mod config;
mod experiments;
mod plot;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use config::{Module, Scenario, BUNDLED};
use report::{write_manifest, CliError, Report, RunMeta};

#[derive(Parser)]
#[command(
    name = "pilotwave",
    version,
    about = "Run pilot-wave relaxation and typicality scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct RunArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long, value_name = "PATH")]
    config: Option<String>,
    /// Output directory; overrides `scenario.output`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides `scenario.seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Treat warnings as failures.
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever module the scenario file selects.
    Run(RunArgs),
    /// Coarse-grained H of an ensemble in a box.
    Relax(RunArgs),
    /// Multinomial optimum and Chebyshev concentration.
    Typicality(RunArgs),
    /// Additivity of candidate laws and the exponent test.
    Functional(RunArgs),
    /// Reduced Fokker-Planck or master-equation relaxation.
    Kinetic(RunArgs),
    /// Doubling-map iteration and Bernoulli decay rates.
    Bernoulli(RunArgs),
    /// Trajectories in a spreading Gaussian.
    Trajectory(RunArgs),
    /// All acceptance criteria, or the ones listed.
    Suite {
        #[command(flatten)]
        args: RunArgs,
        /// Comma-separated criterion ids.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
    /// List the bundled scenarios.
    Scenarios,
}

enum Outcome {
    Passed,
    Failed(Vec<String>),
    Strict(usize),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (module, args, criteria) = match cli.command {
        Command::Scenarios => {
            for (name, text) in BUNDLED {
                let module = config::parse(text)
                    .map(|s| s.scenario.module.name())
                    .unwrap_or("?");
                println!("{name:<28} {module}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Run(a) => (None, a, Vec::new()),
        Command::Relax(a) => (Some(Module::Relax), a, Vec::new()),
        Command::Typicality(a) => (Some(Module::Typicality), a, Vec::new()),
        Command::Functional(a) => (Some(Module::Functional), a, Vec::new()),
        Command::Kinetic(a) => (Some(Module::Kinetic), a, Vec::new()),
        Command::Bernoulli(a) => (Some(Module::Bernoulli), a, Vec::new()),
        Command::Trajectory(a) => (Some(Module::Trajectory), a, Vec::new()),
        Command::Suite { args, criteria } => (Some(Module::Suite), args, criteria),
    };
    match execute(module, &args, criteria) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::Failed(names)) => {
            for n in &names {
                eprintln!("assertion failed: {n}");
            }
            ExitCode::from(1)
        }
        Ok(Outcome::Strict(n)) => {
            eprintln!("strict mode: {n} warning(s) treated as failures");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn execute(
    module: Option<Module>,
    args: &RunArgs,
    criteria: Vec<usize>,
) -> Result<Outcome, CliError> {
    let spec = match (&args.config, module) {
        (Some(c), _) => c.clone(),
        (None, Some(m)) => m.default_scenario().to_string(),
        (None, None) => return Err(CliError::Config("`run` needs --config PATH".into())),
    };
    let (mut scenario, _text) = config::load(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(m) = module {
        if m != scenario.scenario.module {
            return Err(CliError::Config(format!(
                "invalid config {spec}: field `scenario.module` is `{}`, but the `{}` subcommand was used",
                scenario.scenario.module.name(),
                m.name()
            )));
        }
    }
    if let Some(seed) = args.seed {
        scenario.scenario.seed = seed;
    }
    if !criteria.is_empty() {
        let suite = scenario.suite.get_or_insert_with(Default::default);
        suite.criteria = criteria;
        let bad = suite.validate();
        if let Some(b) = bad.first() {
            return Err(CliError::Config(format!("--criteria: {}", b.reason)));
        }
    }
    let jobs = match args.jobs {
        Some(n) => {
            // only fails if a pool already exists, which cannot happen this early
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build_global();
            n as usize
        }
        None => rayon::current_num_threads(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| scenario.scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&scenario.scenario.name));

    let mut report = Report::new(&out)?;
    let started_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let result = dispatch(&scenario, &mut report);
    let wall = clock.elapsed().as_secs_f64();
    if wall > scenario.scenario.budget_seconds {
        report.warn(format!(
            "run took {wall:.1}s, over the {}s budget",
            scenario.scenario.budget_seconds
        ));
    }
    let status = match (&result, report.failed().is_empty()) {
        (Err(_), _) => "error",
        (Ok(()), false) => "fail",
        (Ok(()), true) if args.strict && !report.warnings.is_empty() => "fail",
        (Ok(()), true) => "pass",
    };
    let meta = RunMeta {
        source: &spec,
        jobs,
        strict: args.strict,
        status,
        started_unix,
        wall_seconds: wall,
    };
    write_manifest(&report, &scenario, &meta)?;
    result?;

    for a in &report.assertions {
        println!(
            "{} {}: {}",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: {status}, outputs in {}",
        scenario.scenario.name,
        out.display()
    );
    let failed: Vec<String> = report.failed().iter().map(|a| a.name.clone()).collect();
    Ok(if !failed.is_empty() {
        Outcome::Failed(failed)
    } else if args.strict && !report.warnings.is_empty() {
        Outcome::Strict(report.warnings.len())
    } else {
        Outcome::Passed
    })
}

fn dispatch(s: &Scenario, report: &mut Report) -> Result<(), CliError> {
    use experiments::*;
    let seed = s.scenario.seed;
    let missing = || CliError::Config(format!("[{}] section missing", s.scenario.module.name()));
    match s.scenario.module {
        Module::Relax => relax::run(s.relax.as_ref().ok_or_else(missing)?, seed, report),
        Module::Typicality => {
            typicality::run(s.typicality.as_ref().ok_or_else(missing)?, seed, report)
        }
        Module::Functional => {
            functional::run(s.functional.as_ref().ok_or_else(missing)?, seed, report)
        }
        Module::Kinetic => kinetic::run(s.kinetic.as_ref().ok_or_else(missing)?, report),
        Module::Bernoulli => bernoulli::run(s.bernoulli.as_ref().ok_or_else(missing)?, report),
        Module::Trajectory => trajectory::run(s.trajectory.as_ref().ok_or_else(missing)?, report),
        Module::Suite => suite::run(s.suite.as_ref().ok_or_else(missing)?, seed, report),
    }
}
