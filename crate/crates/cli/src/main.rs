use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bggcheck_core::report::{self, decompose, run, run_coupling, scenario_points};
use bggcheck_core::scenario::{builtin, builtin_names, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

const THREADS_VAR: &str = "BGGCHECK_THREADS";

/// Verify candidate BGG solutions and couplings on explicit metrics.
///
/// A SCENARIO argument is a JSON file path or `builtin:NAME`.
/// The worker thread count is read from BGGCHECK_THREADS.
#[derive(Parser, Debug)]
#[command(name = "bggcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every check of a scenario and print a summary.
    Verify {
        scenario: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Evaluate one named coupling of a scenario.
    Couple {
        scenario: String,
        #[arg(long)]
        name: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Split a conformal Killing field (or an almost Einstein scale in
    /// signature (2,3)) by a generic twistor spinor.
    Decompose {
        scenario: String,
        #[arg(long)]
        spinor: String,
        #[arg(long)]
        field: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Structural invariant suite on random data.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sample points per invariant and signature.
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Full report of a scenario run.
    Report {
        scenario: String,
        #[arg(long, value_enum)]
        format: Format,
        /// Write to a file instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print a builtin scenario as JSON, or list the builtins.
    Scenario {
        name: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Failure kinds mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn load(arg: &str) -> Result<Scenario, Failure> {
    if let Some(name) = arg.strip_prefix("builtin:") {
        return builtin(name).map_err(usage);
    }
    Scenario::load(arg).with_context(|| format!("loading {arg}")).map_err(usage)
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("{THREADS_VAR}={v:?} is not a thread count"))?;
    if n == 0 {
        bail!("{THREADS_VAR} must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn emit(text: String, output: Option<&PathBuf>) -> Result<(), Failure> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(usage),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Verify { scenario, format } => {
            let s = load(&scenario)?;
            let r = run(&s).map_err(|e| Failure::Runtime(e.into()))?;
            match format {
                Format::Text => {
                    print!("{}", r.to_text());
                    let failing = r.failing_fields();
                    if !failing.is_empty() {
                        println!("failing fields: {}", failing.join(", "));
                    }
                }
                Format::Json => print!("{}", json(&r)),
            }
            Ok(r.pass)
        }
        Command::Couple { scenario, name, format } => {
            let s = load(&scenario)?;
            if s.coupling(&name).is_none() {
                let known: Vec<&str> = s.couplings.iter().map(|c| c.name.as_str()).collect();
                return Err(usage(anyhow::anyhow!("no coupling named {name:?}; known: {}", known.join(", "))));
            }
            let points = scenario_points(&s).map_err(|e| Failure::Runtime(e.into()))?;
            let r = run_coupling(&s, &points, &name).map_err(|e| Failure::Runtime(e.into()))?;
            match format {
                Format::Text => match &r.report {
                    Some(c) => {
                        println!("coupling {} {:?} inputs {} {}", r.name, c.kind, r.inputs[0], r.inputs[1]);
                        println!("output kind: {}", c.output_kind.label());
                        match c.condition_residual {
                            Some(v) => println!("condition residual: {v:.3e} ({})", if c.condition_pass { "pass" } else { "fail" }),
                            None => println!("condition residual: none (unconditional)"),
                        }
                        println!("output theta0 residual: {:.3e} ({})", c.output_residual, if c.output_pass { "pass" } else { "fail" });
                        println!("tractor cross-check: {:.3e} ({})", c.tractor_residual, if c.tractor_pass { "pass" } else { "fail" });
                        println!("inputs certified: {}", c.inputs_pass);
                        println!("verdict: {:?}", c.verdict);
                    }
                    None => println!("coupling {} error: {}", r.name, r.error.as_deref().unwrap_or("unknown")),
                },
                Format::Json => print!("{}", json(&r)),
            }
            Ok(r.pass)
        }
        Command::Decompose { scenario, spinor, field, format } => {
            let s = load(&scenario)?;
            for name in [&spinor, &field] {
                if s.field(name).is_none() {
                    return Err(usage(anyhow::anyhow!("no field named {name:?}")));
                }
            }
            let r = decompose(&s, &spinor, &field).map_err(|e| Failure::Runtime(e.into()))?;
            match format {
                Format::Text => print!("{}", r.to_text()),
                Format::Json => print!("{}", r.to_json() + "\n"),
            }
            Ok(r.pass)
        }
        Command::Selftest { seed, trials, format } => {
            if trials == 0 {
                return Err(usage(anyhow::anyhow!("--trials must be at least 1")));
            }
            let r = report::selftest(seed, trials);
            match format {
                Format::Text => print!("{}", r.to_text()),
                Format::Json => print!("{}", json(&r)),
            }
            Ok(r.pass)
        }
        Command::Report { scenario, format, output } => {
            let s = load(&scenario)?;
            let r = run(&s).map_err(|e| Failure::Runtime(e.into()))?;
            let text = match format {
                Format::Text => r.to_text(),
                Format::Json => r.to_json() + "\n",
            };
            emit(text, output.as_ref())?;
            Ok(r.pass)
        }
        Command::Scenario { name: None, .. } => {
            for n in builtin_names() {
                println!("{n}");
            }
            Ok(true)
        }
        Command::Scenario { name: Some(name), output } => {
            let s = builtin(&name).map_err(usage)?;
            emit(s.to_json() + "\n", output.as_ref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
