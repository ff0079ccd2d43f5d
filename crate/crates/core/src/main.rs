use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfsliding::asgs::derive_asgs_params;
use rfsliding::harness::{checks, config::RunConfig, experiment};
use rfsliding::sgs::derive_sgs_params;
use rfsliding::Error;

/// Restart-free gradient sliding experiments.
#[derive(Parser, Debug)]
#[command(name = "rfsliding", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the first seed of a config and write its trace.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run every seed of a config; writes one trace per seed and an aggregate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant suite.
    Check,
    /// Print the derived parameter schedule.
    #[command(allow_negative_numbers = true)]
    Params {
        #[arg(long = "L")]
        l: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        /// Switches to the RF-ASGS schedule.
        #[arg(long = "L-eta")]
        l_eta: Option<f64>,
        #[arg(long, default_value_t = 1.5)]
        c: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        /// Number of T_k rows for RF-SGS.
        #[arg(long, default_value_t = 10)]
        rows: u64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::Param(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn load(path: &PathBuf) -> Result<RunConfig, Failure> {
    RunConfig::from_file(path).map_err(|e| Failure::Config(e.to_string()))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config } => {
            let cfg = load(&config)?;
            let out = experiment::run(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
            println!("outer iterations: {}", out.outer_iterations);
            if let Some(v) = out.objectives.last() {
                println!("final objective: {v:.10e}");
            }
            if let Some(g) = out.trace.last().and_then(|r| r.objective_gap) {
                println!("final gap: {g:.3e}");
            }
            println!("trace: {}", cfg.output.display());
        }
        Command::Sweep { config } => {
            let cfg = load(&config)?;
            let out = experiment::sweep(&cfg).map_err(|e| Failure::Runtime(e.to_string()))?;
            for p in &out.trace_paths {
                println!("trace: {}", p.display());
            }
            println!("aggregate: {}", out.aggregate.display());
        }
        Command::Check => {
            let results = checks::run_all();
            let failed = results.iter().filter(|c| !c.passed).count();
            for c in &results {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed > 0 {
                return Err(Failure::Runtime(format!("{failed} checks failed")));
            }
        }
        Command::Params {
            l,
            mu,
            nu,
            l_eta,
            c,
            b,
            rows,
        } => match l_eta {
            None => {
                let p = derive_sgs_params(l, mu, nu)?;
                println!("c={:.6}", p.c);
                println!("beta={:.6}", p.beta);
                println!("gamma={:.6}", p.gamma);
                for k in 1..=rows.max(1) {
                    println!("T_{k}={}", p.inner_count(k));
                }
            }
            Some(l_eta) => {
                let p = derive_asgs_params(l, mu, nu, l_eta, c, b)?;
                println!("lambda={:.6}", p.lambda);
                println!("gamma={:.6}", p.gamma);
                println!("beta={:.6}", p.beta);
                println!("T={}", p.t);
                println!("alpha={:.6}", p.alpha);
                println!("p={:.6}", p.p);
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
