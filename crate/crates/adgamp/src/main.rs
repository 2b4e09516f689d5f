//! Experiment runner CLI.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when the experiment
//! completed but at least one solver cell aborted.

use adgamp::channels::{InputChannel, OutputChannel};
use adgamp::harness::{self, ExperimentConfig, HarnessError};
use adgamp::oracle;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "adgamp", about = "Message-passing estimation benchmark harness")]
struct Cli {
    /// Size of the worker pool; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run { config: PathBuf },
    /// Run the built-in desk-scale configuration (N=128, M=64, 5 trials).
    Smoke,
    /// Print the quadrature oracle table for the channel posteriors.
    Oracle,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run { config } => match ExperimentConfig::from_path(&config) {
            Ok(mut cfg) => {
                if let Some(seed) = cli.seed {
                    cfg.root_seed = seed;
                }
                if let Some(out) = cli.out {
                    cfg.output_dir = out;
                }
                execute(&cfg)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Smoke => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("smoke_out"));
            let cfg = harness::smoke_config(out, cli.seed.unwrap_or(1));
            execute(&cfg)
        }
        Command::Oracle => {
            print_oracle_table();
            ExitCode::SUCCESS
        }
    }
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    match harness::run_experiment(cfg) {
        Ok(table) => {
            println!(
                "wrote {} trial rows to {}",
                table.rows.len(),
                cfg.output_dir.display()
            );
            if table.aborted_cells > 0 {
                eprintln!("warning: {} solver cell(s) aborted", table.aborted_cells);
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ HarnessError::Config(_)) | Err(e @ HarnessError::Parse(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

/// Reference values for cross-implementation comparison: tilted posterior
/// moments of each channel on a small (location, variance) grid, computed by
/// adaptive quadrature rather than the closed forms used in the solver.
fn print_oracle_table() {
    let fmt = |x: f64| format!("{x:.16e}");
    println!("channel,param,p_or_r,nu,log_partition,mean,variance");
    let grid = [(-2.0, 0.5), (0.0, 1.0), (1.5, 0.25), (3.0, 2.0)];
    let outputs: Vec<(String, OutputChannel)> = vec![
        ("awgn(y=0.7,nu_w=0.3)".into(), OutputChannel::Awgn { y: 0.7, noise_var: 0.3 }),
        (
            "mixture(y=0.7,pi=0.1)".into(),
            OutputChannel::Mixture { y: 0.7, pi_out: 0.1, var_small: 0.01, var_large: 10.0 },
        ),
        ("sign(y=+1)".into(), OutputChannel::Sign { y: 1.0 }),
        ("dirac_zero".into(), OutputChannel::DiracZero),
    ];
    for (name, ch) in &outputs {
        for &(p, nu) in &grid {
            let (ln_b, z, nu_z) = oracle::output_tilted_moments(ch, p, nu);
            println!(
                "output,{name},{},{},{},{},{}",
                fmt(p),
                fmt(nu),
                fmt(ln_b),
                fmt(z),
                fmt(nu_z)
            );
        }
    }
    let inputs: Vec<(String, InputChannel)> = vec![
        (
            "bernoulli_gauss(tau=0.2)".into(),
            InputChannel::BernoulliGauss { tau: 0.2, active_mean: 0.0, active_var: 1.0 },
        ),
        ("gauss(0,1)".into(), InputChannel::Gauss { mean: 0.0, var: 1.0 }),
        ("laplace(lambda=1.5)".into(), InputChannel::Laplace { lambda: 1.5 }),
    ];
    for (name, ch) in &inputs {
        for &(r, nu) in &grid {
            let (ln_c, x, nu_x) = oracle::input_tilted_moments(ch, r, nu);
            println!(
                "input,{name},{},{},{},{},{}",
                fmt(r),
                fmt(nu),
                fmt(ln_c),
                fmt(x),
                fmt(nu_x)
            );
        }
    }
}
