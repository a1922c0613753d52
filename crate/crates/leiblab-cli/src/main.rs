//! `leiblab`: run margin suites, the duality certification, the
//! counterexample search, and the exact shift checks from the shell.
//!
//! Exit status: 0 when all contracts are met, 1 when a confirmed violation
//! is found, 2 on usage or configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leiblab::harness::{self, MarginReport, StateKind, Suite, SuiteConfig};
use leiblab::io;
use leiblab::shiftlab::{self, parse::parse_shift_expr};
use leiblab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "leiblab",
    version,
    about = "Margin suites and exact checks for standard-deviation seminorms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a randomized margin suite and report the worst margins.
    Verify {
        /// One of: leibniz, strong, markov, audenaert, quotient,
        /// tracial-copies, matricial, search-l0-strong, shift,
        /// lipschitz-metric.
        suite: String,
        /// Matrix dimension d (window radius for the shift suite).
        #[arg(long)]
        dim: usize,
        /// Matricial level; the module suites act on M_n(M_d).
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Conformance threshold: a margin passes when >= -tol*scale.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// State per trial: "tracial", "random", or "@file" with a state
        /// object.
        #[arg(long, default_value = "random")]
        state: String,
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write per-trial margins as CSV rows (trial, margin, scale, pass).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Certify distance-to-scalars against the state-side maximum with two
    /// independent solvers (shorthand for `verify audenaert`).
    Audenaert {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Randomized counterexample searches.
    Search {
        #[command(subcommand)]
        target: SearchTarget,
    },
    /// Exact rational checks of the bilateral-shift operators.
    Shift {
        /// Basis vectors e_n with |n| <= window are checked.
        #[arg(long, default_value_t = 64)]
        window: usize,
        /// Analyze one operator expression instead of the built-in
        /// identities (tokens B, B', J, P, I, +, -, *, ^, rationals,
        /// parentheses; juxtaposition composes).
        #[arg(long)]
        expr: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SearchTarget {
    /// Search for a violation of ||A^{-1}||^2 L0(A) >= L0(A^{-1}) over
    /// non-normal invertibles and non-tracial faithful states.
    L0Strong {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<u8> {
    match command {
        Command::Verify {
            suite,
            dim,
            n,
            trials,
            seed,
            tol,
            state,
            out,
            csv,
        } => {
            let cfg = SuiteConfig {
                suite: Suite::from_name(&suite)?,
                dim,
                n,
                trials,
                seed,
                tol,
                state_kind: parse_state_kind(&state)?,
                out,
            };
            run_and_report(&cfg, csv.as_deref())
        }
        Command::Audenaert {
            dim,
            trials,
            tol,
            seed,
            out,
            csv,
        } => {
            let mut cfg = SuiteConfig::new(Suite::Audenaert, dim);
            cfg.trials = trials;
            cfg.tol = tol;
            cfg.seed = seed;
            cfg.out = out;
            run_and_report(&cfg, csv.as_deref())
        }
        Command::Search {
            target:
                SearchTarget::L0Strong {
                    dim,
                    trials,
                    seed,
                    tol,
                    out,
                    csv,
                },
        } => {
            let mut cfg = SuiteConfig::new(Suite::SearchL0Strong, dim);
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.tol = tol;
            cfg.out = out;
            run_and_report(&cfg, csv.as_deref())
        }
        Command::Shift { window, expr, out } => run_shift(window, expr.as_deref(), out.as_deref()),
    }
}

fn parse_state_kind(arg: &str) -> Result<StateKind> {
    match arg {
        "tracial" => Ok(StateKind::Tracial),
        "random" | "random-faithful" => Ok(StateKind::RandomFaithful),
        file if file.starts_with('@') => {
            let value = io::read_json(Path::new(&file[1..]))?;
            Ok(StateKind::Fixed(io::state_from_value(&value)?))
        }
        other => Err(Error::Config(format!(
            "unknown state kind '{other}'; expected tracial, random, or @file"
        ))),
    }
}

fn run_and_report(cfg: &SuiteConfig, csv: Option<&Path>) -> Result<u8> {
    let report = harness::run_suite(cfg)?;
    if let Some(path) = &cfg.out {
        io::write_json(path, &report)?;
    }
    if let Some(path) = csv {
        std::fs::write(path, report.csv())
            .map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))?;
    }
    print_summary(&report);
    Ok(if report.confirmed_violations() > 0 { 1 } else { 0 })
}

fn print_summary(report: &MarginReport) {
    println!(
        "suite {} (dim {}, n {}, trials {}, seed {}, tol {:e}, state {})",
        report.suite, report.dim, report.n, report.trials, report.seed, report.tol,
        report.state_kind
    );
    println!(
        "  completed {} / {} trials ({} errors)",
        report.completed_trials, report.trials, report.error_count
    );
    if let Some(t) = report.argmin_trial {
        println!(
            "  min margin {:e} at trial {} (scale {:.3e}); median {:e}",
            report.min_margin, t, report.min_margin_scale, report.stats.p50
        );
    }
    let confirmed = report.confirmed_violations();
    let artifacts = report.violations.len() - confirmed;
    if report.violations.is_empty() {
        println!("  no violations at tol {:e}", report.tol);
    } else {
        println!(
            "  {} confirmed violation(s), {} numerical artifact(s)",
            confirmed, artifacts
        );
        for v in &report.violations {
            println!(
                "    trial {}: margin {:e}, refined {:e} -> {}",
                v.trial, v.margin, v.refined_margin, v.verdict
            );
        }
    }
    println!("  digest {}", report.digest);
}

fn run_shift(window: usize, expr: Option<&str>, out: Option<&Path>) -> Result<u8> {
    let w = window as i64;
    match expr {
        None => {
            let mut cfg = SuiteConfig::new(Suite::Shift, window);
            cfg.tol = 1e-15; // exact checks; the threshold is never exercised
            let report = harness::run_suite(&cfg)?;
            if let Some(path) = out {
                io::write_json(path, &report)?;
            }
            print_summary(&report);
            Ok(if report.confirmed_violations() > 0 { 1 } else { 0 })
        }
        Some(text) => {
            let op = parse_shift_expr(text)?;
            let witness = shiftlab::gamma_seminorm_witness(&op, w)?;
            let split = shiftlab::commutator_split_identity(&op, w)?;
            println!("operator: {op}");
            println!("  reach: {}", op.reach());
            match witness.witness_index {
                Some(idx) => println!(
                    "  corner compression: nonzero, squared norm >= {} (witness e[{idx}])",
                    witness.lower_bound_sq
                ),
                None => println!("  corner compression: vanishes on the window"),
            }
            let failures: Vec<_> = split.failures().collect();
            if failures.is_empty() {
                println!(
                    "  commutator split identity: all {} checks pass",
                    split.entries.len()
                );
            } else {
                println!("  commutator split identity: {} failure(s)", failures.len());
                for f in &failures {
                    println!(
                        "    {} at e[{}]: expected {}, got {}",
                        f.check, f.index, f.expected, f.got
                    );
                }
            }
            if let Some(path) = out {
                let payload = serde_json::json!({
                    "expr": text,
                    "parsed": op.to_string(),
                    "reach": op.reach(),
                    "gamma": {
                        "vanishing": witness.vanishing,
                        "lower_bound_sq": witness.lower_bound_sq.to_string(),
                        "witness_index": witness.witness_index,
                    },
                    "commutator_split": split,
                });
                io::write_json(path, &payload)?;
            }
            Ok(if failures.is_empty() { 0 } else { 1 })
        }
    }
}
