//! Command-line front end. [`run`] parses arguments, dispatches, and
//! returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage, validation, parse or io error |
//! | 3 | iteration diverged |
//! | 4 | unsupported case (`p < 1` on a non-diagonal operator) |
//! | 5 | a bound, band or demo assertion failed |

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiments::{
    fmt_num, run_constrained_nonconvergence_demo, run_nonexistence_demo, run_pinv_regularization_sweep,
    run_rate_experiment, RateExperimentConfig,
};
use crate::operators::{DiagonalOperator, ForwardOperator};
use crate::seqspace::TruncatedSequence;
use crate::solvers::{solve_diagonal, solve_iterative, IterativeOptions, ProblemFile};
use crate::thresholding::{oracle_grid_spacing, oracle_threshold, threshold, ThresholdSpec, ORACLE_MIN_POINTS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_UNSUPPORTED: i32 = 4;
pub const EXIT_ASSERTION: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Divergence(_) => EXIT_DIVERGENCE,
        Error::Unsupported(_) => EXIT_UNSUPPORTED,
        Error::BoundViolation(_) => EXIT_ASSERTION,
        _ => EXIT_USAGE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "lpsparse", version, about = "Sparsity-constrained Tikhonov regularization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// diagonal operators use the closed form, others iterate
    Auto,
    Iterative,
    Diagonal,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the scalar thresholding map H^p_alpha(x).
    Threshold {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        /// Also evaluate the brute-force grid minimizer.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = ORACLE_MIN_POINTS + 1)]
        oracle_points: usize,
    },
    /// Minimize the functional described by a problem file.
    Solve {
        problem: PathBuf,
        /// Operator file; overrides the problem file's `operator` key.
        #[arg(long)]
        operator: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iter: usize,
        /// Write the solution, one entry per line.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence-rate sweep on the diagonal testbed.
    Rate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Distance of the diagonal p < 1 inverse to the pseudo-inverse as alpha -> 0.
    PinvSweep {
        #[arg(long)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.5])]
        sigma: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = vec![1.0, 2.0])]
        u_star: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 1e-10)]
        alpha_min: f64,
        #[arg(long, default_value_t = 23)]
        alpha_points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Unused by this deterministic sweep; accepted for uniformity.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Infimum gap of the p = 0 functional on dense nets.
    Nonexist {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![4, 16, 64, 256, 1024])]
        net_sizes: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        g_norm: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Non-convergence of the constrained p = 0 formulation.
    ConstrainedDemo {
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 131_072)]
        l: usize,
        #[arg(long, default_value_t = 1.5)]
        tau: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-1, 1e-2, 1e-3, 1e-4])]
        deltas: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn report_failures(failures: &[String], err: &mut dyn Write) -> Result<i32> {
    for f in failures {
        writeln!(err, "check failed: {f}")?;
    }
    Ok(if failures.is_empty() { EXIT_OK } else { EXIT_ASSERTION })
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Threshold { p, alpha, x, oracle, oracle_points } => {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("x must be finite, got {x}")));
            }
            let spec = ThresholdSpec::new(p, alpha)?;
            let h = threshold(&spec, x);
            writeln!(out, "H {h}")?;
            if oracle {
                let hw = 2.0 * x.abs() + 1.0;
                let o = oracle_threshold(&spec, x, hw, oracle_points)?;
                writeln!(out, "oracle {o} diff {}", (h - o).abs())?;
                writeln!(out, "grid_spacing {}", oracle_grid_spacing(hw, oracle_points))?;
            }
            Ok(EXIT_OK)
        }
        Command::Solve { problem, operator, method, tol, max_iter, out: out_path } => {
            let text = fs::read_to_string(&problem)?;
            let file = ProblemFile::parse(&text)?;
            let op_path = match (operator, &file.operator_path) {
                (Some(p), _) => p,
                (None, Some(rel)) => problem.parent().unwrap_or(Path::new(".")).join(rel),
                (None, None) => {
                    return Err(Error::InvalidParameter(
                        "no operator: pass --operator or add an 'operator <path>' line".into(),
                    ))
                }
            };
            let op = ForwardOperator::parse_text(&fs::read_to_string(&op_path)?)?;
            let is_diag = op.as_diagonal().is_some();
            let prob = file.into_problem(op)?;
            let use_diag = match method {
                Method::Auto => is_diag,
                Method::Diagonal => {
                    if !is_diag {
                        return Err(Error::InvalidParameter("--method diagonal needs a diagonal operator".into()));
                    }
                    true
                }
                Method::Iterative => false,
            };
            let res = if use_diag {
                solve_diagonal(&prob)?
            } else {
                solve_iterative(&prob, None, IterativeOptions { max_iter, tol })?
            };
            writeln!(out, "objective {}", fmt_num(res.objective))?;
            writeln!(out, "iterations {}", res.iterations)?;
            match res.certificate_residual {
                Some(c) => writeln!(out, "certificate_residual {}", fmt_num(c))?,
                None => writeln!(out, "certificate_residual none")?,
            }
            writeln!(out, "support_size {}", res.u.support().len())?;
            writeln!(out, "converged {}", res.converged)?;
            if let Some(path) = out_path {
                let body: String = res.u.iter().map(|v| format!("{}\n", fmt_num(*v))).collect();
                fs::write(path, body)?;
            }
            if !res.converged {
                writeln!(err, "iteration limit {max_iter} reached before the tolerance was met")?;
                return Ok(EXIT_ASSERTION);
            }
            Ok(EXIT_OK)
        }
        Command::Rate { config, out: csv_path, seed } => {
            let cfg = RateExperimentConfig::from_config_text(&fs::read_to_string(&config)?, seed)?;
            let rep = match run_rate_experiment(&cfg) {
                Ok(r) => r,
                Err(Error::BoundViolation(row)) => {
                    writeln!(out, "bounds_ok false")?;
                    writeln!(err, "bound violated: {row}")?;
                    return Ok(EXIT_ASSERTION);
                }
                Err(e) => return Err(e),
            };
            fs::write(&csv_path, rep.to_csv())?;
            let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_else(|| "NaN".into());
            writeln!(out, "slope2 {}", opt(rep.slope2))?;
            writeln!(out, "slope1 {}", opt(rep.slope1))?;
            writeln!(out, "slope2_weighted_sq {}", opt(rep.slope2_weighted_sq))?;
            writeln!(out, "bounds_ok {}", rep.bounds_ok)?;
            report_failures(&rep.band_failures, err)
        }
        Command::PinvSweep { p, sigma, u_star, alpha_max, alpha_min, alpha_points, out: path, seed: _ } => {
            if alpha_points < 1 || !(alpha_max > 0.0 && alpha_min > 0.0 && alpha_min <= alpha_max) {
                return Err(Error::InvalidParameter("need 0 < alpha_min <= alpha_max and alpha_points >= 1".into()));
            }
            let k = DiagonalOperator::new(sigma)?;
            let u = TruncatedSequence::new(u_star)?;
            let grid = crate::experiments::log_grid(alpha_max, alpha_min, alpha_points);
            let sweep = run_pinv_regularization_sweep(&k, &u, p, &grid)?;
            emit(path.as_deref(), &sweep.to_csv(), out)?;
            report_failures(&sweep.assertion_failures, err)
        }
        Command::Nonexist { m, net_sizes, alpha, g_norm, out: path, seed } => {
            let demo = run_nonexistence_demo(m, &net_sizes, alpha, g_norm, seed)?;
            emit(path.as_deref(), &demo.to_csv(), out)?;
            report_failures(&demo.assertion_failures, err)
        }
        Command::ConstrainedDemo { m, l, tau, deltas, out: path, seed } => {
            let demo = run_constrained_nonconvergence_demo(m, l, tau, &deltas, seed)?;
            emit(path.as_deref(), &demo.to_csv(), out)?;
            report_failures(&demo.assertion_failures, err)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("lpsparse").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(call(&["threshold", "--p", "1", "--alpha", "2", "--x", "3"]).1, "H 2\n");
        assert_eq!(call(&["threshold", "--p", "0", "--alpha", "4", "--x", "1.9"]).1, "H 0\n");
        assert_eq!(call(&["threshold", "--p", "1", "--alpha", "2", "--x", "-3"]).1, "H -2\n");
    }

    #[test]
    fn threshold_usage_errors() {
        assert_eq!(call(&["threshold", "--p", "3", "--alpha", "1", "--x", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["threshold", "--p", "1", "--alpha", "0", "--x", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["threshold", "--p", "1"]).0, EXIT_USAGE);
        assert_eq!(call(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(call(&["--help"]).0, EXIT_OK);
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(exit_code(&Error::Divergence("x".into())), 3);
        assert_eq!(exit_code(&Error::Unsupported("x".into())), 4);
        assert_eq!(exit_code(&Error::BoundViolation("x".into())), 5);
        assert_eq!(exit_code(&Error::Parse { line: 1, msg: "x".into() }), 2);
    }
}
