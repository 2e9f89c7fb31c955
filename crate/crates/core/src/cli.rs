//! The `tfw` command line.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 SCF did not
//! converge (or some `N` of a study failed), 3 eigensolver stalled,
//! 4 validation failures.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::TfwError;
use crate::homogenization::{self, average_to_1d};
use crate::output;
use crate::solver::scf::{el_residual_field, scf_solve_field};
use crate::validate::{self, Fault, Suite, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_STALLED: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "tfw", version, about = "Periodic TFW ground states of 2D crystals and their homogenization limit")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads, 0 for one per core (overrides `run.threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override a configuration key, e.g. `--set scf.tolerance=1e-8`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Ground state of the periodic 3D problem.
    Solve3d,
    /// Ground state of the reduced 1D problem for the in-plane average of the model.
    Solve1d,
    /// Run the N -> infinity study and fit convergence rates.
    Homogenize,
    /// Run the self-check suite.
    Validate {
        /// Run a single suite.
        #[arg(long)]
        only: Option<String>,
        /// Inject a known defect (test hook).
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn solver_exit(e: &TfwError) -> i32 {
    match e {
        TfwError::ScfDiverged { .. } | TfwError::ScfNotConverged { .. } => EXIT_NOT_CONVERGED,
        TfwError::EigensolverStalled { .. } => EXIT_STALLED,
        _ => EXIT_CONFIG,
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, i32> {
    let mut overrides = cli.set.clone();
    if let Some(o) = &cli.out {
        overrides.push(format!("output.dir={}", toml::Value::String(o.display().to_string())));
    }
    if let Some(f) = cli.format {
        overrides.push(format!("output.format=\"{}\"", if f == FormatArg::Csv { "csv" } else { "json" }));
    }
    if let Some(t) = cli.threads {
        overrides.push(format!("run.threads={t}"));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides).map_err(|e| {
        eprintln!("error: invalid configuration: {e}");
        EXIT_CONFIG
    })?;
    if cfg.run.threads > 0 {
        // fails only if a pool already exists (repeated calls in one process)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.run.threads).build_global();
    }
    Ok(cfg)
}

fn io_fail(e: std::io::Error) -> i32 {
    eprintln!("error: writing output: {e}");
    EXIT_CONFIG
}

fn cmd_solve(cfg: &RunConfig, one_d: bool) -> i32 {
    let command = if one_d { "solve1d" } else { "solve3d" };
    let run = || -> Result<(crate::solver::ScfResult, f64), TfwError> {
        let grid = if one_d { cfg.line_grid() } else { cfg.grid3() }
            .map_err(|e| TfwError::InvalidGrid(e.to_string()))?;
        let line = grid.x3_line()?;
        let model = cfg.model(&line);
        let m = if one_d {
            // the reduced problem sees the in-plane average of the model
            let probe = crate::cell::Grid3::new(cfg.cell(), cfg.grid.n1, cfg.grid.n2, cfg.grid.n3)?;
            average_to_1d(&model, &probe)?
        } else {
            model.sample(&grid)?
        };
        let res = scf_solve_field(&m, &cfg.scf_config())?;
        let el = el_residual_field(&res, &m)?;
        Ok((res, el))
    };
    match run() {
        Ok((res, el)) => {
            info!("{command}: energy {:.12}, lambda {:.12}, {} iterations, residual {el:.3e}", res.energy.total, res.lambda, res.iterations);
            let dir = &cfg.output.dir;
            if let Err(e) = output::write_solve(dir, &res, el, cfg.output.format, cfg.output.dump_field) {
                return io_fail(e);
            }
            let extra = json!({ "grid": res.u.grid().dims() });
            if let Err(e) = output::write_metadata(dir, command, &cfg.to_toml(), extra) {
                return io_fail(e);
            }
            println!("{command}: converged in {} iterations, energy {:.12}", res.iterations, res.energy.total);
            EXIT_OK
        }
        Err(e) => {
            error!("{command} failed: {e}");
            eprintln!("error: {e}");
            solver_exit(&e)
        }
    }
}

fn cmd_homogenize(cfg: &RunConfig) -> i32 {
    let plan = match cfg.plan() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return EXIT_CONFIG;
        }
    };
    let report = match homogenization::run_study(&plan) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return solver_exit(&e);
        }
    };
    let dir = &cfg.output.dir;
    if let Err(e) = output::write_homogenization(dir, &report, cfg.output.format) {
        return io_fail(e);
    }
    let extra = json!({ "failures": report.failures });
    if let Err(e) = output::write_metadata(dir, "homogenize", &cfg.to_toml(), extra) {
        return io_fail(e);
    }
    for f in &report.failures {
        eprintln!("error: N = {}: {}", f.n, f.error);
    }
    for (q, r) in &report.fitted_rates {
        println!("{q}: slope {:.4} (r^2 {:.4})", r.slope, r.r_squared);
    }
    if report.all_converged() {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn cmd_validate(cfg: &RunConfig, only: Option<&str>, fault: Option<&str>) -> i32 {
    let only = match only.map(str::parse::<Suite>).transpose() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let fault = match fault.map(str::parse::<Fault>).transpose() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let outcomes = validate::run(&ValidateOptions { only, fault, green: cfg.green_config() });
    let rows: Vec<(String, String, bool, String)> = outcomes
        .iter()
        .map(|o| (o.suite.to_string(), o.name.to_string(), o.passed, o.detail()))
        .collect();
    print!("{}", output::check_table(&rows));
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", outcomes.len());
        EXIT_OK
    } else {
        eprintln!("failed checks: {}", failed.join(", "));
        EXIT_VALIDATION
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match configure(&cli) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match &cli.command {
        Command::Solve3d => cmd_solve(&cfg, false),
        Command::Solve1d => cmd_solve(&cfg, true),
        Command::Homogenize => cmd_homogenize(&cfg),
        Command::Validate { only, inject_fault } => cmd_validate(&cfg, only.as_deref(), inject_fault.as_deref()),
    }
}

/// Install the logger; verbosity comes from `TFW_LOG` (default `warn`).
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or("TFW_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_map_to_config_exit() {
        assert_eq!(run(["tfw", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["tfw", "--help"]), EXIT_OK);
    }

    #[test]
    fn bad_override_is_a_config_error() {
        assert_eq!(run(["tfw", "solve3d", "--set", "scf.tolerance=-1"]), EXIT_CONFIG);
        assert_eq!(run(["tfw", "validate", "--only", "nonsense"]), EXIT_CONFIG);
    }
}
