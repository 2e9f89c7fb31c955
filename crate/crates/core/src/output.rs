//! Result files. CSV files have a header row, a fixed column order, numbers
//! with 17 significant digits and LF line endings. The JSON variants carry
//! the same fields. Anything run-specific (timestamps) goes to
//! `metadata.json` only, so repeated runs give byte-identical result files.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use crate::config::OutputFormat;
use crate::homogenization::HomogenizationReport;
use crate::solver::ScfResult;

/// `v` with 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn write(dir: &Path, name: &str, contents: &str) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

/// Scalars of a solve, as `(quantity, value)` in file order.
fn scf_scalars(result: &ScfResult, el_residual: f64) -> Vec<(&'static str, f64)> {
    let e = &result.energy;
    vec![
        ("kinetic_grad", e.kinetic_grad),
        ("kinetic_tf", e.kinetic_tf),
        ("hartree", e.hartree),
        ("total", e.total),
        ("lambda", result.lambda),
        ("iterations", result.iterations as f64),
        ("el_residual", el_residual),
        ("total_charge", result.total_charge),
    ]
}

/// `scf_result.csv` (long format `quantity,index,value`, with one
/// `residual` row per iteration) or `scf_result.json`.
pub fn scf_result_contents(result: &ScfResult, el_residual: f64, format: OutputFormat) -> String {
    let scalars = scf_scalars(result, el_residual);
    match format {
        OutputFormat::Csv => {
            let mut rows: Vec<Vec<String>> = scalars
                .iter()
                .map(|(k, v)| {
                    let v = if *k == "iterations" { format!("{}", *v as usize) } else { fmt_num(*v) };
                    vec![k.to_string(), "0".into(), v]
                })
                .collect();
            for (i, r) in result.residual_trace.iter().enumerate() {
                rows.push(vec!["residual".into(), format!("{}", i + 1), fmt_num(*r)]);
            }
            csv(&["quantity", "index", "value"], &rows)
        }
        OutputFormat::Json => {
            let e = &result.energy;
            json_text(&json!({
                "energy": {
                    "kinetic_grad": e.kinetic_grad,
                    "kinetic_tf": e.kinetic_tf,
                    "hartree": e.hartree,
                    "total": e.total,
                },
                "lambda": result.lambda,
                "iterations": result.iterations,
                "el_residual": el_residual,
                "total_charge": result.total_charge,
                "residual": result.residual_trace,
            }))
        }
    }
}

/// In-plane averages of `rho`, `u`, `m` and `Phi` per `x3` point.
pub fn density_contents(result: &ScfResult, format: OutputFormat) -> String {
    let grid = result.u.grid();
    let n3 = grid.dims()[2];
    let x3: Vec<f64> = (0..n3).map(|j| grid.coord(2, j)).collect();
    let rho = result.rho.x3_profile();
    let u = result.u.x3_profile();
    let m = result.nuclear.x3_profile();
    let phi = result.phi.x3_profile();
    match format {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = (0..n3)
                .map(|j| vec![fmt_num(x3[j]), fmt_num(rho[j]), fmt_num(u[j]), fmt_num(m[j]), fmt_num(phi[j])])
                .collect();
            csv(&["x3", "rho", "u", "m", "phi"], &rows)
        }
        OutputFormat::Json => json_text(&json!({ "x3": x3, "rho": rho, "u": u, "m": m, "phi": phi })),
    }
}

pub fn write_solve(dir: &Path, result: &ScfResult, el_residual: f64, format: OutputFormat, dump_field: bool) -> io::Result<Vec<PathBuf>> {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    let mut out = vec![
        write(dir, &format!("scf_result.{ext}"), &scf_result_contents(result, el_residual, format))?,
        write(dir, &format!("density.{ext}"), &density_contents(result, format))?,
    ];
    if dump_field {
        fs::create_dir_all(dir)?;
        let bytes: Vec<u8> = result.rho.values().iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join("rho_field.bin");
        fs::write(&path, bytes)?;
        out.push(path);
    }
    Ok(out)
}

const REPORT_COLUMNS: [&str; 8] = ["N", "I_N", "err_L1", "err_L2", "err_Linf", "err_grad_L2", "iterations", "residual"];

/// `homog_report.csv`: one row per converged `N` and a trailing `N = 0` row
/// holding the 1D reference (zero errors).
pub fn homog_report_contents(report: &HomogenizationReport, format: OutputFormat) -> String {
    let err = |e: &crate::homogenization::StudyEntry, k: &str| e.errors.get(k).copied().unwrap_or(f64::NAN);
    match format {
        OutputFormat::Csv => {
            let mut rows: Vec<Vec<String>> = report
                .per_n
                .iter()
                .map(|e| {
                    vec![
                        e.n.to_string(),
                        fmt_num(e.energy),
                        fmt_num(err(e, "L1")),
                        fmt_num(err(e, "L2")),
                        fmt_num(err(e, "Linf")),
                        fmt_num(e.grad_error),
                        e.iterations.to_string(),
                        fmt_num(e.el_residual),
                    ]
                })
                .collect();
            rows.push(vec![
                "0".into(),
                fmt_num(report.i0),
                fmt_num(0.0),
                fmt_num(0.0),
                fmt_num(0.0),
                fmt_num(0.0),
                report.reference_iterations.to_string(),
                fmt_num(report.reference_el_residual),
            ]);
            csv(&REPORT_COLUMNS, &rows)
        }
        OutputFormat::Json => json_text(&json!({
            "per_n": report.per_n,
            "reference": {
                "N": 0,
                "I_N": report.i0,
                "iterations": report.reference_iterations,
                "residual": report.reference_el_residual,
            },
            "failures": report.failures,
        })),
    }
}

pub fn rates_contents(report: &HomogenizationReport, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => {
            let rows: Vec<Vec<String>> = report
                .fitted_rates
                .iter()
                .map(|(q, r)| vec![q.clone(), fmt_num(r.slope), fmt_num(r.intercept), fmt_num(r.r_squared)])
                .collect();
            csv(&["quantity", "slope", "intercept", "r_squared"], &rows)
        }
        OutputFormat::Json => {
            let items: Vec<Value> = report
                .fitted_rates
                .iter()
                .map(|(q, r)| json!({"quantity": q, "slope": r.slope, "intercept": r.intercept, "r_squared": r.r_squared}))
                .collect();
            json_text(&Value::Array(items))
        }
    }
}

pub fn write_homogenization(dir: &Path, report: &HomogenizationReport, format: OutputFormat) -> io::Result<Vec<PathBuf>> {
    let ext = match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    };
    Ok(vec![
        write(dir, &format!("homog_report.{ext}"), &homog_report_contents(report, format))?,
        write(dir, &format!("rates.{ext}"), &rates_contents(report, format))?,
    ])
}

/// `metadata.json`: command, crate version, timestamp and the resolved configuration.
pub fn write_metadata(dir: &Path, command: &str, config_toml: &str, extra: Value) -> io::Result<PathBuf> {
    let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let v = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": ts,
        "config": config_toml,
        "extra": extra,
    });
    write(dir, "metadata.json", &json_text(&v))
}

/// Plain-text pass/fail table for the validation suite.
pub fn check_table(rows: &[(String, String, bool, String)]) -> String {
    let w = rows.iter().map(|r| r.1.len()).max().unwrap_or(5).max(5);
    let mut s = String::new();
    let _ = writeln!(s, "{:<12} {:<w$} {:<6} detail", "suite", "check", "status");
    for (suite, name, ok, detail) in rows {
        let _ = writeln!(s, "{:<12} {:<w$} {:<6} {}", suite, name, if *ok { "pass" } else { "FAIL" }, detail);
    }
    s
}
