//! The four subcommands, operating on resolved configurations.

use std::fs;
use std::path::{Path, PathBuf};

use bubble_bs::harness::{compare, price_surface, CompareRow, CompareSpec};
use bubble_bs::operators::triangle;
use bubble_bs::pde::{estimate, solve_pair};
use bubble_bs::series::quote;

use crate::config::{Format, RunConfig};
use crate::output::{
    coeffs_text, compare_csv, quote_csv, quote_json_text, quote_text, surface_csv,
    surface_file_name, write_atomic, OracleJson, QuoteJson,
};
use crate::CliError;

/// What a command hands back for printing.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Text for stdout.
    pub stdout: String,
    /// Warnings for stderr (skipped sweep members and the like).
    pub warnings: Vec<String>,
}

fn emit(bytes: Vec<u8>, path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) => {
            write_atomic(p, &bytes)?;
            Ok(format!("wrote {}\n", p.display()))
        }
        None => String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Price one point, optionally against the finite-difference oracle.
pub fn cmd_price(cfg: &RunConfig, with_oracle: bool) -> Result<Report, CliError> {
    cfg.validate()?;
    let point = cfg
        .point
        .ok_or_else(|| CliError::Validation("invalid `s`/`tau`: no quote point given".into()))?;
    let q = quote(point.s, point.tau, &cfg.market, &cfg.bubble, cfg.method)?;
    let oracle = if with_oracle {
        let grid = cfg.grid.unwrap_or_default();
        let (fine, coarse) = solve_pair(&cfg.market, &cfg.bubble, &grid)?;
        let est = estimate(&fine, &coarse, point.s, point.tau)?;
        Some(OracleJson {
            value: est.value,
            richardson_error: est.richardson_error,
            rel_gap: ((q.price - est.value) / est.value).abs(),
        })
    } else {
        None
    };
    let doc = QuoteJson::new(&q, &cfg.market, &cfg.bubble, point.s, point.tau, oracle);
    let path = cfg.output.path.as_deref();
    let stdout = match cfg.output.format {
        Some(Format::Json) => emit(quote_json_text(&doc)?.into_bytes(), path)?,
        Some(Format::Csv) => emit(quote_csv(&doc)?, path)?,
        None => emit(quote_text(&doc).into_bytes(), path)?,
    };
    Ok(Report {
        stdout,
        warnings: Vec::new(),
    })
}

/// One CSV file per swept coupling, written atomically into the output directory.
///
/// A coupling whose panel cannot be priced is reported and skipped; the sweep
/// carries on.
pub fn cmd_surface(cfg: &RunConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Validation("invalid `h-list`: no sweep configured".into()))?;
    let dir: PathBuf = cfg.output.path.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;

    let mut stdout = String::new();
    let mut warnings = Vec::new();
    for &h in &sweep.h_values {
        let panel = price_surface(
            &cfg.market,
            cfg.bubble.tau1(),
            cfg.bubble.tau2(),
            h,
            cfg.method,
            &sweep.surface,
        );
        match panel {
            Ok(points) => {
                let path = dir.join(surface_file_name(cfg.method, h));
                write_atomic(&path, &surface_csv(&points, cfg.method, h)?)?;
                stdout.push_str(&format!("{}\n", path.display()));
            }
            Err(e) => warnings.push(format!("h = {h}: skipped: {e}")),
        }
    }
    Ok(Report { stdout, warnings })
}

/// Error report of every method against the oracle for every coupling.
pub fn cmd_compare(cfg: &RunConfig, spec: &CompareSpec) -> Result<Report, CliError> {
    cfg.validate()?;
    let rows: Vec<CompareRow> = compare(&cfg.market, spec);
    let warnings = rows
        .iter()
        .filter(|r| r.status != bubble_bs::harness::RowStatus::Ok)
        .map(|r| format!("h = {}, {}: {}", r.h, r.method, r.status))
        .collect();
    let bytes = match cfg.output.format.unwrap_or(Format::Csv) {
        Format::Csv => compare_csv(&rows)?,
        Format::Json => serde_json::to_string_pretty(&rows)
            .map_err(|e| CliError::Io(e.to_string()))?
            .into_bytes(),
    };
    Ok(Report {
        stdout: emit(bytes, cfg.output.path.as_deref())?,
        warnings,
    })
}

/// Rows `1..=n_max` of the coefficient triangle.
pub fn cmd_coeffs(n_max: usize, format: Format) -> Result<Report, CliError> {
    let t = triangle(n_max)?;
    let rows: Vec<Vec<i128>> = t.rows().map(<[i128]>::to_vec).collect();
    let stdout = match format {
        Format::Csv => coeffs_text(&rows),
        Format::Json => {
            // i128 is beyond JSON's safe integers; keep the digits exact as strings
            let as_text: Vec<Vec<String>> = rows
                .iter()
                .map(|r| r.iter().map(i128::to_string).collect())
                .collect();
            serde_json::to_string(&as_text).map_err(|e| CliError::Io(e.to_string()))? + "\n"
        }
    };
    Ok(Report {
        stdout,
        warnings: Vec::new(),
    })
}
