//! Text, CSV and JSON rendering plus atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use bubble_bs::harness::{CompareRow, SurfacePoint};
use bubble_bs::{MarketParams, Method, SeriesQuote, SquareBubble};
use serde::Serialize;

use crate::CliError;

/// Shortest decimal of `x` rounded to 12 significant digits.
///
/// Plain notation for magnitudes in `[1e-4, 1e15)`, scientific otherwise.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let mag = rounded.abs();
    if (1e-4..1e15).contains(&mag) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Write `bytes` to `path` through a sibling temporary file and a rename, so
/// readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("`{}` is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner()
        .map_err(|e| CliError::Io(format!("csv buffer: {e}")))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

/// Surface panel as CSV: `S,tau,price,method,h`, rows in the order given.
pub fn surface_csv(points: &[SurfacePoint], method: Method, h: f64) -> Result<Vec<u8>, CliError> {
    let mut w = csv_writer();
    w.write_record(["S", "tau", "price", "method", "h"])
        .map_err(csv_err)?;
    let (label, h) = (method.to_string(), fmt12(h));
    for p in points {
        w.write_record([
            fmt12(p.s).as_str(),
            &fmt12(p.tau),
            &fmt12(p.price),
            &label,
            &h,
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// File name of one surface panel.
pub fn surface_file_name(method: Method, h: f64) -> String {
    format!("surface_{}_h{}.csv", method.label(), fmt12(h))
}

pub fn compare_csv(rows: &[CompareRow]) -> Result<Vec<u8>, CliError> {
    let mut w = csv_writer();
    w.write_record([
        "h",
        "method",
        "max_abs_error",
        "atm_rel_error",
        "atm_series",
        "atm_oracle",
        "oracle_rel_error",
        "status",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            fmt12(r.h).as_str(),
            &r.method.to_string(),
            &fmt12(r.max_abs_error),
            &fmt12(r.atm_rel_error),
            &fmt12(r.atm_series),
            &fmt12(r.atm_oracle),
            &fmt12(r.oracle_rel_error),
            &r.status.to_string(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

#[derive(Debug, Serialize)]
pub struct TermJson {
    pub order: usize,
    pub weight: f64,
    pub contribution: f64,
}

#[derive(Debug, Serialize)]
pub struct ParamsJson {
    pub r: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub strike: f64,
    pub maturity: f64,
    pub f0: f64,
    pub h: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub s: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleJson {
    pub value: f64,
    pub richardson_error: f64,
    pub rel_gap: f64,
}

/// JSON document of a single quote.
#[derive(Debug, Serialize)]
pub struct QuoteJson {
    pub price: f64,
    pub regime: String,
    pub method: String,
    pub n_max: Option<usize>,
    pub interaction: f64,
    pub terms: Vec<TermJson>,
    pub params: ParamsJson,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleJson>,
}

impl QuoteJson {
    pub fn new(
        q: &SeriesQuote,
        market: &MarketParams,
        bubble: &SquareBubble,
        s: f64,
        tau: f64,
        oracle: Option<OracleJson>,
    ) -> Self {
        let n_max = match q.method {
            Method::ExactSeries { n_max } | Method::DualExactSeries { n_max } => Some(n_max),
            _ => None,
        };
        QuoteJson {
            price: q.price,
            regime: q.regime.to_string(),
            method: q.method.label().to_string(),
            n_max,
            interaction: q.interaction,
            terms: q
                .terms
                .iter()
                .map(|t| TermJson {
                    order: t.order,
                    weight: t.weight,
                    contribution: t.contribution,
                })
                .collect(),
            params: ParamsJson {
                r: market.r(),
                alpha: market.alpha(),
                sigma: market.sigma(),
                strike: market.strike(),
                maturity: market.maturity(),
                f0: bubble.f0(),
                h: bubble.ratio(market),
                tau1: bubble.tau1(),
                tau2: bubble.tau2(),
                s,
                tau,
            },
            oracle,
        }
    }
}

pub fn quote_json_text(q: &QuoteJson) -> Result<String, CliError> {
    serde_json::to_string_pretty(q)
        .map(|t| t + "\n")
        .map_err(|e| CliError::Io(e.to_string()))
}

/// Human-readable quote with its per-order table.
pub fn quote_text(q: &QuoteJson) -> String {
    let mut out = String::new();
    let p = &q.params;
    let method = match q.n_max {
        Some(n) => format!("{}({n})", q.method),
        None => q.method.clone(),
    };
    out.push_str(&format!("method       {method}\n"));
    out.push_str(&format!("regime       {}\n", q.regime));
    out.push_str(&format!("S            {}\n", fmt12(p.s)));
    out.push_str(&format!("tau          {}\n", fmt12(p.tau)));
    out.push_str(&format!("h = f0/sigma {}\n", fmt12(p.h)));
    out.push_str(&format!("interaction  {}\n", fmt12(q.interaction)));
    out.push_str(&format!("price        {}\n", fmt12(q.price)));
    out.push_str(&format!("\n{:>5}  {:>20}  {:>20}\n", "order", "weight", "contribution"));
    for t in &q.terms {
        out.push_str(&format!(
            "{:>5}  {:>20}  {:>20}\n",
            t.order,
            fmt12(t.weight),
            fmt12(t.contribution)
        ));
    }
    if let Some(o) = &q.oracle {
        out.push_str(&format!("\noracle       {}\n", fmt12(o.value)));
        out.push_str(&format!("oracle_error {}\n", fmt12(o.richardson_error)));
        out.push_str(&format!("rel_gap      {}\n", fmt12(o.rel_gap)));
    }
    out
}

/// Terms as CSV: `order,weight,contribution`.
pub fn quote_csv(q: &QuoteJson) -> Result<Vec<u8>, CliError> {
    let mut w = csv_writer();
    w.write_record(["order", "weight", "contribution"])
        .map_err(csv_err)?;
    for t in &q.terms {
        w.write_record([t.order.to_string(), fmt12(t.weight), fmt12(t.contribution)])
            .map_err(csv_err)?;
    }
    finish(w)
}

/// Triangle rows, one per line, entries separated by single spaces.
pub fn coeffs_text(rows: &[Vec<i128>]) -> String {
    rows.iter()
        .map(|row| {
            row.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(10.450583572185565), "10.4505835722");
        assert_eq!(fmt12(0.1), "0.1");
        assert_eq!(fmt12(300.0), "300");
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-2.5), "-2.5");
        assert_eq!(fmt12(1.234567890123456e-30), "1.23456789012e-30");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }

    #[test]
    fn surface_layout() {
        let pts = [
            SurfacePoint { s: 5.0, tau: 0.0, price: 0.0 },
            SurfacePoint { s: 10.0, tau: 0.0, price: 0.0 },
        ];
        let csv = surface_csv(&pts, Method::ExactSeries { n_max: 12 }, 0.4).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text,
            "S,tau,price,method,h\n5,0,0,exact(12),0.4\n10,0,0,exact(12),0.4\n"
        );
    }

    #[test]
    fn coeffs_rows() {
        assert_eq!(coeffs_text(&[vec![1], vec![1, 1]]), "1\n1 1\n");
    }

    #[test]
    fn atomic_replace() {
        let dir = std::env::temp_dir().join(format!("bubble-bs-out-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
