//! Per-step convergence tables.

use std::fmt::Write as _;

use fpkit_core::iterate::IterationTrace;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableFormat {
    #[default]
    Csv,
    Json,
    Markdown,
}

impl TableFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TableFormat::Csv => "csv",
            TableFormat::Json => "json",
            TableFormat::Markdown => "md",
        }
    }
}

impl std::str::FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            other => Err(format!("unknown format {other:?} (csv, json, markdown)")),
        }
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub n: usize,
    pub x: Vec<f64>,
    pub step_norm: Option<f64>,
    pub residual: f64,
    pub apriori: Option<f64>,
    pub aposteriori: Option<f64>,
    /// `d(x_n, x_{n+1}) / d(x_{n−1}, x_n)`
    pub rate_ratio: Option<f64>,
}

pub fn rows(trace: &IterationTrace) -> Result<Vec<Row>> {
    if trace.history != fpkit_core::iterate::History::Full {
        return Err(CliError::config(
            "history",
            "convergence tables need full history",
        ));
    }
    let s = &trace.step_norms;
    Ok(trace
        .iterates
        .iter()
        .enumerate()
        .map(|(n, x)| {
            let b = trace.bounds.as_ref().and_then(|b| b.get(n));
            Row {
                n,
                x: x.coords().to_vec(),
                step_norm: s.get(n).copied(),
                residual: trace.residuals[n],
                apriori: b.map(|b| b.apriori),
                aposteriori: b.and_then(|b| b.aposteriori),
                rate_ratio: match (n.checked_sub(1).map(|p| s[p]), s.get(n)) {
                    (Some(prev), Some(cur)) if prev > 0.0 => Some(cur / prev),
                    _ => None,
                },
            }
        })
        .collect())
}

const HEADER: [&str; 7] = [
    "n",
    "x_n",
    "step_norm",
    "residual",
    "apriori",
    "aposteriori",
    "rate_ratio",
];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn coords(x: &[f64], sep: &str) -> String {
    x.iter().map(f64::to_string).collect::<Vec<_>>().join(sep)
}

fn cells(r: &Row, sep: &str) -> [String; 7] {
    [
        r.n.to_string(),
        coords(&r.x, sep),
        opt(r.step_norm),
        r.residual.to_string(),
        opt(r.apriori),
        opt(r.aposteriori),
        opt(r.rate_ratio),
    ]
}

/// Render the per-step table of a trace.
///
/// Multi-dimensional iterates are joined with `;` in CSV and `, ` in markdown.
pub fn emit_convergence_table(trace: &IterationTrace, format: TableFormat) -> Result<String> {
    let rows = rows(trace)?;
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&HEADER.join(","));
            out.push('\n');
            for r in &rows {
                out.push_str(&cells(r, ";").join(","));
                out.push('\n');
            }
        }
        TableFormat::Json => {
            out = serde_json::to_string_pretty(&rows).expect("rows are finite");
            out.push('\n');
        }
        TableFormat::Markdown => {
            writeln!(out, "| {} |", HEADER.join(" | ")).unwrap();
            writeln!(out, "|{}", "---:|".repeat(HEADER.len())).unwrap();
            for r in &rows {
                writeln!(out, "| {} |", cells(r, ", ").join(" | ")).unwrap();
            }
        }
    }
    Ok(out)
}

/// Render a generic table. Cells are JSON values; strings print unquoted and
/// arrays are joined like multi-dimensional iterates.
pub fn render(headers: &[&str], rows: &[Vec<serde_json::Value>], format: TableFormat) -> String {
    fn text(v: &serde_json::Value, sep: &str) -> String {
        match v {
            serde_json::Value::Null => String::new(),
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(a) => {
                a.iter().map(|v| text(v, sep)).collect::<Vec<_>>().join(sep)
            }
            other => other.to_string(),
        }
    }
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            out.push_str(&headers.join(","));
            out.push('\n');
            for r in rows {
                out.push_str(&r.iter().map(|v| text(v, ";")).collect::<Vec<_>>().join(","));
                out.push('\n');
            }
        }
        TableFormat::Json => {
            let objs: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    headers
                        .iter()
                        .map(|h| h.to_string())
                        .zip(r.iter().cloned())
                        .collect()
                })
                .collect();
            out = serde_json::to_string_pretty(&objs).expect("finite cells");
            out.push('\n');
        }
        TableFormat::Markdown => {
            writeln!(out, "| {} |", headers.join(" | ")).unwrap();
            writeln!(out, "|{}", "---|".repeat(headers.len())).unwrap();
            for r in rows {
                writeln!(
                    out,
                    "| {} |",
                    r.iter()
                        .map(|v| text(v, ", "))
                        .collect::<Vec<_>>()
                        .join(" | ")
                )
                .unwrap();
            }
        }
    }
    out
}
