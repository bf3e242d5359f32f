//! Result serialization. CSV is the plotting format: fixed column order,
//! probabilities printed with 6 decimals and throughputs with 1, so reruns
//! of the same config diff byte-for-byte. JSON carries the same fields at
//! full float precision for downstream tooling.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use ble_link_model::sweep::ParetoCurve;
use ble_link_model::ModelOutputs;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const CSV_HEADER: &str =
    "swept_param,value,tsr,throughput_ideal_bps,throughput_real_bps,p_tf,reliability";

/// One output row. Sweeps produce one per grid point; the single-scenario
/// commands produce exactly one, conventionally filed under `ber` with the
/// scenario's own error rate as the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub swept_param: String,
    pub value: f64,
    pub tsr: f64,
    pub throughput_ideal_bps: f64,
    pub throughput_real_bps: f64,
    pub p_tf: Option<f64>,
    pub reliability: Option<f64>,
}

pub fn rows_from_curves(curves: &[ParetoCurve]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for curve in curves {
        for p in &curve.points {
            rows.push(ResultRow {
                swept_param: curve.swept.name().to_owned(),
                value: p.value,
                tsr: p.tsr,
                throughput_ideal_bps: p.throughput_ideal_bps,
                throughput_real_bps: p.throughput_real_bps,
                p_tf: Some(p.p_tf),
                reliability: Some(p.reliability),
            });
        }
    }
    rows
}

pub fn row_from_model(ber: f64, outputs: &ModelOutputs) -> ResultRow {
    ResultRow {
        swept_param: "ber".to_owned(),
        value: ber,
        tsr: outputs.throughput.tsr,
        throughput_ideal_bps: outputs.throughput.ideal_bps,
        throughput_real_bps: outputs.throughput.real_bps,
        p_tf: outputs.p_tf,
        reliability: outputs.reliability,
    }
}

fn push_opt_prob(line: &mut String, v: Option<f64>) {
    match v {
        Some(v) => write!(line, ",{v:.6}").unwrap(),
        None => line.push(','),
    }
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let mut line = format!(
            "{},{},{:.6},{:.1},{:.1}",
            r.swept_param, r.value, r.tsr, r.throughput_ideal_bps, r.throughput_real_bps
        );
        push_opt_prob(&mut line, r.p_tf);
        push_opt_prob(&mut line, r.reliability);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn to_json(rows: &[ResultRow]) -> String {
    let mut out = serde_json::to_string_pretty(rows).expect("rows serialize");
    out.push('\n');
    out
}

fn parse_f64(field: &str, raw: &str, line_no: usize) -> Result<f64, String> {
    raw.parse::<f64>()
        .map_err(|_| format!("line {line_no}: {field} is not a number: {raw:?}"))
}

fn parse_opt_f64(field: &str, raw: &str, line_no: usize) -> Result<Option<f64>, String> {
    if raw.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, raw, line_no).map(Some)
    }
}

/// Reads back a CSV produced by `to_csv`. Values carry the precision the
/// format does (6 decimals for probabilities, 1 for throughputs), so
/// parse-then-rewrite reproduces the file exactly even though the parsed
/// floats are the rounded ones.
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>, String> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, header)) => return Err(format!("unexpected header: {header:?}")),
        None => return Err("empty file".to_owned()),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(format!("line {line_no}: expected 7 fields, found {}", fields.len()));
        }
        rows.push(ResultRow {
            swept_param: fields[0].to_owned(),
            value: parse_f64("value", fields[1], line_no)?,
            tsr: parse_f64("tsr", fields[2], line_no)?,
            throughput_ideal_bps: parse_f64("throughput_ideal_bps", fields[3], line_no)?,
            throughput_real_bps: parse_f64("throughput_real_bps", fields[4], line_no)?,
            p_tf: parse_opt_f64("p_tf", fields[5], line_no)?,
            reliability: parse_opt_f64("reliability", fields[6], line_no)?,
        });
    }
    Ok(rows)
}

/// Write-then-rename so a failed run never leaves a truncated file at the
/// destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let report = |e: &dyn std::fmt::Display| {
        CliError::input(format!("cannot write {}: {e}", path.display()))
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
        .map_err(|e| report(&e))?;
    tmp.write_all(bytes).map_err(|e| report(&e))?;
    tmp.persist(path).map_err(|e| report(&e))?;
    Ok(())
}
