//! CSV and plain-text tables for benchmark rows.
//!
//! Column order is fixed. Infeasible rows keep their scheme and requested
//! factor and leave every measured column empty.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::bench::{BenchResult, BenchRow};
use crate::error::{Error, Result};
use crate::operator::OperatorKind;

pub const COLUMNS: [&str; 9] = [
    "scheme",
    "requested_factor",
    "achieved_factor",
    "params",
    "macs",
    "median_ns",
    "p10_ns",
    "p90_ns",
    "speedup",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Table,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "table" => Ok(ReportFormat::Table),
            other => Err(Error::param(format!("unknown report format '{other}'"))),
        }
    }
}

fn fields(row: &BenchRow) -> [String; 9] {
    match row {
        BenchRow::Measured(r) => [
            r.scheme.to_string(),
            r.factor.to_string(),
            r.achieved_factor.to_string(),
            r.params.to_string(),
            r.macs.to_string(),
            r.median_ns.to_string(),
            r.p10_ns.to_string(),
            r.p90_ns.to_string(),
            r.speedup_vs_dense.to_string(),
        ],
        BenchRow::Infeasible { scheme, factor, .. } => [
            scheme.to_string(),
            factor.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ],
    }
}

pub fn emit_report(rows: &[BenchRow], format: ReportFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::param("no benchmark rows to report"));
    }
    Ok(match format {
        ReportFormat::Csv => emit_csv(rows),
        ReportFormat::Table => emit_table(rows),
    })
}

fn emit_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COLUMNS).expect("in-memory write");
    for row in rows {
        w.write_record(fields(row)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

fn emit_table(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>9} {:>9} {:>10} {:>12} {:>12} {:>12} {:>12} {:>8}",
        "scheme", "requested", "achieved", "params", "macs", "median_ns", "p10_ns", "p90_ns", "speedup"
    );
    for row in rows {
        match row {
            BenchRow::Measured(r) => {
                let _ = writeln!(
                    out,
                    "{:<6} {:>9.2} {:>9.3} {:>10} {:>12} {:>12} {:>12} {:>12} {:>8.3}",
                    r.scheme.as_str(),
                    r.factor,
                    r.achieved_factor,
                    r.params,
                    r.macs,
                    r.median_ns,
                    r.p10_ns,
                    r.p90_ns,
                    r.speedup_vs_dense
                );
            }
            BenchRow::Infeasible { scheme, factor, reason } => {
                let _ = writeln!(out, "{:<6} {:>9.2} infeasible: {reason}", scheme.as_str(), factor);
            }
        }
    }
    out
}

fn parse_num<T: FromStr>(field: &str, column: &str) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::param(format!("bad value '{field}' in column {column}")))
}

/// Reads rows back from [`ReportFormat::Csv`] output.
pub fn parse_report_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::param(e.to_string()))?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::param(format!("unexpected report header: {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(|e| Error::param(e.to_string()))?;
        let scheme: OperatorKind = rec[0].parse()?;
        let factor: f64 = parse_num(&rec[1], COLUMNS[1])?;
        if rec.iter().skip(2).all(str::is_empty) {
            rows.push(BenchRow::Infeasible {
                scheme,
                factor,
                reason: "infeasible".to_string(),
            });
            continue;
        }
        rows.push(BenchRow::Measured(BenchResult {
            scheme,
            factor,
            achieved_factor: parse_num(&rec[2], COLUMNS[2])?,
            params: parse_num(&rec[3], COLUMNS[3])?,
            macs: parse_num(&rec[4], COLUMNS[4])?,
            index_loads: 0,
            median_ns: parse_num(&rec[5], COLUMNS[5])?,
            p10_ns: parse_num(&rec[6], COLUMNS[6])?,
            p90_ns: parse_num(&rec[7], COLUMNS[7])?,
            speedup_vs_dense: parse_num(&rec[8], COLUMNS[8])?,
        }));
    }
    Ok(rows)
}
