use std::io::{BufRead, Write};

use super::config::Units;
use super::record::{Metric, RunRecord};
use crate::error::Result;

/// Column order of the long-format CSV; one row per metric.
pub const CSV_COLUMNS: [&str; 13] = [
    "record", "kind", "seed", "point", "metric", "unit", "estimate", "std_error", "ci95", "n", "bound", "relation",
    "violated",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

fn convert(m: &Metric, units: Units) -> Metric {
    match units {
        Units::Nats => m.clone(),
        Units::Bits => m.to_bits(),
    }
}

/// Rescales every information-valued metric to the requested unit.
pub fn in_units(record: &RunRecord, units: Units) -> RunRecord {
    RunRecord { metrics: record.metrics.iter().map(|m| convert(m, units)).collect(), ..record.clone() }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn enum_str<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn point_str(r: &RunRecord) -> String {
    r.point.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

pub fn write_csv<W: Write>(records: &[RunRecord], units: Units, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for (i, r) in records.iter().enumerate() {
        for m in &r.metrics {
            let m = convert(m, units);
            let (bound, relation, violated) = match &m.check {
                Some(c) => (num(c.bound), enum_str(&c.relation), c.violated.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                i.to_string(),
                r.kind.clone(),
                r.seed.to_string(),
                point_str(r),
                m.name.clone(),
                enum_str(&m.unit),
                num(m.value.estimate),
                num(m.value.std_error),
                num(m.value.ci95),
                m.value.n.to_string(),
                bound,
                relation,
                violated,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(records: &[RunRecord], units: Units, mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &in_units(r, units))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(records: &[RunRecord], units: Units, format: OutputFormat, out: W) -> Result<()> {
    match format {
        OutputFormat::Csv => write_csv(records, units, out),
        OutputFormat::Jsonl => write_jsonl(records, units, out),
    }
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
