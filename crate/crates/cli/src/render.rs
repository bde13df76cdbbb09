//! CSV and JSON renderings. Both go through serde, so a number prints with
//! the same shortest round-trip digits in either format.

use std::io::Write;

use clap::ValueEnum;
use kanon_core::analytics::DesignPlan;
use kanon_core::simulation::SimReport;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanRow {
    pub regime: String,
    pub m: u32,
    pub group_size: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub l: Option<u64>,
    pub k: u64,
}

impl From<&DesignPlan> for PlanRow {
    fn from(p: &DesignPlan) -> Self {
        Self {
            regime: p.regime.to_string(),
            m: p.m,
            group_size: p.expected_group_size,
            lambda: p.lambda,
            epsilon: p.epsilon,
            l: p.l,
            k: p.k,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveRow {
    pub m: u32,
    /// One minus the integral disconnect probability.
    pub connected: f64,
    pub lambda: f64,
    /// `1 - e^-lambda`.
    pub poisson: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyRow {
    pub n: u64,
    pub m: u32,
    pub lambda: f64,
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub closed_form: f64,
}

/// One `metric,value,std_error` line of a report. Estimates fill both value
/// columns, map entries are keyed `field.key`, absent fields stay empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub metric: String,
    pub value: String,
    pub std_error: String,
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl ReportRow {
    pub fn flatten(report: &SimReport) -> Vec<ReportRow> {
        let value = serde_json::to_value(report).expect("report serializes");
        let Value::Object(fields) = value else { unreachable!("report is a struct") };
        let row = |metric: String, value: String, std_error: String| ReportRow { metric, value, std_error };
        let mut rows = Vec::new();
        for (key, v) in fields {
            match &v {
                Value::Object(obj) if obj.len() == 2 && obj.contains_key("value") && obj.contains_key("std_error") => {
                    rows.push(row(key, scalar(&obj["value"]), scalar(&obj["std_error"])))
                }
                Value::Object(obj) => {
                    for (k, inner) in obj {
                        rows.push(row(format!("{key}.{k}"), scalar(inner), String::new()));
                    }
                }
                other => rows.push(row(key, scalar(other), String::new())),
            }
        }
        rows
    }
}

pub fn write_json<T: Serialize + ?Sized>(value: &T, w: &mut dyn Write) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn write_rows<T: Serialize>(format: Format, rows: &[T], w: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Json => write_json(rows, w),
        Format::Csv => {
            let mut out = csv::Writer::from_writer(w);
            for r in rows {
                out.serialize(r)?;
            }
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_one<T: Serialize>(format: Format, row: &T, w: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Json => write_json(row, w),
        Format::Csv => write_rows(Format::Csv, std::slice::from_ref(row), w),
    }
}
