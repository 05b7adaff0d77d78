//! Report rendering. Everything here is deterministic: floats go through
//! ryu's shortest round-trip form, JSON objects sort their keys (serde_json's
//! default map is a BTreeMap), and section order follows input order — two
//! runs on the same inputs and seeds produce byte-identical output.

use ccramp::{AmplitudeResult, NestedReport, TruncationReport};
use serde_json::{json, Value};

/// Shortest round-trip decimal form of a float; non-finite values render as
/// `inf`/`-inf`/`nan` (serde_json would turn them into null).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        let mut buffer = ryu::Buffer::new();
        buffer.format_finite(x).to_string()
    }
}

/// JSON value for a float: a number when finite, the strings from
/// [`fmt_f64`] otherwise.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt_f64(x))
    }
}

/// The knobs a run actually used; every report embeds them.
#[derive(Clone, Copy, Debug, Default)]
pub struct Settings {
    pub tol: f64,
    pub rtol: Option<f64>,
    pub nodes: Option<usize>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub cauchy_tol: Option<f64>,
    pub exponent_threshold: Option<f64>,
}

impl Settings {
    pub fn bare(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    /// One `#`-prefixed line, also used as CSV header comment.
    pub fn comment(&self) -> String {
        let mut parts = vec![format!("tol={}", fmt_f64(self.tol))];
        if let Some(r) = self.rtol {
            parts.push(format!("rtol={}", fmt_f64(r)));
        }
        if let Some(n) = self.nodes {
            parts.push(format!("nodes={n}"));
        }
        if let Some(s) = self.samples {
            parts.push(format!("samples={s}"));
        }
        if let Some(s) = self.seed {
            parts.push(format!("seed={s}"));
        }
        if let Some(c) = self.cauchy_tol {
            parts.push(format!("cauchy_tol={}", fmt_f64(c)));
        }
        if let Some(e) = self.exponent_threshold {
            parts.push(format!("exponent_threshold={}", fmt_f64(e)));
        }
        format!("# {}", parts.join(" "))
    }

    pub fn json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("tol".to_string(), json_f64(self.tol));
        if let Some(r) = self.rtol {
            map.insert("rtol".to_string(), json_f64(r));
        }
        if let Some(n) = self.nodes {
            map.insert("nodes".to_string(), json!(n));
        }
        if let Some(s) = self.samples {
            map.insert("samples".to_string(), json!(s));
        }
        if let Some(s) = self.seed {
            map.insert("seed".to_string(), json!(s));
        }
        if let Some(c) = self.cauchy_tol {
            map.insert("cauchy_tol".to_string(), json_f64(c));
        }
        if let Some(e) = self.exponent_threshold {
            map.insert("exponent_threshold".to_string(), json_f64(e));
        }
        Value::Object(map)
    }
}

pub struct ValidateRow {
    pub name: String,
    pub error: Option<String>,
}

pub fn render_validate_text(rows: &[ValidateRow], pair_errors: &[String]) -> String {
    let mut out = String::new();
    for row in rows {
        match &row.error {
            None => out.push_str(&format!("{}: valid\n", row.name)),
            Some(e) => out.push_str(&format!("{}: {e}\n", row.name)),
        }
    }
    for e in pair_errors {
        out.push_str(&format!("{e}\n"));
    }
    out
}

pub fn validate_json(rows: &[ValidateRow], pair_errors: &[String]) -> Value {
    let states: Vec<Value> = rows
        .iter()
        .map(|r| match &r.error {
            None => json!({"name": r.name, "status": "valid"}),
            Some(e) => json!({"name": r.name, "status": "invalid", "error": e}),
        })
        .collect();
    json!({
        "all_valid": rows.iter().all(|r| r.error.is_none()) && pair_errors.is_empty(),
        "states": states,
        "pair_errors": pair_errors,
    })
}

pub struct AmplitudeRow {
    pub pair: String,
    pub result: AmplitudeResult,
}

pub fn render_amplitude_text(rows: &[AmplitudeRow], log_only: bool) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        out.push_str("no pairs to evaluate\n");
        return out;
    }
    for row in rows {
        let r = &row.result;
        out.push_str(&format!("pair {}\n", row.pair));
        if log_only {
            out.push_str(&format!("  log_value = {}\n", fmt_f64(r.log_value)));
            out.push_str(&format!(
                "  log_det_factor = {}\n",
                fmt_f64(r.det_factor.ln())
            ));
        } else {
            out.push_str(&format!("  value = {}\n", fmt_f64(r.value)));
            out.push_str(&format!("  log_value = {}\n", fmt_f64(r.log_value)));
            out.push_str(&format!("  det_factor = {}\n", fmt_f64(r.det_factor)));
        }
        out.push_str(&format!("  exponent = {}\n", fmt_f64(r.exponent)));
        out.push_str(&format!("  case_tag = {}\n", r.case_tag.as_str()));
    }
    out
}

pub fn amplitude_json(rows: &[AmplitudeRow], log_only: bool) -> Value {
    let list: Vec<Value> = rows
        .iter()
        .map(|row| {
            let r = &row.result;
            if log_only {
                json!({
                    "pair": row.pair,
                    "log_value": json_f64(r.log_value),
                    "log_det_factor": json_f64(r.det_factor.ln()),
                    "exponent": json_f64(r.exponent),
                    "case_tag": r.case_tag.as_str(),
                })
            } else {
                json!({
                    "pair": row.pair,
                    "value": json_f64(r.value),
                    "log_value": json_f64(r.log_value),
                    "det_factor": json_f64(r.det_factor),
                    "exponent": json_f64(r.exponent),
                    "case_tag": r.case_tag.as_str(),
                })
            }
        })
        .collect();
    Value::Array(list)
}

pub struct OracleRow {
    pub pair: String,
    pub formula: AmplitudeResult,
    /// The pair was degenerate and the check ran on the quotient.
    pub reduced: bool,
    /// Disjoint pair: the formula is exactly zero and there is no overlap
    /// integral to check against, so the row passes vacuously.
    pub skipped: Option<String>,
    pub quadrature: Option<f64>,
    pub quadrature_rel_dev: Option<f64>,
    pub mc_estimate: Option<f64>,
    pub mc_stderr: Option<f64>,
    pub mc_sigma_dev: Option<f64>,
    pub within_rtol: bool,
}

pub fn render_oracle_text(rows: &[OracleRow]) -> String {
    let mut out = String::new();
    if rows.is_empty() {
        out.push_str("no pairs to evaluate\n");
        return out;
    }
    for row in rows {
        out.push_str(&format!("pair {}\n", row.pair));
        out.push_str(&format!("  formula = {}\n", fmt_f64(row.formula.value)));
        out.push_str(&format!("  case_tag = {}\n", row.formula.case_tag.as_str()));
        if row.reduced {
            out.push_str("  reduced = true\n");
        }
        if let Some(reason) = &row.skipped {
            out.push_str(&format!("  skipped: {reason}\n"));
        }
        if let Some(q) = row.quadrature {
            out.push_str(&format!("  quadrature = {}\n", fmt_f64(q)));
        }
        if let Some(d) = row.quadrature_rel_dev {
            out.push_str(&format!("  quadrature_rel_dev = {}\n", fmt_f64(d)));
        }
        if let Some(m) = row.mc_estimate {
            out.push_str(&format!("  mc_estimate = {}\n", fmt_f64(m)));
        }
        if let Some(s) = row.mc_stderr {
            out.push_str(&format!("  mc_stderr = {}\n", fmt_f64(s)));
        }
        if let Some(d) = row.mc_sigma_dev {
            out.push_str(&format!("  mc_sigma_dev = {}\n", fmt_f64(d)));
        }
        out.push_str(&format!("  within_rtol = {}\n", row.within_rtol));
    }
    let misses = rows.iter().filter(|r| !r.within_rtol).count();
    if misses == 0 {
        out.push_str("all pairs within rtol\n");
    } else {
        out.push_str(&format!("{misses} pair(s) outside rtol\n"));
    }
    out
}

pub fn oracle_json(rows: &[OracleRow]) -> Value {
    let list: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut map = serde_json::Map::new();
            map.insert("pair".to_string(), json!(row.pair));
            map.insert("formula".to_string(), json_f64(row.formula.value));
            map.insert(
                "case_tag".to_string(),
                json!(row.formula.case_tag.as_str()),
            );
            map.insert("reduced".to_string(), json!(row.reduced));
            if let Some(reason) = &row.skipped {
                map.insert("skipped".to_string(), json!(reason));
            }
            if let Some(q) = row.quadrature {
                map.insert("quadrature".to_string(), json_f64(q));
            }
            if let Some(d) = row.quadrature_rel_dev {
                map.insert("quadrature_rel_dev".to_string(), json_f64(d));
            }
            if let Some(m) = row.mc_estimate {
                map.insert("mc_estimate".to_string(), json_f64(m));
            }
            if let Some(s) = row.mc_stderr {
                map.insert("mc_stderr".to_string(), json_f64(s));
            }
            if let Some(d) = row.mc_sigma_dev {
                map.insert("mc_sigma_dev".to_string(), json_f64(d));
            }
            map.insert("within_rtol".to_string(), json!(row.within_rtol));
            Value::Object(map)
        })
        .collect();
    Value::Array(list)
}

pub enum TruncationRecord {
    Blocks(TruncationReport),
    Ambient(NestedReport),
}

impl TruncationRecord {
    pub fn report(&self) -> &TruncationReport {
        match self {
            TruncationRecord::Blocks(r) => r,
            TruncationRecord::Ambient(n) => &n.truncation,
        }
    }
}

/// The CSV table: one row per step, classification in the last column of the
/// final row only.
pub fn render_truncation_csv(record: &TruncationRecord) -> String {
    let report = record.report();
    let mut out = String::new();
    out.push_str("step,log_det_partial,exponent_partial,amplitude,hs_partial,classification\n");
    let last = report.steps.len();
    for step in &report.steps {
        let classification = if step.step == last {
            report.classification.as_str()
        } else {
            ""
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            step.step,
            fmt_f64(step.log_det_partial),
            fmt_f64(step.exponent_partial),
            fmt_f64(step.amplitude),
            fmt_f64(step.hs_partial),
            classification
        ));
    }
    out
}

pub fn truncation_json(record: &TruncationRecord) -> Value {
    let report = record.report();
    let steps: Vec<Value> = report
        .steps
        .iter()
        .map(|s| {
            json!({
                "step": s.step,
                "log_det_partial": json_f64(s.log_det_partial),
                "exponent_partial": json_f64(s.exponent_partial),
                "amplitude": json_f64(s.amplitude),
                "hs_partial": json_f64(s.hs_partial),
            })
        })
        .collect();
    let mut map = serde_json::Map::new();
    map.insert(
        "mode".to_string(),
        json!(match record {
            TruncationRecord::Blocks(_) => "blocks",
            TruncationRecord::Ambient(_) => "ambient",
        }),
    );
    map.insert(
        "classification".to_string(),
        json!(report.classification.as_str()),
    );
    map.insert(
        "det_tail_variation".to_string(),
        json_f64(report.det_tail_variation),
    );
    map.insert(
        "exponent_tail_variation".to_string(),
        json_f64(report.exponent_tail_variation),
    );
    map.insert(
        "exponent_exceeded_threshold".to_string(),
        json!(report.exponent_exceeded_threshold),
    );
    map.insert(
        "final_amplitude".to_string(),
        json_f64(report.final_amplitude()),
    );
    map.insert("steps".to_string(), Value::Array(steps));
    if let TruncationRecord::Ambient(nested) = record {
        let bounds: Vec<Value> = nested
            .c_spectrum_bounds
            .iter()
            .map(|(lo, hi)| json!([json_f64(*lo), json_f64(*hi)]))
            .collect();
        map.insert("c_spectrum_bounds".to_string(), Value::Array(bounds));
        map.insert(
            "reference_exponents".to_string(),
            Value::Array(nested.reference_exponents.iter().map(|&x| json_f64(x)).collect()),
        );
        map.insert(
            "direct_exponents".to_string(),
            Value::Array(nested.direct_exponents.iter().map(|&x| json_f64(x)).collect()),
        );
        map.insert(
            "ambient_amplitude".to_string(),
            json_f64(nested.ambient_amplitude),
        );
    }
    Value::Object(map)
}
