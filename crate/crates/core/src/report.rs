//! CSV and JSON report bodies. Everything here is a pure function of its
//! inputs so that identical runs give byte-identical files.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bell::{BellKind, BsOutcome, OutcomeTable};
use crate::format::{sci3, sig10};
use crate::schemes::CurvePoint;
use crate::steane::ThresholdResult;

pub const TOOL: &str = "ghzsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever a CSV or JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const BS_TABLE_HEADER: &str =
    "input,success_phi_minus,success_psi_minus,ambiguous,click_deficit";
pub const CURVES_HEADER: &str = "scheme,nbar,ps,physical";
pub const THRESHOLD_TABLE_HEADER: &str =
    "n,eta_threshold,ci_low,ci_high,reference_eta,ratio_to_reference";

/// Reference loss thresholds for N = 3..8.
pub const REFERENCE_THRESHOLDS: [(usize, f64); 6] = [
    (3, 1.3e-3),
    (4, 1.7e-3),
    (5, 1.5e-3),
    (6, 1.3e-3),
    (7, 1.1e-3),
    (8, 0.9e-3),
];

pub fn reference_threshold(n: usize) -> Option<f64> {
    REFERENCE_THRESHOLDS
        .iter()
        .find(|(k, _)| *k == n)
        .map(|&(_, v)| v)
}

pub fn bs_table_csv(rows: &[(BellKind, OutcomeTable)]) -> String {
    let mut out = String::from(BS_TABLE_HEADER);
    out.push('\n');
    for (kind, table) in rows {
        let cells: Vec<String> = BsOutcome::ALL
            .iter()
            .map(|&o| sig10(table.get(o)))
            .collect();
        out.push_str(&format!("{},{}\n", kind.label(), cells.join(",")));
    }
    out
}

pub fn curves_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.scheme.name(),
            sig10(p.nbar),
            sig10(p.ps),
            p.physical as u8
        ));
    }
    out
}

pub fn curves_json(points: &[CurvePoint]) -> Value {
    Value::Array(
        points
            .iter()
            .map(|p| json!({"scheme": p.scheme.name(), "nbar": sig10(p.nbar), "ps": sig10(p.ps), "physical": p.physical}))
            .collect(),
    )
}

pub fn threshold_table_csv(results: &[ThresholdResult]) -> String {
    let mut out = String::from(THRESHOLD_TABLE_HEADER);
    out.push('\n');
    for r in results {
        let (reference, ratio) = match reference_threshold(r.n_photons) {
            Some(v) => (sci3(v), sig10(r.eta_threshold / v)),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n_photons,
            sci3(r.eta_threshold),
            sci3(r.ci_low),
            sci3(r.ci_high),
            reference,
            ratio
        ));
    }
    out
}

pub fn threshold_json(r: &ThresholdResult, samples: u64, config_echo: Value) -> Value {
    json!({
        "n": r.n_photons,
        "eta_threshold": sci3(r.eta_threshold),
        "ci_low": sci3(r.ci_low),
        "ci_high": sci3(r.ci_high),
        "levels": r.levels_used,
        "samples": samples,
        "replica_thresholds": r.replica_thresholds.iter().map(|&v| sci3(v)).collect::<Vec<_>>(),
        "config_echo": config_echo,
    })
}

#[derive(Debug, Serialize)]
pub struct ReportEnvelope<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub schema_version: u32,
    pub command: &'a str,
    pub config: Value,
    pub result: Value,
}

impl<'a> ReportEnvelope<'a> {
    pub fn new(command: &'a str, config: Value, result: Value) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            schema_version: SCHEMA_VERSION,
            command,
            config,
            result,
        }
    }

    pub fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }
}
