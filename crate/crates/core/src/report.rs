//! CSV and JSON serialization of reports.
//!
//! Every JSON document is wrapped in an envelope whose `schema` field reads
//! `steinmle/<kind>/v1`. CSV output is comma separated with a header row.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BoundOptions, Model};
use crate::montecarlo::SimulationReport;
use crate::steincore::{kolmogorov_from_bw, BoundBreakdown, HWeights};
use crate::tables::Table;

pub const SCHEMA_VERSION: &str = "v1";

pub fn schema_name(kind: &str) -> String {
    format!("steinmle/{kind}/{SCHEMA_VERSION}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema: String,
    #[serde(flatten)]
    pub body: T,
}

pub fn to_json<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let env = Envelope {
        schema: schema_name(kind),
        body,
    };
    serde_json::to_string_pretty(&env).map_err(|e| Error::Validation(format!("json encoding: {e}")))
}

/// Parse an envelope, checking its schema name.
pub fn from_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Validation(format!("json decoding: {e}")))?;
    let want = schema_name(kind);
    if env.schema != want {
        return Err(Error::Validation(format!("schema `{}` is not `{want}`", env.schema)));
    }
    Ok(env.body)
}

/// A bound evaluation with its Kolmogorov conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub model: Model,
    pub n: u64,
    pub weights: HWeights,
    pub options: BoundOptions,
    pub breakdown: BoundBreakdown,
    /// The bound with unit weights, i.e. on d_bW itself.
    pub bw_bound: f64,
    /// Kolmogorov bound 2√d_bW.
    pub b_k: f64,
}

impl BoundReport {
    pub fn compute(model: Model, n: u64, weights: HWeights, options: BoundOptions) -> Result<Self> {
        let breakdown = model.bound(n, weights, &options)?;
        let bw_bound = if weights == HWeights::UNIT {
            breakdown.total
        } else {
            model.bound(n, HWeights::UNIT, &options)?.total
        };
        Ok(BoundReport {
            model,
            n,
            weights,
            options,
            breakdown,
            bw_bound,
            b_k: kolmogorov_from_bw(bw_bound)?,
        })
    }
}

#[derive(Serialize)]
struct ReportRow<'a> {
    model: &'a str,
    theta0: f64,
    n: u64,
    trials: u64,
    seed: u64,
    empirical_distance: f64,
    empirical_mse: f64,
    bound_total: Option<f64>,
    error: Option<f64>,
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Validation(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

/// Simulation reports as CSV, one row per report.
pub fn reports_csv(reports: &[SimulationReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if reports.is_empty() {
        w.write_record([
            "model",
            "theta0",
            "n",
            "trials",
            "seed",
            "empirical_distance",
            "empirical_mse",
            "bound_total",
            "error",
        ])
        .map_err(csv_err)?;
    }
    for r in reports {
        w.serialize(ReportRow {
            model: &r.model,
            theta0: r.theta0,
            n: r.n,
            trials: r.trials,
            seed: r.seed,
            empirical_distance: r.empirical_distance,
            empirical_mse: r.empirical_mse,
            bound_total: r.bound_total,
            error: r.error,
        })
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// A bound breakdown as `term,value` rows followed by a `total` row.
pub fn breakdown_csv(b: &BoundBreakdown) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["term", "value"]).map_err(csv_err)?;
    for t in &b.terms {
        w.write_record([t.label.as_str(), &t.value.to_string()])
            .map_err(csv_err)?;
    }
    w.write_record(["total", &b.total.to_string()]).map_err(csv_err)?;
    finish_csv(w)
}

#[derive(Serialize)]
struct TableCsvRow {
    table: u8,
    n: u64,
    empirical: Option<f64>,
    bound: f64,
    error: Option<f64>,
    direct_bound: Option<f64>,
    standard_error: Option<f64>,
}

pub fn table_csv(t: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &t.rows {
        w.serialize(TableCsvRow {
            table: t.id.number(),
            n: r.n,
            empirical: r.empirical,
            bound: r.bound,
            error: r.error,
            direct_bound: r.direct_bound,
            standard_error: r.standard_error,
        })
        .map_err(csv_err)?;
    }
    finish_csv(w)
}

/// Render a value with `sig` significant digits, as the published tables do.
pub fn round_sig(x: f64, sig: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i64;
    let decimals = (sig as i64 - 1 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}
