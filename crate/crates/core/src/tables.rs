//! The three simulation tables: deterministic bound columns plus seeded
//! Monte Carlo empirical columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expfam::EXP_THIRD_ABS_CENTRAL;
use crate::models::{BoundOptions, Model, ModelKind};
use crate::montecarlo::{run_mse_sweep, run_simulation, SimulationConfig, SimulationReport};
use crate::msebound::{beta_b3, BetaParams};
use crate::steincore::{direct_sum_bound, TestFunction};

pub const EXP_ROWS: [u64; 5] = [10, 100, 1_000, 10_000, 100_000];
pub const BETA_ROWS: [u64; 5] = [7500, 7700, 7900, 8100, 8300];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableId {
    /// Exp(1) as a canonical family.
    One,
    /// Exp(0.5) as a non-canonical family (mean parameter θ₀ = 2).
    Two,
    /// Beta(1.5, 1) MSE.
    Three,
}

impl TableId {
    pub fn from_number(k: u8) -> Result<Self> {
        match k {
            1 => Ok(TableId::One),
            2 => Ok(TableId::Two),
            3 => Ok(TableId::Three),
            _ => Err(Error::Validation(format!("table must be 1, 2 or 3, got {k}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            TableId::One => 1,
            TableId::Two => 2,
            TableId::Three => 3,
        }
    }

    pub fn model(self) -> Model {
        match self {
            TableId::One => Model::new(ModelKind::ExpCanonical, 1.0),
            TableId::Two => Model::new(ModelKind::ExpNoncanonical, 2.0),
            TableId::Three => Model::with_beta(ModelKind::Beta, 1.5, Some(1.0)),
        }
        .expect("fixed table parameters are valid")
    }

    pub fn rows(self) -> &'static [u64] {
        match self {
            TableId::One | TableId::Two => &EXP_ROWS,
            TableId::Three => &BETA_ROWS,
        }
    }

    /// Name of the empirical column.
    pub fn empirical_label(self) -> &'static str {
        match self {
            TableId::One | TableId::Two => "h-specific discrepancy",
            TableId::Three => "empirical MSE",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u64,
    pub bound: f64,
    /// Direct Stein bound on the standardised sample mean, table 2 only.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub direct_bound: Option<f64>,
    pub empirical: Option<f64>,
    pub error: Option<f64>,
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub id: TableId,
    pub model: Model,
    /// Monte Carlo settings; None when only the bound columns were computed.
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub rows: Vec<TableRow>,
    /// Full per-row reports when simulated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<SimulationReport>,
}

/// Deterministic bound at row n.
pub fn table_bound(id: TableId, n: u64) -> Result<f64> {
    let model = id.model();
    match id {
        TableId::One | TableId::Two => {
            let h = TestFunction::reciprocal_quadratic();
            Ok(model.bound(n, h.weights(), &BoundOptions::default())?.total)
        }
        TableId::Three => {
            let b3 = beta_b3(&model.beta_params().expect("beta model"), n)?;
            Ok(b3 * b3 / n as f64)
        }
    }
}

/// h-weighted Stein bound applied directly to the sample mean of the
/// non-canonical exponential model.
pub fn table_direct_bound(n: u64) -> Result<f64> {
    let h = TestFunction::reciprocal_quadratic();
    Ok(h.lip_norm() * direct_sum_bound(1.0, EXP_THIRD_ABS_CENTRAL, n)?)
}

/// Monte Carlo settings for a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableSimulation {
    pub trials: u64,
    pub seed: u64,
    pub threads: Option<usize>,
}

/// Build a table; the empirical columns are filled only when `sim` is given.
pub fn build_table(id: TableId, sim: Option<TableSimulation>) -> Result<Table> {
    let model = id.model();
    let mut rows = Vec::with_capacity(id.rows().len());
    for &n in id.rows() {
        rows.push(TableRow {
            n,
            bound: table_bound(id, n)?,
            direct_bound: (id == TableId::Two).then(|| table_direct_bound(n)).transpose()?,
            empirical: None,
            error: None,
            standard_error: None,
        });
    }
    let mut reports = Vec::new();
    if let Some(s) = sim {
        reports = match id {
            TableId::Three => {
                let p: BetaParams = model.beta_params().expect("beta model");
                run_mse_sweep(&p, id.rows().iter().copied(), s.trials, s.seed, s.threads)?
            }
            _ => id
                .rows()
                .iter()
                .map(|&n| {
                    let mut cfg = SimulationConfig::new(model, n, s.seed);
                    cfg.trials = s.trials;
                    cfg.threads = s.threads;
                    run_simulation(&cfg)
                })
                .collect::<Result<_>>()?,
        };
        for (row, r) in rows.iter_mut().zip(&reports) {
            let emp = r.empirical();
            row.empirical = Some(emp);
            row.error = Some(row.bound - emp);
            // the MSE sweep's standard error column refers to the h-mean, not the MSE
            row.standard_error = if id == TableId::Three { None } else { r.standard_error };
        }
    }
    Ok(Table {
        id,
        model,
        trials: sim.map(|s| s.trials),
        seed: sim.map(|s| s.seed),
        rows,
        reports,
    })
}
