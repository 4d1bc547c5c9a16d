//! Experiment reports and their tidy CSV form.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::change::{
    single_type1_bound_value, single_type2_bound_value, type1_bound_value, type2_bound_value,
};
use crate::error::{Error, Result};
use crate::learning::{agnostic_bound, convergence_bound};
use crate::sim::spec::{ExperimentKind, ExperimentSpec};
use crate::sim::stats::BoundStatus;

/// Version of the report and CLI JSON layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Everything a row's bound depends on besides `n` and `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundInputs {
    Convergence {
        log_complexity: f64,
        family_size: usize,
    },
    Agnostic {
        j_n: f64,
        family_size: usize,
        log_ratio_range: f64,
    },
    Type1 {
        log_complexity_sum: f64,
    },
    SingleType1 {
        log_complexity: f64,
        family_size: usize,
    },
    Type2 {
        distance: f64,
        log_complexity_sum: f64,
        model_codelength: f64,
    },
    SingleType2 {
        distance: f64,
        log_family_complexity: f64,
        log_complexity_first: f64,
        log_complexity_second: f64,
        family_size: usize,
    },
}

impl BoundInputs {
    pub fn evaluate(&self, n: usize, epsilon: f64) -> f64 {
        match *self {
            BoundInputs::Convergence {
                log_complexity,
                family_size,
            } => convergence_bound(n, epsilon, log_complexity, family_size),
            BoundInputs::Agnostic {
                j_n,
                family_size,
                log_ratio_range,
            } => agnostic_bound(n, epsilon, j_n, family_size, log_ratio_range),
            BoundInputs::Type1 { log_complexity_sum } => {
                type1_bound_value(n, epsilon, log_complexity_sum)
            }
            BoundInputs::SingleType1 {
                log_complexity,
                family_size,
            } => single_type1_bound_value(n, epsilon, log_complexity, family_size),
            BoundInputs::Type2 {
                distance,
                log_complexity_sum,
                model_codelength,
            } => type2_bound_value(n, epsilon, distance, log_complexity_sum, model_codelength),
            BoundInputs::SingleType2 {
                distance,
                log_family_complexity,
                log_complexity_first,
                log_complexity_second,
                family_size,
            } => single_type2_bound_value(
                n,
                epsilon,
                distance,
                log_family_complexity,
                log_complexity_first,
                log_complexity_second,
                family_size,
            ),
        }
    }
}

/// One `(label, n, epsilon, metric)` cell of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Sub-configuration the row belongs to, e.g. the true distribution.
    pub label: String,
    pub metric: String,
    pub n: usize,
    pub epsilon: Option<f64>,
    /// Bound value the epsilon was solved for, when it came from a level.
    pub bound_level: Option<f64>,
    pub trials: usize,
    pub events: Option<usize>,
    /// Event frequency, mean or estimate.
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub bound: Option<f64>,
    pub bound_inputs: Option<BoundInputs>,
    pub status: BoundStatus,
}

impl ReportRow {
    /// Re-evaluates the bound from the stored inputs.
    pub fn recomputed_bound(&self) -> Option<f64> {
        Some(self.bound_inputs.as_ref()?.evaluate(self.n, self.epsilon?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeding {
    pub master_seed: u64,
    pub scheme: String,
}

/// Seed-splitting scheme recorded in every report.
pub const SEED_SCHEME: &str =
    "chacha8: seed_from_u64(master_seed), stream (grid_index << 32) | trial";

/// Rows plus the configuration that produced them. Contains no timing or
/// scheduling information, so reruns with the same spec are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub spec: ExperimentSpec,
    pub seeding: Seeding,
    pub rows: Vec<ReportRow>,
    pub summary: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    experiment: &'a str,
    label: &'a str,
    metric: &'a str,
    n: usize,
    epsilon: Option<f64>,
    bound_level: Option<f64>,
    trials: usize,
    events: Option<usize>,
    value: f64,
    ci_low: Option<f64>,
    ci_high: Option<f64>,
    bound: Option<f64>,
    status: BoundStatus,
}

impl ExperimentReport {
    pub fn new(
        spec: &ExperimentSpec,
        rows: Vec<ReportRow>,
        summary: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: spec.kind(),
            spec: spec.clone(),
            seeding: Seeding {
                master_seed: spec.master_seed,
                scheme: SEED_SCHEME.into(),
            },
            rows,
            summary,
        }
    }

    pub fn rows_with_status(&self, status: BoundStatus) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.status == status)
    }

    /// True when no row violates its bound.
    pub fn bounds_hold(&self) -> bool {
        self.rows_with_status(BoundStatus::Violated)
            .next()
            .is_none()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Output(e.to_string()))
    }

    /// One CSV line per row.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let experiment = self.experiment.name();
        for r in &self.rows {
            w.serialize(CsvRow {
                experiment,
                label: &r.label,
                metric: &r.metric,
                n: r.n,
                epsilon: r.epsilon,
                bound_level: r.bound_level,
                trials: r.trials,
                events: r.events,
                value: r.value,
                ci_low: r.ci_low,
                ci_high: r.ci_high,
                bound: r.bound,
                status: r.status,
            })
            .map_err(|e| Error::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Output(e.to_string()))?;
        Ok(())
    }
}
