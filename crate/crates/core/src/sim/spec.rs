//! Experiment configuration, as read from JSON.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::change::{ModelSequence, PiecewiseSource, SegmentConstraints};
use crate::error::{Error, Result};
use crate::family::ModelClass;
use crate::learning::ModelFamily;
use crate::nml::Method;

/// Bound levels used when neither an epsilon grid nor levels are given.
pub const DEFAULT_BOUND_LEVELS: [f64; 8] = [0.9, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConvergenceRate,
    AgnosticRate,
    ExpectedDistance,
    Type1Error,
    Type2Error,
    DdimSlope,
    PosteriorDdimTrace,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::ConvergenceRate,
        ExperimentKind::AgnosticRate,
        ExperimentKind::ExpectedDistance,
        ExperimentKind::Type1Error,
        ExperimentKind::Type2Error,
        ExperimentKind::DdimSlope,
        ExperimentKind::PosteriorDdimTrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ConvergenceRate => "convergence_rate",
            ExperimentKind::AgnosticRate => "agnostic_rate",
            ExperimentKind::ExpectedDistance => "expected_distance",
            ExperimentKind::Type1Error => "type1_error",
            ExperimentKind::Type2Error => "type2_error",
            ExperimentKind::DdimSlope => "ddim_slope",
            ExperimentKind::PosteriorDdimTrace => "posterior_ddim_trace",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_").to_ascii_lowercase();
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown experiment {s:?}")))
    }
}

/// Which change test a Type I / Type II experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    #[default]
    Multiple,
    Single,
}

/// A model sequence whose change points are fractions of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePlan {
    #[serde(default)]
    pub boundaries: Vec<f64>,
    pub models: Vec<String>,
}

/// A piecewise i.i.d. source whose change points are fractions of `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePlan {
    #[serde(default)]
    pub boundaries: Vec<f64>,
    pub models: Vec<String>,
    pub params: Vec<Vec<f64>>,
}

fn change_points_at(boundaries: &[f64], n: usize) -> Result<Vec<usize>> {
    boundaries
        .iter()
        .map(|&b| {
            if b > 0.0 && b < 1.0 {
                Ok((b * n as f64).round() as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "boundary {b} is not inside (0, 1)"
                )))
            }
        })
        .collect()
}

fn parse_models(models: &[String]) -> Result<Vec<ModelClass>> {
    models.iter().map(|s| s.parse()).collect()
}

impl ReferencePlan {
    pub fn at(&self, n: usize) -> Result<ModelSequence> {
        ModelSequence::new(
            change_points_at(&self.boundaries, n)?,
            parse_models(&self.models)?,
        )
    }
}

impl SourcePlan {
    pub fn at(&self, n: usize) -> Result<PiecewiseSource> {
        PiecewiseSource::new(
            change_points_at(&self.boundaries, n)?,
            parse_models(&self.models)?,
            self.params.clone(),
        )
    }
}

/// One stretch of a data stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamPart {
    pub length: usize,
    pub params: Vec<f64>,
}

/// Experiment-specific settings, tagged by `experiment`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum Experiment {
    /// Frequency of `d_B(p_hat, p*) > eps` for truths inside the family.
    ConvergenceRate {
        family: String,
        truths: Vec<Vec<f64>>,
    },
    /// Same event for truths that may lie outside every member.
    AgnosticRate {
        family: String,
        truths: Vec<Vec<f64>>,
    },
    /// Mean `d_B(p_hat, p*)` with `p*` drawn from a prior over members.
    ExpectedDistance { family: String, weights: Vec<f64> },
    /// H1 frequency on data from the null.
    Type1Error {
        family: String,
        #[serde(default)]
        mode: TestMode,
        reference: ReferencePlan,
        /// Segment parameters of the data source; classes are the reference's.
        params: Vec<Vec<f64>>,
        /// Split fraction of the single-change test.
        #[serde(default = "half")]
        split: f64,
        #[serde(default)]
        max_changes: Option<usize>,
        #[serde(default = "one")]
        min_segment_len: usize,
    },
    /// H0 frequency on data from an alternative.
    Type2Error {
        family: String,
        #[serde(default)]
        mode: TestMode,
        /// Null model sequence of the multiple test; ignored by the single test.
        reference: ReferencePlan,
        truth: SourcePlan,
        #[serde(default)]
        max_changes: Option<usize>,
        #[serde(default = "one")]
        min_segment_len: usize,
    },
    /// Complexity-slope Ddim over `n_grid` for each model.
    DdimSlope { models: Vec<String> },
    /// Posterior pseudo-Ddim on prefixes (`n_grid`) of a piecewise stream.
    PosteriorDdimTrace {
        family: String,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default = "one_f")]
        beta: f64,
        stream: Vec<StreamPart>,
    },
}

fn half() -> f64 {
    0.5
}

fn one() -> usize {
    1
}

fn one_f() -> f64 {
    1.0
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::ConvergenceRate { .. } => ExperimentKind::ConvergenceRate,
            Experiment::AgnosticRate { .. } => ExperimentKind::AgnosticRate,
            Experiment::ExpectedDistance { .. } => ExperimentKind::ExpectedDistance,
            Experiment::Type1Error { .. } => ExperimentKind::Type1Error,
            Experiment::Type2Error { .. } => ExperimentKind::Type2Error,
            Experiment::DdimSlope { .. } => ExperimentKind::DdimSlope,
            Experiment::PosteriorDdimTrace { .. } => ExperimentKind::PosteriorDdimTrace,
        }
    }
}

/// A complete, reproducible experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub experiment: Experiment,
    pub n_grid: Vec<usize>,
    /// Explicit thresholds.
    #[serde(default)]
    pub epsilon_grid: Vec<f64>,
    /// Bound values whose thresholds are solved for at each `n`.
    #[serde(default)]
    pub bound_levels: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub method: Method,
}

impl ExperimentSpec {
    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind()
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.n_grid.is_empty()
            || self.n_grid.windows(2).any(|w| w[0] >= w[1])
            || self.n_grid[0] == 0
        {
            return Err(Error::InvalidConfig(
                "n_grid must be non-empty, positive and ascending".into(),
            ));
        }
        if let Some(e) = self
            .epsilon_grid
            .iter()
            .find(|e| !(**e >= 0.0 && e.is_finite()))
        {
            return Err(Error::InvalidConfig(format!(
                "epsilon {e} must be finite and >= 0"
            )));
        }
        if let Some(b) = self.bound_levels.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(Error::InvalidConfig(format!(
                "bound level {b} is not inside (0, 1)"
            )));
        }
        Ok(())
    }

    /// Bound levels in effect: the configured ones, or the defaults when no
    /// explicit epsilon grid is given either.
    pub fn effective_levels(&self) -> Vec<f64> {
        if self.bound_levels.is_empty() && self.epsilon_grid.is_empty() {
            DEFAULT_BOUND_LEVELS.to_vec()
        } else {
            self.bound_levels.clone()
        }
    }

    /// The built-in configuration of each experiment.
    pub fn preset(kind: ExperimentKind, master_seed: u64) -> Self {
        let fair_vs_bernoulli = "fixed:0.5,0.5;bernoulli".to_string();
        let (experiment, n_grid, epsilon_grid, trials) = match kind {
            ExperimentKind::ConvergenceRate => (
                Experiment::ConvergenceRate {
                    family: fair_vs_bernoulli,
                    truths: vec![vec![0.2, 0.8], vec![0.4, 0.6], vec![0.5, 0.5]],
                },
                vec![50, 100, 200],
                vec![],
                2000,
            ),
            ExperimentKind::AgnosticRate => (
                Experiment::AgnosticRate {
                    family: "fixed:0.5,0.5;fixed:0.7,0.3".into(),
                    truths: vec![vec![0.4, 0.6]],
                },
                vec![50, 100, 200],
                vec![],
                2000,
            ),
            ExperimentKind::ExpectedDistance => (
                Experiment::ExpectedDistance {
                    family: fair_vs_bernoulli,
                    weights: vec![0.5, 0.5],
                },
                vec![50, 100, 200, 400, 800],
                vec![],
                500,
            ),
            ExperimentKind::Type1Error => (
                Experiment::Type1Error {
                    family: fair_vs_bernoulli,
                    mode: TestMode::Multiple,
                    reference: ReferencePlan {
                        boundaries: vec![],
                        models: vec!["fixed:0.5,0.5".into()],
                    },
                    params: vec![vec![0.5, 0.5]],
                    split: 0.5,
                    max_changes: Some(3),
                    min_segment_len: 1,
                },
                vec![50, 100, 200],
                vec![],
                2000,
            ),
            ExperimentKind::Type2Error => (
                Experiment::Type2Error {
                    family: "fixed:0.8,0.2;fixed:0.2,0.8;bernoulli".into(),
                    mode: TestMode::Multiple,
                    reference: ReferencePlan {
                        boundaries: vec![],
                        models: vec!["bernoulli".into()],
                    },
                    truth: SourcePlan {
                        boundaries: vec![0.5],
                        models: vec!["fixed:0.8,0.2".into(), "fixed:0.2,0.8".into()],
                        params: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
                    },
                    max_changes: Some(3),
                    min_segment_len: 1,
                },
                vec![50, 100, 200],
                vec![0.0, 0.01, 0.02],
                500,
            ),
            ExperimentKind::DdimSlope => (
                Experiment::DdimSlope {
                    models: vec![
                        "bernoulli".into(),
                        "multinomial:3".into(),
                        "multinomial:4".into(),
                    ],
                },
                vec![400, 800, 1600, 3200],
                vec![],
                1,
            ),
            ExperimentKind::PosteriorDdimTrace => (
                Experiment::PosteriorDdimTrace {
                    family: fair_vs_bernoulli,
                    weights: None,
                    beta: 1.0,
                    stream: vec![
                        StreamPart {
                            length: 500,
                            params: vec![0.5, 0.5],
                        },
                        StreamPart {
                            length: 500,
                            params: vec![0.2, 0.8],
                        },
                    ],
                },
                (1..=20).map(|i| i * 50).collect(),
                vec![],
                1,
            ),
        };
        ExperimentSpec {
            experiment,
            n_grid,
            epsilon_grid,
            bound_levels: vec![],
            trials,
            master_seed,
            method: Method::Exact,
        }
    }
}

pub(crate) fn parse_family(text: &str) -> Result<ModelFamily> {
    text.parse()
}

pub(crate) fn constraints(
    max_changes: Option<usize>,
    min_segment_len: usize,
) -> SegmentConstraints {
    SegmentConstraints {
        max_changes,
        min_segment_len,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_json() {
        for kind in ExperimentKind::ALL {
            let spec = ExperimentSpec::preset(kind, 42);
            spec.validate().unwrap();
            let json = serde_json::to_string(&spec).unwrap();
            let back: ExperimentSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
            assert_eq!(back.kind(), kind);
            assert_eq!(kind.name().parse::<ExperimentKind>().unwrap(), kind);
        }
        assert_eq!(
            "type1-error".parse::<ExperimentKind>().unwrap(),
            ExperimentKind::Type1Error
        );
    }

    #[test]
    fn reads_minimal_config() {
        let json = r#"{"experiment":"type1_error","family":"fixed:0.5,0.5;bernoulli",
            "reference":{"models":["fixed:0.5,0.5"]},"params":[[0.5,0.5]],
            "n_grid":[20],"trials":5,"master_seed":1}"#;
        let spec: ExperimentSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec.method, Method::Auto);
        assert_eq!(spec.effective_levels(), DEFAULT_BOUND_LEVELS.to_vec());
        match spec.experiment {
            Experiment::Type1Error {
                mode,
                split,
                min_segment_len,
                ..
            } => {
                assert_eq!(mode, TestMode::Multiple);
                assert_eq!(split, 0.5);
                assert_eq!(min_segment_len, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn plans_resolve_at_n() {
        let plan = SourcePlan {
            boundaries: vec![0.5],
            models: vec!["bernoulli".into(), "bernoulli".into()],
            params: vec![vec![0.8, 0.2], vec![0.2, 0.8]],
        };
        assert_eq!(plan.at(200).unwrap().change_points(), &[100]);
        let bad = ReferencePlan {
            boundaries: vec![1.0],
            models: vec!["bernoulli".into(), "fixed:0.5,0.5".into()],
        };
        assert!(bad.at(10).is_err());
    }

    #[test]
    fn validation() {
        let mut spec = ExperimentSpec::preset(ExperimentKind::ConvergenceRate, 1);
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::preset(ExperimentKind::ConvergenceRate, 1);
        spec.n_grid = vec![100, 50];
        assert!(spec.validate().is_err());
        let mut spec = ExperimentSpec::preset(ExperimentKind::ConvergenceRate, 1);
        spec.bound_levels = vec![1.5];
        assert!(spec.validate().is_err());
    }
}
