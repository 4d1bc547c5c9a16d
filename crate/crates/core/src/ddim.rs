//! Descriptive dimension: parametric values, the complexity-slope estimator,
//! pseudo-Ddim of model fusion (prior and posterior weighted) and Ddim of
//! model concatenation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{validate_params, ModelClass, SufficientStat};
use crate::learning::ModelFamily;
use crate::nml::{complexity_table, log_parametric_complexity, nml_codelength, Method};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DdimMethod {
    Parametric,
    ComplexitySlope,
    FusionPrior,
    FusionPosterior,
    Concatenation,
}

/// Method-specific inputs and intermediates behind an estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum DdimDetails {
    Parametric {
        model: String,
    },
    ComplexitySlope {
        model: String,
        n_grid: Vec<usize>,
        log_complexities: Vec<f64>,
        intercept: f64,
    },
    Fusion {
        members: Vec<String>,
        member_ddims: Vec<f64>,
        weights: Vec<f64>,
        beta: f64,
        /// Posterior weights; absent for the prior form.
        #[serde(skip_serializing_if = "Option::is_none")]
        posterior: Option<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Concatenation {
        classes: Vec<String>,
        member_ddims: Vec<f64>,
        ratios: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DdimEstimate {
    pub value: f64,
    pub method: DdimMethod,
    pub details: DdimDetails,
}

/// A prior over distinct model classes with a tempering exponent.
///
/// Members may differ in alphabet for the prior form; the posterior form needs
/// a common alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionSpec {
    members: Vec<ModelClass>,
    weights: Vec<f64>,
    beta: f64,
}

impl FusionSpec {
    pub fn new(members: Vec<ModelClass>, weights: Vec<f64>, beta: f64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidFamily("fusion has no members".into()));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(Error::DuplicateMember(m.spec()));
            }
        }
        if weights.len() != members.len() {
            return Err(Error::InvalidParams(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        validate_params(&weights, None)?;
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "beta must lie in (0, 1], got {beta}"
            )));
        }
        Ok(Self {
            members,
            weights,
            beta,
        })
    }

    /// Uniform prior over the members of a family.
    pub fn uniform(family: &ModelFamily, beta: f64) -> Result<Self> {
        let s = family.size();
        Self::new(family.members().to_vec(), vec![1.0 / s as f64; s], beta)
    }

    pub fn members(&self) -> &[ModelClass] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn member_ddims(&self) -> Vec<f64> {
        member_ddims(&self.members)
    }

    fn specs(&self) -> Vec<String> {
        self.members.iter().map(ModelClass::spec).collect()
    }

    fn common_alphabet(&self) -> Result<usize> {
        let m = self.members[0].alphabet_size();
        if self.members.iter().any(|c| c.alphabet_size() != m) {
            return Err(Error::InvalidFamily(
                "posterior fusion needs members over one alphabet".into(),
            ));
        }
        Ok(m)
    }
}

/// Model classes joined in order with positive ratios summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatSpec {
    classes: Vec<ModelClass>,
    ratios: Vec<f64>,
}

impl ConcatSpec {
    pub fn new(classes: Vec<ModelClass>, ratios: Vec<f64>) -> Result<Self> {
        if classes.is_empty() || classes.len() != ratios.len() {
            return Err(Error::InvalidParams(format!(
                "{} ratios for {} classes",
                ratios.len(),
                classes.len()
            )));
        }
        if let Some(r) = ratios.iter().find(|r| r.is_nan() || **r <= 0.0) {
            return Err(Error::InvalidParams(format!(
                "ratios must be positive, got {r}"
            )));
        }
        validate_params(&ratios, None)?;
        Ok(Self { classes, ratios })
    }

    pub fn classes(&self) -> &[ModelClass] {
        &self.classes
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }
}

fn member_ddims(members: &[ModelClass]) -> Vec<f64> {
    members
        .iter()
        .map(|m| m.parametric_dimension() as f64)
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The number of free parameters.
pub fn ddim_parametric(model: &ModelClass) -> DdimEstimate {
    DdimEstimate {
        value: model.parametric_dimension() as f64,
        method: DdimMethod::Parametric,
        details: DdimDetails::Parametric {
            model: model.spec(),
        },
    }
}

/// Least-squares slope of exact `ln C_n` against `ln(n) / 2` over `n_grid`.
pub fn ddim_slope(model: &ModelClass, n_grid: &[usize]) -> Result<DdimEstimate> {
    if n_grid.len() < 2 || n_grid.windows(2).any(|w| w[0] >= w[1]) || n_grid[0] == 0 {
        return Err(Error::InvalidParams(
            "n grid needs at least two strictly increasing positive sizes".into(),
        ));
    }
    let ys = n_grid
        .iter()
        .map(|&n| log_parametric_complexity(model, n, Method::Exact).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = n_grid.iter().map(|&n| 0.5 * (n as f64).ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys);
    Ok(DdimEstimate {
        value: slope.max(0.0),
        method: DdimMethod::ComplexitySlope,
        details: DdimDetails::ComplexitySlope {
            model: model.spec(),
            n_grid: n_grid.to_vec(),
            log_complexities: ys,
            intercept,
        },
    })
}

/// `(slope, intercept)` of the ordinary least-squares line through the points.
pub(crate) fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    (slope, my - slope * mx)
}

/// Prior-weighted average of member dimensions.
pub fn ddim_fusion_prior(spec: &FusionSpec) -> DdimEstimate {
    let dims = spec.member_ddims();
    DdimEstimate {
        value: dot(&dims, &spec.weights),
        method: DdimMethod::FusionPrior,
        details: DdimDetails::Fusion {
            members: spec.specs(),
            member_ddims: dims,
            weights: spec.weights.clone(),
            beta: spec.beta,
            posterior: None,
            n: None,
        },
    }
}

/// Normalizes `ln p(P_i | x) = -beta (L_i - ln w_i) + const` given the
/// member codelengths `L_i`.
pub fn fusion_posterior_weights(weights: &[f64], codelengths: &[f64], beta: f64) -> Vec<f64> {
    let logs: Vec<f64> = weights
        .iter()
        .zip(codelengths)
        .map(|(&w, &l)| {
            if w == 0.0 {
                f64::NEG_INFINITY
            } else {
                -beta * (l - w.ln())
            }
        })
        .collect();
    let z = log_sum_exp(&logs);
    logs.iter().map(|&v| (v - z).exp()).collect()
}

/// Posterior-weighted average of member dimensions, with the posterior built
/// from NML codelengths of `stat`.
pub fn ddim_fusion_posterior(
    spec: &FusionSpec,
    stat: &SufficientStat,
    method: Method,
) -> Result<DdimEstimate> {
    if stat.n == 0 {
        return Err(Error::EmptySequence);
    }
    if spec.common_alphabet()? != stat.alphabet_size() {
        return Err(Error::InvalidFamily(
            "data alphabet does not match members".into(),
        ));
    }
    let codelengths = spec
        .members
        .iter()
        .map(|m| nml_codelength(m, stat, method).map(|r| r.total))
        .collect::<Result<Vec<_>>>()?;
    let posterior = fusion_posterior_weights(&spec.weights, &codelengths, spec.beta);
    let dims = spec.member_ddims();
    Ok(DdimEstimate {
        value: dot(&dims, &posterior),
        method: DdimMethod::FusionPosterior,
        details: DdimDetails::Fusion {
            members: spec.specs(),
            member_ddims: dims,
            weights: spec.weights.clone(),
            beta: spec.beta,
            posterior: Some(posterior),
            n: Some(stat.n),
        },
    })
}

/// Posterior pseudo-Ddim on the prefixes of `symbols` ending at each checkpoint.
///
/// Complexities come from one table per member, so the whole trace costs a
/// single pass over the data plus the table construction.
pub fn posterior_ddim_trace(
    spec: &FusionSpec,
    symbols: &[usize],
    checkpoints: &[usize],
    method: Method,
) -> Result<Vec<f64>> {
    let m = spec.common_alphabet()?;
    let n_max = checkpoints.iter().copied().max().unwrap_or(0);
    if n_max > symbols.len() || checkpoints.contains(&0) {
        return Err(Error::InvalidParams(
            "checkpoints must lie in 1..=len".into(),
        ));
    }
    let tables = spec
        .members
        .iter()
        .map(|model| complexity_table(model, n_max, method))
        .collect::<Result<Vec<_>>>()?;
    let dims = spec.member_ddims();
    let mut order: Vec<usize> = (0..checkpoints.len()).collect();
    order.sort_by_key(|&i| checkpoints[i]);
    let mut out = vec![0.0; checkpoints.len()];
    let mut counts = vec![0usize; m];
    let mut seen = 0;
    for i in order {
        let t = checkpoints[i];
        for &x in &symbols[seen..t] {
            if x >= m {
                return Err(Error::OutOfRangeSymbol {
                    symbol: x,
                    alphabet: m,
                });
            }
            counts[x] += 1;
        }
        seen = t;
        let codelengths: Vec<f64> = spec
            .members
            .iter()
            .zip(&tables)
            .map(|(model, table)| -model.max_log_likelihood_unchecked(&counts) + table[t])
            .collect();
        let posterior = fusion_posterior_weights(&spec.weights, &codelengths, spec.beta);
        out[i] = dot(&dims, &posterior);
    }
    Ok(out)
}

/// Ratio-weighted average of class dimensions.
pub fn ddim_concat(spec: &ConcatSpec) -> DdimEstimate {
    let dims = member_ddims(&spec.classes);
    DdimEstimate {
        value: dot(&dims, &spec.ratios),
        method: DdimMethod::Concatenation,
        details: DdimDetails::Concatenation {
            classes: spec.classes.iter().map(ModelClass::spec).collect(),
            member_ddims: dims,
            ratios: spec.ratios.clone(),
        },
    }
}

/// Checks `0 < t_1 < ... < t_m < n`.
pub(crate) fn validate_change_points(change_points: &[usize], n: usize) -> Result<()> {
    let mut prev = 0;
    for &t in change_points {
        if t <= prev || t >= n {
            return Err(Error::InvalidChangePoints(format!(
                "{change_points:?} is not strictly increasing inside (0, {n})"
            )));
        }
        prev = t;
    }
    Ok(())
}

/// Segment ratios `ln(len_i) / sum_j ln(len_j)`, with length-one segments
/// weighted `ln 2`.
pub fn ratios_from_segmentation(change_points: &[usize], n: usize) -> Result<Vec<f64>> {
    validate_change_points(change_points, n)?;
    if change_points.is_empty() {
        return Ok(vec![1.0]);
    }
    let mut bounds = Vec::with_capacity(change_points.len() + 2);
    bounds.push(0);
    bounds.extend_from_slice(change_points);
    bounds.push(n);
    let logs: Vec<f64> = bounds
        .windows(2)
        .map(|w| ((w[1] - w[0]).max(2) as f64).ln())
        .collect();
    let total: f64 = logs.iter().sum();
    Ok(logs.iter().map(|l| l / total).collect())
}
