//! Experiment drivers. Each trial draws from its own random stream and
//! returns a raw statistic; thresholds are applied afterwards, so one batch
//! of trials serves every epsilon of a grid point.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp1;

use crate::change::{
    mdl_change_statistic, single_change_statistic, single_type2_bound, type2_bound, PiecewiseSource,
};
use crate::ddim::{ddim_parametric, ddim_slope, posterior_ddim_trace, FusionSpec};
use crate::divergence::{bhattacharyya, DistributionHandle};
use crate::error::{Error, Result};
use crate::family::{draw_iid, sufficient_stat, validate_params, ModelClass};
use crate::learning::{
    agnostic_epsilon_for_level, convergence_epsilon_for_level, j_n, log_ratio_range, mdl_learn,
    ModelFamily,
};
use crate::nml::{log_parametric_complexity, Method, NmlDistribution};
use crate::sim::exec::{map_trials, trial_rng, Execution};
use crate::sim::report::{BoundInputs, ExperimentReport, ReportRow};
use crate::sim::spec::{constraints, parse_family, Experiment, ExperimentSpec, TestMode};
use crate::sim::stats::{wilson95, z95, BoundStatus};

/// Largest threshold searched when solving the agnostic bound for a level.
const AGNOSTIC_EPSILON_MAX: f64 = 10.0;

/// Runs any experiment.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    spec.validate()?;
    match &spec.experiment {
        Experiment::ConvergenceRate { .. } => run_convergence_rate(spec, exec),
        Experiment::AgnosticRate { .. } => run_agnostic_rate(spec, exec),
        Experiment::ExpectedDistance { .. } => run_expected_distance(spec, exec),
        Experiment::Type1Error { .. } => run_type1(spec, exec),
        Experiment::Type2Error { .. } => run_type2(spec, exec),
        Experiment::DdimSlope { .. } => run_ddim_slope(spec),
        Experiment::PosteriorDdimTrace { .. } => run_posterior_ddim_trace(spec, exec),
    }
}

#[derive(Debug, Clone, Copy)]
struct Threshold {
    epsilon: f64,
    level: Option<f64>,
}

/// Explicit epsilons first, then one solved epsilon per bound level.
fn thresholds(spec: &ExperimentSpec, solve: impl Fn(f64) -> Option<f64>) -> Vec<Threshold> {
    let mut out: Vec<Threshold> = spec
        .epsilon_grid
        .iter()
        .map(|&epsilon| Threshold {
            epsilon,
            level: None,
        })
        .collect();
    for level in spec.effective_levels() {
        if let Some(epsilon) = solve(level).filter(|e| e.is_finite() && *e >= 0.0) {
            out.push(Threshold {
                epsilon,
                level: Some(level),
            });
        }
    }
    out
}

fn frequency_row(
    label: &str,
    metric: &str,
    n: usize,
    th: Threshold,
    events: usize,
    trials: usize,
    inputs: BoundInputs,
) -> ReportRow {
    let bound = inputs.evaluate(n, th.epsilon);
    let (lo, hi) = wilson95(events, trials);
    ReportRow {
        label: label.into(),
        metric: metric.into(),
        n,
        epsilon: Some(th.epsilon),
        bound_level: th.level,
        trials,
        events: Some(events),
        value: events as f64 / trials as f64,
        ci_low: Some(lo),
        ci_high: Some(hi),
        bound: Some(bound),
        status: BoundStatus::judge(Some(bound), events, trials),
        bound_inputs: Some(inputs),
    }
}

/// Mean with a normal 95% interval (no interval for a single value).
fn mean_row(label: &str, metric: &str, n: usize, values: &[f64]) -> ReportRow {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let (lo, hi) = if values.len() > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
        let half = z95() * (var / k).sqrt();
        (Some(mean - half), Some(mean + half))
    } else {
        (None, None)
    };
    ReportRow {
        label: label.into(),
        metric: metric.into(),
        n,
        epsilon: None,
        bound_level: None,
        trials: values.len(),
        events: None,
        value: mean,
        ci_low: lo,
        ci_high: hi,
        bound: None,
        bound_inputs: None,
        status: BoundStatus::NotApplicable,
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Index of the first member that contains `truth`.
fn true_member(family: &ModelFamily, truth: &[f64]) -> Result<usize> {
    family
        .members()
        .iter()
        .position(|m| match m.fixed_params() {
            Some(p) => p.iter().zip(truth).all(|(a, b)| (a - b).abs() <= 1e-12),
            None => true,
        })
        .ok_or_else(|| {
            Error::InvalidConfig(format!(
                "truth ({}) lies in no family member; use agnostic_rate",
                join(truth)
            ))
        })
}

/// Exact `d_B(p_NML(P_i), p*^n)` for every member.
fn member_distances(
    family: &ModelFamily,
    truth: &[f64],
    n: usize,
    method: Method,
) -> Result<Vec<f64>> {
    let target = DistributionHandle::fixed_product(truth.to_vec(), n)?;
    family
        .members()
        .iter()
        .map(|m| {
            let nml = NmlDistribution::new(m.clone(), n, method)?;
            bhattacharyya(&DistributionHandle::nml(nml), &target)
        })
        .collect()
}

fn learn_trials(
    spec: &ExperimentSpec,
    exec: Execution,
    family: &ModelFamily,
    truth: &[f64],
    n: usize,
    grid_index: usize,
) -> Result<Vec<usize>> {
    let m = family.alphabet_size();
    map_trials(exec, spec.trials, |t| {
        let mut rng = trial_rng(spec.master_seed, grid_index, t);
        let x = draw_iid(truth, n, &mut rng)?;
        Ok(mdl_learn(family, &sufficient_stat(&x, m)?, spec.method)?.selected_index)
    })
}

fn exceedance(
    spec: &ExperimentSpec,
    exec: Execution,
    family: &str,
    truths: &[Vec<f64>],
    agnostic: bool,
) -> Result<ExperimentReport> {
    let family = parse_family(family)?;
    let s = family.size();
    let mut rows = Vec::new();
    let mut summary = BTreeMap::new();
    for (ti, truth) in truths.iter().enumerate() {
        validate_params(truth, Some(family.alphabet_size()))?;
        let label = format!("truth={}", join(truth));
        let star = if agnostic {
            None
        } else {
            Some(true_member(&family, truth)?)
        };
        let range = log_ratio_range(truth, &family)?;
        if agnostic {
            summary.insert(format!("log_ratio_range[{label}]"), range);
        }
        for (ni, &n) in spec.n_grid.iter().enumerate() {
            let distances = member_distances(&family, truth, n, spec.method)?;
            let selected =
                learn_trials(spec, exec, &family, truth, n, ti * spec.n_grid.len() + ni)?;
            let (inputs, points) = match star {
                Some(i) => {
                    let lc = log_parametric_complexity(&family.members()[i], n, spec.method)?.0;
                    (
                        BoundInputs::Convergence {
                            log_complexity: lc,
                            family_size: s,
                        },
                        thresholds(spec, |b| Some(convergence_epsilon_for_level(n, b, lc, s))),
                    )
                }
                None => {
                    let jn = j_n(truth, &family, n)?;
                    (
                        BoundInputs::Agnostic {
                            j_n: jn,
                            family_size: s,
                            log_ratio_range: range,
                        },
                        thresholds(spec, |b| {
                            agnostic_epsilon_for_level(n, b, jn, s, range, AGNOSTIC_EPSILON_MAX)
                        }),
                    )
                }
            };
            for th in points {
                let events = selected
                    .iter()
                    .filter(|&&i| distances[i] > th.epsilon)
                    .count();
                rows.push(frequency_row(
                    &label,
                    "exceedance",
                    n,
                    th,
                    events,
                    spec.trials,
                    inputs.clone(),
                ));
            }
            let picks: Vec<f64> = selected.iter().map(|&i| distances[i]).collect();
            rows.push(mean_row(&label, "mean_distance", n, &picks));
        }
    }
    Ok(ExperimentReport::new(spec, rows, summary))
}

/// Frequency of `d_B(p_hat, p*) > eps` against the consistency bound, for
/// truths contained in a family member.
pub fn run_convergence_rate(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    match &spec.experiment {
        Experiment::ConvergenceRate { family, truths } => {
            exceedance(spec, exec, family, truths, false)
        }
        _ => Err(wrong_kind("convergence_rate")),
    }
}

/// Frequency of `d_B(p_hat, p*) > eps` against the agnostic bound.
pub fn run_agnostic_rate(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    match &spec.experiment {
        Experiment::AgnosticRate { family, truths } => exceedance(spec, exec, family, truths, true),
        _ => Err(wrong_kind("agnostic_rate")),
    }
}

fn wrong_kind(expected: &str) -> Error {
    Error::InvalidConfig(format!("spec is not a {expected} experiment"))
}

/// A uniform draw from the probability simplex.
fn uniform_simplex<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|d| d / total).collect()
}

/// Least-squares `c` in `y = c x` through the origin.
fn fit_through_origin(xs: &[f64], ys: &[f64]) -> f64 {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    sxy / sxx
}

/// Mean `d_B(p_hat, p*)` with the member drawn from `weights` and `p*`
/// uniform within it, fitted against `ln(n) / n`.
pub fn run_expected_distance(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    let Experiment::ExpectedDistance { family, weights } = &spec.experiment else {
        return Err(wrong_kind("expected_distance"));
    };
    let family = parse_family(family)?;
    let fusion = FusionSpec::new(family.members().to_vec(), weights.clone(), 1.0)?;
    let picker = WeightedIndex::new(weights).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let m = family.alphabet_size();
    let s = family.size();
    let mut rows = Vec::new();
    let mut means = Vec::new();
    let mut member_means: Vec<Vec<(f64, f64)>> = vec![Vec::new(); s];
    for (ni, &n) in spec.n_grid.iter().enumerate() {
        let draws = map_trials(exec, spec.trials, |t| {
            let mut rng = trial_rng(spec.master_seed, ni, t);
            let member = picker.sample(&mut rng);
            let truth = match family.members()[member].fixed_params() {
                Some(p) => p.to_vec(),
                None => uniform_simplex(m, &mut rng),
            };
            let x = draw_iid(&truth, n, &mut rng)?;
            let sel = mdl_learn(&family, &sufficient_stat(&x, m)?, spec.method)?;
            let d = bhattacharyya(
                &DistributionHandle::nml(sel.output),
                &DistributionHandle::fixed_product(truth, n)?,
            )?;
            Ok((member, d))
        })?;
        let all: Vec<f64> = draws.iter().map(|(_, d)| *d).collect();
        let row = mean_row("fusion", "mean_distance", n, &all);
        means.push(row.value);
        rows.push(row);
        for (i, member) in family.members().iter().enumerate() {
            let mine: Vec<f64> = draws
                .iter()
                .filter(|(j, _)| *j == i)
                .map(|(_, d)| *d)
                .collect();
            if !mine.is_empty() {
                let row = mean_row(
                    &format!("member={}", member.spec()),
                    "mean_distance",
                    n,
                    &mine,
                );
                member_means[i].push((n as f64, row.value));
                rows.push(row);
            }
        }
    }
    let scale = |n: f64| n.ln() / n;
    let xs: Vec<f64> = spec.n_grid.iter().map(|&n| scale(n as f64)).collect();
    let mut summary = BTreeMap::new();
    summary.insert("fitted_coefficient".into(), fit_through_origin(&xs, &means));
    summary.insert(
        "pseudo_ddim".into(),
        crate::ddim::ddim_fusion_prior(&fusion).value,
    );
    for (member, points) in family.members().iter().zip(&member_means) {
        if !points.is_empty() {
            let xs: Vec<f64> = points.iter().map(|(n, _)| scale(*n)).collect();
            let ys: Vec<f64> = points.iter().map(|(_, v)| *v).collect();
            summary.insert(
                format!("fitted_coefficient[{}]", member.spec()),
                fit_through_origin(&xs, &ys),
            );
        }
    }
    Ok(ExperimentReport::new(spec, rows, summary))
}

fn label_of(models: &[ModelClass]) -> String {
    models
        .iter()
        .map(ModelClass::spec)
        .collect::<Vec<_>>()
        .join("|")
}

fn split_point(split: f64, n: usize) -> Result<usize> {
    if n < 2 {
        return Err(Error::InvalidConfig(
            "the single-change test needs n >= 2".into(),
        ));
    }
    Ok(((split * n as f64).round() as usize).clamp(1, n - 1))
}

/// Frequency of H1 on data from the null against the Type I bound.
pub fn run_type1(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    let Experiment::Type1Error {
        family,
        mode,
        reference,
        params,
        split,
        max_changes,
        min_segment_len,
    } = &spec.experiment
    else {
        return Err(wrong_kind("type1_error"));
    };
    let family = parse_family(family)?;
    let s = family.size();
    let limits = constraints(*max_changes, *min_segment_len);
    let mut rows = Vec::new();
    for (ni, &n) in spec.n_grid.iter().enumerate() {
        let reference = reference.at(n)?;
        let source = PiecewiseSource::new(
            reference.change_points().to_vec(),
            reference.models().to_vec(),
            params.clone(),
        )?;
        let label = format!("reference={}", label_of(reference.models()));
        let (inputs, points, gains) = match mode {
            TestMode::Multiple => {
                let lcs = source.log_complexity_sum(n, spec.method)?;
                let gains = map_trials(exec, spec.trials, |t| {
                    let x = source.sample(n, &mut trial_rng(spec.master_seed, ni, t))?;
                    Ok(
                        mdl_change_statistic(&x, &reference, &family, 0.0, limits, spec.method)?
                            .statistic,
                    )
                })?;
                let points = thresholds(spec, |b| Some((lcs - b.ln()) / n as f64));
                (
                    BoundInputs::Type1 {
                        log_complexity_sum: lcs,
                    },
                    points,
                    gains,
                )
            }
            TestMode::Single => {
                if reference.num_changes() != 0 {
                    return Err(Error::InvalidConfig(
                        "the single-change Type I experiment needs a reference without changes"
                            .into(),
                    ));
                }
                let t_split = split_point(*split, n)?;
                let lc = log_parametric_complexity(&reference.models()[0], n, spec.method)?.0;
                let gains = map_trials(exec, spec.trials, |t| {
                    let x = source.sample(n, &mut trial_rng(spec.master_seed, ni, t))?;
                    Ok(single_change_statistic(&x, t_split, &family, 0.0, spec.method)?.statistic)
                })?;
                let ln_s = (s as f64).ln();
                let points = thresholds(spec, |b| Some((lc + ln_s - b.ln()) / n as f64));
                (
                    BoundInputs::SingleType1 {
                        log_complexity: lc,
                        family_size: s,
                    },
                    points,
                    gains,
                )
            }
        };
        for th in points {
            let cut = n as f64 * th.epsilon;
            let events = gains.iter().filter(|&&g| g - cut > 0.0).count();
            rows.push(frequency_row(
                &label,
                "type1_error",
                n,
                th,
                events,
                spec.trials,
                inputs.clone(),
            ));
        }
    }
    Ok(ExperimentReport::new(spec, rows, BTreeMap::new()))
}

/// Frequency of H0 on data from an alternative against the Type II bound.
pub fn run_type2(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentReport> {
    let Experiment::Type2Error {
        family,
        mode,
        reference,
        truth,
        max_changes,
        min_segment_len,
    } = &spec.experiment
    else {
        return Err(wrong_kind("type2_error"));
    };
    let family = parse_family(family)?;
    let s = family.size();
    let limits = constraints(*max_changes, *min_segment_len);
    let mut rows = Vec::new();
    for (ni, &n) in spec.n_grid.iter().enumerate() {
        let source = truth.at(n)?;
        let label = format!("truth={}", label_of(source.classes()));
        let nf = n as f64;
        let (inputs, fixed_part, gains) = match mode {
            TestMode::Multiple => {
                let reference = reference.at(n)?;
                let b = type2_bound(n, 0.0, &reference, &source, s, spec.method)?;
                let gains = map_trials(exec, spec.trials, |t| {
                    let x = source.sample(n, &mut trial_rng(spec.master_seed, ni, t))?;
                    Ok(
                        mdl_change_statistic(&x, &reference, &family, 0.0, limits, spec.method)?
                            .statistic,
                    )
                })?;
                let k = b.log_complexity_sum + b.model_codelength;
                (
                    BoundInputs::Type2 {
                        distance: b.distance,
                        log_complexity_sum: b.log_complexity_sum,
                        model_codelength: b.model_codelength,
                    },
                    (b.distance, k),
                    gains,
                )
            }
            TestMode::Single => {
                if source.change_points().len() != 1 {
                    return Err(Error::InvalidConfig(
                        "the single-change Type II experiment needs a truth with one change".into(),
                    ));
                }
                let t_split = source.change_points()[0];
                let (cls, ps) = (source.classes(), source.params());
                let b = single_type2_bound(
                    n,
                    t_split,
                    0.0,
                    &family,
                    &cls[0],
                    &ps[0],
                    &cls[1],
                    &ps[1],
                    spec.method,
                )?;
                let gains = map_trials(exec, spec.trials, |t| {
                    let x = source.sample(n, &mut trial_rng(spec.master_seed, ni, t))?;
                    Ok(single_change_statistic(&x, t_split, &family, 0.0, spec.method)?.statistic)
                })?;
                let k = b.log_family_complexity
                    + b.log_complexity_first
                    + b.log_complexity_second
                    + 2.0 * (s as f64).ln();
                (
                    BoundInputs::SingleType2 {
                        distance: b.distance,
                        log_family_complexity: b.log_family_complexity,
                        log_complexity_first: b.log_complexity_first,
                        log_complexity_second: b.log_complexity_second,
                        family_size: s,
                    },
                    (b.distance, k),
                    gains,
                )
            }
        };
        // exp(-n d + (k + n eps) / 2) = level
        let (d, k) = fixed_part;
        let points = thresholds(spec, |b| Some((2.0 * (b.ln() + nf * d) - k) / nf));
        for th in points {
            let cut = nf * th.epsilon;
            let events = gains.iter().filter(|&&g| g - cut <= 0.0).count();
            rows.push(frequency_row(
                &label,
                "type2_error",
                n,
                th,
                events,
                spec.trials,
                inputs.clone(),
            ));
        }
    }
    Ok(ExperimentReport::new(spec, rows, BTreeMap::new()))
}

/// Complexity-slope Ddim of each model over `n_grid`.
pub fn run_ddim_slope(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let Experiment::DdimSlope { models } = &spec.experiment else {
        return Err(wrong_kind("ddim_slope"));
    };
    let mut rows = Vec::new();
    let mut summary = BTreeMap::new();
    let n_last = *spec.n_grid.last().expect("validated non-empty");
    for text in models {
        let model: ModelClass = text.parse()?;
        let est = ddim_slope(&model, &spec.n_grid)?;
        let label = format!("model={}", model.spec());
        if let crate::ddim::DdimDetails::ComplexitySlope {
            log_complexities, ..
        } = &est.details
        {
            for (&n, &lc) in spec.n_grid.iter().zip(log_complexities) {
                rows.push(mean_row(&label, "log_complexity", n, &[lc]));
            }
        }
        rows.push(mean_row(&label, "ddim_slope", n_last, &[est.value]));
        summary.insert(format!("ddim_slope[{}]", model.spec()), est.value);
        summary.insert(
            format!("parametric_ddim[{}]", model.spec()),
            ddim_parametric(&model).value,
        );
    }
    Ok(ExperimentReport::new(spec, rows, summary))
}

/// Posterior pseudo-Ddim on growing prefixes of a piecewise stream.
pub fn run_posterior_ddim_trace(
    spec: &ExperimentSpec,
    exec: Execution,
) -> Result<ExperimentReport> {
    let Experiment::PosteriorDdimTrace {
        family,
        weights,
        beta,
        stream,
    } = &spec.experiment
    else {
        return Err(wrong_kind("posterior_ddim_trace"));
    };
    let family = parse_family(family)?;
    let fusion = match weights {
        Some(w) => FusionSpec::new(family.members().to_vec(), w.clone(), *beta)?,
        None => FusionSpec::uniform(&family, *beta)?,
    };
    let m = family.alphabet_size();
    for part in stream {
        validate_params(&part.params, Some(m))?;
    }
    let total: usize = stream.iter().map(|p| p.length).sum();
    if spec.n_grid.last().is_some_and(|&n| n > total) {
        return Err(Error::InvalidConfig(format!(
            "checkpoints exceed the stream length {total}"
        )));
    }
    let traces = map_trials(exec, spec.trials, |t| {
        let mut rng = trial_rng(spec.master_seed, 0, t);
        let mut x = Vec::with_capacity(total);
        for part in stream {
            x.extend(draw_iid(&part.params, part.length, &mut rng)?);
        }
        posterior_ddim_trace(&fusion, &x, &spec.n_grid, spec.method)
    })?;
    let label = format!("beta={beta}");
    let mut rows = Vec::new();
    for (i, &n) in spec.n_grid.iter().enumerate() {
        let values: Vec<f64> = traces.iter().map(|tr| tr[i]).collect();
        rows.push(mean_row(&label, "posterior_ddim", n, &values));
    }
    let mut summary = BTreeMap::new();
    summary.insert(
        "final_value".into(),
        rows.last().map(|r| r.value).unwrap_or(0.0),
    );
    summary.insert(
        "prior_ddim".into(),
        crate::ddim::ddim_fusion_prior(&fusion).value,
    );
    Ok(ExperimentReport::new(spec, rows, summary))
}
