//! MDL model selection over a finite family, the two-stage learner and the
//! agnostic-case quantities (J_n, index of resolvability, tail bounds).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::divergence::kl_per_symbol;
use crate::error::{Error, Result};
use crate::family::{
    log_likelihood, parse_model_at, validate_params, FamilyKind, ModelClass, SufficientStat,
};
use crate::nml::{
    log_parametric_complexity, nml_codelength, CodelengthReport, Method, NmlDistribution,
};

/// An ordered, finite set of model classes over a common alphabet.
///
/// Member order is the tie-break priority of every selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFamily {
    members: Vec<ModelClass>,
}

impl ModelFamily {
    pub fn new(members: Vec<ModelClass>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidFamily("family has no members".into()))?;
        let m = first.alphabet_size();
        for (i, member) in members.iter().enumerate() {
            if member.alphabet_size() != m {
                return Err(Error::InvalidFamily(format!(
                    "member {} has alphabet size {}, expected {m}",
                    member.spec(),
                    member.alphabet_size()
                )));
            }
            if members[..i]
                .iter()
                .any(|other| other.spec() == member.spec())
            {
                return Err(Error::DuplicateMember(member.spec()));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[ModelClass] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.members[0].alphabet_size()
    }

    pub fn get(&self, index: usize) -> Option<&ModelClass> {
        self.members.get(index)
    }

    /// Member specs in order.
    pub fn specs(&self) -> Vec<String> {
        self.members.iter().map(ModelClass::spec).collect()
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.specs().join(";"))
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_family_spec(text)
    }
}

impl Serialize for ModelFamily {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members.iter().map(ModelClass::spec))
    }
}

/// Parses `spec;spec;...` into a family. Error positions index into `text`.
pub fn parse_family_spec(text: &str) -> Result<ModelFamily> {
    let mut members = Vec::new();
    let mut offset = 0;
    for piece in text.split(';') {
        members.push(parse_model_at(piece, offset)?);
        offset += piece.len() + 1;
    }
    ModelFamily::new(members)
}

/// Outcome of NML-based selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnResult {
    pub selected_index: usize,
    pub reports: Vec<CodelengthReport>,
    pub output: NmlDistribution,
}

impl LearnResult {
    pub fn selected(&self) -> &CodelengthReport {
        &self.reports[self.selected_index]
    }
}

/// Index of the smallest value; the first one wins ties.
pub(crate) fn argmin(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ if v.is_nan() => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Selects the member with the shortest NML codelength and returns its NML
/// distribution at the horizon of `stat`.
pub fn mdl_learn(
    family: &ModelFamily,
    stat: &SufficientStat,
    method: Method,
) -> Result<LearnResult> {
    if stat.n == 0 {
        return Err(Error::EmptySequence);
    }
    if stat.alphabet_size() != family.alphabet_size() {
        return Err(Error::InvalidFamily(format!(
            "data alphabet {} does not match family alphabet {}",
            stat.alphabet_size(),
            family.alphabet_size()
        )));
    }
    let reports = family
        .members()
        .iter()
        .map(|m| nml_codelength(m, stat, method))
        .collect::<Result<Vec<_>>>()?;
    let selected_index = argmin(reports.iter().map(|r| r.total)).unwrap_or(0);
    let chosen = &reports[selected_index];
    let output = NmlDistribution::with_log_complexity(
        family.members()[selected_index].clone(),
        stat.n,
        chosen.log_complexity,
        chosen.method,
    );
    Ok(LearnResult {
        selected_index,
        reports,
        output,
    })
}

/// Default weight on the parameter codelength in the two-stage objective.
pub const DEFAULT_LAMBDA: f64 = 2.0;

/// Outcome of the two-stage learner.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoStageResult {
    pub selected_index: usize,
    pub model: String,
    /// Quantized parameter as a full probability vector.
    pub params: Vec<f64>,
    pub neg_log_likelihood: f64,
    /// `ln s + k ln G`.
    pub param_codelength: f64,
    /// `-ln p(x) + lambda * param_codelength`.
    pub codelength: f64,
}

/// Visits every quantized parameter of `model`: free coordinates take values
/// `i / (G + 1)` for `i in 1..=G`, the last coordinate absorbs the remainder
/// and must stay positive. Fixed members have their single parameter.
fn for_each_grid_point<F: FnMut(&[f64])>(model: &ModelClass, grid: usize, mut visit: F) {
    if let Some(p) = model.fixed_params() {
        visit(p);
        return;
    }
    let m = model.alphabet_size();
    let k = m - 1;
    let step = 1.0 / (grid as f64 + 1.0);
    let mut idx = vec![1usize; k];
    let mut params = vec![0.0; m];
    loop {
        let used: usize = idx.iter().sum();
        if used <= grid {
            for (j, &i) in idx.iter().enumerate() {
                params[j] = i as f64 * step;
            }
            params[k] = (grid + 1 - used) as f64 * step;
            visit(&params);
        }
        // odometer over 1..=grid per coordinate
        let mut j = k;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            if idx[j] < grid {
                idx[j] += 1;
                break;
            }
            idx[j] = 1;
        }
    }
}

fn param_codelength(model: &ModelClass, family_size: usize, grid: usize) -> f64 {
    (family_size as f64).ln() + model.parametric_dimension() as f64 * (grid as f64).ln()
}

fn check_grid(family: &ModelFamily, grid: usize) -> Result<()> {
    let free = family
        .members()
        .iter()
        .any(|m| m.parametric_dimension() > 0);
    if free && grid < 2 {
        return Err(Error::InvalidParams(format!(
            "grid resolution must be at least 2, got {grid}"
        )));
    }
    Ok(())
}

/// Minimizes `-ln p(x) + lambda * (ln s + k ln G)` over members and grid points.
pub fn two_stage_learn(
    family: &ModelFamily,
    stat: &SufficientStat,
    grid_resolution: usize,
    lambda: f64,
) -> Result<TwoStageResult> {
    if stat.n == 0 {
        return Err(Error::EmptySequence);
    }
    if lambda.is_nan() || lambda < 2.0 {
        return Err(Error::InvalidParams(format!(
            "lambda must be at least 2, got {lambda}"
        )));
    }
    check_grid(family, grid_resolution)?;
    if stat.alphabet_size() != family.alphabet_size() {
        return Err(Error::InvalidFamily(
            "data alphabet does not match family".into(),
        ));
    }
    let mut best: Option<TwoStageResult> = None;
    for (index, model) in family.members().iter().enumerate() {
        let ell = param_codelength(model, family.size(), grid_resolution);
        for_each_grid_point(model, grid_resolution, |p| {
            let nll = -log_likelihood(p, &stat.counts);
            let total = nll + lambda * ell;
            if best.as_ref().is_none_or(|b| total < b.codelength) {
                best = Some(TwoStageResult {
                    selected_index: index,
                    model: model.spec(),
                    params: p.to_vec(),
                    neg_log_likelihood: nll,
                    param_codelength: ell,
                    codelength: total,
                });
            }
        });
    }
    best.ok_or_else(|| Error::InvalidFamily("no grid point has finite codelength".into()))
}

/// `inf_{p in P} D(p* || p)`: zero for free members, the plain KL for fixed ones
/// (infinite on a support violation).
fn projection_kl(p_star: &[f64], model: &ModelClass) -> Result<f64> {
    match model.fixed_params() {
        None => Ok(0.0),
        Some(q) => match kl_per_symbol(p_star, q) {
            Err(Error::SupportViolation { .. }) => Ok(f64::INFINITY),
            other => other,
        },
    }
}

/// `min_P { n inf_{p in P} D(p*||p) + ln C_n(P) }` with exact complexities.
pub fn j_n(p_star: &[f64], family: &ModelFamily, n: usize) -> Result<f64> {
    validate_params(p_star, Some(family.alphabet_size()))?;
    let mut best = f64::INFINITY;
    for model in family.members() {
        let kl = projection_kl(p_star, model)?;
        let (lc, _) = log_parametric_complexity(model, n, Method::Exact)?;
        best = best.min(n as f64 * kl + lc);
    }
    Ok(best)
}

/// `min_P min_{p in grid} D(p*||p) + (ln s + k ln G) / n`.
pub fn index_of_resolvability(
    p_star: &[f64],
    family: &ModelFamily,
    grid_resolution: usize,
    n: usize,
) -> Result<f64> {
    validate_params(p_star, Some(family.alphabet_size()))?;
    check_grid(family, grid_resolution)?;
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut best = f64::INFINITY;
    for model in family.members() {
        let ell = param_codelength(model, family.size(), grid_resolution) / n as f64;
        let mut err = None;
        for_each_grid_point(model, grid_resolution, |p| match kl_per_symbol(p_star, p) {
            Ok(kl) => best = best.min(kl + ell),
            Err(Error::SupportViolation { .. }) => {}
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
    }
    Ok(best)
}

/// Consistency bound `min(1, exp(-n eps + ln C_n(P*) / 2 + ln s))` on
/// `Pr[d_B(p_hat, p*) > eps]`.
pub fn convergence_bound(
    n: usize,
    epsilon: f64,
    log_complexity_true: f64,
    family_size: usize,
) -> f64 {
    let exponent = -(n as f64) * epsilon + 0.5 * log_complexity_true + (family_size as f64).ln();
    exponent.exp().min(1.0)
}

/// The `eps` at which [`convergence_bound`] equals `level` (in `(0, 1]`).
pub fn convergence_epsilon_for_level(
    n: usize,
    level: f64,
    log_complexity_true: f64,
    family_size: usize,
) -> f64 {
    (0.5 * log_complexity_true + (family_size as f64).ln() - level.ln()) / n as f64
}

/// `max_{P, j} |ln(p*_j / p~_j)|` over the KL projections of fixed members.
///
/// Free members contain `p*` and contribute zero. Symbols with `p*_j = 0` are
/// never drawn and are skipped.
pub fn log_ratio_range(p_star: &[f64], family: &ModelFamily) -> Result<f64> {
    validate_params(p_star, Some(family.alphabet_size()))?;
    let mut b = 0.0f64;
    for model in family.members() {
        if model.kind() != FamilyKind::FixedDistribution {
            continue;
        }
        let q = model.fixed_params().unwrap_or(&[]);
        for (&a, &c) in p_star.iter().zip(q) {
            if a == 0.0 {
                continue;
            }
            b = b.max(if c == 0.0 {
                f64::INFINITY
            } else {
                (a / c).ln().abs()
            });
        }
    }
    Ok(b)
}

/// Hoeffding tail `min(1, 2 s exp(-n eps^2 / (2 B^2)))`; one when `B` is infinite.
pub fn hoeffding_tail(n: usize, epsilon: f64, family_size: usize, range: f64) -> f64 {
    if !range.is_finite() {
        return 1.0;
    }
    if range == 0.0 {
        return 0.0;
    }
    let v =
        2.0 * family_size as f64 * (-(n as f64) * epsilon * epsilon / (2.0 * range * range)).exp();
    v.min(1.0)
}

/// Agnostic bound `min(1, s / (1 - P) exp(-(n/2)(eps - J_n/n)) + P)` with
/// `P` the Hoeffding tail; one when `P >= 1`.
pub fn agnostic_bound(n: usize, epsilon: f64, j_n: f64, family_size: usize, range: f64) -> f64 {
    let tail = hoeffding_tail(n, epsilon, family_size, range);
    if tail >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    let main = family_size as f64 / (1.0 - tail) * (-(nf / 2.0) * (epsilon - j_n / nf)).exp();
    (main + tail).min(1.0)
}

/// Smallest `eps` with [`agnostic_bound`] at or below `level`, by bisection;
/// `None` when no `eps` in `(0, eps_max]` reaches it.
pub fn agnostic_epsilon_for_level(
    n: usize,
    level: f64,
    j_n: f64,
    family_size: usize,
    range: f64,
    eps_max: f64,
) -> Option<f64> {
    let f = |e: f64| agnostic_bound(n, e, j_n, family_size, range);
    if f(eps_max) > level {
        return None;
    }
    let (mut lo, mut hi) = (0.0, eps_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}
