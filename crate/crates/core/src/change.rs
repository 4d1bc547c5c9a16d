//! Change detection with NML codelengths: model sequences, dynamic model
//! selection (DMS), the multiple- and single-change MDL statistics and the
//! error-probability bounds of both tests.
//!
//! Segments run over `t_{i-1} .. t_i` (half-open, zero-based) with `t_0 = 0`
//! and `t_{m+1} = n`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ddim::validate_change_points;
use crate::divergence::{bhattacharyya, bhattacharyya_monte_carlo, DistributionHandle};
use crate::error::{Error, Result};
use crate::family::{draw_iid, log_likelihood, sufficient_stat, validate_params, ModelClass};
use crate::learning::{argmin, ModelFamily};
use crate::nml::{
    complexity_table, log_parametric_complexity, nml_codelength, CodelengthReport, Method,
    NmlDistribution,
};
use crate::numeric::{
    default_lattice_cap, for_each_composition, lattice_size, ln_binomial, ln_multinomial, LogSumExp,
};

/// Draws used when the exact Type II distance is out of reach.
pub const MONTE_CARLO_DISTANCE_TRIALS: usize = 20_000;

/// Change points with one model class per segment; adjacent classes differ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSequence", into = "RawModelSequence")]
pub struct ModelSequence {
    change_points: Vec<usize>,
    models: Vec<ModelClass>,
}

#[derive(Serialize, Deserialize)]
struct RawModelSequence {
    change_points: Vec<usize>,
    models: Vec<String>,
}

impl TryFrom<RawModelSequence> for ModelSequence {
    type Error = Error;

    fn try_from(raw: RawModelSequence) -> Result<Self> {
        let models = raw
            .models
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<ModelClass>>>()?;
        ModelSequence::new(raw.change_points, models)
    }
}

impl From<ModelSequence> for RawModelSequence {
    fn from(ms: ModelSequence) -> Self {
        RawModelSequence {
            models: ms.models.iter().map(ModelClass::spec).collect(),
            change_points: ms.change_points,
        }
    }
}

impl ModelSequence {
    pub fn new(change_points: Vec<usize>, models: Vec<ModelClass>) -> Result<Self> {
        if models.len() != change_points.len() + 1 {
            return Err(Error::InvalidChangePoints(format!(
                "{} change points need {} models, got {}",
                change_points.len(),
                change_points.len() + 1,
                models.len()
            )));
        }
        if change_points.first() == Some(&0) || change_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidChangePoints(format!(
                "{change_points:?} is not strictly increasing and positive"
            )));
        }
        if let Some(w) = models.windows(2).find(|w| w[0].spec() == w[1].spec()) {
            return Err(Error::AdjacentEqualModels(w[0].spec()));
        }
        let m = models[0].alphabet_size();
        if models.iter().any(|c| c.alphabet_size() != m) {
            return Err(Error::InvalidFamily(
                "models use different alphabets".into(),
            ));
        }
        Ok(Self {
            change_points,
            models,
        })
    }

    /// A single model with no change.
    pub fn constant(model: ModelClass) -> Self {
        Self {
            change_points: Vec::new(),
            models: vec![model],
        }
    }

    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn models(&self) -> &[ModelClass] {
        &self.models
    }

    pub fn num_changes(&self) -> usize {
        self.change_points.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.models[0].alphabet_size()
    }

    /// `(start, end)` of every segment for a sequence of length `n`.
    pub fn segments(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        validate_change_points(&self.change_points, n)?;
        let mut out = Vec::with_capacity(self.models.len());
        let mut start = 0;
        for &t in self.change_points.iter().chain(std::iter::once(&n)) {
            out.push((start, t));
            start = t;
        }
        Ok(out)
    }

    pub fn segment_lengths(&self, n: usize) -> Result<Vec<usize>> {
        Ok(self.segments(n)?.iter().map(|(a, b)| b - a).collect())
    }
}

/// A model sequence with its codelength split into data and model terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation {
    pub model_sequence: ModelSequence,
    pub n: usize,
    pub family_size: usize,
    /// Sum of segment NML codelengths.
    pub data_codelength: f64,
    /// Uniform code for the number of changes, their positions and the models.
    pub model_codelength: f64,
    pub total_codelength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    H0,
    H1,
}

/// The best explanation found under the alternative hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alternative {
    Segmentation(Segmentation),
    Split {
        t: usize,
        first: CodelengthReport,
        second: CodelengthReport,
        /// Both segment codelengths plus `2 ln s`.
        codelength: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeTestResult {
    /// Codelength saved by the alternative minus `n * epsilon`.
    pub statistic: f64,
    pub decision: Decision,
    pub epsilon: f64,
    pub n: usize,
    /// Codelength of the data under the null explanation.
    pub null_codelength: f64,
    pub alternative: Alternative,
}

impl ChangeTestResult {
    /// Codelength saved before the `n * epsilon` threshold.
    pub fn gain(&self) -> f64 {
        self.statistic + self.n as f64 * self.epsilon
    }
}

/// H1 exactly when the statistic is positive.
pub fn decide(statistic: f64) -> Decision {
    if statistic > 0.0 {
        Decision::H1
    } else {
        Decision::H0
    }
}

fn check_symbols(x: &[usize], m: usize) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptySequence);
    }
    match x.iter().find(|&&s| s >= m) {
        Some(&symbol) => Err(Error::OutOfRangeSymbol {
            symbol,
            alphabet: m,
        }),
        None => Ok(()),
    }
}

/// Sum of segment NML codelengths of `x` under `ms`.
pub fn sequence_codelength(x: &[usize], ms: &ModelSequence, method: Method) -> Result<f64> {
    check_symbols(x, ms.alphabet_size())?;
    let mut total = 0.0;
    for ((a, b), model) in ms.segments(x.len())?.into_iter().zip(&ms.models) {
        if a == b {
            return Err(Error::EmptySegment);
        }
        let stat = sufficient_stat(&x[a..b], model.alphabet_size())?;
        total += nml_codelength(model, &stat, method)?.total;
    }
    Ok(total)
}

/// `ln n + ln C(n-1, m) + (m+1) ln s` for `m` changes among `n` positions.
pub fn model_sequence_code(num_changes: usize, n: usize, family_size: usize) -> f64 {
    (n as f64).ln()
        + ln_binomial(n - 1, num_changes)
        + (num_changes + 1) as f64 * (family_size as f64).ln()
}

/// [`model_sequence_code`] of a model sequence.
pub fn kraft_model_sequence_code(ms: &ModelSequence, n: usize, family_size: usize) -> Result<f64> {
    validate_change_points(&ms.change_points, n)?;
    Ok(model_sequence_code(ms.num_changes(), n, family_size))
}

/// A piecewise i.i.d. data source: segment `i` draws from `params[i]`, a
/// member of `classes[i]`. Adjacent classes may coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSource {
    change_points: Vec<usize>,
    classes: Vec<ModelClass>,
    params: Vec<Vec<f64>>,
}

impl PiecewiseSource {
    pub fn new(
        change_points: Vec<usize>,
        classes: Vec<ModelClass>,
        params: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if classes.len() != change_points.len() + 1 || params.len() != classes.len() {
            return Err(Error::InvalidChangePoints(format!(
                "{} change points need {} classes and parameter vectors, got {} and {}",
                change_points.len(),
                change_points.len() + 1,
                classes.len(),
                params.len()
            )));
        }
        if change_points.first() == Some(&0) || change_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidChangePoints(format!(
                "{change_points:?} is not strictly increasing and positive"
            )));
        }
        for (class, p) in classes.iter().zip(&params) {
            validate_params(p, Some(class.alphabet_size()))?;
            if let Some(fixed) = class.fixed_params() {
                if fixed.iter().zip(p).any(|(a, b)| (a - b).abs() > 1e-12) {
                    return Err(Error::InvalidParams(format!(
                        "{p:?} is not the distribution of {}",
                        class.spec()
                    )));
                }
            }
        }
        let m = classes[0].alphabet_size();
        if classes.iter().any(|c| c.alphabet_size() != m) {
            return Err(Error::InvalidFamily(
                "segments use different alphabets".into(),
            ));
        }
        Ok(Self {
            change_points,
            classes,
            params,
        })
    }

    /// One i.i.d. segment from `params`, a member of `class`.
    pub fn constant(class: ModelClass, params: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), vec![class], vec![params])
    }

    pub fn change_points(&self) -> &[usize] {
        &self.change_points
    }

    pub fn classes(&self) -> &[ModelClass] {
        &self.classes
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn segments(&self, n: usize) -> Result<Vec<(usize, usize)>> {
        validate_change_points(&self.change_points, n)?;
        let mut out = Vec::with_capacity(self.classes.len());
        let mut start = 0;
        for &t in self.change_points.iter().chain(std::iter::once(&n)) {
            out.push((start, t));
            start = t;
        }
        Ok(out)
    }

    /// Draws a length-`n` sequence.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(n);
        for ((a, b), p) in self.segments(n)?.into_iter().zip(&self.params) {
            out.extend(draw_iid(p, b - a, rng)?);
        }
        Ok(out)
    }

    /// `sum_i ln C_{len_i}(classes[i])`.
    pub fn log_complexity_sum(&self, n: usize, method: Method) -> Result<f64> {
        let mut sum = 0.0;
        for ((a, b), class) in self.segments(n)?.into_iter().zip(&self.classes) {
            sum += log_parametric_complexity(class, b - a, method)?.0;
        }
        Ok(sum)
    }

    /// The source as a product distribution over `X^n`.
    pub fn handle(&self, n: usize) -> Result<DistributionHandle> {
        let parts = self
            .segments(n)?
            .into_iter()
            .zip(&self.params)
            .map(|((a, b), p)| DistributionHandle::fixed_product(p.clone(), b - a))
            .collect::<Result<Vec<_>>>()?;
        DistributionHandle::concat(parts)
    }
}

/// Limits on the segmentations DMS searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentConstraints {
    /// `None` means up to `n - 1`.
    pub max_changes: Option<usize>,
    pub min_segment_len: usize,
}

impl Default for SegmentConstraints {
    fn default() -> Self {
        Self {
            max_changes: None,
            min_segment_len: 1,
        }
    }
}

impl SegmentConstraints {
    pub fn new(max_changes: usize, min_segment_len: usize) -> Self {
        Self {
            max_changes: Some(max_changes),
            min_segment_len,
        }
    }
}

/// Per-segment NML codelengths from prefix counts and complexity tables.
struct SegmentCosts<'a> {
    family: &'a ModelFamily,
    prefix: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
}

impl<'a> SegmentCosts<'a> {
    fn new(x: &[usize], family: &'a ModelFamily, method: Method) -> Result<Self> {
        let m = family.alphabet_size();
        let mut prefix = Vec::with_capacity(x.len() + 1);
        let mut counts = vec![0usize; m];
        prefix.push(counts.clone());
        for &s in x {
            counts[s] += 1;
            prefix.push(counts.clone());
        }
        let tables = family
            .members()
            .iter()
            .map(|model| complexity_table(model, x.len(), method))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            family,
            prefix,
            tables,
        })
    }

    fn cost(&self, a: usize, b: usize, model: usize, buf: &mut [usize]) -> f64 {
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = self.prefix[b][j] - self.prefix[a][j];
        }
        -self.family.members()[model].max_log_likelihood_unchecked(buf) + self.tables[model][b - a]
    }
}

/// Minimum and runner-up over models at one prefix state.
#[derive(Debug, Clone, Copy)]
struct TopTwo {
    best: (f64, usize),
    second: (f64, usize),
}

impl TopTwo {
    fn of(values: &[f64]) -> Self {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut second = (f64::INFINITY, usize::MAX);
        for (i, &v) in values.iter().enumerate() {
            if v < best.0 {
                second = best;
                best = (v, i);
            } else if v < second.0 {
                second = (v, i);
            }
        }
        Self { best, second }
    }

    /// Best entry whose model differs from `model`.
    fn excluding(&self, model: usize) -> (f64, usize) {
        if self.best.1 == model {
            self.second
        } else {
            self.best
        }
    }
}

/// Exact minimizer of `L(x; P) + l(P)` over model sequences within
/// `constraints`, by dynamic programming over (changes, end, last model).
///
/// Ties go to fewer changes, then earlier change points, then lower member
/// indices. Memory is `O(n^2 s)` for the segment cost table.
pub fn dms_segment(
    x: &[usize],
    family: &ModelFamily,
    constraints: SegmentConstraints,
    method: Method,
) -> Result<Segmentation> {
    let n = x.len();
    let s = family.size();
    check_symbols(x, family.alphabet_size())?;
    let min_len = constraints.min_segment_len;
    if min_len == 0 {
        return Err(Error::InvalidConfig(
            "min_segment_len must be at least 1".into(),
        ));
    }
    let max_changes = constraints.max_changes.unwrap_or(n - 1);
    if min_len.saturating_mul(max_changes + 1) > n {
        return Err(Error::InfeasibleConstraints(format!(
            "{} segments of length >= {min_len} do not fit in n = {n}",
            max_changes + 1
        )));
    }
    // adjacent models must differ, so a singleton family cannot change
    let layers = if s == 1 { 0 } else { max_changes };

    let costs = SegmentCosts::new(x, family, method)?;
    let mut buf = vec![0usize; family.alphabet_size()];
    // cost[b][a * s + i] for segment a..b under member i
    let mut cost = vec![Vec::new(); n + 1];
    for (b, row) in cost.iter_mut().enumerate().skip(min_len) {
        *row = vec![f64::INFINITY; (b - min_len + 1) * s];
        for a in 0..=b - min_len {
            for i in 0..s {
                row[a * s + i] = costs.cost(a, b, i, &mut buf);
            }
        }
    }

    // value[b * s + i]: best data codelength of x[..b] with j changes, last model i
    let mut value = vec![f64::INFINITY; (n + 1) * s];
    for b in min_len..=n {
        for i in 0..s {
            value[b * s + i] = cost[b][i];
        }
    }
    let mut back: Vec<Vec<(usize, usize)>> = Vec::new();
    let finish = |value: &[f64], j: usize| -> (f64, usize) {
        let last = &value[n * s..(n + 1) * s];
        let i = argmin(last.iter().copied()).unwrap_or(0);
        (last[i] + model_sequence_code(j, n, s), i)
    };
    let (mut best_total, mut best_last) = finish(&value, 0);
    let mut best_j = 0;
    let per_segment_floor = segment_cost_floor(family);

    for j in 1..=layers {
        let remaining_floor = (j..=layers)
            .map(|k| model_sequence_code(k, n, s) + (k + 1) as f64 * per_segment_floor)
            .fold(f64::INFINITY, f64::min);
        if remaining_floor >= best_total {
            break;
        }
        let tops: Vec<TopTwo> = (0..=n)
            .map(|a| TopTwo::of(&value[a * s..(a + 1) * s]))
            .collect();
        let mut next = vec![f64::INFINITY; (n + 1) * s];
        let mut ptr = vec![(usize::MAX, usize::MAX); (n + 1) * s];
        for b in (j + 1) * min_len..=n {
            for a in j * min_len..=b - min_len {
                for i in 0..s {
                    let (prev, prev_model) = tops[a].excluding(i);
                    if prev == f64::INFINITY {
                        continue;
                    }
                    let v = prev + cost[b][a * s + i];
                    if v < next[b * s + i] {
                        next[b * s + i] = v;
                        ptr[b * s + i] = (a, prev_model);
                    }
                }
            }
        }
        value = next;
        back.push(ptr);
        let (total, last) = finish(&value, j);
        if total < best_total {
            best_total = total;
            best_last = last;
            best_j = j;
        }
    }

    // walk back from (n, best_last) through best_j layers
    let mut change_points = Vec::with_capacity(best_j);
    let mut models = vec![best_last];
    let (mut b, mut i) = (n, best_last);
    for j in (1..=best_j).rev() {
        let (a, prev) = back[j - 1][b * s + i];
        change_points.push(a);
        models.push(prev);
        b = a;
        i = prev;
    }
    change_points.reverse();
    models.reverse();
    let ms = ModelSequence::new(
        change_points,
        models
            .iter()
            .map(|&i| family.members()[i].clone())
            .collect(),
    )?;
    score(x, ms, s, method)
}

/// Smallest codelength any single non-empty segment can have.
fn segment_cost_floor(family: &ModelFamily) -> f64 {
    family
        .members()
        .iter()
        .map(|model| match model.fixed_params() {
            Some(p) => p.iter().map(|&v| -v.ln()).fold(f64::INFINITY, f64::min),
            // ln C_1 = ln m for a free class, and C_r grows with r
            None => (model.alphabet_size() as f64).ln(),
        })
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// Builds a [`Segmentation`] for `ms`, recomputing every codelength.
pub fn score(
    x: &[usize],
    ms: ModelSequence,
    family_size: usize,
    method: Method,
) -> Result<Segmentation> {
    let n = x.len();
    let data_codelength = sequence_codelength(x, &ms, method)?;
    let model_codelength = kraft_model_sequence_code(&ms, n, family_size)?;
    Ok(Segmentation {
        model_sequence: ms,
        n,
        family_size,
        data_codelength,
        model_codelength,
        total_codelength: data_codelength + model_codelength,
    })
}

/// Multiple-change statistic
/// `L(x; reference) - min_P {L(x; P) + l(P)} - n epsilon`, with the minimum
/// found by [`dms_segment`]. H1 when the statistic is positive.
pub fn mdl_change_statistic(
    x: &[usize],
    reference: &ModelSequence,
    family: &ModelFamily,
    epsilon: f64,
    constraints: SegmentConstraints,
    method: Method,
) -> Result<ChangeTestResult> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParams(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let null_codelength = sequence_codelength(x, reference, method)?;
    let seg = dms_segment(x, family, constraints, method)?;
    let statistic = null_codelength - seg.total_codelength - x.len() as f64 * epsilon;
    Ok(ChangeTestResult {
        statistic,
        decision: decide(statistic),
        epsilon,
        n: x.len(),
        null_codelength,
        alternative: Alternative::Segmentation(seg),
    })
}

fn best_member(x: &[usize], family: &ModelFamily, method: Method) -> Result<CodelengthReport> {
    let stat = sufficient_stat(x, family.alphabet_size())?;
    let reports = family
        .members()
        .iter()
        .map(|m| nml_codelength(m, &stat, method))
        .collect::<Result<Vec<_>>>()?;
    let i = argmin(reports.iter().map(|r| r.total)).unwrap_or(0);
    Ok(reports.into_iter().nth(i).expect("family is non-empty"))
}

/// Single-change statistic at split `t`:
/// `min_P {L(x;P)} + ln s - min_{P',P''} {L(x[..t];P') + L(x[t..];P'')} - 2 ln s - n epsilon`.
/// H1 when positive. The two halves may use the same member.
pub fn single_change_statistic(
    x: &[usize],
    t: usize,
    family: &ModelFamily,
    epsilon: f64,
    method: Method,
) -> Result<ChangeTestResult> {
    let n = x.len();
    if t == 0 || t >= n {
        return Err(Error::InvalidSplit { t, n });
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParams(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    check_symbols(x, family.alphabet_size())?;
    let ln_s = (family.size() as f64).ln();
    let whole = best_member(x, family, method)?;
    let first = best_member(&x[..t], family, method)?;
    let second = best_member(&x[t..], family, method)?;
    let null_codelength = whole.total + ln_s;
    let codelength = first.total + second.total + 2.0 * ln_s;
    let statistic = null_codelength - codelength - n as f64 * epsilon;
    Ok(ChangeTestResult {
        statistic,
        decision: decide(statistic),
        epsilon,
        n,
        null_codelength,
        alternative: Alternative::Split {
            t,
            first,
            second,
            codelength,
        },
    })
}

/// `min(1, exp(-n eps + sum_i ln C_{len_i}(P_i)))` for explicit segments.
pub fn type1_bound_for_segments(
    epsilon: f64,
    classes: &[ModelClass],
    lengths: &[usize],
    method: Method,
) -> Result<f64> {
    let n: usize = lengths.iter().sum();
    let mut sum = 0.0;
    for (model, &len) in classes.iter().zip(lengths) {
        sum += log_parametric_complexity(model, len, method)?.0;
    }
    Ok(type1_bound_value(n, epsilon, sum))
}

/// Type I bound of the multiple-change test for data from `reference`.
pub fn type1_bound(
    n: usize,
    epsilon: f64,
    reference: &ModelSequence,
    method: Method,
) -> Result<f64> {
    let lengths = reference.segment_lengths(n)?;
    type1_bound_for_segments(epsilon, &reference.models, &lengths, method)
}

/// Type II bound of the multiple-change test with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Type2Bound {
    pub bound: f64,
    /// Per-symbol Bhattacharyya distance between the reference NML sequence
    /// distribution and the true one.
    pub distance: f64,
    pub distance_exact: bool,
    /// `sum_j ln C_{len_j}` of the true segment classes.
    pub log_complexity_sum: f64,
    pub model_codelength: f64,
}

fn nml_concat(ms: &ModelSequence, n: usize, method: Method) -> Result<DistributionHandle> {
    let parts = ms
        .segments(n)?
        .into_iter()
        .zip(&ms.models)
        .map(|((a, b), model)| {
            NmlDistribution::new(model.clone(), b - a, method).map(DistributionHandle::nml)
        })
        .collect::<Result<Vec<_>>>()?;
    DistributionHandle::concat(parts)
}

/// Bhattacharyya distance, exact when the enumeration fits under the cap and
/// a seeded Monte Carlo estimate otherwise.
fn distance_exact_or_sampled(
    p: &DistributionHandle,
    q: &DistributionHandle,
) -> Result<(f64, bool)> {
    match bhattacharyya(p, q) {
        Ok(d) => Ok((d, true)),
        Err(Error::ExactIntractable { .. }) => {
            let est = bhattacharyya_monte_carlo(q, p, MONTE_CARLO_DISTANCE_TRIALS, 0)?;
            Ok((est.value.max(0.0), false))
        }
        Err(e) => Err(e),
    }
}

/// `min(1, exp(-n d_B + (sum_j ln C_{len_j}(P~_j) + l(P~) + n eps) / 2))` for
/// data from `truth`, with `l` the model-sequence code of its change count.
pub fn type2_bound(
    n: usize,
    epsilon: f64,
    reference: &ModelSequence,
    truth: &PiecewiseSource,
    family_size: usize,
    method: Method,
) -> Result<Type2Bound> {
    let p_ref = nml_concat(reference, n, method)?;
    let p_true = truth.handle(n)?;
    let (distance, distance_exact) = distance_exact_or_sampled(&p_true, &p_ref)?;
    let log_complexity_sum = truth.log_complexity_sum(n, method)?;
    validate_change_points(&truth.change_points, n)?;
    let model_codelength = model_sequence_code(truth.change_points.len(), n, family_size);
    Ok(Type2Bound {
        bound: type2_bound_value(n, epsilon, distance, log_complexity_sum, model_codelength),
        distance,
        distance_exact,
        log_complexity_sum,
        model_codelength,
    })
}

/// Type I bound of the single-change test for data from a member of class
/// `null_class`: `min(1, exp(-n eps + ln C_n(P0) + ln s))`.
pub fn single_type1_bound(
    n: usize,
    epsilon: f64,
    null_class: &ModelClass,
    family_size: usize,
    method: Method,
) -> Result<f64> {
    let lc = log_parametric_complexity(null_class, n, method)?.0;
    Ok(single_type1_bound_value(n, epsilon, lc, family_size))
}

/// `min(1, exp(-n eps + sum_i ln C_{len_i}))` from the complexity sum.
pub fn type1_bound_value(n: usize, epsilon: f64, log_complexity_sum: f64) -> f64 {
    (-(n as f64) * epsilon + log_complexity_sum).exp().min(1.0)
}

/// `min(1, exp(-n d_B + (sum ln C + l + n eps) / 2))` from its ingredients.
pub fn type2_bound_value(
    n: usize,
    epsilon: f64,
    distance: f64,
    log_complexity_sum: f64,
    model_codelength: f64,
) -> f64 {
    let nf = n as f64;
    (-nf * distance + 0.5 * (log_complexity_sum + model_codelength + nf * epsilon))
        .exp()
        .min(1.0)
}

/// `min(1, exp(-n eps + ln C_n(P0) + ln s))`.
pub fn single_type1_bound_value(
    n: usize,
    epsilon: f64,
    log_complexity: f64,
    family_size: usize,
) -> f64 {
    (-(n as f64) * epsilon + log_complexity + (family_size as f64).ln())
        .exp()
        .min(1.0)
}

/// `min(1, exp(-n d_B + (ln C_n(F) + ln C_t + ln C_{n-t} + 2 ln s + n eps) / 2))`.
pub fn single_type2_bound_value(
    n: usize,
    epsilon: f64,
    distance: f64,
    log_family_complexity: f64,
    log_complexity_first: f64,
    log_complexity_second: f64,
    family_size: usize,
) -> f64 {
    let nf = n as f64;
    let ln_s = (family_size as f64).ln();
    let inner = log_family_complexity + log_complexity_first + log_complexity_second + 2.0 * ln_s;
    (-nf * distance + 0.5 * (inner + nf * epsilon))
        .exp()
        .min(1.0)
}

/// `max_{P in F} max_theta ln p(counts; theta)`.
fn family_max_log_likelihood(family: &ModelFamily, counts: &[usize]) -> f64 {
    family
        .members()
        .iter()
        .map(|m| m.max_log_likelihood_unchecked(counts))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `ln C_n(F) = ln sum_x max_{P in F} max_theta p(x; theta)`, by count-lattice
/// enumeration.
pub fn log_family_complexity(family: &ModelFamily, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let m = family.alphabet_size();
    let points = lattice_size(n, m);
    let cap = default_lattice_cap();
    if points > cap {
        return Err(Error::IntractableEnumeration { points, cap });
    }
    let mut acc = LogSumExp::new();
    for_each_composition(n, m, |k| {
        acc.add(ln_multinomial(k) + family_max_log_likelihood(family, k))
    });
    Ok(acc.value())
}

/// Per-symbol Bhattacharyya distance between the two-segment i.i.d.
/// distribution (`first` for `t` symbols, then `second`) and the family
/// mixture `p_bar(x) = max_{P in F} max_theta p(x; theta) / C_n(F)`.
pub fn single_change_distance(
    family: &ModelFamily,
    n: usize,
    t: usize,
    first: &[f64],
    second: &[f64],
) -> Result<f64> {
    if t == 0 || t >= n {
        return Err(Error::InvalidSplit { t, n });
    }
    let m = family.alphabet_size();
    validate_params(first, Some(m))?;
    validate_params(second, Some(m))?;
    let points = lattice_size(t, m).saturating_mul(lattice_size(n - t, m));
    let cap = default_lattice_cap();
    if points > cap {
        return Err(Error::ExactIntractable { points, cap });
    }
    let log_cf = log_family_complexity(family, n)?;
    let mut acc = LogSumExp::new();
    let mut total = vec![0usize; m];
    for_each_composition(t, m, |k1| {
        let head = ln_multinomial(k1) + 0.5 * log_likelihood(first, k1);
        if head == f64::NEG_INFINITY {
            return;
        }
        for_each_composition(n - t, m, |k2| {
            for j in 0..m {
                total[j] = k1[j] + k2[j];
            }
            let p_bar = family_max_log_likelihood(family, &total) - log_cf;
            acc.add(head + ln_multinomial(k2) + 0.5 * (log_likelihood(second, k2) + p_bar));
        });
    });
    Ok((-acc.value() / n as f64).max(0.0))
}

/// Type II bound of the single-change test at split `t` with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleType2Bound {
    pub bound: f64,
    pub distance: f64,
    pub log_family_complexity: f64,
    pub log_complexity_first: f64,
    pub log_complexity_second: f64,
}

/// `min(1, exp(-n d_B(p_true, p_bar) + (ln C_n(F) + ln C_t(P1) + ln C_{n-t}(P2)
/// + 2 ln s + n eps) / 2))` for data drawn from `first_params` (a member of
/// `first_class`) for `t` symbols and from `second_params` afterwards.
#[allow(clippy::too_many_arguments)]
pub fn single_type2_bound(
    n: usize,
    t: usize,
    epsilon: f64,
    family: &ModelFamily,
    first_class: &ModelClass,
    first_params: &[f64],
    second_class: &ModelClass,
    second_params: &[f64],
    method: Method,
) -> Result<SingleType2Bound> {
    let distance = single_change_distance(family, n, t, first_params, second_params)?;
    let log_cf = log_family_complexity(family, n)?;
    let lc1 = log_parametric_complexity(first_class, t, method)?.0;
    let lc2 = log_parametric_complexity(second_class, n - t, method)?.0;
    Ok(SingleType2Bound {
        bound: single_type2_bound_value(n, epsilon, distance, log_cf, lc1, lc2, family.size()),
        distance,
        log_family_complexity: log_cf,
        log_complexity_first: lc1,
        log_complexity_second: lc2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::mdl_learn;
    use crate::nml::log_parametric_complexity_exact;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn fair() -> ModelClass {
        ModelClass::fixed(vec![0.5, 0.5]).unwrap()
    }

    fn bern() -> ModelClass {
        ModelClass::bernoulli()
    }

    fn fam() -> ModelFamily {
        ModelFamily::new(vec![fair(), bern()]).unwrap()
    }

    fn lnc(n: usize) -> f64 {
        log_parametric_complexity_exact(&bern(), n).unwrap()
    }

    fn zeros_then_ones(a: usize, b: usize) -> Vec<usize> {
        let mut x = vec![0; a];
        x.extend(vec![1; b]);
        x
    }

    #[test]
    fn model_sequence_invariants() {
        assert!(matches!(
            ModelSequence::new(vec![2], vec![bern(), bern()]),
            Err(Error::AdjacentEqualModels(_))
        ));
        assert!(ModelSequence::new(vec![2], vec![bern()]).is_err());
        assert!(ModelSequence::new(vec![0], vec![bern(), fair()]).is_err());
        assert!(ModelSequence::new(vec![3, 3], vec![bern(), fair(), bern()]).is_err());
        let ms = ModelSequence::new(vec![2, 5], vec![bern(), fair(), bern()]).unwrap();
        assert_eq!(ms.segments(7).unwrap(), vec![(0, 2), (2, 5), (5, 7)]);
        assert!(ms.segments(5).is_err());
        let json = serde_json::to_string(&ms).unwrap();
        assert_eq!(
            json,
            r#"{"change_points":[2,5],"models":["bernoulli","fixed:0.5,0.5","bernoulli"]}"#
        );
        assert_eq!(serde_json::from_str::<ModelSequence>(&json).unwrap(), ms);
        assert!(serde_json::from_str::<ModelSequence>(
            r#"{"change_points":[2],"models":["bernoulli","bernoulli"]}"#
        )
        .is_err());
    }

    #[test]
    fn codelength_examples() {
        let x = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let ms = ModelSequence::constant(fair());
        assert_abs_diff_eq!(
            sequence_codelength(&x, &ms, Method::Exact).unwrap(),
            8.0 * 2f64.ln(),
            epsilon = 1e-12
        );

        let ms = ModelSequence::new(vec![2], vec![fair(), bern()]).unwrap();
        let v = sequence_codelength(&[0, 0, 1, 1], &ms, Method::Exact).unwrap();
        assert_abs_diff_eq!(v, 2.0 * 2f64.ln() + 2.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn kraft_code_examples() {
        let ms0 = ModelSequence::constant(bern());
        assert_abs_diff_eq!(
            kraft_model_sequence_code(&ms0, 100, 2).unwrap(),
            100f64.ln() + 2f64.ln(),
            epsilon = 1e-12
        );
        let ms1 = ModelSequence::new(vec![50], vec![bern(), fair()]).unwrap();
        assert_abs_diff_eq!(
            kraft_model_sequence_code(&ms1, 100, 2).unwrap(),
            100f64.ln() + 99f64.ln() + 2.0 * 2f64.ln(),
            epsilon = 1e-12
        );
    }

    /// Every model sequence with at most `max_changes` changes over `n`
    /// positions, adjacent members distinct.
    fn all_model_sequences(
        n: usize,
        family: &ModelFamily,
        max_changes: usize,
    ) -> Vec<ModelSequence> {
        let s = family.size();
        let mut out = Vec::new();
        for mask in 0u32..(1 << (n - 1)) {
            let cps: Vec<usize> = (1..n).filter(|&t| mask & (1 << (t - 1)) != 0).collect();
            if cps.len() > max_changes {
                continue;
            }
            let segs = cps.len() + 1;
            for code in 0..s.pow(segs as u32) {
                let idx: Vec<usize> = (0..segs).map(|k| code / s.pow(k as u32) % s).collect();
                if idx.windows(2).any(|w| w[0] == w[1]) {
                    continue;
                }
                let models = idx.iter().map(|&i| family.members()[i].clone()).collect();
                out.push(ModelSequence::new(cps.clone(), models).unwrap());
            }
        }
        out
    }

    #[test]
    fn kraft_sum_is_at_most_one() {
        let n = 10;
        let total: f64 = all_model_sequences(n, &fam(), 2)
            .iter()
            .map(|ms| (-kraft_model_sequence_code(ms, n, 2).unwrap()).exp())
            .sum();
        assert!(total <= 1.0 + 1e-12, "{total}");
    }

    fn exhaustive(
        x: &[usize],
        family: &ModelFamily,
        max_changes: usize,
    ) -> (f64, Vec<Segmentation>) {
        let scored: Vec<Segmentation> = all_model_sequences(x.len(), family, max_changes)
            .into_iter()
            .map(|ms| score(x, ms, family.size(), Method::Exact).unwrap())
            .collect();
        let best = scored
            .iter()
            .map(|s| s.total_codelength)
            .fold(f64::INFINITY, f64::min);
        let near: Vec<Segmentation> = scored
            .into_iter()
            .filter(|s| s.total_codelength <= best + 1e-9)
            .collect();
        (best, near)
    }

    #[test]
    fn dms_locates_block_change() {
        // with a fair coin and the Bernoulli class, 12 symbols are too few to
        // pay for a change: 11.50 nats without, 11.63 with the best split
        let x = zeros_then_ones(6, 6);
        let seg = dms_segment(&x, &fam(), SegmentConstraints::new(2, 1), Method::Exact).unwrap();
        let (best, near) = exhaustive(&x, &fam(), 2);
        assert_abs_diff_eq!(seg.total_codelength, best, epsilon = 1e-9);
        assert_eq!(near.len(), 1);
        assert_eq!(seg.model_sequence, near[0].model_sequence);
        assert_eq!(seg.model_sequence.num_changes(), 0);

        let skewed = ModelFamily::new(vec![
            ModelClass::fixed(vec![0.9, 0.1]).unwrap(),
            ModelClass::fixed(vec![0.1, 0.9]).unwrap(),
        ])
        .unwrap();
        let seg = dms_segment(&x, &skewed, SegmentConstraints::new(2, 1), Method::Exact).unwrap();
        assert_eq!(seg.model_sequence.change_points(), &[6]);

        // adjacent segments must differ, so two Bernoulli blocks are joined
        // through a one-symbol fair segment
        let x = zeros_then_ones(12, 12);
        let seg = dms_segment(&x, &fam(), SegmentConstraints::new(2, 1), Method::Exact).unwrap();
        assert_eq!(seg.model_sequence.change_points(), &[11, 12]);
        assert_eq!(seg.model_sequence.models(), &[bern(), fair(), bern()]);
    }

    #[test]
    fn dms_no_change_on_fair_noise() {
        let x = fair().sample(&[0.5, 0.5], 12, 11).unwrap();
        let seg = dms_segment(&x, &fam(), SegmentConstraints::default(), Method::Exact).unwrap();
        let (best, near) = exhaustive(&x, &fam(), 11);
        assert_abs_diff_eq!(seg.total_codelength, best, epsilon = 1e-9);
        assert_eq!(seg.model_sequence.num_changes(), 0);
        assert!(near.iter().all(|s| s.model_sequence.num_changes() == 0));
    }

    #[test]
    fn dms_without_changes_is_mdl_learning() {
        let x = bern().sample(&[0.3, 0.7], 40, 5).unwrap();
        let seg = dms_segment(&x, &fam(), SegmentConstraints::new(0, 1), Method::Exact).unwrap();
        let learned = mdl_learn(&fam(), &x.stat(), Method::Exact).unwrap();
        assert_eq!(
            seg.model_sequence.models()[0],
            fam().members()[learned.selected_index]
        );
        assert_abs_diff_eq!(
            seg.total_codelength,
            learned.selected().total + 40f64.ln() + 2f64.ln(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn dms_matches_exhaustive_on_small_inputs() {
        let families = [
            fam(),
            ModelFamily::new(vec![
                ModelClass::fixed(vec![0.2, 0.8]).unwrap(),
                ModelClass::fixed(vec![0.7, 0.3]).unwrap(),
            ])
            .unwrap(),
            ModelFamily::new(vec![bern()]).unwrap(),
        ];
        for family in &families {
            for n in 1..=8usize {
                for bits in 0u32..(1 << n) {
                    let x: Vec<usize> = (0..n).map(|i| ((bits >> i) & 1) as usize).collect();
                    for max_changes in 0..=3.min(n - 1) {
                        let seg = dms_segment(
                            &x,
                            family,
                            SegmentConstraints::new(max_changes, 1),
                            Method::Exact,
                        )
                        .unwrap();
                        let (best, near) = exhaustive(&x, family, max_changes);
                        assert!((seg.total_codelength - best).abs() <= 1e-9);
                        if near.len() == 1 {
                            assert_eq!(seg.model_sequence, near[0].model_sequence);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn dms_respects_min_segment_len() {
        let x = zeros_then_ones(3, 9);
        let seg = dms_segment(&x, &fam(), SegmentConstraints::new(2, 4), Method::Exact).unwrap();
        for (a, b) in seg.model_sequence.segments(12).unwrap() {
            assert!(b - a >= 4);
        }
        assert!(matches!(
            dms_segment(&x, &fam(), SegmentConstraints::new(3, 4), Method::Exact),
            Err(Error::InfeasibleConstraints(_))
        ));
    }

    #[test]
    fn multiple_test_flags_obvious_change() {
        let x = zeros_then_ones(25, 25);
        let r = mdl_change_statistic(
            &x,
            &ModelSequence::constant(fair()),
            &fam(),
            0.05,
            SegmentConstraints::default(),
            Method::Exact,
        )
        .unwrap();
        assert_eq!(r.decision, Decision::H1);
        assert!(r.statistic > 0.0);
    }

    #[test]
    fn sign_convention_of_both_tests() {
        let x = zeros_then_ones(25, 25);
        let reference = ModelSequence::constant(fair());
        let big = mdl_change_statistic(
            &x,
            &reference,
            &fam(),
            10.0,
            SegmentConstraints::default(),
            Method::Exact,
        )
        .unwrap();
        assert!(big.statistic < 0.0);
        assert_eq!(big.decision, Decision::H0);
        let single = single_change_statistic(&x, 25, &fam(), 10.0, Method::Exact).unwrap();
        assert_eq!(single.decision, Decision::H0);
        let single = single_change_statistic(&x, 25, &fam(), 0.0, Method::Exact).unwrap();
        assert_eq!(single.decision, Decision::H1);
        assert_abs_diff_eq!(r_gain(&big), big.statistic + 500.0, epsilon = 1e-9);
    }

    fn r_gain(r: &ChangeTestResult) -> f64 {
        r.gain()
    }

    #[test]
    fn multiple_test_keeps_h0_on_reference_data() {
        let reference = ModelSequence::constant(fair());
        let mut h0 = 0;
        for seed in 0..200 {
            let x = fair().sample(&[0.5, 0.5], 50, seed).unwrap();
            let r = mdl_change_statistic(
                &x,
                &reference,
                &fam(),
                0.1,
                SegmentConstraints::new(3, 1),
                Method::Exact,
            )
            .unwrap();
            if r.decision == Decision::H0 {
                h0 += 1;
            }
        }
        assert!(h0 >= 180, "{h0}");
    }

    #[test]
    fn single_test_examples() {
        let x = vec![0; 20];
        let r = single_change_statistic(&x, 10, &fam(), 0.05, Method::Exact).unwrap();
        assert_eq!(r.decision, Decision::H0);
        // one Bernoulli segment vs two: ln C_20 + ln 2 - 2 ln C_10 - 2 ln 2 - 1
        assert_abs_diff_eq!(
            r.statistic,
            lnc(20) - 2.0 * lnc(10) - 2f64.ln() - 1.0,
            epsilon = 1e-9
        );

        let x = zeros_then_ones(10, 10);
        let r = single_change_statistic(&x, 10, &fam(), 0.01, Method::Exact).unwrap();
        assert_eq!(r.decision, Decision::H1);
        let expected = 20.0 * 2f64.ln() + 2f64.ln() - 2.0 * lnc(10) - 2.0 * 2f64.ln() - 0.2;
        assert_abs_diff_eq!(r.statistic, expected, epsilon = 1e-9);
        for t in [5, 15] {
            let other = single_change_statistic(&x, t, &fam(), 0.01, Method::Exact).unwrap();
            assert!(r.statistic >= other.statistic);
        }
        assert_eq!(
            single_change_statistic(&x, 20, &fam(), 0.01, Method::Exact).unwrap_err(),
            Error::InvalidSplit { t: 20, n: 20 }
        );
    }

    #[test]
    fn more_post_change_data_keeps_h1() {
        let mut last = Decision::H0;
        for extra in [10, 20, 40, 80] {
            let x = zeros_then_ones(10, extra);
            let d = single_change_statistic(&x, 10, &fam(), 0.01, Method::Exact)
                .unwrap()
                .decision;
            assert!(!(last == Decision::H1 && d == Decision::H0));
            last = d;
        }
        assert_eq!(last, Decision::H1);
    }

    #[test]
    fn type1_bound_examples() {
        let fixed_ref = ModelSequence::constant(fair());
        assert_eq!(
            type1_bound(100, 0.0, &fixed_ref, Method::Exact).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            type1_bound(100, 0.2, &fixed_ref, Method::Exact).unwrap(),
            (-20f64).exp(),
            epsilon = 1e-20
        );
        let v = type1_bound_for_segments(0.2, &[bern(), bern()], &[50, 50], Method::Exact).unwrap();
        assert_abs_diff_eq!(
            v,
            (-20.0 + 2.0 * 2.255821213653339f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn type2_bound_is_vacuous_without_separation() {
        let reference = ModelSequence::constant(bern());
        let same = PiecewiseSource::constant(bern(), vec![0.5, 0.5]).unwrap();
        let b = type2_bound(20, 0.05, &reference, &same, 2, Method::Exact).unwrap();
        assert!(b.distance_exact);
        assert_eq!(b.bound, 1.0);
        let truth = PiecewiseSource::new(
            vec![10],
            vec![
                ModelClass::fixed(vec![0.8, 0.2]).unwrap(),
                ModelClass::fixed(vec![0.2, 0.8]).unwrap(),
            ],
            vec![vec![0.8, 0.2], vec![0.2, 0.8]],
        )
        .unwrap();
        let b = type2_bound(20, 0.05, &reference, &truth, 3, Method::Exact).unwrap();
        assert!(b.distance > 0.0);
        assert_eq!(b.log_complexity_sum, 0.0);
        assert_abs_diff_eq!(
            b.model_codelength,
            20f64.ln() + 19f64.ln() + 2.0 * 3f64.ln(),
            epsilon = 1e-12
        );
        // exact distance agrees with a sampled estimate
        let p_ref = nml_concat(&reference, 20, Method::Exact).unwrap();
        let mc = bhattacharyya_monte_carlo(&truth.handle(20).unwrap(), &p_ref, 20_000, 3).unwrap();
        assert!((mc.value - b.distance).abs() < 4.0 * mc.std_error + 1e-3);
    }

    #[test]
    fn piecewise_source_checks_and_samples() {
        let src = PiecewiseSource::new(
            vec![3],
            vec![bern(), bern()],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        )
        .unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        assert_eq!(src.sample(6, &mut rng).unwrap(), vec![0, 0, 0, 1, 1, 1]);
        assert!(PiecewiseSource::constant(fair(), vec![0.4, 0.6]).is_err());
        assert!(PiecewiseSource::new(vec![3], vec![bern()], vec![vec![0.5, 0.5]]).is_err());
        assert!(src.segments(3).is_err());
    }

    /// Brute force over all `2^n` sequences.
    fn brute_single_distance(
        family: &ModelFamily,
        n: usize,
        t: usize,
        first: &[f64],
        second: &[f64],
    ) -> (f64, f64) {
        let mut maxes = Vec::new();
        let mut trues = Vec::new();
        for bits in 0u32..(1 << n) {
            let x: Vec<usize> = (0..n).map(|i| ((bits >> i) & 1) as usize).collect();
            let c = sufficient_stat(&x, 2).unwrap().counts;
            maxes.push(family_max_log_likelihood(family, &c).exp());
            let c1 = sufficient_stat(&x[..t], 2).unwrap().counts;
            let c2 = sufficient_stat(&x[t..], 2).unwrap().counts;
            trues.push((log_likelihood(first, &c1) + log_likelihood(second, &c2)).exp());
        }
        let cf: f64 = maxes.iter().sum();
        let aff: f64 = maxes
            .iter()
            .zip(&trues)
            .map(|(m, p)| (m / cf * p).sqrt())
            .sum();
        (cf.ln(), -aff.ln() / n as f64)
    }

    #[test]
    fn family_mixture_matches_brute_force() {
        let families = [
            fam(),
            ModelFamily::new(vec![
                ModelClass::fixed(vec![0.2, 0.8]).unwrap(),
                ModelClass::fixed(vec![0.8, 0.2]).unwrap(),
                bern(),
            ])
            .unwrap(),
        ];
        for family in &families {
            for n in 2..=10 {
                for t in [1, n / 2, n - 1] {
                    let (lcf, d) = brute_single_distance(family, n, t, &[0.8, 0.2], &[0.3, 0.7]);
                    assert_abs_diff_eq!(
                        log_family_complexity(family, n).unwrap(),
                        lcf,
                        epsilon = 1e-10
                    );
                    let got =
                        single_change_distance(family, n, t, &[0.8, 0.2], &[0.3, 0.7]).unwrap();
                    assert_abs_diff_eq!(got, d, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn single_bounds() {
        let v = single_type1_bound(200, 0.05, &fair(), 2, Method::Exact).unwrap();
        assert_abs_diff_eq!(v, (-10.0 + 2f64.ln()).exp(), epsilon = 1e-15);
        assert_eq!(
            single_type1_bound(200, 0.0, &bern(), 2, Method::Exact).unwrap(),
            1.0
        );
        let b = single_type2_bound(
            40,
            20,
            0.01,
            &fam(),
            &bern(),
            &[0.8, 0.2],
            &bern(),
            &[0.2, 0.8],
            Method::Exact,
        )
        .unwrap();
        assert!(b.distance > 0.0 && b.bound <= 1.0);
        assert_abs_diff_eq!(b.log_complexity_first, lnc(20), epsilon = 1e-12);
    }
}
