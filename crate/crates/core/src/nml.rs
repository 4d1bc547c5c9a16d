//! Parametric complexity, NML codelengths and the NML distribution.
//!
//! All quantities are in nats. `log C_n(P)` is the log of the normalizer
//! `sum_y max_{p in P} p(y)`; the NML codelength of `x` is
//! `-ln max_p p(x) + log C_n(P)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{FamilyKind, ModelClass, SufficientStat};
use crate::numeric::{
    default_lattice_cap, for_each_composition, lattice_size, ln_factorial, log_add_exp, xlogx,
    LogSumExp,
};

/// Lattice size below which [`Method::Auto`] resolves to exact evaluation.
pub const AUTO_EXACT_LATTICE_LIMIT: u128 = 1_000_000;

/// How the parametric complexity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Asymptotic,
    /// Exact when the count lattice has at most [`AUTO_EXACT_LATTICE_LIMIT`]
    /// points, asymptotic otherwise.
    #[default]
    Auto,
}

impl Method {
    /// Resolves `Auto` for a concrete model and horizon.
    pub fn resolve(self, model: &ModelClass, n: usize) -> Method {
        match self {
            Method::Auto => {
                if model.parametric_dimension() == 0
                    || lattice_size(n, model.alphabet_size()) <= AUTO_EXACT_LATTICE_LIMIT
                {
                    Method::Exact
                } else {
                    Method::Asymptotic
                }
            }
            other => other,
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(Method::Exact),
            "asymptotic" => Ok(Method::Asymptotic),
            "auto" => Ok(Method::Auto),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// An NML codelength split into its fit and complexity terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodelengthReport {
    pub model: String,
    pub neg_max_loglik: f64,
    pub log_complexity: f64,
    pub total: f64,
    pub n: usize,
    pub method: Method,
}

/// `ln C_n` by enumerating the count lattice, failing above `cap` points.
pub fn log_parametric_complexity_lattice(model: &ModelClass, n: usize, cap: u128) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if model.kind() == FamilyKind::FixedDistribution {
        return Ok(0.0);
    }
    let m = model.alphabet_size();
    let points = lattice_size(n, m);
    if points > cap {
        return Err(Error::IntractableEnumeration { points, cap });
    }
    let ln_n_fact = ln_factorial(n);
    let n_log_n = xlogx(n);
    let mut acc = LogSumExp::new();
    for_each_composition(n, m, |counts| {
        let mut term = ln_n_fact - n_log_n;
        for &k in counts {
            term += xlogx(k) - ln_factorial(k);
        }
        acc.add(term);
    });
    Ok(acc.value())
}

/// Exact `ln C_n`.
///
/// Enumerates the count lattice when it has at most
/// [`AUTO_EXACT_LATTICE_LIMIT`] points (and fits under the configured cap).
/// Larger multinomial lattices use the exact recurrence
/// `C(m+2, n) = C(m+1, n) + (n/m) C(m, n)` seeded with the binary lattice sum.
pub fn log_parametric_complexity_exact(model: &ModelClass, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if model.kind() == FamilyKind::FixedDistribution {
        return Ok(0.0);
    }
    let cap = default_lattice_cap().min(AUTO_EXACT_LATTICE_LIMIT);
    if lattice_size(n, model.alphabet_size()) <= cap {
        log_parametric_complexity_lattice(model, n, cap)
    } else {
        Ok(log_complexity_recurrence(model.alphabet_size(), n))
    }
}

/// `ln C_n` of the multinomial class over `m` symbols via the alphabet recurrence.
pub fn log_complexity_recurrence(m: usize, n: usize) -> f64 {
    assert!(n >= 1 && m >= 1);
    if m == 1 {
        return 0.0;
    }
    let binary = binary_log_complexity(n);
    let ln_n = (n as f64).ln();
    // prev = ln C(j), cur = ln C(j+1)
    let (mut prev, mut cur) = (0.0, binary);
    for j in 1..m - 1 {
        let next = log_add_exp(cur, ln_n - (j as f64).ln() + prev);
        prev = cur;
        cur = next;
    }
    cur
}

fn binary_log_complexity(n: usize) -> f64 {
    let ln_n_fact = ln_factorial(n);
    let n_log_n = xlogx(n);
    let mut acc = LogSumExp::new();
    for k in 0..=n {
        acc.add(
            ln_n_fact - ln_factorial(k) - ln_factorial(n - k) + xlogx(k) + xlogx(n - k) - n_log_n,
        );
    }
    acc.value()
}

/// `(k/2) ln(n / 2π) + ln ∫ sqrt(det I(θ)) dθ`.
pub fn log_parametric_complexity_asymptotic(model: &ModelClass, n: usize) -> Result<f64> {
    let k = model.parametric_dimension();
    if k == 0 {
        return Err(Error::ZeroDimensional);
    }
    if n < 2 {
        return Err(Error::InvalidParams(format!(
            "asymptotic complexity needs n >= 2, got {n}"
        )));
    }
    Ok(0.5 * k as f64 * (n as f64 / (2.0 * PI)).ln() + model.ln_fisher_integral()?)
}

/// `ln C_n` under `method`, returning the resolved method alongside.
///
/// Fixed distributions have complexity exactly zero under every method. The
/// asymptotic formula is undefined at `n = 1`, where the exact value is used.
pub fn log_parametric_complexity(
    model: &ModelClass,
    n: usize,
    method: Method,
) -> Result<(f64, Method)> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if model.parametric_dimension() == 0 {
        return Ok((0.0, method.resolve(model, n)));
    }
    match method.resolve(model, n) {
        Method::Asymptotic if n >= 2 => Ok((
            log_parametric_complexity_asymptotic(model, n)?,
            Method::Asymptotic,
        )),
        _ => Ok((log_parametric_complexity_exact(model, n)?, Method::Exact)),
    }
}

/// `ln C_r` for every `r` in `0..=n_max` (entry 0 is 0 by convention).
///
/// Exact tables use the binary lattice sum for each length and the alphabet
/// recurrence on top of it, so building a table costs `O(n_max^2)`.
pub fn complexity_table(model: &ModelClass, n_max: usize, method: Method) -> Result<Vec<f64>> {
    let mut table = vec![0.0; n_max + 1];
    if model.parametric_dimension() == 0 {
        return Ok(table);
    }
    for (r, slot) in table.iter_mut().enumerate().skip(1) {
        *slot = match method.resolve(model, r) {
            Method::Asymptotic if r >= 2 => log_parametric_complexity_asymptotic(model, r)?,
            _ => log_complexity_recurrence(model.alphabet_size(), r),
        };
    }
    Ok(table)
}

/// NML codelength of a sufficient statistic under `model`.
pub fn nml_codelength(
    model: &ModelClass,
    stat: &SufficientStat,
    method: Method,
) -> Result<CodelengthReport> {
    let mll = model.max_log_likelihood(stat)?;
    let (log_complexity, resolved) = log_parametric_complexity(model, stat.n, method)?;
    let neg_max_loglik = -mll;
    Ok(CodelengthReport {
        model: model.spec(),
        neg_max_loglik,
        log_complexity,
        total: neg_max_loglik + log_complexity,
        n: stat.n,
        method: resolved,
    })
}

/// The NML distribution of a model class at horizon `n`.
///
/// Serializes as `{model, n, log_complexity, method}` with the model as its
/// spec string.
#[derive(Debug, Clone, PartialEq)]
pub struct NmlDistribution {
    model: ModelClass,
    n: usize,
    log_complexity: f64,
    method: Method,
}

impl NmlDistribution {
    pub fn new(model: ModelClass, n: usize, method: Method) -> Result<Self> {
        let (log_complexity, method) = log_parametric_complexity(&model, n, method)?;
        Ok(Self {
            model,
            n,
            log_complexity,
            method,
        })
    }

    /// Builds a distribution from an already computed `ln C_n`.
    pub fn with_log_complexity(
        model: ModelClass,
        n: usize,
        log_complexity: f64,
        method: Method,
    ) -> Self {
        Self {
            model,
            n,
            log_complexity,
            method,
        }
    }

    pub fn model(&self) -> &ModelClass {
        &self.model
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_complexity(&self) -> f64 {
        self.log_complexity
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Log-probability of one specific sequence with statistic `stat`.
    pub fn log_prob(&self, stat: &SufficientStat) -> Result<f64> {
        if stat.n != self.n {
            return Err(Error::HorizonMismatch {
                expected: self.n,
                found: stat.n,
            });
        }
        Ok(self.model.max_log_likelihood(stat)? - self.log_complexity)
    }

    pub(crate) fn log_prob_counts(&self, counts: &[usize]) -> f64 {
        self.model.max_log_likelihood_unchecked(counts) - self.log_complexity
    }
}

impl Serialize for NmlDistribution {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = serializer.serialize_struct("NmlDistribution", 4)?;
        st.serialize_field("model", &self.model.spec())?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("log_complexity", &self.log_complexity)?;
        st.serialize_field("method", &self.method)?;
        st.end()
    }
}

/// `ln p_NML(x)` of a sequence with statistic `stat`.
pub fn nml_log_prob(dist: &NmlDistribution, stat: &SufficientStat) -> Result<f64> {
    dist.log_prob(stat)
}

/// Regret of the NML code against the best in-class code on `stat`.
///
/// By the equalizer property this equals `ln C_n` for every input.
pub fn regret(model: &ModelClass, stat: &SufficientStat, method: Method) -> Result<f64> {
    let dist = NmlDistribution::new(model.clone(), stat.n, method)?;
    let codelength = -dist.log_prob(stat)?;
    Ok(codelength - (-model.max_log_likelihood(stat)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bern() -> ModelClass {
        ModelClass::bernoulli()
    }

    fn stat(c: &[usize]) -> SufficientStat {
        SufficientStat::from_counts(c.to_vec())
    }

    #[test]
    fn exact_complexity_small_cases() {
        assert_abs_diff_eq!(
            log_parametric_complexity_exact(&bern(), 1).unwrap(),
            2f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            log_parametric_complexity_exact(&bern(), 2).unwrap(),
            2.5f64.ln(),
            epsilon = 1e-14
        );
        let m3 = ModelClass::multinomial(3).unwrap();
        assert_abs_diff_eq!(
            log_parametric_complexity_exact(&m3, 1).unwrap(),
            3f64.ln(),
            epsilon = 1e-14
        );
        let fixed = ModelClass::fixed(vec![0.1, 0.9]).unwrap();
        assert_eq!(log_parametric_complexity_exact(&fixed, 7).unwrap(), 0.0);
        assert_eq!(
            log_parametric_complexity_exact(&bern(), 0),
            Err(Error::EmptySequence)
        );
    }

    #[test]
    fn lattice_cap_is_enforced() {
        let m4 = ModelClass::multinomial(4).unwrap();
        assert!(matches!(
            log_parametric_complexity_lattice(&m4, 100, 1000),
            Err(Error::IntractableEnumeration {
                points: 176_851,
                cap: 1000
            })
        ));
    }

    #[test]
    fn recurrence_matches_lattice() {
        for m in 2..=5 {
            let model = ModelClass::multinomial(m).unwrap();
            for n in [1, 2, 5, 17, 60] {
                let lattice = log_parametric_complexity_lattice(&model, n, u128::MAX).unwrap();
                let rec = log_complexity_recurrence(m, n);
                assert_abs_diff_eq!(lattice, rec, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn asymptotic_examples() {
        let v = log_parametric_complexity_asymptotic(&bern(), 100).unwrap();
        assert_abs_diff_eq!(
            v,
            0.5 * (100.0 / (2.0 * PI)).ln() + PI.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(v, 2.528376445638773, epsilon = 1e-9);
        let fixed = ModelClass::fixed(vec![0.5, 0.5]).unwrap();
        assert_eq!(
            log_parametric_complexity_asymptotic(&fixed, 100),
            Err(Error::ZeroDimensional)
        );
        let exact = log_parametric_complexity_exact(&bern(), 1000).unwrap();
        let asym = log_parametric_complexity_asymptotic(&bern(), 1000).unwrap();
        assert!((exact - asym).abs() <= 0.05);
        let m3 = ModelClass::multinomial(3).unwrap();
        let exact = log_parametric_complexity_exact(&m3, 1000).unwrap();
        let asym = log_parametric_complexity_asymptotic(&m3, 1000).unwrap();
        assert!((exact - asym).abs() <= 0.1);
    }

    #[test]
    fn asymptotic_gap_shrinks_for_bernoulli() {
        let gap = |n| {
            (log_parametric_complexity_exact(&bern(), n).unwrap()
                - log_parametric_complexity_asymptotic(&bern(), n).unwrap())
            .abs()
        };
        let gaps: Vec<f64> = [100, 200, 400, 800].into_iter().map(gap).collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{gaps:?}");
        }
    }

    #[test]
    fn complexity_monotone_in_n() {
        let mut last = 0.0;
        for n in 1..=200 {
            let v = log_parametric_complexity_exact(&bern(), n).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn codelength_examples() {
        let c10 = log_parametric_complexity_exact(&bern(), 10).unwrap();
        let r = nml_codelength(&bern(), &stat(&[0, 10]), Method::Exact).unwrap();
        assert_eq!(r.neg_max_loglik, 0.0);
        assert_eq!(r.total, c10);
        let fixed = ModelClass::fixed(vec![0.5, 0.5]).unwrap();
        let r = nml_codelength(&fixed, &stat(&[5, 5]), Method::Exact).unwrap();
        assert_abs_diff_eq!(r.total, 10.0 * 2f64.ln(), epsilon = 1e-12);
        let r = nml_codelength(&bern(), &stat(&[1, 1]), Method::Exact).unwrap();
        assert_abs_diff_eq!(r.total, -2.0 * 0.5f64.ln() + 2.5f64.ln(), epsilon = 1e-12);
        assert_eq!(r.total, r.neg_max_loglik + r.log_complexity);
    }

    #[test]
    fn nml_log_prob_examples() {
        let d = NmlDistribution::new(bern(), 2, Method::Exact).unwrap();
        assert_abs_diff_eq!(
            d.log_prob(&stat(&[1, 1])).unwrap(),
            0.1f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.log_prob(&stat(&[0, 2])).unwrap(),
            0.4f64.ln(),
            epsilon = 1e-12
        );
        let total: f64 = [[0, 2], [1, 1], [1, 1], [2, 0]]
            .iter()
            .map(|c| d.log_prob(&stat(c)).unwrap().exp())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert_eq!(
            d.log_prob(&stat(&[1, 2])),
            Err(Error::HorizonMismatch {
                expected: 2,
                found: 3
            })
        );
    }

    #[test]
    fn regret_examples() {
        let ln25 = 2.5f64.ln();
        assert_abs_diff_eq!(
            regret(&bern(), &stat(&[1, 1]), Method::Exact).unwrap(),
            ln25,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            regret(&bern(), &stat(&[0, 2]), Method::Exact).unwrap(),
            ln25,
            epsilon = 1e-12
        );
        let fixed = ModelClass::fixed(vec![0.3, 0.7]).unwrap();
        assert_eq!(regret(&fixed, &stat(&[4, 1]), Method::Exact).unwrap(), 0.0);
    }

    #[test]
    fn auto_method_switches_on_lattice_size() {
        let m4 = ModelClass::multinomial(4).unwrap();
        assert_eq!(Method::Auto.resolve(&m4, 50), Method::Exact);
        assert_eq!(Method::Auto.resolve(&m4, 500), Method::Asymptotic);
        assert_eq!(Method::Auto.resolve(&bern(), 100_000), Method::Exact);
    }

    #[test]
    fn table_matches_pointwise() {
        let m3 = ModelClass::multinomial(3).unwrap();
        let table = complexity_table(&m3, 40, Method::Exact).unwrap();
        for n in [1, 7, 40] {
            assert_abs_diff_eq!(
                table[n],
                log_parametric_complexity_exact(&m3, n).unwrap(),
                epsilon = 1e-11
            );
        }
    }
}
