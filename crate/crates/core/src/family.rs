//! Parametric model classes over finite alphabets.
//!
//! A [`ModelClass`] is one of three discrete families: a single fixed
//! distribution (`k = 0`), the Bernoulli class (`k = 1`) or the full
//! multinomial class over `m` symbols (`k = m - 1`). All likelihood work goes
//! through [`SufficientStat`], the symbol-count vector of a sequence, so sums
//! over `X^n` collapse onto the count lattice.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::xlogx;

const PARAM_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    FixedDistribution,
    Bernoulli,
    Multinomial,
}

/// A parametric family descriptor over the alphabet `{0, .., m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelClass {
    kind: FamilyKind,
    alphabet_size: usize,
    fixed_params: Option<Vec<f64>>,
}

impl ModelClass {
    pub fn bernoulli() -> Self {
        Self {
            kind: FamilyKind::Bernoulli,
            alphabet_size: 2,
            fixed_params: None,
        }
    }

    pub fn multinomial(alphabet_size: usize) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::InvalidParams(format!(
                "multinomial alphabet must have at least 2 symbols, got {alphabet_size}"
            )));
        }
        Ok(Self {
            kind: FamilyKind::Multinomial,
            alphabet_size,
            fixed_params: None,
        })
    }

    pub fn fixed(params: Vec<f64>) -> Result<Self> {
        validate_params(&params, None)?;
        Ok(Self {
            kind: FamilyKind::FixedDistribution,
            alphabet_size: params.len(),
            fixed_params: Some(params),
        })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Number of free parameters `k`.
    pub fn parametric_dimension(&self) -> usize {
        match self.kind {
            FamilyKind::FixedDistribution => 0,
            FamilyKind::Bernoulli => 1,
            FamilyKind::Multinomial => self.alphabet_size - 1,
        }
    }

    pub fn fixed_params(&self) -> Option<&[f64]> {
        self.fixed_params.as_deref()
    }

    /// Canonical spec string, e.g. `fixed:0.5,0.5`, `bernoulli`, `multinomial:3`.
    pub fn spec(&self) -> String {
        self.to_string()
    }

    /// `ln max_{p in P} p(x)` evaluated from the sufficient statistic.
    ///
    /// Uses `0 ln 0 = 0`. For a fixed distribution this is the plain
    /// log-likelihood, `-inf` when a count lands on a zero-probability symbol.
    pub fn max_log_likelihood(&self, stat: &SufficientStat) -> Result<f64> {
        self.check_stat(stat)?;
        if stat.n == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(self.max_log_likelihood_unchecked(&stat.counts))
    }

    pub(crate) fn max_log_likelihood_unchecked(&self, counts: &[usize]) -> f64 {
        match &self.fixed_params {
            Some(params) => log_likelihood(params, counts),
            None => {
                let n: usize = counts.iter().sum();
                counts.iter().map(|&k| xlogx(k)).sum::<f64>() - xlogx(n)
            }
        }
    }

    /// `ln p(x)` for the member `params` of this class.
    pub fn log_likelihood(&self, params: &[f64], stat: &SufficientStat) -> Result<f64> {
        self.check_stat(stat)?;
        validate_params(params, Some(self.alphabet_size))?;
        Ok(log_likelihood(params, &stat.counts))
    }

    /// `∫ sqrt(det I(θ)) dθ` over the whole simplex.
    ///
    /// For the multinomial family the Jeffreys integral has the closed form
    /// `Γ(1/2)^m / Γ(m/2)`, which reduces to `π` for the Bernoulli class.
    pub fn fisher_integral(&self) -> Result<f64> {
        Ok(self.ln_fisher_integral()?.exp())
    }

    pub fn ln_fisher_integral(&self) -> Result<f64> {
        match self.kind {
            FamilyKind::FixedDistribution => Err(Error::ZeroDimensional),
            FamilyKind::Bernoulli => Ok(PI.ln()),
            FamilyKind::Multinomial => {
                let m = self.alphabet_size as f64;
                Ok(0.5 * m * PI.ln() - ln_gamma(0.5 * m))
            }
        }
    }

    /// Draws `n` i.i.d. symbols from `params`, deterministically in `seed`.
    pub fn sample(&self, params: &[f64], n: usize, seed: u64) -> Result<Sequence> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(params, n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        params: &[f64],
        n: usize,
        rng: &mut R,
    ) -> Result<Sequence> {
        validate_params(params, Some(self.alphabet_size))?;
        if n == 0 {
            return Err(Error::InvalidParams(
                "sample length must be at least 1".into(),
            ));
        }
        let symbols = draw_iid(params, n, rng)?;
        Ok(Sequence {
            symbols,
            alphabet_size: self.alphabet_size,
        })
    }

    fn check_stat(&self, stat: &SufficientStat) -> Result<()> {
        if stat.counts.len() != self.alphabet_size {
            return Err(Error::InvalidParams(format!(
                "statistic has {} symbols, model {} expects {}",
                stat.counts.len(),
                self,
                self.alphabet_size
            )));
        }
        Ok(())
    }
}

/// `n` i.i.d. symbols with probabilities `params`.
pub fn draw_iid<R: Rng + ?Sized>(params: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let dist = WeightedIndex::new(params)
        .map_err(|e| Error::InvalidParams(format!("cannot sample from {params:?}: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

pub(crate) fn log_likelihood(params: &[f64], counts: &[usize]) -> f64 {
    counts
        .iter()
        .zip(params)
        .map(|(&k, &p)| {
            if k == 0 {
                0.0
            } else if p == 0.0 {
                f64::NEG_INFINITY
            } else {
                k as f64 * p.ln()
            }
        })
        .sum()
}

/// Checks that `params` is a probability vector (optionally of a given length).
pub fn validate_params(params: &[f64], alphabet: Option<usize>) -> Result<()> {
    if params.is_empty() {
        return Err(Error::InvalidParams("empty probability vector".into()));
    }
    if let Some(m) = alphabet {
        if params.len() != m {
            return Err(Error::InvalidParams(format!(
                "expected {m} probabilities, got {}",
                params.len()
            )));
        }
    }
    if params.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::InvalidParams(format!(
            "probabilities must be finite and non-negative: {params:?}"
        )));
    }
    let sum: f64 = params.iter().sum();
    if (sum - 1.0).abs() > PARAM_SUM_TOL {
        return Err(Error::InvalidParams(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FamilyKind::Bernoulli => write!(f, "bernoulli"),
            FamilyKind::Multinomial => write!(f, "multinomial:{}", self.alphabet_size),
            FamilyKind::FixedDistribution => {
                write!(f, "fixed:")?;
                let params = self.fixed_params.as_deref().unwrap_or(&[]);
                for (i, p) in params.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for ModelClass {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        parse_model_at(text, 0)
    }
}

/// Parses one member spec; `offset` is its position inside a longer string,
/// used for error reporting.
pub(crate) fn parse_model_at(text: &str, offset: usize) -> Result<ModelClass> {
    let lead = text.len() - text.trim_start().len();
    let trimmed = text.trim();
    let err = |position: usize, message: String| Error::SpecParse {
        position: offset + lead + position,
        message,
    };
    if trimmed.is_empty() {
        return Err(err(0, "empty model spec".into()));
    }
    let (name, arg) = match trimmed.find(':') {
        Some(i) => (&trimmed[..i], Some((i + 1, &trimmed[i + 1..]))),
        None => (trimmed, None),
    };
    match (name.to_ascii_lowercase().as_str(), arg) {
        ("bernoulli", None) => Ok(ModelClass::bernoulli()),
        ("bernoulli", Some((pos, _))) => Err(err(pos, "bernoulli takes no argument".into())),
        ("multinomial", Some((pos, a))) => {
            let m: usize = a
                .trim()
                .parse()
                .map_err(|_| err(pos, format!("expected alphabet size, got {a:?}")))?;
            ModelClass::multinomial(m).map_err(|e| err(pos, e.to_string()))
        }
        ("multinomial", None) => Err(err(name.len(), "multinomial needs ':m'".into())),
        ("fixed", Some((pos, a))) => {
            let mut params = Vec::new();
            let mut cursor = pos;
            for piece in a.split(',') {
                let p: f64 = piece
                    .trim()
                    .parse()
                    .map_err(|_| err(cursor, format!("expected probability, got {piece:?}")))?;
                params.push(p);
                cursor += piece.len() + 1;
            }
            ModelClass::fixed(params).map_err(|e| err(pos, e.to_string()))
        }
        ("fixed", None) => Err(err(name.len(), "fixed needs ':p0,p1,...'".into())),
        (other, _) => Err(err(0, format!("unknown family {other:?}"))),
    }
}

/// Symbol counts of a sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SufficientStat {
    pub counts: Vec<usize>,
    pub n: usize,
}

impl SufficientStat {
    pub fn from_counts(counts: Vec<usize>) -> Self {
        let n = counts.iter().sum();
        Self { counts, n }
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }
}

/// Counts each symbol of `symbols` over an alphabet of size `m`.
pub fn sufficient_stat(symbols: &[usize], m: usize) -> Result<SufficientStat> {
    let mut counts = vec![0usize; m];
    for &s in symbols {
        if s >= m {
            return Err(Error::OutOfRangeSymbol {
                symbol: s,
                alphabet: m,
            });
        }
        counts[s] += 1;
    }
    Ok(SufficientStat {
        counts,
        n: symbols.len(),
    })
}

/// A data sequence whose symbols have been validated against an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sequence {
    symbols: Vec<usize>,
    alphabet_size: usize,
}

impl Sequence {
    pub fn new(symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::OutOfRangeSymbol {
                symbol: s,
                alphabet: alphabet_size,
            });
        }
        Ok(Self {
            symbols,
            alphabet_size,
        })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn stat(&self) -> SufficientStat {
        let mut counts = vec![0usize; self.alphabet_size];
        for &s in &self.symbols {
            counts[s] += 1;
        }
        SufficientStat {
            counts,
            n: self.symbols.len(),
        }
    }

    pub fn into_symbols(self) -> Vec<usize> {
        self.symbols
    }
}

impl std::ops::Deref for Sequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.symbols
    }
}
