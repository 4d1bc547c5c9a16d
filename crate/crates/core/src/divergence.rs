//! Distances between distributions over length-`n` sequences.
//!
//! Exact evaluation sums over count vectors. Two handles are cut into the
//! common refinement of their segment boundaries; within each piece both
//! distributions depend only on the piece's symbol counts. Pieces where both
//! sides are i.i.d. factor out in closed form, the rest are enumerated jointly.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{draw_iid, log_likelihood, validate_params};
use crate::nml::NmlDistribution;
use crate::numeric::{
    default_lattice_cap, for_each_composition, lattice_size, ln_multinomial, LogSumExp,
};

/// A distribution over `X^n` whose probabilities are exchangeable within segments.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionHandle {
    /// i.i.d. draws from `params`.
    FixedProduct {
        params: Vec<f64>,
        n: usize,
    },
    Nml(NmlDistribution),
    /// Independent consecutive segments; the horizon is the sum of the parts.
    ConcatProduct(Vec<DistributionHandle>),
}

impl DistributionHandle {
    pub fn fixed_product(params: Vec<f64>, n: usize) -> Result<Self> {
        validate_params(&params, None)?;
        if n == 0 {
            return Err(Error::EmptySequence);
        }
        Ok(Self::FixedProduct { params, n })
    }

    pub fn nml(dist: NmlDistribution) -> Self {
        Self::Nml(dist)
    }

    pub fn concat(parts: Vec<DistributionHandle>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::EmptySegment);
        }
        let m = parts[0].alphabet_size();
        if parts.iter().any(|p| p.alphabet_size() != m) {
            return Err(Error::InvalidParams(
                "concatenated parts use different alphabets".into(),
            ));
        }
        if parts.iter().any(|p| p.n() == 0) {
            return Err(Error::EmptySegment);
        }
        Ok(Self::ConcatProduct(parts))
    }

    pub fn n(&self) -> usize {
        match self {
            Self::FixedProduct { n, .. } => *n,
            Self::Nml(d) => d.n(),
            Self::ConcatProduct(parts) => parts.iter().map(Self::n).sum(),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        match self {
            Self::FixedProduct { params, .. } => params.len(),
            Self::Nml(d) => d.model().alphabet_size(),
            Self::ConcatProduct(parts) => parts[0].alphabet_size(),
        }
    }

    /// Log-probability of a full length-`n` sequence.
    pub fn log_prob(&self, symbols: &[usize]) -> Result<f64> {
        if symbols.len() != self.n() {
            return Err(Error::HorizonMismatch {
                expected: self.n(),
                found: symbols.len(),
            });
        }
        let m = self.alphabet_size();
        let mut total = 0.0;
        let mut start = 0;
        for leaf in self.leaves() {
            let mut counts = vec![0usize; m];
            for &s in &symbols[start..start + leaf.len] {
                if s >= m {
                    return Err(Error::OutOfRangeSymbol {
                        symbol: s,
                        alphabet: m,
                    });
                }
                counts[s] += 1;
            }
            total += leaf.log_prob(&counts);
            start += leaf.len;
        }
        Ok(total)
    }

    /// Draws one sequence.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        Sampler::new(self, default_lattice_cap())?.draw(rng)
    }

    fn leaves(&self) -> Vec<Leaf<'_>> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<Leaf<'a>>) {
        match self {
            Self::FixedProduct { params, n } => out.push(Leaf {
                len: *n,
                kind: LeafKind::Fixed(params),
            }),
            Self::Nml(d) => out.push(Leaf {
                len: d.n(),
                kind: LeafKind::Nml(d),
            }),
            Self::ConcatProduct(parts) => parts.iter().for_each(|p| p.collect_leaves(out)),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum LeafKind<'a> {
    Fixed(&'a [f64]),
    Nml(&'a NmlDistribution),
}

#[derive(Debug, Clone, Copy)]
struct Leaf<'a> {
    len: usize,
    kind: LeafKind<'a>,
}

impl Leaf<'_> {
    fn log_prob(&self, counts: &[usize]) -> f64 {
        match self.kind {
            LeafKind::Fixed(params) => log_likelihood(params, counts),
            LeafKind::Nml(d) => d.log_prob_counts(counts),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    len: usize,
    p_leaf: usize,
    q_leaf: usize,
}

fn check_pair(p: &DistributionHandle, q: &DistributionHandle) -> Result<()> {
    if p.n() != q.n() {
        return Err(Error::HorizonMismatch {
            expected: p.n(),
            found: q.n(),
        });
    }
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::InvalidParams(
            "distributions use different alphabets".into(),
        ));
    }
    Ok(())
}

/// Cuts both leaf lists at the union of their boundaries.
fn refine(p: &[Leaf<'_>], q: &[Leaf<'_>]) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let (mut i, mut j) = (0, 0);
    let (mut p_left, mut q_left) = (p[0].len, q[0].len);
    loop {
        let len = p_left.min(q_left);
        pieces.push(Piece {
            len,
            p_leaf: i,
            q_leaf: j,
        });
        p_left -= len;
        q_left -= len;
        if p_left == 0 {
            i += 1;
            if i == p.len() {
                break;
            }
            p_left = p[i].len;
        }
        if q_left == 0 {
            j += 1;
            q_left = q[j].len;
        }
    }
    pieces
}

/// `ln sum_y p(y)^α q(y)^(1-α)`, exact, with an explicit enumeration cap.
pub fn log_affinity_with_cap(
    p: &DistributionHandle,
    q: &DistributionHandle,
    alpha: f64,
    cap: u128,
) -> Result<f64> {
    check_pair(p, q)?;
    let m = p.alphabet_size();
    let p_leaves = p.leaves();
    let q_leaves = q.leaves();
    let pieces = refine(&p_leaves, &q_leaves);

    let mut closed_form = 0.0;
    let mut enumerated = Vec::new();
    for piece in pieces {
        match (p_leaves[piece.p_leaf].kind, q_leaves[piece.q_leaf].kind) {
            (LeafKind::Fixed(a), LeafKind::Fixed(b)) => {
                let per_symbol: f64 = a
                    .iter()
                    .zip(b)
                    .map(|(&x, &y)| x.powf(alpha) * y.powf(1.0 - alpha))
                    .sum();
                closed_form += piece.len as f64 * per_symbol.ln();
            }
            _ => enumerated.push(piece),
        }
    }
    if enumerated.is_empty() {
        return Ok(closed_form);
    }

    let points = enumerated.iter().fold(1u128, |acc, piece| {
        acc.saturating_mul(lattice_size(piece.len, m))
    });
    if points > cap {
        return Err(Error::ExactIntractable { points, cap });
    }

    let mut ctx = Enumeration {
        pieces: &enumerated,
        p_leaves: &p_leaves,
        q_leaves: &q_leaves,
        alpha,
        m,
        p_counts: vec![vec![0; m]; p_leaves.len()],
        q_counts: vec![vec![0; m]; q_leaves.len()],
        acc: LogSumExp::new(),
    };
    ctx.descend(0, 0.0);
    Ok(closed_form + ctx.acc.value())
}

struct Enumeration<'a, 'b> {
    pieces: &'a [Piece],
    p_leaves: &'a [Leaf<'b>],
    q_leaves: &'a [Leaf<'b>],
    alpha: f64,
    m: usize,
    p_counts: Vec<Vec<usize>>,
    q_counts: Vec<Vec<usize>>,
    acc: LogSumExp,
}

impl Enumeration<'_, '_> {
    fn descend(&mut self, index: usize, partial: f64) {
        if index == self.pieces.len() {
            let mut total = partial;
            for (leaf, counts) in self.p_leaves.iter().zip(&self.p_counts) {
                if let LeafKind::Nml(d) = leaf.kind {
                    total += self.alpha * d.log_prob_counts(counts);
                }
            }
            for (leaf, counts) in self.q_leaves.iter().zip(&self.q_counts) {
                if let LeafKind::Nml(d) = leaf.kind {
                    total += (1.0 - self.alpha) * d.log_prob_counts(counts);
                }
            }
            self.acc.add(total);
            return;
        }
        let piece = self.pieces[index];
        let m = self.m;
        for_each_composition(piece.len, m, |counts| {
            let mut term = partial + ln_multinomial(counts);
            if let LeafKind::Fixed(params) = self.p_leaves[piece.p_leaf].kind {
                term += self.alpha * log_likelihood(params, counts);
            }
            if let LeafKind::Fixed(params) = self.q_leaves[piece.q_leaf].kind {
                term += (1.0 - self.alpha) * log_likelihood(params, counts);
            }
            if term == f64::NEG_INFINITY {
                return;
            }
            for (j, &c) in counts.iter().enumerate() {
                self.p_counts[piece.p_leaf][j] += c;
                self.q_counts[piece.q_leaf][j] += c;
            }
            self.descend(index + 1, term);
            for (j, &c) in counts.iter().enumerate() {
                self.p_counts[piece.p_leaf][j] -= c;
                self.q_counts[piece.q_leaf][j] -= c;
            }
        });
    }
}

/// `ln sum_y p(y)^α q(y)^(1-α)` under the default enumeration cap.
pub fn log_affinity(p: &DistributionHandle, q: &DistributionHandle, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    log_affinity_with_cap(p, q, alpha, default_lattice_cap())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// Per-symbol Bhattacharyya distance `-(1/n) ln sum_y sqrt(p(y) q(y))`, exact.
pub fn bhattacharyya(p: &DistributionHandle, q: &DistributionHandle) -> Result<f64> {
    let n = p.n() as f64;
    Ok((-log_affinity(p, q, 0.5)? / n).max(0.0))
}

/// `(1 / (2α(1-α))) (1 - (sum_y p^α q^(1-α))^(1/n))`.
pub fn alpha_divergence(p: &DistributionHandle, q: &DistributionHandle, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = p.n() as f64;
    let la = log_affinity(p, q, alpha)?;
    Ok(((1.0 - (la / n).exp()) / (2.0 * alpha * (1.0 - alpha))).max(0.0))
}

/// The α = 1/2 member of the α-divergence family.
pub fn hellinger(p: &DistributionHandle, q: &DistributionHandle) -> Result<f64> {
    alpha_divergence(p, q, 0.5)
}

/// `sum_j p_j ln(p_j / q_j)` for single-symbol distributions.
pub fn kl_per_symbol(p: &[f64], q: &[f64]) -> Result<f64> {
    validate_params(p, None)?;
    validate_params(q, Some(p.len()))?;
    let mut total = 0.0;
    for (j, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Err(Error::SupportViolation { index: j });
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Bhattacharyya distance estimated from `trials` draws `y ~ p` as
/// `-(1/n) ln mean sqrt(q(y)/p(y))`; the standard error uses the delta method.
pub fn bhattacharyya_monte_carlo(
    p: &DistributionHandle,
    q: &DistributionHandle,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    check_pair(p, q)?;
    if trials < 2 {
        return Err(Error::InvalidConfig(
            "Monte Carlo needs at least 2 trials".into(),
        ));
    }
    let sampler = Sampler::new(p, default_lattice_cap())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let y = sampler.draw(&mut rng)?;
        let w = (0.5 * (q.log_prob(&y)? - p.log_prob(&y)?)).exp();
        sum += w;
        sum_sq += w * w;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0);
    let n = p.n() as f64;
    Ok(MonteCarloEstimate {
        value: -mean.ln() / n,
        std_error: (var / t).sqrt() / (mean * n),
        trials,
    })
}

/// Pre-built draw tables for a handle.
enum Sampler {
    Fixed {
        params: Vec<f64>,
        n: usize,
    },
    CountClasses {
        classes: Vec<Vec<usize>>,
        index: WeightedIndex<f64>,
    },
    Concat(Vec<Sampler>),
}

impl Sampler {
    fn new(handle: &DistributionHandle, cap: u128) -> Result<Self> {
        Ok(match handle {
            DistributionHandle::FixedProduct { params, n } => Sampler::Fixed {
                params: params.clone(),
                n: *n,
            },
            DistributionHandle::Nml(d) => {
                let m = d.model().alphabet_size();
                let points = lattice_size(d.n(), m);
                if points > cap {
                    return Err(Error::ExactIntractable { points, cap });
                }
                let mut classes = Vec::new();
                let mut weights = Vec::new();
                for_each_composition(d.n(), m, |c| {
                    weights.push((ln_multinomial(c) + d.log_prob_counts(c)).exp());
                    classes.push(c.to_vec());
                });
                let index = WeightedIndex::new(&weights)
                    .map_err(|e| Error::InvalidParams(format!("NML weights: {e}")))?;
                Sampler::CountClasses { classes, index }
            }
            DistributionHandle::ConcatProduct(parts) => Sampler::Concat(
                parts
                    .iter()
                    .map(|p| Sampler::new(p, cap))
                    .collect::<Result<_>>()?,
            ),
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<usize>> {
        match self {
            Sampler::Fixed { params, n } => draw_iid(params, *n, rng),
            Sampler::CountClasses { classes, index } => {
                let counts = &classes[index.sample(rng)];
                let mut seq: Vec<usize> = counts
                    .iter()
                    .enumerate()
                    .flat_map(|(s, &k)| std::iter::repeat_n(s, k))
                    .collect();
                seq.shuffle(rng);
                Ok(seq)
            }
            Sampler::Concat(parts) => {
                let mut out = Vec::new();
                for part in parts {
                    out.extend(part.draw(rng)?);
                }
                Ok(out)
            }
        }
    }
}
