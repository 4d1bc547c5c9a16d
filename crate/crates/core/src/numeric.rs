//! Log-space arithmetic and count-lattice enumeration.

use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

/// Default cap on the number of count vectors an exact enumeration may visit.
pub const DEFAULT_LATTICE_CAP: u128 = 100_000_000;

/// Environment variable overriding [`DEFAULT_LATTICE_CAP`].
pub const LATTICE_CAP_ENV: &str = "NML_DDIM_LATTICE_CAP";

const LN_FACTORIAL_TABLE_LEN: usize = 1 << 16;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE_LEN);
        let mut acc = 0.0f64;
        table.push(0.0);
        for i in 1..LN_FACTORIAL_TABLE_LEN {
            acc += (i as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(n!)`, served from a shared table for small `n`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < LN_FACTORIAL_TABLE_LEN {
        ln_factorial_table()[n]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln(n! / prod_j k_j!)`.
pub fn ln_multinomial(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    ln_factorial(n) - counts.iter().map(|&k| ln_factorial(k)).sum::<f64>()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `k ln k` with `0 ln 0 = 0`.
#[inline]
pub fn xlogx(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        let k = k as f64;
        k * k.ln()
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln sum_i e^{x_i}`; returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSumExp::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Streaming log-sum-exp accumulator that rescales when a larger term arrives.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled_sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled_sum: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled_sum += (x - self.max).exp();
        } else {
            self.scaled_sum = self.scaled_sum * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled_sum.ln()
        }
    }
}

/// Number of count vectors of length `m` summing to `n`, i.e. `C(n+m-1, m-1)`,
/// saturating at `u128::MAX`.
pub fn lattice_size(n: usize, m: usize) -> u128 {
    if m == 0 {
        return u128::from(n == 0);
    }
    let k = (m - 1) as u128;
    let top = (n + m - 1) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(top - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Visits every count vector of length `m` summing to `n` in lexicographic order.
pub fn for_each_composition<F: FnMut(&[usize])>(n: usize, m: usize, mut visit: F) {
    if m == 0 {
        if n == 0 {
            visit(&[]);
        }
        return;
    }
    let mut counts = vec![0usize; m];
    counts[m - 1] = n;
    loop {
        visit(&counts);
        // advance: find the rightmost position before the last with a nonzero tail
        let tail = counts[m - 1];
        if m == 1 {
            return;
        }
        if tail > 0 {
            counts[m - 2] += 1;
            counts[m - 1] = tail - 1;
            continue;
        }
        // carry leftwards
        let mut i = m - 2;
        loop {
            if i == 0 {
                return;
            }
            let moved = counts[i];
            if moved > 0 {
                counts[i] = 0;
                counts[i - 1] += 1;
                counts[m - 1] = moved - 1;
                break;
            }
            i -= 1;
        }
    }
}

/// The lattice cap in effect: `NML_DDIM_LATTICE_CAP` when set and valid,
/// otherwise [`DEFAULT_LATTICE_CAP`].
pub fn default_lattice_cap() -> u128 {
    static CAP: OnceLock<u128> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(LATTICE_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u128>().ok())
            .unwrap_or(DEFAULT_LATTICE_CAP)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_enumerate_whole_lattice() {
        for m in 1..5 {
            for n in 0..7 {
                let mut seen = Vec::new();
                for_each_composition(n, m, |c| {
                    assert_eq!(c.iter().sum::<usize>(), n);
                    seen.push(c.to_vec());
                });
                assert_eq!(seen.len() as u128, lattice_size(n, m), "n={n} m={m}");
                let mut sorted = seen.clone();
                sorted.sort();
                sorted.dedup();
                assert_eq!(sorted.len(), seen.len());
            }
        }
    }

    #[test]
    fn lattice_size_matches_binomial() {
        assert_eq!(lattice_size(10, 2), 11);
        assert_eq!(lattice_size(3200, 4), 5_471_579_201);
        assert_eq!(lattice_size(5, 1), 1);
    }

    #[test]
    fn ln_factorial_agrees_with_gamma_past_table() {
        let n = LN_FACTORIAL_TABLE_LEN - 1;
        let rel = (ln_factorial(n) - ln_gamma(n as f64 + 1.0)).abs() / ln_factorial(n);
        assert!(rel < 1e-12);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_add_exp(0.0, f64::NEG_INFINITY)).abs() < 1e-15);
    }
}
