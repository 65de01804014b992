use std::sync::OnceLock;

use crate::error::{Result, ThdError};

const TABLE_SIZE: usize = 2048;

fn table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_SIZE);
        let mut acc = 0.0f64;
        t.push(0.0);
        for i in 1..TABLE_SIZE {
            acc += (i as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`: summed table for small `n`, Stirling series beyond it.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_SIZE {
        return table()[n as usize];
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn check(population: u64, successes: u64, draws: u64, k: u64) -> Result<()> {
    if successes > population || draws > population || k > draws.min(successes) {
        return Err(ThdError::InvalidParameter(format!(
            "hypergeometric parameters out of range: N={population}, K={successes}, n={draws}, k={k}"
        )));
    }
    Ok(())
}

/// `P(X = k)` for `X ~ Hypergeometric(N, K, n)`.
pub fn hypergeometric_pmf(population: u64, successes: u64, draws: u64, k: u64) -> Result<f64> {
    check(population, successes, draws, k)?;
    if draws - k > population - successes {
        return Ok(0.0);
    }
    Ok(pmf_unchecked(population, successes, draws, k))
}

fn pmf_unchecked(population: u64, successes: u64, draws: u64, k: u64) -> f64 {
    (ln_choose(successes, k) + ln_choose(population - successes, draws - k) - ln_choose(population, draws)).exp()
}

/// Upper tail `P(X >= k)`: the chance of drawing at least `k` successes in
/// `n` draws without replacement from `N` items of which `K` are successes.
pub fn hypergeometric_tail(population: u64, successes: u64, draws: u64, k: u64) -> Result<f64> {
    check(population, successes, draws, k)?;
    let lowest = draws.saturating_sub(population - successes);
    if k <= lowest {
        return Ok(1.0);
    }
    let highest = draws.min(successes);
    // Summing from the far end adds the smallest terms first.
    let sum: f64 = (k..=highest).rev().map(|x| pmf_unchecked(population, successes, draws, x)).sum();
    Ok(sum.min(1.0))
}

/// Lower tail `P(X <= k)`, via the tail of the complementary category.
pub fn hypergeometric_lower_tail(population: u64, successes: u64, draws: u64, k: u64) -> Result<f64> {
    check(population, successes, draws, k)?;
    let failures = population - successes;
    let min_failures = draws - k;
    if min_failures > failures {
        return Ok(0.0);
    }
    hypergeometric_tail(population, failures, draws, min_failures)
}
