//! Factorials and Poisson tails.

use std::sync::OnceLock;

/// Largest argument with an exact `f64` factorial.
const EXACT_FACTORIAL_MAX: u32 = 20;
const LN_TABLE_LEN: usize = 1024;

fn ln_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_TABLE_LEN);
        let mut exact = 1u64;
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..LN_TABLE_LEN as u64 {
            if k <= EXACT_FACTORIAL_MAX as u64 {
                exact *= k;
                acc = (exact as f64).ln();
            } else {
                acc += (k as f64).ln();
            }
            t.push(acc);
        }
        t
    })
}

/// ln(k!).
pub fn ln_factorial(k: u32) -> f64 {
    let table = ln_table();
    if (k as usize) < table.len() {
        return table[k as usize];
    }
    let mut acc = table[table.len() - 1];
    for j in table.len() as u32..=k {
        acc += (j as f64).ln();
    }
    acc
}

/// k! as a float; exact up to 20!.
pub fn factorial(k: u32) -> f64 {
    if k <= EXACT_FACTORIAL_MAX {
        (1..=k as u64).product::<u64>() as f64
    } else {
        ln_factorial(k).exp()
    }
}

/// Binomial coefficient as a float.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    if n <= EXACT_FACTORIAL_MAX {
        return factorial(n) / (factorial(k) * factorial(n - k));
    }
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k))
        .exp()
        .round()
}

/// Poisson probability mass e^{-λ} λ^k / k!.
pub fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * lambda.ln() - lambda - ln_factorial(k)).exp()
}

/// Returns (P(N ≤ d), P(N > d)) for N ~ Poisson(λ), each computed without
/// cancellation on its small side.
pub fn poisson_split(lambda: f64, d: u32) -> (f64, f64) {
    if lambda <= 0.0 {
        return (1.0, 0.0);
    }
    if d as f64 + 1.0 > lambda {
        // terms beyond d decrease; sum the upper tail directly
        let mut upper = 0.0;
        let mut k = d + 1;
        let mut term = poisson_pmf(lambda, k);
        while term > 0.0 {
            upper += term;
            if term < upper * 1e-18 {
                break;
            }
            k += 1;
            term *= lambda / k as f64;
        }
        (1.0 - upper, upper)
    } else {
        let lower: f64 = (0..=d).map(|k| poisson_pmf(lambda, k)).sum();
        (lower, 1.0 - lower)
    }
}

/// P(N ≤ d) for N ~ Poisson(λ).
pub fn poisson_cdf(lambda: f64, d: u32) -> f64 {
    poisson_split(lambda, d).0
}

/// P(N > d) for N ~ Poisson(λ).
pub fn poisson_upper_tail(lambda: f64, d: u32) -> f64 {
    poisson_split(lambda, d).1
}
