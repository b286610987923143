//! Eigenvalue combinatorics of the linearized dynamics.
//!
//! The second-derivative operator with Dirichlet boundary has eigenvalues
//! `1/lambda_k = (pi k)^2`; multi-indices `gamma: N* -> N` with finite support
//! index the product eigenfunctions, with eigenvalue
//! `Lambda_gamma = pi^2 sum_k gamma_k k^2`. Everything here reduces to the
//! integer weight `w(gamma) = sum_k gamma_k k^2`:
//!
//! * `C_n = #{gamma : w(gamma) = n}` is the number of partitions of `n` into
//!   square parts, with generating function `prod_k 1/(1 - r^{k^2})`;
//! * the semigroup trace `sum_gamma e^{-2 Lambda_gamma t}` equals the Euler
//!   product `prod_k 1/(1 - e^{-2 t pi^2 k^2})` for every `t > 0`;
//! * `sum_n C_n / n` diverges (logarithmically at the generating-function
//!   level), which is the trace-class/Hilbert-Schmidt boundary diagnostic.
//!
//! `C_n` is computed two independent ways (direct enumeration and power-series
//! coefficients) and the two are asserted equal; this is the module's oracle.

use crate::error::{Error, Result};
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Sparse multi-index `k -> gamma_k` with only nonzero entries stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiIndex {
    entries: BTreeMap<u32, u32>,
}

impl MultiIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, k: u32, count: u32) {
        if count == 0 {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, count);
        }
    }

    pub fn get(&self, k: u32) -> u32 {
        self.entries.get(&k).copied().unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.iter().map(|(k, v)| (*k, *v))
    }

    /// Integer weight `w(gamma) = sum_k gamma_k k^2`.
    pub fn weight(&self) -> u64 {
        self.entries
            .iter()
            .map(|(k, v)| u64::from(*v) * u64::from(*k) * u64::from(*k))
            .sum()
    }

    /// Eigenvalue `Lambda_gamma = pi^2 w(gamma)`.
    pub fn eigenvalue(&self) -> f64 {
        PI * PI * self.weight() as f64
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

/// All multi-indices with weight at most `cap`, each exactly once.
///
/// Recursion over part sizes `k^2 <= cap`, largest first.
pub fn enumerate_gamma(cap: u64) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let kmax = (cap as f64).sqrt().floor() as u32;
    let mut current = MultiIndex::new();
    fn rec(k: u32, budget: u64, current: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
        if k == 0 {
            out.push(current.clone());
            return;
        }
        let part = u64::from(k) * u64::from(k);
        let max_count = budget / part;
        for count in 0..=max_count {
            if count > 0 {
                current.set(k, count as u32);
            }
            rec(k - 1, budget - count * part, current, out);
        }
        current.set(k, 0);
    }
    rec(kmax, cap, &mut current, &mut out);
    out
}

/// `C_0..C_N` from the generating function `prod_{k^2 <= N} 1/(1 - r^{k^2})`,
/// truncated at degree `N`. Exact integer arithmetic; errors on overflow.
pub fn partition_counts_series(n_max: u64) -> Result<Vec<u128>> {
    let n = n_max as usize;
    let mut coeffs = vec![0u128; n + 1];
    coeffs[0] = 1;
    let mut k = 1u64;
    while k * k <= n_max {
        let part = (k * k) as usize;
        // multiply by 1/(1 - r^part): cumulative sums with stride `part`
        for i in part..=n {
            coeffs[i] = coeffs[i]
                .checked_add(coeffs[i - part])
                .ok_or_else(|| Error::parameter("partition count overflow".to_string()))?;
        }
        k += 1;
    }
    Ok(coeffs)
}

/// `C_0..C_N` by direct enumeration of multi-indices.
pub fn partition_counts_enumerated(n_max: u64) -> Vec<u128> {
    let mut counts = vec![0u128; n_max as usize + 1];
    for g in enumerate_gamma(n_max) {
        counts[g.weight() as usize] += 1;
    }
    counts
}

/// `C_0..C_N`, computed by both routes and asserted equal.
pub fn partition_counts(n_max: u64) -> Result<Vec<u128>> {
    let series = partition_counts_series(n_max)?;
    let enumerated = partition_counts_enumerated(n_max);
    if series != enumerated {
        return Err(Error::Consistency(format!(
            "partition counts disagree between enumeration and generating function up to N={n_max}"
        )));
    }
    Ok(series)
}

/// Result of the Hilbert-Schmidt trace evaluation at a fixed time.
#[derive(Debug, Clone, Serialize)]
pub struct HsTrace {
    pub t: f64,
    pub sum_side: f64,
    pub product_side: f64,
    pub sum_tail_bound: f64,
    pub product_tail_bound: f64,
}

impl HsTrace {
    pub fn relative_gap(&self) -> f64 {
        (self.sum_side - self.product_side).abs() / self.product_side
    }
}

/// Evaluate both sides of the trace identity
/// `sum_gamma e^{-2 Lambda_gamma t} = prod_k 1/(1 - e^{-2 t pi^2 k^2})`.
///
/// The sum side is truncated at weight `n_cut`, the product at `k_cut`. The
/// reported tail bounds are crude but rigorous: the sum tail uses
/// `C_n <= p(n) <= e^{pi sqrt(2n/3)}` against a geometric majorant, the
/// product tail exponentiates `sum_{k > K} 2 e^{-2 t pi^2 k^2}`.
pub fn hs_trace(t: f64, k_cut: u32, n_cut: u64) -> Result<HsTrace> {
    if t <= 0.0 {
        return Err(Error::parameter(format!("hs_trace needs t > 0, got {t}")));
    }
    let counts = partition_counts_series(n_cut)?;
    let rate = 2.0 * PI * PI * t;
    let mut sum_side = 0.0;
    for (n, c) in counts.iter().enumerate() {
        sum_side += (*c as f64) * (-rate * n as f64).exp();
    }

    let mut product_side = 1.0;
    for k in 1..=k_cut {
        let e = (-rate * (k as f64) * (k as f64)).exp();
        product_side /= 1.0 - e;
    }

    // Sum tail: for n > N with pi sqrt(2n/3) <= rate n / 2 the summand is
    // dominated by e^{-rate n / 2}.
    let hardy = PI * (2.0f64 / 3.0).sqrt();
    let n0 = ((2.0 * hardy / rate) * (2.0 * hardy / rate)).ceil().max(n_cut as f64 + 1.0);
    let mut sum_tail = 0.0;
    // exact-bound terms between n_cut and n0 using the partition bound itself
    let mut n = n_cut as f64 + 1.0;
    while n < n0 && n < n0 + 1.0 {
        sum_tail += (hardy * n.sqrt() - rate * n).exp();
        n += 1.0;
    }
    let g = (-0.5 * rate).exp();
    sum_tail += (hardy * n0.sqrt() - rate * n0).exp().min((-0.5 * rate * n0).exp()) / (1.0 - g);

    let kf = k_cut as f64 + 1.0;
    let pe = (-rate * kf * kf).exp();
    let product_tail = product_side * ((2.0 * pe / (1.0 - pe)).exp() - 1.0);

    Ok(HsTrace { t, sum_side, product_side, sum_tail_bound: sum_tail, product_tail_bound: product_tail })
}

/// Partial sums `S(N) = sum_{n <= N} C_n / n` together with a fitted
/// logarithmic growth coefficient over the requested checkpoints.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceDiagnostic {
    pub checkpoints: Vec<u64>,
    pub partial_sums: Vec<f64>,
    /// Least-squares slope of `S(N)` against `log N`.
    pub log_coefficient: f64,
}

pub fn divergence_diagnostic(checkpoints: &[u64]) -> Result<DivergenceDiagnostic> {
    let n_max = *checkpoints
        .iter()
        .max()
        .ok_or_else(|| Error::parameter("divergence diagnostic needs checkpoints".to_string()))?;
    if n_max < 1 {
        return Err(Error::parameter("divergence diagnostic needs N >= 1".to_string()));
    }
    let counts = partition_counts_series(n_max)?;
    let mut sums = Vec::with_capacity(checkpoints.len());
    for &cp in checkpoints {
        let mut s = 0.0;
        for (n, c) in counts.iter().enumerate().take(cp as usize + 1).skip(1) {
            s += *c as f64 / n as f64;
        }
        sums.push(s);
    }
    // fit S = a + c log N
    let m = checkpoints.len() as f64;
    let xs: Vec<f64> = checkpoints.iter().map(|&n| (n as f64).ln()).collect();
    let xbar = xs.iter().sum::<f64>() / m;
    let ybar = sums.iter().sum::<f64>() / m;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&sums) {
        num += (x - xbar) * (y - ybar);
        den += (x - xbar) * (x - xbar);
    }
    let log_coefficient = if den > 0.0 { num / den } else { 0.0 };
    Ok(DivergenceDiagnostic { checkpoints: checkpoints.to_vec(), partial_sums: sums, log_coefficient })
}
