//! Exact samplers and density machinery for the bridge law, its dyadic
//! projections, and their Gibbs reweightings.
//!
//! * `sample_bridge` draws the bridge at the grid nodes by midpoint bisection
//!   (exact joint law, covariance `r /\ s - r s`); `sample_bridge_cholesky`
//!   does the same through a Cholesky factor of the node covariance. Two
//!   independent exact samplers, cross-validated in the tests.
//! * `sample_mu_n` draws the exact law of the cell-average projection of the
//!   bridge: trapezoid averages of the node values plus the independent
//!   sub-cell integral correction `N(0, 2^-n / 12)` per cell. Its covariance
//!   matrix is `covariance_sigma_n` in closed form.
//! * Gibbs targets reweight the proposal by `exp(-F)`; since the drift datum
//!   is bounded by `B`, exact rejection with envelope `e^B` applies and the
//!   output is distributed exactly as the target. No burn-in, no mixing.

use crate::drift::{JumpDrift, Mollified};
use crate::error::{Error, Result};
use crate::path::{Grid, Path, PathKind};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Draw a standard Brownian bridge at the nodes of `grid` by dyadic midpoint
/// bisection; returns the piecewise-linear interpolant, pinned to exactly zero
/// at both ends.
pub fn sample_bridge(grid: Grid, rng: &mut impl Rng) -> Path {
    let n = grid.cells();
    let mut v = vec![0.0f64; n + 1];
    let mut span = n;
    while span > 1 {
        let half = span / 2;
        let len = span as f64 * grid.width();
        let sd = (len / 4.0).sqrt();
        let mut start = 0;
        while start < n {
            let z: f64 = rng.sample(StandardNormal);
            v[start + half] = 0.5 * (v[start] + v[start + span]) + sd * z;
            start += span;
        }
        span = half;
    }
    Path::bridge_linear(grid.level(), v).expect("bisection keeps endpoints at zero")
}

/// Covariance of the bridge at the interior nodes of `grid`.
fn bridge_node_covariance(grid: Grid) -> DMatrix<f64> {
    let m = grid.cells() - 1;
    DMatrix::from_fn(m, m, |i, j| {
        let (r, s) = (grid.node(i + 1), grid.node(j + 1));
        r.min(s) - r * s
    })
}

/// Bridge sampler via Cholesky of the exact node covariance. Exact like the
/// bisection sampler but with a different construction; kept as an independent
/// cross-check.
pub fn sample_bridge_cholesky(grid: Grid, rng: &mut impl Rng) -> Result<Path> {
    let m = grid.cells() - 1;
    let chol = Cholesky::new(bridge_node_covariance(grid)).ok_or_else(|| {
        Error::Factorization("bridge node covariance not positive definite".to_string())
    })?;
    let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
    let x = chol.l() * z;
    let mut v = vec![0.0; grid.nodes()];
    for i in 0..m {
        v[i + 1] = x[i];
    }
    Path::bridge_linear(grid.level(), v)
}

/// Draw the exact cell-average projection of the bridge at level `n`.
///
/// Conditionally on the node values, the integral of the bridge over a cell is
/// the trapezoid average plus an independent `N(0, width^3/12)`; dividing by
/// the width gives the cell average. This is the exact law of the projected
/// bridge, with covariance matrix [`covariance_sigma_n`].
pub fn sample_mu_n(n: u32, rng: &mut impl Rng) -> Path {
    let grid = Grid::new(n);
    let nodes = sample_bridge(grid, rng);
    let c = grid.width();
    let sd = (c / 12.0).sqrt();
    let v = nodes.values();
    let mut cells = Vec::with_capacity(grid.cells());
    for k in 0..grid.cells() {
        let z: f64 = rng.sample(StandardNormal);
        cells.push(0.5 * (v[k] + v[k + 1]) + sd * z);
    }
    Path::constant(n, cells).expect("cell count")
}

/// Cell-average covariance of the projected bridge, with its Cholesky factor.
#[derive(Debug, Clone)]
pub struct CovarianceOperator {
    level: u32,
    sigma: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

/// Closed-form entries of the cell-average covariance
/// `Sigma_n[i,j] = 2^{2n} int int_{cell_i x cell_j} (r /\ s - r s) dr ds`.
///
/// Off-diagonal blocks are separable (`r (1-s)` for `r < s`) and reduce to
/// midpoint products; the diagonal integrates `r /\ s` over the square in
/// closed form.
pub fn covariance_sigma_n(n: u32) -> Result<CovarianceOperator> {
    let grid = Grid::new(n);
    let cells = grid.cells();
    let c = grid.width();
    let mut sigma = DMatrix::zeros(cells, cells);
    for i in 0..cells {
        for j in 0..cells {
            if i == j {
                let (a, b) = (grid.node(i), grid.node(i + 1));
                let minpart = (b * b * b - a * a * a) / 3.0 - a * a * c;
                let m = (b * b - a * a) / 2.0;
                sigma[(i, j)] = (minpart - m * m) / (c * c);
            } else {
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                sigma[(i, j)] = grid.cell_midpoint(lo) * (1.0 - grid.cell_midpoint(hi));
            }
        }
    }
    let chol = Cholesky::new(sigma.clone())
        .ok_or_else(|| Error::Factorization(format!("Sigma_{n} is not positive definite")))?;
    Ok(CovarianceOperator { level: n, sigma, chol })
}

impl CovarianceOperator {
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn cells(&self) -> usize {
        self.sigma.nrows()
    }

    /// Exact sample of the projected bridge through the Cholesky factor;
    /// independent cross-check of [`sample_mu_n`].
    pub fn sample(&self, rng: &mut impl Rng) -> Path {
        let m = self.cells();
        let z = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = self.chol.l() * z;
        Path::constant(self.level, x.iter().copied().collect()).expect("cell count")
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }

    /// Marginal standard deviations `sqrt(Sigma[i,i])`.
    pub fn marginal_sd(&self) -> Vec<f64> {
        (0..self.cells()).map(|i| self.sigma[(i, i)].sqrt()).collect()
    }
}

/// Drift matrix `A_n = -1/2 Sigma_n^{-1}` of the projected linear dynamics,
/// normalized so that `(-2 A_n) Sigma_n = I` exactly.
pub fn drift_matrix_an(cov: &CovarianceOperator) -> DMatrix<f64> {
    let mut inv = cov.inverse();
    inv.scale_mut(-0.5);
    inv
}

/// How the potential is accumulated over a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialRule {
    /// `F_n(x) = 2^{-n} sum_{i=0}^{2^n - 1} f(x_i)` over the cell values at
    /// level `n` (every cell carries the weight; the path is projected first
    /// if it is finer).
    Discrete { level: u32 },
    /// Exact quadrature of `int_0^1 f(x_r) dr` on the path's own
    /// representative: closed-form crossing arithmetic for the jump part,
    /// Gauss-Legendre for the smooth part on linear segments.
    PathNative,
}

/// Exact sojourn time of a linear segment below the level `y`.
pub(crate) fn segment_time_below(a: f64, b: f64, len: f64, y: f64) -> f64 {
    if a <= y && b <= y {
        len
    } else if a > y && b > y {
        0.0
    } else if a <= y {
        // upward crossing: below until the crossing point
        len * (y - a) / (b - a)
    } else {
        // downward crossing: below after the crossing point
        len * (y - b) / (a - b)
    }
}

const GL8_X: [f64; 8] = [
    -0.960289856497536,
    -0.796666477413627,
    -0.525532409916329,
    -0.183434642495650,
    0.183434642495650,
    0.525532409916329,
    0.796666477413627,
    0.960289856497536,
];
const GL8_W: [f64; 8] = [
    0.101228536290376,
    0.222381034453374,
    0.313706645877887,
    0.362683783378362,
    0.362683783378362,
    0.313706645877887,
    0.222381034453374,
    0.101228536290376,
];

fn gl8_unit<F: Fn(f64) -> f64>(f: F) -> f64 {
    let mut s = 0.0;
    for j in 0..8 {
        s += GL8_W[j] * f(0.5 + 0.5 * GL8_X[j]);
    }
    s * 0.5
}

/// `F(x) = int f(x_r) dr` under the given rule.
pub fn potential(x: &Path, d: &JumpDrift, rule: PotentialRule) -> Result<f64> {
    match rule {
        PotentialRule::Discrete { level } => {
            if level > x.level() {
                return Err(Error::Refinement { have: x.level(), want: level });
            }
            let p = x.project(level)?;
            let c = p.grid().width();
            Ok(c * p.values().iter().map(|&v| d.eval(v)).sum::<f64>())
        }
        PotentialRule::PathNative => match x.kind() {
            PathKind::Constant => potential(x, d, PotentialRule::Discrete { level: x.level() }),
            PathKind::Linear => {
                let len = x.grid().width();
                let v = x.values();
                let mut acc = 0.0;
                for k in 0..x.grid().cells() {
                    let (a, b) = (v[k], v[k + 1]);
                    if !d.smooth().is_zero() {
                        acc += len * gl8_unit(|t| d.smooth().eval(a + (b - a) * t));
                    }
                    for j in d.jumps() {
                        acc += j.size * segment_time_below(a, b, len, j.at);
                    }
                }
                Ok(acc)
            }
        },
    }
}

/// Which Gibbs measure is targeted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GibbsTarget {
    /// The projected measure at level `n`: cell-average proposal, discrete
    /// potential with the `2^{-n}` weight.
    Projected { level: u32 },
    /// The continuum measure realized at a declared simulation mesh:
    /// piecewise-linear bridge proposal, exact path-native potential.
    Interpolated { mesh_level: u32 },
}

/// The drift datum entering the Gibbs weight: either the sharp `f` or one of
/// its mollifications `f_n`.
#[derive(Debug, Clone)]
pub enum GibbsDrift {
    Sharp(JumpDrift),
    Mollified(Mollified),
}

impl GibbsDrift {
    pub fn sup_bound(&self) -> f64 {
        match self {
            GibbsDrift::Sharp(d) => d.sup_bound(),
            GibbsDrift::Mollified(m) => m.sup_bound(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            GibbsDrift::Sharp(d) => d.is_zero(),
            GibbsDrift::Mollified(m) => m.drift().is_zero(),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            GibbsDrift::Sharp(d) => d.eval(y),
            GibbsDrift::Mollified(m) => m.eval(y),
        }
    }

    fn potential_discrete(&self, x: &Path, level: u32) -> Result<f64> {
        if level > x.level() {
            return Err(Error::Refinement { have: x.level(), want: level });
        }
        let p = x.project(level)?;
        let c = p.grid().width();
        Ok(c * p.values().iter().map(|&v| self.eval(v)).sum::<f64>())
    }

    fn potential_native(&self, x: &Path) -> Result<f64> {
        match self {
            GibbsDrift::Sharp(d) => potential(x, d, PotentialRule::PathNative),
            GibbsDrift::Mollified(m) => match x.kind() {
                PathKind::Constant => self.potential_discrete(x, x.level()),
                PathKind::Linear => {
                    let len = x.grid().width();
                    let v = x.values();
                    let mut acc = 0.0;
                    for k in 0..x.grid().cells() {
                        let (a, b) = (v[k], v[k + 1]);
                        acc += len * gl8_unit(|t| m.eval(a + (b - a) * t));
                    }
                    Ok(acc)
                }
            },
        }
    }
}

/// Monte-Carlo estimate of a normalization constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
}

/// A Gibbs reweighting `exp(-F) d(proposal) / Z` of one of the exact Gaussian
/// laws above.
#[derive(Debug, Clone)]
pub struct GibbsSpec {
    pub target: GibbsTarget,
    pub drift: GibbsDrift,
    pub z_estimate: Option<ZEstimate>,
}

impl GibbsSpec {
    pub fn new(target: GibbsTarget, drift: GibbsDrift) -> Self {
        GibbsSpec { target, drift, z_estimate: None }
    }

    pub fn projected(level: u32, drift: JumpDrift) -> Self {
        GibbsSpec::new(GibbsTarget::Projected { level }, GibbsDrift::Sharp(drift))
    }

    pub fn interpolated(mesh_level: u32, drift: JumpDrift) -> Self {
        GibbsSpec::new(GibbsTarget::Interpolated { mesh_level }, GibbsDrift::Sharp(drift))
    }

    pub fn interpolated_mollified(mesh_level: u32, drift: Mollified) -> Self {
        GibbsSpec::new(GibbsTarget::Interpolated { mesh_level }, GibbsDrift::Mollified(drift))
    }

    /// Envelope exponent `B >= sup |f|`; the density weight `e^{-F}` lies in
    /// `[e^{-B}, e^{B}]` for every path.
    pub fn weight_bound(&self) -> f64 {
        self.drift.sup_bound()
    }

    pub fn propose(&self, rng: &mut impl Rng) -> Path {
        match self.target {
            GibbsTarget::Projected { level } => sample_mu_n(level, rng),
            GibbsTarget::Interpolated { mesh_level } => sample_bridge(Grid::new(mesh_level), rng),
        }
    }

    pub fn potential_of(&self, x: &Path) -> Result<f64> {
        match self.target {
            GibbsTarget::Projected { level } => self.drift.potential_discrete(x, level),
            GibbsTarget::Interpolated { .. } => self.drift.potential_native(x),
        }
    }

    pub fn with_z_estimate(mut self, z: ZEstimate) -> Self {
        self.z_estimate = Some(z);
        self
    }
}

/// One exact-rejection sample together with the number of proposals used.
#[derive(Debug, Clone)]
pub struct GibbsDraw {
    pub path: Path,
    pub attempts: u32,
}

/// Exact rejection sampler: propose from the Gaussian law, accept with
/// probability `exp(-F - B)`. Acceptance is at least `e^{-2B}`. For a zero
/// drift the envelope is skipped entirely, so the generator consumption (and
/// hence the sample stream) is bit-identical to the plain proposal.
pub fn sample_gibbs(spec: &GibbsSpec, rng: &mut impl Rng) -> Result<GibbsDraw> {
    let b = spec.weight_bound();
    let mut attempts = 0u32;
    loop {
        attempts += 1;
        let x = spec.propose(rng);
        if b == 0.0 {
            return Ok(GibbsDraw { path: x, attempts });
        }
        let f = spec.potential_of(&x)?;
        let u: f64 = rng.random();
        if u < (-f - b).exp() {
            return Ok(GibbsDraw { path: x, attempts });
        }
    }
}

/// Monte-Carlo estimate of `Z = E[exp(-F)]` under the proposal law.
pub fn estimate_z(spec: &GibbsSpec, n_samples: usize, rng: &mut impl Rng) -> Result<ZEstimate> {
    if n_samples < 2 {
        return Err(Error::parameter("estimate_z needs at least 2 samples".to_string()));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..n_samples {
        let x = spec.propose(rng);
        let w = (-spec.potential_of(&x)?).exp();
        sum += w;
        sumsq += w * w;
    }
    let m = n_samples as f64;
    let mean = sum / m;
    let var = (sumsq / m - mean * mean).max(0.0) * m / (m - 1.0);
    Ok(ZEstimate { mean, stderr: (var / m).sqrt(), n_samples })
}
