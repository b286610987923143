//! 1D skew Brownian motion simulators and the interacting projected system.
//!
//! The 1D references are the Harrison-Shepp biased walk (symmetric steps away
//! from the origin, upward with probability `(1+beta)/2` at the origin) and
//! the exact one-step marginal from the origin (`|N(0,t)|` with a biased
//! sign). The walk requires `|beta| <= 1`; outside that band the skew equation
//! has no solution and the constructor refuses.
//!
//! The interacting system evolves the cell-value vector `x` of the level-`n`
//! projection:
//!
//! * linear part: exact Ornstein-Uhlenbeck transition for
//!   `dX = B X dt + sqrt(2^n) dW` per coordinate, with `B = 2^n A_n` the
//!   coordinate form of the projected drift operator (`A_n` from
//!   [`crate::measures::drift_matrix_an`]). The per-coordinate noise variance
//!   `2^n dt` is the cylindrical white-noise pairing in the projected
//!   geometry; with this pairing the Gaussian part leaves the projected
//!   bridge law exactly invariant, stationary covariance `Sigma_n`.
//! * smooth drift: explicit Euler half-step `-1/2 f_0'(x) dt`.
//! * skew corrections, one per (coordinate, jump level): if the step crossed
//!   the level (certainly, or with the Brownian-bridge crossing probability
//!   `exp(-2 (s-y)(e-y) / v)` when both endpoints sit on the same side), the
//!   endpoint's side is re-biased so that excursions leave upward with
//!   probability `(1+beta_j)/2`: for `beta_j > 0` an endpoint below the level
//!   is mirrored with probability `beta_j` (symmetrically above for
//!   `beta_j < 0`). Started exactly at the level this reproduces the skew
//!   marginal exactly; for `beta_j = 0` the correction consumes no randomness
//!   and is a bitwise no-op.
//!
//! Local-time counters accumulate the expected unsigned increment
//! `sqrt(2 v / pi)` per detected crossing; they are observables only and do
//! not feed back into the update.

use crate::drift::JumpDrift;
use crate::error::{Error, Result};
use crate::measures::{covariance_sigma_n, drift_matrix_an};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Harrison-Shepp skew random walk trajectory on the `sqrt(dt)` lattice.
pub fn skew_walk_path(
    beta: f64,
    t_final: f64,
    dt: f64,
    x0: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if beta.abs() > 1.0 {
        return Err(Error::Solvability { beta });
    }
    if dt <= 0.0 || t_final < 0.0 {
        return Err(Error::parameter("skew walk needs dt > 0 and T >= 0".to_string()));
    }
    let steps = (t_final / dt).round() as usize;
    let h = dt.sqrt();
    let mut k: i64 = (x0 / h).round() as i64;
    let up_at_zero = 0.5 * (1.0 + beta);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(k as f64 * h);
    for _ in 0..steps {
        let u: f64 = rng.random();
        let up = if k == 0 { u < up_at_zero } else { u < 0.5 };
        k += if up { 1 } else { -1 };
        out.push(k as f64 * h);
    }
    Ok(out)
}

/// Terminal value of the skew walk without storing the trajectory.
pub fn skew_walk_terminal(
    beta: f64,
    t_final: f64,
    dt: f64,
    x0: f64,
    rng: &mut impl Rng,
) -> Result<f64> {
    if beta.abs() > 1.0 {
        return Err(Error::Solvability { beta });
    }
    if dt <= 0.0 || t_final < 0.0 {
        return Err(Error::parameter("skew walk needs dt > 0 and T >= 0".to_string()));
    }
    let steps = (t_final / dt).round() as usize;
    let h = dt.sqrt();
    let mut k: i64 = (x0 / h).round() as i64;
    let up_at_zero = 0.5 * (1.0 + beta);
    for _ in 0..steps {
        let u: f64 = rng.random();
        let up = if k == 0 { u < up_at_zero } else { u < 0.5 };
        k += if up { 1 } else { -1 };
    }
    Ok(k as f64 * h)
}

/// Exact marginal at time `t` of the skew motion started at the origin:
/// `|N(0,t)|` signed `+` with probability `alpha`.
pub fn skew_flip_exact(alpha: f64, t: f64, rng: &mut impl Rng) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::parameter(format!("alpha = {alpha} outside [0,1]")));
    }
    if t <= 0.0 {
        return Err(Error::parameter("skew_flip_exact needs t > 0".to_string()));
    }
    let z: f64 = rng.sample(StandardNormal);
    let mag = z.abs() * t.sqrt();
    let u: f64 = rng.random();
    Ok(if u < alpha { mag } else { -mag })
}

/// State of the interacting system: cell values, clock, and local-time
/// counters per (coordinate, jump level), flattened row-major.
#[derive(Debug, Clone)]
pub struct SkewSystemState {
    pub x: DVector<f64>,
    pub t: f64,
    pub local_times: Vec<f64>,
}

impl SkewSystemState {
    pub fn local_time(&self, cell: usize, jump: usize, n_jumps: usize) -> f64 {
        self.local_times[cell * n_jumps + jump]
    }
}

/// Precomputed stepper for the level-`n` interacting skew system.
#[derive(Debug, Clone)]
pub struct SkewSystem {
    level: u32,
    cells: usize,
    dt: f64,
    drift: JumpDrift,
    /// `(y_j, beta_j)` pairs; zero-size jumps are dropped.
    skew_levels: Vec<(f64, f64)>,
    exp_b: DMatrix<f64>,
    noise_l: DMatrix<f64>,
    step_var: Vec<f64>,
    lt_units: Vec<f64>,
    has_smooth: bool,
}

impl SkewSystem {
    /// Build the stepper; refuses time steps with `dt * |B| >= 1` and steps
    /// wide enough to straddle two distinct jump levels at once.
    pub fn new(n: u32, drift: JumpDrift, dt: f64) -> Result<Self> {
        Self::build(n, drift, dt, false)
    }

    /// Variant with the linear drift zeroed, for the noise-calibration audit.
    pub fn new_zero_drift_audit(n: u32, dt: f64) -> Result<Self> {
        Self::build(n, JumpDrift::zero(), dt, true)
    }

    fn build(n: u32, drift: JumpDrift, dt: f64, zero_drift: bool) -> Result<Self> {
        if dt <= 0.0 {
            return Err(Error::parameter("dt must be positive".to_string()));
        }
        let cov = covariance_sigma_n(n)?;
        let cells = cov.cells();
        let scale = (1u64 << n) as f64;
        let noise_rate = scale; // per-coordinate variance rate of cylindrical noise

        let (exp_b, v) = if zero_drift {
            (DMatrix::identity(cells, cells), DMatrix::from_diagonal_element(cells, cells, noise_rate * dt))
        } else {
            let a = drift_matrix_an(&cov);
            let a_norm = a
                .clone()
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, l| m.max(l.abs()));
            if dt * a_norm >= 1.0 {
                return Err(Error::Stability(format!(
                    "dt = {dt} too large for the level-{n} drift (dt * |A_n| = {:.3} >= 1)",
                    dt * a_norm
                )));
            }
            // coordinate generator B = 2^n A_n; the transition is exact, so
            // the guard above is about resolution, not blow-up
            let b = a.scale(scale);
            let eig = b.symmetric_eigen();
            let q = &eig.eigenvectors;
            let exp_d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (l * dt).exp()));
            let exp_b = q * exp_d * q.transpose();
            let v = cov.sigma() - &exp_b * cov.sigma() * exp_b.transpose();
            (exp_b, v)
        };

        let step_var: Vec<f64> = (0..cells).map(|i| v[(i, i)]).collect();
        let noise_l = Cholesky::new(v)
            .ok_or_else(|| Error::Factorization("one-step noise covariance".to_string()))?
            .l();

        let skew_levels: Vec<(f64, f64)> = drift
            .skew_coeffs(n)
            .into_iter()
            .filter(|(_, b)| *b != 0.0)
            .collect();

        // Guard against straddling two distinct levels in a single step: the
        // per-step two-level crossing probability is bounded by
        // 2 exp(-gap^2 / (2 sigma^2)) with sigma^2 the step variance.
        if skew_levels.len() >= 2 {
            let mut ys: Vec<f64> = skew_levels.iter().map(|(y, _)| *y).collect();
            ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let gap = ys.windows(2).map(|w| w[1] - w[0]).fold(f64::MAX, f64::min);
            let sigma2 = noise_rate * dt;
            let p_two = 2.0 * (-gap * gap / (2.0 * sigma2)).exp();
            if p_two >= 1e-4 {
                return Err(Error::Stability(format!(
                    "dt = {dt} too large to separate jump levels {gap:.4} apart \
                     (two-level crossing bound {p_two:.2e} >= 1e-4)"
                )));
            }
        }

        let lt_units = step_var.iter().map(|v| (2.0 * v / std::f64::consts::PI).sqrt()).collect();
        let has_smooth = !drift.smooth().is_zero();
        Ok(SkewSystem {
            level: n,
            cells,
            dt,
            drift,
            skew_levels,
            exp_b,
            noise_l,
            step_var,
            lt_units,
            has_smooth,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_jumps(&self) -> usize {
        self.skew_levels.len()
    }

    pub fn initial_state(&self, x0: &[f64]) -> Result<SkewSystemState> {
        if x0.len() != self.cells {
            return Err(Error::parameter(format!("initial state needs {} cells", self.cells)));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("initial state must be finite".to_string()));
        }
        Ok(SkewSystemState {
            x: DVector::from_column_slice(x0),
            t: 0.0,
            local_times: vec![0.0; self.cells * self.skew_levels.len().max(1)],
        })
    }

    /// One operator-splitting step.
    pub fn step(&self, state: &mut SkewSystemState, rng: &mut impl Rng) {
        let pre = state.x.clone();
        let z = DVector::from_fn(self.cells, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut next = &self.exp_b * &pre + &self.noise_l * z;
        if self.has_smooth {
            for i in 0..self.cells {
                next[i] -= 0.5 * self.dt * self.drift.smooth_deriv(pre[i]);
            }
        }
        let n_jumps = self.skew_levels.len();
        for i in 0..self.cells {
            let s = pre[i];
            for (j, &(y, beta)) in self.skew_levels.iter().enumerate() {
                let e = next[i];
                let prod = (s - y) * (e - y);
                let crossed = if prod <= 0.0 {
                    true
                } else {
                    let p = (-2.0 * prod / self.step_var[i]).exp();
                    rng.random::<f64>() < p
                };
                if !crossed {
                    continue;
                }
                state.local_times[i * n_jumps + j] += self.lt_units[i];
                // Re-bias the endpoint side: flip endpoints on the
                // disfavored side with probability |beta|.
                if beta > 0.0 && e < y {
                    if rng.random::<f64>() < beta {
                        next[i] = 2.0 * y - e;
                    }
                } else if beta < 0.0 && e > y && rng.random::<f64>() < -beta {
                    next[i] = 2.0 * y - e;
                }
            }
        }
        state.x = next;
        state.t += self.dt;
    }

    /// Run for `t_final`, invoking the observer after every step.
    pub fn simulate_with(
        &self,
        x0: &[f64],
        t_final: f64,
        rng: &mut impl Rng,
        mut observe: impl FnMut(usize, &SkewSystemState),
    ) -> Result<SkewSystemState> {
        let steps = (t_final / self.dt).round() as usize;
        let mut state = self.initial_state(x0)?;
        for k in 0..steps {
            self.step(&mut state, rng);
            observe(k + 1, &state);
        }
        Ok(state)
    }

    /// Run for `t_final` and return the terminal state.
    pub fn simulate(
        &self,
        x0: &[f64],
        t_final: f64,
        rng: &mut impl Rng,
    ) -> Result<SkewSystemState> {
        self.simulate_with(x0, t_final, rng, |_, _| {})
    }
}

/// Largest time step that resolves the fastest linear mode at level `n`:
/// `1 / (4 |B_n|)` with `B_n = 2^n A_n` the coordinate generator. Above this
/// the per-step crossing corrections act on substantially equilibrated moves
/// and the skew interface blurs by more than the statistical tolerances.
pub fn resolved_dt_cap(n: u32) -> Result<f64> {
    let cov = covariance_sigma_n(n)?;
    let a = drift_matrix_an(&cov);
    let a_norm = a
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, l| m.max(l.abs()));
    Ok(1.0 / (4.0 * (1u64 << n) as f64 * a_norm))
}

/// Convenience wrapper matching the module-level operation: build the system
/// and return the terminal state.
pub fn simulate_interacting(
    n: u32,
    drift: &JumpDrift,
    dt: f64,
    t_final: f64,
    x0: &[f64],
    rng: &mut impl Rng,
) -> Result<SkewSystemState> {
    SkewSystem::new(n, drift.clone(), dt)?.simulate(x0, t_final, rng)
}
