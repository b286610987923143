//! Statistical machinery and the cross-level convergence experiments.
//!
//! Everything statistical goes through pre-registered ingredients: two-sample
//! Kolmogorov-Smirnov with the asymptotic p-value, percentile bootstrap for
//! confidence intervals, and a fixed functional panel (midpoint value, the
//! first two sine coefficients, positive-occupation fraction, truncated
//! `H^{-1}` norm) through which laws on path space are compared.
//!
//! The convergence study runs the interacting skew system and the mollified
//! SPDE at a ladder of levels, compares their stationary functional laws to
//! exact fine-level Gibbs samples, and checks that distances shrink from the
//! coarsest to the finest level (bootstrap CI) while the two routes agree at
//! matched resolution.

use crate::drift::JumpDrift;
use crate::error::{Error, Result};
use crate::measures::{sample_gibbs, GibbsSpec};
use crate::path::{h_minus1_norm, holder_seminorm, sine_coefficient, Path, PathKind};
use crate::rng::SeedTree;
use crate::skew::SkewSystem;
use crate::spde::{simulate_with, SpdeScheme};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

/// A labelled batch of scalar observations.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub label: String,
    pub values: Vec<f64>,
    /// Where the randomness came from, for replay.
    pub seed_note: String,
}

impl SampleSet {
    pub fn new(label: impl Into<String>, values: Vec<f64>, seed_note: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::parameter("sample set must be nonempty".to_string()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("sample set must be finite".to_string()));
        }
        Ok(SampleSet { label: label.into(), values, seed_note: seed_note.into() })
    }
}

/// Two-sample KS statistic (sup distance of empirical CDFs).
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        let v = x.min(y);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic two-sided KS p-value (Kolmogorov distribution tail).
pub fn ks_p_value(stat: f64, n: usize, m: usize) -> f64 {
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * stat;
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut p = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        p += 2.0 * sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Sup-distance of empirical CDFs with its asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::parameter("ks_two_sample needs nonempty samples".to_string()));
    }
    let d = ks_statistic(a, b);
    Ok((d, ks_p_value(d, a.len(), b.len())))
}

/// Percentile bootstrap CI for a statistic of two samples.
pub fn bootstrap_ci_two_sample(
    a: &[f64],
    b: &[f64],
    stat: impl Fn(&[f64], &[f64]) -> f64 + Sync,
    n_boot: usize,
    level: f64,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let mut reps = Vec::with_capacity(n_boot);
    let mut ra = vec![0.0; a.len()];
    let mut rb = vec![0.0; b.len()];
    for _ in 0..n_boot {
        for v in ra.iter_mut() {
            *v = a[rng.random_range(0..a.len())];
        }
        for v in rb.iter_mut() {
            *v = b[rng.random_range(0..b.len())];
        }
        reps.push(stat(&ra, &rb));
    }
    reps.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let lo = ((1.0 - level) / 2.0 * n_boot as f64) as usize;
    let hi = (((1.0 + level) / 2.0) * n_boot as f64) as usize;
    (reps[lo.min(n_boot - 1)], reps[hi.min(n_boot - 1)])
}

/// Names of the fixed functional panel, in output order.
pub const PANEL_NAMES: [&str; 5] = ["midpoint", "sine-1", "sine-2", "pos-occupation", "h-minus1"];

/// Exact fraction of time a path spends strictly above zero.
pub fn positive_occupation(p: &Path) -> f64 {
    match p.kind() {
        PathKind::Constant => {
            p.values().iter().filter(|v| **v > 0.0).count() as f64 / p.values().len() as f64
        }
        PathKind::Linear => {
            let d = p.grid().width();
            let v = p.values();
            let below: f64 = (0..p.grid().cells())
                .map(|k| crate::measures::segment_time_below(v[k], v[k + 1], d, 0.0))
                .sum();
            1.0 - below
        }
    }
}

/// Evaluate the fixed panel on a path, in [`PANEL_NAMES`] order.
pub fn functional_panel_values(p: &Path) -> Vec<f64> {
    vec![
        p.value_at(0.5),
        sine_coefficient(p, 1),
        sine_coefficient(p, 2),
        positive_occupation(p),
        h_minus1_norm(p, 16).expect("K >= 1"),
    ]
}

/// Parameters of the convergence study. The SPDE route mollifies the drift at
/// matched regularization: index `2^n` at level `n`, so the mollification
/// window equals the cell width.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceParams {
    pub dt: f64,
    /// Run length from each exact equilibrium start (stationarity makes the
    /// exact value immaterial; it only decorrelates the scheme state).
    pub t_run: f64,
    /// Level of the exact reference Gibbs samples.
    pub reference_level: u32,
    pub n_samples: usize,
    pub n_boot: usize,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams { dt: 1e-4, t_run: 0.5, reference_level: 8, n_samples: 1500, n_boot: 400 }
    }
}

/// Distances of one route's functional laws to the reference, per level.
#[derive(Debug, Clone, Serialize)]
pub struct RouteDistances {
    pub route: String,
    /// `distance[level_idx][functional_idx]`
    pub distance: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub levels: Vec<u32>,
    pub functionals: Vec<String>,
    /// What the distances are measured against.
    pub reference: String,
    pub skew: RouteDistances,
    pub spde: RouteDistances,
    /// KS comparison of the two routes at the finest level, per functional.
    pub route_agreement: Vec<crate::spde::FunctionalKs>,
    /// Decrease of the positive-occupation distance from the coarsest to the
    /// finest level on the skew route, with a bootstrap CI for the gap.
    pub pos_occ_gap: f64,
    pub pos_occ_gap_ci: (f64, f64),
    pub monotone_ok: bool,
}

fn panel_columns(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::with_capacity(rows.len()); PANEL_NAMES.len()];
    for row in rows {
        for (c, v) in row.into_iter().enumerate() {
            cols[c].push(v);
        }
    }
    cols
}

/// Stationary functional samples of the interacting skew system at level `n`.
/// The time step is capped by [`crate::skew::resolved_dt_cap`] so the skew
/// corrections stay sharp at fine levels.
fn skew_route_samples(
    d: &JumpDrift,
    n: u32,
    params: &ConvergenceParams,
    tree: &SeedTree,
) -> Result<Vec<Vec<f64>>> {
    let dt = params.dt.min(crate::skew::resolved_dt_cap(n)?);
    let sys = SkewSystem::new(n, d.clone(), dt)?;
    let spec = GibbsSpec::projected(n, d.clone());
    let rows: Vec<Result<Vec<f64>>> = (0..params.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream(&format!("conv-skew-{n}"), i as u64);
            let x0 = sample_gibbs(&spec, &mut rng)?.path;
            let st = sys.simulate(x0.values(), params.t_run, &mut rng)?;
            let p = Path::constant(n, st.x.iter().copied().collect())?;
            Ok(functional_panel_values(&p))
        })
        .collect();
    rows.into_iter().collect()
}

/// Stationary functional samples of the mollified SPDE at mesh `2^-n`,
/// evaluated through the level-`n` projection so both routes feed the same
/// functionals on the same space. Mollification index `2^n`: the smoothing
/// window equals the mesh width, and runs start from the mollified
/// equilibrium itself.
fn spde_route_samples(
    d: &JumpDrift,
    n: u32,
    params: &ConvergenceParams,
    tree: &SeedTree,
) -> Result<Vec<Vec<f64>>> {
    let moll = d.mollify(1 << n)?;
    let scheme = SpdeScheme::new(n, params.dt, Some(moll.clone()))?;
    let gibbs = GibbsSpec::interpolated_mollified(n, moll);
    let rows: Vec<Result<Vec<f64>>> = (0..params.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream(&format!("conv-spde-{n}"), i as u64);
            let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
            let term = simulate_with(&scheme, &u0, params.t_run, true, &mut rng, |_, _, _| {})?;
            let p = Path::bridge_linear(n, term)?.project(n)?;
            Ok(functional_panel_values(&p))
        })
        .collect();
    rows.into_iter().collect()
}

/// KS comparison of the two routes' functional laws at one level.
pub fn route_agreement(
    d: &JumpDrift,
    n: u32,
    params: &ConvergenceParams,
    tree: &SeedTree,
) -> Result<Vec<crate::spde::FunctionalKs>> {
    let sk = panel_columns(skew_route_samples(d, n, params, tree)?);
    let sp = panel_columns(spde_route_samples(d, n, params, tree)?);
    let mut out = Vec::new();
    for (c, name) in PANEL_NAMES.iter().enumerate() {
        let (stat, p) = ks_two_sample(&sk[c], &sp[c])?;
        out.push(crate::spde::FunctionalKs {
            name: (*name).to_string(),
            statistic: stat,
            p_value: p,
        });
    }
    Ok(out)
}

/// Run the full cross-level study for the drift `d` over the given levels.
pub fn convergence_study(
    d: &JumpDrift,
    levels: &[u32],
    params: &ConvergenceParams,
    tree: &SeedTree,
) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::parameter("convergence study needs at least 2 levels".to_string()));
    }
    let mut sorted = levels.to_vec();
    sorted.sort_unstable();

    // reference: exact Gibbs at the finest declared level
    let ref_spec = GibbsSpec::interpolated(params.reference_level, d.clone());
    let ref_rows: Vec<Result<Vec<f64>>> = (0..params.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream("conv-ref", i as u64);
            let p = sample_gibbs(&ref_spec, &mut rng)?.path;
            Ok(functional_panel_values(&p))
        })
        .collect();
    let ref_cols = panel_columns(ref_rows.into_iter().collect::<Result<Vec<_>>>()?);

    let mut skew_dist = Vec::new();
    let mut spde_dist = Vec::new();
    let mut skew_cols_by_level = Vec::new();
    let mut spde_cols_by_level = Vec::new();
    for &n in &sorted {
        let sk = panel_columns(skew_route_samples(d, n, params, tree)?);
        let sp = panel_columns(spde_route_samples(d, n, params, tree)?);
        skew_dist.push(
            (0..PANEL_NAMES.len())
                .map(|c| ks_statistic(&sk[c], &ref_cols[c]))
                .collect::<Vec<f64>>(),
        );
        spde_dist.push(
            (0..PANEL_NAMES.len())
                .map(|c| ks_statistic(&sp[c], &ref_cols[c]))
                .collect::<Vec<f64>>(),
        );
        skew_cols_by_level.push(sk);
        spde_cols_by_level.push(sp);
    }

    // route agreement at the finest level, all functionals
    let last = sorted.len() - 1;
    let mut route_agreement = Vec::new();
    for (c, name) in PANEL_NAMES.iter().enumerate() {
        let (stat, p) =
            ks_two_sample(&skew_cols_by_level[last][c], &spde_cols_by_level[last][c])?;
        route_agreement.push(crate::spde::FunctionalKs {
            name: (*name).to_string(),
            statistic: stat,
            p_value: p,
        });
    }

    // bootstrap the coarse-minus-fine gap of the positive-occupation distance
    let pos = 3; // index of pos-occupation in the panel
    let coarse = &skew_cols_by_level[0][pos];
    let fine = &skew_cols_by_level[last][pos];
    let reference = &ref_cols[pos];
    let gap = ks_statistic(coarse, reference) - ks_statistic(fine, reference);
    let mut rng = tree.stream("conv-boot", 0);
    let mut reps = Vec::with_capacity(params.n_boot);
    let m = params.n_samples;
    for _ in 0..params.n_boot {
        let rc: Vec<f64> = (0..m).map(|_| coarse[rng.random_range(0..coarse.len())]).collect();
        let rf: Vec<f64> = (0..m).map(|_| fine[rng.random_range(0..fine.len())]).collect();
        let rr: Vec<f64> =
            (0..m).map(|_| reference[rng.random_range(0..reference.len())]).collect();
        reps.push(ks_statistic(&rc, &rr) - ks_statistic(&rf, &rr));
    }
    reps.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let lo = reps[(0.025 * params.n_boot as f64) as usize];
    let hi = reps[((0.975 * params.n_boot as f64) as usize).min(params.n_boot - 1)];

    let monotone_ok = gap > 0.0;
    Ok(ConvergenceReport {
        levels: sorted,
        functionals: PANEL_NAMES.iter().map(|s| s.to_string()).collect(),
        reference: format!(
            "exact rejection samples of the level-{} Gibbs law, {} draws",
            params.reference_level, params.n_samples
        ),
        skew: RouteDistances { route: "interacting-skew".to_string(), distance: skew_dist },
        spde: RouteDistances { route: "mollified-spde".to_string(), distance: spde_dist },
        route_agreement,
        pos_occ_gap: gap,
        pos_occ_gap_ci: (lo, hi),
        monotone_ok,
    })
}

/// Norm applied to trajectory increments in the scaling fit.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum IncrementNorm {
    /// `sup |x| +` Hölder-`theta` seminorm.
    Holder { theta: f64 },
    /// Truncated `H^{-1}` norm.
    HMinus1 { k_cut: u32 },
}

impl IncrementNorm {
    fn apply(&self, p: &Path) -> Result<f64> {
        match self {
            IncrementNorm::Holder { theta } => {
                Ok(p.sup_norm() + holder_seminorm(p, *theta)?)
            }
            IncrementNorm::HMinus1 { k_cut } => h_minus1_norm(p, *k_cut),
        }
    }
}

/// Log-log moment-scaling fit over time lags.
#[derive(Debug, Clone, Serialize)]
pub struct HolderFit {
    pub exponent: f64,
    pub ci: (f64, f64),
    /// `(lag, mean p-th moment)` pairs entering the fit.
    pub per_lag: Vec<(f64, f64)>,
    pub p: f64,
}

fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let xb = xs.iter().sum::<f64>() / n;
    let yb = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - xb) * (y - yb);
        den += (x - xb) * (x - xb);
    }
    num / den
}

/// Fit `log E |X_{t+delta} - X_t|_norm^p ~ xi log delta` over the given lags.
///
/// `trajectories` holds snapshots at uniform spacing `snap_dt`; lags must be
/// integer multiples of the spacing and at least 3 lags are required. The CI
/// is a percentile bootstrap over whole trajectories.
pub fn holder_scaling(
    trajectories: &[Vec<Path>],
    norm: IncrementNorm,
    p: f64,
    lags: &[f64],
    snap_dt: f64,
    n_boot: usize,
    rng: &mut impl Rng,
) -> Result<HolderFit> {
    if lags.len() < 3 {
        return Err(Error::parameter("holder_scaling needs at least 3 lags".to_string()));
    }
    if trajectories.is_empty() {
        return Err(Error::parameter("holder_scaling needs trajectories".to_string()));
    }
    let lag_steps: Vec<usize> = lags
        .iter()
        .map(|&l| {
            let s = l / snap_dt;
            let r = s.round();
            if (s - r).abs() > 1e-9 || r < 1.0 {
                Err(Error::parameter(format!("lag {l} is not a multiple of the snapshot spacing")))
            } else {
                Ok(r as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;

    // per-trajectory, per-lag mean of |increment|^p
    let per_traj: Vec<Vec<f64>> = trajectories
        .par_iter()
        .map(|traj| {
            lag_steps
                .iter()
                .map(|&s| {
                    let mut acc = 0.0;
                    let mut cnt = 0usize;
                    for k in 0..traj.len().saturating_sub(s) {
                        let a = &traj[k];
                        let b = &traj[k + s];
                        let mut diff = a.clone();
                        for (v, w) in diff.values_mut().iter_mut().zip(b.values()) {
                            *v -= w;
                        }
                        let nv = norm.apply(&diff).expect("norm on increment");
                        acc += nv.powf(p);
                        cnt += 1;
                    }
                    if cnt == 0 {
                        f64::NAN
                    } else {
                        acc / cnt as f64
                    }
                })
                .collect()
        })
        .collect();

    let nt = per_traj.len();
    let mean_over = |pick: &[usize]| -> Result<Vec<f64>> {
        let mut m = vec![0.0; lag_steps.len()];
        for &t in pick {
            for (j, v) in per_traj[t].iter().enumerate() {
                m[j] += v;
            }
        }
        for v in m.iter_mut() {
            *v /= pick.len() as f64;
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::parameter(
                    "degenerate increment data in scaling fit".to_string(),
                ));
            }
        }
        Ok(m)
    };

    let all: Vec<usize> = (0..nt).collect();
    let moments = mean_over(&all)?;
    let log_lags: Vec<f64> = lags.iter().map(|l| l.ln()).collect();
    let log_m: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
    let exponent = ols_slope(&log_lags, &log_m);

    let mut reps = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let pick: Vec<usize> = (0..nt).map(|_| rng.random_range(0..nt)).collect();
        if let Ok(m) = mean_over(&pick) {
            let lm: Vec<f64> = m.iter().map(|v| v.ln()).collect();
            reps.push(ols_slope(&log_lags, &lm));
        }
    }
    if reps.is_empty() {
        return Err(Error::parameter("bootstrap failed on degenerate data".to_string()));
    }
    reps.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let lo = reps[(0.025 * reps.len() as f64) as usize];
    let hi = reps[((0.975 * reps.len() as f64) as usize).min(reps.len() - 1)];

    Ok(HolderFit {
        exponent,
        ci: (lo, hi),
        per_lag: lags.iter().copied().zip(moments).collect(),
        p,
    })
}

/// Search for `(eta, zeta)` witnessing that `(theta, p)` is admissible for
/// the a-priori Hölder estimate: the constraints are
/// `zeta > 1/(1 + 2 eta / 3)`, `p > 2/(1-zeta)`,
/// `p > 1/(eta - (3/2)(1-zeta)/zeta)`, and with
/// `alpha = zeta eta - (1 - zeta)`, `1/d = zeta/p + (1-zeta)/2` the Sobolev
/// window `alpha d > 1` and `theta < alpha - 1/d`.
pub fn admissible_witness(theta: f64, p: f64) -> Option<(f64, f64)> {
    let mut eta = 0.30;
    while eta < 0.50 {
        let mut zeta = 0.70;
        while zeta < 0.95 {
            let c1 = zeta > 1.0 / (1.0 + 2.0 * eta / 3.0);
            let c2 = p > 2.0 / (1.0 - zeta);
            let denom = eta - 1.5 * (1.0 - zeta) / zeta;
            let c3 = denom > 0.0 && p > 1.0 / denom;
            if c1 && c2 && c3 {
                let alpha = zeta * eta - (1.0 - zeta);
                let inv_d = zeta / p + (1.0 - zeta) / 2.0;
                if alpha > inv_d && theta < alpha - inv_d {
                    return Some((eta, zeta));
                }
            }
            zeta += 0.005;
        }
        eta += 0.005;
    }
    None
}

/// Simulate stationary zero-drift trajectories and store panel snapshots for
/// the scaling fits.
pub fn stationary_heat_snapshots(
    mesh_level: u32,
    dt: f64,
    snap_every: usize,
    t_final: f64,
    n_traj: usize,
    tree: &SeedTree,
    label: &str,
) -> Result<Vec<Vec<Path>>> {
    let scheme = SpdeScheme::new(mesh_level, dt, None)?;
    let gibbs = GibbsSpec::interpolated(mesh_level, JumpDrift::zero());
    (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream(label, i as u64);
            let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
            let mut snaps = vec![u0.clone()];
            simulate_with(&scheme, &u0, t_final, true, &mut rng, |k, _, u| {
                if k % snap_every == 0 {
                    snaps.push(Path::bridge_linear(mesh_level, u.to_vec()).expect("slice"));
                }
            })?;
            Ok(snaps)
        })
        .collect()
}
