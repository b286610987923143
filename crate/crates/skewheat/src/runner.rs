//! Experiment dispatch: one subcommand per experiment, JSON/CSV reports,
//! nonzero exit when a pre-registered check fails.
//!
//! Every handler derives all randomness from the single master seed through a
//! [`SeedTree`]; reports contain no timestamps (those go to a sidecar), so a
//! given `(config, seed)` pair reproduces report bytes exactly.

use crate::config::{ExperimentConfig, TargetKind};
use crate::error::{Error, Result};
use crate::harness::{self, ConvergenceParams, IncrementNorm};
use crate::io;
use crate::localtime::{ibp_residual_continuum, ibp_residual_discrete, Cylinder};
use crate::measures::{covariance_sigma_n, estimate_z, sample_gibbs, GibbsSpec};
use crate::path::{Path, TestFunction};
use crate::rng::SeedTree;
use crate::skew::SkewSystem;
use crate::spde::{simulate_regularized, simulate_with, stationarity_check, weak_residual,
                  SpdeScheme};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    SampleGibbs,
    Spectral,
    Ibp,
    SkewSim,
    SpdeSim,
    Stationarity,
    Convergence,
    Holder,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::SampleGibbs => "sample-gibbs",
            Subcommand::Spectral => "spectral",
            Subcommand::Ibp => "ibp",
            Subcommand::SkewSim => "skew-sim",
            Subcommand::SpdeSim => "spde-sim",
            Subcommand::Stationarity => "stationarity",
            Subcommand::Convergence => "convergence",
            Subcommand::Holder => "holder",
        }
    }
}

/// One pre-registered check with its verdict.
#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckLine { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub passed: bool,
    pub report_path: PathBuf,
    pub checks: Vec<CheckLine>,
}

fn write_report<T: Serialize>(out_dir: &FsPath, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, io::to_json_bytes(value)?)?;
    Ok(path)
}

fn write_sidecar(out_dir: &FsPath, sub: Subcommand, seed: u64) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::write(
        out_dir.join("run_info.txt"),
        format!("subcommand: {}\nseed: {seed}\nunix_time: {stamp}\n", sub.name()),
    )?;
    Ok(())
}

pub fn run(
    sub: Subcommand,
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &FsPath,
) -> Result<RunOutcome> {
    write_sidecar(out_dir, sub, seed)?;
    let tree = SeedTree::new(seed);
    match sub {
        Subcommand::Spectral => run_spectral(cfg, out_dir),
        Subcommand::SampleGibbs => run_sample_gibbs(cfg, &tree, out_dir),
        Subcommand::Ibp => run_ibp(cfg, &tree, out_dir),
        Subcommand::SkewSim => run_skew_sim(cfg, &tree, out_dir),
        Subcommand::SpdeSim => run_spde_sim(cfg, &tree, out_dir),
        Subcommand::Stationarity => run_stationarity(cfg, &tree, out_dir),
        Subcommand::Convergence => run_convergence(cfg, &tree, out_dir),
        Subcommand::Holder => run_holder(cfg, &tree, out_dir),
    }
}

fn finish(
    out_dir: &FsPath,
    name: &str,
    body: impl Serialize,
    checks: Vec<CheckLine>,
) -> Result<RunOutcome> {
    #[derive(Serialize)]
    struct Report<T: Serialize> {
        checks: Vec<CheckLine>,
        data: T,
    }
    let passed = checks.iter().all(|c| c.passed);
    let report_path = write_report(out_dir, name, &Report { checks: checks.clone(), data: body })?;
    Ok(RunOutcome { passed, report_path, checks })
}

// ---------------------------------------------------------------------------
// spectral

#[derive(Serialize)]
struct SpectralData {
    weight_cap: u64,
    counts_csv: String,
    hs: Vec<crate::spectral::HsTrace>,
    divergence: crate::spectral::DivergenceDiagnostic,
}

fn run_spectral(cfg: &ExperimentConfig, out_dir: &FsPath) -> Result<RunOutcome> {
    let counts = crate::spectral::partition_counts(cfg.weight_cap)?;
    fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("partition_counts.csv");
    {
        let mut w = String::from("n,c_n\n");
        for (n, c) in counts.iter().enumerate() {
            w.push_str(&format!("{n},{c}\n"));
        }
        fs::write(&csv_path, w)?;
    }

    let mut checks = vec![CheckLine::new(
        "partition-identity",
        counts[0] == 1,
        format!("dual-route counts agree up to N={}, C_0 = {}", cfg.weight_cap, counts[0]),
    )];

    let mut hs = Vec::new();
    for &t in &cfg.times {
        let h = crate::spectral::hs_trace(t, cfg.product_cutoff, 400.max(cfg.weight_cap))?;
        checks.push(CheckLine::new(
            format!("hs-trace-t-{t}"),
            h.relative_gap() <= 1e-6,
            format!("sum {:.8} vs product {:.8}, rel gap {:.2e}", h.sum_side, h.product_side, h.relative_gap()),
        ));
        hs.push(h);
    }

    let div = crate::spectral::divergence_diagnostic(&[100, 200, 400])?;
    let g1 = div.partial_sums[1] - div.partial_sums[0];
    let g2 = div.partial_sums[2] - div.partial_sums[1];
    checks.push(CheckLine::new(
        "divergence-no-geometric-decay",
        div.partial_sums.windows(2).all(|w| w[1] > w[0]) && g2 >= 0.9 * g1,
        format!("partial sums {:?}, gap ratio {:.3}", div.partial_sums, g2 / g1),
    ));

    finish(
        out_dir,
        "report.json",
        SpectralData {
            weight_cap: cfg.weight_cap,
            counts_csv: csv_path.display().to_string(),
            hs,
            divergence: div,
        },
        checks,
    )
}

// ---------------------------------------------------------------------------
// sample-gibbs

fn gibbs_spec_of(cfg: &ExperimentConfig) -> GibbsSpec {
    match cfg.target {
        TargetKind::Projected => GibbsSpec::projected(cfg.level, cfg.drift.clone()),
        TargetKind::Interpolated => GibbsSpec::interpolated(cfg.mesh, cfg.drift.clone()),
    }
}

#[derive(Serialize)]
struct SampleGibbsData {
    z: crate::measures::ZEstimate,
    acceptance_rate: f64,
    weight_bound: f64,
    frames_written: usize,
}

fn run_sample_gibbs(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let spec = gibbs_spec_of(cfg);
    let b = spec.weight_bound();

    let mut zrng = tree.stream("z-estimate", 0);
    let z = estimate_z(&spec, cfg.samples, &mut zrng)?;
    write_report(out_dir, "z.json", &z)?;

    let draws: Vec<Result<(Path, u32, f64)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream("gibbs", i as u64);
            let d = sample_gibbs(&spec, &mut rng)?;
            let f = spec.potential_of(&d.path)?;
            Ok((d.path, d.attempts, f))
        })
        .collect();

    let frames_dir = out_dir.join("frames");
    fs::create_dir_all(&frames_dir)?;
    let mut attempts = 0u64;
    let mut bound_ok = true;
    let mut frames_written = 0usize;
    for (i, d) in draws.into_iter().enumerate() {
        let (path, att, f) = d?;
        attempts += u64::from(att);
        if f.abs() > b + 1e-12 {
            bound_ok = false;
        }
        if i < 8 {
            fs::write(frames_dir.join(format!("sample_{i}.bin")), io::encode_path_frame(&path))?;
            if i == 0 {
                let mut csv = Vec::new();
                io::write_path_csv(&path, &mut csv)?;
                fs::write(out_dir.join("sample_0.csv"), csv)?;
                if path.kind() == crate::path::PathKind::Linear {
                    // occupation-density surface of the first sample
                    let lo = path.values().iter().cloned().fold(f64::MAX, f64::min) - 0.02;
                    let hi = path.values().iter().cloned().fold(f64::MIN, f64::max) + 0.02;
                    let levels: Vec<f64> =
                        (0..256).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / 256.0).collect();
                    let thetas: Vec<f64> = (0..=16).map(|k| k as f64 / 16.0).collect();
                    let field = crate::localtime::local_time_field(&path, &levels, &thetas)?;
                    let mut csv = Vec::new();
                    io::write_local_time_csv(&field, &mut csv)?;
                    fs::write(out_dir.join("local_time_0.csv"), csv)?;
                }
            }
            frames_written += 1;
        }
    }
    let rate = cfg.samples as f64 / attempts as f64;
    let want_rate = z.mean * (-b).exp();
    let rate_se = (rate * (1.0 - rate) / attempts as f64).sqrt() + z.stderr * (-b).exp();

    let checks = vec![
        CheckLine::new(
            "weight-bound",
            bound_ok,
            format!("|F| <= B = {b:.4} on every accepted sample"),
        ),
        CheckLine::new(
            "acceptance-rate-matches-z",
            (rate - want_rate).abs() <= 4.0 * rate_se + 1e-3,
            format!("rate {rate:.4} vs Z e^-B {want_rate:.4}"),
        ),
    ];
    finish(
        out_dir,
        "report.json",
        SampleGibbsData { z, acceptance_rate: rate, weight_bound: b, frames_written },
        checks,
    )
}

// ---------------------------------------------------------------------------
// ibp

#[derive(Serialize)]
struct IbpCase {
    h: String,
    phi: String,
    estimate: crate::localtime::IbpEstimate,
    residual_in_se: f64,
}

#[derive(Serialize)]
struct IbpData {
    level: u32,
    continuum: Vec<IbpCase>,
    discrete: crate::localtime::IbpDiscreteReport,
}

fn run_ibp(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let level = cfg.level.max(4);
    let mut cases = Vec::new();
    let mut checks = Vec::new();
    for k in [1u32, 2] {
        let h = TestFunction::sine(level, k);
        for phi in [Cylinder::One, Cylinder::Linear, Cylinder::Cos] {
            let est = ibp_residual_continuum(
                &cfg.drift,
                &h,
                phi,
                level,
                cfg.samples,
                tree,
                &format!("ibp-e{k}-{}", phi.name()),
            )?;
            let r = est.residual_in_se();
            checks.push(CheckLine::new(
                format!("ibp-e{k}-{}", phi.name()),
                r <= 3.0,
                format!("lhs {:.5} rhs {:.5} residual {:.2} se", est.lhs, est.rhs, r),
            ));
            if phi == Cylinder::Linear && cfg.drift.is_zero() {
                let band = 3.0 * est.se_rhs.max(1e-6);
                checks.push(CheckLine::new(
                    format!("ibp-e{k}-linear-hits-norm"),
                    (est.lhs - 1.0).abs() <= band && (est.rhs - 1.0).abs() <= band,
                    format!("lhs {:.6}, rhs {:.6} vs |h|^2 = 1", est.lhs, est.rhs),
                ));
            }
            cases.push(IbpCase {
                h: format!("e{k}"),
                phi: phi.name().to_string(),
                estimate: est,
                residual_in_se: r,
            });
        }
    }

    let n = cfg.level.min(4);
    let cov = covariance_sigma_n(n)?;
    let ones = vec![1.0; cov.cells()];
    let disc = ibp_residual_discrete(
        &cfg.drift,
        &cov,
        &ones,
        Cylinder::Cos,
        cfg.samples,
        &[0.05, 0.02, 0.01],
        2.0,
        tree,
        "ibp-discrete",
    )?;
    checks.push(CheckLine::new(
        "ibp-discrete",
        disc.residual_in_se() <= 3.0,
        format!("lhs {:.5} rhs {:.5} residual {:.2} se", disc.lhs, disc.rhs, disc.residual_in_se()),
    ));

    finish(out_dir, "report.json", IbpData { level, continuum: cases, discrete: disc }, checks)
}

// ---------------------------------------------------------------------------
// skew-sim

#[derive(Serialize)]
struct SkewSimData {
    level: u32,
    dt: f64,
    t_final: f64,
    samples: usize,
    /// per seed, per coordinate KS p-values against fresh equilibrium draws
    invariance_p: Vec<Vec<f64>>,
    seeds_passed: usize,
}

fn run_skew_sim(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let n = cfg.level;
    let sys = SkewSystem::new(n, cfg.drift.clone(), cfg.dt)?;
    let spec = GibbsSpec::projected(n, cfg.drift.clone());
    let cells = sys.cells();

    let mut invariance_p = Vec::new();
    let mut seeds_passed = 0usize;
    for s in 0..cfg.seeds {
        let sub = tree.child("skew-invariance", u64::from(s));
        let evolved: Vec<Result<Vec<f64>>> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sub.stream("evolve", i as u64);
                let x0 = sample_gibbs(&spec, &mut rng)?.path;
                let st = sys.simulate(x0.values(), cfg.t_final, &mut rng)?;
                Ok(st.x.iter().copied().collect())
            })
            .collect();
        let fresh: Vec<Result<Vec<f64>>> = (0..cfg.samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = sub.stream("fresh", i as u64);
                Ok(sample_gibbs(&spec, &mut rng)?.path.values().to_vec())
            })
            .collect();
        let mut ev_cols = vec![Vec::with_capacity(cfg.samples); cells];
        let mut fr_cols = vec![Vec::with_capacity(cfg.samples); cells];
        for row in evolved {
            for (c, v) in row?.into_iter().enumerate() {
                ev_cols[c].push(v);
            }
        }
        for row in fresh {
            for (c, v) in row?.into_iter().enumerate() {
                fr_cols[c].push(v);
            }
        }
        let ps: Vec<f64> = (0..cells)
            .map(|c| harness::ks_two_sample(&ev_cols[c], &fr_cols[c]).map(|(_, p)| p))
            .collect::<Result<_>>()?;
        if ps.iter().all(|&p| p > cfg.p_threshold) {
            seeds_passed += 1;
        }
        invariance_p.push(ps);
    }

    // one example trajectory streamed as binary frames
    let frames_dir = out_dir.join("frames");
    fs::create_dir_all(&frames_dir)?;
    let mut rng = tree.stream("example-trajectory", 0);
    let x0 = sample_gibbs(&spec, &mut rng)?.path;
    let mut written = 0usize;
    sys.simulate_with(x0.values(), cfg.t_final.min(0.05), &mut rng, |k, st| {
        if k % cfg.snapshot_every == 0 && written < 32 {
            let p = Path::constant(n, st.x.iter().copied().collect()).expect("state path");
            let _ = fs::write(
                frames_dir.join(format!("state_{written:04}.bin")),
                io::encode_path_frame(&p),
            );
            written += 1;
        }
    })?;

    let majority = seeds_passed * 2 > cfg.seeds as usize;
    let checks = vec![CheckLine::new(
        "equilibrium-invariance",
        majority,
        format!("{seeds_passed}/{} seeds with all {cells} coordinate p-values > {}", cfg.seeds, cfg.p_threshold),
    )];
    finish(
        out_dir,
        "report.json",
        SkewSimData {
            level: n,
            dt: cfg.dt,
            t_final: cfg.t_final,
            samples: cfg.samples,
            invariance_p,
            seeds_passed,
        },
        checks,
    )
}

// ---------------------------------------------------------------------------
// spde-sim

#[derive(Serialize)]
struct SpdeSimData {
    mesh: u32,
    dt: f64,
    t_final: f64,
    eps_start: f64,
    residual_mean: f64,
    residual_mean_se: f64,
    residual_var: f64,
    variance_target: f64,
    skipped_slices: usize,
}

fn run_spde_sim(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let drift_zero = cfg.drift.is_zero();
    let moll = if drift_zero { None } else { Some(cfg.drift.mollify(cfg.mollify_index)?) };
    let scheme = SpdeScheme::new(cfg.mesh, cfg.dt, moll.clone())?;
    let gibbs = if drift_zero {
        GibbsSpec::interpolated(cfg.mesh, cfg.drift.clone())
    } else {
        GibbsSpec::interpolated_mollified(cfg.mesh, cfg.drift.mollify(cfg.mollify_index)?)
    };
    let h = TestFunction::sine(cfg.mesh, 1);
    let singular = if drift_zero { None } else { Some(&cfg.drift) };

    let rows: Vec<Result<(f64, usize, f64)>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream("spde-run", i as u64);
            let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
            let traj = simulate_regularized(&scheme, &u0, cfg.t_final, true, 1, &mut rng)?;
            let res = weak_residual(&traj, &h, singular, cfg.eps_start)?;
            Ok((res.terminal(), res.skipped_slices, res.h_norm_sq))
        })
        .collect();
    let mut vals = Vec::with_capacity(cfg.samples);
    let mut skipped = 0usize;
    let mut h_norm_sq = 0.0;
    for r in rows {
        let (v, s, hn) = r?;
        vals.push(v);
        skipped += s;
        h_norm_sq = hn;
    }
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    let target = h_norm_sq * (cfg.t_final - cfg.eps_start);
    let mean_se = (var / m).sqrt();

    // one example space-time slab
    let mut rng = tree.stream("spde-slab", 0);
    let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
    let traj =
        simulate_regularized(&scheme, &u0, cfg.t_final.min(0.05), true, cfg.snapshot_every, &mut rng)?;
    let mut slab = String::from("t,theta,u\n");
    for (ti, t) in traj.times.iter().enumerate() {
        for (xi, u) in traj.slices[ti].iter().enumerate() {
            slab.push_str(&format!("{t},{},{u}\n", xi as f64 * scheme.grid().width()));
        }
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("slab.csv"), slab)?;

    let mut checks = vec![CheckLine::new(
        "martingale-mean-zero",
        mean.abs() <= 3.0 * mean_se,
        format!("mean {mean:.5} ({:.2} se)", mean.abs() / mean_se),
    )];
    if drift_zero {
        checks.push(CheckLine::new(
            "martingale-variance",
            (var - target).abs() <= 0.05 * target,
            format!("var {var:.5} vs |h|^2 (t - eps) = {target:.5}"),
        ));
    } else {
        checks.push(CheckLine::new(
            "skipped-slices",
            (skipped as f64) < 0.01 * m * (cfg.t_final - cfg.eps_start) / cfg.dt,
            format!("{skipped} degenerate slices skipped"),
        ));
    }
    finish(
        out_dir,
        "report.json",
        SpdeSimData {
            mesh: cfg.mesh,
            dt: cfg.dt,
            t_final: cfg.t_final,
            eps_start: cfg.eps_start,
            residual_mean: mean,
            residual_mean_se: mean_se,
            residual_var: var,
            variance_target: target,
            skipped_slices: skipped,
        },
        checks,
    )
}

// ---------------------------------------------------------------------------
// stationarity

#[derive(Serialize)]
struct StationarityData {
    mesh: u32,
    t_final: f64,
    panel_at_t: Vec<crate::spde::FunctionalKs>,
    panel_time_shift: Vec<crate::spde::FunctionalKs>,
}

fn run_stationarity(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let drift_zero = cfg.drift.is_zero();
    let moll = if drift_zero { None } else { Some(cfg.drift.mollify(cfg.mollify_index)?) };
    let scheme = SpdeScheme::new(cfg.mesh, cfg.dt, moll)?;
    let gibbs = if drift_zero {
        GibbsSpec::interpolated(cfg.mesh, cfg.drift.clone())
    } else {
        GibbsSpec::interpolated_mollified(cfg.mesh, cfg.drift.mollify(cfg.mollify_index)?)
    };

    let panel = stationarity_check(&scheme, &gibbs, cfg.t_final, cfg.samples, tree, "stat-t")?;

    // time-shift invariance: laws at T and 2T indistinguishable
    let t2 = 2.0 * cfg.t_final;
    let at_t: Vec<Result<Vec<f64>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream("stat-shift-a", i as u64);
            let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
            let term = simulate_with(&scheme, &u0, cfg.t_final, true, &mut rng, |_, _, _| {})?;
            Ok(harness::functional_panel_values(&Path::bridge_linear(cfg.mesh, term)?))
        })
        .collect();
    let at_2t: Vec<Result<Vec<f64>>> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree.stream("stat-shift-b", i as u64);
            let u0 = sample_gibbs(&gibbs, &mut rng)?.path;
            let term = simulate_with(&scheme, &u0, t2, true, &mut rng, |_, _, _| {})?;
            Ok(harness::functional_panel_values(&Path::bridge_linear(cfg.mesh, term)?))
        })
        .collect();
    let mut cols_a = vec![Vec::with_capacity(cfg.samples); harness::PANEL_NAMES.len()];
    let mut cols_b = vec![Vec::with_capacity(cfg.samples); harness::PANEL_NAMES.len()];
    for r in at_t {
        for (c, v) in r?.into_iter().enumerate() {
            cols_a[c].push(v);
        }
    }
    for r in at_2t {
        for (c, v) in r?.into_iter().enumerate() {
            cols_b[c].push(v);
        }
    }
    let mut shift = Vec::new();
    for (c, name) in harness::PANEL_NAMES.iter().enumerate() {
        let (stat, p) = harness::ks_two_sample(&cols_a[c], &cols_b[c])?;
        shift.push(crate::spde::FunctionalKs {
            name: (*name).to_string(),
            statistic: stat,
            p_value: p,
        });
    }

    let mut checks = Vec::new();
    for f in &panel {
        checks.push(CheckLine::new(
            format!("stationary-{}", f.name),
            f.p_value > cfg.p_threshold,
            format!("ks {:.4}, p {:.4}", f.statistic, f.p_value),
        ));
    }
    for f in &shift {
        checks.push(CheckLine::new(
            format!("time-shift-{}", f.name),
            f.p_value > cfg.p_threshold,
            format!("ks {:.4}, p {:.4}", f.statistic, f.p_value),
        ));
    }
    finish(
        out_dir,
        "report.json",
        StationarityData {
            mesh: cfg.mesh,
            t_final: cfg.t_final,
            panel_at_t: panel,
            panel_time_shift: shift,
        },
        checks,
    )
}

// ---------------------------------------------------------------------------
// convergence

fn run_convergence(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let params = ConvergenceParams {
        dt: cfg.dt,
        t_run: cfg.t_final,
        reference_level: cfg.reference_level,
        n_samples: cfg.samples,
        n_boot: 400,
    };
    let report = harness::convergence_study(&cfg.drift, &cfg.levels, &params, tree)?;

    // flat CSV for plotting
    let mut csv = String::from("route,level,functional,ks_distance\n");
    for (li, n) in report.levels.iter().enumerate() {
        for (fi, f) in report.functionals.iter().enumerate() {
            csv.push_str(&format!("skew,{n},{f},{}\n", report.skew.distance[li][fi]));
            csv.push_str(&format!("spde,{n},{f},{}\n", report.spde.distance[li][fi]));
        }
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("distances.csv"), csv)?;

    // route agreement at the finest level, majority over the configured seeds
    let finest = *report.levels.last().unwrap();
    let mut agree_passed = 0usize;
    let mut route_ps = Vec::new();
    for s in 0..cfg.seeds {
        let t2 = tree.child("route-agreement", u64::from(s));
        let agree = harness::route_agreement(&cfg.drift, finest, &params, &t2)?;
        let f = agree
            .iter()
            .find(|f| f.name == "pos-occupation")
            .expect("panel includes pos-occupation");
        if f.p_value > cfg.p_threshold {
            agree_passed += 1;
        }
        route_ps.push(f.p_value);
    }

    let checks = vec![
        CheckLine::new(
            "distance-decreases",
            report.monotone_ok && report.pos_occ_gap_ci.0 > 0.0,
            format!(
                "pos-occupation gap {:.4}, bootstrap CI ({:.4}, {:.4})",
                report.pos_occ_gap, report.pos_occ_gap_ci.0, report.pos_occ_gap_ci.1
            ),
        ),
        CheckLine::new(
            "routes-agree",
            agree_passed * 2 > cfg.seeds as usize,
            format!("{agree_passed}/{} seeds with pos-occupation p > {}: {route_ps:.3?}", cfg.seeds, cfg.p_threshold),
        ),
    ];
    finish(out_dir, "report.json", report, checks)
}

// ---------------------------------------------------------------------------
// holder

#[derive(Serialize)]
struct HolderData {
    theta: f64,
    p: f64,
    witness: (f64, f64),
    holder_fit: harness::HolderFit,
    hminus1_fit: harness::HolderFit,
    hminus1_p: f64,
}

fn run_holder(cfg: &ExperimentConfig, tree: &SeedTree, out_dir: &FsPath) -> Result<RunOutcome> {
    let witness = harness::admissible_witness(cfg.theta, cfg.p_exp).ok_or_else(|| {
        Error::parameter(format!(
            "(theta, p) = ({}, {}) not admissible for the a-priori estimate",
            cfg.theta, cfg.p_exp
        ))
    })?;
    let snap_dt = cfg.dt * cfg.snapshot_every as f64;
    let snaps = harness::stationary_heat_snapshots(
        cfg.mesh,
        cfg.dt,
        cfg.snapshot_every,
        cfg.t_final,
        cfg.trajectories,
        tree,
        "holder-traj",
    )?;
    let mut rng = tree.stream("holder-boot", 0);
    let fit = harness::holder_scaling(
        &snaps,
        IncrementNorm::Holder { theta: cfg.theta },
        cfg.p_exp,
        &cfg.lags,
        snap_dt,
        300,
        &mut rng,
    )?;
    // the H^{-1} increment fit needs lags short enough that no mode has
    // equilibrated, else the local slope bends below p/2; stride-1 snapshots
    // at single-step lags
    let snaps_fine = harness::stationary_heat_snapshots(
        cfg.mesh,
        cfg.dt,
        1,
        cfg.t_final.min(0.5),
        cfg.trajectories,
        tree,
        "holder-traj-fine",
    )?;
    let fine_lags: Vec<f64> = (0..5).map(|k| cfg.dt * (1u32 << k) as f64).collect();
    let hp = 4.0;
    let hfit = harness::holder_scaling(
        &snaps_fine,
        IncrementNorm::HMinus1 { k_cut: 16 },
        hp,
        &fine_lags,
        cfg.dt,
        300,
        &mut rng,
    )?;
    let halfwidth = 0.5 * (hfit.ci.1 - hfit.ci.0);

    let checks = vec![
        CheckLine::new(
            "holder-exponent-above-one",
            fit.ci.0 > 1.0,
            format!("xi {:.3}, 95% CI ({:.3}, {:.3})", fit.exponent, fit.ci.0, fit.ci.1),
        ),
        CheckLine::new(
            "hminus1-slope-p-over-2",
            hfit.exponent >= hp / 2.0 - halfwidth,
            format!("slope {:.3} vs p/2 = {:.1} (CI halfwidth {:.3})", hfit.exponent, hp / 2.0, halfwidth),
        ),
    ];
    finish(
        out_dir,
        "report.json",
        HolderData {
            theta: cfg.theta,
            p: cfg.p_exp,
            witness,
            holder_fit: fit,
            hminus1_fit: hfit,
            hminus1_p: hp,
        },
        checks,
    )
}
