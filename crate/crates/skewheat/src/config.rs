//! Experiment configuration: a small TOML schema with strict validation.
//!
//! ```toml
//! [drift]
//! f0 = "poly:[0.0, 1.0]"     # "zero" | "sin" | "sin:<amp>" | "poly:[c0,c1,...]"
//! jumps = [[0.0, 1.0]]       # [y_j, alpha_j] pairs, distinct y_j
//!
//! [run]
//! level = 2
//! mesh = 6
//! dt = 1e-4
//! t_final = 1.0
//! samples = 2000
//! ...
//! ```
//!
//! Unknown keys are rejected; the master seed never lives in the file (it is
//! a required CLI argument, so no run can silently default to wall-clock
//! randomness).

use crate::drift::{Jump, JumpDrift, SmoothPart};
use crate::error::{Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    drift: Option<DriftSection>,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftSection {
    f0: Option<String>,
    jumps: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RunSection {
    target: Option<String>,
    level: Option<u32>,
    mesh: Option<u32>,
    dt: Option<f64>,
    t_final: Option<f64>,
    samples: Option<usize>,
    levels: Option<Vec<u32>>,
    seeds: Option<u32>,
    eps_start: Option<f64>,
    theta: Option<f64>,
    p_exp: Option<f64>,
    lags: Option<Vec<f64>>,
    weight_cap: Option<u64>,
    product_cutoff: Option<u32>,
    times: Option<Vec<f64>>,
    p_threshold: Option<f64>,
    mollify_index: Option<u32>,
    reference_level: Option<u32>,
    snapshot_every: Option<usize>,
    trajectories: Option<usize>,
}

/// Which Gaussian reference the sampling subcommands target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Projected measure at `level`.
    Projected,
    /// Continuum measure realized at `mesh`.
    Interpolated,
}

/// Fully validated experiment parameters with defaults filled in.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub drift: JumpDrift,
    pub target: TargetKind,
    pub level: u32,
    pub mesh: u32,
    pub dt: f64,
    pub t_final: f64,
    pub samples: usize,
    pub levels: Vec<u32>,
    pub seeds: u32,
    pub eps_start: f64,
    pub theta: f64,
    pub p_exp: f64,
    pub lags: Vec<f64>,
    pub weight_cap: u64,
    pub product_cutoff: u32,
    pub times: Vec<f64>,
    pub p_threshold: f64,
    pub mollify_index: u32,
    pub reference_level: u32,
    pub snapshot_every: usize,
    pub trajectories: usize,
}

/// Parse the smooth-part spec string: `zero`, `sin`, `sin:<amp>`, or
/// `poly:[c0, c1, ...]`.
pub fn parse_f0_spec(spec: &str) -> Result<SmoothPart> {
    let s = spec.trim();
    if s.eq_ignore_ascii_case("zero") {
        return Ok(SmoothPart::Zero);
    }
    if s.eq_ignore_ascii_case("sin") {
        return Ok(SmoothPart::Sin { amp: 1.0 });
    }
    if let Some(rest) = s.strip_prefix("sin:") {
        let amp: f64 = rest
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad sin amplitude {rest:?}")))?;
        if !amp.is_finite() {
            return Err(Error::config("sin amplitude must be finite"));
        }
        return Ok(SmoothPart::Sin { amp });
    }
    if let Some(rest) = s.strip_prefix("poly:") {
        let rest = rest.trim();
        let inner = rest
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::config(format!("poly spec needs [c0,c1,...], got {rest:?}")))?;
        let mut coeffs = Vec::new();
        for tok in inner.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let c: f64 = tok
                .parse()
                .map_err(|_| Error::config(format!("bad polynomial coefficient {tok:?}")))?;
            if !c.is_finite() {
                return Err(Error::config("polynomial coefficients must be finite"));
            }
            coeffs.push(c);
        }
        if coeffs.is_empty() {
            return Err(Error::config("empty polynomial coefficient list"));
        }
        return Ok(SmoothPart::poly(coeffs));
    }
    Err(Error::config(format!("unknown f0 spec {s:?} (use zero | sin | sin:<amp> | poly:[..])")))
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

/// Parse and validate config text.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;

    let drift = match file.drift {
        None => JumpDrift::zero(),
        Some(d) => {
            let smooth = match d.f0 {
                None => SmoothPart::Zero,
                Some(s) => parse_f0_spec(&s)?,
            };
            let jumps = d
                .jumps
                .unwrap_or_default()
                .into_iter()
                .map(|[y, a]| Jump { at: y, size: a })
                .collect();
            JumpDrift::new(smooth, jumps).map_err(|e| Error::config(e.to_string()))?
        }
    };

    let r = file.run;
    let target = match r.target.as_deref() {
        None | Some("interpolated") => TargetKind::Interpolated,
        Some("projected") => TargetKind::Projected,
        Some(other) => {
            return Err(Error::config(format!(
                "unknown target {other:?} (use projected | interpolated)"
            )))
        }
    };
    let cfg = ExperimentConfig {
        drift,
        target,
        level: r.level.unwrap_or(2),
        mesh: r.mesh.unwrap_or(6),
        dt: positive("dt", r.dt.unwrap_or(1e-4))?,
        t_final: positive("t_final", r.t_final.unwrap_or(1.0))?,
        samples: r.samples.unwrap_or(2000),
        levels: r.levels.unwrap_or_else(|| vec![2, 4, 6]),
        seeds: r.seeds.unwrap_or(3).max(1),
        eps_start: positive("eps_start", r.eps_start.unwrap_or(0.05))?,
        theta: positive("theta", r.theta.unwrap_or(0.1))?,
        p_exp: positive("p_exp", r.p_exp.unwrap_or(16.0))?,
        lags: r.lags.unwrap_or_else(|| {
            vec![1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0]
        }),
        weight_cap: r.weight_cap.unwrap_or(60),
        product_cutoff: r.product_cutoff.unwrap_or(8).max(1),
        times: r.times.unwrap_or_else(|| vec![0.05, 0.1, 0.5]),
        p_threshold: r.p_threshold.unwrap_or(0.01),
        mollify_index: r.mollify_index.unwrap_or(8).max(1),
        reference_level: r.reference_level.unwrap_or(8),
        snapshot_every: r.snapshot_every.unwrap_or(40).max(1),
        trajectories: r.trajectories.unwrap_or(16).max(2),
    };

    if cfg.samples < 2 {
        return Err(Error::config("samples must be at least 2"));
    }
    if !(0.0 < cfg.p_threshold && cfg.p_threshold < 1.0) {
        return Err(Error::config("p_threshold must lie in (0, 1)"));
    }
    for &t in &cfg.times {
        positive("times entry", t)?;
    }
    for &l in &cfg.lags {
        positive("lags entry", l)?;
    }
    if cfg.level > 12 || cfg.mesh > 12 || cfg.reference_level > 14 {
        return Err(Error::config("levels above 12 are not supported by the desk-scale tooling"));
    }
    Ok(cfg)
}
