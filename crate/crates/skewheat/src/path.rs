//! Dyadic grids, paths, the averaging projector and the norms used throughout.
//!
//! Two path representations coexist and are never converted implicitly:
//! piecewise-constant paths are vectors of the projected system (one value per
//! dyadic cell), piecewise-linear paths interpolate bridge/SPDE samples at the
//! grid nodes. `project` maps either kind to the piecewise-constant space at a
//! coarser level by exact cell averaging.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Dyadic refinement of `[0,1)` into `2^level` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    level: u32,
}

impl Grid {
    pub fn new(level: u32) -> Self {
        Grid { level }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of cells, `2^level`.
    pub fn cells(&self) -> usize {
        1usize << self.level
    }

    /// Number of nodes, `2^level + 1`.
    pub fn nodes(&self) -> usize {
        self.cells() + 1
    }

    /// Cell width `2^-level`.
    pub fn width(&self) -> f64 {
        0.5f64.powi(self.level as i32)
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.width()
    }

    pub fn cell_midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathKind {
    /// One value per cell; an element of the projected space `H_n`.
    Constant,
    /// One value per node, linearly interpolated in between.
    Linear,
}

/// A function on `[0,1]` sampled on a dyadic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    grid: Grid,
    kind: PathKind,
    values: Vec<f64>,
}

impl Path {
    pub fn constant(level: u32, values: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(level);
        if values.len() != grid.cells() {
            return Err(Error::parameter(format!(
                "constant path at level {level} needs {} values, got {}",
                grid.cells(),
                values.len()
            )));
        }
        Ok(Path { grid, kind: PathKind::Constant, values })
    }

    pub fn linear(level: u32, values: Vec<f64>) -> Result<Self> {
        let grid = Grid::new(level);
        if values.len() != grid.nodes() {
            return Err(Error::parameter(format!(
                "linear path at level {level} needs {} values, got {}",
                grid.nodes(),
                values.len()
            )));
        }
        Ok(Path { grid, kind: PathKind::Linear, values })
    }

    /// Linear path with both boundary values pinned to exactly zero.
    pub fn bridge_linear(level: u32, values: Vec<f64>) -> Result<Self> {
        let p = Path::linear(level, values)?;
        if p.values[0] != 0.0 || *p.values.last().unwrap() != 0.0 {
            return Err(Error::parameter(
                "bridge interpolant must vanish at both endpoints".to_string(),
            ));
        }
        Ok(p)
    }

    pub fn zero(level: u32, kind: PathKind) -> Self {
        let grid = Grid::new(level);
        let n = match kind {
            PathKind::Constant => grid.cells(),
            PathKind::Linear => grid.nodes(),
        };
        Path { grid, kind, values: vec![0.0; n] }
    }

    /// Linear path sampling `f` at the nodes.
    pub fn from_fn(level: u32, f: impl Fn(f64) -> f64) -> Self {
        let grid = Grid::new(level);
        let values = (0..grid.nodes()).map(|i| f(grid.node(i))).collect();
        Path { grid, kind: PathKind::Linear, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn level(&self) -> u32 {
        self.grid.level
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise evaluation. Constant paths use the cell containing `r`
    /// (half-open cells, `r = 1` belongs to the last cell).
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.grid.cells() as f64;
        match self.kind {
            PathKind::Constant => {
                let i = ((r * n).floor() as usize).min(self.grid.cells() - 1);
                self.values[i]
            }
            PathKind::Linear => {
                let t = (r * n).clamp(0.0, n);
                let i = (t.floor() as usize).min(self.grid.cells() - 1);
                let frac = t - i as f64;
                self.values[i] + (self.values[i + 1] - self.values[i]) * frac
            }
        }
    }

    /// Exact refinement to a finer level, preserving the kind.
    pub fn refine_to(&self, level: u32) -> Result<Self> {
        if level < self.level() {
            return Err(Error::Refinement { have: self.level(), want: level });
        }
        if level == self.level() {
            return Ok(self.clone());
        }
        let factor = 1usize << (level - self.level());
        let grid = Grid::new(level);
        let values = match self.kind {
            PathKind::Constant => {
                let mut v = Vec::with_capacity(grid.cells());
                for &x in &self.values {
                    v.extend(std::iter::repeat_n(x, factor));
                }
                v
            }
            PathKind::Linear => {
                let mut v = Vec::with_capacity(grid.nodes());
                for k in 0..self.grid.cells() {
                    let (a, b) = (self.values[k], self.values[k + 1]);
                    for s in 0..factor {
                        v.push(a + (b - a) * (s as f64 / factor as f64));
                    }
                }
                v.push(*self.values.last().unwrap());
                v
            }
        };
        Ok(Path { grid, kind: self.kind, values })
    }

    /// Orthogonal projection onto the piecewise-constant space at level `n`:
    /// each output cell carries the exact average of the path over that cell.
    pub fn project(&self, n: u32) -> Result<Path> {
        if n > self.level() {
            return Err(Error::Refinement { have: self.level(), want: n });
        }
        let factor = 1usize << (self.level() - n);
        let cells = 1usize << n;
        let mut out = Vec::with_capacity(cells);
        match self.kind {
            PathKind::Constant => {
                for c in 0..cells {
                    let s: f64 = self.values[c * factor..(c + 1) * factor].iter().sum();
                    out.push(s / factor as f64);
                }
            }
            PathKind::Linear => {
                // Average of trapezoids over the fine sub-cells.
                for c in 0..cells {
                    let lo = c * factor;
                    let mut s = 0.0;
                    for k in lo..lo + factor {
                        s += 0.5 * (self.values[k] + self.values[k + 1]);
                    }
                    out.push(s / factor as f64);
                }
            }
        }
        Path::constant(n, out)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn common_level(x: &Path, y: &Path) -> u32 {
    x.level().max(y.level())
}

/// Exact `int_0^1 x(r) y(r) dr` by piecewise polynomial quadrature after
/// refining both paths to the finer of the two grids. Mixed kinds integrate
/// the product of the two representatives exactly.
pub fn l2_inner(x: &Path, y: &Path) -> f64 {
    let lev = common_level(x, y);
    let xr = x.refine_to(lev).expect("refine to common level");
    let yr = y.refine_to(lev).expect("refine to common level");
    let c = xr.grid().width();
    let cells = xr.grid().cells();
    let mut acc = 0.0;
    for k in 0..cells {
        acc += match (xr.kind, yr.kind) {
            (PathKind::Constant, PathKind::Constant) => xr.values[k] * yr.values[k],
            (PathKind::Constant, PathKind::Linear) => {
                xr.values[k] * 0.5 * (yr.values[k] + yr.values[k + 1])
            }
            (PathKind::Linear, PathKind::Constant) => {
                yr.values[k] * 0.5 * (xr.values[k] + xr.values[k + 1])
            }
            (PathKind::Linear, PathKind::Linear) => {
                let (a1, b1) = (xr.values[k], xr.values[k + 1]);
                let (a2, b2) = (yr.values[k], yr.values[k + 1]);
                a1 * a2 + 0.5 * (a1 * (b2 - a2) + a2 * (b1 - a1)) + (b1 - a1) * (b2 - a2) / 3.0
            }
        };
    }
    acc * c
}

pub fn l2_norm(x: &Path) -> f64 {
    l2_inner(x, x).sqrt()
}

/// `k`-th sine coefficient `<x, e_k>` with `e_k = sqrt(2) sin(k pi r)`.
///
/// Linear paths use composite Simpson on each cell (the path is linear there,
/// so the only quadrature error comes from the sine); constant paths integrate
/// the sine over each cell in closed form.
pub fn sine_coefficient(x: &Path, k: u32) -> f64 {
    let kpi = k as f64 * PI;
    let c = x.grid().width();
    let mut acc = 0.0;
    match x.kind {
        PathKind::Linear => {
            for i in 0..x.grid().cells() {
                let (a, b) = (x.grid().node(i), x.grid().node(i + 1));
                let (xa, xb) = (x.values[i], x.values[i + 1]);
                let xm = 0.5 * (xa + xb);
                let g = |r: f64, v: f64| v * (kpi * r).sin();
                acc += c / 6.0 * (g(a, xa) + 4.0 * g(0.5 * (a + b), xm) + g(b, xb));
            }
        }
        PathKind::Constant => {
            for i in 0..x.grid().cells() {
                let (a, b) = (x.grid().node(i), x.grid().node(i + 1));
                acc += x.values[i] * ((kpi * a).cos() - (kpi * b).cos()) / kpi;
            }
        }
    }
    acc * std::f64::consts::SQRT_2
}

/// Truncated `H^{-1}` norm `(sum_{k<=K} k^{-2} <x,e_k>^2)^{1/2}`.
pub fn h_minus1_norm(x: &Path, k_cut: u32) -> Result<f64> {
    if k_cut < 1 {
        return Err(Error::parameter("h_minus1_norm requires K >= 1".to_string()));
    }
    let mut s = 0.0;
    for k in 1..=k_cut {
        let ck = sine_coefficient(x, k);
        s += ck * ck / (k as f64 * k as f64);
    }
    Ok(s.sqrt())
}

/// Antiderivative of `|v|^p` in `v`: `v |v|^p / (p+1)`.
fn abs_pow_antideriv(v: f64, p: f64) -> f64 {
    v * v.abs().powf(p) / (p + 1.0)
}

/// Exact `int_0^len |a + m t|^p dt` for a linear segment.
fn linear_abs_pow_integral(a: f64, m: f64, len: f64, p: f64) -> f64 {
    if m == 0.0 {
        return a.abs().powf(p) * len;
    }
    (abs_pow_antideriv(a + m * len, p) - abs_pow_antideriv(a, p)) / m
}

// 8-point Gauss-Legendre on [-1, 1].
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

fn gl8<F: Fn(f64) -> f64>(a: f64, b: f64, f: F) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut s = 0.0;
    for j in 0..8 {
        s += GL8_W[j] * f(mid + half * GL8_X[j]);
    }
    s * half
}

/// Fractional Sobolev norm
/// `( int |x|^p + int int |x_s - x_t|^p / |s-t|^{p eta + 1} )^{1/p}`
/// for a piecewise-linear path.
///
/// The double integral is split by cell pairs. Same-cell pairs reduce to the
/// closed form `|m|^p int int |s-t|^{p(1-eta)-1}`; adjacent pairs are handled
/// with the substitution `(s,t) -> (r u, r(1-u))` around the shared node, which
/// integrates the radial singular factor in closed form; distant pairs have a
/// smooth integrand and use tensor Gauss-Legendre.
pub fn sobolev_wnp_norm(x: &Path, eta: f64, p: f64) -> Result<f64> {
    if !(0.0 < eta && eta < 1.0) {
        return Err(Error::parameter(format!("sobolev order eta = {eta} outside ]0,1[")));
    }
    if p < 1.0 {
        return Err(Error::parameter(format!("sobolev exponent p = {p} < 1")));
    }
    if x.kind() != PathKind::Linear {
        return Err(Error::parameter(
            "sobolev_wnp_norm needs a piecewise-linear path".to_string(),
        ));
    }
    let cells = x.grid().cells();
    let d = x.grid().width();
    let slopes: Vec<f64> =
        (0..cells).map(|k| (x.values[k + 1] - x.values[k]) / d).collect();

    // L^p part, exact per segment.
    let mut lp = 0.0;
    for (k, m) in slopes.iter().enumerate() {
        lp += linear_abs_pow_integral(x.values[k], *m, d, p);
    }

    let q = p * (1.0 - eta) - 1.0; // exponent of |s-t| on the diagonal
    let mut dbl = 0.0;

    // Same-cell pairs: |x_s - x_t| = |m| |s - t|.
    for m in &slopes {
        dbl += m.abs().powf(p) * 2.0 * d.powf(q + 2.0) / ((q + 1.0) * (q + 2.0));
    }

    // Adjacent pairs (i, i+1), counted twice for the two orderings.
    // With s in cell i+1 at distance sigma from the shared node and t in cell
    // i at distance tau, x_s - x_t = m_{i+1} sigma + m_i tau and |s-t| =
    // sigma + tau; in polar-like coordinates sigma = r u, tau = r (1-u) the
    // r-integral is explicit and only a 1D integral over u remains.
    let s_exp = p * (1.0 - eta) + 1.0;
    for i in 0..cells.saturating_sub(1) {
        let (mi, mj) = (slopes[i], slopes[i + 1]);
        let g = |u: f64| mj * u + mi * (1.0 - u);
        let radial = |u: f64| {
            let r_max = d / u.max(1.0 - u);
            g(u).abs().powf(p) * r_max.powf(s_exp) / s_exp
        };
        // Split at the kink u = 1/2 and at a sign change of g, if any.
        let mut cuts = vec![0.0, 0.5, 1.0];
        if g(0.0) * g(1.0) < 0.0 {
            let root = mi / (mi - mj);
            if root > 0.0 && root < 1.0 {
                cuts.push(root);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut contrib = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                contrib += gl8(w[0], w[1], radial);
            }
        }
        dbl += 2.0 * contrib;
    }

    // Distant pairs: smooth integrand, tensor Gauss-Legendre.
    for i in 0..cells {
        for j in i + 2..cells {
            let (ai, aj) = (x.grid().node(i), x.grid().node(j));
            let (xi0, mi) = (x.values[i], slopes[i]);
            let (xj0, mj) = (x.values[j], slopes[j]);
            let inner = |t: f64| {
                gl8(aj, aj + d, |s| {
                    let xs = xj0 + mj * (s - aj);
                    let xt = xi0 + mi * (t - ai);
                    (xs - xt).abs().powf(p) / (s - t).abs().powf(p * eta + 1.0)
                })
            };
            dbl += 2.0 * gl8(ai, ai + d, inner);
        }
    }

    Ok((lp + dbl).powf(1.0 / p))
}

/// Hölder seminorm `sup_{r != s} |x_r - x_s| / |r - s|^theta` over grid nodes.
/// For a piecewise-linear path the sup over all of `[0,1]^2` is attained at
/// node pairs when `theta <= 1`.
pub fn holder_seminorm(x: &Path, theta: f64) -> Result<f64> {
    if x.kind() != PathKind::Linear {
        return Err(Error::parameter(
            "holder_seminorm needs a piecewise-linear path".to_string(),
        ));
    }
    let n = x.grid().nodes();
    let d = x.grid().width();
    let mut sup = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let gap = ((j - i) as f64 * d).powf(theta);
            let v = (x.values[j] - x.values[i]).abs() / gap;
            sup = sup.max(v);
        }
    }
    Ok(sup)
}

/// `sup |x| +` Hölder seminorm; the Banach norm on `C^theta([0,1])`.
pub fn holder_norm(x: &Path, theta: f64) -> Result<f64> {
    Ok(x.sup_norm() + holder_seminorm(x, theta)?)
}

/// A `C^2` test function with its first two derivatives tabulated on the grid
/// nodes.
#[derive(Debug, Clone)]
pub struct TestFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub compact_support: bool,
}

impl TestFunction {
    pub fn from_fns(
        level: u32,
        f: impl Fn(f64) -> f64,
        f1: impl Fn(f64) -> f64,
        f2: impl Fn(f64) -> f64,
        compact_support: bool,
    ) -> Result<Self> {
        let grid = Grid::new(level);
        let values: Vec<f64> = (0..grid.nodes()).map(|i| f(grid.node(i))).collect();
        let d1 = (0..grid.nodes()).map(|i| f1(grid.node(i))).collect();
        let d2 = (0..grid.nodes()).map(|i| f2(grid.node(i))).collect();
        let tf = TestFunction { grid, values, d1, d2, compact_support };
        if compact_support && !(tf.values[0] == 0.0 && tf.values[1] == 0.0) {
            return Err(Error::parameter(
                "compact-support test function must vanish on the first cell".to_string(),
            ));
        }
        if compact_support {
            let n = tf.values.len();
            if !(tf.values[n - 1] == 0.0 && tf.values[n - 2] == 0.0) {
                return Err(Error::parameter(
                    "compact-support test function must vanish on the last cell".to_string(),
                ));
            }
        }
        Ok(tf)
    }

    /// The sine eigenfunction `e_k = sqrt(2) sin(k pi r)`.
    pub fn sine(level: u32, k: u32) -> Self {
        let kpi = k as f64 * PI;
        let s2 = std::f64::consts::SQRT_2;
        TestFunction::from_fns(
            level,
            |r| s2 * (kpi * r).sin(),
            |r| s2 * kpi * (kpi * r).cos(),
            |r| -s2 * kpi * kpi * (kpi * r).sin(),
            false,
        )
        .expect("sine test function")
    }

    pub fn as_path(&self) -> Path {
        Path::linear(self.grid.level(), self.values.clone()).expect("test function path")
    }

    /// Discrete Dirichlet Laplacian of the node values,
    /// `(h_{i+1} - 2 h_i + h_{i-1}) / width^2`, zero at the boundary rows.
    pub fn discrete_laplacian(&self) -> Vec<f64> {
        let n = self.values.len();
        let d2inv = 1.0 / (self.grid.width() * self.grid.width());
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate().take(n - 1).skip(1) {
            *o = (self.values[i + 1] - 2.0 * self.values[i] + self.values[i - 1]) * d2inv;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn project_fixes_constants() {
        let x = Path::constant(4, vec![3.5; 16]).unwrap();
        for n in 0..=4 {
            let p = x.project(n).unwrap();
            assert!(p.values().iter().all(|&v| v == 3.5));
        }
    }

    #[test]
    fn project_is_idempotent_bitwise() {
        let x = Path::from_fn(6, |r| (3.0 * r).sin() + r * r);
        let p1 = x.project(3).unwrap();
        let p2 = p1.project(3).unwrap();
        assert_eq!(p1.values(), p2.values());
    }

    #[test]
    fn project_identity_ramp() {
        // x(r) = r averaged over the two halves of [0,1].
        let x = Path::from_fn(5, |r| r);
        let p = x.project(1).unwrap();
        assert_abs_diff_eq!(p.values()[0], 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.values()[1], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn project_refuses_refinement() {
        let x = Path::constant(2, vec![0.0; 4]).unwrap();
        assert!(matches!(x.project(3), Err(Error::Refinement { .. })));
    }

    #[test]
    fn l2_inner_zero_and_orthonormality() {
        let zero = Path::zero(10, PathKind::Linear);
        let e1 = TestFunction::sine(10, 1).as_path();
        let e2 = TestFunction::sine(10, 2).as_path();
        assert_eq!(l2_inner(&zero, &e1), 0.0);
        assert_abs_diff_eq!(l2_inner(&e1, &e1), 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(l2_inner(&e1, &e2), 0.0, epsilon = 1e-5);
    }

    #[test]
    fn l2_contraction_under_projection() {
        let x = Path::from_fn(7, |r| (13.0 * r).sin() + 0.3 * r);
        for n in [0, 2, 5] {
            let p = x.project(n).unwrap();
            assert!(l2_inner(&p, &p) <= l2_inner(&x, &x) + 1e-12);
        }
    }

    #[test]
    fn h_minus1_examples() {
        let zero = Path::zero(8, PathKind::Linear);
        assert_eq!(h_minus1_norm(&zero, 16).unwrap(), 0.0);
        let e1 = TestFunction::sine(10, 1).as_path();
        assert_abs_diff_eq!(h_minus1_norm(&e1, 16).unwrap(), 1.0, epsilon = 1e-4);
        let e2 = TestFunction::sine(10, 2).as_path();
        assert_abs_diff_eq!(h_minus1_norm(&e2, 16).unwrap(), 0.5, epsilon = 1e-4);
        assert!(h_minus1_norm(&e1, 0).is_err());
    }

    #[test]
    fn h_minus1_monotone_in_cutoff_and_dominated() {
        let x = Path::from_fn(8, |r| (5.0 * r).sin() * (1.0 - r) * r);
        let mut prev = 0.0;
        for k in 1..=12 {
            let v = h_minus1_norm(&x, k).unwrap();
            assert!(v >= prev - 1e-15);
            prev = v;
        }
        let dom = l2_norm(&x) * (PI * PI / 6.0).sqrt();
        assert!(prev <= dom + 1e-12);
    }

    #[test]
    fn sobolev_examples() {
        let zero = Path::zero(4, PathKind::Linear);
        assert_eq!(sobolev_wnp_norm(&zero, 0.25, 2.0).unwrap(), 0.0);

        let c = Path::from_fn(4, |_| -2.5);
        assert_abs_diff_eq!(sobolev_wnp_norm(&c, 0.3, 3.0).unwrap(), 2.5, epsilon = 1e-12);

        assert!(sobolev_wnp_norm(&c, 1.5, 2.0).is_err());
        assert!(sobolev_wnp_norm(&c, 0.5, 0.5).is_err());
    }

    #[test]
    fn sobolev_ramp_vs_brute_force() {
        // Brute-force double quadrature at 4x resolution as an independent
        // oracle for x(r) = r, eta = 0.25, p = 2.
        let (eta, p) = (0.25, 2.0);
        let x = Path::from_fn(4, |r| r);
        let got = sobolev_wnp_norm(&x, eta, p).unwrap();

        let m = 1 << 6; // 4x the path resolution
        let d = 1.0 / m as f64;
        let mut dbl = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i == j {
                    // |s-t|^{p(1-eta)-1} over the diagonal cell, closed form.
                    let q = p * (1.0 - eta) - 1.0;
                    dbl += 2.0 * d.powf(q + 2.0) / ((q + 1.0) * (q + 2.0));
                } else {
                    let (ti, tj) = ((i as f64 + 0.5) * d, (j as f64 + 0.5) * d);
                    dbl += (tj - ti).abs().powf(p * (1.0 - eta) - 1.0) * d * d;
                }
            }
        }
        let lp = 1.0 / (p + 1.0);
        let want = (lp + dbl).powf(1.0 / p);
        assert_abs_diff_eq!(got, want, epsilon = 1e-3);
    }

    #[test]
    fn holder_examples() {
        let zero = Path::zero(3, PathKind::Linear);
        assert_eq!(holder_seminorm(&zero, 0.5).unwrap(), 0.0);

        let ramp = Path::from_fn(4, |r| r);
        assert_abs_diff_eq!(holder_seminorm(&ramp, 0.5).unwrap(), 1.0, epsilon = 1e-12);

        let tent = Path::linear(1, vec![0.0, 1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(
            holder_seminorm(&tent, 0.5).unwrap(),
            std::f64::consts::SQRT_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn norms_absolutely_homogeneous() {
        let x = Path::from_fn(5, |r| (7.0 * r).cos() * r - 0.4);
        let cx = {
            let mut y = x.clone();
            y.values_mut().iter_mut().for_each(|v| *v *= -3.25);
            y
        };
        let c = 3.25;
        assert_abs_diff_eq!(l2_norm(&cx), c * l2_norm(&x), epsilon = 1e-12);
        assert_abs_diff_eq!(
            h_minus1_norm(&cx, 12).unwrap(),
            c * h_minus1_norm(&x, 12).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            sobolev_wnp_norm(&cx, 0.3, 2.0).unwrap(),
            c * sobolev_wnp_norm(&x, 0.3, 2.0).unwrap(),
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            holder_seminorm(&cx, 0.4).unwrap(),
            c * holder_seminorm(&x, 0.4).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bridge_linear_enforces_pinning() {
        assert!(Path::bridge_linear(1, vec![0.0, 1.0, 0.5]).is_err());
        assert!(Path::bridge_linear(1, vec![0.0, 1.0, 0.0]).is_ok());
    }

    #[test]
    fn compact_support_invariant() {
        let bad = TestFunction::from_fns(3, |_| 1.0, |_| 0.0, |_| 0.0, true);
        assert!(bad.is_err());
    }
}
