//! The drift datum `f = f_0 + sum_j alpha_j 1_{y <= y_j}`, its mollifications
//! and the skew coefficients of the projected dynamics.
//!
//! `f` is bounded with bounded variation: a smooth part `f_0` with an analytic
//! derivative plus finitely many jumps. The Stieltjes measure of `f` is
//! `f(da) = f_0'(a) da - sum_j alpha_j delta_{y_j}(da)` (the indicator
//! `1_{y <= y_j}` drops by `alpha_j` when crossing `y_j` upward); the
//! integration-by-parts residuals consume it through
//! [`JumpDrift::stieltjes_atoms`].

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Default clamping range for polynomial smooth parts. Polynomials are
/// unbounded, so the argument is clamped to keep `f_0` globally bounded.
pub const DEFAULT_CLAMP: f64 = 8.0;

/// Smooth bounded part of the drift with an analytic derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SmoothPart {
    Zero,
    /// `sum c_k y^k` evaluated at `clamp(y, -range, range)`.
    Poly { coeffs: Vec<f64>, range: f64 },
    /// `amp * sin(y)`.
    Sin { amp: f64 },
}

impl SmoothPart {
    pub fn poly(coeffs: Vec<f64>) -> Self {
        SmoothPart::Poly { coeffs, range: DEFAULT_CLAMP }
    }

    pub fn eval(&self, y: f64) -> f64 {
        match self {
            SmoothPart::Zero => 0.0,
            SmoothPart::Poly { coeffs, range } => {
                let t = y.clamp(-range, *range);
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            SmoothPart::Sin { amp } => amp * y.sin(),
        }
    }

    /// Derivative; zero outside the clamping range for polynomials.
    pub fn deriv(&self, y: f64) -> f64 {
        match self {
            SmoothPart::Zero => 0.0,
            SmoothPart::Poly { coeffs, range } => {
                if y.abs() > *range {
                    return 0.0;
                }
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1) {
                    acc += k as f64 * c * y.powi(k as i32 - 1);
                }
                acc
            }
            SmoothPart::Sin { amp } => amp * y.cos(),
        }
    }

    /// Provable upper bound on `sup |f_0|`.
    pub fn sup_bound(&self) -> f64 {
        match self {
            SmoothPart::Zero => 0.0,
            SmoothPart::Poly { coeffs, range } => coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c.abs() * range.powi(k as i32))
                .sum(),
            SmoothPart::Sin { amp } => amp.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SmoothPart::Zero => true,
            SmoothPart::Poly { coeffs, .. } => coeffs.iter().all(|c| *c == 0.0),
            SmoothPart::Sin { amp } => *amp == 0.0,
        }
    }
}

/// A jump location/size pair `(y_j, alpha_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub at: f64,
    pub size: f64,
}

/// Drift datum `f(y) = f_0(y) + sum_j alpha_j 1_{y <= y_j}`.
///
/// The value at a jump point includes the jump (the indicator is closed on the
/// left); a fixed convention the tests rely on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDrift {
    smooth: SmoothPart,
    jumps: Vec<Jump>,
}

impl JumpDrift {
    pub fn new(smooth: SmoothPart, mut jumps: Vec<Jump>) -> Result<Self> {
        jumps.sort_by(|a, b| a.at.partial_cmp(&b.at).unwrap());
        for w in jumps.windows(2) {
            if w[0].at == w[1].at {
                return Err(Error::parameter(format!(
                    "duplicate jump location y = {}",
                    w[0].at
                )));
            }
        }
        if jumps.iter().any(|j| !j.at.is_finite() || !j.size.is_finite()) {
            return Err(Error::parameter("jump entries must be finite".to_string()));
        }
        Ok(JumpDrift { smooth, jumps })
    }

    pub fn zero() -> Self {
        JumpDrift { smooth: SmoothPart::Zero, jumps: vec![] }
    }

    /// The single indicator drift `alpha * 1_{y <= 0}`.
    pub fn indicator_at_zero(alpha: f64) -> Self {
        JumpDrift::new(SmoothPart::Zero, vec![Jump { at: 0.0, size: alpha }]).unwrap()
    }

    pub fn smooth(&self) -> &SmoothPart {
        &self.smooth
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn is_zero(&self) -> bool {
        self.smooth.is_zero() && self.jumps.is_empty()
    }

    /// `f(y)`.
    pub fn eval(&self, y: f64) -> f64 {
        let mut v = self.smooth.eval(y);
        for j in &self.jumps {
            if y <= j.at {
                v += j.size;
            }
        }
        v
    }

    /// `f_0'(y)`.
    pub fn smooth_deriv(&self, y: f64) -> f64 {
        self.smooth.deriv(y)
    }

    /// Upper bound on `sup |f|`: `sup|f_0| + sum |alpha_j|`.
    pub fn sup_bound(&self) -> f64 {
        self.smooth.sup_bound() + self.jumps.iter().map(|j| j.size.abs()).sum::<f64>()
    }

    /// Atoms of the Stieltjes measure `f(da)`: pairs `(y_j, -alpha_j)`.
    pub fn stieltjes_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.jumps.iter().map(|j| (j.at, -j.size))
    }

    /// Jump locations (the discontinuity set of `f`).
    pub fn jump_levels(&self) -> Vec<f64> {
        self.jumps.iter().map(|j| j.at).collect()
    }

    /// Mollified drift `f_n` with smoothing index `n >= 1`.
    pub fn mollify(&self, n: u32) -> Result<Mollified> {
        if n < 1 {
            return Err(Error::parameter("mollifier index must be >= 1".to_string()));
        }
        Ok(Mollified { drift: self.clone(), index: n })
    }

    /// Skew coefficients of the level-`n` projected dynamics:
    /// `beta_j = (1 - e^{-alpha_j 2^{-n}}) / (1 + e^{-alpha_j 2^{-n}})`,
    /// one per jump, paired with the jump location.
    pub fn skew_coeffs(&self, n: u32) -> Vec<(f64, f64)> {
        let c = 0.5f64.powi(n as i32);
        self.jumps
            .iter()
            .map(|j| {
                let e = (-j.size * c).exp();
                (j.at, (1.0 - e) / (1.0 + e))
            })
            .collect()
    }
}

/// Quintic smoothstep profile: `rho = 1` on `(-inf, 0]`, `rho = 0` on
/// `[1, inf)`, monotone non-increasing and twice continuously differentiable,
/// `rho(t) = 1 - (6 t^5 - 15 t^4 + 10 t^3)` on `[0,1]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mollifier;

impl Mollifier {
    pub fn eval(t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn deriv(t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            -30.0 * t * t * (1.0 - t) * (1.0 - t)
        }
    }

    pub fn second_deriv(t: f64) -> f64 {
        if t <= 0.0 || t >= 1.0 {
            0.0
        } else {
            -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
        }
    }
}

/// The mollified drift
/// `f_n(y) = f_0(y) + sum_j alpha_j rho(n (y - y_j) + 1_{alpha_j < 0})`.
///
/// `f_n` decreases pointwise to `f` as `n` grows and agrees with `f` away
/// from the jump set.
#[derive(Debug, Clone)]
pub struct Mollified {
    drift: JumpDrift,
    index: u32,
}

impl Mollified {
    pub fn index(&self) -> u32 {
        self.index
    }

    pub fn drift(&self) -> &JumpDrift {
        &self.drift
    }

    fn shift(j: &Jump) -> f64 {
        if j.size < 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.index as f64;
        let mut v = self.drift.smooth.eval(y);
        for j in &self.drift.jumps {
            v += j.size * Mollifier::eval(n * (y - j.at) + Self::shift(j));
        }
        v
    }

    pub fn deriv(&self, y: f64) -> f64 {
        let n = self.index as f64;
        let mut v = self.drift.smooth.deriv(y);
        for j in &self.drift.jumps {
            v += j.size * n * Mollifier::deriv(n * (y - j.at) + Self::shift(j));
        }
        v
    }

    /// Upper bound on `sup |f_n''|`, used by the SPDE step-size guard.
    /// `|rho''| <= 10 sqrt(3) / 3` for the quintic smoothstep.
    pub fn second_deriv_bound(&self) -> f64 {
        let n = self.index as f64;
        let rho2 = 10.0 * 3.0f64.sqrt() / 3.0;
        let smooth2 = match &self.drift.smooth {
            SmoothPart::Zero => 0.0,
            SmoothPart::Sin { amp } => amp.abs(),
            SmoothPart::Poly { coeffs, range } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .map(|(k, c)| (k * (k - 1)) as f64 * c.abs() * range.powi(k as i32 - 2))
                .sum(),
        };
        smooth2 + n * n * rho2 * self.drift.jumps.iter().map(|j| j.size.abs()).sum::<f64>()
    }

    /// Certified uniform bound `sup |f_n| <= sup|f_0| + sum |alpha_j|`.
    pub fn sup_bound(&self) -> f64 {
        self.drift.sup_bound()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_jump_drift() -> JumpDrift {
        JumpDrift::new(
            SmoothPart::Sin { amp: 1.0 },
            vec![Jump { at: 0.0, size: 1.0 }, Jump { at: 0.5, size: -2.0 }],
        )
        .unwrap()
    }

    #[test]
    fn eval_no_jumps_is_smooth_part() {
        let d = JumpDrift::new(SmoothPart::poly(vec![1.0, 2.0]), vec![]).unwrap();
        assert_abs_diff_eq!(d.eval(0.3), 1.6, epsilon = 1e-15);
    }

    #[test]
    fn eval_single_indicator() {
        let d = JumpDrift::indicator_at_zero(1.0);
        assert_eq!(d.eval(-1.0), 1.0);
        assert_eq!(d.eval(1.0), 0.0);
        assert_eq!(d.eval(0.0), 1.0); // jump point included
    }

    #[test]
    fn eval_two_jumps_hand_enumeration() {
        let d = two_jump_drift();
        // 0.25 > 0 so the first indicator is off; 0.25 <= 0.5 so the second is on.
        assert_abs_diff_eq!(d.eval(0.25), (0.25f64).sin() - 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eval(-0.1), (-0.1f64).sin() + 1.0 - 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eval(0.7), (0.7f64).sin(), epsilon = 1e-15);
    }

    #[test]
    fn duplicate_jump_rejected() {
        let r = JumpDrift::new(
            SmoothPart::Zero,
            vec![Jump { at: 0.0, size: 1.0 }, Jump { at: 0.0, size: 2.0 }],
        );
        assert!(r.is_err());
    }

    #[test]
    fn bounded_range() {
        let d = two_jump_drift();
        let bound = d.sup_bound();
        assert_abs_diff_eq!(bound, 4.0, epsilon = 1e-15);
        for i in -400..400 {
            let y = i as f64 * 0.025;
            assert!(d.eval(y).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn mollifier_profile_shape() {
        assert_eq!(Mollifier::eval(0.0), 1.0);
        assert_eq!(Mollifier::eval(1.0), 0.0);
        assert_eq!(Mollifier::eval(-3.0), 1.0);
        assert_eq!(Mollifier::eval(5.0), 0.0);
        let mut prev = 1.0;
        for i in 1..=100 {
            let t = i as f64 / 100.0;
            let v = Mollifier::eval(t);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15);
            assert!(Mollifier::deriv(t) <= 0.0);
            prev = v;
        }
        // C^1 match of the tabulated derivative against finite differences.
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let h = 1e-6;
            let fd = (Mollifier::eval(t + h) - Mollifier::eval(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(fd, Mollifier::deriv(t), epsilon = 1e-6);
        }
    }

    #[test]
    fn mollified_matches_f_away_from_jumps() {
        let d = two_jump_drift();
        let fnn = d.mollify(4).unwrap();
        for &y in &[-2.0, -0.26, 0.76, 1.3] {
            // dist(y, {0, 0.5}) > 1/4 for all of these
            assert_abs_diff_eq!(fnn.eval(y), d.eval(y), epsilon = 1e-14);
        }
    }

    #[test]
    fn mollified_at_positive_jump_point() {
        let d = JumpDrift::indicator_at_zero(2.0);
        let fnn = d.mollify(3).unwrap();
        // rho(0) = 1, so the mollified drift carries the full jump at y_j.
        assert_abs_diff_eq!(fnn.eval(0.0), d.eval(0.0), epsilon = 1e-15);
    }

    #[test]
    fn mollified_monotone_decreasing_in_index() {
        let d = two_jump_drift();
        for n in 1..12 {
            let f1 = d.mollify(n).unwrap();
            let f2 = d.mollify(n + 1).unwrap();
            for i in -300..300 {
                let y = i as f64 / 100.0;
                assert!(f2.eval(y) <= f1.eval(y) + 1e-12, "n={n} y={y}");
                assert!(f1.eval(y) >= d.eval(y) - 1e-12);
            }
        }
    }

    #[test]
    fn smooth_approx_uniformly_bounded_and_converging() {
        let d = two_jump_drift();
        let bound = d.sup_bound();
        for n in [1u32, 2, 4, 8, 16] {
            let f = d.mollify(n).unwrap();
            let mut sup_err_away = 0.0f64;
            for i in -300..=300 {
                let y = i as f64 / 100.0;
                assert!(f.eval(y).abs() <= bound + 1e-12);
                let dist = d.jump_levels().iter().fold(f64::MAX, |m, &l| m.min((y - l).abs()));
                if dist >= 0.1 {
                    sup_err_away = sup_err_away.max((f.eval(y) - d.eval(y)).abs());
                }
            }
            if n > 10 {
                assert_eq!(sup_err_away, 0.0);
            }
        }
        // constant drift mollifies to itself
        let c = JumpDrift::new(SmoothPart::poly(vec![0.7]), vec![]).unwrap();
        let fc = c.mollify(3).unwrap();
        for i in -20..20 {
            assert_eq!(fc.eval(i as f64 * 0.1), 0.7);
        }
    }

    #[test]
    fn skew_coeff_values() {
        let d = JumpDrift::indicator_at_zero(0.0);
        assert_eq!(d.skew_coeffs(3)[0].1, 0.0);

        let d = JumpDrift::indicator_at_zero(1.0);
        let b = d.skew_coeffs(0)[0].1;
        assert_abs_diff_eq!(b, 0.462117, epsilon = 1e-6);
    }

    #[test]
    fn skew_coeff_is_tanh_and_inside_band() {
        for &alpha in &[-3.0, -0.7, 0.2, 1.0, 5.0] {
            for n in 0..8 {
                let d = JumpDrift::indicator_at_zero(alpha);
                let b = d.skew_coeffs(n)[0].1;
                let want = (alpha * 0.5f64.powi(n as i32 + 1)).tanh();
                assert_abs_diff_eq!(b, want, epsilon = 1e-12);
                assert!(b.abs() < 1.0);
            }
        }
        // odd and strictly increasing in alpha
        let betas: Vec<f64> = [-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .map(|&a| JumpDrift::indicator_at_zero(a).skew_coeffs(2)[0].1)
            .collect();
        assert_abs_diff_eq!(betas[0], -betas[4], epsilon = 1e-15);
        assert_abs_diff_eq!(betas[1], -betas[3], epsilon = 1e-15);
        for w in betas.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn stieltjes_atoms_sign() {
        let d = two_jump_drift();
        let atoms: Vec<_> = d.stieltjes_atoms().collect();
        assert_eq!(atoms, vec![(0.0, -1.0), (0.5, 2.0)]);
    }
}
