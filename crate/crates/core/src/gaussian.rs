//! Expectations over a standard normal variable and the linear-model analytics.
//!
//! The linear model has Hamiltonian `sqrt(x) sum_i J_i s_i + h sum_i s_i` and
//! factorizes over sites, so its free energy and mean overlap reduce to
//! one-dimensional Gaussian integrals of `phi` and `(d_u phi)^2`:
//!
//! ```text
//! alpha_lin(x) = E[ phi(h + sqrt(x) g, -x/2) ]
//! q_lin(x)     = E[ (d_u phi)^2(h + sqrt(x) g, -x/2) ]
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, LabError, Result};
use crate::quadrature::gauss_hermite_physicists;
use crate::spins::PhiEvaluator;

/// Default number of Gauss–Hermite nodes.
///
/// For ±1 spins the integrand `tanh^2(h + sqrt(x) g)` has poles at distance
/// `pi / (2 sqrt(x))` from the real axis; at `x = 4` the rule needs about 300
/// nodes to reach 1e-9.
pub const DEFAULT_HERMITE_ORDER: usize = 301;

/// Upper end of the `x` range scanned for the Lipschitz constant.
pub const DEFAULT_LIPSCHITZ_XMAX: f64 = 4.0;

pub const DEFAULT_LIPSCHITZ_POINTS: usize = 2001;

/// Inflation applied to the grid maximum of `|d q_lin / dx|`.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;

/// Gauss–Hermite rule normalized for `E[f(g)]`, `g ~ N(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl HermiteRule {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(LabError::InvalidParameter(
                "Hermite order must be >= 1".into(),
            ));
        }
        let (z, w) = gauss_hermite_physicists(order);
        let scale = 1.0 / PI.sqrt();
        let nodes: Vec<f64> = z.iter().map(|z| z * std::f64::consts::SQRT_2).collect();
        let mut weights: Vec<f64> = w.iter().map(|w| w * scale).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self {
            nodes,
            weights,
            order,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&g, &w)| w * f(g))
            .sum()
    }
}

impl Default for HermiteRule {
    fn default() -> Self {
        Self::new(DEFAULT_HERMITE_ORDER).expect("default order is valid")
    }
}

/// Closed form of `E[exp(u g + v g^2)]` for `g ~ N(0, 1)` and `v < 1/2`.
pub fn gaussian_quad_exp_moment(u: f64, v: f64) -> Result<f64> {
    if !u.is_finite() || !v.is_finite() {
        return Err(LabError::NonFinite("gaussian moment argument"));
    }
    if v >= 0.5 {
        return Err(LabError::InvalidParameter(format!(
            "E[exp(u g + v g^2)] diverges for v >= 1/2 (v = {v})"
        )));
    }
    let a = 1.0 - 2.0 * v;
    Ok((u * u / (2.0 * a)).exp() / a.sqrt())
}

/// Linear-model quantities for one spin law, field `h` and Gaussian rule.
#[derive(Clone, Debug)]
pub struct LinearModel {
    ev: PhiEvaluator,
    rule: HermiteRule,
    h: f64,
}

impl LinearModel {
    pub fn new(ev: PhiEvaluator, rule: HermiteRule, h: f64) -> Result<Self> {
        ensure_nonneg(h, "h")?;
        Ok(Self { ev, rule, h })
    }

    pub fn evaluator(&self) -> &PhiEvaluator {
        &self.ev
    }

    pub fn rule(&self) -> &HermiteRule {
        &self.rule
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Mean overlap of the linear model, `E[(d_u phi)^2(h + sqrt(x) g, -x/2)]`.
    pub fn q_lin(&self, x: f64) -> Result<f64> {
        ensure_nonneg(x, "x")?;
        Ok(self.q_lin_unchecked(x))
    }

    pub(crate) fn q_lin_unchecked(&self, x: f64) -> f64 {
        let sx = x.sqrt();
        self.rule
            .expect(|g| self.ev.du_squared(self.h + sx * g, -0.5 * x))
            .clamp(0.0, 1.0)
    }

    /// Linear-model free energy, `E[phi(h + sqrt(x) g, -x/2)]`.
    pub fn alpha_lin(&self, x: f64) -> Result<f64> {
        ensure_nonneg(x, "x")?;
        let sx = x.sqrt();
        Ok(self
            .rule
            .expect(|g| self.ev.phi_unchecked(self.h + sx * g, -0.5 * x)))
    }

    /// `d q_lin / dx`.
    ///
    /// Gaussian integration by parts turns the `x`-derivative of
    /// `E[F(h + sqrt(x) g, -x/2)]` into `E[(F_uu - F_v) / 2]`; with
    /// `F = phi_u^2` this is `E[phi_uu^2 + phi_u (phi_uuu - phi_uv)]`. For ±1
    /// spins it reduces to `-E[phi_uuuu] / 2`.
    pub fn dq_lin_dx(&self, x: f64) -> Result<f64> {
        ensure_nonneg(x, "x")?;
        Ok(self.dq_lin_dx_unchecked(x))
    }

    fn dq_lin_dx_unchecked(&self, x: f64) -> f64 {
        let sx = x.sqrt();
        self.rule.expect(|g| {
            let p = self.ev.tilt(self.h + sx * g, -0.5 * x);
            p.duu * p.duu + p.du * (p.duuu - p.duv)
        })
    }

    /// Grid estimate of `C = sup_{0 <= x <= x_max} |d q_lin / dx|`, inflated by 5%.
    pub fn lipschitz_bound(&self, x_max: f64) -> Result<f64> {
        self.lipschitz_bound_with(x_max, DEFAULT_LIPSCHITZ_POINTS)
    }

    pub fn lipschitz_bound_with(&self, x_max: f64, points: usize) -> Result<f64> {
        if !x_max.is_finite() || x_max <= 0.0 {
            return Err(LabError::InvalidParameter(format!(
                "x_max must be > 0, got {x_max}"
            )));
        }
        if points < 2 {
            return Err(LabError::InvalidParameter(
                "Lipschitz grid needs at least 2 points".into(),
            ));
        }
        let step = x_max / (points - 1) as f64;
        let max = (0..points)
            .map(|i| self.dq_lin_dx_unchecked(i as f64 * step).abs())
            .fold(0.0f64, f64::max);
        Ok(LIPSCHITZ_SAFETY * max)
    }

    /// `Var(X)` for `X = (d_u phi)^2(h + sqrt(x) g, -x/2) - q_lin(x)`.
    pub fn overlap_field_variance(&self, x: f64) -> Result<f64> {
        let q = self.q_lin(x)?;
        let sx = x.sqrt();
        Ok(self.rule.expect(|g| {
            let d = self.ev.du_squared(self.h + sx * g, -0.5 * x) - q;
            d * d
        }))
    }

    /// Explicit constant `L*` bounding `E log <exp(lambda n (R - q_lin(x))^2)>`
    /// in the linear model, uniformly in `n`.
    ///
    /// Writing the quadratic coupling as a Gaussian integral over `gamma` and
    /// using `psi'' <= 4` gives, per disorder,
    /// `log ratio <= log E_gamma[exp(gamma u + 4 lambda gamma^2)]` with
    /// `u^2 = (2 lambda / n) (sum_i X_i)^2`. The closed-form moment then yields
    /// `-log(1 - 8 lambda) / 2 + c(lambda) Var(X)` where
    /// `c(lambda) = max(2 lambda, lambda / (1 - 8 lambda))`.
    pub fn concentration_bound(&self, x: f64, lambda: f64) -> Result<f64> {
        ensure_nonneg(lambda, "lambda")?;
        if lambda >= 0.125 {
            return Err(LabError::InvalidParameter(format!(
                "concentration bound needs lambda < 1/8, got {lambda}"
            )));
        }
        let a = 1.0 - 8.0 * lambda;
        let var = self.overlap_field_variance(x)?;
        let c = (2.0 * lambda).max(lambda / a);
        Ok(-0.5 * a.ln() + c * var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spins::SpinDistribution;
    use approx::assert_abs_diff_eq;

    fn rad(h: f64) -> LinearModel {
        LinearModel::new(
            PhiEvaluator::new(SpinDistribution::rademacher()),
            HermiteRule::default(),
            h,
        )
        .unwrap()
    }

    #[test]
    fn rule_moments() {
        for &order in &[61, 121, DEFAULT_HERMITE_ORDER] {
            let r = HermiteRule::new(order).unwrap();
            assert_abs_diff_eq!(r.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.expect(|g| g), 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.expect(|g| g * g), 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(r.expect(|g| g.powi(4)), 3.0, epsilon = 1e-9);
        }
        assert!(HermiteRule::new(0).is_err());
    }

    #[test]
    fn q_lin_trivial_points() {
        assert_abs_diff_eq!(rad(0.0).q_lin(0.0).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rad(0.3).q_lin(0.0).unwrap(),
            0.3f64.tanh().powi(2),
            epsilon = 1e-14
        );
        assert!(rad(0.3).q_lin(-1.0).is_err());
        assert!(rad(0.3).alpha_lin(-0.1).is_err());
    }

    #[test]
    fn alpha_lin_at_zero_is_log_cosh() {
        assert_abs_diff_eq!(
            rad(0.7).alpha_lin(0.0).unwrap(),
            0.7f64.cosh().ln(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn quad_exp_moment_closed_form() {
        assert_abs_diff_eq!(gaussian_quad_exp_moment(0.0, 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(
            gaussian_quad_exp_moment(1.0, 0.0).unwrap(),
            0.5f64.exp(),
            epsilon = 1e-15
        );
        assert!(gaussian_quad_exp_moment(0.0, 0.5).is_err());
        assert!(gaussian_quad_exp_moment(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn quad_exp_moment_against_trapezoid() {
        // brute-force integral on a wide grid, independent of the closed form
        let integrate = |u: f64, v: f64| {
            let (lo, hi, m) = (-40.0, 40.0, 160_000);
            let dz = (hi - lo) / m as f64;
            let mut acc = 0.0;
            for i in 0..=m {
                let z: f64 = lo + i as f64 * dz;
                let c = if i == 0 || i == m { 0.5 } else { 1.0 };
                acc += c * (u * z + (v - 0.5) * z * z).exp();
            }
            acc * dz / (2.0 * PI).sqrt()
        };
        for &(u, v) in &[(0.0, 0.2), (1.5, 0.2), (-3.0, 0.1), (2.0, -0.7)] {
            let closed = gaussian_quad_exp_moment(u, v).unwrap();
            let num = integrate(u, v);
            assert!(((closed - num) / closed).abs() < 1e-10, "{u} {v}: {closed} vs {num}");
        }
    }

    #[test]
    fn lipschitz_is_finite_and_dominates() {
        let la = rad(0.3);
        let c = la.lipschitz_bound(4.0).unwrap();
        assert!(c.is_finite() && c > 0.0);
        assert!(c >= la.dq_lin_dx(0.0).unwrap().abs());
        assert!(la.lipschitz_bound(0.0).is_err());
    }
}
