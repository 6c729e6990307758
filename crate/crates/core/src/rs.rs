//! Replica-symmetric solution: the fixed point `q = q_lin(2 q t)`, the limiting
//! free energy and the variational function it minimizes.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_nonneg, LabError, Result};
use crate::gaussian::{LinearModel, DEFAULT_LIPSCHITZ_XMAX};

pub const FIXED_POINT_TOL: f64 = 1e-12;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RsSolution {
    pub t: f64,
    pub h: f64,
    pub q_c: f64,
    pub alpha_inf: f64,
    /// Sufficient threshold `1 / (4 C)`; below it the fixed point is unique.
    pub t_c: f64,
    pub iterations: usize,
    /// `|q_c - q_lin(2 q_c t)|`
    pub residual: f64,
    /// `t <= t_c`, i.e. the map is a 1/2-contraction and the root is unique.
    pub certified: bool,
}

/// One point of the variational function `f(q) = alpha_lin(2 q t) + t q^2 / 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FPoint {
    pub q: f64,
    pub f: f64,
    pub df: f64,
}

/// `t_c = 1 / (4 C)` with `C` the grid Lipschitz bound of `q_lin` on `[0, x_max]`.
pub fn t_c_estimate(la: &LinearModel) -> Result<f64> {
    t_c_estimate_with(la, DEFAULT_LIPSCHITZ_XMAX)
}

pub fn t_c_estimate_with(la: &LinearModel, x_max: f64) -> Result<f64> {
    let c = la.lipschitz_bound(x_max)?;
    if c == 0.0 {
        // q_lin is flat, every t is admissible
        return Ok(f64::INFINITY);
    }
    Ok(1.0 / (4.0 * c))
}

/// `alpha_inf(t) = alpha_lin(2 q t) + t q^2 / 2`.
pub fn alpha_infinity(la: &LinearModel, t: f64, q: f64) -> Result<f64> {
    ensure_nonneg(t, "t")?;
    if !(0.0..=1.0).contains(&q) {
        return Err(LabError::InvalidParameter(format!(
            "q must lie in [0, 1], got {q}"
        )));
    }
    Ok(la.alpha_lin(2.0 * q * t)? + 0.5 * t * q * q)
}

/// Evaluates `f(q)` and `f'(q) = t (q - q_lin(2 q t))` on a grid.
pub fn f_scan(la: &LinearModel, t: f64, q_grid: &[f64]) -> Result<Vec<FPoint>> {
    ensure_nonneg(t, "t")?;
    q_grid
        .iter()
        .map(|&q| {
            if !(0.0..=1.5).contains(&q) {
                return Err(LabError::InvalidParameter(format!(
                    "f_scan grid point {q} outside [0, 1.5]"
                )));
            }
            let x = 2.0 * q * t;
            Ok(FPoint {
                q,
                f: la.alpha_lin(x)? + 0.5 * t * q * q,
                df: t * (q - la.q_lin(x)?),
            })
        })
        .collect()
}

/// Fixed-point solver bound to one linear model, caching its `t_c`.
#[derive(Clone, Debug)]
pub struct RsSolver<'a> {
    la: &'a LinearModel,
    t_c: f64,
}

impl<'a> RsSolver<'a> {
    pub fn new(la: &'a LinearModel) -> Result<Self> {
        Ok(Self {
            la,
            t_c: t_c_estimate(la)?,
        })
    }

    pub fn with_t_c(la: &'a LinearModel, t_c: f64) -> Self {
        Self { la, t_c }
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    /// The map `q -> q_lin(2 q t)`.
    pub fn map(&self, t: f64, q: f64) -> f64 {
        self.la.q_lin_unchecked(2.0 * q * t)
    }

    /// Solves from the default start `q_0 = q_lin(0)`.
    pub fn solve(&self, t: f64) -> Result<RsSolution> {
        ensure_nonneg(t, "t")?;
        let q0 = self.la.q_lin_unchecked(0.0);
        self.solve_from(t, q0)
    }

    pub fn solve_from(&self, t: f64, q0: f64) -> Result<RsSolution> {
        ensure_nonneg(t, "t")?;
        if !(0.0..=1.0).contains(&q0) {
            return Err(LabError::InvalidParameter(format!(
                "starting point {q0} outside [0, 1]"
            )));
        }
        let mut q = q0;
        for k in 0..FIXED_POINT_MAX_ITER {
            let next = self.map(t, q);
            let residual = (next - q).abs();
            if residual <= FIXED_POINT_TOL {
                return Ok(RsSolution {
                    t,
                    h: self.la.h(),
                    q_c: q,
                    alpha_inf: alpha_infinity(self.la, t, q)?,
                    t_c: self.t_c,
                    iterations: k,
                    residual,
                    certified: t <= self.t_c,
                });
            }
            q = next;
        }
        Err(LabError::NonConvergence {
            iterations: FIXED_POINT_MAX_ITER,
            last: q,
            residual: (self.map(t, q) - q).abs(),
        })
    }

    /// The first `steps` iterates `q_0, q_1, ...` of the fixed-point map.
    pub fn trace(&self, t: f64, q0: f64, steps: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(steps + 1);
        let mut q = q0;
        out.push(q);
        for _ in 0..steps {
            q = self.map(t, q);
            out.push(q);
        }
        out
    }
}

/// Convenience wrapper: solve `q = q_lin(2 q t)` with a freshly estimated `t_c`.
pub fn solve_fixed_point(la: &LinearModel, t: f64) -> Result<RsSolution> {
    RsSolver::new(la)?.solve(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::HermiteRule;
    use crate::spins::{PhiEvaluator, SpinDistribution};
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
    fn zero_temperature_parameter_is_one_evaluation() {
        let la = rad(0.3);
        let s = solve_fixed_point(&la, 0.0).unwrap();
        assert_abs_diff_eq!(s.q_c, 0.3f64.tanh().powi(2), epsilon = 1e-14);
        assert_eq!(s.iterations, 0);
        assert_abs_diff_eq!(s.alpha_inf, 0.3f64.cosh().ln(), epsilon = 1e-14);
    }

    #[test]
    fn zero_field_has_zero_overlap() {
        let la = rad(0.0);
        let solver = RsSolver::new(&la).unwrap();
        let s = solver.solve(0.5 * solver.t_c()).unwrap();
        assert_eq!(s.q_c, 0.0);
        assert!(s.certified);
        assert_abs_diff_eq!(s.alpha_inf, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let la = rad(0.3);
        assert!(alpha_infinity(&la, 0.1, 1.2).is_err());
        assert!(alpha_infinity(&la, -0.1, 0.2).is_err());
        assert!(f_scan(&la, 0.1, &[2.0]).is_err());
        let solver = RsSolver::new(&la).unwrap();
        assert!(solver.solve(-1.0).is_err());
        assert!(solver.solve_from(0.1, 1.5).is_err());
    }
}
