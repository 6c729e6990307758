//! Quenched finite-n experiments. Every derivative is a centered finite
//! difference evaluated on the same disorder realizations as the bracket it is
//! compared with, and every tolerance is `max(abs_tol, 3 * std_err)` of the
//! per-disorder discrepancy.

use serde::{Deserialize, Serialize};

use super::average::{collect, DisorderAverage, Estimate, SampleSet};
use super::enumerate::{
    coupled_gibbs, gibbs_overlap_moments, log_z_exact, Coupling, GibbsParams,
};
use crate::error::{ensure_nonneg, LabError, Result};
use crate::gaussian::LinearModel;
use crate::rs::RsSolution;
use crate::spins::SpinDistribution;

/// Finite-difference step for free-energy derivatives.
pub const DEFAULT_FD_STEP: f64 = 1e-3;
/// Absolute floor of every statistical tolerance.
pub const DEFAULT_ABS_TOL: f64 = 1e-4;
/// Largest coupling for which the overlap concentration bound is proved.
pub const CONCENTRATION_LAMBDA_MAX: f64 = 1.0 / 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdOptions {
    pub step: f64,
    pub abs_tol: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self {
            step: DEFAULT_FD_STEP,
            abs_tol: DEFAULT_ABS_TOL,
        }
    }
}

impl FdOptions {
    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "finite-difference step must be > 0, got {}",
                self.step
            )));
        }
        ensure_nonneg(self.abs_tol, "abs_tol")
    }

    fn tolerance(&self, std_err: f64) -> f64 {
        self.abs_tol.max(3.0 * std_err)
    }
}

/// One identity `finite difference == bracket` checked under the disorder average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub finite_difference: f64,
    pub bracket: f64,
    pub discrepancy: f64,
    pub std_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl DerivativeCheck {
    fn from_rows(
        set: &SampleSet,
        opts: &FdOptions,
        fd: impl Fn(&[f64]) -> f64,
        bracket: impl Fn(&[f64]) -> f64,
    ) -> Self {
        let f = set.estimate(&fd);
        let b = set.estimate(&bracket);
        let d = set.estimate(|r| fd(r) - bracket(r));
        let tolerance = opts.tolerance(d.std_err);
        Self {
            finite_difference: f.mean,
            bracket: b.mean,
            discrepancy: d.mean,
            std_err: d.std_err,
            tolerance,
            pass: d.mean.abs() <= tolerance,
        }
    }
}

/// `E[(1/n) log Z]` at one parameter point.
pub fn quenched_free_energy(
    dist: &SpinDistribution,
    n: usize,
    p: GibbsParams,
    avg: &DisorderAverage,
) -> Result<Estimate> {
    p.validate()?;
    let nf = n as f64;
    let set = collect(n, avg, |d| Ok(vec![log_z_exact(d, dist, p)? / nf]))?;
    Ok(set.column(0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearOverlapReport {
    pub n: usize,
    pub x: f64,
    pub h: f64,
    pub mean_overlap: Estimate,
    pub q_lin: f64,
    pub pass: bool,
}

/// Disorder-averaged `<R>` of the linear model (`t = 0`) against `q_lin(x)`.
pub fn linear_overlap_experiment(
    la: &LinearModel,
    n: usize,
    x: f64,
    avg: &DisorderAverage,
) -> Result<LinearOverlapReport> {
    let q_lin = la.q_lin(x)?;
    let dist = la.evaluator().dist();
    let p = GibbsParams::new(0.0, x, la.h());
    let set = collect(n, avg, |d| {
        Ok(vec![gibbs_overlap_moments(d, dist, p)?.mean_overlap])
    })?;
    let mean_overlap = set.column(0);
    let pass = (mean_overlap.mean - q_lin).abs() <= (3.0 * mean_overlap.std_err).max(1e-12);
    Ok(LinearOverlapReport {
        n,
        x,
        h: la.h(),
        mean_overlap,
        q_lin,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpSingleReport {
    pub n: usize,
    pub params: GibbsParams,
    /// `d alpha / dt = -<R^2> / 2`; absent when `t < step`
    pub dt: Option<DerivativeCheck>,
    /// `d alpha / dx = -<R> / 2`; absent when `x < step`
    pub dx: Option<DerivativeCheck>,
    pub mean_overlap: Estimate,
    pub mean_overlap_sq: Estimate,
    pub pass: bool,
}

/// Checks `d alpha_n/dt = -E<R^2>/2` and `d alpha_n/dx = -E<R>/2`.
pub fn verify_ibp_single(
    dist: &SpinDistribution,
    n: usize,
    p: GibbsParams,
    avg: &DisorderAverage,
    opts: &FdOptions,
) -> Result<IbpSingleReport> {
    p.validate()?;
    opts.validate()?;
    let delta = opts.step;
    let nf = n as f64;
    let with_t = p.t >= delta;
    let with_x = p.x >= delta;
    let set = collect(n, avg, |d| {
        let center = gibbs_overlap_moments(d, dist, p)?;
        let fd_t = if with_t {
            let up = log_z_exact(d, dist, GibbsParams { t: p.t + delta, ..p })?;
            let dn = log_z_exact(d, dist, GibbsParams { t: p.t - delta, ..p })?;
            (up - dn) / (2.0 * delta * nf)
        } else {
            f64::NAN
        };
        let fd_x = if with_x {
            let up = log_z_exact(d, dist, GibbsParams { x: p.x + delta, ..p })?;
            let dn = log_z_exact(d, dist, GibbsParams { x: p.x - delta, ..p })?;
            (up - dn) / (2.0 * delta * nf)
        } else {
            f64::NAN
        };
        Ok(vec![fd_t, fd_x, center.mean_overlap, center.mean_overlap_sq])
    })?;
    let dt = with_t.then(|| DerivativeCheck::from_rows(&set, opts, |r| r[0], |r| -0.5 * r[3]));
    let dx = with_x.then(|| DerivativeCheck::from_rows(&set, opts, |r| r[1], |r| -0.5 * r[2]));
    let pass = dt.is_none_or(|c| c.pass) && dx.is_none_or(|c| c.pass);
    Ok(IbpSingleReport {
        n,
        params: p,
        dt,
        dx,
        mean_overlap: set.column(2),
        mean_overlap_sq: set.column(3),
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpCoupledReport {
    pub n: usize,
    pub params: GibbsParams,
    pub lambda: f64,
    pub q: f64,
    /// `d beta/dt = (<R12^2> - 2 <R13^2>) / 2`
    pub dt: Option<DerivativeCheck>,
    /// `d beta/dx = (<R12> - 2 <R13>) / 2`
    pub dx: Option<DerivativeCheck>,
    /// `d beta/dlambda = <(q - R12)^2> / 2`
    pub dlambda: DerivativeCheck,
    pub pass: bool,
}

/// Derivatives of the coupled free energy `beta_n = E log Z_pair / (2n)`
/// against their four-replica brackets.
pub fn verify_ibp_coupled(
    dist: &SpinDistribution,
    n: usize,
    p: GibbsParams,
    lambda: f64,
    q: f64,
    avg: &DisorderAverage,
    opts: &FdOptions,
) -> Result<IbpCoupledReport> {
    p.validate()?;
    opts.validate()?;
    let delta = opts.step;
    let norm = 2.0 * n as f64;
    let with_t = p.t >= delta;
    let with_x = p.x >= delta;
    let coupling = |l: f64| Coupling::Quadratic { lambda: l, q };
    let set = collect(n, avg, |d| {
        let c = coupled_gibbs(d, dist, p, coupling(lambda))?;
        let lz = |pp: GibbsParams, l: f64| -> Result<f64> {
            Ok(coupled_gibbs(d, dist, pp, coupling(l))?.log_z)
        };
        let fd_t = if with_t {
            (lz(GibbsParams { t: p.t + delta, ..p }, lambda)?
                - lz(GibbsParams { t: p.t - delta, ..p }, lambda)?)
                / (2.0 * delta * norm)
        } else {
            f64::NAN
        };
        let fd_x = if with_x {
            (lz(GibbsParams { x: p.x + delta, ..p }, lambda)?
                - lz(GibbsParams { x: p.x - delta, ..p }, lambda)?)
                / (2.0 * delta * norm)
        } else {
            f64::NAN
        };
        let fd_l = (lz(p, lambda + delta)? - lz(p, lambda - delta)?) / (2.0 * delta * norm);
        Ok(vec![
            fd_t,
            fd_x,
            fd_l,
            c.overlap,
            c.overlap_sq,
            c.deviation_sq,
            c.cross_overlap,
            c.cross_overlap_sq,
        ])
    })?;
    let dt = with_t.then(|| {
        DerivativeCheck::from_rows(&set, opts, |r| r[0], |r| 0.5 * (r[4] - 2.0 * r[7]))
    });
    let dx = with_x.then(|| {
        DerivativeCheck::from_rows(&set, opts, |r| r[1], |r| 0.5 * (r[3] - 2.0 * r[6]))
    });
    let dlambda = DerivativeCheck::from_rows(&set, opts, |r| r[2], |r| 0.5 * r[5]);
    let pass = dt.is_none_or(|c| c.pass) && dx.is_none_or(|c| c.pass) && dlambda.pass;
    Ok(IbpCoupledReport {
        n,
        params: p,
        lambda,
        q,
        dt,
        dx,
        dlambda,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationStep {
    pub s_mid: f64,
    pub finite_difference: f64,
    /// `(q^2 - <(R - q)^2>) / 2`, trapezoid average over the step
    pub predicted: f64,
    pub discrepancy: f64,
    pub std_err: f64,
    pub tolerance: f64,
    pub identity_ok: bool,
    /// `finite_difference <= q^2 / 2 + tolerance`
    pub bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRuleCheck {
    /// `alpha_n(t, 0)`
    pub lhs: f64,
    /// `alpha_lin(x0) + t q^2 / 2 - (1/2) int_0^t E<(q - R)^2> ds`
    pub rhs: f64,
    pub integral: f64,
    pub trapezoid_error: f64,
    pub std_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpperBoundCheck {
    pub alpha_n: f64,
    pub std_err: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub n: usize,
    pub t: f64,
    pub x0: f64,
    pub q: f64,
    pub s_grid: Vec<f64>,
    /// `E[(1/n) log Z(s, x0 - 2 q s)]` along the grid
    pub alpha_tilde: Vec<f64>,
    pub alpha_tilde_std_err: Vec<f64>,
    /// `E<(q - R)^2>` along the grid
    pub deviation_sq: Vec<f64>,
    pub steps: Vec<InterpolationStep>,
    pub max_discrepancy: f64,
    pub identity_failures: usize,
    pub deriv_bound_violations: usize,
    pub sum_rule: SumRuleCheck,
    pub sum_rule_residual: f64,
    /// `h_n(s) = (1/2) int_0^s E<(q - R)^2>`, cumulative trapezoid
    pub h_n_values: Vec<f64>,
    /// `alpha_lin(x0) + s q^2 / 2 - alpha_n(s, x0 - 2 q s)`, equal to `h_n` by
    /// the sum rule; zero at `s = 0` since the path starts at the linear model
    pub h_n_gap: Vec<f64>,
    pub h_n_gap_std_err: Vec<f64>,
    pub upper_bound: UpperBoundCheck,
}

/// Moves along `x(s) = x0 - 2 q s`, `x0 = 2 q t`, from the linear model at
/// `s = 0` to the SK model at `s = t`.
pub fn interpolation_experiment(
    la: &LinearModel,
    n: usize,
    t: f64,
    q: f64,
    steps: usize,
    avg: &DisorderAverage,
    abs_tol: f64,
) -> Result<InterpolationReport> {
    ensure_nonneg(t, "t")?;
    ensure_nonneg(abs_tol, "abs_tol")?;
    if !(0.0..=1.0).contains(&q) {
        return Err(LabError::InvalidParameter(format!(
            "q must lie in [0, 1], got {q}"
        )));
    }
    if steps < 2 || !steps.is_multiple_of(2) {
        return Err(LabError::InvalidParameter(format!(
            "interpolation needs an even number of steps >= 2, got {steps}"
        )));
    }
    let dist = la.evaluator().dist();
    let h = la.h();
    let x0 = 2.0 * q * t;
    let nf = n as f64;
    let ds = t / steps as f64;
    let s_grid: Vec<f64> = (0..=steps).map(|k| k as f64 * ds).collect();
    // x(s) = 2 q (t - s), exact zero at the last point
    let x_grid: Vec<f64> = (0..=steps)
        .map(|k| 2.0 * q * t * (steps - k) as f64 / steps as f64)
        .collect();

    // row layout: [alpha_0, dev_0, alpha_1, dev_1, ...]
    let set = collect(n, avg, |d| {
        let mut row = Vec::with_capacity(2 * (steps + 1));
        for k in 0..=steps {
            let rep = gibbs_overlap_moments(d, dist, GibbsParams::new(s_grid[k], x_grid[k], h))?;
            let dev = rep.mean_overlap_sq - 2.0 * q * rep.mean_overlap + q * q;
            row.push(rep.log_z / nf);
            row.push(dev);
        }
        Ok(row)
    })?;
    let alpha = |r: &[f64], k: usize| r[2 * k];
    let dev = |r: &[f64], k: usize| r[2 * k + 1];

    let alpha_est: Vec<Estimate> = (0..=steps).map(|k| set.estimate(|r| alpha(r, k))).collect();
    let dev_est: Vec<Estimate> = (0..=steps).map(|k| set.estimate(|r| dev(r, k))).collect();

    let tol = |se: f64| abs_tol.max(3.0 * se);
    let half_q2 = 0.5 * q * q;
    let mut step_reports = Vec::with_capacity(steps);
    for k in 0..steps {
        let fd = |r: &[f64]| (alpha(r, k + 1) - alpha(r, k)) / ds;
        let pred = |r: &[f64]| half_q2 - 0.25 * (dev(r, k) + dev(r, k + 1));
        let f = set.estimate(fd);
        let p = set.estimate(pred);
        let diff = set.estimate(|r| fd(r) - pred(r));
        let tolerance = tol(diff.std_err);
        step_reports.push(InterpolationStep {
            s_mid: 0.5 * (s_grid[k] + s_grid[k + 1]),
            finite_difference: f.mean,
            predicted: p.mean,
            discrepancy: diff.mean,
            std_err: diff.std_err,
            tolerance,
            identity_ok: diff.mean.abs() <= tolerance,
            bound_ok: f.mean <= half_q2 + tolerance,
        });
    }

    let alpha_lin_x0 = la.alpha_lin(x0)?;
    let trapezoid = |r: &[f64], stride: usize| {
        let h = ds * stride as f64;
        let mut acc = 0.5 * (dev(r, 0) + dev(r, steps));
        let mut k = stride;
        while k < steps {
            acc += dev(r, k);
            k += stride;
        }
        acc * h
    };
    let integral = set.estimate(|r| trapezoid(r, 1));
    let coarse = set.estimate(|r| trapezoid(r, 2));
    // Richardson estimate of the fine-grid error, halved with the integral
    let trapezoid_error = 0.5 * (integral.mean - coarse.mean).abs() / 3.0;
    let rhs_const = alpha_lin_x0 + 0.5 * t * q * q;
    let residual = set.estimate(|r| alpha(r, steps) - (rhs_const - 0.5 * trapezoid(r, 1)));
    let sum_tol = trapezoid_error + 3.0 * residual.std_err + 1e-12;
    let sum_rule = SumRuleCheck {
        lhs: alpha_est[steps].mean,
        rhs: rhs_const - 0.5 * integral.mean,
        integral: integral.mean,
        trapezoid_error,
        std_err: residual.std_err,
        tolerance: sum_tol,
        pass: residual.mean.abs() <= sum_tol,
    };

    let mut h_n_values = vec![0.0];
    let mut h_n_gap = vec![0.0];
    let mut h_n_gap_std_err = vec![0.0];
    for k in 1..=steps {
        let last = h_n_values[k - 1];
        h_n_values.push(last + 0.25 * ds * (dev_est[k - 1].mean + dev_est[k].mean));
        h_n_gap.push(alpha_lin_x0 + 0.5 * s_grid[k] * q * q - alpha_est[k].mean);
        h_n_gap_std_err.push(alpha_est[k].std_err);
    }

    let last = alpha_est[steps];
    let upper_bound = UpperBoundCheck {
        alpha_n: last.mean,
        std_err: last.std_err,
        bound: rhs_const,
        pass: last.mean <= rhs_const + 3.0 * last.std_err,
    };

    Ok(InterpolationReport {
        n,
        t,
        x0,
        q,
        alpha_tilde: alpha_est.iter().map(|e| e.mean).collect(),
        alpha_tilde_std_err: alpha_est.iter().map(|e| e.std_err).collect(),
        deviation_sq: dev_est.iter().map(|e| e.mean).collect(),
        s_grid,
        max_discrepancy: step_reports
            .iter()
            .map(|s| s.discrepancy.abs())
            .fold(0.0, f64::max),
        identity_failures: step_reports.iter().filter(|s| !s.identity_ok).count(),
        deriv_bound_violations: step_reports.iter().filter(|s| !s.bound_ok).count(),
        steps: step_reports,
        sum_rule_residual: residual.mean.abs(),
        sum_rule,
        h_n_values,
        h_n_gap,
        h_n_gap_std_err,
        upper_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactOneReport {
    /// `beta_n(t, x0 - 2 q t, lambda)`
    pub lhs: f64,
    /// `beta_n(0, x0, lambda + t) + t q^2 / 2`
    pub rhs: f64,
    pub std_err: f64,
    pub pass: bool,
}

/// Comparison of coupled free energies at the two ends of the path
/// `x(s) = x0 - 2 q s`, `lambda(s) = lambda + t - s`.
#[allow(clippy::too_many_arguments)]
pub fn fact_one_check(
    dist: &SpinDistribution,
    n: usize,
    t: f64,
    x0: f64,
    h: f64,
    q: f64,
    lambda: f64,
    avg: &DisorderAverage,
) -> Result<FactOneReport> {
    ensure_nonneg(lambda, "lambda")?;
    ensure_nonneg(q, "q")?;
    let x_end = x0 - 2.0 * q * t;
    if x_end < 0.0 {
        return Err(LabError::InvalidParameter(format!(
            "need x0 >= 2 q t, got x0 = {x0}, 2 q t = {}",
            2.0 * q * t
        )));
    }
    let norm = 2.0 * n as f64;
    let set = collect(n, avg, |d| {
        let end = coupled_gibbs(
            d,
            dist,
            GibbsParams::new(t, x_end, h),
            Coupling::Quadratic { lambda, q },
        )?;
        let start = coupled_gibbs(
            d,
            dist,
            GibbsParams::new(0.0, x0, h),
            Coupling::Quadratic {
                lambda: lambda + t,
                q,
            },
        )?;
        Ok(vec![end.log_z / norm, start.log_z / norm])
    })?;
    let shift = 0.5 * t * q * q;
    let diff = set.estimate(|r| r[0] - r[1] - shift);
    Ok(FactOneReport {
        lhs: set.column(0).mean,
        rhs: set.column(1).mean + shift,
        std_err: diff.std_err,
        pass: diff.mean <= 3.0 * diff.std_err + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub n: usize,
    /// `E log <exp(lambda n (R - q)^2)>`
    pub value: f64,
    pub std_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub x: f64,
    pub h: f64,
    pub lambda: f64,
    pub q: f64,
    /// `lambda <= 1/20`
    pub in_proved_regime: bool,
    pub bound: Option<f64>,
    pub points: Vec<ConcentrationPoint>,
    /// every value below `bound + 3 std_err`
    pub below_bound: Option<bool>,
    /// weighted least-squares slope of `value` against `n`, with its standard error
    pub slope: Option<Estimate>,
    /// `slope <= 3 std_err`: the sequence does not grow with `n`
    pub non_increasing: Option<bool>,
}

/// Log ratio of coupled to uncoupled two-replica partition functions of the
/// linear model at `q = q_lin(x)`, for each `n`.
pub fn concentration_experiment(
    la: &LinearModel,
    n_list: &[usize],
    x: f64,
    lambda: f64,
    avg: &DisorderAverage,
) -> Result<ConcentrationReport> {
    ensure_nonneg(lambda, "lambda")?;
    let q = la.q_lin(x)?;
    let dist = la.evaluator().dist();
    let p = GibbsParams::new(0.0, x, la.h());
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let set = collect(n, avg, |d| {
            let pair = coupled_gibbs(d, dist, p, Coupling::Quadratic { lambda, q })?;
            Ok(vec![pair.log_z - 2.0 * log_z_exact(d, dist, p)?])
        })?;
        let e = set.column(0);
        points.push(ConcentrationPoint {
            n,
            value: e.mean,
            std_err: e.std_err,
        });
    }
    let bound = la.concentration_bound(x, lambda).ok();
    let below_bound =
        bound.map(|b| points.iter().all(|p| p.value <= b + 3.0 * p.std_err));
    let slope = trend_slope(&points);
    Ok(ConcentrationReport {
        x,
        h: la.h(),
        lambda,
        q,
        in_proved_regime: lambda <= CONCENTRATION_LAMBDA_MAX,
        bound,
        points,
        below_bound,
        slope,
        non_increasing: slope.map(|s| s.mean <= 3.0 * s.std_err + 1e-12),
    })
}

/// Inverse-variance weighted regression of `value` on `n`. Points with zero
/// standard error get unit weight, which makes the fit ordinary least squares.
fn trend_slope(points: &[ConcentrationPoint]) -> Option<Estimate> {
    if points.len() < 2 {
        return None;
    }
    let exact = points.iter().any(|p| p.std_err == 0.0);
    let w: Vec<f64> = points
        .iter()
        .map(|p| if exact { 1.0 } else { 1.0 / (p.std_err * p.std_err) })
        .collect();
    let sw: f64 = w.iter().sum();
    let xbar = points.iter().zip(&w).map(|(p, w)| w * p.n as f64).sum::<f64>() / sw;
    let ybar = points.iter().zip(&w).map(|(p, w)| w * p.value).sum::<f64>() / sw;
    let sxx: f64 = points
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.n as f64 - xbar).powi(2))
        .sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points
        .iter()
        .zip(&w)
        .map(|(p, w)| w * (p.n as f64 - xbar) * (p.value - ybar))
        .sum();
    Some(Estimate {
        mean: sxy / sxx,
        std_err: if exact { 0.0 } else { (1.0 / sxx).sqrt() },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub alpha_n: f64,
    pub std_err: f64,
    pub alpha_inf: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub t: f64,
    pub h: f64,
    pub q_c: f64,
    pub alpha_inf: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `alpha_n <= alpha_inf + 3 std_err` for every row
    pub upper_bound_holds: bool,
    /// `|gap|` non-increasing in `n` up to one combined standard error
    pub gap_non_increasing: bool,
}

/// Quenched SK free energy (`x = 0`) for each `n` against the RS value.
pub fn convergence_experiment(
    la: &LinearModel,
    solution: &RsSolution,
    n_list: &[usize],
    avg: &DisorderAverage,
) -> Result<ConvergenceReport> {
    let dist = la.evaluator().dist();
    let p = GibbsParams::new(solution.t, 0.0, la.h());
    let alpha_inf = solution.alpha_inf;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let e = quenched_free_energy(dist, n, p, avg)?;
        rows.push(ConvergenceRow {
            n,
            alpha_n: e.mean,
            std_err: e.std_err,
            alpha_inf,
            gap: e.mean - alpha_inf,
        });
    }
    let upper_bound_holds = rows
        .iter()
        .all(|r| r.alpha_n <= alpha_inf + 3.0 * r.std_err + 1e-12);
    let gap_non_increasing = rows.windows(2).all(|w| {
        let combined = w[0].std_err.hypot(w[1].std_err);
        w[1].gap.abs() <= w[0].gap.abs() + combined + 1e-12
    });
    Ok(ConvergenceReport {
        t: solution.t,
        h: la.h(),
        q_c: solution.q_c,
        alpha_inf,
        rows,
        upper_bound_holds,
        gap_non_increasing,
    })
}
