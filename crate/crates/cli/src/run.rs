//! Command implementations. Each returns the `result` part of the output
//! document and an optional CSV table.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sklab::lab::{
    concentration_experiment, convergence_experiment, interpolation_experiment,
    linear_overlap_experiment, verify_ibp_coupled, verify_ibp_single, DisorderAverage, FdOptions,
    GibbsParams,
};
use sklab::rs::{t_c_estimate_with, RsSolver};
use sklab::{HermiteRule, LabError, LinearModel, PhiEvaluator};

use crate::config::{Command, ConfigError, ExperimentConfig};

pub enum RunError {
    Config(ConfigError),
    Lab(LabError),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<LabError> for RunError {
    fn from(e: LabError) -> Self {
        RunError::Lab(e)
    }
}

/// Header plus rows of numbers.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

pub struct Outcome {
    pub result: Value,
    pub table: Option<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize to JSON")
}

struct Context {
    la: LinearModel,
    avg: DisorderAverage,
}

impl Context {
    fn new(cfg: &ExperimentConfig) -> Result<Self, RunError> {
        let dist = cfg.dist.build()?;
        let la = LinearModel::new(
            PhiEvaluator::new(dist),
            HermiteRule::new(cfg.hermite_order)?,
            cfg.h,
        )?;
        let avg = match cfg.quadrature_order {
            Some(order) => DisorderAverage::Quadrature { order },
            None => DisorderAverage::monte_carlo(cfg.samples, cfg.seed),
        };
        Ok(Self { la, avg })
    }

    fn solver(&self, cfg: &ExperimentConfig) -> Result<RsSolver<'_>, RunError> {
        let t_c = t_c_estimate_with(&self.la, cfg.lipschitz_xmax)?;
        Ok(RsSolver::with_t_c(&self.la, t_c))
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, RunError> {
    let ctx = Context::new(cfg)?;
    match cfg.command {
        Command::RsSolve => rs_solve(cfg, &ctx),
        Command::Linear => linear(cfg, &ctx),
        Command::Simulate => simulate(cfg, &ctx),
        Command::Interpolate => interpolate(cfg, &ctx),
        Command::VerifyIbp => verify_ibp(cfg, &ctx),
        Command::Concentration => concentration(cfg, &ctx),
        Command::Run => unreachable!("resolved configs name a concrete command"),
    }
}

fn rs_solve(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let sol = ctx.solver(cfg)?.solve(cfg.t)?;
    let table = Table {
        header: vec!["t", "h", "q_c", "alpha_inf", "t_c"],
        rows: vec![vec![sol.t, sol.h, sol.q_c, sol.alpha_inf, sol.t_c]],
    };
    Ok(Outcome {
        result: to_value(&sol),
        table: Some(table),
    })
}

fn linear(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let la = &ctx.la;
    let x = cfg.x;
    let overlap = cfg
        .n
        .iter()
        .map(|&n| linear_overlap_experiment(la, n, x, &ctx.avg))
        .collect::<Result<Vec<_>, _>>()?;
    let lipschitz = la.lipschitz_bound(cfg.lipschitz_xmax)?;
    let result = json!({
        "x": x,
        "h": la.h(),
        "q_lin": la.q_lin(x)?,
        "alpha_lin": la.alpha_lin(x)?,
        "dq_lin_dx": la.dq_lin_dx(x)?,
        "overlap_field_variance": la.overlap_field_variance(x)?,
        "lipschitz_bound": lipschitz,
        "t_c": t_c_estimate_with(la, cfg.lipschitz_xmax)?,
        "overlap": to_value(&overlap),
    });
    let table = (!overlap.is_empty()).then(|| Table {
        header: vec!["n", "x", "h", "mean_overlap", "std_err", "q_lin"],
        rows: overlap
            .iter()
            .map(|r| {
                vec![
                    r.n as f64,
                    r.x,
                    r.h,
                    r.mean_overlap.mean,
                    r.mean_overlap.std_err,
                    r.q_lin,
                ]
            })
            .collect(),
    });
    Ok(Outcome { result, table })
}

fn simulate(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let sol = ctx.solver(cfg)?.solve(cfg.t)?;
    let rep = convergence_experiment(&ctx.la, &sol, &cfg.n, &ctx.avg)?;
    let table = Table {
        header: vec!["n", "alpha_n", "std_err", "alpha_inf", "gap"],
        rows: rep
            .rows
            .iter()
            .map(|r| vec![r.n as f64, r.alpha_n, r.std_err, r.alpha_inf, r.gap])
            .collect(),
    };
    Ok(Outcome {
        result: json!({ "solution": to_value(&sol), "convergence": to_value(&rep) }),
        table: Some(table),
    })
}

/// Reads `q_c` from a previous result document (`rs-solve` or `simulate`).
fn q_from_file(path: &Path) -> Result<f64, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| ConfigError(format!("{} is not JSON: {e}", path.display())))?;
    let r = &doc["result"];
    r["q_c"]
        .as_f64()
        .or_else(|| r["solution"]["q_c"].as_f64())
        .ok_or_else(|| {
            RunError::Config(ConfigError(format!(
                "{} has no result.q_c or result.solution.q_c",
                path.display()
            )))
        })
}

fn interpolate(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let (q, source) = match (&cfg.q, &cfg.q_from) {
        (Some(q), _) => (*q, "flag".to_string()),
        (None, Some(p)) => (q_from_file(p)?, format!("file:{}", p.display())),
        (None, None) => (ctx.solver(cfg)?.solve(cfg.t)?.q_c, "rs-solve".to_string()),
    };
    let mut reports = Vec::with_capacity(cfg.n.len());
    let mut rows = Vec::new();
    for &n in &cfg.n {
        let rep =
            interpolation_experiment(&ctx.la, n, cfg.t, q, cfg.steps, &ctx.avg, cfg.abs_tol)?;
        for k in 0..rep.s_grid.len() {
            rows.push(vec![
                n as f64,
                rep.s_grid[k],
                rep.alpha_tilde[k],
                rep.alpha_tilde_std_err[k],
                rep.deviation_sq[k],
                rep.h_n_values[k],
                rep.h_n_gap[k],
            ]);
        }
        reports.push(rep);
    }
    Ok(Outcome {
        result: json!({ "q": q, "q_source": source, "reports": to_value(&reports) }),
        table: Some(Table {
            header: vec!["n", "s", "alpha_tilde", "std_err", "deviation_sq", "h_n", "h_n_gap"],
            rows,
        }),
    })
}

fn verify_ibp(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let dist = ctx.la.evaluator().dist();
    let p = GibbsParams::new(cfg.t, cfg.x, cfg.h);
    let opts = FdOptions {
        step: cfg.fd_step,
        abs_tol: cfg.abs_tol,
    };
    let mut rows = Vec::new();
    let push = |rows: &mut Vec<Vec<f64>>, n: usize, which: f64, c: &sklab::lab::DerivativeCheck| {
        rows.push(vec![
            n as f64,
            which,
            c.finite_difference,
            c.bracket,
            c.discrepancy,
            c.std_err,
            c.tolerance,
            f64::from(u8::from(c.pass)),
        ]);
    };
    let result = if cfg.coupled {
        let q = match cfg.q {
            Some(q) => q,
            None => ctx.solver(cfg)?.solve(cfg.t)?.q_c,
        };
        let mut reports = Vec::new();
        for &n in &cfg.n {
            let r = verify_ibp_coupled(dist, n, p, cfg.lambda, q, &ctx.avg, &opts)?;
            for (k, c) in [r.dt, r.dx, Some(r.dlambda)].iter().enumerate() {
                if let Some(c) = c {
                    push(&mut rows, n, k as f64, c);
                }
            }
            reports.push(r);
        }
        json!({ "coupled": true, "pass": reports.iter().all(|r| r.pass), "reports": to_value(&reports) })
    } else {
        let mut reports = Vec::new();
        for &n in &cfg.n {
            let r = verify_ibp_single(dist, n, p, &ctx.avg, &opts)?;
            for (k, c) in [r.dt, r.dx].iter().enumerate() {
                if let Some(c) = c {
                    push(&mut rows, n, k as f64, c);
                }
            }
            reports.push(r);
        }
        json!({ "coupled": false, "pass": reports.iter().all(|r| r.pass), "reports": to_value(&reports) })
    };
    Ok(Outcome {
        result,
        table: Some(Table {
            // parameter: 0 = t, 1 = x, 2 = lambda
            header: vec![
                "n",
                "parameter",
                "finite_difference",
                "bracket",
                "discrepancy",
                "std_err",
                "tolerance",
                "pass",
            ],
            rows,
        }),
    })
}

fn concentration(cfg: &ExperimentConfig, ctx: &Context) -> Result<Outcome, RunError> {
    let rep = concentration_experiment(&ctx.la, &cfg.n, cfg.x, cfg.lambda, &ctx.avg)?;
    let bound = rep.bound.unwrap_or(f64::NAN);
    let table = Table {
        header: vec!["n", "value", "std_err", "bound"],
        rows: rep
            .points
            .iter()
            .map(|p| vec![p.n as f64, p.value, p.std_err, bound])
            .collect(),
    };
    Ok(Outcome {
        result: to_value(&rep),
        table: Some(table),
    })
}
