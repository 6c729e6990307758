//! Experiment configuration: CLI flags layered over an optional JSON config
//! file, resolved into one fully explicit `ExperimentConfig` that is echoed in
//! every result document and can be fed back through `--config`.

use std::path::{Path, PathBuf};

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sklab::gaussian::{DEFAULT_HERMITE_ORDER, DEFAULT_LIPSCHITZ_XMAX};
use sklab::lab::{DEFAULT_ABS_TOL, DEFAULT_FD_STEP};
use sklab::spins::DEFAULT_UNIFORM_NODES;
use sklab::SpinDistribution;

/// Seed used when neither `--seed` nor the config file provides one.
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_LAMBDA: f64 = 0.05;

#[derive(Subcommand, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Solve the replica-symmetric fixed point q = q_lin(2 q t)
    RsSolve,
    /// Linear-model overlap and free energy at x; with --n, also the finite-n overlap check
    Linear,
    /// Quenched free energy for each n against the replica-symmetric value
    Simulate,
    /// Interpolation from the linear model at s = 0 to the SK model at s = t
    Interpolate,
    /// Integration-by-parts derivative checks (single replica, or --coupled)
    VerifyIbp,
    /// Overlap concentration of the linear model at q = q_lin(x)
    Concentration,
    /// Re-run a configuration file; the command is taken from the file
    Run,
}

impl Command {
    fn default_n(self) -> Vec<usize> {
        match self {
            Command::RsSolve | Command::Linear | Command::Run => vec![],
            Command::Simulate => vec![8, 12, 16],
            Command::Interpolate => vec![10],
            Command::VerifyIbp => vec![8],
            Command::Concentration => vec![4, 6, 8, 10, 12],
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistName {
    Rademacher,
    Uniform,
    Discrete,
}

/// Spin law as written in config files and result echoes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistSpec {
    Rademacher,
    Uniform { nodes: usize },
    Discrete { atoms: Vec<[f64; 2]> },
}

impl DistSpec {
    pub fn build(&self) -> Result<SpinDistribution, ConfigError> {
        let r = match self {
            DistSpec::Rademacher => Ok(SpinDistribution::rademacher()),
            DistSpec::Uniform { nodes } => SpinDistribution::uniform(*nodes),
            DistSpec::Discrete { atoms } => {
                let pairs: Vec<(f64, f64)> = atoms.iter().map(|a| (a[0], a[1])).collect();
                SpinDistribution::discrete(&pairs)
            }
        };
        r.map_err(|e| ConfigError(e.to_string()))
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Flags shared by every subcommand. All optional: unset flags fall back to
/// the config file, then to the command defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// JSON config file; flags given on the command line win
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Spin law
    #[arg(long, value_enum, global = true)]
    pub dist: Option<DistName>,
    /// Gauss-Legendre nodes for --dist uniform [default: 32]
    #[arg(long, global = true)]
    pub nodes: Option<usize>,
    /// Atoms for --dist discrete as JSON, e.g. '[[-1,0.5],[1,0.5]]'
    #[arg(long, global = true)]
    pub atoms: Option<String>,
    /// System sizes, comma separated
    #[arg(long, value_delimiter = ',', global = true)]
    pub n: Option<Vec<usize>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub t: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub h: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Replica coupling strength [default: 0.05]
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Overlap reference q; defaults to the solved q_c (or q_lin(x) for concentration)
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Take q from the q_c of a previous result document
    #[arg(long, global = true)]
    pub q_from: Option<PathBuf>,
    /// Disorder samples per size [default: 200]
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Base seed of the disorder samples [default: 1]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Interpolation steps, even [default: 20]
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    /// Gauss-Hermite order for Gaussian expectations [default: 301]
    #[arg(long, global = true)]
    pub hermite_order: Option<usize>,
    /// Right end of the grid used for the Lipschitz constant [default: 4]
    #[arg(long, global = true)]
    pub lipschitz_xmax: Option<f64>,
    /// Finite-difference step [default: 1e-3]
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// Absolute tolerance floor of statistical checks [default: 1e-4]
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    /// verify-ibp: check the coupled two-replica identities
    #[arg(long, global = true)]
    pub coupled: bool,
    /// Average over (g_11, J_1) by tensor Gauss-Hermite quadrature of this order (n = 1 only)
    #[arg(long, global = true)]
    pub quadrature_order: Option<usize>,
    /// Worker threads; overrides SKLAB_WORKERS
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Write the JSON document here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Also write a CSV table here
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

/// One layer of configuration; also the config-file schema.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub command: Option<Command>,
    pub dist: Option<DistSpec>,
    pub n: Option<Vec<usize>>,
    pub t: Option<f64>,
    pub h: Option<f64>,
    pub x: Option<f64>,
    pub lambda: Option<f64>,
    pub q: Option<f64>,
    pub q_from: Option<PathBuf>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub hermite_order: Option<usize>,
    pub lipschitz_xmax: Option<f64>,
    pub fd_step: Option<f64>,
    pub abs_tol: Option<f64>,
    pub coupled: Option<bool>,
    pub quadrature_order: Option<usize>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

impl Layer {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("invalid config {}: {e}", path.display())))
    }

    /// `self` wins wherever it is set.
    fn over(self, base: Layer) -> Layer {
        Layer {
            command: self.command.or(base.command),
            dist: self.dist.or(base.dist),
            n: self.n.or(base.n),
            t: self.t.or(base.t),
            h: self.h.or(base.h),
            x: self.x.or(base.x),
            lambda: self.lambda.or(base.lambda),
            q: self.q.or(base.q),
            q_from: self.q_from.or(base.q_from),
            samples: self.samples.or(base.samples),
            seed: self.seed.or(base.seed),
            steps: self.steps.or(base.steps),
            hermite_order: self.hermite_order.or(base.hermite_order),
            lipschitz_xmax: self.lipschitz_xmax.or(base.lipschitz_xmax),
            fd_step: self.fd_step.or(base.fd_step),
            abs_tol: self.abs_tol.or(base.abs_tol),
            coupled: self.coupled.or(base.coupled),
            quadrature_order: self.quadrature_order.or(base.quadrature_order),
            out: self.out.or(base.out),
            csv: self.csv.or(base.csv),
        }
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub dist: DistSpec,
    pub n: Vec<usize>,
    pub t: f64,
    pub h: f64,
    pub x: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_from: Option<PathBuf>,
    pub samples: usize,
    pub seed: u64,
    pub steps: usize,
    pub hermite_order: usize,
    pub lipschitz_xmax: f64,
    pub fd_step: f64,
    pub abs_tol: f64,
    pub coupled: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature_order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Merges flags over the config file (if any) and fills in defaults.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self, ConfigError> {
        let file = match &flags.config {
            Some(p) => Layer::from_file(p)?,
            None => Layer::default(),
        };
        let command = match (command, file.command) {
            (Command::Run, Some(c)) if c != Command::Run => c,
            (Command::Run, _) => {
                return Err(ConfigError(
                    "`run` needs --config with a `command` field".into(),
                ))
            }
            (c, Some(f)) if f != c => {
                return Err(ConfigError(format!(
                    "config file is for `{}`, not `{}`",
                    name(f),
                    name(c)
                )))
            }
            (c, _) => c,
        };
        let dist = flag_dist(flags, file.dist.as_ref())?;
        let cli = Layer {
            command: Some(command),
            dist,
            n: flags.n.clone(),
            t: flags.t,
            h: flags.h,
            x: flags.x,
            lambda: flags.lambda,
            q: flags.q,
            q_from: flags.q_from.clone(),
            samples: flags.samples,
            seed: flags.seed,
            steps: flags.steps,
            hermite_order: flags.hermite_order,
            lipschitz_xmax: flags.lipschitz_xmax,
            fd_step: flags.fd_step,
            abs_tol: flags.abs_tol,
            coupled: flags.coupled.then_some(true),
            quadrature_order: flags.quadrature_order,
            out: flags.out.clone(),
            csv: flags.csv.clone(),
        };
        let m = cli.over(file);
        let cfg = ExperimentConfig {
            command,
            dist: m.dist.unwrap_or(DistSpec::Rademacher),
            n: m.n.unwrap_or_else(|| command.default_n()),
            t: m.t.unwrap_or(0.0),
            h: m.h.unwrap_or(0.0),
            x: m.x.unwrap_or(0.0),
            lambda: m.lambda.unwrap_or(DEFAULT_LAMBDA),
            q: m.q,
            q_from: m.q_from,
            samples: m.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: m.seed.unwrap_or(DEFAULT_SEED),
            steps: m.steps.unwrap_or(DEFAULT_STEPS),
            hermite_order: m.hermite_order.unwrap_or(DEFAULT_HERMITE_ORDER),
            lipschitz_xmax: m.lipschitz_xmax.unwrap_or(DEFAULT_LIPSCHITZ_XMAX),
            fd_step: m.fd_step.unwrap_or(DEFAULT_FD_STEP),
            abs_tol: m.abs_tol.unwrap_or(DEFAULT_ABS_TOL),
            coupled: m.coupled.unwrap_or(false),
            quadrature_order: m.quadrature_order,
            out: m.out,
            csv: m.csv,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (v, what) in [
            (self.t, "t"),
            (self.h, "h"),
            (self.x, "x"),
            (self.lambda, "lambda"),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError(format!("{what} must be finite and >= 0, got {v}")));
            }
        }
        if let Some(q) = self.q {
            if !(0.0..=1.0).contains(&q) {
                return Err(ConfigError(format!("q must lie in [0, 1], got {q}")));
            }
        }
        if self.q.is_some() && self.q_from.is_some() {
            return Err(ConfigError("give either q or q_from, not both".into()));
        }
        if self.n.contains(&0) {
            return Err(ConfigError("every n must be >= 1".into()));
        }
        let needs_n = !matches!(self.command, Command::RsSolve | Command::Linear);
        if needs_n && self.n.is_empty() {
            return Err(ConfigError("n list is empty".into()));
        }
        if self.quadrature_order.is_none() && needs_n && self.samples < 2 {
            return Err(ConfigError(format!(
                "samples must be >= 2, got {}",
                self.samples
            )));
        }
        if self.quadrature_order.is_some() && self.n.iter().any(|&n| n != 1) {
            return Err(ConfigError(
                "quadrature disorder averaging requires n = 1".into(),
            ));
        }
        if self.command == Command::Interpolate && (self.steps < 2 || !self.steps.is_multiple_of(2)) {
            return Err(ConfigError(format!(
                "steps must be even and >= 2, got {}",
                self.steps
            )));
        }
        if self.hermite_order == 0 {
            return Err(ConfigError("hermite_order must be >= 1".into()));
        }
        if !(self.lipschitz_xmax.is_finite() && self.lipschitz_xmax > 0.0) {
            return Err(ConfigError("lipschitz_xmax must be > 0".into()));
        }
        if !(self.fd_step.is_finite() && self.fd_step > 0.0) {
            return Err(ConfigError("fd_step must be > 0".into()));
        }
        if !(self.abs_tol.is_finite() && self.abs_tol >= 0.0) {
            return Err(ConfigError("abs_tol must be >= 0".into()));
        }
        self.dist.build().map(|_| ())
    }
}

pub fn name(c: Command) -> &'static str {
    match c {
        Command::RsSolve => "rs-solve",
        Command::Linear => "linear",
        Command::Simulate => "simulate",
        Command::Interpolate => "interpolate",
        Command::VerifyIbp => "verify-ibp",
        Command::Concentration => "concentration",
        Command::Run => "run",
    }
}

fn flag_dist(flags: &Flags, file: Option<&DistSpec>) -> Result<Option<DistSpec>, ConfigError> {
    let atoms = || -> Result<Vec<[f64; 2]>, ConfigError> {
        let text = flags
            .atoms
            .as_deref()
            .ok_or_else(|| ConfigError("--dist discrete needs --atoms".into()))?;
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid --atoms: {e}")))
    };
    let kind = match flags.dist {
        Some(k) => Some(k),
        // --nodes / --atoms alone refine the file's law of the same kind
        None => match file {
            Some(DistSpec::Uniform { .. }) if flags.nodes.is_some() => Some(DistName::Uniform),
            Some(DistSpec::Discrete { .. }) if flags.atoms.is_some() => Some(DistName::Discrete),
            _ if flags.nodes.is_some() || flags.atoms.is_some() => {
                return Err(ConfigError(
                    "--nodes and --atoms need a matching --dist".into(),
                ))
            }
            _ => None,
        },
    };
    Ok(match kind {
        None => None,
        Some(DistName::Rademacher) => Some(DistSpec::Rademacher),
        Some(DistName::Uniform) => {
            let file_nodes = match file {
                Some(DistSpec::Uniform { nodes }) => Some(*nodes),
                _ => None,
            };
            Some(DistSpec::Uniform {
                nodes: flags.nodes.or(file_nodes).unwrap_or(DEFAULT_UNIFORM_NODES),
            })
        }
        Some(DistName::Discrete) => Some(DistSpec::Discrete { atoms: atoms()? }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_filled_and_seed_recorded() {
        let cfg = ExperimentConfig::resolve(Command::Simulate, &Flags::default()).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.n, vec![8, 12, 16]);
        assert_eq!(cfg.dist, DistSpec::Rademacher);
        let echo = serde_json::to_value(&cfg).unwrap();
        assert_eq!(echo["seed"], DEFAULT_SEED);
    }

    #[test]
    fn flags_win_over_file() {
        let dir = std::env::temp_dir().join(format!("sklab-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.json");
        std::fs::write(
            &path,
            r#"{"t": 0.2, "h": 0.4, "dist": {"kind": "uniform", "nodes": 8}, "seed": 5}"#,
        )
        .unwrap();
        let flags = Flags {
            config: Some(path.clone()),
            t: Some(0.1),
            nodes: Some(4),
            ..Flags::default()
        };
        let cfg = ExperimentConfig::resolve(Command::RsSolve, &flags).unwrap();
        assert_eq!(cfg.t, 0.1);
        assert_eq!(cfg.h, 0.4);
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.dist, DistSpec::Uniform { nodes: 4 });
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn echo_round_trips_as_a_layer() {
        let flags = Flags {
            dist: Some(DistName::Discrete),
            atoms: Some("[[-1,0.25],[0,0.5],[1,0.25]]".into()),
            t: Some(0.05),
            q: Some(0.2),
            ..Flags::default()
        };
        let cfg = ExperimentConfig::resolve(Command::Interpolate, &flags).unwrap();
        let layer: Layer = serde_json::from_value(serde_json::to_value(&cfg).unwrap()).unwrap();
        assert_eq!(layer.command, Some(Command::Interpolate));
        assert_eq!(layer.dist, Some(cfg.dist.clone()));
        assert_eq!(layer.q, Some(0.2));
    }

    #[test]
    fn rejects_bad_values() {
        let bad = |f: Flags, c: Command| ExperimentConfig::resolve(c, &f).is_err();
        assert!(bad(Flags { t: Some(-0.1), ..Flags::default() }, Command::RsSolve));
        assert!(bad(Flags { steps: Some(3), ..Flags::default() }, Command::Interpolate));
        assert!(bad(Flags { samples: Some(1), ..Flags::default() }, Command::Simulate));
        assert!(bad(Flags { n: Some(vec![0]), ..Flags::default() }, Command::Simulate));
        assert!(bad(Flags { nodes: Some(4), ..Flags::default() }, Command::RsSolve));
        assert!(bad(
            Flags { dist: Some(DistName::Uniform), nodes: Some(3), ..Flags::default() },
            Command::RsSolve
        ));
        assert!(bad(Flags::default(), Command::Run));
    }
}
