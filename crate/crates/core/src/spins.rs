//! Spin laws and the single-spin generating functions built on them.
//!
//! Every law is stored as a finite symmetric list of atoms `(s_k, w_k)` with
//! `s_k` in `[-1, 1]`. Continuous laws are discretized once at construction,
//! so all expectations below are finite sums and symmetry is exact.
//!
//! The mixed Laplace exponent is `phi(u, v) = log E[exp(u s + v s^2)]`. Its
//! partial derivatives are cumulants of `s` (and of `s^2`) under the tilted law
//! `p_k ∝ w_k exp(u s_k + v s_k^2)`, which is how they are evaluated here.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, LabError, Result};
use crate::quadrature::gauss_legendre;

const WEIGHT_SUM_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// Default number of Gauss–Legendre atoms for the uniform law.
pub const DEFAULT_UNIFORM_NODES: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpinKind {
    Rademacher,
    Uniform,
    DiscreteSymmetric,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub weight: f64,
}

/// A symmetric probability law on `[-1, 1]` with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinDistribution {
    kind: SpinKind,
    atoms: Vec<Atom>,
}

impl SpinDistribution {
    /// `s = ±1` with probability 1/2 each.
    pub fn rademacher() -> Self {
        Self {
            kind: SpinKind::Rademacher,
            atoms: vec![
                Atom {
                    value: -1.0,
                    weight: 0.5,
                },
                Atom {
                    value: 1.0,
                    weight: 0.5,
                },
            ],
        }
    }

    /// Uniform law on `[-1, 1]`, discretized by an even-order Gauss–Legendre rule.
    pub fn uniform(nodes: usize) -> Result<Self> {
        if nodes < 2 || !nodes.is_multiple_of(2) {
            return Err(LabError::InvalidDistribution(format!(
                "uniform discretization needs an even node count >= 2, got {nodes}"
            )));
        }
        let (x, w) = gauss_legendre(nodes);
        let atoms = x
            .into_iter()
            .zip(w)
            .map(|(value, weight)| Atom {
                value,
                weight: 0.5 * weight,
            })
            .collect();
        let mut dist = Self {
            kind: SpinKind::Uniform,
            atoms,
        };
        dist.normalize();
        Ok(dist)
    }

    /// User-supplied symmetric law from `(value, weight)` pairs.
    ///
    /// Weights must be positive and sum to one (within 1e-9; they are then
    /// renormalized exactly). Repeated values are merged. Every atom must have
    /// a mirror atom of equal weight.
    pub fn discrete(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(LabError::InvalidDistribution("empty atom list".into()));
        }
        for &(s, w) in pairs {
            if !s.is_finite() || !(-1.0..=1.0).contains(&s) {
                return Err(LabError::InvalidDistribution(format!(
                    "atom value {s} outside [-1, 1]"
                )));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(LabError::InvalidDistribution(format!(
                    "atom weight {w} must be > 0"
                )));
            }
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(LabError::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }

        let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<Atom> = Vec::with_capacity(sorted.len());
        for (value, weight) in sorted {
            match atoms.last_mut() {
                Some(last) if (last.value - value).abs() <= 1e-14 => last.weight += weight,
                _ => atoms.push(Atom { value, weight }),
            }
        }

        let k = atoms.len();
        for i in 0..k / 2 {
            let (a, b) = (atoms[i], atoms[k - 1 - i]);
            if (a.value + b.value).abs() > SYMMETRY_TOL || (a.weight - b.weight).abs() > SYMMETRY_TOL
            {
                return Err(LabError::InvalidDistribution(format!(
                    "law is not symmetric: atom ({}, {}) has no mirror",
                    a.value, a.weight
                )));
            }
        }
        if k % 2 == 1 && atoms[k / 2].value.abs() > SYMMETRY_TOL {
            return Err(LabError::InvalidDistribution(format!(
                "law is not symmetric: unpaired atom at {}",
                atoms[k / 2].value
            )));
        }

        // make the mirror images bit-exact
        for i in 0..k / 2 {
            let w = 0.5 * (atoms[i].weight + atoms[k - 1 - i].weight);
            let s = 0.5 * (atoms[k - 1 - i].value - atoms[i].value);
            atoms[i] = Atom {
                value: -s,
                weight: w,
            };
            atoms[k - 1 - i] = Atom {
                value: s,
                weight: w,
            };
        }
        if k % 2 == 1 {
            atoms[k / 2].value = 0.0;
        }

        let mut dist = Self {
            kind: SpinKind::DiscreteSymmetric,
            atoms,
        };
        dist.normalize();
        Ok(dist)
    }

    fn normalize(&mut self) {
        let total: f64 = self.atoms.iter().map(|a| a.weight).sum();
        for a in &mut self.atoms {
            a.weight /= total;
        }
    }

    pub fn kind(&self) -> SpinKind {
        self.kind
    }

    /// Atoms in ascending order of value.
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.value).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| a.weight).collect()
    }

    /// True when every atom is `±1`, i.e. the law is Rademacher in disguise.
    pub fn is_ising(&self) -> bool {
        self.atoms.len() == 2 && self.atoms.iter().all(|a| a.value.abs() == 1.0)
    }

    /// True for the point mass at zero, the only law with no fluctuations.
    pub fn is_degenerate(&self) -> bool {
        self.atoms.iter().all(|a| a.value == 0.0)
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.weight * f(a.value)).sum()
    }
}

/// The five partial derivatives of `phi` used by the analysis, plus the three
/// extra third/second order terms needed for `d q_lin / dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiPartials {
    /// `E_t[s]`
    pub du: f64,
    /// `Var_t(s)`
    pub duu: f64,
    /// `E_t[s^2]`
    pub dv: f64,
    /// fourth cumulant of `s`
    pub duuuu: f64,
    /// `Cov_t(s, s^2)`
    pub duv: f64,
    /// third cumulant of `s`
    pub duuu: f64,
    /// joint cumulant `k(s, s, s^2)`
    pub duuv: f64,
    /// `Var_t(s^2)`
    pub dvv: f64,
}

/// Evaluates `phi`, its partials, and the two-replica exponent `psi` for a law.
///
/// Immutable after construction, so it can be shared freely between threads.
#[derive(Clone, Debug)]
pub struct PhiEvaluator {
    dist: SpinDistribution,
    values: Vec<f64>,
    squares: Vec<f64>,
    log_weights: Vec<f64>,
}

impl PhiEvaluator {
    pub fn new(dist: SpinDistribution) -> Self {
        let values = dist.values();
        let squares = values.iter().map(|s| s * s).collect();
        let log_weights = dist.atoms().iter().map(|a| a.weight.ln()).collect();
        Self {
            dist,
            values,
            squares,
            log_weights,
        }
    }

    pub fn dist(&self) -> &SpinDistribution {
        &self.dist
    }

    /// `phi(u, v) = log sum_k w_k exp(u s_k + v s_k^2)`.
    pub fn phi(&self, u: f64, v: f64) -> Result<f64> {
        ensure_finite(u, "u")?;
        ensure_finite(v, "v")?;
        Ok(self.phi_unchecked(u, v))
    }

    pub(crate) fn phi_unchecked(&self, u: f64, v: f64) -> f64 {
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.values.len() {
            let e = u * self.values[k] + v * self.squares[k] + self.log_weights[k];
            max = max.max(e);
        }
        let sum: f64 = (0..self.values.len())
            .map(|k| (u * self.values[k] + v * self.squares[k] + self.log_weights[k] - max).exp())
            .sum();
        max + sum.ln()
    }

    pub fn partials(&self, u: f64, v: f64) -> Result<PhiPartials> {
        ensure_finite(u, "u")?;
        ensure_finite(v, "v")?;
        Ok(self.tilt(u, v))
    }

    /// Shorthand for `(d_u phi)^2`, the integrand of the linear-model overlap.
    pub(crate) fn du_squared(&self, u: f64, v: f64) -> f64 {
        let du = self.tilted_mean(u, v);
        du * du
    }

    fn tilted_mean(&self, u: f64, v: f64) -> f64 {
        let k = self.values.len();
        let mut max = f64::NEG_INFINITY;
        for i in 0..k {
            max = max.max(u * self.values[i] + v * self.squares[i] + self.log_weights[i]);
        }
        let (mut z, mut m) = (0.0, 0.0);
        for i in 0..k {
            let p = (u * self.values[i] + v * self.squares[i] + self.log_weights[i] - max).exp();
            z += p;
            m += p * self.values[i];
        }
        m / z
    }

    /// All partials from a single pass over the atoms.
    pub(crate) fn tilt(&self, u: f64, v: f64) -> PhiPartials {
        let k = self.values.len();
        let mut max = f64::NEG_INFINITY;
        for i in 0..k {
            max = max.max(u * self.values[i] + v * self.squares[i] + self.log_weights[i]);
        }
        let mut p = [0.0f64; 64];
        let mut heap;
        let probs: &mut [f64] = if k <= p.len() {
            &mut p[..k]
        } else {
            heap = vec![0.0; k];
            &mut heap
        };
        let mut z = 0.0;
        let atoms = || self.values.iter().zip(&self.squares);
        for ((p, (s, s2)), lw) in probs.iter_mut().zip(atoms()).zip(&self.log_weights) {
            *p = (u * s + v * s2 + lw - max).exp();
            z += *p;
        }
        let (mut mean, mut mean2) = (0.0, 0.0);
        for (p, (s, s2)) in probs.iter_mut().zip(atoms()) {
            *p /= z;
            mean += *p * s;
            mean2 += *p * s2;
        }
        let (mut c2, mut c3, mut c4) = (0.0, 0.0, 0.0);
        let (mut cov, mut c112, mut var2) = (0.0, 0.0, 0.0);
        for (p, (s, s2)) in probs.iter().zip(atoms()) {
            let d = s - mean;
            let d2 = s2 - mean2;
            let dd = d * d;
            c2 += p * dd;
            c3 += p * dd * d;
            c4 += p * dd * dd;
            cov += p * d * d2;
            c112 += p * dd * d2;
            var2 += p * d2 * d2;
        }
        PhiPartials {
            du: mean,
            duu: c2,
            dv: mean2,
            duuuu: c4 - 3.0 * c2 * c2,
            duv: cov,
            duuu: c3,
            duuv: c112,
            dvv: var2,
        }
    }

    /// `psi(u, v, lambda) = log E[exp(u(s+t) + v(s^2+t^2) + lambda s t)]` for
    /// two independent spins `s, t` drawn from the law.
    pub fn psi(&self, u: f64, v: f64, lambda: f64) -> Result<f64> {
        Ok(self.psi_moments(u, v, lambda)?.psi)
    }

    /// `psi` together with its first two `lambda`-derivatives, which are the
    /// mean and variance of `s t` under the tilted pair law.
    pub fn psi_moments(&self, u: f64, v: f64, lambda: f64) -> Result<PsiMoments> {
        ensure_finite(u, "u")?;
        ensure_finite(v, "v")?;
        ensure_finite(lambda, "lambda")?;
        let k = self.values.len();
        let single: Vec<f64> = (0..k)
            .map(|i| u * self.values[i] + v * self.squares[i] + self.log_weights[i])
            .collect();
        let mut max = f64::NEG_INFINITY;
        for i in 0..k {
            for j in 0..k {
                max = max.max(single[i] + single[j] + lambda * self.values[i] * self.values[j]);
            }
        }
        let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for i in 0..k {
            for j in 0..k {
                let st = self.values[i] * self.values[j];
                let p = (single[i] + single[j] + lambda * st - max).exp();
                z += p;
                m1 += p * st;
                m2 += p * st * st;
            }
        }
        let mean = m1 / z;
        Ok(PsiMoments {
            psi: max + z.ln(),
            dlambda: mean,
            dlambda2: (m2 / z - mean * mean).max(0.0),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiMoments {
    pub psi: f64,
    pub dlambda: f64,
    pub dlambda2: f64,
}
