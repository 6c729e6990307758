//! Disorder averaging: Monte Carlo over seeded samples, or tensor Gauss–Hermite
//! quadrature over `(g_11, J_1)` for the one-spin system.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::disorder::{sample_seed, DisorderSample};
use crate::error::{LabError, Result};
use crate::gaussian::HermiteRule;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DisorderAverage {
    MonteCarlo { samples: usize, seed: u64 },
    /// Only for `n = 1`, where the disorder is the pair `(g_11, J_1)`.
    Quadrature { order: usize },
}

impl DisorderAverage {
    pub fn monte_carlo(samples: usize, seed: u64) -> Self {
        Self::MonteCarlo { samples, seed }
    }
}

/// Mean and standard error of a disorder average.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Per-disorder observable rows with their averaging weights.
#[derive(Clone, Debug)]
pub struct SampleSet {
    weights: Vec<f64>,
    rows: Vec<Vec<f64>>,
    monte_carlo: bool,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Average of `f(row)`; for Monte Carlo the standard error is the sample
    /// standard deviation over `sqrt(N)`, for quadrature it is zero.
    pub fn estimate(&self, f: impl Fn(&[f64]) -> f64) -> Estimate {
        let vals: Vec<f64> = self.rows.iter().map(|r| f(r)).collect();
        let mean = neumaier_sum(vals.iter().zip(&self.weights).map(|(v, w)| v * w));
        if !self.monte_carlo {
            return Estimate { mean, std_err: 0.0 };
        }
        let n = vals.len() as f64;
        let ss = neumaier_sum(vals.iter().map(|v| (v - mean) * (v - mean)));
        Estimate {
            mean,
            std_err: (ss / (n - 1.0) / n).sqrt(),
        }
    }

    pub fn column(&self, k: usize) -> Estimate {
        self.estimate(|r| r[k])
    }
}

/// Compensated summation; deterministic for a fixed input order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Evaluates `f` on every disorder realization of the average and collects the
/// rows in index order, so results do not depend on the number of workers.
pub fn collect<F>(n: usize, avg: &DisorderAverage, f: F) -> Result<SampleSet>
where
    F: Fn(&DisorderSample) -> Result<Vec<f64>> + Sync,
{
    match *avg {
        DisorderAverage::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(LabError::InvalidParameter(format!(
                    "need at least 2 disorder samples, got {samples}"
                )));
            }
            let rows = (0..samples)
                .into_par_iter()
                .map(|i| f(&DisorderSample::sample(n, sample_seed(seed, n, i))?))
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleSet {
                weights: vec![1.0 / samples as f64; samples],
                rows,
                monte_carlo: true,
            })
        }
        DisorderAverage::Quadrature { order } => {
            if n != 1 {
                return Err(LabError::InvalidParameter(format!(
                    "quadrature disorder average is only available for n = 1, got n = {n}"
                )));
            }
            let rule = HermiteRule::new(order)?;
            let mut points = Vec::with_capacity(order * order);
            for (&g, &wg) in rule.nodes().iter().zip(rule.weights()) {
                for (&j, &wj) in rule.nodes().iter().zip(rule.weights()) {
                    points.push((g, j, wg * wj));
                }
            }
            let rows = points
                .par_iter()
                .map(|&(g, j, _)| f(&DisorderSample::from_parts(1, vec![g], vec![j])?))
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleSet {
                weights: points.iter().map(|p| p.2).collect(),
                rows,
                monte_carlo: false,
            })
        }
    }
}
