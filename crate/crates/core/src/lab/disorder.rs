use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

const STREAM_COUPLINGS: u64 = 0;
const STREAM_FIELDS: u64 = 1;

/// One quenched realization of the Gaussian environment.
///
/// `g` holds `g_ij` for `i <= j` (diagonal included) in row-major upper
/// triangular order; `j_lin` holds the linear-model fields `J_i`. The two
/// arrays come from distinct ChaCha streams of the same seed, so they are
/// independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSample {
    n: usize,
    g: Vec<f64>,
    j_lin: Vec<f64>,
    seed: u64,
}

impl DisorderSample {
    pub fn sample(n: usize, seed: u64) -> Result<Self> {
        check_n(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_COUPLINGS);
        let g = (0..n * (n + 1) / 2)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_FIELDS);
        let j_lin = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        Ok(Self { n, g, j_lin, seed })
    }

    /// Builds a sample from explicit arrays (`g` upper triangular, diagonal included).
    pub fn from_parts(n: usize, g: Vec<f64>, j_lin: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if g.len() != n * (n + 1) / 2 || j_lin.len() != n {
            return Err(LabError::InvalidParameter(format!(
                "disorder arrays have wrong length for n = {n}: g {} (want {}), J {} (want {n})",
                g.len(),
                n * (n + 1) / 2,
                j_lin.len()
            )));
        }
        if g.iter().chain(&j_lin).any(|v| !v.is_finite()) {
            return Err(LabError::NonFinite("disorder entry"));
        }
        Ok(Self {
            n,
            g,
            j_lin,
            seed: 0,
        })
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_parts(n, vec![0.0; n * (n + 1) / 2], vec![0.0; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `g_ij`, symmetric in its indices.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.g[a * (2 * self.n - a + 1) / 2 + (b - a)]
    }

    pub fn g_upper(&self) -> &[f64] {
        &self.g
    }

    pub fn j_lin(&self) -> &[f64] {
        &self.j_lin
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(LabError::InvalidParameter("n must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `index`-th disorder sample of an experiment at size `n`.
///
/// Depends only on its arguments, never on worker count or scheduling.
pub fn sample_seed(base: u64, n: usize, index: usize) -> u64 {
    mix64(mix64(mix64(base) ^ n as u64) ^ index as u64)
}

/// `H_n(s) = sqrt(2/n) sum_{i<j} g_ij s_i s_j + (1/sqrt n) sum_i g_ii s_i^2`.
pub fn hamiltonian_sk(d: &DisorderSample, sigma: &[f64]) -> Result<f64> {
    check_config(d, sigma)?;
    let n = d.n;
    let mut off = 0.0;
    let mut diag = 0.0;
    for i in 0..n {
        diag += d.g(i, i) * sigma[i] * sigma[i];
        for j in i + 1..n {
            off += d.g(i, j) * sigma[i] * sigma[j];
        }
    }
    let nf = n as f64;
    Ok((2.0 / nf).sqrt() * off + diag / nf.sqrt())
}

/// `Lambda_n(s) = sum_i J_i s_i`.
pub fn hamiltonian_linear(d: &DisorderSample, sigma: &[f64]) -> Result<f64> {
    check_config(d, sigma)?;
    Ok(d.j_lin.iter().zip(sigma).map(|(j, s)| j * s).sum())
}

/// Normalized overlap `(1/n) sum_i a_i b_i`.
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

fn check_config(d: &DisorderSample, sigma: &[f64]) -> Result<()> {
    if sigma.len() != d.n {
        return Err(LabError::InvalidParameter(format!(
            "configuration has {} spins, disorder has n = {}",
            sigma.len(),
            d.n
        )));
    }
    if sigma.iter().any(|s| !s.is_finite() || s.abs() > 1.0) {
        return Err(LabError::InvalidParameter(
            "spins must lie in [-1, 1]".into(),
        ));
    }
    Ok(())
}
