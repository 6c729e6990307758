//! Exact Gibbs expectations by enumerating every spin configuration.
//!
//! For fixed disorder the log Boltzmann weight of a configuration is
//!
//! ```text
//! sqrt(t) H_n(s) + sqrt(x) Lambda_n(s) - (n/2)(x R(s,s) + t R(s,s)^2)
//!     + h sum_i s_i + sum_i log w(s_i)
//! ```
//!
//! where `R` is the normalized overlap. Configurations are visited in
//! mixed-radix order so that the quadratic part can be updated in `O(n)` per
//! step, with a periodic exact recomputation to stop drift.

use serde::{Deserialize, Serialize};

use super::disorder::{overlap, DisorderSample};
use crate::error::{ensure_finite, ensure_nonneg, LabError, Result};
use crate::spins::SpinDistribution;

/// Maximum number of terms in any single enumeration.
pub const ENUMERATION_BUDGET: u128 = 1 << 24;

/// Weights are kept relative to a running shift; the shift moves only when a
/// new term exceeds it by this much, so sums stay far from overflow.
const RESCALE_MARGIN: f64 = 256.0;

/// Interaction parameters of one Gibbs measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    pub t: f64,
    pub x: f64,
    pub h: f64,
}

impl GibbsParams {
    pub fn new(t: f64, x: f64, h: f64) -> Self {
        Self { t, x, h }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        ensure_nonneg(self.t, "t")?;
        ensure_nonneg(self.x, "x")?;
        ensure_nonneg(self.h, "h")
    }
}

/// Finite-n observables for fixed disorder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsReport {
    pub log_z: f64,
    /// `<R(s, t)>` over two independent replicas
    pub mean_overlap: f64,
    /// `<R(s, t)^2>`
    pub mean_overlap_sq: f64,
    pub coupled_log_z: Option<f64>,
}

/// Interaction added between the two replicas of a coupled pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Coupling {
    /// `lambda n (q - R)^2`
    Quadratic { lambda: f64, q: f64 },
    /// `lambda n R`; at `t = 0` the pair system factorizes into `psi` terms.
    Linear { lambda: f64 },
}

impl Coupling {
    #[inline]
    fn energy(&self, n: f64, r: f64) -> f64 {
        match *self {
            Coupling::Quadratic { lambda, q } => lambda * n * (q - r) * (q - r),
            Coupling::Linear { lambda } => lambda * n * r,
        }
    }

    fn reference(&self) -> f64 {
        match *self {
            Coupling::Quadratic { q, .. } => q,
            Coupling::Linear { .. } => 0.0,
        }
    }

    /// Upper bound of `|energy|` over `R` in `[-1, 1]`.
    fn span(&self, n: f64) -> f64 {
        match *self {
            Coupling::Quadratic { lambda, q } => lambda.abs() * n * (q.abs() + 1.0).powi(2),
            Coupling::Linear { lambda } => lambda.abs() * n,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Coupling::Quadratic { lambda, q } => {
                ensure_finite(lambda, "lambda")?;
                ensure_finite(q, "q")
            }
            Coupling::Linear { lambda } => ensure_finite(lambda, "lambda"),
        }
    }
}

/// Observables of a coupled two-replica system `(s, t)`, with a second
/// independent copy `(s', t')` under the same disorder for cross terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledReport {
    pub log_z: f64,
    /// `<R(s, t)>`
    pub overlap: f64,
    /// `<R(s, t)^2>`
    pub overlap_sq: f64,
    /// `<(q - R(s, t))^2>` with `q` the coupling reference (0 for linear coupling)
    pub deviation_sq: f64,
    /// `<R(s, s')>`
    pub cross_overlap: f64,
    /// `<R(s, s')^2>`
    pub cross_overlap_sq: f64,
}

struct Lse {
    shift: f64,
    sum: f64,
}

impl Lse {
    fn new() -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    /// Adds `exp(l)`; returns its relative weight and, if the shift moved, the
    /// factor every companion accumulator must be multiplied by.
    #[inline]
    fn push(&mut self, l: f64) -> (f64, Option<f64>) {
        if l > self.shift + RESCALE_MARGIN {
            let factor = if self.shift.is_finite() {
                (self.shift - l).exp()
            } else {
                0.0
            };
            self.sum = self.sum * factor + 1.0;
            self.shift = l;
            (1.0, Some(factor))
        } else {
            let w = (l - self.shift).exp();
            self.sum += w;
            (w, None)
        }
    }

    fn ln(&self) -> f64 {
        self.shift + self.sum.ln()
    }
}

/// Log-weight landscape of one Gibbs measure for fixed disorder.
pub(crate) struct Landscape {
    n: usize,
    values: Vec<f64>,
    /// `site[i * K + k]`: one-body part of the log weight of atom `k` at site `i`
    site: Vec<f64>,
    /// symmetric, zero diagonal: `sqrt(t) sqrt(2/n) g_ij`
    pair: Vec<f64>,
    /// coefficient of `-(sum_i s_i^2)^2`
    self_coef: f64,
    interacting: bool,
}

impl Landscape {
    pub(crate) fn new(d: &DisorderSample, dist: &SpinDistribution, p: GibbsParams) -> Result<Self> {
        p.validate()?;
        let n = d.n();
        let k = dist.len();
        let terms = (k as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
        if terms > ENUMERATION_BUDGET {
            return Err(LabError::BudgetExceeded {
                terms,
                limit: ENUMERATION_BUDGET,
            });
        }
        let nf = n as f64;
        let (st, sx) = (p.t.sqrt(), p.x.sqrt());
        let values = dist.values();
        let log_w: Vec<f64> = dist.weights().iter().map(|w| w.ln()).collect();
        let mut site = vec![0.0; n * k];
        for i in 0..n {
            let diag = st * d.g(i, i) / nf.sqrt();
            let field = sx * d.j_lin()[i] + p.h;
            for a in 0..k {
                let s = values[a];
                site[i * k + a] = (diag - 0.5 * p.x) * s * s + field * s + log_w[a];
            }
        }
        let scale = st * (2.0 / nf).sqrt();
        let mut pair = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let c = scale * d.g(i, j);
                pair[i * n + j] = c;
                pair[j * n + i] = c;
            }
        }
        Ok(Self {
            n,
            values,
            site,
            pair,
            self_coef: p.t / (2.0 * nf),
            interacting: p.t > 0.0 && n > 1,
        })
    }

    fn pair_energy(&self, sigma: &[f64]) -> f64 {
        let n = self.n;
        let mut e = 0.0;
        for i in 0..n {
            let row = &self.pair[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in i + 1..n {
                acc += row[j] * sigma[j];
            }
            e += sigma[i] * acc;
        }
        e
    }

    /// Calls `visit(sigma, digits, log_weight)` for every configuration.
    pub(crate) fn for_each(&self, mut visit: impl FnMut(&[f64], &[usize], f64)) {
        let n = self.n;
        let k = self.values.len();
        let mut digits = vec![0usize; n];
        let mut sigma = vec![self.values[0]; n];
        // carries reaching this digit trigger an exact recomputation
        let mut refresh = 0usize;
        while refresh < n && (k as u64).pow(refresh as u32) < 64 {
            refresh += 1;
        }

        let recompute = |sigma: &[f64], digits: &[usize]| {
            let pe = if self.interacting {
                self.pair_energy(sigma)
            } else {
                0.0
            };
            let site_sum: f64 = (0..n).map(|i| self.site[i * k + digits[i]]).sum();
            let s2: f64 = sigma.iter().map(|s| s * s).sum();
            (pe, site_sum, s2)
        };
        let (mut pair_e, mut site_sum, mut s2) = recompute(&sigma, &digits);

        loop {
            visit(&sigma, &digits, pair_e + site_sum - self.self_coef * s2 * s2);

            let mut i = 0;
            loop {
                if i == n {
                    return;
                }
                let old = digits[i];
                let new = if old + 1 == k { 0 } else { old + 1 };
                let (so, sn) = (self.values[old], self.values[new]);
                if self.interacting {
                    let row = &self.pair[i * n..(i + 1) * n];
                    let field: f64 = row.iter().zip(&sigma).map(|(c, s)| c * s).sum();
                    pair_e += (sn - so) * field;
                }
                site_sum += self.site[i * k + new] - self.site[i * k + old];
                s2 += sn * sn - so * so;
                sigma[i] = sn;
                digits[i] = new;
                if new != 0 {
                    break;
                }
                i += 1;
            }
            if i >= refresh {
                (pair_e, site_sum, s2) = recompute(&sigma, &digits);
            }
        }
    }
}

/// `log Z` of one Gibbs measure by exact enumeration.
pub fn log_z_exact(d: &DisorderSample, dist: &SpinDistribution, p: GibbsParams) -> Result<f64> {
    let land = Landscape::new(d, dist, p)?;
    let mut lse = Lse::new();
    land.for_each(|_, _, l| {
        lse.push(l);
    });
    Ok(lse.ln())
}

/// `log Z` plus the one- and two-replica overlap moments.
///
/// Two-replica moments come from the single-replica magnetizations
/// `m_i = <s_i>` and correlations `m_ij = <s_i s_j>`:
/// `<R> = (1/n) sum_i m_i^2` and `<R^2> = (1/n^2) sum_ij m_ij^2`.
pub fn gibbs_overlap_moments(
    d: &DisorderSample,
    dist: &SpinDistribution,
    p: GibbsParams,
) -> Result<GibbsReport> {
    let land = Landscape::new(d, dist, p)?;
    let n = d.n();
    let mut lse = Lse::new();
    let mut m1 = vec![0.0; n];
    // upper triangle, row-major
    let mut m2 = vec![0.0; n * (n + 1) / 2];
    land.for_each(|sigma, _, l| {
        let (w, rescale) = lse.push(l);
        if let Some(f) = rescale {
            m1.iter_mut().chain(m2.iter_mut()).for_each(|v| *v *= f);
        }
        let mut idx = 0;
        for i in 0..n {
            let ws = w * sigma[i];
            m1[i] += ws;
            for sj in &sigma[i..] {
                m2[idx] += ws * sj;
                idx += 1;
            }
        }
    });
    let z = lse.sum;
    let nf = n as f64;
    let mean_overlap = m1.iter().map(|m| (m / z).powi(2)).sum::<f64>() / nf;
    let mut sq = 0.0;
    let mut idx = 0;
    for i in 0..n {
        for j in i..n {
            let c = (m2[idx] / z).powi(2);
            sq += if i == j { c } else { 2.0 * c };
            idx += 1;
        }
    }
    Ok(GibbsReport {
        log_z: lse.ln(),
        mean_overlap,
        mean_overlap_sq: sq / (nf * nf),
        coupled_log_z: None,
    })
}

/// Exact enumeration of a coupled replica pair `(s, t)` sharing the disorder,
/// with weight `exp(V(s) + V(t) + coupling(R(s, t)))`.
pub fn coupled_gibbs(
    d: &DisorderSample,
    dist: &SpinDistribution,
    p: GibbsParams,
    coupling: Coupling,
) -> Result<CoupledReport> {
    coupling.validate()?;
    let land = Landscape::new(d, dist, p)?;
    let n = d.n();
    let k = dist.len();
    let terms = (k as u128).checked_pow(2 * n as u32).unwrap_or(u128::MAX);
    if terms > ENUMERATION_BUDGET {
        return Err(LabError::BudgetExceeded {
            terms,
            limit: ENUMERATION_BUDGET,
        });
    }

    let count = k.pow(n as u32);
    let mut configs = Vec::with_capacity(count * n);
    let mut ells = Vec::with_capacity(count);
    let mut masks = Vec::with_capacity(count);
    land.for_each(|sigma, digits, l| {
        configs.extend_from_slice(sigma);
        ells.push(l);
        if dist.is_ising() {
            // bit i set when s_i = +1
            let m = digits
                .iter()
                .enumerate()
                .fold(0u64, |m, (i, &dg)| m | ((dg as u64) << i));
            masks.push(m);
        }
    });

    let nf = n as f64;
    let q_ref = coupling.reference();
    let pairs = if dist.is_ising() && n <= 64 && coupling.span(nf) <= 500.0 {
        ising_pairs(n, &ells, &masks, coupling, q_ref)
    } else {
        generic_pairs(n, &configs, &ells, coupling, q_ref)
    };

    // marginal of the first replica: W_a is the total weight of pairs (a, .)
    let z = pairs.z;
    let mut mg1 = vec![0.0; n];
    let mut mg2 = vec![0.0; n * n];
    for (a, &wa) in pairs.row_weight.iter().enumerate() {
        if wa == 0.0 {
            continue;
        }
        let s = &configs[a * n..(a + 1) * n];
        for i in 0..n {
            let ws = wa * s[i];
            mg1[i] += ws;
            for j in i..n {
                mg2[i * n + j] += ws * s[j];
            }
        }
    }
    let cross_overlap = mg1.iter().map(|m| (m / z).powi(2)).sum::<f64>() / nf;
    let mut cross_sq = 0.0;
    for i in 0..n {
        for j in i..n {
            let c = (mg2[i * n + j] / z).powi(2);
            cross_sq += if i == j { c } else { 2.0 * c };
        }
    }

    Ok(CoupledReport {
        log_z: pairs.log_shift + z.ln(),
        overlap: pairs.s_ov / z,
        overlap_sq: pairs.s_ov2 / z,
        deviation_sq: pairs.s_dev / z,
        cross_overlap,
        cross_overlap_sq: cross_sq / (nf * nf),
    })
}

struct PairSums {
    log_shift: f64,
    z: f64,
    s_ov: f64,
    s_ov2: f64,
    s_dev: f64,
    row_weight: Vec<f64>,
}

/// ±1 spins: the overlap only depends on the Hamming distance, so for each
/// first replica the second is binned by distance before any exponential.
fn ising_pairs(n: usize, ells: &[f64], masks: &[u64], coupling: Coupling, q: f64) -> PairSums {
    let nf = n as f64;
    let ell_max = ells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = ells.iter().map(|l| (l - ell_max).exp()).collect();
    let ov: Vec<f64> = (0..=n).map(|dist| (nf - 2.0 * dist as f64) / nf).collect();
    let c_energy: Vec<f64> = ov.iter().map(|&r| coupling.energy(nf, r)).collect();
    let c_max = c_energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c: Vec<f64> = c_energy.iter().map(|v| (v - c_max).exp()).collect();

    let mut sums = PairSums {
        log_shift: 2.0 * ell_max + c_max,
        z: 0.0,
        s_ov: 0.0,
        s_ov2: 0.0,
        s_dev: 0.0,
        row_weight: vec![0.0; ells.len()],
    };
    let mut hist = vec![0.0; n + 1];
    for (a, &ma) in masks.iter().enumerate() {
        hist.iter_mut().for_each(|h| *h = 0.0);
        for (&mb, &eb) in masks.iter().zip(&e) {
            hist[(ma ^ mb).count_ones() as usize] += eb;
        }
        let mut row = 0.0;
        for dist in 0..=n {
            let w = e[a] * hist[dist] * c[dist];
            row += w;
            sums.s_ov += w * ov[dist];
            sums.s_ov2 += w * ov[dist] * ov[dist];
            sums.s_dev += w * (q - ov[dist]) * (q - ov[dist]);
        }
        sums.row_weight[a] = row;
        sums.z += row;
    }
    sums
}

fn generic_pairs(
    n: usize,
    configs: &[f64],
    ells: &[f64],
    coupling: Coupling,
    q: f64,
) -> PairSums {
    let nf = n as f64;
    let count = ells.len();
    let mut lse = Lse::new();
    let (mut s_ov, mut s_ov2, mut s_dev) = (0.0, 0.0, 0.0);
    let mut row_weight = vec![0.0; count];
    for a in 0..count {
        let sa = &configs[a * n..(a + 1) * n];
        for b in 0..count {
            let r = overlap(sa, &configs[b * n..(b + 1) * n]);
            let l = ells[a] + ells[b] + coupling.energy(nf, r);
            let (w, rescale) = lse.push(l);
            if let Some(f) = rescale {
                s_ov *= f;
                s_ov2 *= f;
                s_dev *= f;
                row_weight.iter_mut().for_each(|v| *v *= f);
            }
            s_ov += w * r;
            s_ov2 += w * r * r;
            s_dev += w * (q - r) * (q - r);
            row_weight[a] += w;
        }
    }
    PairSums {
        log_shift: lse.shift,
        z: lse.sum,
        s_ov,
        s_ov2,
        s_dev,
        row_weight,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::disorder::{hamiltonian_linear, hamiltonian_sk};
    use crate::spins::PhiEvaluator;
    use approx::assert_abs_diff_eq;

    /// All configurations as explicit vectors with their prior log-weights.
    fn configurations(dist: &SpinDistribution, n: usize) -> Vec<(Vec<f64>, f64)> {
        let atoms = dist.atoms();
        let mut out = vec![(Vec::new(), 0.0)];
        for _ in 0..n {
            let mut next = Vec::new();
            for (s, lw) in &out {
                for a in atoms {
                    let mut s2 = s.clone();
                    s2.push(a.value);
                    next.push((s2, lw + a.weight.ln()));
                }
            }
            out = next;
        }
        out
    }

    /// Log weight straight from the Hamiltonians.
    fn direct_log_weight(d: &DisorderSample, s: &[f64], prior: f64, p: GibbsParams) -> f64 {
        let n = s.len() as f64;
        let r_self = overlap(s, s);
        p.t.sqrt() * hamiltonian_sk(d, s).unwrap() + p.x.sqrt() * hamiltonian_linear(d, s).unwrap()
            - 0.5 * n * (p.x * r_self + p.t * r_self * r_self)
            + p.h * s.iter().sum::<f64>()
            + prior
    }

    fn log_sum_exp(v: &[f64]) -> f64 {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
    }

    fn six_atom() -> SpinDistribution {
        SpinDistribution::discrete(&[
            (-1.0, 0.1),
            (-0.5, 0.25),
            (-0.2, 0.15),
            (0.2, 0.15),
            (0.5, 0.25),
            (1.0, 0.1),
        ])
        .unwrap()
    }

    #[test]
    fn enumeration_matches_direct_sum() {
        let p = GibbsParams::new(0.37, 0.21, 0.4);
        for (dist, n) in [
            (SpinDistribution::rademacher(), 9),
            (SpinDistribution::uniform(4).unwrap(), 4),
            (six_atom(), 3),
        ] {
            let d = DisorderSample::sample(n, 11).unwrap();
            let direct: Vec<f64> = configurations(&dist, n)
                .iter()
                .map(|(s, lw)| direct_log_weight(&d, s, *lw, p))
                .collect();
            let got = log_z_exact(&d, &dist, p).unwrap();
            assert_abs_diff_eq!(got, log_sum_exp(&direct), epsilon = 1e-11);
        }
    }

    #[test]
    fn single_spin_closed_form() {
        let d = DisorderSample::sample(1, 5).unwrap();
        let (t, h) = (0.3, 0.25);
        let got = log_z_exact(&d, &SpinDistribution::rademacher(), GibbsParams::new(t, 0.0, h))
            .unwrap();
        let want = t.sqrt() * d.g(0, 0) - 0.5 * t + h.cosh().ln();
        assert_abs_diff_eq!(got, want, epsilon = 1e-13);
    }

    #[test]
    fn zero_disorder() {
        let n = 6;
        let d = DisorderSample::zero(n).unwrap();
        let (t, h) = (0.4, 0.2);
        let got = log_z_exact(&d, &SpinDistribution::rademacher(), GibbsParams::new(t, 0.0, h))
            .unwrap();
        assert_abs_diff_eq!(got, -t * n as f64 / 2.0 + n as f64 * h.cosh().ln(), epsilon = 1e-12);
    }

    #[test]
    fn linear_model_factorizes() {
        let (x, h) = (0.6f64, 0.3);
        for dist in [SpinDistribution::rademacher(), six_atom()] {
            let n = 5;
            let d = DisorderSample::sample(n, 3).unwrap();
            let ev = PhiEvaluator::new(dist.clone());
            let want: f64 = d
                .j_lin()
                .iter()
                .map(|j| ev.phi(h + x.sqrt() * j, -0.5 * x).unwrap())
                .sum();
            let got = log_z_exact(&d, &dist, GibbsParams::new(0.0, x, h)).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-11);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let d = DisorderSample::sample(25, 1).unwrap();
        let err = log_z_exact(&d, &SpinDistribution::rademacher(), GibbsParams::new(0.1, 0.0, 0.1))
            .unwrap_err();
        assert!(matches!(err, LabError::BudgetExceeded { .. }));
        let d = DisorderSample::sample(13, 1).unwrap();
        let err = coupled_gibbs(
            &d,
            &SpinDistribution::rademacher(),
            GibbsParams::new(0.1, 0.0, 0.1),
            Coupling::Quadratic { lambda: 0.1, q: 0.0 },
        )
        .unwrap_err();
        assert!(matches!(err, LabError::BudgetExceeded { .. }));
    }

    #[test]
    fn overlap_moments_against_pair_enumeration() {
        let p = GibbsParams::new(0.5, 0.3, 0.2);
        for (dist, n) in [
            (SpinDistribution::rademacher(), 2),
            (SpinDistribution::rademacher(), 4),
            (six_atom(), 3),
        ] {
            let d = DisorderSample::sample(n, 21).unwrap();
            let confs = configurations(&dist, n);
            let lw: Vec<f64> = confs
                .iter()
                .map(|(s, prior)| direct_log_weight(&d, s, *prior, p))
                .collect();
            let lz = log_sum_exp(&lw);
            let (mut r1, mut r2) = (0.0, 0.0);
            for (a, (sa, _)) in confs.iter().enumerate() {
                for (b, (sb, _)) in confs.iter().enumerate() {
                    let w = (lw[a] + lw[b] - 2.0 * lz).exp();
                    let r = overlap(sa, sb);
                    r1 += w * r;
                    r2 += w * r * r;
                }
            }
            let rep = gibbs_overlap_moments(&d, &dist, p).unwrap();
            assert_abs_diff_eq!(rep.mean_overlap, r1, epsilon = 1e-12);
            assert_abs_diff_eq!(rep.mean_overlap_sq, r2, epsilon = 1e-12);
            assert_abs_diff_eq!(rep.log_z, lz, epsilon = 1e-12);
        }
    }

    #[test]
    fn symmetric_case_has_zero_mean_overlap() {
        let d = DisorderSample::sample(5, 2).unwrap();
        let rep = gibbs_overlap_moments(&d, &six_atom(), GibbsParams::new(0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(rep.mean_overlap, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn coupled_pair_against_brute_force() {
        let p = GibbsParams::new(0.4, 0.2, 0.3);
        let coupling = Coupling::Quadratic { lambda: 0.7, q: 0.2 };
        for (dist, n) in [(SpinDistribution::rademacher(), 4), (six_atom(), 2)] {
            let d = DisorderSample::sample(n, 8).unwrap();
            let confs = configurations(&dist, n);
            let lw: Vec<f64> = confs
                .iter()
                .map(|(s, prior)| direct_log_weight(&d, s, *prior, p))
                .collect();
            let nf = n as f64;
            let mut terms = Vec::new();
            for a in 0..confs.len() {
                for b in 0..confs.len() {
                    let r = overlap(&confs[a].0, &confs[b].0);
                    terms.push((a, b, r, lw[a] + lw[b] + 0.7 * nf * (0.2 - r).powi(2)));
                }
            }
            let lz = log_sum_exp(&terms.iter().map(|t| t.3).collect::<Vec<_>>());
            let (mut r1, mut dev) = (0.0, 0.0);
            let mut marg = vec![0.0; confs.len()];
            for &(a, _, r, l) in &terms {
                let w = (l - lz).exp();
                r1 += w * r;
                dev += w * (0.2 - r).powi(2);
                marg[a] += w;
            }
            let mut cross = 0.0;
            for a in 0..confs.len() {
                for b in 0..confs.len() {
                    cross += marg[a] * marg[b] * overlap(&confs[a].0, &confs[b].0);
                }
            }
            let rep = coupled_gibbs(&d, &dist, p, coupling).unwrap();
            assert_abs_diff_eq!(rep.log_z, lz, epsilon = 1e-11);
            assert_abs_diff_eq!(rep.overlap, r1, epsilon = 1e-12);
            assert_abs_diff_eq!(rep.deviation_sq, dev, epsilon = 1e-12);
            assert_abs_diff_eq!(rep.cross_overlap, cross, epsilon = 1e-12);
        }
    }

    #[test]
    fn uncoupled_pair_is_product() {
        let p = GibbsParams::new(0.3, 0.1, 0.2);
        let d = DisorderSample::sample(6, 4).unwrap();
        let dist = SpinDistribution::rademacher();
        let single = gibbs_overlap_moments(&d, &dist, p).unwrap();
        let pair = coupled_gibbs(&d, &dist, p, Coupling::Quadratic { lambda: 0.0, q: 0.3 }).unwrap();
        assert_abs_diff_eq!(pair.log_z, 2.0 * single.log_z, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.overlap, single.mean_overlap, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.cross_overlap, single.mean_overlap, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.cross_overlap_sq, single.mean_overlap_sq, epsilon = 1e-12);
    }

    #[test]
    fn ising_and_generic_pair_paths_agree() {
        let p = GibbsParams::new(0.2, 0.3, 0.1);
        let d = DisorderSample::sample(5, 6).unwrap();
        let coupling = Coupling::Quadratic { lambda: 0.3, q: 0.1 };
        let dist = SpinDistribution::rademacher();
        let land = Landscape::new(&d, &dist, p).unwrap();
        let (mut configs, mut ells, mut masks) = (Vec::new(), Vec::new(), Vec::new());
        land.for_each(|s, dg, l| {
            configs.extend_from_slice(s);
            ells.push(l);
            masks.push(dg.iter().enumerate().fold(0u64, |m, (i, &b)| m | ((b as u64) << i)));
        });
        let a = ising_pairs(5, &ells, &masks, coupling, 0.1);
        let b = generic_pairs(5, &configs, &ells, coupling, 0.1);
        assert_abs_diff_eq!(a.log_shift + a.z.ln(), b.log_shift + b.z.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(a.s_dev / a.z, b.s_dev / b.z, epsilon = 1e-12);
    }

    #[test]
    fn linear_coupling_at_zero_t_is_psi_sum() {
        let (x, h, lam) = (0.4f64, 0.3, 0.25);
        for (dist, n) in [(SpinDistribution::rademacher(), 6), (six_atom(), 3)] {
            let ev = PhiEvaluator::new(dist.clone());
            let d = DisorderSample::sample(n, 13).unwrap();
            let want: f64 = d
                .j_lin()
                .iter()
                .map(|j| ev.psi(h + x.sqrt() * j, -0.5 * x, lam).unwrap())
                .sum();
            let rep = coupled_gibbs(
                &d,
                &dist,
                GibbsParams::new(0.0, x, h),
                Coupling::Linear { lambda: lam },
            )
            .unwrap();
            assert_abs_diff_eq!(rep.log_z, want, epsilon = 1e-11);
        }
    }
}
