//! Node/weight generators for the two fixed quadrature families used by the lab:
//! Gauss–Legendre on [-1, 1] (discretizing continuous spin laws) and
//! Gauss–Hermite for expectations over a standard normal variable.
//!
//! Both use the three-term recurrence of the orthogonal polynomials and only
//! locate the nonnegative half of the nodes; the other half is mirrored so the
//! rules are exactly symmetric.

use std::f64::consts::PI;

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX: usize = 100;

/// Gauss–Legendre rule on [-1, 1]. Weights sum to 2. Nodes ascending.
pub(crate) fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_MAX {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= NEWTON_TOL {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = 1.0;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// Gauss–Hermite rule for the weight `exp(-z^2)` (physicists' convention).
/// Returns nodes ascending and weights summing to `sqrt(pi)`.
///
/// Positive roots are bracketed by sign changes on a grid finer than the
/// smallest root spacing, then bisected to full precision.
pub(crate) fn gauss_hermite_physicists(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let z_max = (2.0 * n as f64 + 1.0).sqrt();
    let step = 0.1 * PI / z_max;
    let mut roots = Vec::with_capacity(n / 2);
    let mut a = 0.5 * step;
    let mut pa = hermite_orthonormal(n, a).0;
    while roots.len() < n / 2 {
        let b = a + step;
        let pb = hermite_orthonormal(n, b).0;
        if pa == 0.0 || pa.signum() != pb.signum() {
            roots.push(bisect_root(n, a, b, pa));
        }
        a = b;
        pa = pb;
        assert!(a <= z_max + step, "Hermite root bracketing failed for order {n}");
    }
    let weight = |z: f64| {
        let (_, d, ln_scale) = hermite_orthonormal(n, z);
        2.0 * (-2.0 * (d.abs().ln() + ln_scale)).exp()
    };
    for (i, &z) in roots.iter().rev().enumerate() {
        let w = weight(z);
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        weights[n / 2] = weight(0.0);
    }
    (nodes, weights)
}

fn bisect_root(n: usize, mut a: f64, mut b: f64, mut pa: f64) -> f64 {
    if pa == 0.0 {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let pm = hermite_orthonormal(n, m).0;
        if pm == 0.0 {
            return m;
        }
        if pm.signum() == pa.signum() {
            a = m;
            pa = pm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Orthonormal Hermite polynomial of degree `n` at `z` and its derivative, both
/// multiplied by `exp(-ln_scale)` to stay finite at large orders.
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64, f64) {
    const RESCALE: f64 = 1e150;
    let mut p1 = PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut ln_scale = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
        if p1.abs() > RESCALE {
            p1 /= RESCALE;
            p2 /= RESCALE;
            ln_scale += RESCALE.ln();
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, ln_scale)
}
