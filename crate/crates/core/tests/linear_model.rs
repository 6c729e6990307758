use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use sklab::gaussian::{gaussian_quad_exp_moment, DEFAULT_HERMITE_ORDER};
use sklab::{HermiteRule, LinearModel, PhiEvaluator, SpinDistribution};

fn laws() -> Vec<SpinDistribution> {
    vec![
        SpinDistribution::rademacher(),
        SpinDistribution::uniform(8).unwrap(),
        SpinDistribution::uniform(32).unwrap(),
        SpinDistribution::discrete(&[(-1.0, 0.2), (-0.3, 0.3), (0.3, 0.3), (1.0, 0.2)]).unwrap(),
        SpinDistribution::discrete(&[(-0.5, 0.25), (0.0, 0.5), (0.5, 0.25)]).unwrap(),
    ]
}

fn model(dist: SpinDistribution, order: usize, h: f64) -> LinearModel {
    LinearModel::new(PhiEvaluator::new(dist), HermiteRule::new(order).unwrap(), h).unwrap()
}

#[test]
fn default_order_agrees_with_double_order() {
    for dist in [SpinDistribution::rademacher(), SpinDistribution::uniform(8).unwrap()] {
        for &h in &[0.0, 0.25, 0.5, 1.0] {
            let a = model(dist.clone(), DEFAULT_HERMITE_ORDER, h);
            let b = model(dist.clone(), 2 * DEFAULT_HERMITE_ORDER - 1, h);
            for k in 0..=16 {
                let x = 0.25 * k as f64;
                assert_abs_diff_eq!(a.q_lin(x).unwrap(), b.q_lin(x).unwrap(), epsilon = 1e-9);
                assert_abs_diff_eq!(a.alpha_lin(x).unwrap(), b.alpha_lin(x).unwrap(), epsilon = 1e-9);
            }
        }
    }
}

#[test]
fn alpha_lin_matches_monte_carlo() {
    let (x, h) = (0.7f64, 0.3);
    let la = model(SpinDistribution::uniform(8).unwrap(), 121, h);
    let ev = la.evaluator();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = 1_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..m {
        let g: f64 = StandardNormal.sample(&mut rng);
        let v = ev.phi(h + x.sqrt() * g, -0.5 * x).unwrap();
        s += v;
        s2 += v * v;
    }
    let mean = s / m as f64;
    let se = ((s2 / m as f64 - mean * mean) / m as f64).sqrt();
    assert!((la.alpha_lin(x).unwrap() - mean).abs() < 4.0 * se);
}

#[test]
fn alpha_lin_slope_is_minus_half_q_lin() {
    let eps = 1e-4;
    for dist in laws() {
        for &h in &[0.0, 0.3, 0.8] {
            let la = model(dist.clone(), DEFAULT_HERMITE_ORDER, h);
            for &x in &[0.1, 0.5, 1.0, 2.0, 3.5] {
                let fd = (la.alpha_lin(x + eps).unwrap() - la.alpha_lin(x - eps).unwrap())
                    / (2.0 * eps);
                assert_abs_diff_eq!(fd, -0.5 * la.q_lin(x).unwrap(), epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn dq_lin_dx_matches_finite_difference() {
    let eps = 1e-4;
    for dist in laws() {
        for &h in &[0.0, 0.3, 0.8] {
            let la = model(dist.clone(), DEFAULT_HERMITE_ORDER, h);
            for &x in &[0.1, 0.5, 1.0, 2.0, 3.5] {
                let fd = (la.q_lin(x + eps).unwrap() - la.q_lin(x - eps).unwrap()) / (2.0 * eps);
                assert_abs_diff_eq!(la.dq_lin_dx(x).unwrap(), fd, epsilon = 1e-6);
            }
        }
    }
}

#[test]
fn ising_slope_reduces_to_fourth_cumulant() {
    let la = model(SpinDistribution::rademacher(), DEFAULT_HERMITE_ORDER, 0.4);
    let ev = la.evaluator();
    for &x in &[0.2, 1.0, 3.0] {
        let sx = f64::sqrt(x);
        let want = -0.5
            * la.rule().expect(|g| {
                let p = ev.partials(0.4 + sx * g, -0.5 * x).unwrap();
                p.duuuu + p.duv
            });
        assert_abs_diff_eq!(la.dq_lin_dx(x).unwrap(), want, epsilon = 1e-12);
    }
}

#[test]
fn general_spins_need_the_full_slope() {
    // for non-±1 spins -E[phi_uuuu + phi_uv]/2 differs from the true derivative
    let la = model(SpinDistribution::uniform(8).unwrap(), DEFAULT_HERMITE_ORDER, 0.3);
    let ev = la.evaluator();
    let x = 0.4f64;
    let short = -0.5
        * la.rule().expect(|g| {
            let p = ev.partials(0.3 + x.sqrt() * g, -0.5 * x).unwrap();
            p.duuuu + p.duv
        });
    let eps = 1e-4;
    let fd = (la.q_lin(x + eps).unwrap() - la.q_lin(x - eps).unwrap()) / (2.0 * eps);
    assert!((short - fd).abs() > 1e-2);
    assert_abs_diff_eq!(la.dq_lin_dx(x).unwrap(), fd, epsilon = 1e-6);
}

#[test]
fn q_lin_positive_with_field() {
    for dist in laws() {
        let la = model(dist, 61, 0.05);
        assert!(la.q_lin(0.0).unwrap() > 0.0);
        assert!(la.q_lin(1.0).unwrap() > 0.0);
    }
    let point_mass = SpinDistribution::discrete(&[(0.0, 1.0)]).unwrap();
    assert_eq!(model(point_mass, 61, 0.5).q_lin(1.0).unwrap(), 0.0);
}

#[test]
fn q_lin_within_unit_interval_and_increasing_in_h() {
    for dist in laws() {
        let mut last = -1.0;
        for k in 0..=10 {
            let la = model(dist.clone(), 61, 0.2 * k as f64);
            let q = la.q_lin(0.5).unwrap();
            assert!((0.0..=1.0).contains(&q));
            assert!(q >= last);
            last = q;
        }
    }
}

#[test]
fn quadratic_exponential_moment_bound() {
    for i in 0..=20 {
        let v = 0.2 * i as f64 / 20.0;
        for j in 0..=100 {
            let u = -5.0 + 0.1 * j as f64;
            let m = gaussian_quad_exp_moment(u, v).unwrap();
            assert!(m <= (u * u).exp() / (1.0 - 2.0 * v).sqrt() * (1.0 + 1e-12));
            if i == 20 {
                assert!(m / (u * u).exp() <= 1.0 / 0.6f64.sqrt() + 1e-12);
            }
        }
    }
}

#[test]
fn concentration_bound_at_one_twentieth() {
    let la = model(SpinDistribution::rademacher(), DEFAULT_HERMITE_ORDER, 0.3);
    let lam = 1.0 / 20.0;
    let var = la.overlap_field_variance(0.2).unwrap();
    let want = (1.0 / 0.6f64.sqrt()).ln() + 2.0 * lam * var;
    assert_abs_diff_eq!(la.concentration_bound(0.2, lam).unwrap(), want, epsilon = 1e-14);
    assert!(la.concentration_bound(0.2, 0.125).is_err());
    // variance against an independent trapezoid integral over the Gaussian
    let ev = la.evaluator();
    let q = la.q_lin(0.2).unwrap();
    let step = 1e-3;
    let mut acc = 0.0;
    for k in -12_000..=12_000 {
        let g = k as f64 * step;
        let du = ev.partials(0.3 + 0.2f64.sqrt() * g, -0.1).unwrap().du;
        acc += (du * du - q).powi(2) * (-0.5 * g * g).exp();
    }
    let num = acc * step / (2.0 * std::f64::consts::PI).sqrt();
    assert_abs_diff_eq!(var, num, epsilon = 1e-12);
}
