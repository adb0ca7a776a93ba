#![allow(dead_code)]

use nalgebra::Matrix3;
use virusperiod::integrate::{flow, IntegratorConfig};
use virusperiod::{Coefficient, CoefficientSet, Model, PeriodicFn, Rates, SystemKind};

/// E* of the constant baseline set, by elimination:
/// A = α₁L/(μ₃+α₂+γ₂), then the L balance fixes S and the total balance fixes L.
pub const E_STAR: [f64; 3] = [
    1.285_714_285_714_285_7,
    6.224_489_795_918_367,
    2.489_795_918_367_347,
];

pub fn ln_e_star() -> [f64; 3] {
    E_STAR.map(f64::ln)
}

pub fn c0_rates() -> Rates<f64> {
    Rates {
        b: 1.0,
        mu1: 0.1,
        mu2: 0.1,
        mu3: 0.1,
        beta1: 0.2,
        beta2: 0.2,
        gamma1: 0.1,
        gamma2: 0.3,
        alpha1: 0.2,
        alpha2: 0.1,
    }
}

pub fn c0() -> CoefficientSet {
    CoefficientSet::constant(1.0, c0_rates()).unwrap()
}

/// `b(t) = 1 + 0.5 sin 2πt`, everything else as in the baseline.
pub fn sinusoidal_b() -> CoefficientSet {
    c0().with(
        Coefficient::B,
        PeriodicFn::fourier(1.0, 1.0, &[(0.0, 0.5)]).unwrap(),
    )
    .unwrap()
}

/// Taylor series with scaling and squaring.
pub fn expm(a: Matrix3<f64>) -> Matrix3<f64> {
    let norm = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * 3.0;
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = a / 2f64.powi(squarings);
    let mut term = Matrix3::identity();
    let mut sum = Matrix3::identity();
    for k in 1..30 {
        term = term * a / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// Central differences of the fixed-step RK4 period map.
pub fn fd_monodromy(model: Model<'_>, x0: [f64; 3]) -> Matrix3<f64> {
    let cfg = IntegratorConfig::rk4(1e-3);
    let eps = 1e-5;
    let mut m = Matrix3::zeros();
    for j in 0..3 {
        let mut xp = x0;
        let mut xm = x0;
        xp[j] += eps;
        xm[j] -= eps;
        let fp = flow(model, SystemKind::Transformed, xp, 0.0, model.omega(), &cfg).unwrap();
        let fm = flow(model, SystemKind::Transformed, xm, 0.0, model.omega(), &cfg).unwrap();
        for i in 0..3 {
            m[(i, j)] = (fp[i] - fm[i]) / (2.0 * eps);
        }
    }
    m
}

/// Central differences of the transformed field.
pub fn fd_jacobian(model: Model<'_>, t: f64, x: [f64; 3]) -> Matrix3<f64> {
    let rhs = |x: [f64; 3]| {
        model
            .rhs_transformed(t, virusperiod::LogState::from_array(x))
            .unwrap()
            .to_array()
    };
    let eps = 1e-6;
    let mut j = Matrix3::zeros();
    for c in 0..3 {
        let mut xp = x;
        let mut xm = x;
        xp[c] += eps;
        xm[c] -= eps;
        let (fp, fm) = (rhs(xp), rhs(xm));
        for r in 0..3 {
            j[(r, c)] = (fp[r] - fm[r]) / (2.0 * eps);
        }
    }
    j
}

pub fn max_abs_diff(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn brute_force_extrema<F: Fn(f64) -> f64>(f: F, period: f64, n: usize) -> (f64, f64) {
    (0..n)
        .map(|k| f(period * k as f64 / n as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}
