mod common;

use common::*;
use nalgebra::Matrix3;
use virusperiod::integrate::{flow, integrate, monodromy, sample, IntegratorConfig};
use virusperiod::{CoefficientSet, LogState, Model, Rates, State, SystemKind};

#[test]
fn monodromy_at_equilibrium_is_the_matrix_exponential() {
    let c = c0();
    let m = Model::new(&c);
    let x = ln_e_star();
    let j = fd_jacobian(m, 0.0, x);
    let expected = expm(j * m.omega());
    let got = monodromy(m, LogState::from_array(x), &IntegratorConfig::rk45(1e-11, 1e-13)).unwrap();
    assert!(max_abs_diff(&got, &expected) < 1e-7, "{got} vs {expected}");
}

#[test]
fn monodromy_matches_finite_differences_off_equilibrium() {
    for c in [c0(), sinusoidal_b()] {
        let m = Model::new(&c);
        let x0 = [0.5, 1.2, 0.4];
        let got = monodromy(m, LogState::from_array(x0), &IntegratorConfig::default()).unwrap();
        let fd = fd_monodromy(m, x0);
        assert!(max_abs_diff(&got, &fd) < 1e-5, "{got} vs {fd}");
    }
}

#[test]
fn monodromy_of_a_zero_field_is_identity() {
    let zero = CoefficientSet::constant(2.0, Rates::default()).unwrap();
    let got = monodromy(
        Model::new(&zero),
        LogState::new(0.1, 0.2, 0.3),
        &Default::default(),
    )
    .unwrap();
    assert!(max_abs_diff(&got, &Matrix3::identity()) < 1e-14);
}

#[test]
fn rk4_is_fourth_order() {
    let c = c0();
    let m = Model::new(&c);
    let x0 = State::new(10.0, 1.0, 1.0).to_log().unwrap().to_array();
    let reference = flow(
        m,
        SystemKind::Transformed,
        x0,
        0.0,
        1.0,
        &IntegratorConfig::rk45(1e-13, 1e-15),
    )
    .unwrap();
    let err = |h: f64| {
        let x = flow(
            m,
            SystemKind::Transformed,
            x0,
            0.0,
            1.0,
            &IntegratorConfig::rk4(h),
        )
        .unwrap();
        (0..3).map(|i| (x[i] - reference[i]).abs()).fold(0.0, f64::max)
    };
    let ratio = err(0.1) / err(0.05);
    assert!((10.0..=24.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn flow_composes() {
    let c = sinusoidal_b();
    let m = Model::new(&c);
    let cfg = IntegratorConfig::rk45(1e-11, 1e-13);
    let x0 = [0.3, 1.0, 0.5];
    for system in [SystemKind::Transformed, SystemKind::Original] {
        let y0 = match system {
            SystemKind::Transformed => x0,
            SystemKind::Original => x0.map(f64::exp),
        };
        let direct = flow(m, system, y0, 0.2, 1.7, &cfg).unwrap();
        let mid = flow(m, system, y0, 0.2, 0.65, &cfg).unwrap();
        let split = flow(m, system, mid, 0.85, 1.05, &cfg).unwrap();
        for i in 0..3 {
            assert!((direct[i] - split[i]).abs() < 1e-8 * (1.0 + direct[i].abs()));
        }
    }
}

#[test]
fn equilibrium_is_invariant() {
    let c = c0();
    let m = Model::new(&c);
    let x = flow(
        m,
        SystemKind::Transformed,
        ln_e_star(),
        0.0,
        10.0,
        &Default::default(),
    )
    .unwrap();
    let y = flow(m, SystemKind::Original, E_STAR, 0.0, 10.0, &Default::default()).unwrap();
    for i in 0..3 {
        assert!((x[i] - ln_e_star()[i]).abs() < 1e-9);
        assert!((y[i] - E_STAR[i]).abs() < 1e-9 * E_STAR[i]);
    }
}

#[test]
fn pure_decay_has_a_closed_form() {
    let rates = Rates {
        mu1: 0.3,
        mu2: 0.5,
        mu3: 0.7,
        ..Rates::default()
    };
    let c = CoefficientSet::constant(1.0, rates).unwrap();
    let m = Model::new(&c);
    let y0 = [2.0, 3.0, 4.0];
    let times = [0.5, 1.0, 2.5, 4.0];
    let ys = sample(m, SystemKind::Original, y0, 0.0, &times, &Default::default()).unwrap();
    for (t, y) in times.iter().zip(&ys) {
        for (i, mu) in [0.3_f64, 0.5, 0.7].iter().enumerate() {
            let exact = y0[i] * (-mu * t).exp();
            assert!((y[i] - exact).abs() < 1e-9 * exact);
        }
    }
}

#[test]
fn dense_output_tracks_the_solution() {
    let c = sinusoidal_b();
    let m = Model::new(&c);
    let x0 = [0.3, 1.0, 0.5];
    let cfg = IntegratorConfig::default().with_max_step(1.0 / 128.0);
    let traj = integrate(m, SystemKind::Transformed, x0, 0.0, 1.0, &cfg).unwrap();
    assert_eq!(traj.len(), traj.steps() + 1);
    let times: Vec<f64> = (1..40).map(|k| k as f64 / 40.0 + 0.003).collect();
    let exact = sample(m, SystemKind::Transformed, x0, 0.0, &times, &cfg).unwrap();
    for (t, e) in times.iter().zip(&exact) {
        let x = traj.interpolate(*t);
        for i in 0..3 {
            assert!((x[i] - e[i]).abs() < 1e-8, "t={t}");
        }
    }
}
