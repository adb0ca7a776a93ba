//! Right-hand sides of the S–L–A system and of its logarithmic form.
//!
//! The original system, for susceptible `S`, latent `L` and attacking `A`
//! computers:
//!
//! ```text
//! S' = b − μ₁S − β₁SL − β₂SA + γ₁L + γ₂A
//! L' = β₁SL + β₂SA + α₂A − (μ₂+α₁+γ₁)L
//! A' = α₁L − (μ₃+α₂+γ₂)A
//! ```
//!
//! With `S = eˣ¹, L = eˣ², A = eˣ³` each equation divides by its own
//! compartment, which gives the transformed system whose solutions are
//! positive by construction.

use std::fmt;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::{CoefficientSet, Rates};

/// Largest exponent argument accepted before reporting divergence.
pub const EXP_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub s: f64,
    pub l: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogState {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl State {
    pub fn new(s: f64, l: f64, a: f64) -> Self {
        Self { s, l, a }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.s, self.l, self.a]
    }

    pub fn from_array([s, l, a]: [f64; 3]) -> Self {
        Self { s, l, a }
    }

    pub fn to_log(self) -> Result<LogState> {
        for (component, value) in [("S", self.s), ("L", self.l), ("A", self.a)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Domain { component, value });
            }
        }
        Ok(LogState::new(self.s.ln(), self.l.ln(), self.a.ln()))
    }

    pub fn min_component(self) -> f64 {
        self.s.min(self.l).min(self.a)
    }
}

impl LogState {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_array([x1, x2, x3]: [f64; 3]) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn from_log(self) -> State {
        State::new(self.x1.exp(), self.x2.exp(), self.x3.exp())
    }

    pub fn is_finite(self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Supremum-norm distance.
    pub fn dist_inf(self, other: LogState) -> f64 {
        let (a, b) = (self.to_array(), other.to_array());
        (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for LogState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x1, self.x2, self.x3)
    }
}

/// Which rate multiplies `A` in the outflow term of the A-equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ADecay {
    /// `μ₃+α₂+γ₂`, consistent with the hypothesis and the transformed system.
    #[default]
    Alpha2,
    /// `μ₃+α₁+γ₂`, as literally printed in the original A-equation.
    Alpha1,
}

impl ADecay {
    fn outflow(self, r: &Rates<f64>) -> f64 {
        match self {
            ADecay::Alpha2 => r.mu3 + r.alpha2 + r.gamma2,
            ADecay::Alpha1 => r.mu3 + r.alpha1 + r.gamma2,
        }
    }
}

/// Which of the two equivalent systems is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Original,
    Transformed,
}

/// The coefficient set together with the A-outflow variant.
#[derive(Debug, Clone, Copy)]
pub struct Model<'a> {
    pub coeffs: &'a CoefficientSet,
    pub a_decay: ADecay,
}

impl<'a> Model<'a> {
    pub fn new(coeffs: &'a CoefficientSet) -> Self {
        Self {
            coeffs,
            a_decay: ADecay::default(),
        }
    }

    pub fn with_a_decay(coeffs: &'a CoefficientSet, a_decay: ADecay) -> Self {
        Self { coeffs, a_decay }
    }

    pub fn omega(&self) -> f64 {
        self.coeffs.omega()
    }

    pub fn rhs_original(&self, t: f64, y: State) -> State {
        let r = self.coeffs.rates_at(t);
        State::from_array(original_field(&r, self.a_decay, y.to_array()))
    }

    pub fn rhs_transformed(&self, t: f64, x: LogState) -> Result<LogState> {
        let r = self.coeffs.rates_at(t);
        transformed_field(&r, self.a_decay, x.to_array(), t).map(LogState::from_array)
    }

    pub fn jacobian_transformed(&self, t: f64, x: LogState) -> Result<Matrix3<f64>> {
        let r = self.coeffs.rates_at(t);
        transformed_jacobian(&r, x.to_array(), t)
    }
}

pub(crate) fn original_field(r: &Rates<f64>, decay: ADecay, [s, l, a]: [f64; 3]) -> [f64; 3] {
    [
        r.b - r.mu1 * s - r.beta1 * s * l - r.beta2 * s * a + r.gamma1 * l + r.gamma2 * a,
        r.beta1 * s * l + r.beta2 * s * a + r.alpha2 * a - (r.mu2 + r.alpha1 + r.gamma1) * l,
        r.alpha1 * l - decay.outflow(r) * a,
    ]
}

/// The nine exponentials appearing in the transformed field.
struct Exps {
    neg_x1: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    x2_m_x1: f64,
    x3_m_x1: f64,
    x3_m_x2: f64,
    x2_m_x3: f64,
    x1_p_x3_m_x2: f64,
}

fn guarded_exp(arg: f64, t: f64) -> Result<f64> {
    if arg > EXP_CAP || arg.is_nan() {
        return Err(Error::Divergence {
            t,
            reason: format!("exponent argument {arg} exceeds the cap {EXP_CAP}"),
        });
    }
    Ok(arg.exp())
}

impl Exps {
    fn new([x1, x2, x3]: [f64; 3], t: f64) -> Result<Self> {
        Ok(Self {
            neg_x1: guarded_exp(-x1, t)?,
            x1: guarded_exp(x1, t)?,
            x2: guarded_exp(x2, t)?,
            x3: guarded_exp(x3, t)?,
            x2_m_x1: guarded_exp(x2 - x1, t)?,
            x3_m_x1: guarded_exp(x3 - x1, t)?,
            x3_m_x2: guarded_exp(x3 - x2, t)?,
            x2_m_x3: guarded_exp(x2 - x3, t)?,
            x1_p_x3_m_x2: guarded_exp(x1 + x3 - x2, t)?,
        })
    }
}

pub(crate) fn transformed_field(r: &Rates<f64>, decay: ADecay, x: [f64; 3], t: f64) -> Result<[f64; 3]> {
    let e = Exps::new(x, t)?;
    Ok([
        r.b * e.neg_x1 - r.beta1 * e.x2 - r.beta2 * e.x3 + r.gamma1 * e.x2_m_x1 + r.gamma2 * e.x3_m_x1
            - r.mu1,
        r.beta1 * e.x1 + r.beta2 * e.x1_p_x3_m_x2 + r.alpha2 * e.x3_m_x2 - (r.mu2 + r.alpha1 + r.gamma1),
        r.alpha1 * e.x2_m_x3 - decay.outflow(r),
    ])
}

pub(crate) fn transformed_jacobian(r: &Rates<f64>, x: [f64; 3], t: f64) -> Result<Matrix3<f64>> {
    let e = Exps::new(x, t)?;
    let g1 = r.gamma1 * e.x2_m_x1;
    let g2 = r.gamma2 * e.x3_m_x1;
    let cross = r.beta2 * e.x1_p_x3_m_x2;
    let back = r.alpha2 * e.x3_m_x2;
    let act = r.alpha1 * e.x2_m_x3;
    Ok(Matrix3::new(
        -r.b * e.neg_x1 - g1 - g2,
        -r.beta1 * e.x2 + g1,
        -r.beta2 * e.x3 + g2,
        r.beta1 * e.x1 + cross,
        -cross - back,
        cross + back,
        0.0,
        act,
        -act,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::{Coefficient, PeriodicFn};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Algebraic-elimination oracle (30-digit evaluation).
    const E_STAR: [f64; 3] = [
        1.285_714_285_714_285_7,
        6.224_489_795_918_367,
        2.489_795_918_367_347,
    ];

    fn c0() -> CoefficientSet {
        CoefficientSet::constant(
            1.0,
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
            },
        )
        .unwrap()
    }

    fn zero_rates() -> Rates<f64> {
        Rates {
            b: 0.0,
            mu1: 0.0,
            mu2: 0.0,
            mu3: 0.0,
            beta1: 0.0,
            beta2: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            alpha1: 0.0,
            alpha2: 0.0,
        }
    }

    #[test]
    fn zero_field() {
        let c = CoefficientSet::constant(1.0, zero_rates()).unwrap();
        let m = Model::new(&c);
        assert_eq!(
            m.rhs_original(0.3, State::new(3.0, 2.0, 1.0)).to_array(),
            [0.0; 3]
        );
        assert_eq!(
            m.jacobian_transformed(0.3, LogState::new(0.1, -0.2, 0.5))
                .unwrap(),
            Matrix3::zeros()
        );
    }

    #[test]
    fn susceptible_balance() {
        let mut r = zero_rates();
        r.b = 1.0;
        r.mu1 = 0.1;
        let c = CoefficientSet::constant(1.0, r).unwrap();
        let d = Model::new(&c).rhs_original(0.0, State::new(10.0, 1.0, 1.0));
        assert_eq!(d.s, 0.0);
    }

    #[test]
    fn equilibrium_is_stationary_in_both_systems() {
        let c = c0();
        let m = Model::new(&c);
        let y = State::from_array(E_STAR);
        for v in m.rhs_original(0.0, y).to_array() {
            assert!(v.abs() < 1e-9, "{v}");
        }
        for v in m.rhs_transformed(0.0, y.to_log().unwrap()).unwrap().to_array() {
            assert!(v.abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn transformed_mu1_only() {
        let mut r = zero_rates();
        r.mu1 = 1.0;
        let c = CoefficientSet::constant(1.0, r).unwrap();
        let d = Model::new(&c)
            .rhs_transformed(0.0, LogState::new(3.0, -1.0, 0.5))
            .unwrap();
        assert_eq!(d.x1, -1.0);
    }

    #[test]
    fn log_map_examples() {
        assert_eq!(State::new(1.0, 1.0, 1.0).to_log().unwrap().to_array(), [0.0; 3]);
        let e = std::f64::consts::E;
        let x = State::new(e, e * e, e * e * e).to_log().unwrap();
        for (got, want) in x.to_array().into_iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let err = State::new(10.0, 0.0, 1.0).to_log().unwrap_err();
        assert!(matches!(err, Error::Domain { component: "L", .. }));
    }

    #[test]
    fn log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let y = State::new(
                rng.gen_range(1e-3..1e3),
                rng.gen_range(1e-3..1e3),
                rng.gen_range(1e-3..1e3),
            );
            let back = y.to_log().unwrap().from_log();
            for (a, b) in back.to_array().into_iter().zip(y.to_array()) {
                assert!((a - b).abs() <= 1e-14 * b);
            }
        }
    }

    #[test]
    fn overflow_guard_reports_divergence() {
        let c = c0();
        let m = Model::new(&c);
        let err = m
            .rhs_transformed(0.5, LogState::new(0.0, 750.0, 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
        assert!(m
            .jacobian_transformed(0.5, LogState::new(-701.0, 0.0, 0.0))
            .is_err());
    }

    fn seasonal() -> CoefficientSet {
        c0().with(
            Coefficient::B,
            PeriodicFn::fourier(1.0, 1.0, &[(0.2, 0.5)]).unwrap(),
        )
        .unwrap()
        .with(
            Coefficient::Alpha1,
            PeriodicFn::fourier(1.0, 0.2, &[(0.0, 0.05), (0.01, 0.0)]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scaling_identity_between_systems() {
        let c = seasonal();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for decay in [ADecay::Alpha2, ADecay::Alpha1] {
            let m = Model::with_a_decay(&c, decay);
            for _ in 0..200 {
                let t = rng.gen_range(-2.0..2.0);
                let y = State::new(
                    rng.gen_range(0.01..50.0),
                    rng.gen_range(0.01..50.0),
                    rng.gen_range(0.01..50.0),
                );
                let orig = m.rhs_original(t, y).to_array();
                let tr = m.rhs_transformed(t, y.to_log().unwrap()).unwrap().to_array();
                let ys = y.to_array();
                let mag = term_magnitudes(&c.rates_at(t), ys);
                for i in 0..3 {
                    let lhs = tr[i] * ys[i];
                    assert!(
                        (lhs - orig[i]).abs() <= 1e-12 * orig[i].abs().max(mag[i]),
                        "component {i}: {lhs} vs {}",
                        orig[i]
                    );
                }
            }
        }
    }

    /// Sum of absolute values of the individual terms of each equation.
    fn term_magnitudes(r: &Rates<f64>, [s, l, a]: [f64; 3]) -> [f64; 3] {
        [
            r.b + r.mu1 * s + r.beta1 * s * l + r.beta2 * s * a + r.gamma1 * l + r.gamma2 * a,
            r.beta1 * s * l + r.beta2 * s * a + r.alpha2 * a + (r.mu2 + r.alpha1 + r.gamma1) * l,
            r.alpha1 * l + (r.mu3 + r.alpha1.max(r.alpha2) + r.gamma2) * a,
        ]
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in [c0(), seasonal()] {
            let m = Model::new(&c);
            for _ in 0..100 {
                let t = rng.gen_range(0.0..1.0);
                let x = [
                    rng.gen_range(-1.0..2.0),
                    rng.gen_range(-1.0..2.0),
                    rng.gen_range(-1.0..2.0),
                ];
                let jac = m.jacobian_transformed(t, LogState::from_array(x)).unwrap();
                let h = 1e-6;
                for j in 0..3 {
                    let (mut xp, mut xm) = (x, x);
                    xp[j] += h;
                    xm[j] -= h;
                    let fp = m.rhs_transformed(t, LogState::from_array(xp)).unwrap().to_array();
                    let fm = m.rhs_transformed(t, LogState::from_array(xm)).unwrap().to_array();
                    for i in 0..3 {
                        let fd = (fp[i] - fm[i]) / (2.0 * h);
                        assert!(
                            (jac[(i, j)] - fd).abs() < 1e-5,
                            "({i},{j}): {} vs {fd}",
                            jac[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn jacobian_last_diagonal_entry() {
        let c = seasonal();
        let m = Model::new(&c);
        let x = LogState::new(0.3, 1.1, -0.4);
        let jac = m.jacobian_transformed(0.37, x).unwrap();
        let alpha1 = c.get(Coefficient::Alpha1).eval(0.37);
        assert_eq!(jac[(2, 2)], -alpha1 * (x.x2 - x.x3).exp());
    }
}
