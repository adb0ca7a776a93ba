//! Time integration of the model, the variational equations, and
//! quadrature.

mod quadrature;
mod rk;

pub use quadrature::{quadrature, simpson, Quadrature, QUADRATURE_MAX_N, QUADRATURE_RTOL};
pub use rk::{IntegratorConfig, Method, OdeSystem, Stepper};

use nalgebra::Matrix3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{original_field, transformed_field, transformed_jacobian, LogState, Model, SystemKind};

struct Original<'a>(Model<'a>);
struct Transformed<'a>(Model<'a>);
/// State plus the row-major 3×3 sensitivity matrix.
struct Variational<'a>(Model<'a>);

impl OdeSystem<3> for Original<'_> {
    fn rhs(&self, t: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        let r = self.0.coeffs.rates_at(t);
        Ok(original_field(&r, self.0.a_decay, *y))
    }
}

impl OdeSystem<3> for Transformed<'_> {
    fn rhs(&self, t: f64, x: &[f64; 3]) -> Result<[f64; 3]> {
        let r = self.0.coeffs.rates_at(t);
        transformed_field(&r, self.0.a_decay, *x, t)
    }
}

impl OdeSystem<12> for Variational<'_> {
    fn rhs(&self, t: f64, y: &[f64; 12]) -> Result<[f64; 12]> {
        let r = self.0.coeffs.rates_at(t);
        let x = [y[0], y[1], y[2]];
        let f = transformed_field(&r, self.0.a_decay, x, t)?;
        let j = transformed_jacobian(&r, x, t)?;
        let mut out = [0.0; 12];
        out[..3].copy_from_slice(&f);
        for row in 0..3 {
            for col in 0..3 {
                out[3 + 3 * row + col] = (0..3).map(|k| j[(row, k)] * y[3 + 3 * k + col]).sum();
            }
        }
        Ok(out)
    }
}

/// Accepted integrator steps of one of the two systems, with the field
/// value at every step for cubic Hermite dense output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub system: SystemKind,
    pub times: Vec<f64>,
    pub states: Vec<[f64; 3]>,
    pub derivatives: Vec<[f64; 3]>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn first(&self) -> [f64; 3] {
        self.states[0]
    }

    pub fn last(&self) -> [f64; 3] {
        *self.states.last().expect("trajectory is never empty")
    }

    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Cubic Hermite interpolation between recorded steps; clamps outside.
    pub fn interpolate(&self, t: f64) -> [f64; 3] {
        if t <= self.t0() {
            return self.first();
        }
        if t >= self.t_end() {
            return self.last();
        }
        let k = self.times.partition_point(|&ti| ti <= t) - 1;
        let (ta, tb) = (self.times[k], self.times[k + 1]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (ya, yb) = (&self.states[k], &self.states[k + 1]);
        let (fa, fb) = (&self.derivatives[k], &self.derivatives[k + 1]);
        std::array::from_fn(|i| h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i])
    }
}

fn check_initial(system: SystemKind, y0: &[f64; 3]) -> Result<()> {
    if system == SystemKind::Original && y0.iter().any(|&v| !(v > 0.0)) {
        // Defined for any y, but negative compartments are meaningless.
        return Err(Error::Precondition(format!(
            "initial state of the original system must be positive, got {y0:?}"
        )));
    }
    Ok(())
}

macro_rules! with_system {
    ($model:expr, $system:expr, |$sys:ident| $body:expr) => {
        match $system {
            SystemKind::Original => {
                let $sys = Original($model);
                $body
            }
            SystemKind::Transformed => {
                let $sys = Transformed($model);
                $body
            }
        }
    };
}

/// Integrates either system over `[t0, t1]`, recording every accepted step.
pub fn integrate(
    model: Model<'_>,
    system: SystemKind,
    y0: [f64; 3],
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    if !(t1 > t0) {
        return Err(Error::Precondition(format!(
            "integration interval must satisfy t1 > t0, got [{t0}, {t1}]"
        )));
    }
    check_initial(system, &y0)?;
    with_system!(model, system, |sys| {
        let mut st = Stepper::new(&sys, t0, y0, *cfg)?;
        let mut traj = Trajectory {
            system,
            times: vec![t0],
            states: vec![y0],
            derivatives: vec![*st.derivative()],
        };
        st.advance_to(t1, |t, y, f| {
            traj.times.push(t);
            traj.states.push(*y);
            traj.derivatives.push(*f);
        })?;
        Ok(traj)
    })
}

/// Endpoint of the flow over a duration `dt ≥ 0`; `dt = 0` returns `y0`.
pub fn flow(
    model: Model<'_>,
    system: SystemKind,
    y0: [f64; 3],
    t0: f64,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<[f64; 3]> {
    if !(dt >= 0.0) {
        return Err(Error::Precondition(format!(
            "flow duration must be ≥ 0, got {dt}"
        )));
    }
    if dt == 0.0 {
        return Ok(y0);
    }
    check_initial(system, &y0)?;
    with_system!(model, system, |sys| {
        let mut st = Stepper::new(&sys, t0, y0, *cfg)?;
        st.advance_to(t0 + dt, |_, _, _| {})?;
        Ok(*st.state())
    })
}

/// States at each of the non-decreasing `times`, starting from `y0` at
/// `t0 ≤ times[0]`. Steps are clipped to land on every sample time.
pub fn sample(
    model: Model<'_>,
    system: SystemKind,
    y0: [f64; 3],
    t0: f64,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<[f64; 3]>> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < t0) {
        return Err(Error::Precondition("sample times must be sorted and ≥ t0".into()));
    }
    check_initial(system, &y0)?;
    with_system!(model, system, |sys| {
        let mut st = Stepper::new(&sys, t0, y0, *cfg)?;
        times
            .iter()
            .map(|&t| {
                st.advance_to(t, |_, _, _| {})?;
                Ok(*st.state())
            })
            .collect()
    })
}

/// Period map of the transformed system together with its derivative,
/// from the variational equations `M' = J(t, x(t)) M`, `M(t0) = I`.
pub fn flow_with_sensitivity(
    model: Model<'_>,
    x0: LogState,
    t0: f64,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<(LogState, Matrix3<f64>)> {
    let mut y = [0.0; 12];
    y[..3].copy_from_slice(&x0.to_array());
    y[3] = 1.0;
    y[7] = 1.0;
    y[11] = 1.0;
    if dt > 0.0 {
        let sys = Variational(model);
        let mut st = Stepper::new(&sys, t0, y, *cfg)?;
        st.advance_to(t0 + dt, |_, _, _| {})?;
        y = *st.state();
    }
    let m = Matrix3::from_row_slice(&y[3..]);
    Ok((LogState::new(y[0], y[1], y[2]), m))
}

/// Monodromy matrix `∂Φ_ω(x0)/∂x0` of the transformed system.
pub fn monodromy(model: Model<'_>, x0: LogState, cfg: &IntegratorConfig) -> Result<Matrix3<f64>> {
    flow_with_sensitivity(model, x0, 0.0, model.omega(), cfg).map(|(_, m)| m)
}
