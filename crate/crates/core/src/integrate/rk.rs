//! Explicit Runge–Kutta stepping: classical fixed-step RK4 and the
//! Dormand–Prince 5(4) embedded pair with FSAL and max-norm error control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A first-order system `y' = f(t, y)` of fixed dimension.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> Result<[f64; N]>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    #[default]
    Rk45,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Step size for [`Method::Rk4`].
    pub step: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on adaptive steps; also caps the spacing of recorded output.
    pub max_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk45,
            step: 1e-2,
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 1_000_000,
            max_step: None,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            ..Self::default()
        }
    }

    pub fn rk45(rtol: f64, atol: f64) -> Self {
        Self {
            method: Method::Rk45,
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = Some(max_step);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.method == Method::Rk4 && !(self.step > 0.0 && self.step.is_finite()) {
            return bad(format!("step must be > 0, got {}", self.step));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return bad(format!(
                "rtol and atol must be > 0, got {} and {}",
                self.rtol, self.atol
            ));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return bad(format!("max_step must be > 0, got {h}"));
            }
        }
        Ok(())
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;
const MAX_REJECTS_IN_A_ROW: usize = 60;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(&[f64; N], f64)]) -> [f64; N] {
    let mut out = *y;
    for (k, w) in terms {
        if *w != 0.0 {
            for i in 0..N {
                out[i] += h * w * k[i];
            }
        }
    }
    out
}

fn check_finite<const N: usize>(t: f64, y: &[f64; N]) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence {
            t,
            reason: "state became non-finite".into(),
        })
    }
}

/// Integration state carried across output targets.
pub struct Stepper<'s, S, const N: usize> {
    sys: &'s S,
    cfg: IntegratorConfig,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h: Option<f64>,
    steps: usize,
}

impl<'s, S: OdeSystem<N>, const N: usize> Stepper<'s, S, N> {
    pub fn new(sys: &'s S, t0: f64, y0: [f64; N], cfg: IntegratorConfig) -> Result<Self> {
        cfg.validate()?;
        check_finite(t0, &y0)?;
        let f = sys.rhs(t0, &y0)?;
        Ok(Self {
            sys,
            cfg,
            t: t0,
            y: y0,
            f,
            h: None,
            steps: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64; N] {
        &self.y
    }

    pub fn derivative(&self) -> &[f64; N] {
        &self.f
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Integrates up to `target` exactly; `on_step` sees every accepted
    /// step as `(t, y, y')`.
    pub fn advance_to<F>(&mut self, target: f64, mut on_step: F) -> Result<()>
    where
        F: FnMut(f64, &[f64; N], &[f64; N]),
    {
        if target < self.t {
            return Err(Error::Precondition(format!(
                "cannot integrate backwards from {} to {target}",
                self.t
            )));
        }
        if target == self.t {
            return Ok(());
        }
        match self.cfg.method {
            Method::Rk4 => self.advance_rk4(target, &mut on_step),
            Method::Rk45 => self.advance_dopri(target, &mut on_step),
        }
    }

    fn count_step(&mut self, t1: f64) -> Result<()> {
        self.steps += 1;
        if self.steps > self.cfg.max_steps {
            return Err(Error::MaxStepsExceeded {
                max_steps: self.cfg.max_steps,
                t: self.t,
                t1,
            });
        }
        Ok(())
    }

    fn advance_rk4<F>(&mut self, target: f64, on_step: &mut F) -> Result<()>
    where
        F: FnMut(f64, &[f64; N], &[f64; N]),
    {
        let mut h_nominal = self.cfg.step;
        if let Some(m) = self.cfg.max_step {
            h_nominal = h_nominal.min(m);
        }
        let t_start = self.t;
        let span = target - t_start;
        // Uniform steps that land on the target without a sliver step.
        let n = ((span / h_nominal) - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for i in 0..n {
            self.count_step(target)?;
            let (t, y, k1) = (self.t, self.y, self.f);
            let k2 = self.sys.rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(&k1, 1.0)]))?;
            let k3 = self.sys.rhs(t + 0.5 * h, &axpy(&y, 0.5 * h, &[(&k2, 1.0)]))?;
            let k4 = self.sys.rhs(t + h, &axpy(&y, h, &[(&k3, 1.0)]))?;
            let y_new = axpy(&y, h / 6.0, &[(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)]);
            let t_new = if i + 1 == n {
                target
            } else {
                t_start + (i + 1) as f64 * h
            };
            check_finite(t_new, &y_new)?;
            self.t = t_new;
            self.y = y_new;
            self.f = self.sys.rhs(t_new, &y_new)?;
            on_step(self.t, &self.y, &self.f);
        }
        Ok(())
    }

    fn initial_step(&self, target: f64) -> f64 {
        let span = target - self.t;
        let scale = |i: usize| self.cfg.atol + self.cfg.rtol * self.y[i].abs();
        let d0 = (0..N).map(|i| (self.y[i] / scale(i)).abs()).fold(0.0, f64::max);
        let d1 = (0..N).map(|i| (self.f[i] / scale(i)).abs()).fold(0.0, f64::max);
        let h = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h.min(span)
    }

    fn advance_dopri<F>(&mut self, target: f64, on_step: &mut F) -> Result<()>
    where
        F: FnMut(f64, &[f64; N], &[f64; N]),
    {
        let max_step = self.cfg.max_step.unwrap_or(f64::INFINITY);
        let mut h = self.h.unwrap_or_else(|| self.initial_step(target)).min(max_step);
        let mut rejects = 0;
        while self.t < target {
            let remaining = target - self.t;
            // Stretch slightly to avoid a sliver step at the end.
            let last = h >= remaining * (1.0 - 1e-12) || remaining - h < 1e-12 * target.abs().max(1.0);
            let h_try = if last { remaining } else { h };

            let trial = self.dopri_trial(h_try);
            let (y_new, f_new, err) = match trial {
                Ok(v) => v,
                Err(e) => {
                    // A stage left the domain of the field: shrink and retry.
                    rejects += 1;
                    if rejects > MAX_REJECTS_IN_A_ROW || h_try < 1e-14 * self.t.abs().max(1.0) {
                        return Err(e);
                    }
                    h = 0.25 * h_try;
                    continue;
                }
            };

            if err <= 1.0 {
                self.count_step(target)?;
                self.t = if last { target } else { self.t + h_try };
                self.y = y_new;
                self.f = f_new;
                on_step(self.t, &self.y, &self.f);
                rejects = 0;
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                // Keep the proposal from the last full step when clipped.
                if !last || h_try >= h {
                    h = (h_try * factor).min(max_step);
                }
            } else {
                rejects += 1;
                if rejects > MAX_REJECTS_IN_A_ROW || h_try < 1e-14 * self.t.abs().max(1.0) {
                    return Err(Error::Divergence {
                        t: self.t,
                        reason: format!("step size underflow (h = {h_try:e})"),
                    });
                }
                h = h_try * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn dopri_trial(&self, h: f64) -> Result<([f64; N], [f64; N], f64)> {
        let (t, y) = (self.t, &self.y);
        let mut k = [[0.0; N]; 7];
        k[0] = self.f;
        let mut y_new = *y;
        for s in 1..7 {
            let mut ys = *y;
            for j in 0..s {
                let w = h * A[s][j];
                if w != 0.0 {
                    for i in 0..N {
                        ys[i] += w * k[j][i];
                    }
                }
            }
            check_finite(t + C[s] * h, &ys)?;
            k[s] = self.sys.rhs(t + C[s] * h, &ys)?;
            if s == 6 {
                // The last stage is evaluated at the fifth-order solution (FSAL).
                y_new = ys;
            }
        }
        let f_new = k[6];
        let mut err = 0.0_f64;
        for i in 0..N {
            let e: f64 = h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>();
            let sc = self.cfg.atol + self.cfg.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            return Err(Error::Divergence {
                t,
                reason: "error estimate is not finite".into(),
            });
        }
        Ok((y_new, f_new, err))
    }
}
