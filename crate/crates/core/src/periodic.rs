//! Positive ω-periodic coefficient functions and their summaries.
//!
//! A [`PeriodicFn`] is either a truncated Fourier series or a uniformly
//! sampled table with periodic linear interpolation. The summaries used by
//! the bounds module are the period mean `f̄`, the minimum `f⊥` and the
//! maximum `f⊤`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default density of the uniform grid used for extrema and positivity.
pub const DEFAULT_GRID_N: usize = 2048;

/// Golden-section refinement stops once the bracket is this narrow in `t`.
const REFINE_TOL: f64 = 1e-10;

/// Number of grid-local extrema that get refined.
const REFINE_CANDIDATES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum Representation {
    /// `c0 + Σ_k a_k cos(2πkt/ω) + b_k sin(2πkt/ω)`, `harmonics[k-1] = [a_k, b_k]`.
    Fourier {
        c0: f64,
        #[serde(default)]
        harmonics: Vec<[f64; 2]>,
    },
    /// Samples at `t_j = jω/N`, `j = 0..N`, linearly interpolated with wrap-around.
    Table { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicFn {
    period: f64,
    repr: Representation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

impl PeriodicFn {
    pub fn new(period: f64, repr: Representation) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidFunction(format!(
                "period must be finite and > 0, got {period}"
            )));
        }
        match &repr {
            Representation::Fourier { c0, harmonics } => {
                if !c0.is_finite() || harmonics.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidFunction(
                        "Fourier coefficients must be finite".into(),
                    ));
                }
            }
            Representation::Table { values } => {
                if values.len() < 2 {
                    return Err(Error::InvalidFunction(format!(
                        "table form needs at least 2 samples, got {}",
                        values.len()
                    )));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidFunction("table samples must be finite".into()));
                }
            }
        }
        Ok(Self { period, repr })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(
            period,
            Representation::Fourier {
                c0: value,
                harmonics: Vec::new(),
            },
        )
    }

    /// `c0 + Σ harmonics` with `harmonics[k-1] = (a_k, b_k)`.
    pub fn fourier(period: f64, c0: f64, harmonics: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            period,
            Representation::Fourier {
                c0,
                harmonics: harmonics.iter().map(|&(a, b)| [a, b]).collect(),
            },
        )
    }

    pub fn table(period: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(period, Representation::Table { values })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    /// Phase in `[0, ω)`.
    fn reduce(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        if tau >= self.period {
            0.0
        } else {
            tau
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let tau = self.reduce(t);
        match &self.repr {
            Representation::Fourier { c0, harmonics } => {
                let phase = TAU * tau / self.period;
                harmonics.iter().enumerate().fold(*c0, |acc, (k, [a, b])| {
                    let arg = (k + 1) as f64 * phase;
                    acc + a * arg.cos() + b * arg.sin()
                })
            }
            Representation::Table { values } => {
                let n = values.len();
                let s = tau / self.period * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                let frac = s - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
            }
        }
    }

    /// Period mean `ω⁻¹∫₀^ω f`.
    ///
    /// Exact for both forms: the harmonics integrate to zero, and the
    /// trapezoid rule on the sample grid integrates the periodic linear
    /// interpolant exactly, which reduces to the sample average.
    pub fn mean(&self) -> f64 {
        match &self.repr {
            Representation::Fourier { c0, .. } => *c0,
            Representation::Table { values } => {
                // Neumaier summation keeps the table mean at rounding level.
                let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
                for &v in values {
                    let t = sum + v;
                    if sum.abs() >= v.abs() {
                        comp += (sum - t) + v;
                    } else {
                        comp += (v - t) + sum;
                    }
                    sum = t;
                }
                (sum + comp) / values.len() as f64
            }
        }
    }

    /// `(f⊥, f⊤)` over one period.
    pub fn min_max(&self, grid_n: usize) -> Extrema {
        match &self.repr {
            // Extrema of a piecewise-linear interpolant sit on the samples.
            Representation::Table { values } => {
                let dt = self.period / values.len() as f64;
                let (mut imin, mut imax) = (0, 0);
                for (i, &v) in values.iter().enumerate() {
                    if v < values[imin] {
                        imin = i;
                    }
                    if v > values[imax] {
                        imax = i;
                    }
                }
                Extrema {
                    min: values[imin],
                    argmin: imin as f64 * dt,
                    max: values[imax],
                    argmax: imax as f64 * dt,
                }
            }
            Representation::Fourier { harmonics, c0 } if harmonics.iter().flatten().all(|&v| v == 0.0) => {
                Extrema {
                    min: *c0,
                    argmin: 0.0,
                    max: *c0,
                    argmax: 0.0,
                }
            }
            Representation::Fourier { .. } => periodic_extrema(|t| self.eval(t), self.period, grid_n),
        }
    }

    pub fn is_constant(&self) -> bool {
        match &self.repr {
            Representation::Fourier { harmonics, .. } => harmonics.iter().flatten().all(|&v| v == 0.0),
            Representation::Table { values } => values.iter().all(|&v| v == values[0]),
        }
    }
}

/// Extrema of a continuous ω-periodic function: uniform grid of `grid_n`
/// points, then golden-section refinement around the best grid-local
/// extrema. The returned values never exceed the grid extremes.
pub fn periodic_extrema<F>(f: F, period: f64, grid_n: usize) -> Extrema
where
    F: Fn(f64) -> f64,
{
    let n = grid_n.max(3);
    let dt = period / n as f64;
    let samples: Vec<f64> = (0..n).map(|j| f(j as f64 * dt)).collect();

    let (min, argmin) = refine_extremum(&f, &samples, dt, 1.0);
    let (max, argmax) = refine_extremum(&f, &samples, dt, -1.0);
    Extrema {
        min,
        argmin,
        max,
        argmax,
    }
}

/// Minimises `sign · f`; returns `(f(t*), t*)`.
fn refine_extremum<F>(f: &F, samples: &[f64], dt: f64, sign: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let n = samples.len();
    let g = |t: f64| sign * f(t);
    let at = |j: usize| sign * samples[j];

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&j| at(j) <= at((j + n - 1) % n) && at(j) <= at((j + 1) % n))
        .collect();
    if candidates.is_empty() {
        candidates.push(0);
    }
    candidates.sort_by(|&a, &b| at(a).total_cmp(&at(b)));
    candidates.truncate(REFINE_CANDIDATES);

    let mut best = (at(candidates[0]), candidates[0] as f64 * dt);
    for &j in &candidates {
        let centre = j as f64 * dt;
        let (t, v) = golden_section(&g, centre - dt, centre + dt);
        if v < best.0 {
            best = (v, t);
        }
    }
    let period = dt * n as f64;
    (sign * best.0, best.1.rem_euclid(period))
}

fn golden_section<G>(g: &G, mut a: f64, mut b: f64) -> (f64, f64)
where
    G: Fn(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    while (b - a).abs() > REFINE_TOL {
        if gc < gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
    }
    if gc < gd {
        (c, gc)
    } else {
        (d, gd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coefficient {
    B,
    Mu1,
    Mu2,
    Mu3,
    Beta1,
    Beta2,
    Gamma1,
    Gamma2,
    Alpha1,
    Alpha2,
}

impl Coefficient {
    pub const ALL: [Coefficient; 10] = [
        Coefficient::B,
        Coefficient::Mu1,
        Coefficient::Mu2,
        Coefficient::Mu3,
        Coefficient::Beta1,
        Coefficient::Beta2,
        Coefficient::Gamma1,
        Coefficient::Gamma2,
        Coefficient::Alpha1,
        Coefficient::Alpha2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::B => "b",
            Coefficient::Mu1 => "mu1",
            Coefficient::Mu2 => "mu2",
            Coefficient::Mu3 => "mu3",
            Coefficient::Beta1 => "beta1",
            Coefficient::Beta2 => "beta2",
            Coefficient::Gamma1 => "gamma1",
            Coefficient::Gamma2 => "gamma2",
            Coefficient::Alpha1 => "alpha1",
            Coefficient::Alpha2 => "alpha2",
        }
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The ten model rates, generic over what is stored per rate.
///
/// `Rates<PeriodicFn>` holds the coefficient functions, `Rates<f64>` their
/// values at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates<T> {
    /// Recruitment of new computers.
    pub b: T,
    /// Removal rates of the S, L and A compartments.
    pub mu1: T,
    pub mu2: T,
    pub mu3: T,
    /// Infection through contact with latent / infectious computers.
    pub beta1: T,
    pub beta2: T,
    /// Cure rates of latent / infectious computers.
    pub gamma1: T,
    pub gamma2: T,
    /// L → A activation and A → L reversion.
    pub alpha1: T,
    pub alpha2: T,
}

impl<T> Rates<T> {
    pub fn get(&self, c: Coefficient) -> &T {
        match c {
            Coefficient::B => &self.b,
            Coefficient::Mu1 => &self.mu1,
            Coefficient::Mu2 => &self.mu2,
            Coefficient::Mu3 => &self.mu3,
            Coefficient::Beta1 => &self.beta1,
            Coefficient::Beta2 => &self.beta2,
            Coefficient::Gamma1 => &self.gamma1,
            Coefficient::Gamma2 => &self.gamma2,
            Coefficient::Alpha1 => &self.alpha1,
            Coefficient::Alpha2 => &self.alpha2,
        }
    }

    pub fn get_mut(&mut self, c: Coefficient) -> &mut T {
        match c {
            Coefficient::B => &mut self.b,
            Coefficient::Mu1 => &mut self.mu1,
            Coefficient::Mu2 => &mut self.mu2,
            Coefficient::Mu3 => &mut self.mu3,
            Coefficient::Beta1 => &mut self.beta1,
            Coefficient::Beta2 => &mut self.beta2,
            Coefficient::Gamma1 => &mut self.gamma1,
            Coefficient::Gamma2 => &mut self.gamma2,
            Coefficient::Alpha1 => &mut self.alpha1,
            Coefficient::Alpha2 => &mut self.alpha2,
        }
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, mut f: F) -> Rates<U> {
        Rates {
            b: f(&self.b),
            mu1: f(&self.mu1),
            mu2: f(&self.mu2),
            mu3: f(&self.mu3),
            beta1: f(&self.beta1),
            beta2: f(&self.beta2),
            gamma1: f(&self.gamma1),
            gamma2: f(&self.gamma2),
            alpha1: f(&self.alpha1),
            alpha2: f(&self.alpha2),
        }
    }

    pub fn try_map<U, E, F: FnMut(Coefficient, &T) -> Result<U, E>>(&self, mut f: F) -> Result<Rates<U>, E> {
        Ok(Rates {
            b: f(Coefficient::B, &self.b)?,
            mu1: f(Coefficient::Mu1, &self.mu1)?,
            mu2: f(Coefficient::Mu2, &self.mu2)?,
            mu3: f(Coefficient::Mu3, &self.mu3)?,
            beta1: f(Coefficient::Beta1, &self.beta1)?,
            beta2: f(Coefficient::Beta2, &self.beta2)?,
            gamma1: f(Coefficient::Gamma1, &self.gamma1)?,
            gamma2: f(Coefficient::Gamma2, &self.gamma2)?,
            alpha1: f(Coefficient::Alpha1, &self.alpha1)?,
            alpha2: f(Coefficient::Alpha2, &self.alpha2)?,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coefficient, &T)> {
        Coefficient::ALL.into_iter().map(move |c| (c, self.get(c)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityViolation {
    pub coefficient: Coefficient,
    pub min: f64,
    pub argmin: f64,
}

/// The ten coefficient functions of the model on a common period ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientSet {
    omega: f64,
    fns: Rates<PeriodicFn>,
}

impl CoefficientSet {
    pub fn new(omega: f64, fns: Rates<PeriodicFn>) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidFunction(format!(
                "period must be finite and > 0, got {omega}"
            )));
        }
        for (c, f) in fns.iter() {
            let rel = (f.period() - omega).abs() / omega;
            if rel > 1e-12 {
                return Err(Error::PeriodMismatch {
                    coefficient: c,
                    expected: omega,
                    found: f.period(),
                });
            }
        }
        Ok(Self { omega, fns })
    }

    /// All ten rates constant in time.
    pub fn constant(omega: f64, rates: Rates<f64>) -> Result<Self> {
        let fns = rates.try_map(|_, &v| PeriodicFn::constant(omega, v))?;
        Self::new(omega, fns)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn functions(&self) -> &Rates<PeriodicFn> {
        &self.fns
    }

    pub fn get(&self, c: Coefficient) -> &PeriodicFn {
        self.fns.get(c)
    }

    /// Returns a copy with one coefficient function replaced.
    pub fn with(&self, c: Coefficient, f: PeriodicFn) -> Result<Self> {
        let mut fns = self.fns.clone();
        *fns.get_mut(c) = f;
        Self::new(self.omega, fns)
    }

    pub fn rates_at(&self, t: f64) -> Rates<f64> {
        self.fns.map(|f| f.eval(t))
    }

    pub fn means(&self) -> Rates<f64> {
        self.fns.map(PeriodicFn::mean)
    }

    pub fn is_constant(&self) -> bool {
        self.fns.iter().all(|(_, f)| f.is_constant())
    }

    /// Coefficients whose minimum over the period is not strictly positive.
    pub fn positivity_violations(&self, grid_n: usize) -> Vec<PositivityViolation> {
        self.fns
            .iter()
            .filter_map(|(c, f)| {
                let ext = f.min_max(grid_n);
                (ext.min <= 0.0).then_some(PositivityViolation {
                    coefficient: c,
                    min: ext.min,
                    argmin: ext.argmin,
                })
            })
            .collect()
    }

    pub fn min_max(&self, c: Coefficient, grid_n: usize) -> Extrema {
        self.get(c).min_max(grid_n)
    }

    /// Pointwise extrema of a compound expression over one period.
    pub fn min_max_expr(&self, expr: Expr, grid_n: usize) -> Result<Extrema> {
        if let Expr::Coef(c) = expr {
            return Ok(self.min_max(c, grid_n));
        }
        if self.is_constant() {
            let v = expr.eval(&self.rates_at(0.0));
            check_finite(expr, v)?;
            return Ok(Extrema {
                min: v,
                argmin: 0.0,
                max: v,
                argmax: 0.0,
            });
        }
        // Probe the grid first so a vanishing denominator is reported
        // instead of propagating NaN into the refinement.
        let n = grid_n.max(3);
        let dt = self.omega / n as f64;
        for j in 0..n {
            check_finite(expr, expr.eval(&self.rates_at(j as f64 * dt)))?;
        }
        let ext = periodic_extrema(|t| expr.eval(&self.rates_at(t)), self.omega, grid_n);
        check_finite(expr, ext.min)?;
        check_finite(expr, ext.max)?;
        Ok(ext)
    }

    /// Period mean of a sum of coefficients.
    pub fn mean_of(&self, terms: &[Coefficient]) -> f64 {
        terms.iter().map(|&c| self.get(c).mean()).sum()
    }
}

fn check_finite(expr: Expr, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidFunction(format!(
            "{} is not finite on the period; positivity of its coefficients is violated",
            expr.name()
        )))
    }
}

/// Compound coefficient expressions needed by the hypothesis and the bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expr {
    Coef(Coefficient),
    /// `α₁(α₂+γ₂)/(α₁+μ₂)`
    HypothesisLhs,
    /// `α₁/(α₁+μ₂)`
    ActivationShare,
    /// `μ₃+α₂+γ₂`, the outflow rate of A.
    AOutflow,
    /// `μ₂+α₁+γ₁`, the outflow rate of L.
    LOutflow,
    /// `α₂+γ₂`
    Alpha2PlusGamma2,
    /// `μ₂+α₁`
    Mu2PlusAlpha1,
}

impl Expr {
    pub fn eval(self, r: &Rates<f64>) -> f64 {
        match self {
            Expr::Coef(c) => *r.get(c),
            Expr::HypothesisLhs => r.alpha1 * (r.alpha2 + r.gamma2) / (r.alpha1 + r.mu2),
            Expr::ActivationShare => r.alpha1 / (r.alpha1 + r.mu2),
            Expr::AOutflow => r.mu3 + r.alpha2 + r.gamma2,
            Expr::LOutflow => r.mu2 + r.alpha1 + r.gamma1,
            Expr::Alpha2PlusGamma2 => r.alpha2 + r.gamma2,
            Expr::Mu2PlusAlpha1 => r.mu2 + r.alpha1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Expr::Coef(c) => c.name(),
            Expr::HypothesisLhs => "alpha1*(alpha2+gamma2)/(alpha1+mu2)",
            Expr::ActivationShare => "alpha1/(alpha1+mu2)",
            Expr::AOutflow => "mu3+alpha2+gamma2",
            Expr::LOutflow => "mu2+alpha1+gamma1",
            Expr::Alpha2PlusGamma2 => "alpha2+gamma2",
            Expr::Mu2PlusAlpha1 => "mu2+alpha1",
        }
    }
}
