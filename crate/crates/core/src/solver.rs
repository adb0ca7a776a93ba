//! Locating ω-periodic solutions of the transformed system.
//!
//! Periodic solutions are fixed points of the period map `Φ_ω`. The solver
//! seeds Newton's method on `F(x) = Φ_ω(x) − x` with the root of the
//! averaged (constant-state, mean-coefficient) system, uses the monodromy
//! matrix for the Jacobian `M − I`, and falls back to plain iteration of the
//! period map when Newton stalls.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::AprioriBounds;
use crate::error::{Error, Result};
use crate::integrate::{flow, flow_with_sensitivity, integrate, IntegratorConfig, Trajectory};
use crate::model::{transformed_field, transformed_jacobian, LogState, Model, SystemKind};

/// Residual accepted for a root of the averaged system.
pub const AVERAGED_TOL: f64 = 1e-12;
/// Orbits closer than this at `t = 0` (sup norm) are the same orbit.
pub const DISTINCT_ORBIT_SEPARATION: f64 = 1e-6;
/// Recorded orbit trajectories use at least this many steps per period.
const DENSE_STEPS_PER_PERIOD: f64 = 256.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootingConfig {
    pub max_newton_iters: usize,
    /// Sup-norm tolerance on `Φ_ω(x0) − x0` in log coordinates.
    pub residual_tol: f64,
    /// Line-search factors, tried in order.
    pub damping: Vec<f64>,
    pub fallback_poincare_iters: usize,
    /// Newton restarts after a Poincaré fallback.
    pub retries: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            max_newton_iters: 50,
            residual_tol: 1e-10,
            damping: vec![1.0, 0.5, 0.25, 0.125],
            fallback_poincare_iters: 200,
            retries: 1,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "residual_tol must be > 0, got {}",
                self.residual_tol
            )));
        }
        if self.damping.is_empty() || self.damping.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
            return Err(Error::InvalidConfig(
                "damping factors must be non-empty and lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessSource {
    Averaged,
    BoxCenter,
    User,
    MultiStart,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub x0: LogState,
    /// One period of the transformed system starting at `x0`.
    pub trajectory: Trajectory,
    /// `‖Φ_ω(x0) − x0‖∞`
    pub residual: f64,
    /// `Σᵢ |Φ_ω(x0)ᵢ − x0ᵢ|`
    pub residual_sum: f64,
    /// Rows of `∂Φ_ω/∂x0` at `x0`.
    pub monodromy: [[f64; 3]; 3],
    /// Eigenvalues of the monodromy matrix, by decreasing modulus.
    pub floquet_multipliers: Vec<Complex64>,
    pub converged: bool,
    /// Newton iterations, summed over restarts.
    pub iterations: usize,
    pub poincare_iterations: usize,
    /// Residual after every Newton or fallback stage.
    pub history: Vec<f64>,
    pub guess: LogState,
    pub guess_source: GuessSource,
}

impl PeriodicOrbit {
    pub fn monodromy_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.monodromy[i][j])
    }

    pub fn floquet(&self) -> Result<[Complex64; 3]> {
        if !self.converged {
            return Err(Error::Precondition(
                "Floquet multipliers need a converged orbit".into(),
            ));
        }
        Ok(floquet_multipliers(&self.monodromy_matrix()))
    }

    /// Sup-norm of the largest multiplier modulus.
    pub fn spectral_radius(&self) -> f64 {
        self.floquet_multipliers
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues of `m` sorted by modulus, largest first.
pub fn floquet_multipliers(m: &Matrix3<f64>) -> [Complex64; 3] {
    let ev = m.complex_eigenvalues();
    let mut out = [ev[0], ev[1], ev[2]];
    out.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    out
}

fn inf_norm(v: &Vector3<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AveragedRoot {
    pub x: LogState,
    pub residual: f64,
    /// Signed distance to the a priori box faces, when a box was given.
    pub box_margin: Option<f64>,
    pub starts_tried: usize,
}

/// Right-hand side of the averaged system: the transformed field with every
/// coefficient replaced by its period mean, evaluated at a constant state.
pub fn averaged_residual(model: Model<'_>, x: LogState) -> Result<[f64; 3]> {
    transformed_field(&model.coeffs.means(), model.a_decay, x.to_array(), 0.0)
}

fn averaged_newton(model: Model<'_>, start: [f64; 3]) -> Option<(LogState, f64)> {
    let means = model.coeffs.means();
    let f = |x: &Vector3<f64>| -> Option<Vector3<f64>> {
        transformed_field(&means, model.a_decay, [x[0], x[1], x[2]], 0.0)
            .ok()
            .map(Vector3::from)
    };
    let mut x = Vector3::from(start);
    let mut fx = f(&x)?;
    let mut r = inf_norm(&fx);
    for _ in 0..100 {
        if r <= AVERAGED_TOL {
            return Some((LogState::new(x[0], x[1], x[2]), r));
        }
        let j = transformed_jacobian(&means, [x[0], x[1], x[2]], 0.0).ok()?;
        let step = j.lu().solve(&(-fx))?;
        let mut accepted = false;
        let mut lambda = 1.0;
        for _ in 0..30 {
            let xt = x + lambda * step;
            if let Some(ft) = f(&xt) {
                let rt = inf_norm(&ft);
                if rt < r || rt <= AVERAGED_TOL {
                    x = xt;
                    fx = ft;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (r <= AVERAGED_TOL).then(|| (LogState::new(x[0], x[1], x[2]), r))
}

/// Root of the averaged system, found by Newton from a 3×3×3 grid of starts
/// over the a priori box (or over `[-3, 3]³` without one).
///
/// Among converged roots the one deepest inside the box wins, then the
/// smallest residual.
pub fn solve_averaged(model: Model<'_>, bounds: Option<&AprioriBounds>) -> Result<AveragedRoot> {
    let (lo, hi) = match bounds {
        Some(b) if b.is_consistent() => (b.log_lower, b.log_upper),
        _ => ([-3.0; 3], [3.0; 3]),
    };
    let levels = [0.5, 0.1, 0.9];
    let mut starts = Vec::with_capacity(27);
    for &u in &levels {
        for &v in &levels {
            for &w in &levels {
                let frac = [u, v, w];
                starts.push(std::array::from_fn(|i| lo[i] + frac[i] * (hi[i] - lo[i])));
            }
        }
    }

    let mut best: Option<AveragedRoot> = None;
    let mut best_residual = f64::INFINITY;
    for start in &starts {
        let Some((x, residual)) = averaged_newton(model, *start) else {
            continue;
        };
        best_residual = best_residual.min(residual);
        let cand = AveragedRoot {
            x,
            residual,
            box_margin: bounds.map(|b| b.margin(x.to_array())),
            starts_tried: starts.len(),
        };
        let better = match &best {
            None => true,
            Some(cur) => {
                let (mc, mn) = (cur.box_margin.unwrap_or(0.0), cand.box_margin.unwrap_or(0.0));
                let same_root = cur.x.dist_inf(cand.x) <= DISTINCT_ORBIT_SEPARATION;
                if same_root {
                    cand.residual < cur.residual
                } else {
                    mn > mc || (mn == mc && cand.residual < cur.residual)
                }
            }
        };
        if better {
            best = Some(cand);
        }
    }
    best.ok_or(Error::NoAveragedRoot {
        starts: starts.len(),
        best_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareIterates {
    pub x: LogState,
    /// `‖Φ_ω(x_j) − x_j‖∞` for each iterate `x_j`, `j = 0..k`.
    pub residuals: Vec<f64>,
}

/// `k`-fold composition of the period map applied to `x0`.
pub fn poincare_iterate(
    model: Model<'_>,
    x0: LogState,
    k: usize,
    icfg: &IntegratorConfig,
) -> Result<PoincareIterates> {
    if k == 0 {
        return Err(Error::Precondition("Poincaré iteration needs k ≥ 1".into()));
    }
    let omega = model.omega();
    let mut x = x0.to_array();
    let mut residuals = Vec::with_capacity(k);
    for _ in 0..k {
        let next = flow(model, SystemKind::Transformed, x, 0.0, omega, icfg)?;
        residuals.push((0..3).map(|i| (next[i] - x[i]).abs()).fold(0.0, f64::max));
        x = next;
    }
    Ok(PoincareIterates {
        x: LogState::from_array(x),
        residuals,
    })
}

fn period_residual(model: Model<'_>, x: &Vector3<f64>, icfg: &IntegratorConfig) -> Result<Vector3<f64>> {
    let phi = flow(
        model,
        SystemKind::Transformed,
        [x[0], x[1], x[2]],
        0.0,
        model.omega(),
        icfg,
    )?;
    Ok(Vector3::from(phi) - x)
}

/// Newton step for `(M − I) δ = −F`; falls back to the SVD pseudo-inverse
/// when `M − I` is singular or badly conditioned.
fn newton_step(m: &Matrix3<f64>, f: &Vector3<f64>) -> Vector3<f64> {
    let a = m - Matrix3::identity();
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin > 1e-12 * smax.max(f64::MIN_POSITIVE) {
        if let Some(step) = a.lu().solve(&(-f)) {
            return step;
        }
    }
    let eps = 1e-10 * smax.max(f64::MIN_POSITIVE);
    svd.solve(&(-f), eps).unwrap_or_else(|_| Vector3::zeros())
}

struct NewtonOutcome {
    x: Vector3<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn newton(
    model: Model<'_>,
    start: Vector3<f64>,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
    history: &mut Vec<f64>,
) -> Result<NewtonOutcome> {
    let omega = model.omega();
    let mut x = start;
    let mut iterations = 0;
    let (phi, mut m) = flow_with_sensitivity(model, LogState::new(x[0], x[1], x[2]), 0.0, omega, icfg)?;
    let mut f = Vector3::new(phi.x1, phi.x2, phi.x3) - x;
    let mut r = inf_norm(&f);
    history.push(r);

    while r > cfg.residual_tol && iterations < cfg.max_newton_iters {
        iterations += 1;
        let step = newton_step(&m, &f);
        let mut accepted = None;
        for &lambda in &cfg.damping {
            let xt = x + lambda * step;
            // A trial point whose flow diverges is simply rejected.
            if let Ok(ft) = period_residual(model, &xt, icfg) {
                let rt = inf_norm(&ft);
                if rt < r {
                    accepted = Some(xt);
                    break;
                }
            }
        }
        let Some(xt) = accepted else {
            break;
        };
        x = xt;
        let (phi, mt) = flow_with_sensitivity(model, LogState::new(x[0], x[1], x[2]), 0.0, omega, icfg)?;
        m = mt;
        f = Vector3::new(phi.x1, phi.x2, phi.x3) - x;
        r = inf_norm(&f);
        history.push(r);
    }
    Ok(NewtonOutcome {
        x,
        residual: r,
        iterations,
        converged: r <= cfg.residual_tol,
    })
}

/// Damped Newton shooting on the period map from `guess`.
///
/// Non-convergence is not an error: the returned orbit has
/// `converged = false` and carries the best iterate and the residual history.
pub fn shoot(
    model: Model<'_>,
    guess: LogState,
    guess_source: GuessSource,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    cfg.validate()?;
    icfg.validate()?;
    if !guess.is_finite() {
        return Err(Error::Precondition(format!(
            "initial guess {guess} is not finite"
        )));
    }
    let mut history = Vec::new();
    let start = Vector3::from(guess.to_array());
    let mut out = newton(model, start, cfg, icfg, &mut history)?;
    let mut iterations = out.iterations;
    let mut poincare_iterations = 0;

    let mut retries = 0;
    while !out.converged && retries < cfg.retries && cfg.fallback_poincare_iters > 0 {
        retries += 1;
        let x = LogState::new(out.x[0], out.x[1], out.x[2]);
        let Ok(it) = poincare_iterate(model, x, cfg.fallback_poincare_iters, icfg) else {
            break;
        };
        poincare_iterations += it.residuals.len();
        history.push(*it.residuals.last().unwrap_or(&f64::NAN));
        let retry = newton(model, Vector3::from(it.x.to_array()), cfg, icfg, &mut history)?;
        iterations += retry.iterations;
        if retry.residual < out.residual || retry.converged {
            out = retry;
        }
    }

    let x0 = LogState::new(out.x[0], out.x[1], out.x[2]);
    finish_orbit(
        model,
        x0,
        out.converged,
        iterations,
        poincare_iterations,
        history,
        guess,
        guess_source,
        icfg,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_orbit(
    model: Model<'_>,
    x0: LogState,
    converged: bool,
    iterations: usize,
    poincare_iterations: usize,
    history: Vec<f64>,
    guess: LogState,
    guess_source: GuessSource,
    icfg: &IntegratorConfig,
) -> Result<PeriodicOrbit> {
    let omega = model.omega();
    let (phi, m) = flow_with_sensitivity(model, x0, 0.0, omega, icfg)?;
    let dense = omega / DENSE_STEPS_PER_PERIOD;
    let traj_cfg = icfg.with_max_step(icfg.max_step.map_or(dense, |h| h.min(dense)));
    let trajectory = integrate(
        model,
        SystemKind::Transformed,
        x0.to_array(),
        0.0,
        omega,
        &traj_cfg,
    )?;
    let diff: Vec<f64> = (0..3)
        .map(|i| (phi.to_array()[i] - x0.to_array()[i]).abs())
        .collect();
    let multipliers = floquet_multipliers(&m);
    Ok(PeriodicOrbit {
        x0,
        trajectory,
        residual: diff.iter().cloned().fold(0.0, f64::max),
        residual_sum: diff.iter().sum(),
        monodromy: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
        floquet_multipliers: multipliers.to_vec(),
        converged,
        iterations,
        poincare_iterations,
        history,
        guess,
        guess_source,
    })
}

/// Initial guesses in priority order: averaged root, box centre, user guess.
pub fn candidate_guesses(
    model: Model<'_>,
    bounds: Option<&AprioriBounds>,
    user: Option<LogState>,
) -> (Vec<(LogState, GuessSource)>, Option<AveragedRoot>) {
    let mut out = Vec::new();
    let averaged = solve_averaged(model, bounds).ok();
    if let Some(root) = &averaged {
        out.push((root.x, GuessSource::Averaged));
    }
    if let Some(b) = bounds.filter(|b| b.is_consistent()) {
        out.push((LogState::from_array(b.box_center()), GuessSource::BoxCenter));
    }
    if let Some(u) = user {
        out.push((u, GuessSource::User));
    }
    (out, averaged)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FindResult {
    pub orbit: PeriodicOrbit,
    pub averaged: Option<AveragedRoot>,
    /// Residuals of the attempts made before the returned one.
    pub failed_attempts: Vec<(GuessSource, f64)>,
}

/// Shoots from each candidate guess until one converges; otherwise returns
/// the attempt with the smallest residual.
pub fn find_periodic(
    model: Model<'_>,
    bounds: Option<&AprioriBounds>,
    user: Option<LogState>,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
) -> Result<FindResult> {
    let (guesses, averaged) = candidate_guesses(model, bounds, user);
    if guesses.is_empty() {
        return Err(Error::NoAveragedRoot {
            starts: 27,
            best_residual: f64::NAN,
        });
    }
    let mut best: Option<PeriodicOrbit> = None;
    let mut failed_attempts = Vec::new();
    let mut last_err = None;
    for (guess, source) in guesses {
        match shoot(model, guess, source, cfg, icfg) {
            Ok(orbit) if orbit.converged => {
                if let Some(prev) = best.take() {
                    failed_attempts.push((prev.guess_source, prev.residual));
                }
                return Ok(FindResult {
                    orbit,
                    averaged,
                    failed_attempts,
                });
            }
            Ok(orbit) => {
                let replace = best.as_ref().is_none_or(|b| orbit.residual < b.residual);
                if replace {
                    if let Some(prev) = best.replace(orbit) {
                        failed_attempts.push((prev.guess_source, prev.residual));
                    }
                } else {
                    failed_attempts.push((orbit.guess_source, orbit.residual));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some(orbit) => Ok(FindResult {
            orbit,
            averaged,
            failed_attempts,
        }),
        None => Err(last_err.expect("at least one guess was tried")),
    }
}

/// Low-discrepancy points in the unit cube (Halton, bases 2, 3, 5).
fn halton(index: usize) -> [f64; 3] {
    let radical = |mut i: usize, base: usize| {
        let mut f = 1.0;
        let mut r = 0.0;
        while i > 0 {
            f /= base as f64;
            r += f * (i % base) as f64;
            i /= base;
        }
        r
    };
    [
        radical(index + 1, 2),
        radical(index + 1, 3),
        radical(index + 1, 5),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiStartReport {
    pub starts: usize,
    pub converged: usize,
    /// Distinct converged orbits ordered by residual, then by box margin.
    pub orbits: Vec<PeriodicOrbit>,
}

/// Shoots from `n` deterministic points of the a priori box concurrently and
/// keeps the distinct converged orbits.
pub fn multi_start(
    model: Model<'_>,
    bounds: &AprioriBounds,
    n: usize,
    cfg: &ShootingConfig,
    icfg: &IntegratorConfig,
) -> Result<MultiStartReport> {
    if !bounds.is_consistent() {
        return Err(Error::Precondition(
            "multi-start needs a non-empty a priori box".into(),
        ));
    }
    let starts: Vec<LogState> = (0..n)
        .map(|k| {
            let u = halton(k);
            LogState::from_array(std::array::from_fn(|i| {
                bounds.log_lower[i] + u[i] * (bounds.log_upper[i] - bounds.log_lower[i])
            }))
        })
        .collect();
    let shots: Vec<Option<PeriodicOrbit>> = starts
        .par_iter()
        .map(|&g| shoot(model, g, GuessSource::MultiStart, cfg, icfg).ok())
        .collect();

    let converged: Vec<PeriodicOrbit> = shots.into_iter().flatten().filter(|o| o.converged).collect();
    let count = converged.len();
    let mut distinct: Vec<PeriodicOrbit> = Vec::new();
    for orbit in converged {
        match distinct
            .iter_mut()
            .find(|d| d.x0.dist_inf(orbit.x0) <= DISTINCT_ORBIT_SEPARATION)
        {
            Some(d) if orbit.residual < d.residual => *d = orbit,
            Some(_) => {}
            None => distinct.push(orbit),
        }
    }
    distinct.sort_by(|a, b| {
        a.residual.total_cmp(&b.residual).then_with(|| {
            bounds
                .margin(b.x0.to_array())
                .total_cmp(&bounds.margin(a.x0.to_array()))
        })
    });
    Ok(MultiStartReport {
        starts: n,
        converged: count,
        orbits: distinct,
    })
}
