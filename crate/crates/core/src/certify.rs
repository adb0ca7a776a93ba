//! Checks a computed orbit against every identity and bound that a true
//! positive ω-periodic solution must satisfy, and aggregates the results
//! into a [`Certificate`].

use serde::{Deserialize, Serialize};

use crate::bounds::{AprioriBounds, HypothesisReport};
use crate::error::{Error, Result};
use crate::integrate::{flow, sample, IntegratorConfig, Trajectory};
use crate::model::{ADecay, LogState, Model, SystemKind};
use crate::periodic::Rates;
use crate::solver::PeriodicOrbit;

/// Interior phases re-integrated by the periodicity spot check.
pub const SPOT_CHECK_PHASES: usize = 8;
/// Box violations smaller than this are downgraded to warnings.
pub const BOX_WARNING_BAND: f64 = 1e-6;
/// Output samples per period in the equivalence check.
const EQUIVALENCE_SAMPLES_PER_PERIOD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CertifyConfig {
    /// Tolerance on `‖Φ_ω(x0) − x0‖∞`.
    pub periodicity_tol: f64,
    /// Slack on the a priori box faces.
    pub box_slack: f64,
    /// Relative tolerance on the integral identities; `None` = 10³·rtol.
    pub identity_tol: Option<f64>,
    /// Relative tolerance of the two-system comparison; `None` = 10³·rtol.
    pub equivalence_tol: Option<f64>,
    /// Horizon of the two-system comparison, in periods.
    pub equivalence_periods: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            periodicity_tol: 1e-9,
            box_slack: 1e-9,
            identity_tol: None,
            equivalence_tol: None,
            equivalence_periods: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    CertifiedWithWarnings,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicityCheck {
    /// Largest of the endpoint and spot-check residuals.
    pub residual: f64,
    pub endpoint_residual: f64,
    /// `(phase, ‖x(phase + ω) − x(phase)‖∞)`
    pub spot_checks: Vec<(f64, f64)>,
    pub tol: f64,
    pub spot_tol: f64,
    pub pass: bool,
}

fn check_full_period(traj: &Trajectory, omega: f64) -> Result<()> {
    if traj.system != SystemKind::Transformed {
        return Err(Error::Precondition(
            "checks need a log-coordinate trajectory".into(),
        ));
    }
    if traj.len() < 2 {
        return Err(Error::Precondition(format!(
            "trajectory has {} point(s); one full period is required",
            traj.len()
        )));
    }
    let span = traj.t_end() - traj.t0();
    if (span - omega).abs() > 1e-9 * omega {
        return Err(Error::Precondition(format!(
            "trajectory spans {span}, expected one period {omega}"
        )));
    }
    Ok(())
}

/// Endpoint residual of the period map plus a re-integration spot check
/// at interior phases `kω/9`, `k = 1..=8`.
pub fn check_periodicity(
    model: Model<'_>,
    traj: &Trajectory,
    tol: f64,
    icfg: &IntegratorConfig,
) -> Result<PeriodicityCheck> {
    let omega = model.omega();
    check_full_period(traj, omega)?;
    let t0 = traj.t0();
    let x0 = traj.first();
    let phi = flow(model, SystemKind::Transformed, x0, t0, omega, icfg)?;
    let endpoint_residual = (0..3).map(|i| (phi[i] - x0[i]).abs()).fold(0.0, f64::max);

    let phases: Vec<f64> = (1..=SPOT_CHECK_PHASES)
        .map(|k| t0 + k as f64 * omega / (SPOT_CHECK_PHASES + 1) as f64)
        .collect();
    let times: Vec<f64> = phases
        .iter()
        .copied()
        .chain(phases.iter().map(|p| p + omega))
        .collect();
    let states = sample(model, SystemKind::Transformed, x0, t0, &times, icfg)?;
    let spot_checks: Vec<(f64, f64)> = (0..SPOT_CHECK_PHASES)
        .map(|k| {
            let (a, b) = (states[k], states[k + SPOT_CHECK_PHASES]);
            (
                phases[k] - t0,
                (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max),
            )
        })
        .collect();

    let spot_tol = 10.0 * tol + 1e3 * icfg.rtol;
    let worst_spot = spot_checks.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(PeriodicityCheck {
        residual: endpoint_residual.max(worst_spot),
        endpoint_residual,
        spot_checks,
        tol,
        spot_tol,
        pass: endpoint_residual <= tol && worst_spot <= spot_tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCheck {
    /// Smallest of `S, L, A` along the exponentiated orbit.
    pub min: f64,
    pub pass: bool,
}

pub fn check_positivity(traj: &Trajectory) -> PositivityCheck {
    let min = traj
        .states
        .iter()
        .flat_map(|x| x.iter().map(|v| v.exp()))
        .fold(f64::INFINITY, f64::min);
    PositivityCheck {
        min,
        pass: min > 0.0 && min.is_finite(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCheck {
    /// `min_t xᵢ(t) − ln δᵢ`
    pub lower_margin: [f64; 3],
    /// `ln(ρᵢ/ω) + dᵢ − max_t xᵢ(t)`
    pub upper_margin: [f64; 3],
    pub slack: f64,
    /// The box itself is empty for some component.
    pub inconsistent: bool,
    /// The L lower face `ln δ₂` is crossed; reported, never fatal.
    pub delta2_violated: bool,
    pub status: CheckStatus,
    pub notes: Vec<String>,
}

/// Worst-case signed margins of the orbit against the a priori box,
/// sampled at every step and every step midpoint.
pub fn check_box(traj: &Trajectory, bounds: &AprioriBounds, slack: f64) -> BoxCheck {
    let mut notes = Vec::new();
    if !bounds.is_consistent() {
        notes.push(format!(
            "a priori box is empty for component(s) {:?}",
            bounds.empty_components.iter().map(|i| i + 1).collect::<Vec<_>>()
        ));
        return BoxCheck {
            lower_margin: [f64::NAN; 3],
            upper_margin: [f64::NAN; 3],
            slack,
            inconsistent: true,
            delta2_violated: false,
            status: CheckStatus::Fail,
            notes,
        };
    }

    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut visit = |x: [f64; 3]| {
        for i in 0..3 {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    };
    for (k, &x) in traj.states.iter().enumerate() {
        visit(x);
        if k + 1 < traj.len() {
            visit(traj.interpolate(0.5 * (traj.times[k] + traj.times[k + 1])));
        }
    }
    let lower_margin: [f64; 3] = std::array::from_fn(|i| lo[i] - bounds.log_lower[i]);
    let upper_margin: [f64; 3] = std::array::from_fn(|i| bounds.log_upper[i] - hi[i]);

    let mut status = CheckStatus::Pass;
    let mut escalate = |s: CheckStatus| {
        status = match (status, s) {
            (CheckStatus::Fail, _) | (_, CheckStatus::Fail) => CheckStatus::Fail,
            (CheckStatus::Warn, _) | (_, CheckStatus::Warn) => CheckStatus::Warn,
            _ => CheckStatus::Pass,
        }
    };
    let delta2_violated = lower_margin[1] < -slack;
    for i in 0..3 {
        for (face, margin) in [("lower", lower_margin[i]), ("upper", upper_margin[i])] {
            if margin >= -slack {
                continue;
            }
            if face == "lower" && i == 1 {
                notes.push(format!("x2 falls below ln(delta2) by {:e}", -margin));
                escalate(CheckStatus::Warn);
            } else if margin >= -BOX_WARNING_BAND {
                notes.push(format!(
                    "x{} crosses the {face} face by {:e} (within warning band)",
                    i + 1,
                    -margin
                ));
                escalate(CheckStatus::Warn);
            } else {
                notes.push(format!("x{} crosses the {face} face by {:e}", i + 1, -margin));
                escalate(CheckStatus::Fail);
            }
        }
    }
    BoxCheck {
        lower_margin,
        upper_margin,
        slack,
        inconsistent: false,
        delta2_violated,
        status,
        notes,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`
    pub residual: f64,
    /// Change between one and two Simpson panels per step.
    pub quadrature_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub identities: Vec<IdentityResidual>,
    pub tol: f64,
    pub pass: bool,
}

impl IdentityCheck {
    pub fn max_residual(&self) -> f64 {
        self.identities.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

type Integrand = fn(&Rates<f64>, ADecay, [f64; 3]) -> f64;

fn outflow_a(r: &Rates<f64>, decay: ADecay) -> f64 {
    match decay {
        ADecay::Alpha2 => r.mu3 + r.alpha2 + r.gamma2,
        ADecay::Alpha1 => r.mu3 + r.alpha1 + r.gamma2,
    }
}

/// Both sides of the six period identities. The first three integrate the
/// transformed equations; the last three integrate them after multiplying
/// by `e^{xᵢ}`.
const IDENTITIES: [(&str, Integrand, Integrand); 6] = [
    (
        "mean_s",
        |r, _, [x1, _, _]| r.b * (-x1).exp(),
        |r, _, [x1, x2, x3]| {
            r.mu1 + r.beta1 * x2.exp() + r.beta2 * x3.exp()
                - r.gamma1 * (x2 - x1).exp()
                - r.gamma2 * (x3 - x1).exp()
        },
    ),
    (
        "mean_l",
        |r, _, [x1, x2, x3]| r.beta1 * x1.exp() + r.beta2 * (x1 + x3 - x2).exp() + r.alpha2 * (x3 - x2).exp(),
        |r, _, _| r.mu2 + r.alpha1 + r.gamma1,
    ),
    (
        "mean_a",
        |r, _, [_, x2, x3]| r.alpha1 * (x2 - x3).exp(),
        |r, d, _| outflow_a(r, d),
    ),
    (
        "weighted_s",
        |r, _, _| r.b,
        |r, _, [x1, x2, x3]| {
            r.mu1 * x1.exp() + r.beta1 * (x1 + x2).exp() + r.beta2 * (x1 + x3).exp()
                - r.gamma1 * x2.exp()
                - r.gamma2 * x3.exp()
        },
    ),
    (
        "weighted_l",
        |r, _, [x1, x2, x3]| r.beta1 * (x1 + x2).exp() + r.beta2 * (x1 + x3).exp() + r.alpha2 * x3.exp(),
        |r, _, [_, x2, _]| (r.mu2 + r.alpha1 + r.gamma1) * x2.exp(),
    ),
    (
        "weighted_a",
        |r, _, [_, x2, _]| r.alpha1 * x2.exp(),
        |r, d, [_, _, x3]| outflow_a(r, d) * x3.exp(),
    ),
];

/// Simpson over each step interval of the dense output, with `panels`
/// Simpson panels per step and Hermite values at the interior nodes.
fn stepwise_simpson<G: Fn(f64, [f64; 3]) -> f64>(traj: &Trajectory, g: &G, panels: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..traj.len() - 1 {
        let (a, b) = (traj.times[k], traj.times[k + 1]);
        let n = 2 * panels;
        let h = (b - a) / n as f64;
        let mut acc = g(a, traj.states[k]) + g(b, traj.states[k + 1]);
        for j in 1..n {
            let t = a + j as f64 * h;
            let w = if j % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(t, traj.interpolate(t));
        }
        total += acc * h / 3.0;
    }
    total
}

/// The six period identities evaluated on the orbit's dense output.
pub fn check_integral_identities(model: Model<'_>, traj: &Trajectory, tol: f64) -> Result<IdentityCheck> {
    check_full_period(traj, model.omega())?;
    let coeffs = model.coeffs;
    let decay = model.a_decay;
    let identities: Vec<IdentityResidual> = IDENTITIES
        .iter()
        .map(|&(name, lhs_f, rhs_f)| {
            let side = |f: Integrand, panels| {
                stepwise_simpson(traj, &|t, x| f(&coeffs.rates_at(t), decay, x), panels)
            };
            let (lhs, rhs) = (side(lhs_f, 2), side(rhs_f, 2));
            let (lhs1, rhs1) = (side(lhs_f, 1), side(rhs_f, 1));
            let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            IdentityResidual {
                name,
                lhs,
                rhs,
                residual: (lhs - rhs).abs() / scale,
                quadrature_change: ((lhs - lhs1).abs().max((rhs - rhs1).abs())) / scale,
            }
        })
        .collect();
    let pass = identities.iter().all(|r| r.residual < tol);
    Ok(IdentityCheck {
        identities,
        tol,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceCheck {
    /// `max_t maxᵢ |e^{xᵢ(t)} − yᵢ(t)| / yᵢ(t)`
    pub max_rel_error: f64,
    pub horizon: f64,
    pub samples: usize,
    pub tol: f64,
    pub pass: bool,
}

/// Integrates the transformed system from `x0` and the original system from
/// `e^{x0}` and compares them on a uniform output grid.
pub fn check_equivalence(
    model: Model<'_>,
    x0: LogState,
    horizon: f64,
    tol: f64,
    icfg: &IntegratorConfig,
) -> Result<EquivalenceCheck> {
    let omega = model.omega();
    if !(horizon >= omega * (1.0 - 1e-12)) {
        return Err(Error::Precondition(format!(
            "equivalence horizon {horizon} is shorter than one period {omega}"
        )));
    }
    let n = ((horizon / omega) * EQUIVALENCE_SAMPLES_PER_PERIOD as f64).ceil() as usize;
    let times: Vec<f64> = (1..=n).map(|k| horizon * k as f64 / n as f64).collect();
    let xs = sample(model, SystemKind::Transformed, x0.to_array(), 0.0, &times, icfg)?;
    let ys = sample(
        model,
        SystemKind::Original,
        x0.from_log().to_array(),
        0.0,
        &times,
        icfg,
    )?;
    let max_rel_error = xs
        .iter()
        .zip(&ys)
        .flat_map(|(x, y)| (0..3).map(move |i| (x[i].exp() - y[i]).abs() / y[i].abs()))
        .fold(0.0, f64::max);
    Ok(EquivalenceCheck {
        max_rel_error,
        horizon,
        samples: n,
        tol,
        pass: max_rel_error < tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub converged: bool,
    pub periodicity_residual: f64,
    pub positivity_min: f64,
    pub periodicity: PeriodicityCheck,
    pub positivity: PositivityCheck,
    pub box_containment: Option<BoxCheck>,
    pub integral_identities: IdentityCheck,
    pub equivalence: EquivalenceCheck,
    pub hypothesis: HypothesisReport,
    pub bounds: Option<AprioriBounds>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

/// Runs every check on `orbit` and applies the verdict policy: periodicity,
/// positivity, equivalence, the integral identities and box containment
/// outside the warning band are hard failures; small box violations and
/// crossings of the `δ₂` face are warnings.
pub fn certify(
    model: Model<'_>,
    orbit: &PeriodicOrbit,
    hypothesis: &HypothesisReport,
    bounds: Option<&AprioriBounds>,
    cfg: &CertifyConfig,
    icfg: &IntegratorConfig,
) -> Result<Certificate> {
    let traj = &orbit.trajectory;
    let periodicity = check_periodicity(model, traj, cfg.periodicity_tol, icfg)?;
    let positivity = check_positivity(traj);
    let identity_tol = cfg.identity_tol.unwrap_or(1e3 * icfg.rtol);
    let integral_identities = check_integral_identities(model, traj, identity_tol)?;
    let equivalence = check_equivalence(
        model,
        orbit.x0,
        cfg.equivalence_periods * model.omega(),
        cfg.equivalence_tol.unwrap_or(1e3 * icfg.rtol),
        icfg,
    )?;
    let box_containment = bounds.map(|b| check_box(traj, b, cfg.box_slack));

    let mut failures = Vec::new();
    let mut warnings = Vec::new();
    if !orbit.converged {
        failures.push(format!(
            "shooting did not converge (residual {:e})",
            orbit.residual
        ));
    }
    if !periodicity.pass {
        failures.push(format!(
            "periodicity residual {:e} exceeds tolerance (endpoint tol {:e}, spot tol {:e})",
            periodicity.residual, periodicity.tol, periodicity.spot_tol
        ));
    }
    if !positivity.pass {
        failures.push(format!(
            "orbit is not strictly positive (min {:e})",
            positivity.min
        ));
    }
    if !equivalence.pass {
        failures.push(format!(
            "original and transformed systems disagree by {:e} (tol {:e})",
            equivalence.max_rel_error, equivalence.tol
        ));
    }
    for r in &integral_identities.identities {
        if r.residual >= integral_identities.tol {
            failures.push(format!(
                "integral identity {} has residual {:e} (tol {:e})",
                r.name, r.residual, integral_identities.tol
            ));
        }
    }
    match &box_containment {
        Some(b) => match b.status {
            CheckStatus::Fail => failures.extend(b.notes.iter().cloned()),
            CheckStatus::Warn => warnings.extend(b.notes.iter().cloned()),
            CheckStatus::Pass => {}
        },
        None => warnings.push("a priori bounds unavailable; box containment not checked".into()),
    }
    if !hypothesis.holds {
        warnings.push("existence hypothesis does not hold for these coefficients".into());
    }
    if !hypothesis.theta_in_unit_interval {
        warnings.push("theta lies outside (0, 1) although the hypothesis holds".into());
    }
    if model.a_decay == ADecay::Alpha1 && hypothesis.alpha1_alpha2_gap > 0.0 {
        warnings.push(format!(
            "A-outflow uses alpha1 while the hypothesis and bounds use alpha2 (max gap {:e})",
            hypothesis.alpha1_alpha2_gap
        ));
    }

    let verdict = if !failures.is_empty() {
        Verdict::Failed
    } else if !warnings.is_empty() {
        Verdict::CertifiedWithWarnings
    } else {
        Verdict::Certified
    };
    Ok(Certificate {
        verdict,
        converged: orbit.converged,
        periodicity_residual: periodicity.residual,
        positivity_min: positivity.min,
        periodicity,
        positivity,
        box_containment,
        integral_identities,
        equivalence,
        hypothesis: hypothesis.clone(),
        bounds: bounds.cloned(),
        failures,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{check_hypothesis, compute_bounds};
    use crate::integrate::integrate;
    use crate::periodic::{CoefficientSet, DEFAULT_GRID_N};
    use crate::solver::{shoot, GuessSource};

    const LN_E_STAR: [f64; 3] = [
        0.251_314_428_280_906_1,
        1.828_491_478_496_785,
        0.912_200_746_622_63,
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

    fn dense() -> IntegratorConfig {
        IntegratorConfig::default().with_max_step(1.0 / 256.0)
    }

    fn traj_from(c: &CoefficientSet, x0: [f64; 3], t1: f64) -> Trajectory {
        integrate(Model::new(c), SystemKind::Transformed, x0, 0.0, t1, &dense()).unwrap()
    }

    #[test]
    fn equilibrium_is_periodic() {
        let c = c0();
        let chk = check_periodicity(
            Model::new(&c),
            &traj_from(&c, LN_E_STAR, 1.0),
            1e-10,
            &Default::default(),
        )
        .unwrap();
        assert!(chk.pass && chk.residual < 1e-10, "{chk:?}");
        assert_eq!(chk.spot_checks.len(), SPOT_CHECK_PHASES);
    }

    #[test]
    fn perturbed_start_is_not_periodic() {
        let c = c0();
        let x0 = LN_E_STAR.map(|v| v + 0.1);
        let cfg = IntegratorConfig::default();
        let chk = check_periodicity(Model::new(&c), &traj_from(&c, x0, 1.0), 1e-8, &cfg).unwrap();
        let phi = flow(Model::new(&c), SystemKind::Transformed, x0, 0.0, 1.0, &cfg).unwrap();
        let mismatch = (0..3).map(|i| (phi[i] - x0[i]).abs()).fold(0.0, f64::max);
        assert!(!chk.pass);
        assert!((chk.endpoint_residual - mismatch).abs() < 1e-12);
        assert!(mismatch > 1e-3);
    }

    #[test]
    fn short_trajectories_are_rejected() {
        let c = c0();
        let m = Model::new(&c);
        let mut tr = traj_from(&c, LN_E_STAR, 1.0);
        tr.times.truncate(1);
        tr.states.truncate(1);
        tr.derivatives.truncate(1);
        assert!(matches!(
            check_periodicity(m, &tr, 1e-8, &Default::default()),
            Err(Error::Precondition(_))
        ));
        let half = traj_from(&c, LN_E_STAR, 0.5);
        assert!(matches!(
            check_integral_identities(m, &half, 1e-6),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn box_margins_for_the_equilibrium() {
        let c = c0();
        let b = compute_bounds(&c, Default::default(), DEFAULT_GRID_N).unwrap();
        let chk = check_box(&traj_from(&c, LN_E_STAR, 1.0), &b, 1e-9);
        assert_eq!(chk.status, CheckStatus::Pass);
        assert!((chk.upper_margin[1] - (2.766_112_856_372_833 - 1.828_491_478_496_785)).abs() < 1e-8);
        assert!(chk.lower_margin.iter().chain(&chk.upper_margin).all(|&m| m > 0.0));
    }

    #[test]
    fn shifted_orbit_fails_the_box() {
        let c = c0();
        let b = compute_bounds(&c, Default::default(), DEFAULT_GRID_N).unwrap();
        let mut tr = traj_from(&c, LN_E_STAR, 1.0);
        for s in &mut tr.states {
            s[0] += 10.0;
        }
        let chk = check_box(&tr, &b, 1e-9);
        assert_eq!(chk.status, CheckStatus::Fail);
        assert!(chk.upper_margin[0] < 0.0);
    }

    #[test]
    fn delta2_crossing_is_a_warning() {
        let c = c0();
        let b = compute_bounds(&c, Default::default(), DEFAULT_GRID_N).unwrap();
        let mut tr = traj_from(&c, LN_E_STAR, 1.0);
        for s in &mut tr.states {
            s[1] = b.log_lower[1] - 0.5;
        }
        tr.derivatives.iter_mut().for_each(|d| d[1] = 0.0);
        let chk = check_box(&tr, &b, 1e-9);
        assert!(chk.delta2_violated);
        assert_eq!(chk.status, CheckStatus::Warn);
    }

    #[test]
    fn empty_box_is_an_immediate_inconsistency() {
        let c = c0();
        let mut b = compute_bounds(&c, Default::default(), DEFAULT_GRID_N).unwrap();
        b.log_lower[2] = b.log_upper[2] + 1.0;
        b.empty_components = vec![2];
        let chk = check_box(&traj_from(&c, LN_E_STAR, 1.0), &b, 1e-9);
        assert!(chk.inconsistent);
        assert_eq!(chk.status, CheckStatus::Fail);
    }

    #[test]
    fn identities_hold_at_the_equilibrium() {
        let c = c0();
        let chk = check_integral_identities(Model::new(&c), &traj_from(&c, LN_E_STAR, 1.0), 1e-8).unwrap();
        assert_eq!(chk.identities.len(), 6);
        assert!(chk.pass && chk.max_residual() < 1e-8, "{chk:?}");
    }

    #[test]
    fn identities_fail_off_orbit() {
        let c = c0();
        let tr = traj_from(&c, [2.0, 0.0, 0.0], 1.0);
        let chk = check_integral_identities(Model::new(&c), &tr, 1e-6).unwrap();
        assert!(!chk.pass);
    }

    #[test]
    fn equivalence_examples() {
        let c = c0();
        let m = Model::new(&c);
        let cfg = IntegratorConfig::default();
        let at_eq = check_equivalence(m, LogState::from_array(LN_E_STAR), 10.0, 1e-9, &cfg).unwrap();
        assert!(at_eq.max_rel_error < 1e-9, "{at_eq:?}");
        let off = crate::model::State::new(10.0, 1.0, 1.0).to_log().unwrap();
        let chk = check_equivalence(m, off, 10.0, 1e-6, &cfg).unwrap();
        assert!(chk.pass, "{chk:?}");
        assert!(check_equivalence(m, off, 0.5, 1e-6, &cfg).is_err());

        let zero = CoefficientSet::constant(
            1.0,
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
            },
        )
        .unwrap();
        let chk =
            check_equivalence(Model::new(&zero), LogState::new(0.3, -1.0, 2.0), 3.0, 1e-12, &cfg).unwrap();
        assert_eq!(chk.max_rel_error, 0.0);
    }

    #[test]
    fn c0_orbit_is_certified() {
        let c = c0();
        let m = Model::new(&c);
        let hyp = check_hypothesis(&c, DEFAULT_GRID_N).unwrap();
        let b = compute_bounds(&c, Default::default(), DEFAULT_GRID_N).unwrap();
        let orbit = shoot(
            m,
            LogState::from_array(LN_E_STAR),
            GuessSource::Averaged,
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        let cert = certify(
            m,
            &orbit,
            &hyp,
            Some(&b),
            &Default::default(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(cert.verdict, Verdict::Certified, "{:?}", cert.failures);
    }
}
