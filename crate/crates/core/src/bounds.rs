//! Existence hypothesis and the explicit a priori bounds for periodic
//! solutions of the transformed system.
//!
//! Every ω-periodic solution `x` must satisfy, componentwise and for all t,
//!
//! ```text
//! ln δᵢ < xᵢ(t) < ln(ρᵢ/ω) + dᵢ
//! ```
//!
//! where `ρᵢ` bounds `∫₀^ω e^{xᵢ}`, `dᵢ` bounds the total variation of `xᵢ`
//! over a period, and `δᵢ` comes from the equations at the minimum of `xᵢ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::periodic::{Coefficient, CoefficientSet, Expr, PositivityViolation};

/// Which quantities multiply `β₁⊤`, `β₂⊤` in `d₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum D1Variant {
    /// `(ρ₂, ρ₃)`: what the integral estimate of `∫|x₁'|` actually yields.
    #[default]
    Derivation,
    /// `(δ₂, δ₃)`: the constants as printed in the closed form of `d₁`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `max_t α₁(α₂+γ₂)/(α₁+μ₂)`
    pub lhs_max: f64,
    pub lhs_argmax: f64,
    /// `min_t (μ₃+α₂+γ₂)`
    pub rhs_min: f64,
    pub rhs_argmin: f64,
    pub positivity_ok: bool,
    pub positivity_violations: Vec<PositivityViolation>,
    pub holds: bool,
    /// Present when the hypothesis holds.
    pub theta: Option<f64>,
    /// `false` when the hypothesis holds but `θ ∉ (0,1)`; this can happen for
    /// time-varying coefficients whose extrema occur at different phases.
    pub theta_in_unit_interval: bool,
    /// `max_t |α₁ − α₂|`; non-zero means the two A-outflow variants differ.
    pub alpha1_alpha2_gap: f64,
    pub grid_n: usize,
}

/// `θ = max[α₁/(α₁+μ₂)] · max(α₂+γ₂) / min(μ₃+α₂+γ₂)`, without range check.
pub fn theta_value(c: &CoefficientSet, grid_n: usize) -> Result<f64> {
    let share = c.min_max_expr(Expr::ActivationShare, grid_n)?.max;
    let back = c.min_max_expr(Expr::Alpha2PlusGamma2, grid_n)?.max;
    let outflow = c.min_max_expr(Expr::AOutflow, grid_n)?.min;
    Ok(share * back / outflow)
}

/// θ, required to lie in `(0, 1)`.
pub fn compute_theta(c: &CoefficientSet, grid_n: usize) -> Result<f64> {
    let theta = theta_value(c, grid_n)?;
    if theta > 0.0 && theta < 1.0 {
        Ok(theta)
    } else {
        Err(Error::HypothesisInconsistency(format!(
            "theta = {theta} lies outside (0, 1)"
        )))
    }
}

pub fn check_hypothesis(c: &CoefficientSet, grid_n: usize) -> Result<HypothesisReport> {
    let lhs = c.min_max_expr(Expr::HypothesisLhs, grid_n)?;
    let rhs = c.min_max_expr(Expr::AOutflow, grid_n)?;
    let positivity_violations = c.positivity_violations(grid_n);
    let positivity_ok = positivity_violations.is_empty();
    let holds = positivity_ok && lhs.max <= rhs.min;

    let (theta, theta_in_unit_interval) = if holds {
        let th = theta_value(c, grid_n)?;
        (Some(th), th > 0.0 && th < 1.0)
    } else {
        (None, true)
    };

    let (a1, a2) = (c.get(Coefficient::Alpha1), c.get(Coefficient::Alpha2));
    let alpha1_alpha2_gap = if a1 == a2 {
        0.0
    } else {
        crate::periodic::periodic_extrema(|t| (a1.eval(t) - a2.eval(t)).abs(), c.omega(), grid_n).max
    };

    Ok(HypothesisReport {
        lhs_max: lhs.max,
        lhs_argmax: lhs.argmax,
        rhs_min: rhs.min,
        rhs_argmin: rhs.argmin,
        positivity_ok,
        positivity_violations,
        holds,
        theta,
        theta_in_unit_interval,
        alpha1_alpha2_gap,
        grid_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AprioriBounds {
    pub omega: f64,
    pub theta: f64,
    pub rho: [f64; 3],
    pub d: [f64; 3],
    pub delta: [f64; 3],
    /// `ln δᵢ`
    pub log_lower: [f64; 3],
    /// `ln(ρᵢ/ω) + dᵢ`
    pub log_upper: [f64; 3],
    /// `h = Σᵢ max{|ln δᵢ|, |ln(ρᵢ/ω)| + dᵢ}`
    pub ball_radius: f64,
    pub d1_variant: D1Variant,
    /// Components whose box is empty (`log_lower ≥ log_upper`).
    pub empty_components: Vec<usize>,
}

impl AprioriBounds {
    pub fn is_consistent(&self) -> bool {
        self.empty_components.is_empty()
    }

    /// Centre of the log box, a fallback initial guess.
    pub fn box_center(&self) -> [f64; 3] {
        std::array::from_fn(|i| 0.5 * (self.log_lower[i] + self.log_upper[i]))
    }

    /// Smallest signed distance of `x` to the box faces (negative = outside).
    pub fn margin(&self, x: [f64; 3]) -> f64 {
        (0..3)
            .map(|i| (x[i] - self.log_lower[i]).min(self.log_upper[i] - x[i]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// The constants `ρᵢ`, `dᵢ`, `δᵢ`, the log box and the ball radius.
///
/// Requires `θ ∈ (0,1)`. An empty box is reported through
/// [`AprioriBounds::empty_components`], not as an error.
pub fn compute_bounds(c: &CoefficientSet, variant: D1Variant, grid_n: usize) -> Result<AprioriBounds> {
    use Coefficient as K;

    let omega = c.omega();
    let theta = compute_theta(c, grid_n)?;
    let ext = |e: Expr| c.min_max_expr(e, grid_n);

    let b_mean = c.get(K::B).mean();
    let b_min = ext(Expr::Coef(K::B))?.min;
    let mu1 = ext(Expr::Coef(K::Mu1))?;
    let beta1 = ext(Expr::Coef(K::Beta1))?;
    let beta2_max = ext(Expr::Coef(K::Beta2))?.max;
    let gamma1_max = ext(Expr::Coef(K::Gamma1))?.max;
    let gamma2_max = ext(Expr::Coef(K::Gamma2))?.max;
    let alpha1_min = ext(Expr::Coef(K::Alpha1))?.min;
    let mu2_alpha1_min = ext(Expr::Mu2PlusAlpha1)?.min;
    let back_max = ext(Expr::Alpha2PlusGamma2)?.max;
    let l_outflow_max = ext(Expr::LOutflow)?.max;
    let a_outflow_max = ext(Expr::AOutflow)?.max;

    let inflow = omega * b_mean;
    let rho2 = inflow / ((1.0 - theta) * mu2_alpha1_min);
    let rho3 = theta * inflow / ((1.0 - theta) * back_max);
    let rho1 = inflow / mu1.min
        * (1.0
            + gamma1_max / ((1.0 - theta) * mu2_alpha1_min)
            + theta * gamma2_max / ((1.0 - theta) * back_max));

    let delta2 = beta1.min / l_outflow_max;
    let delta3 = alpha1_min / a_outflow_max;

    let d2 = 2.0 * omega * c.mean_of(&[K::Mu2, K::Alpha1, K::Gamma1]);
    let d3 = 2.0 * omega * c.mean_of(&[K::Mu3, K::Alpha2, K::Gamma2]);
    let (w2, w3) = match variant {
        D1Variant::Derivation => (rho2, rho3),
        D1Variant::Literal => (delta2, delta3),
    };
    let d1 = 2.0 * (omega * c.get(K::Mu1).mean() + beta1.max * w2 + beta2_max * w3);

    let delta1 =
        omega * b_min / (omega * mu1.max + beta1.max * rho2 * d2.exp() + beta2_max * rho3 * d3.exp());

    let rho = [rho1, rho2, rho3];
    let d = [d1, d2, d3];
    let delta = [delta1, delta2, delta3];
    for (name, vals) in [("rho", rho), ("d", d), ("delta", delta)] {
        if let Some(i) = vals.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::HypothesisInconsistency(format!(
                "{name}{} = {} is not a positive finite number",
                i + 1,
                vals[i]
            )));
        }
    }

    let log_lower = delta.map(f64::ln);
    let log_upper: [f64; 3] = std::array::from_fn(|i| (rho[i] / omega).ln() + d[i]);
    let ball_radius = (0..3)
        .map(|i| log_lower[i].abs().max((rho[i] / omega).ln().abs() + d[i]))
        .sum();
    let empty_components = (0..3).filter(|&i| log_lower[i] >= log_upper[i]).collect();

    Ok(AprioriBounds {
        omega,
        theta,
        rho,
        d,
        delta,
        log_lower,
        log_upper,
        ball_radius,
        d1_variant: variant,
        empty_components,
    })
}
