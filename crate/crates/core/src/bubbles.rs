//! The standard bubble U, its rescalings U_{δ,ξ}, the five kernel
//! functions ψ⁰…ψ⁴ of the linearized equation −Δψ = 3U²ψ, and the
//! first-order projection of the bubble onto a bounded domain.

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{FRAK_BIG_C, FRAK_C};
use crate::domain::DomainModel;
use crate::quad::Point4;

#[derive(Debug, Error)]
pub enum BubbleError {
    #[error("concentration rate must be positive, got {0}")]
    NonPositiveDelta(f64),
    #[error("kernel index {0} out of range 0..=4")]
    InvalidKernelIndex(usize),
    #[error("point {0:?} lies outside the domain")]
    PointOutsideDomain(Point4),
    #[error("exact ball projection requires xi at the ball center")]
    XiNotAtCenter,
}

/// Concentration rate δ > 0 and blow-up point ξ ∈ ℝ⁴.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub delta: f64,
    pub xi: Point4,
}

impl BubbleParams {
    pub fn new(delta: f64, xi: Point4) -> Result<Self, BubbleError> {
        if !(delta > 0.0) {
            return Err(BubbleError::NonPositiveDelta(delta));
        }
        Ok(BubbleParams { delta, xi })
    }

    pub fn centered(delta: f64) -> Result<Self, BubbleError> {
        Self::new(delta, Vector4::zeros())
    }
}

/// U(x) = 𝔠 / (1 + |x|²).
pub fn eval_u(x: &Point4) -> f64 {
    FRAK_C / (1.0 + x.norm_squared())
}

/// U_{δ,ξ}(x) = (1/δ) U((x−ξ)/δ) = 𝔠δ/(δ² + |x−ξ|²).
pub fn eval_bubble(p: &BubbleParams, x: &Point4) -> f64 {
    let r2 = (x - p.xi).norm_squared();
    FRAK_C * p.delta / (p.delta * p.delta + r2)
}

/// ∇U_{δ,ξ}(x) = −2𝔠δ(x−ξ)/(δ²+|x−ξ|²)².
pub fn grad_bubble(p: &BubbleParams, x: &Point4) -> Point4 {
    let d = x - p.xi;
    let q = p.delta * p.delta + d.norm_squared();
    d * (-2.0 * FRAK_C * p.delta / (q * q))
}

/// ψ⁰(y) = −𝔠(1−|y|²)/(1+|y|²)².
pub fn psi0(y: &Point4) -> f64 {
    let r2 = y.norm_squared();
    let q = 1.0 + r2;
    -FRAK_C * (1.0 - r2) / (q * q)
}

/// ψ^j(y) = −2𝔠 y_j/(1+|y|²)², j = 1..4.
pub fn psij(j: usize, y: &Point4) -> f64 {
    let q = 1.0 + y.norm_squared();
    -2.0 * FRAK_C * y[j - 1] / (q * q)
}

/// Rescaled kernel functions ψ^j_{δ,ξ}(x) = (1/δ)ψ^j((x−ξ)/δ).
pub fn eval_psi(j: usize, p: &BubbleParams, x: &Point4) -> Result<f64, BubbleError> {
    if j > 4 {
        return Err(BubbleError::InvalidKernelIndex(j));
    }
    let y = (x - p.xi) / p.delta;
    let v = if j == 0 { psi0(&y) } else { psij(j, &y) };
    Ok(v / p.delta)
}

/// First-order projected bubble U_{δ,ξ}(x) − 𝔆 δ H(x, ξ); vanishes on the
/// boundary up to O(δ³).
pub fn eval_pu_expansion(
    p: &BubbleParams,
    x: &Point4,
    domain: &DomainModel,
) -> Result<f64, BubbleError> {
    if !domain.contains(x) {
        return Err(BubbleError::PointOutsideDomain(*x));
    }
    Ok(eval_bubble(p, x) - FRAK_BIG_C * p.delta * domain.regular_part(x, &p.xi))
}

/// Exact projection for the bubble centered at the ball center:
/// for −Δw = U_δ³ in B(0,R), w = 0 on ∂B, the solution is
/// w = U_δ − 𝔠δ/(δ²+R²) since the bubble is constant on the boundary.
pub fn exact_pu_ball(p: &BubbleParams, radius: f64, x: &Point4) -> Result<f64, BubbleError> {
    if p.xi.norm() > 1e-14 * radius.max(1.0) {
        return Err(BubbleError::XiNotAtCenter);
    }
    Ok(eval_bubble(p, x) - FRAK_C * p.delta / (p.delta * p.delta + radius * radius))
}

/// Boundary offset removed by `exact_pu_ball`: 𝔠δ/(δ²+R²).
pub fn exact_pu_ball_offset(delta: f64, radius: f64) -> f64 {
    FRAK_C * delta / (delta * delta + radius * radius)
}
