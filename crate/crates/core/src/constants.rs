//! The handful of universal constants that show up in every expansion:
//! the bubble height `𝔠 = 2√2`, the measure `ω = 2π²` of the unit sphere
//! S³, the projection constant `𝔆 = 2𝔠ω` and the reduced-system constant
//! `c = 𝔆²/(ω𝔠²) = 4ω`.

use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};

/// Bubble height: `U(0) = 𝔠 = 2√2`.
pub const FRAK_C: f64 = 2.0 * SQRT_2;

/// Measure of the unit sphere S³ in ℝ⁴.
pub const OMEGA: f64 = 2.0 * PI * PI;

/// Projection constant `𝔆 = 2𝔠ω` appearing in `PU = U − 𝔆δH + O(δ³)`.
pub const FRAK_BIG_C: f64 = 2.0 * FRAK_C * OMEGA;

/// Reduced-system constant `c = 𝔆²/(ω𝔠²) = 4ω`.
pub const C_REDUCED: f64 = 4.0 * OMEGA;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    pub frak_c: f64,
    pub omega: f64,
    pub frak_big_c: f64,
    pub c_reduced: f64,
}

impl Constants {
    pub fn standard() -> Self {
        Constants {
            frak_c: FRAK_C,
            omega: OMEGA,
            frak_big_c: FRAK_BIG_C,
            c_reduced: C_REDUCED,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn algebraic_relations() {
        let k = Constants::standard();
        assert!((k.frak_c - 2.0 * 2.0_f64.sqrt()).abs() < 1e-15);
        assert!((k.frak_big_c - 2.0 * k.frak_c * k.omega).abs() < 1e-12);
        // 𝔆²/(ω𝔠²) collapses to 4ω
        let c = k.frak_big_c * k.frak_big_c / (k.omega * k.frak_c * k.frak_c);
        assert!((c - k.c_reduced).abs() < 1e-10);
        assert!((k.c_reduced - 8.0 * PI * PI).abs() < 1e-12);
    }
}
