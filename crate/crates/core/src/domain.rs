//! Domain geometry and potential-theoretic data: Green function G, its
//! regular part H, the Robin function τ with analytic derivatives on the
//! ball, and the potential V with analytic gradient and Hessian.
//!
//! The ball is the canonical instance (method of images makes everything
//! closed-form); custom domains plug in through [`RobinProvider`] and get
//! finite-difference derivatives of τ.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

use crate::constants::OMEGA;
use crate::quad::Point4;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("point {0:?} lies outside the domain")]
    OutsideDomain(Point4),
    #[error("Green function pole: x = y")]
    GreenPole,
    #[error("point {0:?} is within the safety margin {1} of the boundary")]
    TooCloseToBoundary(Point4, f64),
}

/// User-supplied potential theory for non-ball domains.
pub trait RobinProvider: Send + Sync {
    fn regular_part(&self, x: &Point4, y: &Point4) -> f64;
    fn tau(&self, x: &Point4) -> f64;
    fn contains(&self, x: &Point4) -> bool;
    fn dist_boundary(&self, x: &Point4) -> f64;
    fn diameter(&self) -> f64;
}

#[derive(Clone)]
pub enum DomainModel {
    Ball { center: Point4, radius: f64 },
    Custom(Arc<dyn RobinProvider>),
}

impl std::fmt::Debug for DomainModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DomainModel::Ball { center, radius } => {
                write!(f, "Ball {{ center: {center:?}, radius: {radius} }}")
            }
            DomainModel::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl DomainModel {
    pub fn ball(center: Point4, radius: f64) -> Self {
        assert!(radius > 0.0);
        DomainModel::Ball { center, radius }
    }

    pub fn unit_ball() -> Self {
        DomainModel::ball(Vector4::zeros(), 1.0)
    }

    pub fn contains(&self, x: &Point4) -> bool {
        match self {
            DomainModel::Ball { center, radius } => (x - center).norm() <= *radius,
            DomainModel::Custom(p) => p.contains(x),
        }
    }

    pub fn dist_boundary(&self, x: &Point4) -> f64 {
        match self {
            DomainModel::Ball { center, radius } => radius - (x - center).norm(),
            DomainModel::Custom(p) => p.dist_boundary(x),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DomainModel::Ball { radius, .. } => 2.0 * radius,
            DomainModel::Custom(p) => p.diameter(),
        }
    }

    /// Default interior safety margin: 0.1 × diameter.
    pub fn safety_margin(&self) -> f64 {
        0.1 * self.diameter()
    }

    /// Regular part H(x, y) of the Green function.
    ///
    /// Ball of radius R about c (method of images, written in the
    /// pole-free form |y*−x|²|y|²/R² = |x|²|y|²/R² − 2x·y + R²):
    /// H(x,y) = 1/(2ω (|x|²|y|²/R² − 2x·y + R²)).
    pub fn regular_part(&self, x: &Point4, y: &Point4) -> f64 {
        match self {
            DomainModel::Ball { center, radius } => {
                let xc = x - center;
                let yc = y - center;
                let r2 = radius * radius;
                let d = xc.norm_squared() * yc.norm_squared() / r2 - 2.0 * xc.dot(&yc) + r2;
                1.0 / (2.0 * OMEGA * d)
            }
            DomainModel::Custom(p) => p.regular_part(x, y),
        }
    }

    /// ∇_x H(x, y) (analytic on the ball, central differences otherwise).
    pub fn grad_regular_part(&self, x: &Point4, y: &Point4) -> Point4 {
        match self {
            DomainModel::Ball { center, radius } => {
                let xc = x - center;
                let yc = y - center;
                let r2 = radius * radius;
                let d = xc.norm_squared() * yc.norm_squared() / r2 - 2.0 * xc.dot(&yc) + r2;
                let dd = 2.0 * (yc.norm_squared() / r2) * xc - 2.0 * yc;
                -dd / (2.0 * OMEGA * d * d)
            }
            DomainModel::Custom(_) => {
                let h = 1e-5 * self.diameter();
                let mut g = Vector4::zeros();
                for i in 0..4 {
                    let mut e = Vector4::zeros();
                    e[i] = h;
                    g[i] = (self.regular_part(&(x + e), y) - self.regular_part(&(x - e), y))
                        / (2.0 * h);
                }
                g
            }
        }
    }

    /// Green function G(x,y) = 1/(2ω|x−y|²) − H(x,y), x ≠ y interior.
    pub fn green(&self, x: &Point4, y: &Point4) -> Result<f64, DomainError> {
        if !self.contains(x) {
            return Err(DomainError::OutsideDomain(*x));
        }
        if !self.contains(y) {
            return Err(DomainError::OutsideDomain(*y));
        }
        let d2 = (x - y).norm_squared();
        if d2 == 0.0 {
            return Err(DomainError::GreenPole);
        }
        Ok(1.0 / (2.0 * OMEGA * d2) - self.regular_part(x, y))
    }

    /// Robin function τ(x) = H(x, x).
    ///
    /// Ball: τ(x) = R²/(2ω(R²−|x−c|²)²).
    pub fn tau(&self, x: &Point4) -> f64 {
        match self {
            DomainModel::Ball { center, radius } => {
                let r2 = radius * radius;
                let q = r2 - (x - center).norm_squared();
                r2 / (2.0 * OMEGA * q * q)
            }
            DomainModel::Custom(p) => p.tau(x),
        }
    }

    /// (∇τ, D²τ) at x; analytic on the ball, 5-point central differences
    /// at step 1e−4·R-scale for custom providers.
    pub fn grad_hess_tau(&self, x: &Point4) -> Result<(Point4, Matrix4<f64>), DomainError> {
        let rho = self.safety_margin();
        if self.dist_boundary(x) < rho {
            return Err(DomainError::TooCloseToBoundary(*x, rho));
        }
        match self {
            DomainModel::Ball { center, radius } => {
                let xc = x - center;
                let r2 = radius * radius;
                let q = r2 - xc.norm_squared();
                let grad = (2.0 * r2 / OMEGA) * xc / q.powi(3);
                let mut hess = Matrix4::identity() * (2.0 * r2 / (OMEGA * q.powi(3)));
                hess += (12.0 * r2 / (OMEGA * q.powi(4))) * xc * xc.transpose();
                Ok((grad, hess))
            }
            DomainModel::Custom(_) => {
                let h = 1e-4 * 0.5 * self.diameter();
                let f = |p: &Point4| self.tau(p);
                Ok(fd_grad_hess(&f, x, h))
            }
        }
    }
}

/// 5-point central-difference gradient and Hessian of a scalar field.
pub fn fd_grad_hess<F: Fn(&Point4) -> f64>(f: &F, x: &Point4, h: f64) -> (Point4, Matrix4<f64>) {
    let mut grad = Vector4::zeros();
    let mut hess = Matrix4::zeros();
    let f0 = f(x);
    let unit = |i: usize| {
        let mut e = Vector4::zeros();
        e[i] = 1.0;
        e
    };
    for i in 0..4 {
        let e = unit(i);
        let fp1 = f(&(x + h * e));
        let fp2 = f(&(x + 2.0 * h * e));
        let fm1 = f(&(x - h * e));
        let fm2 = f(&(x - 2.0 * h * e));
        grad[i] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h);
        hess[(i, i)] = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
    }
    for i in 0..4 {
        for j in (i + 1)..4 {
            let (ei, ej) = (unit(i), unit(j));
            let fpp = f(&(x + h * ei + h * ej));
            let fpm = f(&(x + h * ei - h * ej));
            let fmp = f(&(x - h * ei + h * ej));
            let fmm = f(&(x - h * ei - h * ej));
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    (grad, hess)
}

/// Single Gaussian bump a·exp(−|x−μ|²/w²).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub center: [f64; 4],
    pub width: f64,
}

/// The potential V with analytic value/gradient/Hessian.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Potential {
    Constant { value: f64 },
    /// V(x) = c0 + l·x + ½ xᵀQx with Q symmetric.
    Quadratic { c0: f64, linear: [f64; 4], quadratic: [[f64; 4]; 4] },
    GaussianBumps { base: f64, bumps: Vec<GaussianBump> },
}

impl Potential {
    pub fn constant(v: f64) -> Self {
        Potential::Constant { value: v }
    }

    pub fn value(&self, x: &Point4) -> f64 {
        match self {
            Potential::Constant { value } => *value,
            Potential::Quadratic { c0, linear, quadratic } => {
                let l = Vector4::from_column_slice(linear);
                let q = Matrix4::from_fn(|i, j| quadratic[i][j]);
                c0 + l.dot(x) + 0.5 * (x.transpose() * q * x)[(0, 0)]
            }
            Potential::GaussianBumps { base, bumps } => {
                let mut v = *base;
                for b in bumps {
                    let d = x - Vector4::from_column_slice(&b.center);
                    v += b.amplitude * (-d.norm_squared() / (b.width * b.width)).exp();
                }
                v
            }
        }
    }

    pub fn gradient(&self, x: &Point4) -> Point4 {
        match self {
            Potential::Constant { .. } => Vector4::zeros(),
            Potential::Quadratic { linear, quadratic, .. } => {
                let l = Vector4::from_column_slice(linear);
                let q = Matrix4::from_fn(|i, j| quadratic[i][j]);
                l + 0.5 * (q + q.transpose()) * x
            }
            Potential::GaussianBumps { bumps, .. } => {
                let mut g = Vector4::zeros();
                for b in bumps {
                    let w2 = b.width * b.width;
                    let d = x - Vector4::from_column_slice(&b.center);
                    let e = b.amplitude * (-d.norm_squared() / w2).exp();
                    g += d * (-2.0 * e / w2);
                }
                g
            }
        }
    }

    pub fn hessian(&self, x: &Point4) -> Matrix4<f64> {
        match self {
            Potential::Constant { .. } => Matrix4::zeros(),
            Potential::Quadratic { quadratic, .. } => {
                let q = Matrix4::from_fn(|i, j| quadratic[i][j]);
                0.5 * (q + q.transpose())
            }
            Potential::GaussianBumps { bumps, .. } => {
                let mut h = Matrix4::zeros();
                for b in bumps {
                    let w2 = b.width * b.width;
                    let d = x - Vector4::from_column_slice(&b.center);
                    let e = b.amplitude * (-d.norm_squared() / w2).exp();
                    h += (4.0 * e / (w2 * w2)) * d * d.transpose();
                    h -= Matrix4::identity() * (2.0 * e / w2);
                }
                h
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v4(a: f64, b: f64, c: f64, d: f64) -> Point4 {
        Vector4::new(a, b, c, d)
    }

    #[test]
    fn green_ball_closed_form() {
        let ball = DomainModel::unit_ball();
        // centered source: G(x,0) = (1/2ω)(1/|x|² − 1)
        let x = v4(0.5, 0.0, 0.0, 0.0);
        let g = ball.green(&x, &Vector4::zeros()).unwrap();
        let pi = std::f64::consts::PI;
        assert_relative_eq!(g, 3.0 / (4.0 * pi * pi), max_relative = 1e-14);
        // vanishes on the boundary
        let xb = v4(0.6, 0.8, 0.0, 0.0);
        assert!(ball.green(&xb, &Vector4::zeros()).unwrap().abs() < 1e-10);
        let xb2 = v4(0.0, 1.0, 0.0, 0.0) * (1.0 - 1e-13);
        let y = v4(0.2, -0.3, 0.1, 0.0);
        assert!(ball.green(&xb2, &y).unwrap().abs() < 1e-10);
        // pole and outside errors
        assert!(matches!(ball.green(&x, &x), Err(DomainError::GreenPole)));
        assert!(matches!(
            ball.green(&v4(2.0, 0.0, 0.0, 0.0), &x),
            Err(DomainError::OutsideDomain(_))
        ));
    }

    #[test]
    fn green_symmetry_and_positivity() {
        let ball = DomainModel::ball(v4(0.1, 0.0, -0.2, 0.0), 1.5);
        let pairs = [
            (v4(0.3, 0.2, 0.0, 0.1), v4(-0.4, 0.1, 0.0, 0.3)),
            (v4(0.9, 0.0, -0.2, 0.0), v4(0.1, -0.5, 0.2, 0.2)),
            (v4(0.0, 0.0, 0.5, 0.0), v4(0.2, 0.2, -0.6, -0.1)),
        ];
        for (x, y) in pairs {
            let gxy = ball.green(&x, &y).unwrap();
            let gyx = ball.green(&y, &x).unwrap();
            assert_relative_eq!(gxy, gyx, max_relative = 1e-12);
            assert!(gxy > 0.0, "maximum principle violated at {x:?},{y:?}");
        }
    }

    #[test]
    fn regular_part_is_harmonic_and_constant_for_centered_source() {
        let r = 1.3;
        let ball = DomainModel::ball(Vector4::zeros(), r);
        // H(x, 0) ≡ 1/(2ωR²)
        for x in [v4(0.0, 0.0, 0.0, 0.0), v4(0.5, 0.2, 0.0, -0.4), v4(1.0, 0.0, 0.0, 0.0)] {
            assert_relative_eq!(
                ball.regular_part(&x, &Vector4::zeros()),
                1.0 / (2.0 * OMEGA * r * r),
                max_relative = 1e-12
            );
        }
        // Δ_x H(x,y) = 0
        let y = v4(0.3, -0.2, 0.1, 0.0);
        let x = v4(-0.2, 0.4, 0.0, 0.3);
        let h = 1e-3;
        let mut lap = 0.0;
        for i in 0..4 {
            let mut e = Vector4::zeros();
            e[i] = 1.0;
            lap += (-ball.regular_part(&(x + 2.0 * h * e), &y)
                + 16.0 * ball.regular_part(&(x + h * e), &y)
                - 30.0 * ball.regular_part(&x, &y)
                + 16.0 * ball.regular_part(&(x - h * e), &y)
                - ball.regular_part(&(x - 2.0 * h * e), &y))
                / (12.0 * h * h);
        }
        assert!(lap.abs() < 1e-6, "laplacian of H = {lap}");
        // grad of H matches finite differences
        let g = ball.grad_regular_part(&x, &y);
        for i in 0..4 {
            let mut e = Vector4::zeros();
            e[i] = h;
            let fd = (ball.regular_part(&(x + e), &y) - ball.regular_part(&(x - e), &y)) / (2.0 * h);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn robin_function_ball() {
        let pi = std::f64::consts::PI;
        let ball = DomainModel::unit_ball();
        assert_relative_eq!(ball.tau(&Vector4::zeros()), 1.0 / (4.0 * pi * pi), max_relative = 1e-14);
        assert_relative_eq!(
            ball.tau(&v4(0.5, 0.0, 0.0, 0.0)),
            1.0 / (4.0 * pi * pi * 0.5625),
            max_relative = 1e-14
        );
        let big = DomainModel::ball(Vector4::zeros(), 2.0);
        assert_relative_eq!(big.tau(&Vector4::zeros()), 1.0 / (16.0 * pi * pi), max_relative = 1e-14);
        // monotone increase along a radius
        let mut prev = 0.0;
        for k in 0..20 {
            let t = ball.tau(&v4(0.045 * k as f64, 0.0, 0.0, 0.0));
            assert!(t > prev);
            prev = t;
        }
    }

    #[test]
    fn tau_derivatives_ball() {
        let ball = DomainModel::unit_ball();
        let (g0, h0) = ball.grad_hess_tau(&Vector4::zeros()).unwrap();
        assert!(g0.norm() < 1e-14);
        // isotropic positive-definite Hessian at the center: κ·Id
        let kappa = h0[(0, 0)];
        assert!(kappa > 0.0);
        assert_relative_eq!(h0[(1, 1)], kappa, max_relative = 1e-14);
        assert!((h0 - Matrix4::identity() * kappa).norm() < 1e-14);
        // against the finite-difference oracle on the closed form
        let x = v4(0.25, -0.1, 0.3, 0.05);
        let (g, h) = ball.grad_hess_tau(&x).unwrap();
        let (gfd, hfd) = fd_grad_hess(&|p: &Point4| ball.tau(p), &x, 1e-4);
        assert!((g - gfd).norm() < 1e-8 * g.norm().max(1.0));
        assert!((h - hfd).norm() < 1e-5 * h.norm());
        assert!((h - h.transpose()).norm() < 1e-13);
        // near-boundary rejection
        assert!(matches!(
            ball.grad_hess_tau(&v4(0.95, 0.0, 0.0, 0.0)),
            Err(DomainError::TooCloseToBoundary(_, _))
        ));
    }

    #[test]
    fn tau_rotation_equivariance() {
        use nalgebra::Matrix4;
        let ball = DomainModel::unit_ball();
        // rotation in the (1,3) plane
        let th = 0.83_f64;
        let mut q = Matrix4::identity();
        q[(0, 0)] = th.cos();
        q[(0, 2)] = -th.sin();
        q[(2, 0)] = th.sin();
        q[(2, 2)] = th.cos();
        let x = v4(0.3, 0.1, -0.2, 0.15);
        let (g, _) = ball.grad_hess_tau(&x).unwrap();
        let (gq, _) = ball.grad_hess_tau(&(q * x)).unwrap();
        assert!((gq - q * g).norm() < 1e-12);
    }

    #[test]
    fn custom_provider_roundtrip() {
        // wrap the analytic ball as a "custom" provider; finite-difference
        // τ-derivatives must agree with the analytic ones
        struct BallShim;
        impl RobinProvider for BallShim {
            fn regular_part(&self, x: &Point4, y: &Point4) -> f64 {
                DomainModel::unit_ball().regular_part(x, y)
            }
            fn tau(&self, x: &Point4) -> f64 {
                DomainModel::unit_ball().tau(x)
            }
            fn contains(&self, x: &Point4) -> bool {
                x.norm() <= 1.0
            }
            fn dist_boundary(&self, x: &Point4) -> f64 {
                1.0 - x.norm()
            }
            fn diameter(&self) -> f64 {
                2.0
            }
        }
        let custom = DomainModel::Custom(Arc::new(BallShim));
        let ball = DomainModel::unit_ball();
        let x = v4(0.2, 0.3, -0.1, 0.0);
        let (g, h) = custom.grad_hess_tau(&x).unwrap();
        let (ga, ha) = ball.grad_hess_tau(&x).unwrap();
        assert!((g - ga).norm() < 1e-8);
        assert!((h - ha).norm() < 1e-4 * ha.norm());
    }

    #[test]
    fn potential_derivatives_match_finite_differences() {
        let pots = [
            Potential::Quadratic {
                c0: 1.0,
                linear: [0.1, -0.2, 0.0, 0.3],
                quadratic: [
                    [2.0, 0.5, 0.0, 0.0],
                    [0.5, -1.0, 0.0, 0.2],
                    [0.0, 0.0, 0.7, 0.0],
                    [0.0, 0.2, 0.0, 1.1],
                ],
            },
            Potential::GaussianBumps {
                base: 1.0,
                bumps: vec![
                    GaussianBump { amplitude: 0.8, center: [0.2, 0.0, -0.1, 0.0], width: 0.5 },
                    GaussianBump { amplitude: -0.3, center: [-0.3, 0.1, 0.0, 0.2], width: 0.8 },
                ],
            },
        ];
        let x = v4(0.15, -0.22, 0.08, 0.3);
        for v in &pots {
            let (gfd, hfd) = fd_grad_hess(&|p: &Point4| v.value(p), &x, 1e-4);
            let g = v.gradient(&x);
            let h = v.hessian(&x);
            assert!((g - gfd).norm() < 1e-6 * g.norm().max(1.0), "{v:?}");
            assert!((h - hfd).norm() < 1e-6 * h.norm().max(1.0), "{v:?}");
        }
    }
}
