//! The reduced finite-dimensional system: locate a non-degenerate
//! critical point ξ₀ of f = τ/V by Newton iteration, set
//! t₀ = c·τ(ξ₀)/V(ξ₀), certify non-degeneracy and the local-degree sign,
//! and emit the predicted concentration law δ(ε) = e^{−t₀/ε}.

use nalgebra::{Matrix4, Matrix5, Vector4};
use serde::Serialize;
use thiserror::Error;

use crate::constants::C_REDUCED;
use crate::domain::{DomainError, DomainModel, Potential};
use crate::quad::Point4;

#[derive(Debug, Error)]
pub enum ReducedError {
    #[error("Newton did not converge in {iters} iterations (|grad| = {grad_norm})")]
    NonConvergence { iters: usize, grad_norm: f64 },
    #[error("converged to a degenerate critical point (|det D²f| = {det} below threshold {threshold})")]
    DegenerateCriticalPoint { det: f64, threshold: f64 },
    #[error("converged outside the interior safety region")]
    OutsideSafeRegion,
    #[error("potential is non-positive at the critical point (V = {0})")]
    NonPositivePotential(f64),
    #[error("potential vanishes at evaluation point")]
    PotentialZero,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("Jacobian determinant {0} below conditioning threshold")]
    IllConditionedJacobian(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { max_iters: 100, grad_tol: 1e-12 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducedSolution {
    pub xi0: [f64; 4],
    pub t0: f64,
    pub f_value: f64,
    pub hess_f_det: f64,
    pub degree_sign: i8,
    pub newton_iters: usize,
    pub residual_norm: f64,
}

impl ReducedSolution {
    pub fn xi(&self) -> Point4 {
        Vector4::from_column_slice(&self.xi0)
    }
}

/// f(ξ) = τ(ξ)/V(ξ) with quotient-rule gradient and Hessian.
pub fn eval_f(
    domain: &DomainModel,
    potential: &Potential,
    xi: &Point4,
) -> Result<(f64, Point4, Matrix4<f64>), ReducedError> {
    let v = potential.value(xi);
    if v == 0.0 {
        return Err(ReducedError::PotentialZero);
    }
    let tau = domain.tau(xi);
    let (gt, ht) = domain.grad_hess_tau(xi)?;
    let gv = potential.gradient(xi);
    let hv = potential.hessian(xi);
    let f = tau / v;
    let grad = gt / v - (tau / (v * v)) * gv;
    let hess = ht / v
        - (gt * gv.transpose() + gv * gt.transpose()) / (v * v)
        - (tau / (v * v)) * hv
        + (2.0 * tau / (v * v * v)) * gv * gv.transpose();
    Ok((f, grad, hess))
}

/// Scale-aware non-degeneracy threshold: |det D²f| ≥ 1e−10 · ‖D²f‖⁴.
fn degeneracy_threshold(hess: &Matrix4<f64>) -> f64 {
    1e-10 * hess.norm().powi(4)
}

/// Newton iteration on ∇f from `guess`; fills the full certificate.
pub fn find_critical_point(
    domain: &DomainModel,
    potential: &Potential,
    guess: &Point4,
    opts: &NewtonOptions,
) -> Result<ReducedSolution, ReducedError> {
    let mut xi = *guess;
    let mut iters = 0;
    let mut grad_norm;
    loop {
        let (_, grad, hess) = eval_f(domain, potential, &xi)?;
        grad_norm = grad.norm();
        if grad_norm <= opts.grad_tol {
            break;
        }
        if iters >= opts.max_iters {
            return Err(ReducedError::NonConvergence { iters, grad_norm });
        }
        let step = hess
            .lu()
            .solve(&grad)
            .ok_or(ReducedError::DegenerateCriticalPoint { det: hess.determinant(), threshold: degeneracy_threshold(&hess) })?;
        // damp steps that would leave the safety region
        let mut next = xi - step;
        let rho = domain.safety_margin();
        let mut damp = 1.0;
        while domain.dist_boundary(&next) < rho && damp > 1e-6 {
            damp *= 0.5;
            next = xi - damp * step;
        }
        if domain.dist_boundary(&next) < rho {
            return Err(ReducedError::OutsideSafeRegion);
        }
        xi = next;
        iters += 1;
    }
    let (f, _, hess) = eval_f(domain, potential, &xi)?;
    let v = potential.value(&xi);
    if v <= 0.0 {
        return Err(ReducedError::NonPositivePotential(v));
    }
    let det = hess.determinant();
    let threshold = degeneracy_threshold(&hess);
    if det.abs() < threshold {
        return Err(ReducedError::DegenerateCriticalPoint { det, threshold });
    }
    let tau = domain.tau(&xi);
    let t0 = C_REDUCED * tau / v;
    let mut sol = ReducedSolution {
        xi0: [xi[0], xi[1], xi[2], xi[3]],
        t0,
        f_value: f,
        hess_f_det: det,
        degree_sign: 0,
        newton_iters: iters,
        residual_norm: grad_norm,
    };
    sol.degree_sign = degree_sign(domain, potential, &sol)?;
    Ok(sol)
}

/// Jacobian of F(t,ξ) = (cτ(ξ) − tV(ξ), c∇τ(ξ) − t∇V(ξ)) at (t₀, ξ₀):
///
/// rows: [ −V,  (c∇τ − t∇V)ᵀ ; −∇V,  cD²τ − tD²V ].
pub fn reduced_jacobian(
    domain: &DomainModel,
    potential: &Potential,
    t: f64,
    xi: &Point4,
) -> Result<Matrix5<f64>, ReducedError> {
    let v = potential.value(xi);
    let gv = potential.gradient(xi);
    let hv = potential.hessian(xi);
    let (gt, ht) = domain.grad_hess_tau(xi)?;
    let top_right = C_REDUCED * gt - t * gv;
    let block = C_REDUCED * ht - t * hv;
    let mut j = Matrix5::zeros();
    j[(0, 0)] = -v;
    for i in 0..4 {
        j[(0, i + 1)] = top_right[i];
        j[(i + 1, 0)] = -gv[i];
        for k in 0..4 {
            j[(i + 1, k + 1)] = block[(i, k)];
        }
    }
    Ok(j)
}

/// Local-degree sign at the converged solution, computed from the 5×5
/// Jacobian determinant and cross-checked against sign(−det D²f(ξ₀));
/// the two routes agree up to positive factors whenever V(ξ₀) > 0.
pub fn degree_sign(
    domain: &DomainModel,
    potential: &Potential,
    sol: &ReducedSolution,
) -> Result<i8, ReducedError> {
    let xi = sol.xi();
    let j = reduced_jacobian(domain, potential, sol.t0, &xi)?;
    let det = j.determinant();
    let scale = j.norm().powi(5);
    if det.abs() < 1e-12 * scale.max(1e-300) {
        return Err(ReducedError::IllConditionedJacobian(det));
    }
    let s5 = if det > 0.0 { 1i8 } else { -1i8 };
    let (_, _, hess) = eval_f(domain, potential, &xi)?;
    let hdet = hess.determinant();
    let shess = if -hdet > 0.0 { 1i8 } else { -1i8 };
    debug_assert_eq!(
        s5, shess,
        "degree-sign routes disagree: det F' = {det}, det D²f = {hdet}"
    );
    Ok(s5)
}

/// Both determinant routes, for explicit cross-checking.
pub fn degree_sign_routes(
    domain: &DomainModel,
    potential: &Potential,
    sol: &ReducedSolution,
) -> Result<(i8, i8), ReducedError> {
    let xi = sol.xi();
    let j = reduced_jacobian(domain, potential, sol.t0, &xi)?;
    let det = j.determinant();
    let (_, _, hess) = eval_f(domain, potential, &xi)?;
    let hdet = hess.determinant();
    Ok((det.signum() as i8, (-hdet).signum() as i8))
}

/// Predicted concentration rate δ(ε) = e^{−t₀/ε}.
pub fn delta_of_eps(sol: &ReducedSolution, eps: f64) -> f64 {
    assert!(eps > 0.0, "eps must be positive");
    (-sol.t0 / eps).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::OMEGA;
    use crate::domain::GaussianBump;
    use approx::assert_relative_eq;

    fn v4(a: f64, b: f64, c: f64, d: f64) -> Point4 {
        Vector4::new(a, b, c, d)
    }

    #[test]
    fn f_on_unit_ball_constant_potential() {
        let ball = DomainModel::unit_ball();
        let v = Potential::constant(1.0);
        let pi = std::f64::consts::PI;
        let (f, g, _) = eval_f(&ball, &v, &Vector4::zeros()).unwrap();
        assert_relative_eq!(f, 1.0 / (4.0 * pi * pi), max_relative = 1e-14);
        assert!(g.norm() < 1e-14);
        // homogeneity: V → λV scales f and ∇f by 1/λ
        let lam = 3.5;
        let vs = Potential::constant(lam);
        let x = v4(0.2, -0.1, 0.0, 0.3);
        let (f1, g1, _) = eval_f(&ball, &v, &x).unwrap();
        let (f2, g2, _) = eval_f(&ball, &vs, &x).unwrap();
        assert_relative_eq!(f2, f1 / lam, max_relative = 1e-13);
        assert!((g2 - g1 / lam).norm() < 1e-13 * g1.norm());
    }

    #[test]
    fn newton_finds_center_for_constant_potential() {
        let ball = DomainModel::unit_ball();
        let v = Potential::constant(1.0);
        let sol = find_critical_point(&ball, &v, &v4(0.3, 0.0, 0.0, 0.0), &NewtonOptions::default())
            .unwrap();
        assert!(sol.xi().norm() < 1e-8);
        assert_relative_eq!(sol.t0, 2.0, max_relative = 1e-10);
        assert_eq!(sol.degree_sign, -1);
        // leading-order system satisfied
        let tau = ball.tau(&sol.xi());
        assert!((C_REDUCED * tau - sol.t0 * 1.0).abs() <= 1e-12 * (sol.t0).abs());

        // R = 2: t0 = 2/R²
        let big = DomainModel::ball(Vector4::zeros(), 2.0);
        let sol2 =
            find_critical_point(&big, &v, &v4(0.4, 0.1, 0.0, 0.0), &NewtonOptions::default())
                .unwrap();
        assert_relative_eq!(sol2.t0, 0.5, max_relative = 1e-10);

        // V ≡ 2: t0 halves, ξ0 unchanged
        let sol3 = find_critical_point(
            &ball,
            &Potential::constant(2.0),
            &v4(0.3, 0.0, 0.0, 0.0),
            &NewtonOptions::default(),
        )
        .unwrap();
        assert!(sol3.xi().norm() < 1e-8);
        assert_relative_eq!(sol3.t0, 1.0, max_relative = 1e-10);
        let _ = OMEGA;
    }

    #[test]
    fn degree_sign_routes_agree_on_engineered_potentials() {
        let ball = DomainModel::unit_ball();
        // (a) minimum of f: constant V
        // (b) maximum of f: deep Gaussian dip of V at the center
        // (c) saddle: anisotropic quadratic V
        let potentials = vec![
            Potential::constant(1.0),
            Potential::GaussianBumps {
                base: 1.0,
                bumps: vec![GaussianBump {
                    amplitude: -0.5,
                    center: [0.0; 4],
                    width: 0.05_f64.sqrt(),
                }],
            },
            Potential::Quadratic {
                c0: 1.0,
                linear: [0.0; 4],
                quadratic: {
                    let mut q = [[0.0; 4]; 4];
                    q[0][0] = 16.0; // V = 1 + 8x₁²
                    q
                },
            },
        ];
        let expected_signs = [-1i8, -1, 1];
        for (vpot, want) in potentials.iter().zip(expected_signs) {
            let sol = find_critical_point(
                &ball,
                vpot,
                &v4(1e-3, -1e-3, 5e-4, 0.0),
                &NewtonOptions::default(),
            )
            .unwrap();
            assert!(sol.xi().norm() < 1e-8);
            let (s5, sh) = degree_sign_routes(&ball, vpot, &sol).unwrap();
            assert_eq!(s5, sh, "routes disagree for {vpot:?}");
            assert_eq!(sol.degree_sign, want, "unexpected sign for {vpot:?}");
        }
    }

    #[test]
    fn degenerate_potential_rejected() {
        // V = 1 + 2x₁² makes D²f(0) singular in the x₁ direction
        let ball = DomainModel::unit_ball();
        let v = Potential::Quadratic {
            c0: 1.0,
            linear: [0.0; 4],
            quadratic: {
                let mut q = [[0.0; 4]; 4];
                q[0][0] = 4.0;
                q
            },
        };
        let res = find_critical_point(
            &ball,
            &v,
            &v4(1e-6, 0.0, 0.0, 0.0),
            &NewtonOptions { max_iters: 200, grad_tol: 1e-12 },
        );
        assert!(
            matches!(res, Err(ReducedError::DegenerateCriticalPoint { .. })),
            "got {res:?}"
        );
    }

    #[test]
    fn delta_law() {
        let sol = ReducedSolution {
            xi0: [0.0; 4],
            t0: 2.0,
            f_value: 0.0,
            hess_f_det: 1.0,
            degree_sign: -1,
            newton_iters: 0,
            residual_norm: 0.0,
        };
        assert_relative_eq!(delta_of_eps(&sol, 0.5), (-4.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(delta_of_eps(&sol, 0.2), (-10.0f64).exp(), max_relative = 1e-14);
        assert!(delta_of_eps(&sol, 0.1) < delta_of_eps(&sol, 0.2));
    }

    #[test]
    fn rotation_equivariance_of_critical_point() {
        // non-radial Gaussian bump off center; rotating V rotates ξ0
        let ball = DomainModel::unit_ball();
        let mk = |c: [f64; 4]| Potential::GaussianBumps {
            base: 1.0,
            bumps: vec![GaussianBump { amplitude: 0.4, center: c, width: 0.6 }],
        };
        let v1 = mk([0.2, 0.0, 0.0, 0.0]);
        let v2 = mk([0.0, 0.2, 0.0, 0.0]); // rotated by 90° in the (1,2) plane
        let o = NewtonOptions::default();
        let s1 = find_critical_point(&ball, &v1, &v4(0.1, 0.0, 0.0, 0.0), &o).unwrap();
        let s2 = find_critical_point(&ball, &v2, &v4(0.0, 0.1, 0.0, 0.0), &o).unwrap();
        let x1 = s1.xi();
        let x2 = s2.xi();
        assert_relative_eq!(x1[0], x2[1], epsilon = 1e-9);
        assert!(x1[1].abs() < 1e-9 && x2[0].abs() < 1e-9);
        assert_relative_eq!(s1.t0, s2.t0, max_relative = 1e-9);
    }
}
