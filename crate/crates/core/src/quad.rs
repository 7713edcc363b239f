//! Quadrature engine: Gauss–Legendre panels, adaptive 1D integration,
//! tensor designs on S³, peak-split integration over balls in ℝ⁴ and a
//! seeded quasi Monte Carlo fallback for cross-checks.
//!
//! Everything here is deterministic: fixed node sets, fixed summation
//! order, and QMC driven by an explicit seed.

use nalgebra::Vector4;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::OMEGA;

pub type Point4 = Vector4<f64>;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature scheme needs at least 16 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimate {estimate}, error {error})")]
    NonConvergence { a: f64, b: f64, estimate: f64, error: f64 },
    #[error("radial reduction requested for an integrand not certified radial")]
    NotRadial,
}

/// Quadrature scheme selector. `n` counts are validated to be ≥ 16.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Scheme {
    RadialGauss { n_nodes: usize },
    QuasiMonteCarlo { n_points: usize, seed: u64 },
    TensorShell { n_radial: usize, n_sphere: usize },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    /// Relative tolerance for adaptive radial integration.
    pub tol: f64,
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme) -> Result<Self, QuadError> {
        let n = match scheme {
            Scheme::RadialGauss { n_nodes } => n_nodes,
            Scheme::QuasiMonteCarlo { n_points, .. } => n_points,
            Scheme::TensorShell { n_radial, n_sphere } => n_radial.min(n_sphere * n_sphere),
        };
        if n < 16 {
            return Err(QuadError::TooFewNodes(n));
        }
        Ok(QuadratureSpec { scheme, tol: 1e-12 })
    }

    pub fn tensor_default() -> Self {
        QuadratureSpec {
            scheme: Scheme::TensorShell { n_radial: 24, n_sphere: 12 },
            tol: 1e-12,
        }
    }

    pub fn radial_default() -> Self {
        QuadratureSpec { scheme: Scheme::RadialGauss { n_nodes: 32 }, tol: 1e-12 }
    }
}

/// Gauss–Legendre rule on [-1, 1], nodes found by Newton iteration on P_n.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule8() -> &'static GaussRule {
    use std::sync::OnceLock;
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::new(8))
}

fn rule16() -> &'static GaussRule {
    use std::sync::OnceLock;
    static R: OnceLock<GaussRule> = OnceLock::new();
    R.get_or_init(|| GaussRule::new(16))
}

/// Adaptive bisection with an embedded GL8/GL16 error estimate.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, f: &mut F) -> Result<f64, QuadError> {
    fn rec<F: FnMut(f64) -> f64>(
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        f: &mut F,
    ) -> Result<f64, QuadError> {
        let coarse = rule8().integrate(a, b, &mut *f);
        let fine = rule16().integrate(a, b, &mut *f);
        let err = (fine - coarse).abs();
        if err <= tol || b - a < 1e-300 {
            return Ok(fine);
        }
        if depth == 0 {
            return Err(QuadError::NonConvergence { a, b, estimate: fine, error: err });
        }
        let mid = 0.5 * (a + b);
        Ok(rec(a, mid, 0.5 * tol, depth - 1, f)? + rec(mid, b, 0.5 * tol, depth - 1, f)?)
    }
    rec(a, b, tol, 48, f)
}

/// ∫_a^b f with interior breakpoints honoured (peak splitting).
pub fn adaptive_with_breaks<F: FnMut(f64) -> f64>(
    breaks: &[f64],
    tol: f64,
    f: &mut F,
) -> Result<f64, QuadError> {
    let mut acc = 0.0;
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            acc += adaptive(w[0], w[1], tol, f)?;
        }
    }
    Ok(acc)
}

/// ∫_a^∞ f via the substitution r = a/t, t ∈ (0, 1].
pub fn adaptive_tail<F: FnMut(f64) -> f64>(a: f64, tol: f64, f: &mut F) -> Result<f64, QuadError> {
    assert!(a > 0.0);
    adaptive(0.0, 1.0, tol, &mut |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let r = a / t;
        f(r) * a / (t * t)
    })
}

/// Radial integral ω ∫₀^∞ f(r) r³ dr of a function radial about its center,
/// split at the given interior breakpoints.
pub fn radial_whole_space<F: FnMut(f64) -> f64>(
    inner_breaks: &[f64],
    tol: f64,
    f: &mut F,
) -> Result<f64, QuadError> {
    let mut g = |r: f64| f(r) * r * r * r;
    let mut breaks = vec![0.0];
    breaks.extend(inner_breaks.iter().copied().filter(|r| *r > 0.0));
    let last = *breaks.last().unwrap();
    let cut = if last > 0.0 { last } else { 1.0 };
    if !breaks.contains(&cut) {
        breaks.push(cut);
    }
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let head = adaptive_with_breaks(&breaks, tol, &mut g)?;
    let tail = adaptive_tail(cut, tol, &mut g)?;
    Ok(OMEGA * (head + tail))
}

/// Tensor-product quadrature design on the unit sphere S³.
///
/// Coordinates x = (cosθ₁, sinθ₁cosθ₂, sinθ₁sinθ₂cosφ, sinθ₁sinθ₂sinφ)
/// with Gauss nodes in θ₁ (weight sin²θ₁), Gauss nodes in cosθ₂ and a
/// trapezoid rule in the periodic angle φ. Weights sum to ω = 2π².
#[derive(Debug, Clone)]
pub struct SphereDesign {
    pub directions: Vec<Point4>,
    pub weights: Vec<f64>,
}

impl SphereDesign {
    pub fn tensor(n: usize) -> Self {
        let n = n.max(4);
        let n_phi = 2 * n;
        // θ₁ carries the weight sin²θ₁: Gauss–Chebyshev (second kind) is
        // exact for it, θ₂ in cosθ₂ is plain Gauss–Legendre, φ is a
        // trapezoid rule (exact for trigonometric polynomials).
        let g2 = GaussRule::new(n);
        let mut directions = Vec::with_capacity(n * n * n_phi);
        let mut weights = Vec::with_capacity(n * n * n_phi);
        for k1 in 1..=n {
            let theta1 = std::f64::consts::PI * k1 as f64 / (n + 1) as f64;
            let s1 = theta1.sin();
            let c1 = theta1.cos();
            let w1 = std::f64::consts::PI / (n + 1) as f64 * s1 * s1;
            for (c2, w2) in g2.nodes.iter().zip(&g2.weights) {
                // c2 = cosθ₂ directly, weight already dcosθ₂
                let s2 = (1.0 - c2 * c2).sqrt();
                for k in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * k as f64 / n_phi as f64;
                    let dir = Vector4::new(c1, s1 * c2, s1 * s2 * phi.cos(), s1 * s2 * phi.sin());
                    let w = w1 * w2 * (2.0 * std::f64::consts::PI / n_phi as f64);
                    directions.push(dir);
                    weights.push(w);
                }
            }
        }
        SphereDesign { directions, weights }
    }

    /// Surface integral over the sphere of radius `eta` centered at `z`.
    pub fn surface_integral<F: FnMut(Point4, Point4) -> f64>(
        &self,
        z: &Point4,
        eta: f64,
        mut f: F,
    ) -> f64 {
        let mut acc = 0.0;
        for (u, w) in self.directions.iter().zip(&self.weights) {
            acc += w * f(z + eta * u, *u);
        }
        acc * eta * eta * eta
    }
}

/// Distance from `center` to the boundary sphere |x| = R along direction `u`
/// (`center` measured relative to the ball center).
pub fn chord_length(radius: f64, center: &Point4, u: &Point4) -> f64 {
    let cu = center.dot(u);
    let disc = cu * cu + radius * radius - center.norm_squared();
    -cu + disc.max(0.0).sqrt()
}

/// Integral of `f` over the ball {|x| ≤ R} in spherical coordinates about
/// `pivot` (interior point, absolute coordinates relative to ball center),
/// with radial peak splitting at the given radii.
pub struct BallQuadrature {
    pub design: SphereDesign,
    pub radius: f64,
    pub pivot: Point4,
    pub splits: Vec<f64>,
    pub tol: f64,
}

impl BallQuadrature {
    pub fn integrate<F: FnMut(&Point4) -> f64>(&self, mut f: F) -> Result<f64, QuadError> {
        let mut acc = 0.0;
        for (u, w) in self.design.directions.iter().zip(&self.design.weights) {
            let rb = chord_length(self.radius, &self.pivot, u);
            let mut breaks: Vec<f64> = vec![0.0];
            breaks.extend(self.splits.iter().copied().filter(|s| *s > 0.0 && *s < rb));
            breaks.push(rb);
            let mut g = |r: f64| {
                let x = self.pivot + r * u;
                f(&x) * r * r * r
            };
            acc += w * adaptive_with_breaks(&breaks, self.tol, &mut g)?;
        }
        Ok(acc)
    }

    /// Same, restricted to the ball B(pivot, eta) around the pivot
    /// (must be contained in the domain ball).
    pub fn integrate_shell_interior<F: FnMut(&Point4) -> f64>(
        &self,
        eta: f64,
        mut f: F,
    ) -> Result<f64, QuadError> {
        let mut acc = 0.0;
        for (u, w) in self.design.directions.iter().zip(&self.design.weights) {
            let mut breaks: Vec<f64> = vec![0.0];
            breaks.extend(self.splits.iter().copied().filter(|s| *s > 0.0 && *s < eta));
            breaks.push(eta);
            let mut g = |r: f64| {
                let x = self.pivot + r * u;
                f(&x) * r * r * r
            };
            acc += w * adaptive_with_breaks(&breaks, self.tol, &mut g)?;
        }
        Ok(acc)
    }
}

/// Seeded quasi Monte Carlo estimate of ∫ over the ball {|x| ≤ R}
/// (center at origin): stratified midpoint radii in the volume variable
/// u = (r/R)⁴ paired with ChaCha-seeded random directions. Used only as
/// a cross-check against the deterministic rules.
pub fn qmc_ball<F: FnMut(&Point4) -> f64>(
    radius: f64,
    n_points: usize,
    seed: u64,
    mut f: F,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let volume = 0.25 * OMEGA * radius.powi(4);
    let mut acc = 0.0;
    for i in 0..n_points {
        let mut v: Vector4<f64> = Vector4::zeros();
        for k in 0..4 {
            let z: f64 = StandardNormal.sample(&mut rng);
            v[k] = z;
        }
        let dir = v / v.norm();
        let u = (i as f64 + 0.5) / n_points as f64;
        let r = radius * u.powf(0.25);
        acc += f(&(r * dir));
    }
    volume * acc / n_points as f64
}
