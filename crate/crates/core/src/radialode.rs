//! Ground-truth radial solver on the ball: positive solutions of
//! −u″ − (3/r)u′ = u³ + εV(r)u, u′(0) = 0, u(R) = 0 by shooting on the
//! center value M = u(0).
//!
//! The ODE is integrated in the peak-rescaled variable s = M·r with
//! v(s) = u(s/M)/M, which turns the boundary-layer problem into a
//! uniformly mild one: v(0) = 1, v decays like 8/s², and the boundary
//! condition becomes v(M·R) = 0. Step counts stay bounded as ε shrinks.
//! Energy and Pohozaev accumulators ride along as extra ODE components,
//! so the cross-identities are exact to integrator tolerance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::FRAK_C;
use crate::fit::linear_fit;

#[derive(Debug, Error)]
pub enum ShootError {
    #[error("bracket [{0}, {1}] does not straddle the boundary condition (same sign)")]
    InvalidBracket(f64, f64),
    #[error("no sign change found while scanning M in [{0}, {1}]; solution may not exist at this eps")]
    NoBracket(f64, f64),
    #[error("accepted solution loses positivity before the boundary (first crossing at r = {0})")]
    LostPositivity(f64),
    #[error("step size underflow at s = {0}")]
    StepUnderflow(f64),
    #[error("shoot target too short: M·R = {0} is below the series start")]
    TargetTooShort(f64),
}

/// Radial potential V(r) on [0, R].
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RadialPotential {
    Constant { value: f64 },
    /// base + amplitude·exp(−r²/width²)
    Bump { base: f64, amplitude: f64, width: f64 },
}

impl RadialPotential {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            RadialPotential::Constant { value } => *value,
            RadialPotential::Bump { base, amplitude, width } => {
                base + amplitude * (-r * r / (width * width)).exp()
            }
        }
    }

    pub fn dvalue(&self, r: f64) -> f64 {
        match self {
            RadialPotential::Constant { .. } => 0.0,
            RadialPotential::Bump { amplitude, width, .. } => {
                let w2 = width * width;
                amplitude * (-r * r / w2).exp() * (-2.0 * r / w2)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadialProblem {
    pub radius: f64,
    pub eps: f64,
    pub potential: RadialPotential,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_bisections: usize,
    pub record_profile: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions { rtol: 5e-13, atol: 1e-24, max_bisections: 90, record_profile: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialSolveResult {
    pub eps: f64,
    /// Center value u(0).
    pub u0: f64,
    /// Measured concentration rate δ_num = 𝔠/u(0).
    pub delta_num: f64,
    /// |u(R)| at the accepted shot.
    pub shoot_residual: f64,
    /// Sampled (r, u(r)).
    pub profile: Vec<(f64, f64)>,
    /// u′(R) at the accepted shot.
    pub uprime_boundary: f64,
    /// ∫₀^R (u′)² r³ dr.
    pub energy_grad: f64,
    /// ∫₀^R (u⁴ + εV u²) r³ dr.
    pub energy_rhs: f64,
    /// ε∫₀^R (V + rV′/2) u² r³ dr (Pohozaev left side).
    pub pohozaev_lhs: f64,
    /// R⁴ u′(R)²/2 (Pohozaev right side).
    pub pohozaev_rhs: f64,
}

/// State: [q, q′, ∫v′²s³, ∫v⁴s³, ∫ε̃v²s³, ∫s⁴v²V′(s/M)/M²], where
/// q(s) = v(s) − v_B(s) is the deviation from the exact bubble profile
/// v_B(s) = 1/(1+s²/8). Integrating the deviation instead of v itself is
/// essential: v is O(1) near the peak, and roundoff made there persists
/// in the non-decaying constant mode of v″+3v′/s = 0, burying the
/// ~1e−14 boundary values of near-critical shots. q stays uniformly tiny,
/// so the boundary value v_B(M·R) + q(M·R) is resolved far below that.
type State = [f64; 6];

/// Exact bubble profile v_B(s) = 1/(1+s²/8) and its derivative; solves
/// v″ + 3v′/s + v³ = 0 with v(0) = 1.
fn bubble_profile(s: f64) -> (f64, f64) {
    let vb = 1.0 / (1.0 + 0.125 * s * s);
    (vb, -0.25 * s * vb * vb)
}

struct Rescaled<'a> {
    prob: &'a RadialProblem,
    m: f64,
}

impl<'a> Rescaled<'a> {
    fn rhs(&self, s: f64, y: &State) -> State {
        let q = y[0];
        let qp = y[1];
        let (vb, vbp) = bubble_profile(s);
        let v = vb + q;
        let vp = vbp + qp;
        let r = s / self.m;
        let eff = self.prob.eps * self.prob.potential.value(r) / (self.m * self.m);
        let s3 = s * s * s;
        // v³ − v_B³ written as q·(v² + v·v_B + v_B²) to avoid cancellation
        let cubic = q * (v * v + v * vb + vb * vb);
        [
            qp,
            -3.0 * qp / s - cubic - eff * v,
            vp * vp * s3,
            v * v * v * v * s3,
            eff * v * v * s3,
            s3 * s * v * v * self.prob.potential.dvalue(r) / (self.m * self.m),
        ]
    }

    /// Series start leaving the r = 0 singularity. With
    /// v = 1 − (1+ε̃)s²/8 + (1+ε̃)(3+ε̃)s⁴/192 and
    /// v_B = 1 − s²/8 + s⁴/64, the deviation starts as
    /// q(s) = −ε̃s²/8 + ε̃(4+ε̃)s⁴/192.
    fn initial(&self, s0: f64) -> State {
        let eff0 = self.prob.eps * self.prob.potential.value(0.0) / (self.m * self.m);
        let a = eff0 / 8.0;
        let b = eff0 * (4.0 + eff0) / 192.0;
        let s2 = s0 * s0;
        [
            -a * s2 + b * s2 * s2,
            -2.0 * a * s0 + 4.0 * b * s0 * s2,
            0.0,
            0.0,
            0.0,
            0.0,
        ]
    }
}

/// Dormand–Prince 5(4) embedded step.
fn dp45<F: Fn(f64, &State) -> State>(f: &F, s: f64, y: &State, h: f64) -> (State, State) {
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let axpy = |y: &State, terms: &[(f64, &State)]| {
        let mut out = *y;
        for (c, k) in terms {
            for i in 0..6 {
                out[i] += h * c * k[i];
            }
        }
        out
    };
    let k1 = f(s, y);
    let k2 = f(s + 0.2 * h, &axpy(y, &[(A21, &k1)]));
    let k3 = f(s + 0.3 * h, &axpy(y, &[(A31, &k1), (A32, &k2)]));
    let k4 = f(s + 0.8 * h, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
    let k5 = f(
        s + 8.0 / 9.0 * h,
        &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    );
    let k6 = f(
        s + h,
        &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let y5 = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = f(s + h, &y5);
    let mut err = [0.0; 6];
    for i in 0..6 {
        err[i] = h
            * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    (y5, err)
}

struct Integration {
    v_end: f64,
    vp_end: f64,
    accumulators: [f64; 4],
    /// (s, v) at accepted steps, if recording.
    samples: Vec<(f64, f64)>,
    first_crossing: Option<f64>,
}

fn integrate(
    sys: &Rescaled<'_>,
    s_end: f64,
    opts: &ShootOptions,
    record: bool,
) -> Result<Integration, ShootError> {
    let s0 = (1e-3_f64).min(1e-2 * s_end);
    if s_end <= 2.0 * s0 {
        return Err(ShootError::TargetTooShort(s_end));
    }
    let mut s = s0;
    let mut y = sys.initial(s0);
    let f = |s: f64, y: &State| sys.rhs(s, y);
    let mut h = 1e-4_f64.min(0.1 * (s_end - s0));
    let mut samples = Vec::new();
    let mut first_crossing = None;
    let full_v = |s: f64, y: &State| bubble_profile(s).0 + y[0];
    if record {
        samples.push((s, full_v(s, &y)));
    }
    let mut prev_positive = full_v(s, &y) > 0.0;
    while s < s_end {
        if h < 1e-14 * s.max(1.0) {
            return Err(ShootError::StepUnderflow(s));
        }
        let h_try = h.min(s_end - s);
        let (y_new, err) = dp45(&f, s, &y, h_try);
        let mut ratio: f64 = 0.0;
        for i in 0..6 {
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            ratio = ratio.max((err[i] / scale).abs());
        }
        if ratio <= 1.0 {
            // accepted
            let s_new = s + h_try;
            let v_old = full_v(s, &y);
            let v_new = full_v(s_new, &y_new);
            if prev_positive && v_new <= 0.0 && first_crossing.is_none() {
                // linear estimate of the crossing location
                let frac = v_old / (v_old - v_new);
                first_crossing = Some(s + frac * h_try);
                prev_positive = false;
            }
            s = s_new;
            y = y_new;
            if record {
                samples.push((s, v_new));
            }
        }
        let grow = 0.9 * ratio.max(1e-10).powf(-0.2);
        h = h_try * grow.clamp(0.2, 5.0);
    }
    let (vb_end, vbp_end) = bubble_profile(s_end);
    Ok(Integration {
        v_end: vb_end + y[0],
        vp_end: vbp_end + y[1],
        accumulators: [y[2], y[3], y[4], y[5]],
        samples,
        first_crossing,
    })
}

fn boundary_value(prob: &RadialProblem, m: f64, opts: &ShootOptions) -> Result<f64, ShootError> {
    let sys = Rescaled { prob, m };
    let run = integrate(&sys, m * prob.radius, opts, false)?;
    Ok(run.v_end)
}

/// Shooting with a user-supplied bracket on M = u(0).
pub fn shoot(
    prob: &RadialProblem,
    m_bracket: (f64, f64),
    opts: &ShootOptions,
) -> Result<RadialSolveResult, ShootError> {
    let (mut lo, mut hi) = m_bracket;
    assert!(lo > 0.0 && hi > lo);
    let f_lo = boundary_value(prob, lo, opts)?;
    let f_hi = boundary_value(prob, hi, opts)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(ShootError::InvalidBracket(lo, hi));
    }
    let sign_lo = f_lo.signum();
    for _ in 0..opts.max_bisections {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) / mid < 1e-15 {
            break;
        }
        let fm = boundary_value(prob, mid, opts)?;
        if fm.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let m = 0.5 * (lo + hi);
    let sys = Rescaled { prob, m };
    let run = integrate(&sys, m * prob.radius, opts, opts.record_profile)?;
    if let Some(s_cross) = run.first_crossing {
        // crossing inside the interval (not at the endpoint) means the
        // accepted shot is sign-changing
        if s_cross < 0.999 * m * prob.radius {
            return Err(ShootError::LostPositivity(s_cross / m));
        }
    }
    let profile: Vec<(f64, f64)> = thin(&run.samples, 4000)
        .iter()
        .map(|(s, v)| (s / m, m * v))
        .collect();
    let [a_grad, a_u4, a_veps, a_dv] = run.accumulators;
    let uprime = m * m * run.vp_end;
    let r4 = prob.radius.powi(4);
    Ok(RadialSolveResult {
        eps: prob.eps,
        u0: m,
        delta_num: FRAK_C / m,
        shoot_residual: (m * run.v_end).abs(),
        profile,
        uprime_boundary: uprime,
        energy_grad: a_grad,
        energy_rhs: a_u4 + a_veps,
        pohozaev_lhs: a_veps + 0.5 * prob.eps * a_dv,
        pohozaev_rhs: 0.5 * r4 * uprime * uprime,
    })
}

fn thin(samples: &[(f64, f64)], max_len: usize) -> Vec<(f64, f64)> {
    if samples.len() <= max_len {
        return samples.to_vec();
    }
    let stride = samples.len().div_ceil(max_len);
    let mut out: Vec<(f64, f64)> = samples.iter().step_by(stride).copied().collect();
    if out.last() != samples.last() {
        out.push(*samples.last().unwrap());
    }
    out
}

/// Scan M geometrically for a sign change of the boundary value.
pub fn auto_bracket(
    prob: &RadialProblem,
    m_min: f64,
    m_max: f64,
    opts: &ShootOptions,
) -> Result<(f64, f64), ShootError> {
    let mut m = m_min;
    let mut prev: Option<(f64, f64)> = None;
    while m <= m_max {
        let v = boundary_value(prob, m, opts)?;
        if let Some((pm, pv)) = prev {
            if pv.signum() != v.signum() {
                return Ok((pm, m));
            }
        }
        prev = Some((m, v));
        m *= 1.090507733;
    }
    Err(ShootError::NoBracket(m_min, m_max))
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub u0: f64,
    pub delta_num: f64,
    pub eps_ln_inv_delta: f64,
    pub t0_pred: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of ln(1/δ_num) against 1/ε.
    pub slope: f64,
    pub intercept: f64,
}

/// Solve the problem for each ε in the grid and fit the concentration law.
pub fn sweep(
    radius: f64,
    potential: RadialPotential,
    eps_grid: &[f64],
    t0_pred: f64,
    opts: &ShootOptions,
) -> SweepTable {
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let prob = RadialProblem { radius, eps, potential };
        let row = auto_bracket(&prob, 1.0, 1e12, opts)
            .and_then(|br| shoot(&prob, br, opts))
            .map(|sol| SweepRow {
                eps,
                u0: sol.u0,
                delta_num: sol.delta_num,
                eps_ln_inv_delta: eps * (1.0 / sol.delta_num).ln(),
                t0_pred,
                status: "ok".into(),
            })
            .unwrap_or_else(|e| SweepRow {
                eps,
                u0: f64::NAN,
                delta_num: f64::NAN,
                eps_ln_inv_delta: f64::NAN,
                t0_pred,
                status: format!("failed: {e}"),
            });
        rows.push(row);
    }
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let (slope, intercept) = if ok.len() >= 2 {
        let xs: Vec<f64> = ok.iter().map(|r| 1.0 / r.eps).collect();
        let ys: Vec<f64> = ok.iter().map(|r| (1.0 / r.delta_num).ln()).collect();
        linear_fit(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN)
    };
    SweepTable { rows, slope, intercept }
}
