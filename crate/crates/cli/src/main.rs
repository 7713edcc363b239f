//! `bnlab`: command-line harness over the Brezis–Nirenberg blow-up
//! laboratory. One experiment per invocation, driven by a TOML config;
//! every output file starts with a provenance header (config hash, seed,
//! version) and identical config + seed reproduces byte-identical files.

mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::Vector4;

use bnlab::constants::{C_REDUCED, FRAK_BIG_C, FRAK_C, OMEGA};
use bnlab::fit::linear_fit;
use bnlab::radialode::{auto_bracket, shoot, RadialProblem, ShootOptions, SweepRow};
use bnlab::reduced::{degree_sign_routes, find_critical_point, NewtonOptions};
use bnlab::verify;
use bnlab::{BubbleParams, DomainModel};

use config::ExperimentConfig;
use emit::{Emitter, Provenance};

/// Exit codes: 2 = config parse error, 3 = solver failure, 4 = check violation.
const EXIT_PARSE: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "bnlab", version, about = "Numerical laboratory for 4D Brezis–Nirenberg blow-up")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Experiment config (TOML). Defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Enforce tolerances; violations exit with code 4.
    #[arg(long, global = true)]
    check: bool,
    /// Override the config RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the structural constants and their quadrature cross-checks.
    Constants,
    /// Tabulate the Robin function tau, its gradient and Hessian.
    Robin,
    /// Solve the reduced critical-point system for (xi0, t0).
    Reduce,
    /// Run the expansion verification suite; emits ExpansionReport CSV.
    Verify,
    /// Single radial shooting solve; emits solution JSON and profile CSV.
    Shoot,
    /// Radial sweep over the eps grid; emits the concentration-law CSV.
    Sweep,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config::load(cli.config.as_deref(), cli.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", emit::error_record("config", &e.to_string()));
            return ExitCode::from(EXIT_PARSE);
        }
    };
    if let Some(n) = cli.threads {
        // ignore failure if a pool already exists (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let prov = Provenance::new(&cfg);
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let emitter = Emitter { dir: out_dir, prov };
    let result = match cli.cmd {
        Cmd::Constants => cmd_constants(&cfg, &emitter, cli.check),
        Cmd::Robin => cmd_robin(&cfg, &emitter),
        Cmd::Reduce => cmd_reduce(&cfg, &emitter),
        Cmd::Verify => cmd_verify(&cfg, &emitter, cli.check),
        Cmd::Shoot => cmd_shoot(&cfg, &emitter),
        Cmd::Sweep => cmd_sweep(&cfg, &emitter, cli.check),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", emit::error_record("solver", &e.to_string()));
            ExitCode::from(EXIT_SOLVER)
        }
    }
}

fn cmd_constants(
    cfg: &ExperimentConfig,
    emitter: &Emitter,
    check: bool,
) -> anyhow::Result<ExitCode> {
    let tol = cfg.tolerances.quad_tol;
    let omega12 = verify::integral_omega_over_12(tol.max(1e-12))?;
    let closed = std::f64::consts::PI.powi(2) / 6.0;
    let dom = verify::dominance_constants(1e-10)?;
    let dom2 = verify::dominance_constants(1e-11)?;
    let offdiag_max = dom.offdiag.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let report = serde_json::json!({
        "schema": "bnlab/constants/v1",
        "frak_c": FRAK_C,
        "omega": OMEGA,
        "frak_big_c": FRAK_BIG_C,
        "c_reduced": C_REDUCED,
        "omega12_closed_form": closed,
        "omega12_quadrature": omega12,
        "a": dom.a,
        "b": dom.b,
        "offdiag_max_abs": offdiag_max,
    });
    println!("frak_c     = {FRAK_C}");
    println!("omega      = {OMEGA}");
    println!("frak_big_c = {FRAK_BIG_C}");
    println!("c_reduced  = {C_REDUCED}");
    println!("omega/12   = {omega12} (closed form {closed})");
    println!("a = {}, b = {}, max |offdiag| = {}", dom.a, dom.b, offdiag_max);
    emitter.write_json("constants.json", &report)?;
    if check {
        let stable = (dom.a - dom2.a).abs().max((dom.b - dom2.b).abs());
        let ok = (omega12 - closed).abs() < 1e-8
            && offdiag_max < 1e-10
            && stable < 1e-8
            && (C_REDUCED - 8.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12;
        if !ok {
            eprintln!("{}", emit::error_record("check", "constants outside tolerance"));
            return Ok(ExitCode::from(EXIT_CHECK));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_robin(cfg: &ExperimentConfig, emitter: &Emitter) -> anyhow::Result<ExitCode> {
    let domain = cfg.domain_model();
    let radius = cfg.domain.radius;
    let center = Vector4::from(cfg.domain.center);
    let mut rows = Vec::new();
    let header = "x1,x2,x3,x4,tau,g1,g2,g3,g4,h11,h12,h13,h14,h22,h23,h24,h33,h34,h44";
    // stay outside the near-boundary safety margin of the Hessian
    for k in 0..=7 {
        let x = center + Vector4::new(0.1 * k as f64 * radius, 0.0, 0.0, 0.0);
        let tau = domain.tau(&x);
        let (g, h) = domain.grad_hess_tau(&x)?;
        let mut cols: Vec<String> = (0..4).map(|i| emit::num(x[i])).collect();
        cols.push(emit::num(tau));
        cols.extend((0..4).map(|i| emit::num(g[i])));
        for i in 0..4 {
            for j in i..4 {
                cols.push(emit::num(h[(i, j)]));
            }
        }
        rows.push(cols.join(","));
    }
    emitter.write_csv("robin.csv", header, &rows)?;
    println!("robin table: {} rows -> robin.csv", rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_reduce(cfg: &ExperimentConfig, emitter: &Emitter) -> anyhow::Result<ExitCode> {
    let domain = cfg.domain_model();
    let potential = cfg.potential.clone();
    let guess = Vector4::from(cfg.reduce.guess);
    let sol = find_critical_point(&domain, &potential, &guess, &NewtonOptions::default())?;
    let (s5, shess) = degree_sign_routes(&domain, &potential, &sol)?;
    let report = serde_json::json!({
        "schema": "bnlab/reduce/v1",
        "solution": sol,
        "degree_sign_det5": s5,
        "degree_sign_hess": shess,
    });
    println!(
        "xi0 = [{}, {}, {}, {}], t0 = {}, degree sign = {}",
        sol.xi0[0], sol.xi0[1], sol.xi0[2], sol.xi0[3], sol.t0, sol.degree_sign
    );
    emitter.write_json("reduce.json", &report)?;
    Ok(ExitCode::SUCCESS)
}

struct Row {
    check_name: &'static str,
    delta: f64,
    eps: f64,
    numeric: f64,
    predicted: f64,
    ratio: f64,
    slope: Option<f64>,
    pass: bool,
}

impl Row {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.check_name,
            emit::num(self.delta),
            emit::num(self.eps),
            emit::num(self.numeric),
            emit::num(self.predicted),
            emit::num(self.ratio),
            self.slope.map(emit::num).unwrap_or_default()
        )
    }
}

fn cmd_verify(cfg: &ExperimentConfig, emitter: &Emitter, check: bool) -> anyhow::Result<ExitCode> {
    let domain = cfg.domain_model();
    let potential = cfg.potential.clone();
    let spec = cfg.quadrature;
    let xi = Vector4::from(cfg.bubble.xi);
    let closed = std::f64::consts::PI.powi(2) / 6.0;
    let mut rows: Vec<Row> = Vec::new();

    let omega12 = verify::integral_omega_over_12(spec.tol.max(1e-12))?;
    rows.push(Row {
        check_name: "omega12",
        delta: f64::NAN,
        eps: f64::NAN,
        numeric: omega12,
        predicted: closed,
        ratio: omega12 / closed,
        slope: None,
        pass: (omega12 - closed).abs() < 1e-8,
    });

    // PU expansion order: ||exact - first order|| ~ delta^3
    let radius = cfg.domain.radius;
    let probe = Vector4::from(cfg.domain.center) + Vector4::new(0.5 * radius, 0.0, 0.0, 0.0);
    let mut defs = Vec::new();
    for &d in &cfg.bubble.deltas {
        let p = BubbleParams::centered(d)?;
        let shifted = probe - Vector4::from(cfg.domain.center);
        let exact = bnlab::bubbles::exact_pu_ball(&p, radius, &shifted)?;
        let ball = DomainModel::ball(Vector4::zeros(), radius);
        let first = bnlab::bubbles::eval_pu_expansion(&p, &shifted, &ball)?;
        defs.push((exact - first).abs());
    }
    let proj_slope = bnlab::fit::loglog_slope(&cfg.bubble.deltas, &defs);
    rows.push(Row {
        check_name: "projection_order",
        delta: *cfg.bubble.deltas.last().unwrap(),
        eps: f64::NAN,
        numeric: proj_slope,
        predicted: 3.0,
        ratio: proj_slope / 3.0,
        slope: Some(proj_slope),
        pass: (proj_slope - 3.0).abs() < 0.2,
    });

    // residual norm delta-slope at eps = 0
    let (err_slope, _) =
        verify::error_norm_delta_slope(&domain, &potential, &xi, &cfg.bubble.deltas, 0.0, &spec)?;
    rows.push(Row {
        check_name: "error_norm_order",
        delta: *cfg.bubble.deltas.last().unwrap(),
        eps: 0.0,
        numeric: err_slope,
        predicted: 2.0,
        ratio: err_slope / 2.0,
        slope: Some(err_slope),
        pass: (err_slope - 2.0).abs() < 0.15,
    });

    // reduced expansion ratio at each delta, eps = 0
    let mut last_ratio = f64::NAN;
    for &d in &cfg.bubble.deltas {
        let p = BubbleParams::new(d, xi)?;
        let rep = verify::reduced_expansion_check(&domain, &potential, &p, 0.0, &spec)?;
        last_ratio = rep.ratio;
        rows.push(Row {
            check_name: "reduced_expansion",
            delta: d,
            eps: 0.0,
            numeric: rep.numeric_value,
            predicted: rep.predicted_value,
            ratio: rep.ratio,
            slope: None,
            pass: true,
        });
    }
    let finest_ok = (last_ratio - 1.0).abs() < 0.1;
    if let Some(r) = rows.last_mut() {
        r.pass = finest_ok;
    }

    // Pohozaev route agreement at the finest delta, off-center shell
    let d = *cfg.bubble.deltas.last().unwrap();
    let xi_off = Vector4::from(cfg.domain.center)
        + Vector4::new(0.3 * cfg.domain.radius, 0.0, 0.0, 0.0);
    let p = BubbleParams::new(d, xi_off)?;
    let poh = verify::pohozaev_check(&domain, &potential, &p, 0.0, 0.2 * cfg.domain.radius, &spec)?;
    let route_ratio = poh.interior[0] / poh.boundary[0];
    rows.push(Row {
        check_name: "pohozaev_routes",
        delta: d,
        eps: 0.0,
        numeric: poh.interior[0],
        predicted: poh.boundary[0],
        ratio: route_ratio,
        slope: None,
        pass: (route_ratio - 1.0).abs() < 0.01,
    });
    let pred_ratio = poh.boundary[0] / poh.predicted[0];
    rows.push(Row {
        check_name: "pohozaev_prediction",
        delta: d,
        eps: 0.0,
        numeric: poh.boundary[0],
        predicted: poh.predicted[0],
        ratio: pred_ratio,
        slope: None,
        pass: (pred_ratio - 1.0).abs() < 0.1,
    });

    let header = "check_name,delta,eps,numeric,predicted,ratio,slope";
    let csv_rows: Vec<String> = rows.iter().map(Row::csv).collect();
    emitter.write_csv("verify.csv", header, &csv_rows)?;
    let passed = rows.iter().all(|r| r.pass);
    let summary = serde_json::json!({
        "schema": "bnlab/verify/v1",
        "passed": passed,
        "checks": rows.iter().map(|r| serde_json::json!({
            "check_name": r.check_name,
            "ratio": r.ratio,
            "slope": r.slope,
            "pass": r.pass,
        })).collect::<Vec<_>>(),
    });
    emitter.write_json("verify.json", &summary)?;
    for r in &rows {
        println!(
            "{:>20}: ratio = {:.6}  [{}]",
            r.check_name,
            r.ratio,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    if check && !passed {
        eprintln!("{}", emit::error_record("check", "verification suite outside tolerance"));
        return Ok(ExitCode::from(EXIT_CHECK));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_shoot(cfg: &ExperimentConfig, emitter: &Emitter) -> anyhow::Result<ExitCode> {
    let prob = RadialProblem {
        radius: cfg.shoot.radius,
        eps: cfg.shoot.eps,
        potential: cfg.shoot.potential,
    };
    let opts = ShootOptions { record_profile: cfg.shoot.profile, ..Default::default() };
    let bracket = auto_bracket(&prob, 1.0, 1e12, &opts)?;
    let sol = shoot(&prob, bracket, &opts)?;
    println!(
        "eps = {}: u(0) = {}, delta_num = {}, residual = {}",
        sol.eps, sol.u0, sol.delta_num, sol.shoot_residual
    );
    let report = serde_json::json!({
        "schema": "bnlab/shoot/v1",
        "eps": sol.eps,
        "u0": sol.u0,
        "delta_num": sol.delta_num,
        "shoot_residual": sol.shoot_residual,
        "uprime_boundary": sol.uprime_boundary,
        "energy_grad": sol.energy_grad,
        "energy_rhs": sol.energy_rhs,
        "pohozaev_lhs": sol.pohozaev_lhs,
        "pohozaev_rhs": sol.pohozaev_rhs,
    });
    emitter.write_json("shoot.json", &report)?;
    if cfg.shoot.profile {
        let rows: Vec<String> = sol
            .profile
            .iter()
            .map(|(r, u)| format!("{},{}", emit::num(*r), emit::num(*u)))
            .collect();
        emitter.write_csv("profile.csv", "r,u", &rows)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(cfg: &ExperimentConfig, emitter: &Emitter, check: bool) -> anyhow::Result<ExitCode> {
    use rayon::prelude::*;
    let radius = cfg.shoot.radius;
    let potential = cfg.shoot.potential;
    // prediction t0 = c * tau(0) / V(0) on the centered ball
    let ball = DomainModel::ball(Vector4::zeros(), radius);
    let t0_pred = C_REDUCED * ball.tau(&Vector4::zeros()) / potential.value(0.0);
    let opts = ShootOptions { record_profile: false, ..Default::default() };
    let rows: Vec<SweepRow> = cfg
        .eps_grid
        .par_iter()
        .map(|&eps| {
            let prob = RadialProblem { radius, eps, potential };
            auto_bracket(&prob, 1.0, 1e12, &opts)
                .and_then(|br| shoot(&prob, br, &opts))
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
                })
        })
        .collect();
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let slope = if ok.len() >= 2 {
        let xs: Vec<f64> = ok.iter().map(|r| 1.0 / r.eps).collect();
        let ys: Vec<f64> = ok.iter().map(|r| (1.0 / r.delta_num).ln()).collect();
        linear_fit(&xs, &ys).0
    } else {
        f64::NAN
    };
    let header = "eps,u0,delta_num,eps_ln_inv_delta,t0_pred,status";
    let csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                emit::num(r.eps),
                emit::num(r.u0),
                emit::num(r.delta_num),
                emit::num(r.eps_ln_inv_delta),
                emit::num(r.t0_pred),
                r.status
            )
        })
        .collect();
    emitter.write_csv("sweep.csv", header, &csv_rows)?;
    let summary = serde_json::json!({
        "schema": "bnlab/sweep/v1",
        "slope": slope,
        "t0_pred": t0_pred,
        "n_ok": ok.len(),
        "n_total": rows.len(),
    });
    emitter.write_json("sweep.json", &summary)?;
    println!("sweep: fitted slope = {slope} (predicted t0 = {t0_pred})");
    if check {
        let ok_slope = (slope - t0_pred).abs() < 0.2 * t0_pred;
        if !ok_slope || ok.len() < rows.len() {
            eprintln!("{}", emit::error_record("check", "sweep slope outside tolerance"));
            return Ok(ExitCode::from(EXIT_CHECK));
        }
    }
    Ok(ExitCode::SUCCESS)
}
