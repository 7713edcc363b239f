//! Experiment configuration: a single TOML file, strict keys, defaults
//! recorded in the provenance header by re-serializing the resolved struct.

use std::path::Path;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use bnlab::domain::Potential;
use bnlab::radialode::RadialPotential;
use bnlab::{DomainModel, QuadratureSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub domain: DomainCfg,
    pub potential: Potential,
    pub bubble: BubbleCfg,
    pub eps_grid: Vec<f64>,
    pub quadrature: QuadratureSpec,
    pub reduce: ReduceCfg,
    pub shoot: ShootCfg,
    pub tolerances: TolerancesCfg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainCfg {
    pub center: [f64; 4],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleCfg {
    /// Decreasing list of concentration parameters for rate fits.
    pub deltas: Vec<f64>,
    pub xi: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReduceCfg {
    pub guess: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootCfg {
    pub eps: f64,
    pub radius: f64,
    pub potential: RadialPotential,
    pub profile: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TolerancesCfg {
    pub quad_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 42,
            domain: DomainCfg::default(),
            potential: Potential::constant(1.0),
            bubble: BubbleCfg::default(),
            eps_grid: vec![0.5, 0.4, 0.3, 0.25, 0.2],
            quadrature: QuadratureSpec::radial_default(),
            reduce: ReduceCfg::default(),
            shoot: ShootCfg::default(),
            tolerances: TolerancesCfg::default(),
        }
    }
}

impl Default for DomainCfg {
    fn default() -> Self {
        DomainCfg { center: [0.0; 4], radius: 1.0 }
    }
}

impl Default for BubbleCfg {
    fn default() -> Self {
        BubbleCfg { deltas: vec![1e-2, 3e-3, 1e-3], xi: [0.0; 4] }
    }
}

impl Default for ReduceCfg {
    fn default() -> Self {
        ReduceCfg { guess: [0.0; 4] }
    }
}

impl Default for ShootCfg {
    fn default() -> Self {
        ShootCfg {
            eps: 0.5,
            radius: 1.0,
            potential: RadialPotential::Constant { value: 1.0 },
            profile: true,
        }
    }
}

impl Default for TolerancesCfg {
    fn default() -> Self {
        TolerancesCfg { quad_tol: 1e-10 }
    }
}

impl ExperimentConfig {
    pub fn domain_model(&self) -> DomainModel {
        DomainModel::ball(Vector4::from(self.domain.center), self.domain.radius)
    }

    /// Canonical serialized form used for the provenance hash; includes
    /// every default so reruns hash the fully resolved experiment.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn load(path: Option<&Path>, seed_override: Option<u64>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", p.display()))?;
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed_override {
        cfg.seed = s;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> anyhow::Result<()> {
    anyhow::ensure!(cfg.domain.radius > 0.0, "domain.radius must be positive");
    anyhow::ensure!(!cfg.bubble.deltas.is_empty(), "bubble.deltas must be nonempty");
    anyhow::ensure!(
        cfg.bubble.deltas.iter().all(|d| *d > 0.0),
        "bubble.deltas must be positive"
    );
    anyhow::ensure!(
        cfg.bubble.deltas.windows(2).all(|w| w[1] < w[0]),
        "bubble.deltas must be strictly decreasing"
    );
    anyhow::ensure!(cfg.eps_grid.iter().all(|e| *e > 0.0), "eps_grid must be positive");
    anyhow::ensure!(cfg.tolerances.quad_tol > 0.0, "tolerances.quad_tol must be positive");
    anyhow::ensure!(cfg.shoot.eps > 0.0, "shoot.eps must be positive");
    anyhow::ensure!(cfg.shoot.radius > 0.0, "shoot.radius must be positive");
    // parse-validate round trip must be lossless
    let rt: ExperimentConfig = toml::from_str(&cfg.canonical_toml())
        .map_err(|e| anyhow::anyhow!("config round-trip failed: {e}"))?;
    anyhow::ensure!(
        rt.canonical_toml() == cfg.canonical_toml(),
        "config round-trip is lossy"
    );
    Ok(())
}
