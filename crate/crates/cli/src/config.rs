//! TOML experiment configuration. Unknown keys are hard errors: a silently
//! ignored typo would change what an archived config reproduces.

use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Write the driver ensemble as one CSV per path.
    Gen,
    /// n-covariation ladder report for the driver ensemble.
    Var,
    /// Symmetric/forward/bracket tables for an integrand along the driver.
    Integrate,
    /// Change-of-variable residual ladder for an expression F.
    Check,
    /// Solve one reduced SDE and export the solution.
    Solve,
    /// Two distinct solutions of the |x|^a equation from 0.
    DemoNonuniq,
    /// Full acceptance suite with summary CSV.
    Suite,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub command: Command,
    /// Master seed; every stream derives from it. Overridable with --seed.
    pub seed: u64,
    /// Output directory; overridable with --out. Default "out".
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridCfg,
    #[serde(default)]
    pub driver: DriverCfg,
    #[serde(default)]
    pub ladder: LadderCfg,
    #[serde(default)]
    pub ensemble: EnsembleCfg,
    pub var: Option<VarCfg>,
    pub integrate: Option<IntegrateCfg>,
    pub check: Option<CheckCfg>,
    pub solve: Option<SolveCfg>,
    pub nonuniq: Option<NonUniqCfg>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    /// Number of steps on [0, 1]; must be a power of two.
    pub n_steps: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        GridCfg { n_steps: 1 << 12 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriverCfg {
    /// Generator of the regular part R:
    /// zero | brownian | fbm:H | bifbm:H:K | linear | square | sinw.
    pub r: String,
    /// Generator of the bracket-carrying part Q (same grammar).
    pub q: String,
    /// Number of paths written by `gen`.
    pub paths: usize,
}

impl Default for DriverCfg {
    fn default() -> Self {
        DriverCfg {
            r: "fbm:0.7".into(),
            q: "zero".into(),
            paths: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderCfg {
    /// Coarsest regularization 2^-coarse.
    pub coarse: u32,
    /// Finest regularization 2^-fine.
    pub fine: u32,
}

impl Default for LadderCfg {
    fn default() -> Self {
        LadderCfg { coarse: 4, fine: 8 }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleCfg {
    pub replications: usize,
}

impl Default for EnsembleCfg {
    fn default() -> Self {
        EnsembleCfg { replications: 100 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarCfg {
    /// Covariation order n; all n slots carry the driver path.
    pub order: usize,
    /// Report times (snapped to grid nodes).
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

fn default_times() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrateCfg {
    /// Integrand expression in `t` and `x`, evaluated along the driver path.
    pub integrand: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCfg {
    /// F expression in `x`; derivatives are taken symbolically.
    pub f: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveCfg {
    /// Built-in coefficient name (linear | sqrt1px2 | sin_pi | abs_pow:a)
    /// or a sigma expression in `t` and `x`.
    pub coefficient: String,
    /// Optional drift expressions in `t` and `x`.
    pub beta: Option<String>,
    pub alpha: Option<String>,
    /// Case tag: cubic | quadratic | forward | hoelder | fbm |
    /// brownian-stratonovich.
    pub case: String,
    pub eta: f64,
    /// Spatial window scanned for support components.
    pub window: Option<(f64, f64)>,
    #[serde(default)]
    pub picard: bool,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonUniqCfg {
    /// Exponent a of sigma = |x|^a, in (0, 1).
    pub exponent: f64,
}

/// Loaded config plus the provenance recorded in every output file.
pub struct Loaded {
    pub config: Config,
    /// Hex SHA-256 of the raw config bytes.
    pub config_hash: String,
}

pub fn load(path: &Path) -> Result<Loaded, String> {
    let bytes = std::fs::read(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| format!("config {} is not UTF-8: {e}", path.display()))?;
    let config: Config = toml::from_str(text)
        .map_err(|e| format!("config {}: {e}", path.display()))?;
    use sha2::Digest;
    let config_hash = format!("{:x}", sha2::Sha256::digest(&bytes));
    Ok(Loaded {
        config,
        config_hash,
    })
}
