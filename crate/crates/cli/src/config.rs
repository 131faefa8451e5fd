//! JSON run configurations. Every block rejects unknown keys.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use stickybm::feynman_kac::FellerBc;
use stickybm::potentials::{Family, PotentialSpec};
use stickybm::stats::Binning;

/// Keys shared by every subcommand; flags override them.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Common {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub workers: Option<usize>,
}

/// Splits the shared keys off a config document and parses the rest as `T`.
pub fn parse<T: DeserializeOwned>(text: &str) -> Result<(Common, T), String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(mut map) = value else {
        return Err("config must be a JSON object".into());
    };
    let common = Common {
        seed: take(&mut map, "seed")?,
        out: take(&mut map, "out")?,
        workers: take(&mut map, "workers")?,
    };
    let body = serde_json::from_value(Value::Object(map)).map_err(|e| format!("config: {e}"))?;
    Ok((common, body))
}

fn take<T: DeserializeOwned>(map: &mut Map<String, Value>, key: &str) -> Result<Option<T>, String> {
    match map.remove(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v).map(Some).map_err(|e| format!("config: `{key}`: {e}")),
    }
}

/// Initial or source data `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Constant { value: f64 },
    /// `exp(-((x - center)/scale)²)`.
    Gaussian { center: f64, scale: f64 },
}

impl PhiSpec {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            PhiSpec::Constant { value } => value,
            PhiSpec::Gaussian { center, scale } => {
                let z = (x - center) / scale;
                (-z * z).exp()
            }
        }
    }
}

/// Sticky-consistent potential, `range` solved from `(κ, depth)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: Family,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub depth: f64,
}

impl PotentialConfig {
    pub fn build(&self) -> stickybm::Result<PotentialSpec> {
        PotentialSpec::sticky(self.family, self.kappa, self.depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrwSimConfig {
    pub h: f64,
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub x0: f64,
    pub t_final: f64,
    #[serde(default)]
    pub format: TrajectoryFormat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemSimConfig {
    pub potential: PotentialConfig,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub x0: f64,
    pub n_samples: u64,
    #[serde(default = "one")]
    pub stride: usize,
    /// Also write a coarse path at `refine · dt` driven by the same noise.
    #[serde(default)]
    pub refine: Option<usize>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_binning")]
    pub binning: Binning,
}

fn one() -> usize {
    1
}

fn default_threshold() -> f64 {
    0.15
}

fn default_binning() -> Binning {
    Binning::Uniform { width: 0.01 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemExitConfig {
    pub potential: PotentialConfig,
    pub dt: f64,
    pub n_samples: u64,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfptConfig {
    pub h: f64,
    pub kappas: Vec<f64>,
    pub ell: f64,
    #[serde(default = "origin")]
    pub x0s: Vec<f64>,
    pub n_samples: u64,
    #[serde(default)]
    pub sem: Option<SemExitConfig>,
}

fn origin() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkHeatConfig {
    pub h: f64,
    pub bc: FellerBc,
    #[serde(default)]
    pub x0: f64,
    pub t: f64,
    pub phi: PhiSpec,
    pub n_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FkPoissonConfig {
    pub h: f64,
    pub bc: FellerBc,
    #[serde(default)]
    pub x0: f64,
    pub ell: f64,
    pub phi: PhiSpec,
    pub n_samples: u64,
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeRefConfig {
    pub h: f64,
    pub x_max: f64,
    pub t_final: f64,
    /// Defaults to `h`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub bc: FellerBc,
    pub phi: PhiSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TptConfig {
    pub h: f64,
    pub kappa_left: f64,
    pub kappa_right: f64,
    pub length: f64,
    pub t_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub bc: FellerBc,
    #[serde(default)]
    pub x0: f64,
    pub t: f64,
    pub phi: PhiSpec,
    pub hs: Vec<f64>,
    pub n_samples: u64,
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_oracle_h")]
    pub oracle_h: f64,
}

fn default_x_max() -> f64 {
    12.0
}

fn default_oracle_h() -> f64 {
    1.0 / 512.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SrwExitConfig {
    pub h: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub potential: PotentialConfig,
    pub ell: f64,
    pub dts: Vec<f64>,
    pub n_samples: u64,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub srw: Option<SrwExitConfig>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_keys_are_split_off() {
        let (c, t): (Common, TptConfig) = parse(
            r#"{"seed": 4, "workers": 2, "h": 0.1, "kappa_left": 1, "kappa_right": 0,
                "length": 1, "t_total": 10}"#,
        )
        .unwrap();
        assert_eq!(c, Common { seed: Some(4), out: None, workers: Some(2) });
        assert_eq!(t.length, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse::<TptConfig>(
            r#"{"h": 0.1, "kappa_left": 1, "kappa_right": 0, "length": 1, "t_total": 10, "tt": 1}"#,
        )
        .unwrap_err();
        assert!(err.contains("unknown field"), "{err}");
        assert!(parse::<PhiSpec>(r#"{"kind": "gaussian", "center": 3, "scale": 1, "x": 0}"#).is_err());
    }

    #[test]
    fn phi_shapes() {
        let g = PhiSpec::Gaussian { center: 3.0, scale: 1.0 };
        assert_eq!(g.eval(3.0), 1.0);
        assert!((g.eval(0.0) - (-9.0f64).exp()).abs() < 1e-18);
        assert_eq!(PhiSpec::Constant { value: 2.0 }.eval(7.0), 2.0);
    }
}
