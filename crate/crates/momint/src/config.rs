//! Run configuration: one JSON file, validated strictly (unknown keys are
//! rejected), with command-line flags layered on top.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::boundary::{BoundaryMatrix, MatrixJson};
use crate::error::{Error, Result};
use crate::geometry::{GammaJson, IntervalUnion, OmegaJson, TranslationSet};
use crate::spectraset::{LambdaJson, LambdaSet};

/// Either an inline boundary matrix or the instruction to derive one from
/// the lambda set.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Keyword(String),
    Inline(MatrixJson),
}

/// Initial data for `evolve`, `resolvent`, and `parseval`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// Smooth bump on the central `frac` of one interval.
    Bump {
        interval: usize,
        #[serde(default = "default_bump_frac")]
        frac: f64,
    },
    /// Indicator of one interval.
    Indicator { interval: usize },
    /// The exponential e_λ.
    Exp { lambda: f64 },
    /// Sampled values from a CSV file, with an optional trace sidecar.
    Csv {
        path: PathBuf,
        #[serde(default)]
        traces: Option<PathBuf>,
    },
}

fn default_bump_frac() -> f64 {
    0.7
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub omega: Option<OmegaJson>,
    pub matrix: Option<MatrixSource>,
    pub lambda: Option<LambdaJson>,
    pub gamma: Option<GammaJson>,
    pub window: Option<[f64; 2]>,
    pub tol: Option<f64>,
    pub quad_order: Option<usize>,
    pub threads: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub propagator: Option<String>,
    pub times: Option<Vec<f64>>,
    /// Truncation bound for the spectral propagator basis; defaults to the
    /// larger endpoint of the window in absolute value.
    pub basis_bound: Option<f64>,
    pub resolvent_lambda: Option<[f64; 2]>,
    pub function: Option<FunctionSpec>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(config)
    }

    pub fn omega(&self) -> Result<IntervalUnion> {
        self.omega
            .as_ref()
            .ok_or_else(|| Error::Config("config needs an \"omega\" entry".into()))?
            .load()
    }

    pub fn lambda(&self) -> Result<LambdaSet> {
        self.lambda
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a \"lambda\" entry".into()))?
            .load()
    }

    pub fn gamma(&self) -> Result<TranslationSet> {
        self.gamma
            .as_ref()
            .ok_or_else(|| Error::Config("config needs a \"gamma\" entry".into()))?
            .load()
    }

    pub fn window(&self) -> Result<(f64, f64)> {
        let w = self
            .window
            .ok_or_else(|| Error::Config("config needs a \"window\" entry".into()))?;
        if w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Config(format!(
                "window [{}, {}] must have positive length",
                w[0], w[1]
            )));
        }
        Ok((w[0], w[1]))
    }

    /// Resolve the boundary matrix: inline entries, or built from the
    /// lambda set over the window when the keyword is given.
    pub fn matrix(&self, omega: &IntervalUnion) -> Result<BoundaryMatrix> {
        match self.matrix.as_ref() {
            None => Err(Error::Config("config needs a \"matrix\" entry".into())),
            Some(MatrixSource::Inline(json)) => Ok(json.load()?.matrix),
            Some(MatrixSource::Keyword(word)) if word == "build-from-lambda" => {
                let lambda = self.lambda()?;
                let window = self.window()?;
                Ok(crate::spectraset::build_boundary_matrix(omega, &lambda, window)?.matrix)
            }
            Some(MatrixSource::Keyword(word)) => Err(Error::Config(format!(
                "unknown matrix keyword {word:?}; expected \"build-from-lambda\" or inline entries"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"{
            "omega": [[0,1],[1,2],[1,1],[3,2]],
            "matrix": "build-from-lambda",
            "lambda": {"offsets": [[0,1],[1,2]], "period": [2,1]},
            "gamma": {"offsets": [[0,1],[1,2]], "period": [2,1]},
            "window": [-4.0, 4.0],
            "tol": 1e-12,
            "quad_order": 32,
            "function": {"kind": "bump", "interval": 0}
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        let omega = config.omega().unwrap();
        assert_eq!(omega.n(), 2);
        let b = config.matrix(&omega).unwrap();
        assert_eq!(b.n(), 2);
        assert!(matches!(
            config.function,
            Some(FunctionSpec::Bump { interval: 0, .. })
        ));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"{"omega": [[0,1],[1,1]], "wibble": 3}"#;
        assert!(serde_json::from_str::<RunConfig>(text).is_err());
    }

    #[test]
    fn unknown_matrix_keyword_is_rejected() {
        let text = r#"{"omega": [[0,1],[1,1]], "matrix": "guess"}"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        let omega = config.omega().unwrap();
        assert!(config.matrix(&omega).is_err());
    }
}
