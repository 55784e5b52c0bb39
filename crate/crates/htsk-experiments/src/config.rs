//! Run configuration: a small JSON document selecting an experiment,
//! its parameters, the planner constants, and the width-estimation
//! budget. Unknown keys are rejected at every level so a typo cannot
//! silently fall back to a default.

use serde::Deserialize;

use htsk::{Error, Result};

fn one() -> f64 {
    1.0
}

fn default_width_draws() -> usize {
    2000
}

/// Planner constants; each defaults to 1 when omitted.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "one")]
    pub c1: f64,
    #[serde(default = "one")]
    pub c2: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

/// Monte-Carlo budget for width estimates.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Widths {
    #[serde(default = "default_width_draws")]
    pub draws: usize,
}

impl Default for Widths {
    fn default() -> Self {
        Widths {
            draws: default_width_draws(),
        }
    }
}

/// Top-level run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Which experiment to run; must match a CLI subcommand name.
    pub experiment: String,
    /// Experiment-specific parameters, decoded by the selected runner.
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    pub constants: Constants,
    #[serde(default)]
    pub widths: Widths,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("bad run configuration: {e}")))
    }

    /// Decodes the `params` object into an experiment's own parameter
    /// struct, rejecting unknown keys.
    pub fn params_as<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        let value = serde_json::Value::Object(self.params.clone());
        serde_json::from_value(value)
            .map_err(|e| Error::InvalidArgument(format!("bad experiment parameters: {e}")))
    }
}
