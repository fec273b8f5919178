//! Run configuration: a JSON file overridden by command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Tabular output encoding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Every parameter a command can take.
///
/// Unset options fall back to the defaults of the command that reads them,
/// so one file can drive several commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    /// Region family, limit shape or gauge family, depending on the command.
    pub shape: Option<String>,
    pub lattice: Option<String>,
    pub n: Option<u64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub k: Option<u64>,
    pub depth: Option<u64>,
    /// Interior multiplicity `N`.
    #[serde(rename = "N")]
    pub big_n: Option<u64>,
    /// Region JSON consumed by `sinkhorn`.
    pub region: Option<String>,
    /// Edge weight file: one weight per line, in edge order.
    pub weights: Option<String>,
    /// Per-type weights `a, b, c, d` of the weighted Aztec diamond.
    pub type_weights: Option<Vec<f64>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub grid: Option<usize>,
    pub margin: Option<f64>,
    pub step: Option<f64>,
    pub ns: Option<Vec<u64>>,
    pub sinkhorn_up_to: Option<u64>,
    /// `critical` or `uniform`.
    pub flow: Option<String>,
    pub samples: Option<usize>,
    pub chain_steps: Option<u64>,
    pub unsafe_override: bool,
    pub seed: u64,
    pub out: String,
    pub format: Format,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            shape: None,
            lattice: None,
            n: None,
            a: None,
            b: None,
            c: None,
            k: None,
            depth: None,
            big_n: None,
            region: None,
            weights: None,
            type_weights: None,
            tol: None,
            max_iter: None,
            grid: None,
            margin: None,
            step: None,
            ns: None,
            sinkhorn_up_to: None,
            flow: None,
            samples: None,
            chain_steps: None,
            unsafe_override: false,
            seed: 0,
            out: "out".into(),
            format: Format::Csv,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("config {}: {e}", path.display())))
    }

    pub fn lattice_or<'a>(&'a self, default: &'a str) -> &'a str {
        self.lattice.as_deref().unwrap_or(default)
    }

    pub fn shape(&self) -> Result<&str, CliError> {
        self.shape.as_deref().ok_or_else(|| CliError::invalid(format!("`{}` needs a shape", self.command)))
    }
}

/// Overwrites `slot` when the flag was given.
pub fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}
