//! JSON configuration for domains and table runs.

use crate::domains::{by_name, Domain, DomainOptions};
use crate::error::{FcError, Result};
use serde::Deserialize;
use std::path::Path;

/// Domain selection: a named built-in with parameters, with optional
/// decomposition knobs.
#[derive(Debug, Clone, Deserialize)]
pub struct DomainConfig {
    pub domain: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Patch meshsize target as a multiple of the Cartesian h.
    pub mesh_ratio: Option<f64>,
    /// Corner-patch half-extent in the boundary parameter.
    pub corner_extent: Option<f64>,
}

fn default_alpha() -> f64 {
    0.5
}

impl DomainConfig {
    pub fn options(&self, c_btz: usize) -> DomainOptions {
        let mut opts = DomainOptions { c_btz, ..Default::default() };
        if let Some(r) = self.mesh_ratio {
            opts.mesh_ratio = r;
        }
        if let Some(c) = self.corner_extent {
            opts.corner_extent = c;
        }
        opts
    }

    pub fn build(&self, d: usize, h: f64, c_btz: usize) -> Result<Domain> {
        by_name(&self.domain, self.alpha, d, h, &self.options(c_btz))
    }
}

/// A convergence-table specification: a fixed configuration over a sequence
/// of decreasing mesh sizes.
#[derive(Debug, Clone, Deserialize)]
pub struct TableSpec {
    /// "continue" or "poisson".
    pub mode: String,
    #[serde(flatten)]
    pub domain: DomainConfig,
    pub d: usize,
    pub h: Vec<f64>,
    /// Integration tolerances per row (poisson mode).
    pub eps_int: Option<Vec<f64>>,
    /// Grading exponent (poisson mode; default d + 3).
    pub grading: Option<usize>,
    /// Quadrature points per boundary segment (poisson mode).
    pub n_per_segment: Option<usize>,
}

impl TableSpec {
    pub fn load(path: &Path) -> Result<TableSpec> {
        let text = std::fs::read_to_string(path)?;
        let spec: TableSpec =
            serde_json::from_str(&text).map_err(|e| FcError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h.is_empty() {
            return Err(FcError::Config("table spec needs at least one h".into()));
        }
        if self.h.windows(2).any(|w| w[1] >= w[0]) {
            return Err(FcError::Config(
                "table spec h values must decrease monotonically".into(),
            ));
        }
        if !matches!(self.mode.as_str(), "continue" | "poisson") {
            return Err(FcError::Config(format!("unknown table mode '{}'", self.mode)));
        }
        Ok(())
    }
}
