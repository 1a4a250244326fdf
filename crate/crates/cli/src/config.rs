use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use conesheet::geometry::Cutoff;
use conesheet::{MeshConfig, OptimizerConfig, Params};
use serde::{Deserialize, Serialize};

/// Settings of the `diagnose` and `align` suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsConfig {
    /// Radii of the curvature and ring diagnostics.
    pub radii: Vec<f64>,
    /// Random quartic fields per radius in the isoperimetric suite.
    pub isoperimetric_samples: usize,
    /// Inner radius of the annulus used by `align`.
    pub align_rho: f64,
    pub curvature: bool,
    pub isoperimetric: bool,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            radii: vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8],
            isoperimetric_samples: 100,
            align_rho: 0.3,
            curvature: true,
            isoperimetric: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub delta: f64,
    pub h_list: Vec<f64>,
    pub mesh: MeshConfig,
    pub optimizer: OptimizerConfig,
    pub cutoff: Cutoff,
    pub diagnostics: DiagnosticsConfig,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 0.5,
            h_list: vec![0.2, 0.1, 0.05, 0.025],
            mesh: MeshConfig::default(),
            optimizer: OptimizerConfig::default(),
            cutoff: Cutoff::default(),
            diagnostics: DiagnosticsConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn params(&self) -> Result<Vec<Params>> {
        self.h_list
            .iter()
            .map(|&h| Params::new(self.delta, h).map_err(Into::into))
            .collect()
    }

    /// Checks every range before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.h_list.is_empty() {
            bail!("h_list must not be empty");
        }
        let params = self.params()?;
        let mut hs = self.h_list.clone();
        hs.sort_by(f64::total_cmp);
        if hs.windows(2).any(|w| w[0] == w[1]) {
            bail!("h_list entries must be distinct");
        }
        self.mesh.build(&params[0])?;
        self.optimizer.validate()?;
        let d = &self.diagnostics;
        if let Some(r) = d.radii.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            bail!("diagnostic radii must lie in (0, 1), got {r}");
        }
        if !(d.align_rho > 0.0 && d.align_rho < 1.0) {
            bail!("align_rho must lie in (0, 1), got {}", d.align_rho);
        }
        if self.output_dir.as_os_str().is_empty() {
            bail!("output_dir must not be empty");
        }
        Ok(())
    }
}
