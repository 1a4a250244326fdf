use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, OptimizerConfig, Termination};
use crate::energy::energy_breakdown;
use crate::error::{Error, Result};
use crate::geometry::{ansatz_map, Cutoff, Params, RadialCutoff};
use crate::mesh::{sample_with, DeformationField, PolarMesh, INNER_RADIUS_FACTOR};
use crate::snapshot::write_snapshot;

/// Mesh resolution shared by every run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    pub n_radial: usize,
    pub n_angular: usize,
    /// `r_inner = h / r_inner_factor`.
    pub r_inner_factor: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            n_radial: 256,
            n_angular: 256,
            r_inner_factor: INNER_RADIUS_FACTOR,
        }
    }
}

impl MeshConfig {
    pub fn build(&self, params: &Params) -> Result<PolarMesh> {
        if self.n_radial < 16 || self.n_angular < 16 || self.n_angular % 2 != 0 {
            return Err(Error::InvalidResolution(format!(
                "need n_radial >= 16 and even n_angular >= 16, got {} x {}",
                self.n_radial, self.n_angular
            )));
        }
        if !(self.r_inner_factor > 1.0 && self.r_inner_factor.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "r_inner_factor must exceed 1, got {}",
                self.r_inner_factor
            )));
        }
        PolarMesh::new(
            params,
            params.h / self.r_inner_factor,
            self.n_radial,
            self.n_angular,
        )
    }
}

/// Ansatz field with the default cutoff on a fresh mesh for `params`.
pub fn ansatz_field(params: &Params, mesh: &MeshConfig) -> Result<DeformationField> {
    ansatz_field_with(params, mesh, &Cutoff::default())
}

pub fn ansatz_field_with(
    params: &Params,
    mesh: &MeshConfig,
    cutoff: &dyn RadialCutoff,
) -> Result<DeformationField> {
    let m = Arc::new(mesh.build(params)?);
    sample_with(m, |x| ansatz_map(x, params, cutoff))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepConfig {
    pub mesh: MeshConfig,
    pub optimizer: OptimizerConfig,
    /// Cutoff of the ansatz initializer.
    pub cutoff: Cutoff,
    /// Directory receiving one snapshot per minimizer, if set.
    pub snapshot_dir: Option<PathBuf>,
}

/// One thickness of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub delta: f64,
    pub h: f64,
    pub total: f64,
    pub membrane: f64,
    pub bending_raw: f64,
    pub iters: usize,
    pub grad_norm: f64,
    pub snapshot: String,
    pub ansatz_total: f64,
    pub termination: Option<Termination>,
    /// Whether `total <= 2 pi delta^2 h^2 (log(1/h) + C2)`.
    pub gate: bool,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }

    /// `E / (2 pi delta^2 h^2) - log(1/h)`.
    pub fn log_constant(total: f64, delta: f64, h: f64) -> f64 {
        total / (2.0 * std::f64::consts::PI * delta * delta * h * h) - (1.0 / h).ln()
    }
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by decreasing `h`.
    pub records: Vec<SweepRecord>,
    /// Minimizers, aligned with `records` (`None` for failed runs).
    pub fields: Vec<Option<DeformationField>>,
    /// `C2` of the almost-minimality gate.
    pub gate_constant: f64,
}

/// Minimizes from the ansatz for every `params`, in parallel.
pub fn sweep(params_list: &[Params], config: &SweepConfig) -> Result<SweepResult> {
    let Some(first) = params_list.first() else {
        return Err(Error::InvalidConfig(
            "sweep needs at least one thickness".into(),
        ));
    };
    for p in params_list {
        p.validate()?;
        if p.delta != first.delta {
            return Err(Error::InvalidConfig(
                "all sweep runs must share delta".into(),
            ));
        }
    }
    let mut hs: Vec<f64> = params_list.iter().map(|p| p.h).collect();
    hs.sort_by(|a, b| b.total_cmp(a));
    if hs.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidConfig(
            "sweep thicknesses must be distinct".into(),
        ));
    }
    config.optimizer.validate()?;
    if let Some(dir) = &config.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let delta = first.delta;
    let runs: Vec<(SweepRecord, Option<DeformationField>)> = hs
        .par_iter()
        .map(|&h| {
            let p = Params { delta, h };
            run_one(&p, config).unwrap_or_else(|e| {
                let rec = SweepRecord {
                    delta,
                    h,
                    total: f64::NAN,
                    membrane: f64::NAN,
                    bending_raw: f64::NAN,
                    iters: 0,
                    grad_norm: f64::NAN,
                    snapshot: String::new(),
                    ansatz_total: f64::NAN,
                    termination: None,
                    gate: false,
                    error: Some(e.to_string()),
                };
                (rec, None)
            })
        })
        .collect();
    let (mut records, fields): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    let gate_constant = records
        .iter()
        .filter(|r| r.ansatz_total.is_finite())
        .map(|r| SweepRecord::log_constant(r.ansatz_total, delta, r.h))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    for r in records.iter_mut().filter(|r| r.ok()) {
        r.gate = SweepRecord::log_constant(r.total, delta, r.h) <= gate_constant;
    }
    Ok(SweepResult {
        records,
        fields,
        gate_constant,
    })
}

fn run_one(p: &Params, config: &SweepConfig) -> Result<(SweepRecord, Option<DeformationField>)> {
    let init = ansatz_field_with(p, &config.mesh, &config.cutoff)?;
    let ansatz_total = energy_breakdown(&init, p)?.total;
    let out = minimize(&init, p, &config.optimizer)?;
    let e = energy_breakdown(&out.field, p)?;
    let snapshot = match &config.snapshot_dir {
        Some(dir) => {
            let path = dir.join(format!("minimizer_h{:.6}.csv", p.h));
            write_snapshot(&path, &out.field)?;
            path.display().to_string()
        }
        None => String::new(),
    };
    let rec = SweepRecord {
        delta: p.delta,
        h: p.h,
        total: e.total,
        membrane: e.membrane,
        bending_raw: e.bending_raw,
        iters: out.iterations,
        grad_norm: out.grad_norm,
        snapshot,
        ansatz_total,
        termination: Some(out.termination),
        gate: false,
        error: None,
    };
    Ok((rec, Some(out.field)))
}
