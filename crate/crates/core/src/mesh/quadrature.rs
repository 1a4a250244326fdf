use super::polar::PolarMesh;
use crate::error::{Error, Result};

fn check_len(density: &[f64], mesh: &PolarMesh) -> Result<()> {
    if density.len() != mesh.len() {
        return Err(Error::MeshMismatch(format!(
            "{} density values for a mesh of {} nodes",
            density.len(),
            mesh.len()
        )));
    }
    Ok(())
}

/// Sum of a nodal density over each ring.
pub(crate) fn ring_sums(mesh: &PolarMesh, density: &[f64]) -> Vec<f64> {
    density
        .chunks(mesh.n_angular())
        .map(|ring| ring.iter().sum())
        .collect()
}

/// `int_{r_lo <= |x| <= r_hi} density dx`.
pub fn integrate_region(density: &[f64], mesh: &PolarMesh, r_lo: f64, r_hi: f64) -> Result<f64> {
    check_len(density, mesh)?;
    let w = mesh.region_ring_weights(r_lo, r_hi)?;
    Ok(weighted_ring_sum(&w, &ring_sums(mesh, density)))
}

pub(crate) fn weighted_ring_sum(weights: &[f64], sums: &[f64]) -> f64 {
    weights
        .iter()
        .zip(sums)
        .filter(|(w, _)| **w != 0.0)
        .map(|(w, s)| w * s)
        .sum()
}

/// `int_{|x| = r} density dH^1`, interpolating between the neighboring rings.
pub fn integrate_ring(density: &[f64], mesh: &PolarMesh, r: f64) -> Result<f64> {
    check_len(density, mesh)?;
    let sums = ring_sums(mesh, density);
    ring_from_sums(mesh, &sums, r)
}

pub(crate) fn ring_from_sums(mesh: &PolarMesh, sums: &[f64], r: f64) -> Result<f64> {
    let (k, wa, wb) = mesh.ring_interpolation(r)?;
    let r = mesh.clamp_radius(r)?;
    Ok(r * mesh.dtheta() * (wa * sums[k] + wb * sums[k + 1]))
}
