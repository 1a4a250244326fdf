//! Plain-text field snapshots.
//!
//! ```text
//! DSHEET1,<delta>,<h>,<n_radial>,<n_angular>
//! r,theta,y1,y2,y3        (one row per node, radial-outer order)
//! ```
//!
//! Numbers are written with 17 significant digits, so a write/read cycle is
//! lossless. Row numbers in errors count data rows from 1; the header is row 0.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Params;
use crate::mesh::{DeformationField, PolarMesh};

pub const MAGIC: &str = "DSHEET1";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn snapshot_to_string(field: &DeformationField) -> String {
    let m = field.mesh();
    let p = m.params();
    let mut s = String::with_capacity(m.len() * 120);
    let _ = writeln!(
        s,
        "{MAGIC},{},{},{},{}",
        num(p.delta),
        num(p.h),
        m.n_radial(),
        m.n_angular()
    );
    for i in 0..m.n_radial() {
        for j in 0..m.n_angular() {
            let y = field.value(i, j);
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                num(m.radius(i)),
                num(m.theta(j)),
                num(y.x),
                num(y.y),
                num(y.z)
            );
        }
    }
    s
}

pub fn write_snapshot(path: &Path, field: &DeformationField) -> Result<()> {
    std::fs::write(path, snapshot_to_string(field))?;
    Ok(())
}

fn bad(row: usize, msg: impl Into<String>) -> Error {
    Error::Snapshot {
        row,
        msg: msg.into(),
    }
}

fn parse_f(tok: &str, row: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| bad(row, format!("cannot parse {what} from {tok:?}")))?;
    if !v.is_finite() {
        return Err(bad(row, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Parses a snapshot. With `expected_delta` set, a header carrying a
/// different deficit is refused.
pub fn snapshot_from_str(text: &str, expected_delta: Option<f64>) -> Result<DeformationField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad(0, "empty snapshot"))?;
    let h: Vec<&str> = header.split(',').map(str::trim).collect();
    if h.len() != 5 || h[0] != MAGIC {
        return Err(bad(
            0,
            format!("expected `{MAGIC},delta,h,n_radial,n_angular`, got {header:?}"),
        ));
    }
    let delta = parse_f(h[1], 0, "delta")?;
    let thick = parse_f(h[2], 0, "h")?;
    let count = |t: &str, what: &str| -> Result<usize> {
        t.parse()
            .map_err(|_| bad(0, format!("cannot parse {what} from {t:?}")))
    };
    let (nr, nt) = (count(h[3], "n_radial")?, count(h[4], "n_angular")?);
    if let Some(d) = expected_delta {
        if d != delta {
            return Err(Error::InvalidParams(format!(
                "snapshot was written for delta = {delta}, but the configuration has delta = {d}"
            )));
        }
    }
    let params = Params::new(delta, thick)?;
    if nr < 4 || nt < 4 {
        return Err(bad(0, format!("mesh {nr} x {nt} is too small")));
    }
    let n = nr * nt;
    let mut rows = Vec::with_capacity(n);
    for (k, line) in lines.enumerate() {
        let row = k + 1;
        if row > n {
            return Err(bad(
                row,
                format!("unexpected row beyond the {n} declared nodes"),
            ));
        }
        let t: Vec<&str> = line.split(',').collect();
        if t.len() != 5 {
            return Err(bad(row, format!("expected 5 columns, found {}", t.len())));
        }
        let mut v = [0.0; 5];
        for (c, (tok, what)) in t.iter().zip(["r", "theta", "y1", "y2", "y3"]).enumerate() {
            v[c] = parse_f(tok, row, what)?;
        }
        rows.push(v);
    }
    if rows.len() < n {
        return Err(bad(
            rows.len() + 1,
            format!(
                "missing: header declares {n} nodes, file has {}",
                rows.len()
            ),
        ));
    }
    let r_inner = rows[0][0];
    let mesh = PolarMesh::new(&params, r_inner, nr, nt).map_err(|e| bad(1, e.to_string()))?;
    let mut values = Vec::with_capacity(n);
    for (k, v) in rows.iter().enumerate() {
        let (i, j) = (k / nt, k % nt);
        let (r, th) = (mesh.radius(i), mesh.theta(j));
        if (v[0] - r).abs() > 1e-12 * r || (v[1] - th).abs() > 1e-12 {
            return Err(bad(
                k + 1,
                format!(
                    "node ({}, {}) does not lie on the mesh implied by the header",
                    v[0], v[1]
                ),
            ));
        }
        values.push(Vector3::new(v[2], v[3], v[4]));
    }
    DeformationField::new(Arc::new(mesh), values)
}

pub fn read_snapshot(path: &Path, expected_delta: Option<f64>) -> Result<DeformationField> {
    snapshot_from_str(&std::fs::read_to_string(path)?, expected_delta)
}
