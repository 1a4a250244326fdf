use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use conesheet::diagnostics::{
    curvature_report, isoper_check, CurvatureReport, IsoperCheck, Tolerance,
};
use conesheet::energy::{bending_profile, energy_breakdown, energy_gradient};
use conesheet::geometry::cone_map;
use conesheet::mesh::{sample_with, ScalarField};
use conesheet::optimize::{
    ansatz_field_with, fit_points, minimize, procrustes_align, sweep, w22_distance, ScalingFit,
    SweepResult, Termination,
};
use conesheet::snapshot::{read_snapshot, write_snapshot};
use conesheet::{DeformationField, Params, SweepConfig, SweepRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::RunConfig;
use crate::svg::{Plot, Series, Style};

/// One line of the energy tables written by `ansatz`, `minimize` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub delta: f64,
    pub h: f64,
    pub total: f64,
    pub membrane: f64,
    pub bending_raw: f64,
    pub iters: usize,
    pub grad_norm: f64,
    pub snapshot: String,
}

impl From<&SweepRecord> for Row {
    fn from(r: &SweepRecord) -> Self {
        Row {
            delta: r.delta,
            h: r.h,
            total: r.total,
            membrane: r.membrane,
            bending_raw: r.bending_raw,
            iters: r.iters,
            grad_norm: r.grad_norm,
            snapshot: r.snapshot.clone(),
        }
    }
}

/// Files written by a command, reported on stdout.
pub type Artifacts = Vec<PathBuf>;

fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let mut r =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    r.deserialize()
        .enumerate()
        .map(|(k, row)| row.with_context(|| format!("{}: bad record {}", path.display(), k + 1)))
        .collect()
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn scaling_fit(rows: &[Row], delta: f64) -> Option<ScalingFit> {
    let pts: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter(|r| r.total.is_finite())
        .map(|r| (r.h, r.total, r.membrane))
        .collect();
    fit_points(&pts, delta).ok()
}

fn log_constant(r: &Row) -> f64 {
    SweepRecord::log_constant(r.total, r.delta, r.h)
}

pub fn ansatz(cfg: &RunConfig) -> Result<Artifacts> {
    let mut rows = Vec::new();
    for p in cfg.params()? {
        let field = ansatz_field_with(&p, &cfg.mesh, &cfg.cutoff)?;
        let e = energy_breakdown(&field, &p)?;
        rows.push(Row {
            delta: p.delta,
            h: p.h,
            total: e.total,
            membrane: e.membrane,
            bending_raw: e.bending_raw,
            iters: 0,
            grad_norm: energy_gradient(&field, &p)?
                .iter()
                .map(|g| g.amax())
                .fold(0.0, f64::max),
            snapshot: String::new(),
        });
    }
    let dir = &cfg.output_dir;
    let (csv_path, json_path) = (dir.join("ansatz.csv"), dir.join("ansatz.json"));
    write_rows(&csv_path, &rows)?;
    let constants: Vec<f64> = rows.iter().map(log_constant).collect();
    write_json(
        &json_path,
        &json!({
            "command": "ansatz",
            "cutoff": cfg.cutoff,
            "rows": rows,
            "log_constants": constants,
            "fit": scaling_fit(&rows, cfg.delta),
        }),
    )?;
    Ok(vec![csv_path, json_path])
}

#[derive(Serialize)]
struct MinimizeRecord {
    #[serde(flatten)]
    row: Row,
    initial_total: f64,
    log_constant: f64,
    termination: Termination,
}

pub fn minimize_cmd(cfg: &RunConfig, init: Option<&Path>) -> Result<Artifacts> {
    let starts: Vec<(Params, DeformationField)> = match init {
        Some(path) => {
            let f = read_snapshot(path, Some(cfg.delta))?;
            vec![(*f.mesh().params(), f)]
        }
        None => cfg
            .params()?
            .into_iter()
            .map(|p| Ok((p, ansatz_field_with(&p, &cfg.mesh, &cfg.cutoff)?)))
            .collect::<Result<_>>()?,
    };
    let dir = &cfg.output_dir;
    let mut out = Vec::new();
    let mut records = Vec::new();
    for (p, start) in starts {
        let initial_total = energy_breakdown(&start, &p)?.total;
        let m = minimize(&start, &p, &cfg.optimizer)?;
        let e = energy_breakdown(&m.field, &p)?;
        let snap = dir.join(format!("minimizer_h{:.6}.csv", p.h));
        write_snapshot(&snap, &m.field)?;
        out.push(snap.clone());
        let row = Row {
            delta: p.delta,
            h: p.h,
            total: e.total,
            membrane: e.membrane,
            bending_raw: e.bending_raw,
            iters: m.iterations,
            grad_norm: m.grad_norm,
            snapshot: snap.display().to_string(),
        };
        records.push(MinimizeRecord {
            log_constant: log_constant(&row),
            row,
            initial_total,
            termination: m.termination,
        });
    }
    let rows: Vec<Row> = records.iter().map(|r| r.row.clone()).collect();
    let (csv_path, json_path) = (dir.join("minimize.csv"), dir.join("minimize.json"));
    write_rows(&csv_path, &rows)?;
    write_json(
        &json_path,
        &json!({ "command": "minimize", "records": records }),
    )?;
    out.extend([csv_path, json_path]);
    Ok(out)
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<Artifacts> {
    let sc = SweepConfig {
        mesh: cfg.mesh,
        optimizer: cfg.optimizer,
        cutoff: cfg.cutoff,
        snapshot_dir: Some(cfg.output_dir.clone()),
    };
    let SweepResult {
        records,
        gate_constant,
        ..
    } = sweep(&cfg.params()?, &sc)?;
    let rows: Vec<Row> = records.iter().map(Row::from).collect();
    let dir = &cfg.output_dir;
    let (csv_path, json_path) = (dir.join("sweep.csv"), dir.join("sweep.json"));
    write_rows(&csv_path, &rows)?;
    write_json(
        &json_path,
        &json!({
            "command": "sweep",
            "gate_constant": gate_constant,
            "records": records,
            "fit": scaling_fit(&rows, cfg.delta),
        }),
    )?;
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| format!("h={}: {e}", r.h)))
        .collect();
    if !failed.is_empty() {
        bail!(
            "{} of {} sweep runs failed: {}",
            failed.len(),
            records.len(),
            failed.join("; ")
        );
    }
    let mut out: Artifacts = records.iter().map(|r| PathBuf::from(&r.snapshot)).collect();
    out.extend([csv_path, json_path]);
    Ok(out)
}

/// All monomials `x^a y^b` with `a + b <= 4`.
fn quartic(c: &[f64; 15], x: f64, y: f64) -> f64 {
    let mut k = 0;
    let mut acc = 0.0;
    for deg in 0..=4 {
        for a in 0..=deg {
            acc += c[k] * x.powi(a) * y.powi(deg - a);
            k += 1;
        }
    }
    acc
}

#[derive(Serialize)]
struct IsoperSuite {
    samples: usize,
    radii: Vec<f64>,
    violations: usize,
    min_slack: f64,
    /// Checks on the three components of the snapshot itself.
    components: BTreeMap<String, Vec<(f64, IsoperCheck)>>,
}

fn isoperimetric_suite(field: &DeformationField, cfg: &RunConfig) -> Result<IsoperSuite> {
    let d = &cfg.diagnostics;
    let mesh = field.mesh();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut violations, mut min_slack) = (0, f64::INFINITY);
    for _ in 0..d.isoperimetric_samples {
        let c: [f64; 15] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let v = ScalarField::sample(mesh.clone(), |x| quartic(&c, x.x, x.y));
        for &r in &d.radii {
            let k = isoper_check(&v, r)?;
            if k.lhs_tangential < k.rhs - 1e-3 * (1.0 + k.rhs) {
                violations += 1;
            }
            min_slack = min_slack.min(k.lhs_tangential - k.rhs);
        }
    }
    let mut components = BTreeMap::new();
    for (c, name) in ["y1", "y2", "y3"].iter().enumerate() {
        let v = ScalarField::new(mesh.clone(), field.values().iter().map(|y| y[c]).collect())?;
        let checks = d
            .radii
            .iter()
            .map(|&r| Ok((r, isoper_check(&v, r)?)))
            .collect::<Result<_>>()?;
        components.insert(name.to_string(), checks);
    }
    Ok(IsoperSuite {
        samples: d.isoperimetric_samples,
        radii: d.radii.clone(),
        violations,
        min_slack,
        components,
    })
}

pub fn diagnose(cfg: &RunConfig, snapshot: &Path) -> Result<Artifacts> {
    let field = read_snapshot(snapshot, Some(cfg.delta))?;
    let p = *field.mesh().params();
    let e = energy_breakdown(&field, &p)?;
    let d = &cfg.diagnostics;
    let profile: Vec<(f64, f64)> = d
        .radii
        .iter()
        .copied()
        .zip(bending_profile(&field, &d.radii)?)
        .collect();
    let curvature: Option<CurvatureReport> = if d.curvature {
        Some(curvature_report(
            &field,
            &p,
            &d.radii,
            &Tolerance::default(),
        )?)
    } else {
        None
    };
    let iso = if d.isoperimetric {
        Some(isoperimetric_suite(&field, cfg)?)
    } else {
        None
    };
    let path = cfg.output_dir.join("diagnose.json");
    write_json(
        &path,
        &json!({
            "command": "diagnose",
            "snapshot": snapshot,
            "delta": p.delta,
            "h": p.h,
            "energy": e,
            "log_constant": SweepRecord::log_constant(e.total, p.delta, p.h),
            "bending_profile": profile,
            "bending_residual": profile
                .iter()
                .map(|(r, b)| (*r, b - p.log_coefficient() * (1.0 / r).ln()))
                .collect::<Vec<_>>(),
            "curvature": curvature,
            "isoperimetric": iso,
        }),
    )?;
    Ok(vec![path])
}

#[derive(Debug, Clone, Copy, Serialize)]
struct AlignSummary {
    h: f64,
    rho: f64,
    distance: f64,
    w22: f64,
    rotation: [[f64; 3]; 3],
    translation: [f64; 3],
    determinant: f64,
}

fn align_field(field: &DeformationField, rho: f64) -> Result<(AlignSummary, DeformationField)> {
    let p = *field.mesh().params();
    let al = procrustes_align(field, &p, rho)?;
    let cone = sample_with(field.mesh().clone(), |x| cone_map(x, p.delta))?;
    let w22 = w22_distance(&al.aligned, &cone, rho)?;
    let r = al.motion.rotation;
    let t = al.motion.translation;
    let summary = AlignSummary {
        h: p.h,
        rho,
        distance: al.distance,
        w22,
        rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
        translation: [t.x, t.y, t.z],
        determinant: r.determinant(),
    };
    Ok((summary, al.aligned))
}

pub fn align(cfg: &RunConfig, snapshot: &Path) -> Result<Artifacts> {
    let field = read_snapshot(snapshot, Some(cfg.delta))?;
    let (summary, aligned) = align_field(&field, cfg.diagnostics.align_rho)?;
    let snap = cfg
        .output_dir
        .join(format!("aligned_h{:.6}.csv", summary.h));
    write_snapshot(&snap, &aligned)?;
    let path = cfg.output_dir.join("align.json");
    write_json(
        &path,
        &json!({ "command": "align", "snapshot": snapshot, "aligned_snapshot": snap, "alignment": summary }),
    )?;
    Ok(vec![snap, path])
}

/// Energy tables found in `dir`, keyed by file stem. Snapshot files and
/// other CSVs are skipped.
fn collect_tables(dir: &Path) -> Result<BTreeMap<String, Vec<Row>>> {
    let mut tables = BTreeMap::new();
    let entries =
        std::fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    for path in paths
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
    {
        let mut reader = csv::Reader::from_path(&path)?;
        let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        if header
            != [
                "delta",
                "h",
                "total",
                "membrane",
                "bending_raw",
                "iters",
                "grad_norm",
                "snapshot",
            ]
        {
            continue;
        }
        let rows = read_rows(&path)?;
        if !rows.is_empty() {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            tables.insert(stem, rows);
        }
    }
    Ok(tables)
}

/// Resolves a snapshot path recorded in a table: as written, or by file
/// name inside the table's directory.
fn resolve_snapshot(dir: &Path, recorded: &str) -> Option<PathBuf> {
    if recorded.is_empty() {
        return None;
    }
    let p = PathBuf::from(recorded);
    if p.is_file() {
        return Some(p);
    }
    let local = dir.join(p.file_name()?);
    local.is_file().then_some(local)
}

pub fn report(cfg: &RunConfig, input: &Path) -> Result<Artifacts> {
    let tables = collect_tables(input)?;
    if tables.is_empty() {
        bail!(
            "no energy tables (ansatz/minimize/sweep CSV) found in {}",
            input.display()
        );
    }
    let delta = tables
        .values()
        .flatten()
        .next()
        .map(|r| r.delta)
        .ok_or_else(|| anyhow!("empty tables"))?;
    if tables.values().flatten().any(|r| r.delta != delta) {
        bail!("tables in {} mix different delta values", input.display());
    }
    let a = 2.0 * std::f64::consts::PI * delta * delta;

    let mut scaling = Vec::new();
    for (name, rows) in &tables {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.total.is_finite())
            .map(|r| ((1.0 / r.h).ln(), r.total / (r.h * r.h)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        // reference slope through the mean of this table
        let offset = pts.iter().map(|(x, y)| y - a * x).sum::<f64>() / pts.len() as f64;
        let (xlo, xhi) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, _)| {
                (lo.min(*x), hi.max(*x))
            });
        let reference = Series {
            name: format!("{name}: slope 2 pi delta^2 = {a:.4}"),
            points: vec![(xlo, a * xlo + offset), (xhi, a * xhi + offset)],
            style: Style::Dashed,
        };
        scaling.push(Series {
            name: name.clone(),
            points: pts,
            style: Style::LineAndMarkers,
        });
        scaling.push(reference);
    }
    let mut figures = vec![(
        "energy_scaling.svg",
        Plot {
            title: format!("Energy scaling, delta = {delta}"),
            x_label: "log(1/h)".into(),
            y_label: "E / h^2".into(),
            series: scaling,
        },
    )];

    let mut profiles = Vec::new();
    let mut distances = Vec::new();
    let mut alignments = Vec::new();
    for (name, rows) in &tables {
        let mut dist = Vec::new();
        for r in rows {
            let Some(path) = resolve_snapshot(input, &r.snapshot) else {
                continue;
            };
            let field = read_snapshot(&path, Some(delta))?;
            let h = field.mesh().params().h;
            let radii: Vec<f64> = (0..=24)
                .map(|k| (2.0 * h).max(0.05) * (1.0 / (2.0 * h).max(0.05)).powf(k as f64 / 24.0))
                .filter(|&r| r < 1.0)
                .collect();
            let prof = bending_profile(&field, &radii)?;
            profiles.push(Series {
                name: format!("{name} h={h}"),
                points: radii
                    .iter()
                    .zip(&prof)
                    .map(|(r, b)| ((1.0 / r).ln(), *b))
                    .collect(),
                style: Style::LineAndMarkers,
            });
            let (summary, _) = align_field(&field, cfg.diagnostics.align_rho)?;
            dist.push((h, summary.w22));
            alignments.push(json!({ "table": name, "alignment": summary }));
        }
        if !dist.is_empty() {
            distances.push(Series {
                name: name.clone(),
                points: dist,
                style: Style::LineAndMarkers,
            });
        }
    }
    if !profiles.is_empty() {
        let xmax = profiles
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.0))
            .fold(0.0, f64::max);
        profiles.push(Series {
            name: "2 pi delta^2 log(1/R)".into(),
            points: vec![(0.0, 0.0), (xmax, a * xmax)],
            style: Style::Dashed,
        });
        figures.push((
            "bending_profile.svg",
            Plot {
                title: "Bending energy outside B_R".into(),
                x_label: "log(1/R)".into(),
                y_label: "int_{B_1 \\ B_R} |D^2 y|^2".into(),
                series: profiles,
            },
        ));
        figures.push((
            "aligned_distance.svg",
            Plot {
                title: format!(
                    "Aligned W22 distance to the cone on |x| >= {}",
                    cfg.diagnostics.align_rho
                ),
                x_label: "h".into(),
                y_label: "distance".into(),
                series: distances,
            },
        ));
    }

    // render everything before touching the disk
    let rendered: Vec<(PathBuf, String)> = figures
        .iter()
        .map(|(file, plot)| (cfg.output_dir.join(file), plot.render()))
        .collect();
    let fits: BTreeMap<&String, Option<ScalingFit>> = tables
        .iter()
        .map(|(name, rows)| (name, scaling_fit(rows, delta)))
        .collect();
    let summary = json!({
        "command": "report",
        "input": input,
        "delta": delta,
        "tables": tables,
        "fits": fits,
        "alignments": alignments,
    });
    let mut out = Vec::new();
    for (path, svg) in rendered {
        std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
        out.push(path);
    }
    let json_path = cfg.output_dir.join("report.json");
    write_json(&json_path, &summary)?;
    out.push(json_path);
    Ok(out)
}
