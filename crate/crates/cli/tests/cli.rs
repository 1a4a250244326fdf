use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use conesheet::geometry::cone_map;
use conesheet::mesh::{build_mesh, sample_with};
use conesheet::snapshot::write_snapshot;
use conesheet::Params;
use serde_json::Value;

fn conesheet(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conesheet"))
        .args(args)
        .arg("--output")
        .arg(dir)
        .env("RAYON_NUM_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_json(out: &Output) -> Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let v: Value =
        serde_json::from_str(text.trim()).unwrap_or_else(|_| panic!("stderr is not JSON: {text}"));
    assert!(v["error"]["message"].is_string());
    v
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn table(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    assert_eq!(
        r.headers().unwrap(),
        vec![
            "delta",
            "h",
            "total",
            "membrane",
            "bending_raw",
            "iters",
            "grad_norm",
            "snapshot"
        ]
    );
    r.records().map(Result::unwrap).collect()
}

fn num(rec: &csv::StringRecord, col: usize) -> f64 {
    rec[col].parse().unwrap()
}

#[test]
fn ansatz_constant_is_thickness_independent() {
    let dir = tempfile::tempdir().unwrap();
    let out = conesheet(
        dir.path(),
        &[
            "ansatz",
            "--h",
            "0.1,0.05",
            "--n-radial",
            "256",
            "--n-angular",
            "256",
        ],
    );
    ok(&out);
    let rows = table(&dir.path().join("ansatz.csv"));
    assert_eq!(rows.len(), 2);
    let a = std::f64::consts::PI / 2.0;
    let constant = |r: &csv::StringRecord| {
        let h = num(r, 1);
        num(r, 2) / (h * h) - a * (1.0 / h).ln()
    };
    let (c1, c2) = (constant(&rows[0]), constant(&rows[1]));
    assert!((c1 - c2).abs() < 0.01 * c1.abs(), "{c1} vs {c2}");
    // the bending part carries the logarithm
    let b_gap = num(&rows[1], 4) - num(&rows[0], 4);
    assert!((b_gap - a * 2f64.ln()).abs() < 0.05, "{b_gap}");
    let json = read_json(&dir.path().join("ansatz.json"));
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn report_on_empty_directory_fails_without_plots() {
    let dir = tempfile::tempdir().unwrap();
    let input = tempfile::tempdir().unwrap();
    let out = conesheet(
        dir.path(),
        &["report", "--input", input.path().to_str().unwrap()],
    );
    let err = error_json(&out);
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("no energy tables"));
    let svgs = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "svg")
        })
        .count();
    assert_eq!(svgs, 0);
}

#[test]
fn align_of_the_cone_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let p = Params::new(0.5, 0.1).unwrap();
    let m = Arc::new(build_mesh(&p, 128, 128).unwrap());
    let cone = sample_with(m, |x| cone_map(x, p.delta)).unwrap();
    let snap = dir.path().join("cone.csv");
    write_snapshot(&snap, &cone).unwrap();
    ok(&conesheet(
        dir.path(),
        &["align", "--snapshot", snap.to_str().unwrap()],
    ));
    let a = read_json(&dir.path().join("align.json"));
    assert!(a["alignment"]["distance"].as_f64().unwrap() < 1e-10, "{a}");
    assert!(a["alignment"]["w22"].as_f64().unwrap() < 1e-10);
    assert!((a["alignment"]["determinant"].as_f64().unwrap().abs() - 1.0).abs() < 1e-12);

    let out = conesheet(
        dir.path(),
        &[
            "align",
            "--snapshot",
            snap.to_str().unwrap(),
            "--delta",
            "0.3",
        ],
    );
    let err = error_json(&out);
    assert!(
        err["error"]["message"]
            .as_str()
            .unwrap()
            .contains("delta = 0.5"),
        "{err}"
    );

    // the quartic inequality holds on a resolved mesh
    ok(&conesheet(
        dir.path(),
        &["diagnose", "--snapshot", snap.to_str().unwrap()],
    ));
    let d = read_json(&dir.path().join("diagnose.json"));
    assert_eq!(
        d["isoperimetric"]["violations"], 0,
        "{}",
        d["isoperimetric"]["min_slack"]
    );
}

#[test]
fn config_is_strict_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"delta": 0.4, "h_list": [0.2], "mesh": {"n_radial": 24, "n_angular": 24}}"#,
    )
    .unwrap();
    let out = conesheet(
        dir.path(),
        &[
            "ansatz",
            "--config",
            cfg.to_str().unwrap(),
            "--n-angular",
            "32",
        ],
    );
    ok(&out);
    let used = read_json(&dir.path().join("config.json"));
    assert_eq!(used["delta"], 0.4);
    assert_eq!(used["mesh"]["n_radial"], 24);
    assert_eq!(used["mesh"]["n_angular"], 32);
    // defaults are recorded too
    assert_eq!(used["optimizer"]["memory"], 10);
    assert_eq!(used["cutoff"], "septic");

    std::fs::write(
        &cfg,
        r#"{"delta": 0.4, "mesh": {"n_radial": 24, "rings": 3}}"#,
    )
    .unwrap();
    let out = conesheet(dir.path(), &["ansatz", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["kind"], "config");

    let out = conesheet(dir.path(), &["ansatz", "--h", "0.1,-0.2"]);
    assert_eq!(error_json(&out)["error"]["kind"], "config");
    let out = conesheet(dir.path(), &["sideways"]);
    assert_eq!(error_json(&out)["error"]["kind"], "usage");
}

#[test]
fn corrupt_snapshot_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("bad.csv");
    std::fs::write(&snap, "DSHEET1,0.5,0.1,16,16\n0.1,0.0,1,2,3\n").unwrap();
    let out = conesheet(
        dir.path(),
        &["diagnose", "--snapshot", snap.to_str().unwrap()],
    );
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "snapshot");
    assert!(err["error"]["message"].as_str().unwrap().contains("row"));
}

#[test]
fn sweep_report_and_diagnose_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--h",
        "0.2,0.1,0.05",
        "--n-radial",
        "32",
        "--n-angular",
        "32",
        "--max-iterations",
        "300",
    ];
    let run = |cmd: &str, d: &Path| ok(&conesheet(d, &[&[cmd][..], &args[..]].concat()));
    run("sweep", dir.path());
    let rows = table(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(Path::new(&r[7]).is_file(), "{}", &r[7]);
    }
    let sweep = read_json(&dir.path().join("sweep.json"));
    assert!(sweep["fit"]["exponent"].is_f64());
    assert!(sweep["records"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["total"].as_f64() <= r["ansatz_total"].as_f64()));

    // same config and seed, same table
    let again = tempfile::tempdir().unwrap();
    run("sweep", again.path());
    let strip = |rows: Vec<csv::StringRecord>| -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().take(7).map(String::from).collect())
            .collect()
    };
    assert_eq!(
        strip(rows.clone()),
        strip(table(&again.path().join("sweep.csv")))
    );

    run("report", dir.path());
    for name in ["energy_scaling", "bending_profile", "aligned_distance"] {
        let text = std::fs::read_to_string(dir.path().join(format!("{name}.svg"))).unwrap();
        let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        let data = doc
            .root_element()
            .children()
            .find(|n| n.is_comment())
            .unwrap()
            .text()
            .unwrap();
        assert!(data.lines().nth(1).unwrap() == "series,x,y");
        if name == "energy_scaling" {
            // every table value is recoverable from the figure
            for r in &rows {
                let h = num(r, 1);
                let y = num(r, 2) / (h * h);
                let found = data.lines().skip(2).any(|l| {
                    let f: Vec<&str> = l.split(',').collect();
                    f[0] == "sweep" && f[2].parse::<f64>().unwrap() == y
                });
                assert!(found, "missing {y}");
            }
        }
    }
    let report = read_json(&dir.path().join("report.json"));
    assert_eq!(report["alignments"].as_array().unwrap().len(), 3);

    let snap = rows[1][7].to_string();
    ok(&conesheet(
        dir.path(),
        &[
            "diagnose",
            "--snapshot",
            &snap,
            "--n-radial",
            "32",
            "--n-angular",
            "32",
            "--seed",
            "5",
        ],
    ));
    let d = read_json(&dir.path().join("diagnose.json"));
    assert_eq!(d["h"], 0.1);
    assert!(d["isoperimetric"]["violations"].is_u64());
    assert!(d["curvature"]["det_integral"].as_array().unwrap().len() == 7);
}

#[test]
fn minimize_from_snapshot_continues() {
    let dir = tempfile::tempdir().unwrap();
    let small = [
        "--h",
        "0.1",
        "--n-radial",
        "24",
        "--n-angular",
        "24",
        "--max-iterations",
        "5",
    ];
    ok(&conesheet(
        dir.path(),
        &[&["minimize"][..], &small[..]].concat(),
    ));
    let first = read_json(&dir.path().join("minimize.json"));
    let e1 = first["records"][0]["total"].as_f64().unwrap();
    assert!(e1 <= first["records"][0]["initial_total"].as_f64().unwrap());
    let snap = dir.path().join("minimizer_h0.100000.csv");
    let next = tempfile::tempdir().unwrap();
    ok(&conesheet(
        next.path(),
        &[
            "minimize",
            "--init",
            snap.to_str().unwrap(),
            "--max-iterations",
            "5",
        ],
    ));
    let second = read_json(&next.path().join("minimize.json"));
    assert_eq!(second["records"][0]["initial_total"].as_f64().unwrap(), e1);
    assert!(second["records"][0]["total"].as_f64().unwrap() <= e1);
}
