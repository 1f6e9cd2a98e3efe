use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn radpoly(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radpoly"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn radpoly")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = radpoly(dir, args);
    assert!(
        out.status.success(),
        "radpoly {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn simulate_track_eval_on_backoff() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simulate",
            "backoff",
            "--seed",
            "3",
            "--frames-out",
            "f.txt",
            "--gt-out",
            "gt.jsonl",
        ],
    );
    ok(d, &["track", "f.txt", "-o", "poly.jsonl"]);
    let table = ok(
        d,
        &[
            "eval",
            "--polygons",
            "poly.jsonl",
            "--gt",
            "gt.jsonl",
            "--json",
            "r.json",
        ],
    );
    assert!(table.contains("external"), "{table}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_eq!(report["frames"], 200);
    let iou = report["rows"][0]["iou_gt"].as_f64().unwrap();
    assert!(iou > 0.3 && iou <= 1.0, "{iou}");
}

#[test]
fn doppler_compensation_needs_no_poses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("f.txt"),
        "frame 0\n5 0 0.5 -1 1000\n5 0.1 0.5 -1 1000\n5 -0.1 0.5 -1 1000\nframe 0.1\n4.9 0 0.5 -1 1000\n4.9 0.1 0.5 -1 1000\n4.9 -0.1 0.5 -1 1000\n",
    )
    .unwrap();
    let out = radpoly(d, &["track", "f.txt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing pose"));
    let polys = ok(d, &["track", "f.txt", "--doppler-compensation"]);
    assert_eq!(polys.lines().count(), 2);
}

#[test]
fn collide_with_zero_horizon_matches_plain() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simulate",
            "vehicle_pass",
            "--frames",
            "5",
            "--frames-out",
            "f.txt",
            "--gt-out",
            "gt.jsonl",
        ],
    );
    ok(d, &["form", "f.txt", "-o", "poly.jsonl"]);
    let queries: String = (0..200)
        .map(|k| {
            format!(
                "{} {}\n",
                (k % 20) as f64 * 0.9 + 0.05,
                (k / 20) as f64 * 2.1 - 10.0
            )
        })
        .collect();
    fs::write(d.join("q.txt"), queries).unwrap();
    let plain = ok(d, &["collide", "poly.jsonl", "q.txt", "--index", "4"]);
    let zero = ok(
        d,
        &[
            "collide",
            "poly.jsonl",
            "q.txt",
            "--index",
            "4",
            "--dt",
            "0",
        ],
    );
    assert_eq!(plain, zero);
    assert_eq!(plain.lines().count(), 200);
    assert!(plain.contains("inside") && plain.contains("outside"));
}

#[test]
fn sweep_emits_one_row_per_angle() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(
        dir.path(),
        &[
            "sweep-theta",
            "0.5",
            "2",
            "10",
            "--frames",
            "3",
            "--omit-timing",
        ],
    );
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 3, "{table}");
    assert!(rows[2].trim_start().starts_with("10 "));
}

#[test]
fn predict_and_plot_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simulate",
            "pedestrian_pass",
            "--frames",
            "6",
            "--frames-out",
            "f.txt",
            "--gt-out",
            "gt.jsonl",
        ],
    );
    ok(d, &["form", "f.txt", "-o", "poly.jsonl"]);
    ok(
        d,
        &[
            "predict",
            "poly.jsonl",
            "--dt",
            "0.1",
            "-o",
            "pred.jsonl",
            "--series",
            "s.txt",
        ],
    );
    assert_eq!(
        fs::read_to_string(d.join("pred.jsonl"))
            .unwrap()
            .lines()
            .count(),
        6
    );
    assert_eq!(
        fs::read_to_string(d.join("s.txt")).unwrap().lines().count(),
        5
    );
    ok(
        d,
        &[
            "plot",
            "poly.jsonl",
            "--gt",
            "gt.jsonl",
            "--out-dir",
            "svg",
            "--every",
            "2",
        ],
    );
    let mut names: Vec<_> = fs::read_dir(d.join("svg"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["frame_00000.svg", "frame_00002.svg", "frame_00004.svg"]
    );
}

#[test]
fn default_config_is_accepted_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(d, &["default-config"]);
    assert!(text.contains("p_thr = 0.62"));
    fs::write(d.join("c.toml"), text.replace("seed = 42", "seed = 5")).unwrap();
    let table = ok(
        d,
        &[
            "--config",
            "c.toml",
            "eval",
            "--scenario",
            "static_lot",
            "--frames",
            "2",
            "--methods",
            "polygon",
            "--omit-timing",
        ],
    );
    assert!(table.contains("seed 5"), "{table}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(radpoly(d, &["frobnicate"]).status.code(), Some(1));
    let unknown = radpoly(d, &["eval", "--scenario", "garage"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("backoff"));
    assert_eq!(
        radpoly(
            d,
            &["eval", "--scenario", "static_lot", "--methods", "lidar"]
        )
        .status
        .code(),
        Some(1)
    );
    fs::write(d.join("bad.txt"), "frame 0\n1 2 3\n").unwrap();
    let bad = radpoly(d, &["form", "bad.txt"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
    assert_eq!(radpoly(d, &["form", "missing.txt"]).status.code(), Some(2));
}
