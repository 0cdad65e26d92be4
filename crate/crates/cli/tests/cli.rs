use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn actrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actrack"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("spawn actrack")
}

fn ok(args: &[&str]) -> Output {
    let out = actrack(args);
    assert!(
        out.status.success(),
        "actrack {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) {
    let mut args = vec!["simulate", "--out", p(dir), "--frames", "10", "--cells", "3"];
    args.extend_from_slice(extra);
    ok(&args);
}

fn tra_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .find(|l| l.starts_with("TRA: "))
        .expect("TRA line")
        .to_owned()
}

#[test]
fn simulate_track_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, res) = (tmp.path().join("sim"), tmp.path().join("res"));
    simulate(&sim, &[]);
    let out = ok(&[
        "track",
        "--images",
        p(&sim.join("images")),
        "--masks",
        p(&sim.join("gt")),
        "--out",
        p(&res),
    ]);
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.contains("k=2.5 cutoff=0.01"), "{log}");

    let out = ok(&["eval", "--gt", p(&sim.join("gt")), "--res", p(&res)]);
    assert_eq!(tra_line(&out), "TRA: 1.000000");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(res.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["k"], 2.5);
}

#[test]
fn reference_scores_perfectly_against_itself() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &["--mode", "snap", "--drift", "0.3"]);
    let gt = tmp.path().join("gt");
    let out = ok(&["eval", "--gt", p(&gt), "--res", p(&gt)]);
    assert_eq!(tra_line(&out), "TRA: 1.000000");
}

#[test]
fn sixteen_bit_input_tracks_like_eight_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate(&a, &[]);
    simulate(&b, &["--bit-depth", "16"]);
    for d in [&a, &b] {
        ok(&[
            "track",
            "--images",
            p(&d.join("images")),
            "--masks",
            p(&d.join("gt")),
            "--out",
            p(&d.join("res")),
        ]);
    }
    assert_eq!(
        fs::read(a.join("res/res_track.txt")).unwrap(),
        fs::read(b.join("res/res_track.txt")).unwrap()
    );
}

#[test]
fn activity_writes_maps_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, out) = (tmp.path().join("sim"), tmp.path().join("act"));
    simulate(&sim, &[]);
    ok(&[
        "activity",
        "--images",
        p(&sim.join("images")),
        "--masks",
        p(&sim.join("gt")),
        "--out",
        p(&out),
    ]);
    assert!(out.join("activity000.tif").is_file());
    assert!(out.join("activity009.tif").is_file());
    let csv = fs::read_to_string(out.join("activities.csv")).unwrap();
    assert!(csv.lines().count() > 10);
}

#[test]
fn downsampled_reference_still_scores_itself_perfectly() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, half) = (tmp.path().join("sim"), tmp.path().join("half"));
    simulate(&sim, &[]);
    ok(&[
        "downsample",
        "--images",
        p(&sim.join("images")),
        "--gt",
        p(&sim.join("gt")),
        "--factor",
        "2",
        "--out",
        p(&half),
    ]);
    assert_eq!(fs::read_dir(half.join("images")).unwrap().count(), 5);
    let out = ok(&["eval", "--gt", p(&half.join("gt")), "--res", p(&half.join("gt"))]);
    assert_eq!(tra_line(&out), "TRA: 1.000000");
}

#[test]
fn missing_frame_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    fs::remove_file(tmp.path().join("images/t003.tif")).unwrap();
    let out = actrack(&[
        "track",
        "--images",
        p(&tmp.path().join("images")),
        "--masks",
        p(&tmp.path().join("gt")),
        "--out",
        p(&tmp.path().join("res")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("missing frame") && err.contains("003"), "{err}");
}

#[test]
fn bad_parameters_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    simulate(tmp.path(), &[]);
    let images = tmp.path().join("images");
    let gt = tmp.path().join("gt");
    let out = actrack(&[
        "track",
        "--images",
        p(&images),
        "--masks",
        p(&gt),
        "--out",
        "x",
        "--g-cutoff",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g-cutoff"));

    assert_eq!(actrack(&["track", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        actrack(&["simulate", "--out", "x", "--bit-depth", "12"]).status.code(),
        Some(2)
    );
}
