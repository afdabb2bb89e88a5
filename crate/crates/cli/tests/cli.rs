use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use splatnav::synth::{write_demo_scene, DemoOptions};

fn splatnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splatnav")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = splatnav(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn demo(dir: &Path, avatars: usize) -> PathBuf {
    let opts = DemoOptions {
        avatars,
        avatar_gaussians: 1500,
        ..DemoOptions::default()
    };
    write_demo_scene(dir, &opts).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn render_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scene = demo(&dir.path().join("scene"), 2);
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    for out in [&a, &b] {
        ok(&["render", "--scene", s(&scene), "--out", s(out), "--time", "1.5", "--width", "64", "--height", "48", "--pfm"]);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read(dir.path().join("a.depth.f32")).unwrap(), fs::read(dir.path().join("b.depth.f32")).unwrap());
    assert_eq!(fs::read(dir.path().join("a.depth.f32")).unwrap().len(), 64 * 48 * 4);
    assert!(dir.path().join("a.depth.f32.json").exists());
    assert!(dir.path().join("a.depth.pfm").exists());
}

#[test]
fn disabled_avatars_render_like_no_avatars() {
    let dir = tempfile::tempdir().unwrap();
    let with = demo(&dir.path().join("with"), 2);
    let without = demo(&dir.path().join("without"), 0);
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(&with).unwrap()).unwrap();
    for a in cfg["avatars"].as_array_mut().unwrap() {
        a["enabled"] = false.into();
    }
    let disabled = with.with_file_name("disabled.json");
    fs::write(&disabled, cfg.to_string()).unwrap();
    let pose = ["--pose", "2.0,5.0,0", "--width", "48", "--height", "48"];
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    ok(&[&["render", "--scene", s(&disabled), "--out", s(&a)][..], &pose].concat());
    ok(&[&["render", "--scene", s(&without), "--out", s(&b)][..], &pose].concat());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn episode_score_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let scene = demo(&dir.path().join("scene"), 0);
    let out = dir.path().join("random");
    let summary = ok(&["episode", "--scene", s(&scene), "--policy", "random", "--seed", "3", "--episodes", "2", "--max-steps", "40", "--out", s(&out)]);
    assert!(summary.contains("SR"));
    assert!(out.join("episode_000.jsonl").exists() && out.join("episode_001.jsonl").exists());

    let csv = dir.path().join("score.csv");
    ok(&["score", s(&out), "--out", s(&csv)]);
    assert_eq!(fs::read_to_string(&csv).unwrap(), fs::read_to_string(out.join("metrics.csv")).unwrap());

    let replay = dir.path().join("replay");
    let trace = out.join("episode_000.jsonl");
    ok(&["episode", "--scene", s(&scene), "--policy", "replay", "--actions", s(&trace), "--seed", "3", "--max-steps", "40", "--out", s(&replay)]);
    assert_eq!(fs::read(&trace).unwrap(), fs::read(replay.join("episode_000.jsonl")).unwrap());
}

#[test]
fn avatar_episode_records_clearance_and_frames() {
    let dir = tempfile::tempdir().unwrap();
    let scene = demo(&dir.path().join("scene"), 3);
    let out = dir.path().join("run");
    ok(&[
        "episode", "--scene", s(&scene), "--task", "pointnav_avatar", "--seed", "1", "--max-steps", "30",
        "--dump-frames", "--width", "32", "--height", "32", "--out", s(&out),
    ]);
    let text = fs::read_to_string(out.join("episode_000.jsonl")).unwrap();
    let steps: Vec<serde_json::Value> = text.lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!steps.is_empty());
    assert!(steps.iter().any(|v| v["clearance"].is_f64()));
    for v in &steps {
        if let Some(c) = v["clearance"].as_f64() {
            assert!(c >= -1e-6, "{c}");
        }
    }
    assert!(out.join("episode_000/frame_0000.png").exists());
    assert!(out.join(format!("episode_000/frame_{:04}.depth.f32", steps.len())).exists());
}

fn floats(bytes: &[u8]) -> Vec<f32> {
    bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect()
}

#[test]
fn bake_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let scene = demo(&dir.path().join("scene"), 1);
    let bundle = scene.parent().unwrap().join("avatars/a0");
    let caps = bundle.join("capsules.f32");
    let before = fs::read(&caps).unwrap();
    fs::remove_file(&caps).unwrap();
    assert!(ok(&["validate", "--bundle", s(&bundle)]).contains("capsules missing"));
    assert!(ok(&["bake", "--bundle", s(&bundle)]).contains("capsules"));
    // re-baked from the stored f32 blobs, so equal up to float round-off
    let after = floats(&fs::read(&caps).unwrap());
    let before = floats(&before);
    assert_eq!(after.len(), before.len());
    assert!(after.iter().zip(&before).all(|(a, b)| (a - b).abs() <= 1e-5));
    let report = ok(&["validate", "--scene", s(&scene)]);
    assert!(report.contains("avatar 0") && report.trim_end().ends_with("ok"));

    fs::remove_file(bundle.join("inv_bind.f32")).unwrap();
    let out = splatnav(&["validate", "--scene", s(&scene)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("inv_bind.f32"));
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bench.csv");
    ok(&[
        "bench", "--out", s(&csv), "--gaussians", "1000,4000", "--avatars", "0,1", "--frames", "1", "--warmup", "0",
        "--width", "32", "--height", "32",
    ]);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "config,n_gaussians,n_avatars,fps,peak_bytes");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("scene_1000,1000,0,"));
    assert!(lines[4].starts_with("avatars_1,"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!splatnav(&["render", "--bogus"]).status.success());
    assert!(!splatnav(&["episode", "--scene", "/nonexistent.json", "--out", "/tmp/x"]).status.success());
    assert!(!splatnav(&["episode", "--scene", "x", "--out", "y", "--policy", "teleport"]).status.success());
}
