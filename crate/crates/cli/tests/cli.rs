//! Drives the compiled binary through the full workflow: generate clips,
//! train, detect, evaluate, and benchmark descriptors.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smokedet"))
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("binary must launch");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn synth(dir: &Path, scene: &str, out: &str, frames: u32, seed: u64, onset: u32) {
    run_ok(bin().current_dir(dir).args([
        "synth",
        "--scene",
        scene,
        "--out",
        out,
        "--width",
        "160",
        "--height",
        "128",
        "--frames",
        &frames.to_string(),
        "--seed",
        &seed.to_string(),
        "--onset",
        &onset.to_string(),
    ]));
}

#[test]
fn full_workflow_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // default config, with a smaller per-class sample cap to keep the
    // training step quick
    let out = run_ok(bin().args(["init-config"]));
    let mut cfg: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    cfg["svm"]["max_samples_per_class"] = 200.into();
    fs::write(root.join("cfg.json"), cfg.to_string()).unwrap();

    // two clips per class plus a held-out test clip
    synth(root, "plume", "s1", 60, 11, 5);
    synth(root, "plume", "s2", 60, 12, 5);
    synth(root, "gray-mover", "n1", 60, 21, 5);
    synth(root, "gray-mover", "n2", 60, 22, 5);
    synth(root, "plume", "test_clip", 70, 99, 8);
    assert!(root.join("s1/frame_000000.ppm").exists());

    fs::write(root.join("smoke.txt"), "s1\ns2\n").unwrap();
    fs::write(root.join("nonsmoke.txt"), "n1\nn2\n").unwrap();

    let out = run_ok(bin().current_dir(root).args([
        "train",
        "--smoke",
        "smoke.txt",
        "--nonsmoke",
        "nonsmoke.txt",
        "--config",
        "cfg.json",
        "--out",
        "models",
    ]));
    let report = String::from_utf8_lossy(&out.stdout);
    assert!(report.contains("texture: C="), "missing summary: {report}");
    for file in ["texture.json", "spacetime.json", "report.json"] {
        assert!(root.join("models").join(file).exists(), "missing {file}");
    }

    let out = run_ok(bin().current_dir(root).args([
        "detect",
        "--input",
        "test_clip",
        "--config",
        "cfg.json",
        "--texture-model",
        "models/texture.json",
        "--spacetime-model",
        "models/spacetime.json",
        "--metrics",
        "metrics.csv",
        "--dump-frames",
        "dump",
    ]));
    let events = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = events.lines().collect();
    assert!(!lines.is_empty(), "the plume must raise alarms");
    for line in &lines {
        let event: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(event["frame"].is_u64());
        assert!(!event["blocks"].as_array().unwrap().is_empty());
        assert!(event["stages"]["final"].is_u64());
    }
    fs::write(root.join("events.jsonl"), events.as_bytes()).unwrap();

    let metrics = fs::read_to_string(root.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("frame,candidate,motion,texture,spacetime,final,seconds"));
    assert_eq!(metrics.lines().count(), 71, "header plus one row per frame");
    assert!(root.join("dump/frame_000000.ppm").exists());
    assert!(root.join("dump/shi_000069.pgm").exists());

    // every alarm must fall inside the labeled smoke span
    fs::write(root.join("truth.txt"), "frames 70\nsmoke 8 69\n").unwrap();
    let out = run_ok(bin().current_dir(root).args([
        "eval",
        "--events",
        "events.jsonl",
        "--truth",
        "truth.txt",
    ]));
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("false alarms: 0"), "summary: {summary}");
    assert!(!summary.contains("hits: 0"), "summary: {summary}");
}

#[test]
fn bench_descriptors_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();

    // tiny labeled set: smooth ramps against checkerboards
    let mut manifest = String::new();
    for i in 0..12u8 {
        let smooth: Vec<u8> = (0..64).map(|p| (p as u8) * 3 + i).collect();
        let board: Vec<u8> = (0..64)
            .map(|p| if (p / 8 + p % 8 + usize::from(i)) % 2 == 0 { 30 } else { 220 })
            .collect();
        for (name, pixels, label) in
            [("s", &smooth, "smoke"), ("n", &board, "non-smoke")]
        {
            let file = format!("{name}{i}.pgm");
            let mut bytes = b"P5\n8 8\n255\n".to_vec();
            bytes.extend_from_slice(pixels);
            fs::write(root.join(&file), bytes).unwrap();
            manifest.push_str(&format!("{file}\t{label}\n"));
        }
    }
    fs::write(root.join("set.tsv"), manifest).unwrap();

    run_ok(bin().current_dir(root).args([
        "bench-descriptors",
        "--dataset",
        "set.tsv",
        "--kernels",
        "MTS,CS-LBP",
        "--out",
        "report.csv",
    ]));
    let csv = fs::read_to_string(root.join("report.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "kernel,accuracy,extract_s,dims,recognize_s");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("MTS,"));
    assert!(lines[2].starts_with("CS-LBP,"));
    for line in &lines[1..] {
        let acc: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }
}

#[test]
fn detect_rejects_a_missing_input() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(root.join("cfg.json"), "{}").unwrap();
    let out = bin()
        .current_dir(root)
        .args([
            "detect",
            "--input",
            "nowhere",
            "--config",
            "cfg.json",
            "--texture-model",
            "missing.json",
            "--spacetime-model",
            "missing.json",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr: {stderr}");
}
