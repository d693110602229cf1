use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mugenforge::codec::{deserialize_episode, serialize_episode};
use mugenforge::media::decode_png;
use mugenforge_core::render::{render_semantic, RenderConfig};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mugenforge")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every file under `dir` except summaries, by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().unwrap() != "summary.json" {
                out.insert(path.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn summary(dir: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn generation_is_idempotent_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["gen", "--seeds", "10..22", "--policy", "mixed", "--theme", "alternate", "--workers", "1", "--out", p(&a)]);
    ok(&["gen", "--seeds", "10..22", "--policy", "mixed", "--theme", "alternate", "--workers", "3", "--out", p(&b)]);
    let sa = snapshot(&a);
    assert_eq!(sa.len(), 13);
    assert_eq!(sa, snapshot(&b));
    let mut sa2 = summary(&a);
    let mut sb2 = summary(&b);
    sa2["elapsed_ms"] = Value::Null;
    sb2["elapsed_ms"] = Value::Null;
    assert_eq!(sa2, sb2);
    assert_eq!(sa2["outputs"], 12);
    assert!(a.join("level-000010.mugen.json").exists());
    let index = std::fs::read_to_string(a.join("index.jsonl")).unwrap();
    let seeds: Vec<u64> = index.lines().map(|l| serde_json::from_str::<Value>(l).unwrap()["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, (10..22).collect::<Vec<_>>());
    // Running again over existing output rewrites the same bytes.
    ok(&["gen", "--seeds", "10..22", "--policy", "mixed", "--theme", "alternate", "--out", p(&a)]);
    assert_eq!(snapshot(&a), sa);
}

#[test]
fn verify_reports_exact_replays_and_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    ok(&["gen", "--seeds", "0..6", "--policy", "profile-05", "--out", p(&eps)]);
    assert_eq!(ok(&["verify", "--in", p(&eps)]).trim(), "6/6 exact replay");

    let file = eps.join("level-000003.mugen.json");
    let mut ep = deserialize_episode(&std::fs::read(&file).unwrap()).unwrap();
    ep.frames[40].mugen.position.1 += 0.25;
    ep.checksum = ep.compute_checksum();
    std::fs::write(&file, serialize_episode(&ep).unwrap()).unwrap();
    let out = run(&["verify", "--in", p(&eps)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "5/6 exact replay");
    assert!(String::from_utf8_lossy(&out.stderr).contains("level-000003: replay diverges at frame 40"));

    std::fs::write(&file, b"{\"schema_version\":").unwrap();
    let out = run(&["verify", "--in", p(&eps)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed episode file"));
}

#[test]
fn clip_outputs_follow_the_clip_count() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    ok(&["gen", "--seeds", "30..36", "--policy", "idle", "--out", p(&eps)]);
    ok(&["gen", "--seeds", "36..40", "--policy", "profile-02", "--out", p(&eps)]);
    let frames: u32 = std::fs::read_dir(&eps)
        .unwrap()
        .filter_map(|e| {
            let path = e.unwrap().path();
            path.to_str().unwrap().ends_with(".mugen.json").then(|| deserialize_episode(&std::fs::read(path).unwrap()).unwrap())
        })
        .map(|ep| ep.frame_count() / 96)
        .sum();
    let text = tmp.path().join("text");
    ok(&["autotext", "--in", p(&eps), "--clips", "--out", p(&text)]);
    let captions = std::fs::read_to_string(text.join("captions.jsonl")).unwrap();
    assert_eq!(captions.lines().count() as u32, frames);
    assert!(captions.lines().all(|l| serde_json::from_str::<Value>(l).unwrap()["text"].as_str().unwrap().starts_with("Mugen")));

    let audio = tmp.path().join("audio");
    ok(&["audio", "--in", p(&eps.join("level-000030.mugen.json")), "--clips", "--out", p(&audio)]);
    let wav = hound::WavReader::open(audio.join("level-000030/clip-000.wav")).unwrap();
    assert_eq!(wav.len(), 70_560);
    assert_eq!(std::fs::read_dir(audio.join("level-000030")).unwrap().count(), 2 * 6);

    let split = tmp.path().join("split");
    ok(&["dataset-split", "--in", p(&eps), "--seed", "4", "--out", p(&split)]);
    let first = std::fs::read(split.join("clips.jsonl")).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count() as u32, frames);
    ok(&["dataset-split", "--in", p(&eps), "--seed", "4", "--out", p(&split)]);
    assert_eq!(std::fs::read(split.join("clips.jsonl")).unwrap(), first);
}

#[test]
fn rendered_semantic_maps_decode_to_the_library_output() {
    let tmp = tempfile::tempdir().unwrap();
    let eps = tmp.path().join("eps");
    ok(&["gen", "--seeds", "50..51", "--theme", "space", "--out", p(&eps)]);
    let file = eps.join("level-000050.mugen.json");
    let out = tmp.path().join("frames");
    ok(&["render", "--in", p(&file), "--res", "96", "--fps-subsample", "8", "--out", p(&out)]);
    let ep = deserialize_episode(&std::fs::read(&file).unwrap()).unwrap();
    let manifest: Value = serde_json::from_slice(&std::fs::read(out.join("level-000050/manifest.json")).unwrap()).unwrap();
    let frames: Vec<u32> = manifest["frames"].as_array().unwrap().iter().map(|f| f.as_u64().unwrap() as u32).collect();
    assert_eq!(frames.len() as u32, ep.frame_count() / 96 * 8);
    let cfg = RenderConfig::new(96).unwrap();
    for &f in frames.iter().take(3) {
        let png = std::fs::read(out.join(format!("level-000050/semantic/frame-{f:05}.png"))).unwrap();
        let (w, h, ch, data) = decode_png(&png).unwrap();
        assert_eq!((w, h, ch), (96, 96, 1));
        assert_eq!(data, render_semantic(&ep, f, &cfg).unwrap().classes);
    }
    let palette: Value = serde_json::from_slice(&std::fs::read(out.join("level-000050/palette.json")).unwrap()).unwrap();
    assert_eq!(palette[0]["name"], "background");
}

#[test]
fn metrics_from_score_files() {
    let tmp = tempfile::tempdir().unwrap();
    let s = tmp.path().join("s.csv");
    std::fs::write(&s, "0.9,0.1,0.0\n0.2,0.1,0.8\n0.0,0.3,0.7\n").unwrap();
    let out = tmp.path().join("m");
    ok(&["metrics", "--scores", p(&s), "--ks", "1,2,3", "--out", p(&out)]);
    let m: Value = serde_json::from_slice(&std::fs::read(out.join("metrics.json")).unwrap()).unwrap();
    let r1 = m["recall"]["r@1"].as_f64().unwrap();
    assert!((r1 - 2.0 / 3.0).abs() < 1e-4);
    assert_eq!(m["recall"]["r@3"].as_f64().unwrap(), 1.0);

    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3\n").unwrap();
    assert_eq!(run(&["metrics", "--scores", p(&bad)]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    for args in [
        vec!["gen", "--seeds", "4..4", "--out", p(&out)],
        vec!["gen", "--seeds", "0..2", "--policy", "nobody", "--out", p(&out)],
        vec!["gen", "--seeds", "0..2"],
        vec!["gen", "--seeds", "0..2", "--workers", "0", "--out", p(&out)],
        vec!["render", "--in", p(&out), "--res", "32", "--out", p(&out)],
        vec!["render", "--in", p(&out), "--fps-subsample", "10", "--out", p(&out)],
        vec!["metrics"],
    ] {
        assert_eq!(run(&args).status.code(), Some(2), "{args:?}");
    }
    assert!(!out.exists());
}

#[test]
fn configuration_overrides_presets() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(
        &cfg,
        "run_seed = 7\n[level]\nmonsters = 5\n[[presets]]\nname = \"tester\"\ncoin_greed = 1.0\nrisk_tolerance = 0.5\njump_propensity = 0.1\nclimb_preference = 0.5\ndither = 0.0\n",
    )
    .unwrap();
    let eps = tmp.path().join("eps");
    ok(&["gen", "--seeds", "0..3", "--policy", "tester", "--config", p(&cfg), "--out", p(&eps)]);
    // The custom preset is only known through the configuration.
    assert_eq!(run(&["verify", "--in", p(&eps)]).status.code(), Some(1));
    assert_eq!(ok(&["verify", "--in", p(&eps), "--config", p(&cfg)]).trim(), "3/3 exact replay");
    let ep = deserialize_episode(&std::fs::read(eps.join("level-000001.mugen.json")).unwrap()).unwrap();
    assert_eq!(ep.level.monsters().count(), 5);
    // The run seed flag wins over the configured one.
    let other = tmp.path().join("other");
    ok(&["gen", "--seeds", "0..3", "--policy", "tester", "--config", p(&cfg), "--seed", "8", "--out", p(&other)]);
    let reseeded = deserialize_episode(&std::fs::read(other.join("level-000001.mugen.json")).unwrap()).unwrap();
    assert_eq!(reseeded.level, ep.level);
    assert_ne!(reseeded.policy_seed, ep.policy_seed);

    std::fs::write(&cfg, "unknown_key = 1\n").unwrap();
    assert_eq!(run(&["gen", "--seeds", "0..1", "--config", p(&cfg), "--out", p(&eps)]).status.code(), Some(1));
}
