use std::path::Path;
use std::process::{Command, Output};

fn hoi2bot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hoi2bot")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path) {
    let o = hoi2bot(&["fixture", s(dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn run_on_fixture_succeeds() {
    let d = tempfile::tempdir().unwrap();
    fixture(d.path());
    let cfg = d.path().join("config.toml");
    let out = d.path().join("out");
    let o = hoi2bot(&["--config", s(&cfg), "--jobs", "2", "run", s(&d.path().join("clips")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.json").is_file());
    assert!(out.join("metrics.csv").is_file());
    assert!(out.join("pick_place/base/joints_arm6.jsonl").is_file());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    fixture(d.path());
    let clips = d.path().join("clips");
    let out = d.path().join("out");

    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "[penetration]\nvoxel = -1.0\n").unwrap();
    let o = hoi2bot(&["--config", s(&bad), "run", s(&clips), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = hoi2bot(&["--config", s(&d.path().join("missing.toml")), "run", s(&clips), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let o = hoi2bot(&["--robot", "nope", "run", s(&clips), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));

    let broken = d.path().join("broken");
    std::fs::create_dir_all(&broken).unwrap();
    std::fs::write(broken.join("manifest.json"), r#"{"schema_version": 9, "id": "x", "fps": 30, "hand": "h.jsonl"}"#).unwrap();
    let o = hoi2bot(&["run", s(&broken), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));

    let empty = d.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let o = hoi2bot(&["run", s(&empty), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no clips"));
}

#[test]
fn stage_subcommands() {
    let d = tempfile::tempdir().unwrap();
    fixture(d.path());
    let cfg = d.path().join("config.toml");
    let clip = d.path().join("clips/pick_place");

    let canon = d.path().join("canon");
    let o = hoi2bot(&["--config", s(&cfg), "canonicalize", s(&clip), "-o", s(&canon)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(canon.join("hand.jsonl").is_file() && canon.join("canonical.json").is_file());

    let traj = d.path().join("traj.jsonl");
    let o = hoi2bot(&["--config", s(&cfg), "retarget", s(&clip), "-o", s(&traj)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("whole_hand"));

    let o = hoi2bot(&["--config", s(&cfg), "check", s(&clip)]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["checked"], true);

    let aug = d.path().join("aug");
    let o = hoi2bot(&[
        "--seed", "3", "augment", s(&traj), "--object", s(&canon.join("object.jsonl")), "--count", "2", "-o", s(&aug),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(aug.join("aug0/trajectory.jsonl").is_file());
    assert!(aug.join("aug1/lineage.json").is_file());

    let rep = d.path().join("replay");
    let o = hoi2bot(&["--config", s(&cfg), "--robot", "arm6", "replay", s(&traj), "-o", s(&rep)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(rep.join("joints_arm6.jsonl").is_file());

    let o = hoi2bot(&["metrics", s(&traj), "--object", s(&canon.join("object.jsonl"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8_lossy(&o.stdout);
    assert!(csv.starts_with("id,chamfer_cm"));
    assert_eq!(csv.lines().count(), 2);
}
