use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fpkit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpkit"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn reproduce_single_suite_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpkit(
        &["reproduce", "--suite", "gallery", "--suite", "vip-interval"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.contains("PASS gallery"));
    assert!(s.contains("PASS vip-interval"));
    assert!(dir.path().join("report.json").exists());
    assert!(dir.path().join("gallery.json").exists());
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("iterate.toml"))
        .unwrap()
        .replace(
            "method = \"krasnoselskij\"",
            "method = \"krasnoselskij\"\nexpect_limit = [1.0]",
        );
    let path = dir.path().join("wrong.toml");
    std::fs::write(&path, text).unwrap();
    let o = fpkit(
        &["iterate", path.to_str().unwrap()],
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL start-0"));
    // Partial results are still written.
    assert!(dir.path().join("out/report.json").exists());
    assert!(dir.path().join("out/start-0.trace.csv").exists());
}

#[test]
fn config_errors_exit_one_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "schema_version = 1\nkind = \"certify\"\n[map]\ngallery = \"nope\"\n",
    )
    .unwrap();
    let o = fpkit(&["certify", path.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("map.gallery"));
}

#[test]
fn subcommand_must_match_kind() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpkit(&["vip", &config("certify.toml")], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("expects \"vip\""));
}

#[test]
fn format_and_seed_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpkit(
        &[
            "search",
            &config("search.toml"),
            "--format",
            "json",
            "--seed",
            "3",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let table: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("search.json")).unwrap())
            .unwrap();
    assert_eq!(table.as_array().unwrap().len(), 4);
    assert_eq!(table[0]["delta"], 0.25);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["seed"], 3);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = fpkit(&["certify", &config("certify.toml")], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    for name in ["report.json", "certify-0.json", "certify-2.json"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn timing_flag_records_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpkit(&["reproduce", "--suite", "gallery", "--timing"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["wall_time_ms"].is_u64());
}

#[test]
fn lists_suites() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpkit(&["reproduce", "--list"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), fpkit::reproduce::SUITES.len());
}
