use std::process::Command;

use dkp_core::boson::{BosonError, GroupElementSpec};
use dkp_core::cli::{
    emit_report, load_group_spec, run_check_suite, Check, CliError, Format, Report, SessionConfig, Status, Suite,
    Truncation,
};

fn small(n: u32, suites: &[Suite]) -> SessionConfig {
    SessionConfig { e_max: 4, w_max: 4, tail: 4, window: 4, lam_window: 10 * n as i64, suites: suites.to_vec(), jobs: 1, ..SessionConfig::new(n) }
}

fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn group_spec_files() {
    let dir = tempfile::tempdir().unwrap();
    let id = load_group_spec(&write(&dir, "id.json", r#"{"factors":[]}"#)).unwrap();
    assert_eq!(id, GroupElementSpec::identity());
    let a = load_group_spec(&write(&dir, "a.json", r#"{"factors":[{"alpha":[1,"-1/2n"],"param":"1"}]}"#)).unwrap();
    assert_eq!(a, GroupElementSpec::alpha(1, "-1/2n", "1"));
    let bad = load_group_spec(&write(&dir, "bad.json", r#"{"factors":[{"alpha":[1,"-1/x"],"param":"1"}]}"#));
    assert!(matches!(bad, Err(CliError::Group(BosonError::Parse(_)))), "{bad:?}");
    let odd = load_group_spec(&write(&dir, "odd.json", r#"{"factors":[{"gamma":[1,"1"],"param":"1"}]}"#));
    assert!(matches!(odd, Err(CliError::Group(BosonError::UnsupportedGenerator(_)))), "{odd:?}");
    let missing = load_group_spec(&dir.path().join("nope.json"));
    assert!(matches!(missing, Err(CliError::Io { .. })));
}

#[test]
fn relations_small_all_pass() {
    let rep = run_check_suite(&small(1, &[Suite::Relations])).unwrap();
    assert!(!rep.checks.is_empty());
    assert!(rep.all_pass(), "{rep:?}");
}

#[test]
fn hirota_on_identity_orbit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SessionConfig {
        group_spec: Some(write(&dir, "id.json", r#"{"factors":[]}"#)),
        ..small(2, &[Suite::Hirota])
    };
    let rep = run_check_suite(&cfg).unwrap();
    assert_eq!(rep.checks.len(), 2 * 3 * 4 * 2);
    for c in &rep.checks {
        assert_eq!(c.status, Status::Pass, "{c:?}");
        assert!(c.leading.is_empty());
        assert!(c.truncation.bound >= 4);
    }
}

#[test]
fn checks_are_sorted_and_unique() {
    let rep = run_check_suite(&small(1, &[Suite::Grassmann, Suite::Wcon])).unwrap();
    let ids: Vec<&str> = rep.checks.iter().map(|c| c.id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(ids, sorted);
}

#[test]
fn report_is_independent_of_jobs() {
    let base = small(2, &[Suite::Pdo, Suite::Grassmann, Suite::Correspondence]);
    let a = emit_report(&run_check_suite(&base).unwrap(), Format::Json);
    for jobs in [0, 2, 3] {
        let b = emit_report(&run_check_suite(&SessionConfig { jobs, ..base.clone() }).unwrap(), Format::Json);
        assert_eq!(a, b, "jobs={jobs}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small(1, &[Suite::Relations]);
    c.lam_window = 1;
    assert!(matches!(run_check_suite(&c), Err(CliError::InvalidConfig(_))));
    let c = SessionConfig { n: 0, ..small(1, &[]) };
    assert!(matches!(run_check_suite(&c), Err(CliError::InvalidConfig(_))));
}

#[test]
fn report_schema() {
    assert_eq!(emit_report(&Report::default(), Format::Json), b"{\"checks\":[]}");
    let one = Report {
        checks: vec![Check {
            id: "x/y".into(),
            anchor: "topic".into(),
            status: Status::Pass,
            summary: "ok".into(),
            leading: vec![],
            truncation: Truncation { kind: "weight", bound: 6, tail: None },
        }],
    };
    let s = String::from_utf8(emit_report(&one, Format::Json)).unwrap();
    assert_eq!(
        s,
        r#"{"checks":[{"id":"x/y","anchor":"topic","status":"pass","summary":"ok","leading":[],"truncation":{"kind":"weight","bound":6}}]}"#
    );
    let mut bad = one.clone();
    bad.checks[0].status = Status::Fail;
    bad.checks[0].leading = vec!["3·q1_0^2".into()];
    let v: serde_json::Value = serde_json::from_slice(&emit_report(&bad, Format::Json)).unwrap();
    assert_eq!(v["checks"][0]["leading"][0], "3·q1_0^2");
    let text = String::from_utf8(emit_report(&bad, Format::Text)).unwrap();
    assert!(text.starts_with("FAIL"));
    assert!(text.contains("3·q1_0^2"));
}

fn dkp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dkp"))
}

#[test]
fn binary_exit_codes() {
    let out = dkp()
        .args(["--n", "1", "--e-max", "3", "--w-max", "3", "--tail", "3", "--suite", "grassmann", "--jobs", "1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["status"] == "pass"));

    let out = dkp().args(["--suite", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown suite"));
}

#[test]
fn binary_writes_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.txt");
    let st = dkp()
        .args(["--n", "2", "--e-max", "2", "--w-max", "2", "--tail", "2", "--suite", "relations", "--format", "text", "--jobs", "1"])
        .arg("--out")
        .arg(&path)
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("relations/clifford"));
    assert!(text.trim_end().ends_with("0 fail, 0 inconclusive"));
}
