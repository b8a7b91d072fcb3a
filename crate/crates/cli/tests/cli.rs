use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_omega-square"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

#[test]
fn validate_accepts_shipped_scenario() {
    let out = bin()
        .arg("validate")
        .arg(scenario("three_points.toml"))
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_scenario_is_an_error() {
    let out = bin()
        .args(["validate", "/nonexistent/x.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_scenario_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(scenario("three_points.toml")).unwrap();
    // a nonpositive epsilon breaks the steering budget
    let bad = text.replace("epsilon = 0.2", "epsilon = -1.0");
    std::fs::write(&p, bad).unwrap();
    let out = bin().arg("validate").arg(&p).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn export_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("export")
        .arg(scenario("three_points.toml"))
        .arg("-o")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "build.json",
        "geometry.csv",
        "steering_stages.json",
        "psi.json",
        "xi.json",
        "orbit_000.csv",
    ] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("orbit_000.csv")).unwrap();
    assert!(csv.starts_with("step,r,s\n"));
}

#[test]
fn plane_writes_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("plane")
        .arg(scenario("plane.toml"))
        .arg("-o")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("plane_orbit_000.csv")).unwrap();
    assert!(csv.starts_with("step,x,y\n"));
}
