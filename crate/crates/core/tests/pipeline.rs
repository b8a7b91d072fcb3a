use std::path::PathBuf;

use omega_square::scenario::{run_pipeline, validate_scenario, Scenario};

fn scenario(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name);
    Scenario::load(&p).unwrap()
}

#[test]
fn shipped_scenarios_validate() {
    for name in [
        "three_points.toml",
        "one_tree.toml",
        "edge_limits.toml",
        "annulus.toml",
        "plane.toml",
    ] {
        let rep = validate_scenario(&scenario(name));
        assert!(rep.is_valid(), "{name}: {:?}", rep.violations);
    }
}

#[test]
fn build_is_deterministic() {
    let sc = scenario("three_points.toml");
    let a = run_pipeline(&sc).unwrap();
    let b = run_pipeline(&sc).unwrap();
    assert_eq!(a.provenance, b.provenance);
    for n in 0..a.family_count() {
        let (pa, pb) = (a.tested_points(n, 5), b.tested_points(n, 5));
        assert_eq!(pa, pb);
        for p in pa {
            assert_eq!(a.psi.iterate(p, 50).unwrap(), b.psi.iterate(p, 50).unwrap());
        }
    }
}

#[test]
fn toml_round_trip() {
    let sc = scenario("one_tree.toml");
    let back = Scenario::from_toml(&sc.to_toml().unwrap()).unwrap();
    assert_eq!(back.to_toml().unwrap(), sc.to_toml().unwrap());
}

#[test]
fn unknown_fields_are_rejected() {
    let base = "version = 1\nname = \"x\"\nmode = \"point-targets\"\n";
    assert!(Scenario::from_toml(base).is_ok());
    assert!(Scenario::from_toml(&format!("{base}bogus = 1\n")).is_err());
}
