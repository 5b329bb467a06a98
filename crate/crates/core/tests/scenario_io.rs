use std::fs;

use viscosplash::error::Error;
use viscosplash::params::Params;
use viscosplash::scenario::{load_scenario, CurveSpec, Scenario, StressSpec, VelocitySpec};
use viscosplash::splash::perturb_scenario;
use viscosplash::tensor::Vec2;

const MINIMAL: &str = r#"{ "curve": { "kind": "circle", "center": [2.0, 0.0], "radius": 1.0 } }"#;

fn pointer_of(text: &str) -> String {
    match Scenario::from_json(text) {
        Err(Error::Config { pointer, .. }) => pointer,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn minimal_file_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.json");
    fs::write(&path, MINIMAL).unwrap();
    let sc = load_scenario(&path).unwrap();
    assert_eq!(sc.params, Params::default());
    assert_eq!(sc.initial_velocity, VelocitySpec::Rest);
    assert_eq!(sc.initial_stress, StressSpec::Zero);
    assert!(!sc.conformal.identity_map_mode);
    assert_eq!(sc.conformal.cut_direction, Vec2::new(-1.0, 0.0));
    assert_eq!(sc.id, "scenario");
}

#[test]
fn kappa_out_of_range_names_its_field() {
    let text = r#"{ "params": { "kappa": 1.2 },
        "curve": { "kind": "circle", "center": [2.0, 0.0], "radius": 1.0 } }"#;
    match Scenario::from_json(text) {
        Err(Error::Param { path, .. }) => assert_eq!(path, "/params/kappa"),
        other => panic!("expected a parameter error, got {other:?}"),
    }
}

#[test]
fn missing_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_scenario(&dir.path().join("absent.json")).unwrap_err();
    assert!(matches!(err, Error::Config { .. }), "{err:?}");
}

#[test]
fn schema_errors_carry_json_pointers() {
    assert_eq!(
        pointer_of(r#"{ "curve": { "kind": "circle", "center": [2.0, 0.0], "radius": "one" } }"#),
        "/curve/radius"
    );
    assert_eq!(
        pointer_of(
            r#"{ "params": { "dt": [] }, "curve": { "kind": "circle", "center": [2, 0], "radius": 1 } }"#
        ),
        "/params/dt"
    );
    assert_eq!(
        pointer_of(r#"{ "curve": { "kind": "markers", "points": [[3, 0], [2, "x"]] } }"#),
        "/curve/points/1/1"
    );
    let p = pointer_of(
        r#"{ "curve": { "kind": "circle", "center": [2, 0], "radius": 1 }, "colour": 3 }"#,
    );
    assert_eq!(p, "/colour");
    assert!(Scenario::from_json(r#"{ "curve": { "kind": "torus" } }"#).is_err());
    assert!(Scenario::from_json("not json").is_err());
}

fn samples() -> Vec<Scenario> {
    let mut a = Scenario::new(
        Params {
            weissenberg: 3.5,
            kappa: 0.25,
            grid_n: 24,
            dt: 1.0 / 3.0,
            ..Params::default()
        },
        CurveSpec::NearSplash {
            delta: 0.005,
            depth: 0.45,
            height: 1.0,
        },
    );
    a.id = "bean".into();
    a.initial_velocity = VelocitySpec::ApproachJets { speed: 0.5 };
    a.initial_stress = StressSpec::SolventBalance;
    let mut b = Scenario::new(
        Params::default(),
        CurveSpec::Ellipse {
            center: Vec2::new(0.1, -0.2),
            a: 1.5,
            b: 0.7,
        },
    );
    b.conformal.identity_map_mode = true;
    b.initial_velocity = VelocitySpec::Linear {
        matrix: [[0.1, 0.2], [0.3, -0.1]],
        center: Vec2::new(0.1, 0.2),
    };
    b.initial_stress = StressSpec::Gaussian {
        amplitude: 0.3,
        center: Vec2::new(0.0, 0.1),
        width: 0.4,
    };
    let c = perturb_scenario(&a, 0.02, Vec2::new(0.6, 0.8)).unwrap();
    let mut d = Scenario::new(
        Params::default(),
        CurveSpec::Markers {
            points: vec![
                Vec2::new(3.0, 0.0),
                Vec2::new(2.0, 1.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(2.0, -1.0),
            ],
        },
    );
    d.initial_velocity = VelocitySpec::RigidRotation {
        omega: -0.1,
        center: Vec2::new(2.0, 0.0),
    };
    d.initial_stress = StressSpec::Constant {
        value: [0.1, 0.0, 0.1],
    };
    vec![a, b, c, d]
}

#[test]
fn round_trip_is_exact() {
    for sc in samples() {
        let back = Scenario::from_json(&sc.to_json()).unwrap();
        assert_eq!(back, sc);
        assert_eq!(back.hash(), sc.hash());
    }
}

#[test]
fn hash_tracks_content() {
    let s = samples();
    let mut t = s[0].clone();
    assert_eq!(t.hash(), s[0].hash());
    t.params.dt *= 1.0 + f64::EPSILON;
    assert_ne!(t.hash(), s[0].hash());
    assert_eq!(s[0].hash().len(), 64);
}

#[test]
fn file_form_tags_families_with_kind() {
    let sc = &samples()[0];
    let doc: serde_json::Value = serde_json::from_str(&sc.to_json()).unwrap();
    assert_eq!(doc["curve"]["kind"], "near_splash");
    assert_eq!(doc["initial_velocity"]["kind"], "approach_jets");
    assert_eq!(
        doc["initial_stress"],
        serde_json::json!({ "kind": "solvent_balance" })
    );
    let p = pointer_of(r#"{ "curve": { "center": [2, 0], "radius": 1 } }"#);
    assert_eq!(p, "/curve");
}
