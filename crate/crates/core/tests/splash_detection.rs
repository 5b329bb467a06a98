use viscosplash::conformal::{ConformalMap, DomainClass};
use viscosplash::error::Error;
use viscosplash::fields::{FieldSet, Manifest, RunRecord, Snapshot};
use viscosplash::params::Params;
use viscosplash::picard::{run_to_convergence, PicardConfig};
use viscosplash::scenario::{CurveSpec, Scenario, StressSpec, VelocitySpec};
use viscosplash::splash::{
    check_inward, detect_splash, loglog_slope, perturb_scenario, stability_gap, PerturbationFamily,
};
use viscosplash::tensor::{Sym2, Vec2};

/// U-shaped polygon whose right arm slides left at unit speed. The tilted
/// inner edge from (2, 1) to (2 - t, 2) first meets the left arm's top corner
/// (1, 1.9) at t = 1/0.9.
fn notch(shift: usize) -> (Vec<Vec2>, Vec<Vec2>) {
    let pts = [
        (0.0, 0.0, false),
        (1.5, 0.0, false),
        (3.0, 0.0, false),
        (3.0, 2.0, true),
        (2.0, 2.0, true),
        (2.0, 1.0, false),
        (1.0, 1.0, false),
        (1.0, 1.9, false),
        (0.0, 1.9, false),
        (0.0, 1.0, false),
    ];
    let n = pts.len();
    let mut x = Vec::new();
    let mut v = Vec::new();
    for i in 0..n {
        let (a, b, moving) = pts[(i + shift) % n];
        x.push(Vec2::new(a, b));
        v.push(if moving {
            Vec2::new(-1.0, 0.0)
        } else {
            Vec2::zeros()
        });
    }
    (x, v)
}

fn synthetic_record(shift: usize, times: &[f64]) -> RunRecord {
    let (x0, v) = notch(shift);
    let mut rec = RunRecord::new(Manifest {
        params: Params::default(),
        scenario_id: "notch".into(),
        seed: 0,
        extra: Default::default(),
    });
    for &t in times {
        let x: Vec<Vec2> = x0.iter().zip(&v).map(|(a, u)| a + u * t).collect();
        let n = x.len();
        rec.push(Snapshot {
            t,
            fields: FieldSet {
                velocity: v.clone(),
                pressure: vec![0.0; n],
                stress: vec![Sym2::default(); n],
                flux: x.clone(),
            },
            boundary_conformal: x.clone(),
            boundary_physical: x,
        })
        .unwrap();
    }
    rec
}

fn circle(identity: bool) -> Scenario {
    let mut sc = Scenario::new(
        Params {
            grid_n: 16,
            dt: 0.02,
            t_final: 0.1,
            ..Params::default()
        },
        CurveSpec::Circle {
            center: Vec2::new(2.0, 0.0),
            radius: 1.0,
        },
    );
    sc.conformal.identity_map_mode = identity;
    sc
}

fn record(sc: &Scenario) -> (RunRecord, viscosplash::grid::Grid) {
    let cfg = PicardConfig::default();
    let pb = sc.problem(sc.params.t_final, cfg.beta).unwrap();
    let conv = run_to_convergence(&pb, &cfg).unwrap();
    let m = Manifest {
        params: sc.params.clone(),
        scenario_id: sc.id.clone(),
        seed: 0,
        extra: Default::default(),
    };
    (conv.record(&pb, m).unwrap(), pb.grid().clone())
}

#[test]
fn synthetic_crossing_time_is_bracketed() {
    let times = [0.0, 0.5, 1.0, 1.5, 2.0];
    let rec = synthetic_record(0, &times);
    let dt_bisect = 1e-4;
    let v = detect_splash(&rec, &ConformalMap::Identity, dt_bisect, Some(0.01));
    let t_c = 1.0 / 0.9;
    let t = v.t_star.unwrap();
    assert!(t >= t_c && t - t_c <= dt_bisect, "{t}");
    assert_eq!(v.trace[0].1, DomainClass::Regular);
    assert_eq!(v.trace[3].1, DomainClass::SelfIntersecting);
}

#[test]
fn crossing_time_ignores_marker_labelling() {
    let times = [0.0, 0.5, 1.0, 1.5];
    let base = detect_splash(
        &synthetic_record(0, &times),
        &ConformalMap::Identity,
        1e-5,
        Some(0.01),
    );
    for shift in 1..10 {
        let v = detect_splash(
            &synthetic_record(shift, &times),
            &ConformalMap::Identity,
            1e-5,
            Some(0.01),
        );
        assert_eq!(v.t_star, base.t_star, "shift {shift}");
    }
}

#[test]
fn no_crossing_before_the_window_ends() {
    let rec = synthetic_record(0, &[0.0, 0.5, 1.0]);
    let v = detect_splash(&rec, &ConformalMap::Identity, 1e-4, Some(0.01));
    assert_eq!(v.t_star, None);
}

#[test]
fn zero_amplitude_is_the_base_scenario() {
    let sc = circle(false);
    assert_eq!(perturb_scenario(&sc, 0.0, Vec2::new(1.0, 0.0)).unwrap(), sc);
    assert!(perturb_scenario(&sc, -0.1, Vec2::new(1.0, 0.0)).is_err());
}

#[test]
fn perturbation_shifts_markers_and_stress() {
    let mut sc = circle(false);
    sc.initial_stress = StressSpec::Constant {
        value: [0.1, 0.05, 0.2],
    };
    let b = Vec2::new(0.6, 0.8);
    let eps = 0.04;
    let p = perturb_scenario(&sc, eps, b).unwrap();
    let (c0, c1) = (sc.curve().unwrap(), p.curve().unwrap());
    for (a, q) in c0.markers().iter().zip(c1.markers()) {
        assert!((q - a - b * eps).amax() < 1e-15);
    }
    let (t0, t1) = (sc.setup().unwrap().t0, p.setup().unwrap().t0);
    let ds = eps * (b.x + b.y) / std::f64::consts::SQRT_2;
    for (a, q) in t0.iter().zip(&t1) {
        assert!((q.xx - a.xx - ds).abs() < 1e-15);
        assert!((q.yy - a.yy - ds).abs() < 1e-15);
        assert_eq!(q.xy, a.xy);
    }
    let back = Scenario::from_json(&p.to_json()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn leaving_the_half_plane_is_rejected() {
    let sc = circle(false);
    let err = perturb_scenario(&sc, 1.5, Vec2::new(-1.0, 0.0)).unwrap_err();
    assert!(matches!(err, Error::Geometry(_)), "{err:?}");
}

#[test]
fn family_needs_decreasing_positive_amplitudes_and_unit_direction() {
    let sc = circle(false);
    let b = Vec2::new(1.0, 0.0);
    assert!(PerturbationFamily::new(sc.clone(), vec![0.04, 0.02, 0.01], b).is_ok());
    assert!(PerturbationFamily::new(sc.clone(), vec![0.02, 0.04], b).is_err());
    assert!(PerturbationFamily::new(sc.clone(), vec![0.02, 0.0], b).is_err());
    assert!(PerturbationFamily::new(sc.clone(), vec![], b).is_err());
    assert!(PerturbationFamily::new(sc, vec![0.02], Vec2::new(1.0, 1.0)).is_err());
}

#[test]
fn gap_of_a_run_with_itself_is_zero() {
    let mut sc = circle(false);
    sc.initial_velocity = VelocitySpec::ApproachJets { speed: 0.05 };
    sc.initial_stress = StressSpec::SolventBalance;
    let (rec, grid) = record(&sc);
    let g = stability_gap(&grid, &rec, &rec).unwrap();
    assert_eq!(g.sup, 0.0);
    assert_eq!(g.times, rec.times());
}

#[test]
fn translated_rest_state_has_constant_gap() {
    let sc = circle(true);
    let eps = 0.03;
    let p = perturb_scenario(&sc, eps, Vec2::new(0.0, 1.0)).unwrap();
    let (a, grid) = record(&sc);
    let (b, _) = record(&p);
    let g = stability_gap(&grid, &a, &b).unwrap();
    let area = grid.integrate(&vec![1.0; grid.len()]);
    let expected = eps * area.sqrt();
    for gap in &g.gaps {
        assert!((gap - expected).abs() < 1e-12, "{gap} vs {expected}");
    }
}

#[test]
fn gap_rejects_mismatched_runs() {
    let sc = circle(true);
    let (a, grid) = record(&sc);
    let mut short = circle(true);
    short.params.t_final = 0.06;
    let (b, _) = record(&short);
    assert!(matches!(stability_gap(&grid, &a, &b), Err(Error::Shape(_))));
}

#[test]
fn outward_velocity_fails_the_precondition() {
    let mut sc = Scenario::new(
        Params {
            grid_n: 24,
            ..Params::default()
        },
        CurveSpec::NearSplash {
            delta: 0.005,
            depth: 0.45,
            height: 1.0,
        },
    );
    sc.initial_velocity = VelocitySpec::ApproachJets { speed: -0.5 };
    match check_inward(&sc) {
        Err(Error::Precondition(msg)) => assert!(msg.contains("not inward"), "{msg}"),
        other => panic!("expected a precondition failure, got {other:?}"),
    }
    sc.initial_velocity = VelocitySpec::ApproachJets { speed: 0.5 };
    check_inward(&sc).unwrap();
}

#[test]
fn slope_of_a_power_law() {
    let x = [0.04, 0.02, 0.01];
    let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
    assert!((loglog_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
    assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
}
