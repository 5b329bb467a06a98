use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use viscosplash_ffi::*;

fn reference_json() -> CString {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.json");
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { vs_last_error(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

fn scenario() -> *mut VsScenario {
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_from_json(reference_json().as_ptr(), &mut sc) },
        VsStatus::Ok
    );
    assert!(!sc.is_null());
    sc
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(vs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn null_arguments_are_reported() {
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_from_json(ptr::null(), &mut sc) },
        VsStatus::NullPointer
    );
    assert!(sc.is_null());
    assert!(last_error().contains("json"));
    assert_eq!(
        unsafe { vs_scenario_from_json(reference_json().as_ptr(), ptr::null_mut()) },
        VsStatus::NullPointer
    );
    let mut h = 0.0;
    assert_eq!(
        unsafe { vs_run_contraction(ptr::null(), ptr::null_mut(), &mut h) },
        VsStatus::NullPointer
    );
    unsafe {
        vs_scenario_free(ptr::null_mut());
        vs_run_free(ptr::null_mut());
        vs_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_params_carry_pointer_and_clear_on_success() {
    let bad = CString::new(
        r#"{"params":{"kappa":1.5},"curve":{"kind":"circle","center":[2,0],"radius":1}}"#,
    )
    .unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_from_json(bad.as_ptr(), &mut sc) },
        VsStatus::Param
    );
    assert!(last_error().contains("/params/kappa"), "{}", last_error());
    let full = unsafe { vs_last_error(ptr::null_mut(), 0) };
    let mut tiny = [0 as c_char; 4];
    assert_eq!(
        unsafe { vs_last_error(tiny.as_mut_ptr(), tiny.len()) },
        full
    );
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
    let ok = scenario();
    assert_eq!(last_error(), "");
    unsafe { vs_scenario_free(ok) };
}

#[test]
fn missing_file_is_a_config_error() {
    let p = CString::new("/nonexistent/scenario.json").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_load(p.as_ptr(), &mut sc) },
        VsStatus::Config
    );
}

#[test]
fn scenario_json_round_trips() {
    let sc = scenario();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { vs_scenario_to_json(sc, &mut s) }, VsStatus::Ok);
    let mut again = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_from_json(s, &mut again) },
        VsStatus::Ok
    );
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { vs_scenario_to_json(again, &mut s2) }, VsStatus::Ok);
    unsafe {
        assert_eq!(CStr::from_ptr(s), CStr::from_ptr(s2));
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("\"kind\""));
        vs_string_free(s);
        vs_string_free(s2);
        vs_scenario_free(sc);
        vs_scenario_free(again);
    }
}

#[test]
fn horizon_matches_formula_and_rejects_bad_input() {
    let mut h = 0.0;
    assert_eq!(
        unsafe { vs_max_horizon(1.0, 0.5, 2.0, &mut h) },
        VsStatus::Ok
    );
    assert!((h - 0.5f64).abs() < 1e-15);
    assert_eq!(
        unsafe { vs_max_horizon(-1.0, 0.5, 2.0, &mut h) },
        VsStatus::Param
    );
}

#[test]
fn simulate_and_read_snapshots() {
    let sc = scenario();
    let cfg = vs_config_default();
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { vs_run_simulate(sc, &cfg, 7, &mut run) },
        VsStatus::Ok,
        "{}",
        last_error()
    );
    let (mut snaps, mut nodes) = (0usize, 0usize);
    assert_eq!(
        unsafe { vs_run_shape(run, &mut snaps, &mut nodes) },
        VsStatus::Ok
    );
    assert_eq!(snaps, 6);
    assert!(nodes > 0);
    let (mut sweeps, mut ratio) = (0usize, 0.0);
    assert_eq!(
        unsafe { vs_run_contraction(run, &mut sweeps, &mut ratio) },
        VsStatus::Ok
    );
    assert!(sweeps >= 2);
    assert!(ratio < 1.0);

    let mut t = -1.0;
    let mut stress = vec![0.0; 3 * nodes];
    assert_eq!(
        unsafe {
            vs_run_snapshot(
                run,
                snaps - 1,
                VsField::Stress,
                &mut t,
                stress.as_mut_ptr(),
                stress.len(),
            )
        },
        VsStatus::Ok
    );
    assert!((t - 0.1).abs() < 1e-12);
    assert!(stress.iter().all(|x| x.is_finite()));

    let mut flux = vec![0.0; 2 * nodes];
    let mut ref_nodes = vec![0.0; 2 * nodes];
    unsafe {
        assert_eq!(
            vs_run_snapshot(
                run,
                0,
                VsField::Flux,
                ptr::null_mut(),
                flux.as_mut_ptr(),
                flux.len()
            ),
            VsStatus::Ok
        );
        assert_eq!(
            vs_run_snapshot(
                run,
                0,
                VsField::Nodes,
                ptr::null_mut(),
                ref_nodes.as_mut_ptr(),
                ref_nodes.len()
            ),
            VsStatus::Ok
        );
    }
    assert!(flux
        .iter()
        .zip(&ref_nodes)
        .all(|(a, b)| (a - b).abs() < 1e-12));

    let mut short = vec![0.0; nodes];
    assert_eq!(
        unsafe {
            vs_run_snapshot(
                run,
                0,
                VsField::Velocity,
                ptr::null_mut(),
                short.as_mut_ptr(),
                short.len(),
            )
        },
        VsStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe {
            vs_run_snapshot(
                run,
                snaps,
                VsField::Pressure,
                ptr::null_mut(),
                short.as_mut_ptr(),
                short.len(),
            )
        },
        VsStatus::OutOfRange
    );

    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { vs_run_write(run, d.as_ptr()) }, VsStatus::Ok);
    assert!(dir.path().join("manifest.json").exists());
    let csvs = std::fs::read_dir(dir.path()).unwrap().filter(|e| {
        e.as_ref()
            .unwrap()
            .path()
            .extension()
            .is_some_and(|x| x == "csv")
    });
    assert_eq!(csvs.count(), snaps);
    unsafe {
        vs_run_free(run);
        vs_scenario_free(sc);
    }
}

#[test]
fn horizon_cap_maps_to_its_status() {
    let sc = scenario();
    let mut cfg = vs_config_default();
    cfg.c_cal = 1e-3;
    let mut run = ptr::null_mut();
    assert_eq!(
        unsafe { vs_run_simulate(sc, &cfg, 0, &mut run) },
        VsStatus::HorizonExceeded
    );
    assert!(run.is_null());
    unsafe { vs_scenario_free(sc) };
}

#[test]
fn splash_family_fills_outputs() {
    let sc = scenario();
    let eps = [0.02, 0.01];
    let mut t = [0.0; 2];
    let mut g = [0.0; 2];
    let st = unsafe {
        vs_splash_family(
            sc,
            ptr::null(),
            eps.as_ptr(),
            2,
            1.0,
            0.0,
            t.as_mut_ptr(),
            g.as_mut_ptr(),
        )
    };
    assert_eq!(st, VsStatus::Ok, "{}", last_error());
    assert!(t.iter().all(|x| x.is_nan()));
    assert!(g[0] > g[1] && g[1] > 0.0);
    unsafe { vs_scenario_free(sc) };
}

#[test]
fn header_is_valid_c() {
    let header = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/viscosplash.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "vs_run_simulate",
        "vs_last_error",
        "vs_scenario_free",
        "VS_STATUS_NO_CONTRACTION",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"viscosplash.h\"\nint main(void) { VsConfig c = vs_config_default(); return c.max_sweeps == 0; }\n",
    )
    .unwrap();
    let Ok(out) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn malformed_json_is_a_config_error() {
    let bad = CString::new("{\"params\": ").unwrap();
    let mut sc = ptr::null_mut();
    assert_eq!(
        unsafe { vs_scenario_from_json(bad.as_ptr(), &mut sc) },
        VsStatus::Config
    );
    assert!(sc.is_null());
}
