//! C ABI for loading scenarios, running the fixed-point solver and reading
//! snapshots back.
//!
//! Every function returns a [`VsStatus`]. On failure the message is kept per
//! thread and can be copied out with [`vs_last_error`]. Handles are opaque and
//! must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use viscosplash::fields::{Manifest, RunRecord};
use viscosplash::grid::Grid;
use viscosplash::output::write_run;
use viscosplash::picard::{
    max_horizon, run_to_convergence, CalibrationConfig, ContractionReport, PicardConfig,
};
use viscosplash::scenario::{load_scenario, Scenario};
use viscosplash::splash::{run_family, PerturbationFamily};
use viscosplash::tensor::Vec2;
use viscosplash::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Param = 4,
    Geometry = 5,
    Solver = 6,
    NoContraction = 7,
    MeshFold = 8,
    HorizonExceeded = 9,
    Precondition = 10,
    Io = 11,
    OutOfRange = 12,
    BufferTooSmall = 13,
    Panic = 14,
    Other = 15,
}

/// Solver settings. Obtain defaults from [`vs_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VsConfig {
    pub tol_picard: f64,
    pub max_sweeps: u32,
    pub beta: f64,
    pub c_cal: f64,
    pub mu_cal: f64,
    pub allow_beyond_horizon: bool,
    pub newtonian: bool,
}

impl From<&VsConfig> for PicardConfig {
    fn from(c: &VsConfig) -> Self {
        PicardConfig {
            tol_picard: c.tol_picard,
            max_sweeps: c.max_sweeps as usize,
            beta: c.beta,
            calibration: CalibrationConfig {
                c_cal: c.c_cal,
                mu_cal: c.mu_cal,
            },
            allow_beyond_horizon: c.allow_beyond_horizon,
            newtonian: c.newtonian,
        }
    }
}

/// Parsed scenario.
pub struct VsScenario {
    inner: Scenario,
}

/// Converged run: snapshots on the reference grid and the contraction report.
pub struct VsRun {
    record: RunRecord,
    grid: Grid,
    report: ContractionReport,
    scenario_hash: String,
    tol_picard: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VsStatus {
    match e {
        Error::Config { .. } => VsStatus::Config,
        Error::Param { .. } => VsStatus::Param,
        Error::Geometry(_)
        | Error::OutOfDomain { .. }
        | Error::BranchCut { .. }
        | Error::SingularJacobian { .. } => VsStatus::Geometry,
        Error::Solver { .. } => VsStatus::Solver,
        Error::NoContraction { .. } => VsStatus::NoContraction,
        Error::MeshFold { .. } => VsStatus::MeshFold,
        Error::HorizonExceeded { .. } => VsStatus::HorizonExceeded,
        Error::Precondition(_) | Error::Compatibility(_) => VsStatus::Precondition,
        Error::Io(_) => VsStatus::Io,
        _ => VsStatus::Other,
    }
}

fn fail(status: VsStatus, msg: impl Into<String>) -> VsStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), VsStatus>) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            VsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            fail(VsStatus::Panic, msg)
        }
    }
}

fn lift<T>(r: viscosplash::Result<T>) -> Result<T, VsStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, VsStatus> {
    if s.is_null() {
        return Err(fail(VsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(VsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, VsStatus> {
    p.as_ref()
        .ok_or_else(|| fail(VsStatus::NullPointer, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), VsStatus> {
    if p.is_null() {
        return Err(fail(VsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(())
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the full message length without the nul, or 0
/// when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

#[no_mangle]
pub extern "C" fn vs_config_default() -> VsConfig {
    let c = PicardConfig::default();
    VsConfig {
        tol_picard: c.tol_picard,
        max_sweeps: c.max_sweeps as u32,
        beta: c.beta,
        c_cal: c.calibration.c_cal,
        mu_cal: c.calibration.mu_cal,
        allow_beyond_horizon: c.allow_beyond_horizon,
        newtonian: c.newtonian,
    }
}

/// `(c_cal We/(1+We))^(1/mu_cal)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vs_max_horizon(
    weissenberg: f64,
    c_cal: f64,
    mu_cal: f64,
    out: *mut f64,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        if !(weissenberg > 0.0) || !(c_cal > 0.0) || !(mu_cal > 0.0) {
            return Err(fail(
                VsStatus::Param,
                "weissenberg, c_cal and mu_cal must be > 0",
            ));
        }
        let p = viscosplash::params::Params {
            weissenberg,
            ..Default::default()
        };
        *out = max_horizon(&p, &CalibrationConfig { c_cal, mu_cal });
        Ok(())
    })
}

/// Parses a scenario document.
///
/// # Safety
/// `json` must be null or a nul-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_from_json(
    json: *const c_char,
    out: *mut *mut VsScenario,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(json, "json")?;
        let sc = lift(Scenario::from_json(text))?;
        *out = Box::into_raw(Box::new(VsScenario { inner: sc }));
        Ok(())
    })
}

/// Reads a scenario file.
///
/// # Safety
/// As [`vs_scenario_from_json`], with `path` a file path.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_load(
    path: *const c_char,
    out: *mut *mut VsScenario,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let p = str_arg(path, "path")?;
        let sc = lift(load_scenario(Path::new(p)))?;
        *out = Box::into_raw(Box::new(VsScenario { inner: sc }));
        Ok(())
    })
}

/// Serializes a scenario. The string must be released with
/// [`vs_string_free`].
///
/// # Safety
/// `sc` must be null or a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_to_json(
    sc: *const VsScenario,
    out: *mut *mut c_char,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sc = ref_arg(sc, "scenario")?;
        let s =
            CString::new(sc.inner.to_json()).map_err(|_| fail(VsStatus::Other, "nul in JSON"))?;
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `sc` must be null or a handle from this library, released once.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_free(sc: *mut VsScenario) {
    if !sc.is_null() {
        drop(Box::from_raw(sc));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library, released once.
#[no_mangle]
pub unsafe extern "C" fn vs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs the scenario over `[0, t_final]` to Picard convergence. `cfg` may be
/// null for defaults.
///
/// # Safety
/// `sc` must be a live handle, `cfg` null or valid, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vs_run_simulate(
    sc: *const VsScenario,
    cfg: *const VsConfig,
    seed: u64,
    out: *mut *mut VsRun,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = ptr::null_mut();
        let sc = &ref_arg(sc, "scenario")?.inner;
        let cfg: PicardConfig = cfg.as_ref().map_or_else(PicardConfig::default, Into::into);
        let pb = lift(sc.problem(sc.params.t_final, cfg.beta))?;
        let conv = lift(run_to_convergence(&pb, &cfg))?;
        let manifest = Manifest {
            params: sc.params.clone(),
            scenario_id: sc.id.clone(),
            seed,
            extra: Default::default(),
        };
        let record = lift(conv.record(&pb, manifest))?;
        *out = Box::into_raw(Box::new(VsRun {
            record,
            grid: pb.grid().clone(),
            report: conv.report,
            scenario_hash: sc.hash(),
            tol_picard: cfg.tol_picard,
        }));
        Ok(())
    })
}

/// # Safety
/// `run` must be null or a handle from this library, released once.
#[no_mangle]
pub unsafe extern "C" fn vs_run_free(run: *mut VsRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of snapshots and of grid nodes.
///
/// # Safety
/// `run` must be a live handle; the outputs null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn vs_run_shape(
    run: *const VsRun,
    snapshots: *mut usize,
    nodes: *mut usize,
) -> VsStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        out_arg(snapshots, "snapshots")?;
        out_arg(nodes, "nodes")?;
        *snapshots = run.record.snapshots.len();
        *nodes = run.grid.len();
        Ok(())
    })
}

/// Sweeps used and the largest per-sweep contraction ratio (NaN when fewer
/// than two sweeps ran).
///
/// # Safety
/// As [`vs_run_shape`].
#[no_mangle]
pub unsafe extern "C" fn vs_run_contraction(
    run: *const VsRun,
    sweeps: *mut usize,
    max_ratio: *mut f64,
) -> VsStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        out_arg(sweeps, "sweeps")?;
        out_arg(max_ratio, "max_ratio")?;
        *sweeps = run.report.sweeps;
        *max_ratio = run.report.max_ratio.unwrap_or(f64::NAN);
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsField {
    /// Two values per node.
    Velocity = 0,
    /// One value per node.
    Pressure = 1,
    /// `T11, T12, T22` per node.
    Stress = 2,
    /// Two values per node, conformal coordinates.
    Flux = 3,
    /// Two values per node, reference coordinates.
    Nodes = 4,
}

fn width(f: VsField) -> usize {
    match f {
        VsField::Pressure => 1,
        VsField::Stress => 3,
        _ => 2,
    }
}

/// Copies one field of snapshot `k` into `buf`, node by node. Fails with
/// `BufferTooSmall` when `len` is below nodes times the field width.
///
/// # Safety
/// `run` must be a live handle, `time` null or valid, `buf` valid for `len`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn vs_run_snapshot(
    run: *const VsRun,
    k: usize,
    field: VsField,
    time: *mut f64,
    buf: *mut f64,
    len: usize,
) -> VsStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        out_arg(buf, "buf")?;
        let snap = run.record.snapshots.get(k).ok_or_else(|| {
            fail(
                VsStatus::OutOfRange,
                format!("snapshot {k} of {}", run.record.snapshots.len()),
            )
        })?;
        let n = run.grid.len();
        let need = n * width(field);
        if len < need {
            return Err(fail(
                VsStatus::BufferTooSmall,
                format!("need {need} values, got {len}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(buf, need);
        let pairs = |v: &[Vec2], out: &mut [f64]| {
            for (o, x) in out.chunks_exact_mut(2).zip(v) {
                o[0] = x.x;
                o[1] = x.y;
            }
        };
        let f = &snap.fields;
        match field {
            VsField::Velocity => pairs(&f.velocity, out),
            VsField::Flux => pairs(&f.flux, out),
            VsField::Nodes => pairs(run.grid.nodes(), out),
            VsField::Pressure => out.copy_from_slice(&f.pressure),
            VsField::Stress => {
                for (o, s) in out.chunks_exact_mut(3).zip(&f.stress) {
                    o.copy_from_slice(&s.components());
                }
            }
        }
        if let Some(t) = time.as_mut() {
            *t = snap.t;
        }
        Ok(())
    })
}

/// Writes snapshot CSVs and `manifest.json` into `dir`.
///
/// # Safety
/// `run` must be a live handle and `dir` a nul-terminated path.
#[no_mangle]
pub unsafe extern "C" fn vs_run_write(run: *const VsRun, dir: *const c_char) -> VsStatus {
    guard(|| {
        let run = ref_arg(run, "run")?;
        let d = str_arg(dir, "dir")?;
        lift(write_run(
            &run.record,
            &run.grid,
            &run.scenario_hash,
            run.tol_picard,
            Path::new(d),
        ))?;
        Ok(())
    })
}

/// Splash times and sup-time flux gaps of the family `eps[i] b`. Entries
/// without a splash before `t_final` get NaN in `t_star`.
///
/// # Safety
/// `sc` must be a live handle, `cfg` null or valid, `eps`, `t_star` and `gap`
/// valid for `n` elements.
#[no_mangle]
pub unsafe extern "C" fn vs_splash_family(
    sc: *const VsScenario,
    cfg: *const VsConfig,
    eps: *const f64,
    n: usize,
    bx: f64,
    by: f64,
    t_star: *mut f64,
    gap: *mut f64,
) -> VsStatus {
    guard(|| {
        let sc = &ref_arg(sc, "scenario")?.inner;
        if eps.is_null() || t_star.is_null() || gap.is_null() {
            return Err(fail(
                VsStatus::NullPointer,
                "eps, t_star and gap must be non-null",
            ));
        }
        let cfg: PicardConfig = cfg.as_ref().map_or_else(PicardConfig::default, Into::into);
        let e = std::slice::from_raw_parts(eps, n).to_vec();
        let family = lift(PerturbationFamily::new(sc.clone(), e, Vec2::new(bx, by)))?;
        let report = lift(run_family(&family, &cfg, 0))?;
        let ts = std::slice::from_raw_parts_mut(t_star, n);
        let gs = std::slice::from_raw_parts_mut(gap, n);
        for (i, entry) in report.entries.iter().enumerate() {
            ts[i] = entry.t_star.unwrap_or(f64::NAN);
            gs[i] = entry.sup_gap;
        }
        Ok(())
    })
}
