//! Perturbed families, splash detection in physical coordinates and the
//! flux stability gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{classify_polyline, ConformalMap, DomainClass};
use crate::error::{Error, Result};
use crate::fields::{Manifest, RunRecord};
use crate::flux::advance_flux_linear;
use crate::grid::Grid;
use crate::picard::{run_to_convergence, PicardConfig};
use crate::scenario::Scenario;
use crate::tensor::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationFamily {
    pub base: Scenario,
    pub epsilons: Vec<f64>,
    pub b: Vec2,
}

impl PerturbationFamily {
    pub fn new(base: Scenario, epsilons: Vec<f64>, b: Vec2) -> Result<Self> {
        if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::param("/eps", "epsilons must be positive"));
        }
        if epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param("/eps", "epsilons must be strictly decreasing"));
        }
        if (b.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::param("/b", "direction must have unit norm"));
        }
        Ok(Self { base, epsilons, b })
    }
}

/// Translates the reference curve and flux by `eps b` and adds
/// `eps (b₁ + b₂)/√2` to both diagonal stress components.
pub fn perturb_scenario(base: &Scenario, eps: f64, b: Vec2) -> Result<Scenario> {
    if !(eps >= 0.0) {
        return Err(Error::param("/eps", "must be ≥ 0"));
    }
    let mut s = base.clone();
    if eps == 0.0 {
        return Ok(s);
    }
    s.shift.offset += b * eps;
    s.shift.stress += eps * (b.x + b.y) / std::f64::consts::SQRT_2;
    s.id = format!("{}+eps{eps}", base.id);
    s.check_half_plane()?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplashVerdict {
    pub t_star: Option<f64>,
    pub trace: Vec<(f64, DomainClass)>,
}

fn classify(map: &ConformalMap, boundary: &[Vec2], gap_tol: Option<f64>) -> DomainClass {
    let phys: Vec<Vec2> = boundary.iter().map(|z| map.inverse(z)).collect();
    classify_polyline(&phys, gap_tol)
}

/// Classifies every snapshot and, at the first transition into
/// `SelfIntersecting`, bisects the bracketing step by re-integrating the
/// boundary flux with linearly interpolated velocity until the bracket is
/// shorter than `dt_bisect`.
pub fn detect_splash(
    run: &RunRecord,
    map: &ConformalMap,
    dt_bisect: f64,
    gap_tol: Option<f64>,
) -> SplashVerdict {
    let trace: Vec<(f64, DomainClass)> = run
        .snapshots
        .iter()
        .map(|s| (s.t, classify(map, &s.boundary_conformal, gap_tol)))
        .collect();
    let hit = trace
        .iter()
        .position(|(_, c)| *c == DomainClass::SelfIntersecting);
    let t_star = match hit {
        None => None,
        Some(0) => Some(0.0),
        Some(k) => {
            let a = &run.snapshots[k - 1];
            let b = &run.snapshots[k];
            let nb = a.boundary_conformal.len();
            let x0 = &a.boundary_conformal;
            let v0 = &a.fields.velocity[..nb];
            let v1 = &b.fields.velocity[..nb];
            let span = b.t - a.t;
            let at = |s: f64| -> Option<DomainClass> {
                let w = s / span;
                let vs: Vec<Vec2> = v0
                    .iter()
                    .zip(v1)
                    .map(|(p, q)| p * (1.0 - w) + q * w)
                    .collect();
                let x = advance_flux_linear(map, x0, v0, &vs, s).ok()?;
                Some(classify(map, &x, gap_tol))
            };
            let (mut lo, mut hi) = (0.0, span);
            while hi - lo > dt_bisect {
                let mid = 0.5 * (lo + hi);
                match at(mid) {
                    Some(DomainClass::SelfIntersecting) | None => hi = mid,
                    Some(_) => lo = mid,
                }
            }
            Some(a.t + hi)
        }
    };
    SplashVerdict { t_star, trace }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSeries {
    pub times: Vec<f64>,
    pub gaps: Vec<f64>,
    pub sup: f64,
}

/// Discrete `H¹` norm of `X - X_ε` per snapshot and its supremum over time.
pub fn stability_gap(grid: &Grid, a: &RunRecord, b: &RunRecord) -> Result<GapSeries> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(Error::Shape("runs have different snapshot counts".into()));
    }
    let mut out = GapSeries {
        times: Vec::new(),
        gaps: Vec::new(),
        sup: 0.0,
    };
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.t - sb.t).abs() > 1e-12 * sa.t.abs().max(1.0) {
            return Err(Error::Shape("runs have different snapshot times".into()));
        }
        if sa.fields.flux.len() != grid.len() || sb.fields.flux.len() != grid.len() {
            return Err(Error::Shape("flux does not match the grid".into()));
        }
        let d: Vec<Vec2> = sa
            .fields
            .flux
            .iter()
            .zip(&sb.fields.flux)
            .map(|(x, y)| x - y)
            .collect();
        let gd = grid.vector_gradient(&d);
        let f: Vec<f64> = d
            .iter()
            .zip(&gd)
            .map(|(v, m)| v.norm_squared() + m.norm_squared())
            .collect();
        let gap = grid.integrate(&f).sqrt();
        out.times.push(sa.t);
        out.gaps.push(gap);
        out.sup = out.sup.max(gap);
    }
    Ok(out)
}

/// Closest pair of boundary markers at least a quarter turn apart.
pub fn near_splash_pair(pts: &[Vec2]) -> Option<(usize, usize)> {
    let n = pts.len();
    let sep = (n / 4).max(1);
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d = j - i;
            if d.min(n - d) < sep {
                continue;
            }
            let r = (pts[i] - pts[j]).norm();
            if best.is_none_or(|b| r < b.0) {
                best = Some((r, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Physical initial velocity at the two near-splash points must point at the
/// opposite lobe.
pub fn check_inward(sc: &Scenario) -> Result<()> {
    let s = sc.setup()?;
    let map = sc.map()?;
    let nb = s.disc.n_boundary();
    let phys: Vec<Vec2> = s.grid.nodes()[..nb]
        .iter()
        .map(|z| map.inverse(z))
        .collect();
    let (i, j) =
        near_splash_pair(&phys).ok_or_else(|| Error::Precondition("boundary too coarse".into()))?;
    for (a, b) in [(i, j), (j, i)] {
        let n = (phys[b] - phys[a]).normalize();
        let un = s.v0[a].dot(&n);
        if !(un > 0.0) {
            return Err(Error::Precondition(format!(
                "initial velocity at near-splash point ({:.6}, {:.6}) is not inward (u·n = {un:e})",
                phys[a].x, phys[a].y
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplashEntry {
    pub eps: f64,
    pub t_star: Option<f64>,
    pub sup_gap: f64,
    pub sweeps: usize,
    pub trace: Vec<(f64, DomainClass)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplashReport {
    pub horizon: f64,
    pub dt_bisect: f64,
    pub base_t_star: Option<f64>,
    pub entries: Vec<SplashEntry>,
    /// True when every ε splashes before the horizon.
    pub all_splash: bool,
}

pub struct SplashRun {
    pub record: RunRecord,
    pub verdict: SplashVerdict,
    pub sweeps: usize,
}

/// Runs one scenario over `[0, horizon]` and locates its splash time.
pub fn run_and_detect(
    sc: &Scenario,
    horizon: f64,
    cfg: &PicardConfig,
    seed: u64,
) -> Result<(SplashRun, Grid)> {
    let pb = sc.problem(horizon, cfg.beta)?;
    let conv = run_to_convergence(&pb, cfg)?;
    let manifest = Manifest {
        params: sc.params.clone(),
        scenario_id: sc.id.clone(),
        seed,
        extra: Default::default(),
    };
    let record = conv.record(&pb, manifest)?;
    let verdict = detect_splash(&record, pb.map(), pb.dt() / 8.0, None);
    Ok((
        SplashRun {
            record,
            verdict,
            sweeps: conv.report.sweeps,
        },
        pb.grid().clone(),
    ))
}

/// Runs the base scenario and every member of the family over
/// `[0, p.t_final]`, in parallel, and reports splash times and flux gaps in
/// ε order. No precondition on the initial velocity.
pub fn run_family(
    family: &PerturbationFamily,
    cfg: &PicardConfig,
    seed: u64,
) -> Result<SplashReport> {
    let horizon = family.base.params.t_final;
    let (base, grid) = run_and_detect(&family.base, horizon, cfg, seed)?;
    let entries = family
        .epsilons
        .par_iter()
        .map(|&eps| {
            let sc = perturb_scenario(&family.base, eps, family.b)?;
            let (run, _) = run_and_detect(&sc, horizon, cfg, seed)?;
            let gap = stability_gap(&grid, &base.record, &run.record)?;
            Ok(SplashEntry {
                eps,
                t_star: run.verdict.t_star,
                sup_gap: gap.sup,
                sweeps: run.sweeps,
                trace: run.verdict.trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_splash = entries
        .iter()
        .all(|e| e.t_star.is_some_and(|t| t < horizon));
    let steps = ((horizon / family.base.params.dt) - 1e-9).ceil().max(1.0);
    Ok(SplashReport {
        horizon,
        dt_bisect: horizon / steps / 8.0,
        base_t_star: base.verdict.t_star,
        entries,
        all_splash,
    })
}

/// [`run_family`] after checking that the initial velocity drives the two
/// near-splash points towards each other.
pub fn splash_experiment(
    family: &PerturbationFamily,
    cfg: &PicardConfig,
    seed: u64,
) -> Result<SplashReport> {
    check_inward(&family.base)?;
    run_family(family, cfg, seed)
}

/// Log-log least-squares slope of `y` against `x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
