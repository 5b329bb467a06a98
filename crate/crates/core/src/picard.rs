//! Fixed-point iteration over a whole time window: lagged right-hand sides,
//! the linear solve for the lifted velocity, and the stress and flux updates.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::fields::{FieldSet, Manifest, RunRecord, Snapshot};
use crate::flux::{advance_flux_linear, FluxState};
use crate::grid::{split, Grid};
use crate::linear::{
    build_phi, Discretization, LinearRhs, PhiLift, RowResiduals, StokesSolver, DEFAULT_BETA,
};
use crate::params::Params;
use crate::stress::advance_stress;
use crate::tensor::{Mat2, Sym2, Vec2};

/// Empirical constants of the admissible horizon
/// `T_max = (c_cal We/(1+We))^(1/mu_cal)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub c_cal: f64,
    pub mu_cal: f64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            c_cal: 0.5,
            mu_cal: 1.0,
        }
    }
}

pub fn max_horizon(p: &Params, cal: &CalibrationConfig) -> f64 {
    let we = p.weissenberg;
    (cal.c_cal * we / (1.0 + we)).powf(1.0 / cal.mu_cal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub tol_picard: f64,
    pub max_sweeps: usize,
    pub beta: f64,
    pub calibration: CalibrationConfig,
    /// Permit horizons beyond [`max_horizon`].
    pub allow_beyond_horizon: bool,
    /// Drop the polymeric stress: it is held at zero and never integrated.
    #[serde(default)]
    pub newtonian: bool,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol_picard: 1e-8,
            max_sweeps: 50,
            beta: DEFAULT_BETA,
            calibration: CalibrationConfig::default(),
            allow_beyond_horizon: false,
            newtonian: false,
        }
    }
}

/// Fixed data of one run: geometry, initial data, lift and the factored
/// linear operator on a uniform time grid over `[0, horizon]`.
#[derive(Debug)]
pub struct Problem {
    pub disc: Arc<Discretization>,
    pub params: Params,
    pub v0: Vec<Vec2>,
    pub t0: Vec<Sym2>,
    pub lift: PhiLift,
    pub solver: StokesSolver,
    pub steps: usize,
    pub horizon: f64,
}

impl Problem {
    /// The time step is `p.dt` shortened so that it divides `horizon`.
    pub fn new(
        disc: Arc<Discretization>,
        p: &Params,
        v0: Vec<Vec2>,
        t0: Vec<Sym2>,
        horizon: f64,
        beta: f64,
    ) -> Result<Self> {
        p.validate()?;
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::param("/params/t_final", "must be > 0"));
        }
        let steps = ((horizon / p.dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = horizon / steps as f64;
        let lift = build_phi(&disc, &v0, &t0, p)?;
        let solver = StokesSolver::new(disc.clone(), p, dt, beta)?;
        Ok(Self {
            disc,
            params: p.clone(),
            v0,
            t0,
            lift,
            solver,
            steps,
            horizon,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.disc.grid
    }

    pub fn map(&self) -> &ConformalMap {
        &self.disc.map
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// Stabilization weight `τ` per node.
    pub fn tau(&self) -> &[f64] {
        self.solver.tau()
    }
}

/// One Picard iterate on every time level `0..=steps`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationState {
    /// Lifted velocity `w = v - φ`.
    pub w: Vec<Vec<Vec2>>,
    /// Pressure part solved for by the linear step; the total is `q_w + q_φ`.
    pub q: Vec<Vec<f64>>,
    pub stress: Vec<Vec<Sym2>>,
    pub flux: Vec<Vec<Vec2>>,
    pub norm_ledger: BTreeMap<String, f64>,
}

impl IterationState {
    /// `w = 0`, `q_w = 0`, `T = T0` and the identity flux on every level.
    pub fn initial(pb: &Problem) -> Self {
        let n = pb.disc.len();
        let levels = pb.steps + 1;
        Self {
            w: vec![vec![Vec2::zeros(); n]; levels],
            q: vec![vec![0.0; n]; levels],
            stress: vec![pb.t0.clone(); levels],
            flux: vec![pb.grid().nodes().to_vec(); levels],
            norm_ledger: BTreeMap::new(),
        }
    }

    pub fn levels(&self) -> usize {
        self.w.len()
    }

    pub fn velocity(&self, pb: &Problem, k: usize) -> Vec<Vec2> {
        let phi = pb.lift.phi(pb.time(k));
        self.w[k].iter().zip(&phi).map(|(a, b)| a + b).collect()
    }

    pub fn pressure(&self, pb: &Problem, k: usize) -> Vec<f64> {
        self.q[k]
            .iter()
            .zip(&pb.lift.q_phi)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn fields(&self, pb: &Problem, k: usize) -> FieldSet {
        FieldSet {
            velocity: self.velocity(pb, k),
            pressure: self.pressure(pb, k),
            stress: self.stress[k].clone(),
            flux: self.flux[k].clone(),
        }
    }
}

/// Geometry of a flux iterate at one time level.
#[derive(Debug, Clone)]
pub struct LevelGeometry {
    pub zeta: Vec<Mat2>,
    /// `J^P(X)`, `Q²(X)`.
    pub jx: Vec<Mat2>,
    pub q2x: Vec<f64>,
    /// `Σ_{j,k} ζ_kj ∂_k ζ_lj`, the first-order part of the pulled-back Laplacian.
    pub drift: Vec<Vec2>,
    /// `J^P(X)⁻¹ ∇_Λ X ñ₀` on boundary nodes.
    pub mx: Vec<Vec2>,
}

impl LevelGeometry {
    pub fn new(disc: &Discretization, x: &[Vec2]) -> Result<Self> {
        let g = &disc.grid;
        let fs = FluxState::new(g, x.to_vec())?;
        let mut jx = Vec::with_capacity(x.len());
        let mut q2x = Vec::with_capacity(x.len());
        for p in x {
            jx.push(disc.map.jacobian(p)?);
            q2x.push(disc.map.q_squared(p)?);
        }
        let comp = |r: usize, c: usize| -> Vec<Vec2> {
            let f: Vec<f64> = fs.zeta.iter().map(|m| m[(r, c)]).collect();
            g.gradient(&f)
        };
        // dz[r][c][node] = ∇ ζ_rc
        let dz = [[comp(0, 0), comp(0, 1)], [comp(1, 0), comp(1, 1)]];
        let drift = (0..x.len())
            .map(|p| {
                let z = &fs.zeta[p];
                let mut b = Vec2::zeros();
                for l in 0..2 {
                    for j in 0..2 {
                        for k in 0..2 {
                            b[l] += z[(k, j)] * dz[l][j][p][k];
                        }
                    }
                }
                b
            })
            .collect();
        let mx = (0..disc.n_boundary())
            .map(|p| {
                let jinv = jx[p].transpose() / q2x[p];
                jinv * (fs.grad_lambda[p] * g.normals()[p])
            })
            .collect();
        Ok(Self {
            zeta: fs.zeta,
            jx,
            q2x,
            drift,
            mx,
        })
    }

    /// `ζ J^P(X)`.
    pub fn zeta_j(&self) -> Vec<Mat2> {
        self.zeta.iter().zip(&self.jx).map(|(z, j)| z * j).collect()
    }
}

/// Pulled-back Laplacian `Σ_j ζ_kj ∂_k(ζ_lj ∂_l v)` of each component.
pub fn pulled_back_laplacian(grid: &Grid, geo: &LevelGeometry, v: &[Vec2]) -> Vec<Vec2> {
    let (a, b) = split(v);
    let comps = [
        (grid.hessian(&a), grid.gradient(&a)),
        (grid.hessian(&b), grid.gradient(&b)),
    ];
    (0..v.len())
        .map(|p| {
            let z = &geo.zeta[p];
            let m = z * z.transpose();
            let mut out = Vec2::zeros();
            for (i, (h, gr)) in comps.iter().enumerate() {
                let h = &h[p];
                out[i] = m[(0, 0)] * h.xx
                    + 2.0 * m[(0, 1)] * h.xy
                    + m[(1, 1)] * h.yy
                    + geo.drift[p].dot(&gr[p]);
            }
            out
        })
        .collect()
}

fn trace_of(grads: &[Mat2], m: &[Mat2]) -> Vec<f64> {
    grads.iter().zip(m).map(|(g, m)| (g * m).trace()).collect()
}

/// Momentum data and its pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FPieces {
    pub w: Vec<Vec2>,
    pub phi: Vec<Vec2>,
    pub q: Vec<Vec2>,
    pub stress: Vec<Vec2>,
    pub lift: Vec<Vec2>,
}

impl FPieces {
    pub fn total(&self) -> Vec<Vec2> {
        (0..self.w.len())
            .map(|k| self.w[k] + self.phi[k] + self.q[k] + self.stress[k] + self.lift[k])
            .collect()
    }
}

/// Trace data: the corrected iterate part and the lift part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GPieces {
    pub bar: Vec<f64>,
    pub lift: Vec<f64>,
}

impl GPieces {
    pub fn total(&self) -> Vec<f64> {
        self.bar
            .iter()
            .zip(&self.lift)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Traction data on boundary nodes and its seven pieces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HPieces {
    pub w: Vec<Vec2>,
    pub w_t: Vec<Vec2>,
    pub phi: Vec<Vec2>,
    pub phi_t: Vec<Vec2>,
    pub q: Vec<Vec2>,
    pub stress: Vec<Vec2>,
    pub lift: Vec<Vec2>,
}

impl HPieces {
    pub fn total(&self) -> Vec<Vec2> {
        (0..self.w.len())
            .map(|k| {
                self.w[k]
                    + self.w_t[k]
                    + self.phi[k]
                    + self.phi_t[k]
                    + self.q[k]
                    + self.stress[k]
                    + self.lift[k]
            })
            .collect()
    }
}

/// Momentum data at level `k ≥ 1` from the iterate `st`.
pub fn assemble_f(pb: &Problem, st: &IterationState, geo: &LevelGeometry, k: usize) -> FPieces {
    let disc = &pb.disc;
    let g = &disc.grid;
    let nu = pb.params.solvent();
    let q2 = &disc.frame.q2;
    let jp = &disc.frame.jp;
    let n = g.len();
    let t = pb.time(k);
    let phi = pb.lift.phi(t);
    let phi_prev = pb.lift.phi(pb.time(k.saturating_sub(1)));
    let q_tot = st.pressure(pb, k);

    let nonlocal = |v: &[Vec2]| -> Vec<Vec2> {
        let lx = pulled_back_laplacian(g, geo, v);
        let l0 = g.vector_laplacian(v);
        (0..n)
            .map(|p| (lx[p] * geo.q2x[p] - l0[p] * q2[p]) * nu)
            .collect()
    };
    let f_w = nonlocal(&st.w[k]);
    let f_phi = nonlocal(&phi);

    let gq = g.gradient(&q_tot);
    let f_q = (0..n)
        .map(|p| {
            jp[p].transpose() * gq[p] - geo.jx[p].transpose() * (geo.zeta[p].transpose() * gq[p])
        })
        .collect();

    let f_t = disc.stress_divergence(&st.stress[k], &geo.zeta_j());

    let c = pb.params.reynolds / pb.dt();
    let lphi = g.vector_laplacian(&phi);
    let gqp = g.gradient(&pb.lift.q_phi);
    let f_l = (0..n)
        .map(|p| -(phi[p] - phi_prev[p]) * c + lphi[p] * (nu * q2[p]) - jp[p].transpose() * gqp[p])
        .collect();

    FPieces {
        w: f_w,
        phi: f_phi,
        q: f_q,
        stress: f_t,
        lift: f_l,
    }
}

/// Trace data at level `k`. The lift part carries `τ Δq_φ` so that the fixed
/// point satisfies the stabilized constraint for the total pressure.
pub fn assemble_g(pb: &Problem, st: &IterationState, geo: &LevelGeometry, k: usize) -> GPieces {
    let disc = &pb.disc;
    let g = &disc.grid;
    let jp = &disc.frame.jp;
    let t = pb.time(k);
    let v = st.velocity(pb, k);
    let phi = pb.lift.phi(t);
    let gv = g.vector_gradient(&v);
    let gphi = g.vector_gradient(&phi);
    let zj = geo.zeta_j();
    let zphi = pb.lift.zeta_phi(t);
    let jphi = pb.lift.jp_phi(t);
    let zj_phi: Vec<Mat2> = zphi.iter().zip(&jphi).map(|(z, j)| z * j).collect();

    let tr_v_j = trace_of(&gv, jp);
    let tr_v_x = trace_of(&gv, &zj);
    let tr_phi_j = trace_of(&gphi, jp);
    let tr_phi_l = trace_of(&gphi, &zj_phi);
    let lq = g.laplacian(&pb.lift.q_phi);
    let tau = pb.tau();

    let n = g.len();
    let bar = (0..n)
        .map(|p| tr_v_j[p] - tr_v_x[p] + tr_phi_l[p] - tr_phi_j[p])
        .collect();
    let lift = (0..n).map(|p| -tr_phi_l[p] + tau[p] * lq[p]).collect();
    GPieces { bar, lift }
}

/// Traction data at level `k` on the boundary nodes.
pub fn assemble_h(pb: &Problem, st: &IterationState, geo: &LevelGeometry, k: usize) -> HPieces {
    let disc = &pb.disc;
    let g = &disc.grid;
    let nu = pb.params.solvent();
    let jp = &disc.frame.jp;
    let nb = disc.n_boundary();
    let t = pb.time(k);
    let phi = pb.lift.phi(t);
    let q_tot = st.pressure(pb, k);
    let gw = g.vector_gradient(&st.w[k]);
    let gphi = g.vector_gradient(&phi);
    let zj = geo.zeta_j();

    // ν ∇u ñ₀ - ν (∇u ζ J(X)) m_X, then the transposed counterpart
    let plain =
        |gu: &[Mat2], p: usize| (gu[p] * jp[p] * disc.m0[p] - gu[p] * zj[p] * geo.mx[p]) * nu;
    let transposed = |gu: &[Mat2], p: usize| {
        ((gu[p] * jp[p]).transpose() * disc.m0[p] - (gu[p] * zj[p]).transpose() * geo.mx[p]) * nu
    };
    let mut out = HPieces {
        w: Vec::with_capacity(nb),
        w_t: Vec::with_capacity(nb),
        phi: Vec::with_capacity(nb),
        phi_t: Vec::with_capacity(nb),
        q: Vec::with_capacity(nb),
        stress: Vec::with_capacity(nb),
        lift: Vec::with_capacity(nb),
    };
    for p in 0..nb {
        out.w.push(plain(&gw, p));
        out.w_t.push(transposed(&gw, p));
        out.phi.push(plain(&gphi, p));
        out.phi_t.push(transposed(&gphi, p));
        out.q.push(geo.mx[p] * q_tot[p] - disc.m0[p] * q_tot[p]);
        out.stress.push(-(st.stress[k][p].to_mat() * geo.mx[p]));
        let a = gphi[p] * jp[p];
        out.lift
            .push(disc.m0[p] * pb.lift.q_phi[p] - (a + a.transpose()) * disc.m0[p] * nu);
    }
    out
}

/// Full linear data at level `k` from the iterate `st`.
pub fn assemble_rhs(pb: &Problem, st: &IterationState, k: usize) -> Result<LinearRhs> {
    let geo = LevelGeometry::new(&pb.disc, &st.flux[k])?;
    Ok(LinearRhs {
        f: assemble_f(pb, st, &geo, k).total(),
        g: assemble_g(pb, st, &geo, k).total(),
        h: assemble_h(pb, st, &geo, k).total(),
        v0: vec![Vec2::zeros(); pb.disc.len()],
    })
}

/// Physical velocity gradient `A = ∇v ζ J^P(X)` at level `k`.
pub fn velocity_gradient(pb: &Problem, st: &IterationState, k: usize) -> Result<Vec<Mat2>> {
    let geo = LevelGeometry::new(&pb.disc, &st.flux[k])?;
    let gv = pb.grid().vector_gradient(&st.velocity(pb, k));
    Ok(gv.iter().zip(geo.zeta_j()).map(|(g, m)| g * m).collect())
}

fn midpoint_gradients(pb: &Problem, st: &IterationState) -> Result<Vec<Vec<Mat2>>> {
    let a: Vec<Vec<Mat2>> = (0..st.levels())
        .map(|k| velocity_gradient(pb, st, k))
        .collect::<Result<_>>()?;
    Ok(a.windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(x, y)| (x + y) * 0.5).collect())
        .collect())
}

/// One sweep `n → n+1` over the whole window. The stress and flux of the new
/// iterate are integrated with the velocity of iterate `n`.
pub fn picard_sweep(
    pb: &Problem,
    st: &IterationState,
    cfg: &PicardConfig,
) -> Result<IterationState> {
    let t_max = max_horizon(&pb.params, &cfg.calibration);
    if !cfg.allow_beyond_horizon && pb.horizon > t_max * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded {
            horizon: pb.horizon,
            max: t_max,
        });
    }
    let levels = pb.steps + 1;
    let n = pb.disc.len();
    let mut next = IterationState::initial(pb);
    for k in 1..levels {
        let rhs = assemble_rhs(pb, st, k)?;
        let (w, q) = pb.solver.solve(&rhs, &next.w[k - 1])?;
        next.w[k] = w;
        next.q[k] = q;
    }
    let a_mid = midpoint_gradients(pb, st)?;
    let dt = pb.dt();
    let velocities: Vec<Vec<Vec2>> = (0..levels).map(|k| st.velocity(pb, k)).collect();
    if cfg.newtonian {
        next.stress = vec![vec![Sym2::default(); n]; levels];
    }
    for k in 1..levels {
        if !cfg.newtonian {
            next.stress[k] = advance_stress(&next.stress[k - 1], &a_mid[k - 1], &pb.params, dt)?;
        }
        next.flux[k] = advance_flux_linear(
            pb.map(),
            &next.flux[k - 1],
            &velocities[k - 1],
            &velocities[k],
            dt,
        )?;
    }
    debug_assert!(next.w[0].iter().all(|v| *v == Vec2::zeros()));
    next.norm_ledger = difference_norms(pb, &next, st);
    Ok(next)
}

/// Named norms of `a - b`: `L²_t H¹` velocity, `L²_t L²` pressure,
/// `max_t H¹` flux, `max_t L²` stress, and their sum under `composite`.
pub fn difference_norms(
    pb: &Problem,
    a: &IterationState,
    b: &IterationState,
) -> BTreeMap<String, f64> {
    let g = pb.grid();
    let dt = pb.dt();
    let h1 = |d: &[Vec2]| -> f64 {
        let gd = g.vector_gradient(d);
        let f: Vec<f64> = d
            .iter()
            .zip(&gd)
            .map(|(v, m)| v.norm_squared() + m.norm_squared())
            .collect();
        g.integrate(&f)
    };
    let (mut vel, mut pre, mut flux, mut stress) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..a.levels() {
        let dv: Vec<Vec2> = a.w[k].iter().zip(&b.w[k]).map(|(x, y)| x - y).collect();
        let dq: Vec<f64> = a.q[k]
            .iter()
            .zip(&b.q[k])
            .map(|(x, y)| (x - y).powi(2))
            .collect();
        let dx: Vec<Vec2> = a.flux[k]
            .iter()
            .zip(&b.flux[k])
            .map(|(x, y)| x - y)
            .collect();
        let ds: Vec<f64> = a.stress[k]
            .iter()
            .zip(&b.stress[k])
            .map(|(x, y)| x.sub(y).frobenius().powi(2))
            .collect();
        if k > 0 {
            vel += dt * h1(&dv);
            pre += dt * g.integrate(&dq);
        }
        flux = flux.max(h1(&dx));
        stress = stress.max(g.integrate(&ds));
    }
    let vals = [vel.sqrt(), pre.sqrt(), flux.sqrt(), stress.sqrt()];
    let mut m = BTreeMap::new();
    m.insert("velocity".to_string(), vals[0]);
    m.insert("pressure".to_string(), vals[1]);
    m.insert("flux".to_string(), vals[2]);
    m.insert("stress".to_string(), vals[3]);
    m.insert("composite".to_string(), vals.iter().sum());
    m
}

/// Equation residuals of an iterate, maximum over levels `1..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunResiduals {
    pub momentum: f64,
    pub trace: f64,
    pub traction: f64,
    pub stress_ode: f64,
    pub flux_ode: f64,
}

/// Residuals of the discrete nonlinear system evaluated at `st`. The stress
/// ODE residual is zero by construction for a Newtonian run.
pub fn residuals(pb: &Problem, st: &IterationState, newtonian: bool) -> Result<RunResiduals> {
    let mut out = RunResiduals {
        momentum: 0.0,
        trace: 0.0,
        traction: 0.0,
        stress_ode: 0.0,
        flux_ode: 0.0,
    };
    for k in 1..st.levels() {
        let rhs = assemble_rhs(pb, st, k)?;
        let r: RowResiduals = pb
            .solver
            .residuals(&st.w[k], &st.q[k], &rhs, &st.w[k - 1])?;
        out.momentum = out.momentum.max(r.momentum);
        out.traction = out.traction.max(r.traction);
    }
    out.trace = constraint_residuals(pb, st)?
        .into_iter()
        .skip(1)
        .fold(0.0, f64::max);
    let a_mid = midpoint_gradients(pb, st)?;
    let dt = pb.dt();
    for k in 1..st.levels() {
        if !newtonian {
            let t = advance_stress(&st.stress[k - 1], &a_mid[k - 1], &pb.params, dt)?;
            let e = t
                .iter()
                .zip(&st.stress[k])
                .fold(0.0f64, |a, (x, y)| a.max(x.sub(y).max_abs()));
            out.stress_ode = out.stress_ode.max(e);
        }
        let x = advance_flux_linear(
            pb.map(),
            &st.flux[k - 1],
            &st.velocity(pb, k - 1),
            &st.velocity(pb, k),
            dt,
        )?;
        let e = x
            .iter()
            .zip(&st.flux[k])
            .fold(0.0f64, |a, (x, y)| a.max((x - y).amax()));
        out.flux_ode = out.flux_ode.max(e);
    }
    Ok(out)
}

/// Maximum nodal residual of `Tr(∇v ζ J^P(X)) - τ Δq` per level. Level 0 has
/// no solved pressure and reports the plain divergence of the initial data.
pub fn constraint_residuals(pb: &Problem, st: &IterationState) -> Result<Vec<f64>> {
    let g = pb.grid();
    let tau = pb.tau();
    (0..st.levels())
        .map(|k| {
            let a = velocity_gradient(pb, st, k)?;
            let lq = if k == 0 {
                vec![0.0; g.len()]
            } else {
                g.laplacian(&st.pressure(pb, k))
            };
            Ok(a.iter()
                .zip(&lq)
                .zip(tau)
                .fold(0.0f64, |m, ((a, l), t)| m.max((a.trace() - t * l).abs())))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Composite difference norm after each sweep.
    pub differences: Vec<f64>,
    /// `r_k = ‖Δ_{k+1}‖ / ‖Δ_k‖` while both lie above round-off.
    pub ratios: Vec<f64>,
    pub final_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub contracting: bool,
    pub converged: bool,
    pub sweeps: usize,
    pub horizon: f64,
    pub weissenberg: f64,
    pub residuals: Option<RunResiduals>,
    pub constraint_residuals: Vec<f64>,
    /// `max |w_1 - w_0| / dt`, the discrete initial time derivative of `w`.
    pub lift_defect: f64,
}

impl ContractionReport {
    fn push(&mut self, d: f64) {
        if let Some(&prev) = self.differences.last() {
            let floor = 1e-12 * self.differences[0].max(f64::MIN_POSITIVE);
            if prev > floor && d > floor {
                self.ratios.push(d / prev);
            }
        }
        self.differences.push(d);
        self.final_ratio = self.ratios.last().copied();
        self.max_ratio = self.ratios.iter().copied().reduce(f64::max);
    }
}

#[derive(Debug, Clone)]
pub struct Converged {
    pub state: IterationState,
    pub report: ContractionReport,
}

/// Sweeps from the initial iterate until the composite difference drops below
/// `tol_picard`.
pub fn run_to_convergence(pb: &Problem, cfg: &PicardConfig) -> Result<Converged> {
    let mut report = ContractionReport {
        horizon: pb.horizon,
        weissenberg: pb.params.weissenberg,
        ..Default::default()
    };
    let mut st = IterationState::initial(pb);
    if cfg.newtonian {
        let n = pb.disc.len();
        st.stress = vec![vec![Sym2::default(); n]; st.levels()];
    }
    for sweep in 1..=cfg.max_sweeps {
        let next = picard_sweep(pb, &st, cfg)?;
        let d = next.norm_ledger["composite"];
        report.push(d);
        report.sweeps = sweep;
        st = next;
        if !d.is_finite() || d > 1e8 * report.differences[0].max(cfg.tol_picard) {
            break;
        }
        if d < cfg.tol_picard {
            report.converged = true;
            break;
        }
    }
    report.contracting = report.converged || report.final_ratio.is_some_and(|r| r < 1.0);
    report.lift_defect = if st.levels() > 1 {
        st.w[1]
            .iter()
            .zip(&st.w[0])
            .fold(0.0f64, |a, (x, y)| a.max((x - y).amax()))
            / pb.dt()
    } else {
        0.0
    };
    if !report.converged {
        return Err(Error::NoContraction {
            sweeps: report.sweeps,
            report: Box::new(report),
        });
    }
    report.residuals = Some(residuals(pb, &st, cfg.newtonian)?);
    report.constraint_residuals = constraint_residuals(pb, &st)?;
    Ok(Converged { state: st, report })
}

impl Converged {
    pub fn record(&self, pb: &Problem, manifest: Manifest) -> Result<RunRecord> {
        state_record(pb, &self.state, manifest)
    }
}

pub fn state_record(pb: &Problem, st: &IterationState, manifest: Manifest) -> Result<RunRecord> {
    let mut rec = RunRecord::new(manifest);
    let nb = pb.disc.n_boundary();
    for k in 0..st.levels() {
        let fields = st.fields(pb, k);
        let boundary_conformal = fields.flux[..nb].to_vec();
        let boundary_physical = boundary_conformal
            .iter()
            .map(|z| pb.map().inverse(z))
            .collect();
        rec.push(Snapshot {
            t: pb.time(k),
            fields,
            boundary_conformal,
            boundary_physical,
        })?;
    }
    Ok(rec)
}

/// Least-squares fit of `log r = log C + log(1 + 1/We) + δ log T` over
/// `(T, We, r)` samples; returns `(C, δ)`.
pub fn fit_contraction(samples: &[(f64, f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, we, r)| *t > 0.0 && *we > 0.0 && *r > 0.0)
        .map(|(t, we, r)| (t.ln(), r.ln() - (1.0 + 1.0 / we).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let den = m * sxx - sx * sx;
    if den.abs() < 1e-300 {
        return None;
    }
    let delta = (m * sxy - sx * sy) / den;
    let logc = (sy - delta * sx) / m;
    Some((logc.exp(), delta))
}
