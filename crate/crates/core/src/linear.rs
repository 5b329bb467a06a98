//! Implicit-Euler step of the linearized momentum / trace / traction system
//! and the lift that absorbs the initial data.
//!
//! Unknowns are ordered `[w1, w2, q]` per node. Interior nodes carry the two
//! momentum rows, boundary nodes the two traction rows; every node carries the
//! stabilized trace row `Tr(∇w J^P) - τ Δq = g`.

use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::Serialize;

use crate::conformal::{ConformalMap, MapFrame};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::Params;
use crate::sparse::{Accum, CsrOp};
use crate::tensor::{lambda, Mat2, Sym2, Vec2};

/// Default pressure-stabilization factor `β` in `τ = β h² / (1-κ)`.
pub const DEFAULT_BETA: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearRhs {
    pub f: Vec<Vec2>,
    pub g: Vec<f64>,
    /// Traction data on the boundary nodes only.
    pub h: Vec<Vec2>,
    pub v0: Vec<Vec2>,
}

impl LinearRhs {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            f: vec![Vec2::zeros(); grid.len()],
            g: vec![0.0; grid.len()],
            h: vec![Vec2::zeros(); grid.n_theta()],
            v0: vec![Vec2::zeros(); grid.len()],
        }
    }
}

/// Maximum absolute residual of each equation family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowResiduals {
    pub momentum: f64,
    pub trace: f64,
    pub traction: f64,
}

impl RowResiduals {
    pub fn max(&self) -> f64 {
        self.momentum.max(self.trace).max(self.traction)
    }
}

/// Reference-configuration geometry shared by the linear operator, the lift
/// and the right-hand-side assembly.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub grid: Arc<Grid>,
    pub map: ConformalMap,
    /// `J^P`, `Q²` at the reference nodes.
    pub frame: MapFrame,
    /// `(J^P)⁻¹ ñ₀` on the boundary nodes.
    pub m0: Vec<Vec2>,
}

impl Discretization {
    pub fn new(grid: Arc<Grid>, map: ConformalMap) -> Result<Self> {
        let frame = MapFrame::at(&map, grid.nodes())?;
        let m0 = grid
            .normals()
            .iter()
            .enumerate()
            .map(|(i, n)| frame.jp_inv[i] * n)
            .collect();
        Ok(Self {
            grid,
            map,
            frame,
            m0,
        })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn n_boundary(&self) -> usize {
        self.grid.n_theta()
    }

    /// Physical-coordinate divergence `Tr(∇v J^P)` at every node.
    pub fn trace_divergence(&self, v: &[Vec2]) -> Vec<f64> {
        self.grid
            .vector_gradient(v)
            .iter()
            .zip(&self.frame.jp)
            .map(|(g, j)| (g * j).trace())
            .collect()
    }

    /// Physical divergence of a stress field: `Σ_{m,k} ∂_m T_ik J^P_mk`.
    pub fn stress_divergence(&self, t: &[Sym2], jz: &[Mat2]) -> Vec<Vec2> {
        let xx: Vec<f64> = t.iter().map(|s| s.xx).collect();
        let xy: Vec<f64> = t.iter().map(|s| s.xy).collect();
        let yy: Vec<f64> = t.iter().map(|s| s.yy).collect();
        let gxx = self.grid.gradient(&xx);
        let gxy = self.grid.gradient(&xy);
        let gyy = self.grid.gradient(&yy);
        (0..self.len())
            .map(|p| {
                let m = &jz[p];
                // row i of T, column k, derivative m: ∂_m T_ik (M)_mk
                let d = |g0: &Vec2, g1: &Vec2| {
                    let mut s = 0.0;
                    for mm in 0..2 {
                        s += g0[mm] * m[(mm, 0)] + g1[mm] * m[(mm, 1)];
                    }
                    s
                };
                Vec2::new(d(&gxx[p], &gxy[p]), d(&gxy[p], &gyy[p]))
            })
            .collect()
    }

    /// `n̂ = (J^P)⁻¹ñ₀ / |(J^P)⁻¹ñ₀|`, the physical outward normal.
    pub fn physical_normals(&self) -> Vec<Vec2> {
        self.m0.iter().map(|m| m.normalize()).collect()
    }
}

pub fn stabilization(p: &Params, h2: f64, beta: f64) -> f64 {
    beta * h2 / p.solvent()
}

/// Factored implicit-Euler operator, reusable across steps and sweeps.
pub struct StokesSolver {
    disc: Arc<Discretization>,
    params: Params,
    dt: f64,
    beta: f64,
    matrix: CsrOp,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    tau: Vec<f64>,
}

impl std::fmt::Debug for StokesSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StokesSolver")
            .field("dt", &self.dt)
            .field("beta", &self.beta)
            .field("unknowns", &self.matrix.nrows())
            .finish()
    }
}

impl StokesSolver {
    pub fn new(disc: Arc<Discretization>, p: &Params, dt: f64, beta: f64) -> Result<Self> {
        p.validate()?;
        if !(dt > 0.0) {
            return Err(Error::param("/params/dt", "must be > 0"));
        }
        if !(p.reynolds > 0.0) {
            return Err(Error::Solver {
                msg: "pure traction problem needs Re > 0 to exclude rigid motions".into(),
                condition: f64::INFINITY,
            });
        }
        let g = &disc.grid;
        let tau: Vec<f64> = (0..g.len())
            .map(|k| stabilization(p, g.cell_size(k), beta))
            .collect();
        let matrix = assemble(&disc, p, dt, &tau);
        let n = matrix.nrows();
        let mut trip = Vec::with_capacity(matrix.val.len());
        for r in 0..n {
            for (c, v) in matrix.row(r) {
                trip.push(Triplet::new(r, c, v));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| {
            Error::Solver {
                msg: format!("sparse assembly failed: {e:?}"),
                condition: f64::NAN,
            }
        })?;
        let lu = a.sp_lu().map_err(|e| Error::Solver {
            msg: format!("factorization failed: {e:?}"),
            condition: f64::INFINITY,
        })?;
        Ok(Self {
            disc,
            params: p.clone(),
            dt,
            beta,
            matrix,
            lu,
            tau,
        })
    }

    pub fn discretization(&self) -> &Arc<Discretization> {
        &self.disc
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn matrix(&self) -> &CsrOp {
        &self.matrix
    }

    fn rhs_vector(&self, rhs: &LinearRhs, v_prev: &[Vec2]) -> Result<Vec<f64>> {
        let n = self.disc.len();
        let nb = self.disc.n_boundary();
        if rhs.f.len() != n || rhs.g.len() != n || rhs.h.len() != nb || v_prev.len() != n {
            return Err(Error::Shape(
                "right-hand side does not match the grid".into(),
            ));
        }
        let finite = rhs
            .f
            .iter()
            .chain(&rhs.h)
            .all(|v| v.x.is_finite() && v.y.is_finite())
            && rhs.g.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Compatibility("non-finite linear data".into()));
        }
        let c = self.params.reynolds / self.dt;
        let mut b = vec![0.0; 3 * n];
        for k in 0..n {
            if k < nb {
                b[3 * k] = rhs.h[k].x;
                b[3 * k + 1] = rhs.h[k].y;
            } else {
                b[3 * k] = rhs.f[k].x + c * v_prev[k].x;
                b[3 * k + 1] = rhs.f[k].y + c * v_prev[k].y;
            }
            b[3 * k + 2] = rhs.g[k];
        }
        Ok(b)
    }

    fn lu_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    /// Solves one step; returns `(v, q)`. One round of iterative refinement
    /// is applied.
    pub fn solve(&self, rhs: &LinearRhs, v_prev: &[Vec2]) -> Result<(Vec<Vec2>, Vec<f64>)> {
        let b = self.rhs_vector(rhs, v_prev)?;
        let mut x = self.lu_solve(&b);
        let r: Vec<f64> = self
            .matrix
            .apply(&x)
            .iter()
            .zip(&b)
            .map(|(ax, bi)| bi - ax)
            .collect();
        let dx = self.lu_solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        let (v, q) = unpack(&x);
        let res = self.residuals_raw(&x, &b);
        if !res.max().is_finite() || res.max() > self.params.tol_solver {
            let bnorm = b
                .iter()
                .fold(0.0f64, |a, v| a.max(v.abs()))
                .max(f64::MIN_POSITIVE);
            let xnorm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let anorm = self.matrix.val.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            return Err(Error::Solver {
                msg: format!("residual {:e} exceeds tol_solver", res.max()),
                condition: anorm * xnorm / bnorm / f64::EPSILON.max(res.max() / (anorm * xnorm)),
            });
        }
        Ok((v, q))
    }

    fn residuals_raw(&self, x: &[f64], b: &[f64]) -> RowResiduals {
        let ax = self.matrix.apply(x);
        let nb = self.disc.n_boundary();
        let mut out = RowResiduals {
            momentum: 0.0,
            trace: 0.0,
            traction: 0.0,
        };
        for (r, (a, bi)) in ax.iter().zip(b).enumerate() {
            let e = (a - bi).abs();
            let node = r / 3;
            let slot = if r % 3 == 2 {
                &mut out.trace
            } else if node < nb {
                &mut out.traction
            } else {
                &mut out.momentum
            };
            *slot = slot.max(e);
        }
        out
    }

    pub fn residuals(
        &self,
        v: &[Vec2],
        q: &[f64],
        rhs: &LinearRhs,
        v_prev: &[Vec2],
    ) -> Result<RowResiduals> {
        let b = self.rhs_vector(rhs, v_prev)?;
        Ok(self.residuals_raw(&pack(v, q), &b))
    }

    /// The discrete operator applied to `(v, q)`, returned as right-hand-side
    /// data. Feeding it back to [`StokesSolver::solve`] recovers `(v, q)`.
    pub fn apply(&self, v: &[Vec2], q: &[f64], v_prev: &[Vec2]) -> LinearRhs {
        let ax = self.matrix.apply(&pack(v, q));
        let n = self.disc.len();
        let nb = self.disc.n_boundary();
        let c = self.params.reynolds / self.dt;
        let mut rhs = LinearRhs::zeros(&self.disc.grid);
        for k in 0..n {
            let a = Vec2::new(ax[3 * k], ax[3 * k + 1]);
            if k < nb {
                rhs.h[k] = a;
            } else {
                rhs.f[k] = a - v_prev[k] * c;
            }
            rhs.g[k] = ax[3 * k + 2];
        }
        rhs
    }
}

fn pack(v: &[Vec2], q: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(3 * v.len());
    for (a, b) in v.iter().zip(q) {
        x.extend_from_slice(&[a.x, a.y, *b]);
    }
    x
}

fn unpack(x: &[f64]) -> (Vec<Vec2>, Vec<f64>) {
    let n = x.len() / 3;
    (
        (0..n).map(|k| Vec2::new(x[3 * k], x[3 * k + 1])).collect(),
        (0..n).map(|k| x[3 * k + 2]).collect(),
    )
}

fn assemble(disc: &Discretization, p: &Params, dt: f64, tau: &[f64]) -> CsrOp {
    let g = &disc.grid;
    let n = g.len();
    let nb = g.n_theta();
    let nu = p.solvent();
    let c = p.reynolds / dt;
    let d = [&g.d1, &g.d2];
    let mut rows = Vec::with_capacity(3 * n);
    for k in 0..n {
        let j = &disc.frame.jp[k];
        if k < nb {
            // [-q I + ν(G + Gᵀ)] m, G = ∇w J
            let m = disc.m0[k];
            let jm = j * m;
            for a in 0..2 {
                let mut acc = Accum::default();
                acc.push(3 * k + 2, -m[a]);
                for kk in 0..2 {
                    for (col, val) in d[kk].row(k) {
                        acc.push(3 * col + a, nu * val * jm[kk]);
                        for b in 0..2 {
                            acc.push(3 * col + b, nu * val * m[b] * j[(kk, a)]);
                        }
                    }
                }
                rows.push(acc.finish());
            }
        } else {
            let q2 = disc.frame.q2[k];
            for a in 0..2 {
                let mut acc = Accum::default();
                acc.push(3 * k + a, c);
                acc.extend(
                    g.lap.row(k).map(|(col, v)| (3 * col + a, -nu * q2 * v)),
                    1.0,
                );
                for b in 0..2 {
                    // (Jᵀ ∇q)_a = Σ_b J_ba ∂_b q
                    acc.extend(
                        d[b].row(k).map(|(col, v)| (3 * col + 2, j[(b, a)] * v)),
                        1.0,
                    );
                }
                rows.push(acc.finish());
            }
        }
        let mut acc = Accum::default();
        for i in 0..2 {
            for kk in 0..2 {
                acc.extend(
                    d[kk].row(k).map(|(col, v)| (3 * col + i, v * j[(kk, i)])),
                    1.0,
                );
            }
        }
        acc.extend(g.lap.row(k).map(|(col, v)| (3 * col + 2, -tau[k] * v)), 1.0);
        rows.push(acc.finish());
    }
    CsrOp::from_rows(rows)
}

/// Scalar Dirichlet problem `Q² Δq = s` inside, `q = b` on the boundary.
fn solve_pressure_poisson(disc: &Discretization, s: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let g = &disc.grid;
    let n = g.len();
    let nb = g.n_theta();
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        if k < nb {
            trip.push(Triplet::new(k, k, 1.0));
            rhs[k] = b[k];
        } else {
            for (c, v) in g.lap.row(k) {
                trip.push(Triplet::new(k, c, disc.frame.q2[k] * v));
            }
            rhs[k] = s[k];
        }
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| {
        Error::Solver {
            msg: format!("sparse assembly failed: {e:?}"),
            condition: f64::NAN,
        }
    })?;
    let lu = a.sp_lu().map_err(|e| Error::Solver {
        msg: format!("pressure lift factorization failed: {e:?}"),
        condition: f64::INFINITY,
    })?;
    let col = Col::<f64>::from_fn(n, |i| rhs[i]);
    let x = lu.solve(&col);
    let out: Vec<f64> = (0..n).map(|i| x[i]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            msg: "pressure lift produced non-finite values".into(),
            condition: f64::INFINITY,
        });
    }
    Ok(out)
}

/// Time weight `t e^{-t²}` of the lift correction.
pub fn lift_weight(t: f64) -> f64 {
    t * (-t * t).exp()
}

pub fn lift_weight_rate(t: f64) -> f64 {
    (1.0 - 2.0 * t * t) * (-t * t).exp()
}

/// Velocity lift matching the initial data and its initial time derivative.
#[derive(Debug, Clone)]
pub struct PhiLift {
    pub v0: Vec<Vec2>,
    /// Correction multiplied by `t e^{-t²}`.
    pub phi1: Vec<Vec2>,
    pub q_phi: Vec<f64>,
    /// `∇(J^P v0)`.
    grad_jv0: Vec<Mat2>,
    /// `Σ_k ∂_k J^P (J^P v0)_k`.
    djp_v0: Vec<Mat2>,
    jp: Vec<Mat2>,
}

impl PhiLift {
    pub fn phi(&self, t: f64) -> Vec<Vec2> {
        let s = lift_weight(t);
        self.v0
            .iter()
            .zip(&self.phi1)
            .map(|(a, b)| a + b * s)
            .collect()
    }

    pub fn dphi_dt(&self, t: f64) -> Vec<Vec2> {
        let s = lift_weight_rate(t);
        self.phi1.iter().map(|b| b * s).collect()
    }

    pub fn zeta_phi(&self, t: f64) -> Vec<Mat2> {
        let s = lift_weight(t);
        self.grad_jv0
            .iter()
            .map(|g| Mat2::identity() - g * s)
            .collect()
    }

    pub fn jp_phi(&self, t: f64) -> Vec<Mat2> {
        let s = lift_weight(t);
        self.jp
            .iter()
            .zip(&self.djp_v0)
            .map(|(j, d)| j + d * s)
            .collect()
    }
}

/// Builds the lift. The pressure `q_φ` solves `Q² Δq_φ = Tr(∇R J^P)` with
/// `R = (1-κ)Q²Δv0 + div T0`, equal to the normal traction of the initial
/// data on the boundary.
pub fn build_phi(disc: &Discretization, v0: &[Vec2], t0: &[Sym2], p: &Params) -> Result<PhiLift> {
    let g = &disc.grid;
    let n = g.len();
    if v0.len() != n || t0.len() != n {
        return Err(Error::Shape("initial data does not match the grid".into()));
    }
    if !(p.reynolds > 0.0) {
        return Err(Error::Solver {
            msg: "lift needs Re > 0".into(),
            condition: f64::INFINITY,
        });
    }
    let nu = p.solvent();
    let jp = &disc.frame.jp;
    let lap = g.vector_laplacian(v0);
    let div_t = disc.stress_divergence(t0, jp);
    let r: Vec<Vec2> = (0..n)
        .map(|k| lap[k] * (nu * disc.frame.q2[k]) + div_t[k])
        .collect();
    let src = disc.trace_divergence(&r);

    let grad_v0 = g.vector_gradient(v0);
    let nhat = disc.physical_normals();
    let mut bc = vec![0.0; n];
    for k in 0..g.n_theta() {
        let gj = grad_v0[k] * jp[k];
        let s = (gj + gj.transpose()) * nu + t0[k].to_mat();
        bc[k] = nhat[k].dot(&(s * nhat[k]));
    }
    let q_phi = solve_pressure_poisson(disc, &src, &bc)?;
    let grad_q = g.gradient(&q_phi);
    let phi1 = (0..n)
        .map(|k| (r[k] - jp[k].transpose() * grad_q[k]) / p.reynolds)
        .collect();

    let jv0: Vec<Vec2> = (0..n).map(|k| jp[k] * v0[k]).collect();
    let grad_jv0 = g.vector_gradient(&jv0);
    let djp_v0 = (0..n)
        .map(|k| disc.frame.djp[k][0] * jv0[k].x + disc.frame.djp[k][1] * jv0[k].y)
        .collect();
    Ok(PhiLift {
        v0: v0.to_vec(),
        phi1,
        q_phi,
        grad_jv0,
        djp_v0,
        jp: jp.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiftCompatibility {
    pub trace: f64,
    pub tangential: f64,
    pub pass: bool,
}

/// Residuals of `Tr(∇v0 J^P) = g(0)` and of the tangential traction balance
/// between the initial viscous stress and `h(0)`.
pub fn check_lift_compatibility(
    disc: &Discretization,
    rhs: &LinearRhs,
    p: &Params,
) -> LiftCompatibility {
    let div = disc.trace_divergence(&rhs.v0);
    let trace = div
        .iter()
        .zip(&rhs.g)
        .fold(0.0f64, |a, (d, g)| a.max((d - g).abs()));
    let grad = disc.grid.vector_gradient(&rhs.v0);
    let l = lambda();
    let mut tangential = 0.0f64;
    for k in 0..disc.n_boundary() {
        let gj = grad[k] * disc.frame.jp[k];
        let s = (gj + gj.transpose()) * p.solvent();
        let tvec = l * disc.m0[k].normalize();
        let e = tvec.dot(&(s * disc.m0[k] - rhs.h[k]));
        tangential = tangential.max(e.abs());
    }
    LiftCompatibility {
        trace,
        tangential,
        pass: trace < p.tol_div && tangential < p.tol_div,
    }
}
