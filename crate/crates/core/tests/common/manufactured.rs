//! Identity-map manufactured Stokes problem on a shifted unit disc.

use std::sync::Arc;

use viscosplash::conformal::ConformalMap;
use viscosplash::geometry::InterfaceCurve;
use viscosplash::grid::build_reference_grid;
use viscosplash::linear::{Discretization, LinearRhs, StokesSolver};
use viscosplash::params::Params;
use viscosplash::tensor::{Mat2, Vec2};

// stream function sin(x) cos(y) / 2 + x y² / 4
pub fn vel(x: &Vec2) -> Vec2 {
    Vec2::new(
        -0.5 * x.x.sin() * x.y.sin() + 0.5 * x.x * x.y,
        -0.5 * x.x.cos() * x.y.cos() - 0.25 * x.y * x.y,
    )
}

pub fn grad_vel(x: &Vec2) -> Mat2 {
    Mat2::new(
        -0.5 * x.x.cos() * x.y.sin() + 0.5 * x.y,
        -0.5 * x.x.sin() * x.y.cos() + 0.5 * x.x,
        0.5 * x.x.sin() * x.y.cos(),
        0.5 * x.x.cos() * x.y.sin() - 0.5 * x.y,
    )
}

pub fn lap_vel(x: &Vec2) -> Vec2 {
    Vec2::new(x.x.sin() * x.y.sin(), x.x.cos() * x.y.cos() - 0.5)
}

pub fn pres(x: &Vec2) -> f64 {
    (x.x * 0.7).cos() * (x.y + 0.2).sin()
}

pub fn grad_pres(x: &Vec2) -> Vec2 {
    Vec2::new(
        -0.7 * (x.x * 0.7).sin() * (x.y + 0.2).sin(),
        (x.x * 0.7).cos() * (x.y + 0.2).cos(),
    )
}

#[derive(Debug, Clone, Copy)]
pub struct Errors {
    pub velocity: f64,
    pub pressure: f64,
    pub residual: f64,
    pub tol: f64,
}

pub fn params() -> Params {
    Params {
        kappa: 0.3,
        reynolds: 1.0,
        ..Params::default()
    }
}

/// L² errors of one implicit-Euler solve whose exact answer is `(vel, pres)`.
pub fn solve(n: usize, p: &Params, dt: f64, beta: f64) -> Errors {
    let c = InterfaceCurve::circle(Vec2::new(0.3, 0.25), 1.0, n).unwrap();
    let g = Arc::new(build_reference_grid(&c, n).unwrap());
    let d = Arc::new(Discretization::new(g.clone(), ConformalMap::Identity).unwrap());
    let s = StokesSolver::new(d, p, dt, beta).unwrap();
    let nu = p.solvent();
    let mut rhs = LinearRhs::zeros(&g);
    let prev = vec![Vec2::zeros(); g.len()];
    for (k, x) in g.nodes().iter().enumerate() {
        rhs.f[k] = vel(x) * (p.reynolds / dt) - lap_vel(x) * nu + grad_pres(x);
    }
    for k in 0..g.n_theta() {
        let x = g.nodes()[k];
        let gv = grad_vel(&x);
        let sig = (gv + gv.transpose()) * nu - Mat2::identity() * pres(&x);
        rhs.h[k] = sig * g.normals()[k];
    }
    let (v, q) = s.solve(&rhs, &prev).unwrap();
    let res = s.residuals(&v, &q, &rhs, &prev).unwrap();
    let (mut ev, mut eq) = (0.0, 0.0);
    for (k, x) in g.nodes().iter().enumerate() {
        ev += g.weights()[k] * (v[k] - vel(x)).norm_squared();
        eq += g.weights()[k] * (q[k] - pres(x)).powi(2);
    }
    Errors {
        velocity: ev.sqrt(),
        pressure: eq.sqrt(),
        residual: res.max(),
        tol: p.tol_solver,
    }
}
