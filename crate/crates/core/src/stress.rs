//! Node-wise upper-convected stress update and analytic shear reference.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::tensor::{Mat2, Sym2};

/// Right-hand side of the stress ODE for a frozen velocity gradient `a`.
/// With `infinite_we` only the transport terms `A T + T Aᵀ` remain.
pub fn stress_rhs(t: &Sym2, a: &Mat2, p: &Params, infinite_we: bool) -> Sym2 {
    let tm = t.to_mat();
    let transport = a * tm + tm * a.transpose();
    if infinite_we {
        return Sym2::from_mat(&transport);
    }
    let we = p.weissenberg;
    let src = (a + a.transpose()) * (p.kappa / we);
    Sym2::from_mat(&(transport - tm / we + src))
}

fn midpoint(t: &Sym2, a: &Mat2, p: &Params, dt: f64, infinite_we: bool) -> Sym2 {
    let k1 = stress_rhs(t, a, p, infinite_we);
    let mid = t.add(&k1.scale(0.5 * dt));
    let k2 = stress_rhs(&mid, a, p, infinite_we);
    let out = t.add(&k2.scale(dt));
    Sym2::from_mat(&out.to_mat())
}

fn check_lengths(t: &[Sym2], a: &[Mat2]) -> Result<()> {
    if t.len() != a.len() {
        return Err(Error::Shape(format!(
            "stress has {} nodes, velocity gradient {}",
            t.len(),
            a.len()
        )));
    }
    Ok(())
}

/// RK2 midpoint step of `dT/dt = A T + T Aᵀ - T/We + (κ/We)(A + Aᵀ)` with the
/// physical velocity gradient `A` frozen over the step.
pub fn advance_stress(t_prev: &[Sym2], grad_u: &[Mat2], p: &Params, dt: f64) -> Result<Vec<Sym2>> {
    if !(p.weissenberg > 0.0) {
        return Err(Error::param("/params/weissenberg", "must be > 0"));
    }
    check_lengths(t_prev, grad_u)?;
    Ok(t_prev
        .par_iter()
        .zip(grad_u.par_iter())
        .map(|(t, a)| midpoint(t, a, p, dt, false))
        .collect())
}

/// As [`advance_stress`] with the relaxation and source terms removed.
pub fn infinite_we_mode(t_prev: &[Sym2], grad_u: &[Mat2], dt: f64) -> Result<Vec<Sym2>> {
    check_lengths(t_prev, grad_u)?;
    let p = Params::default();
    Ok(t_prev
        .par_iter()
        .zip(grad_u.par_iter())
        .map(|(t, a)| midpoint(t, a, &p, dt, true))
        .collect())
}

/// Closed-form stress under steady simple shear `∇u = [[0, γ̇], [0, 0]]`
/// starting from zero stress.
pub fn ucm_shear_oracle(gammadot: f64, t: f64, p: &Params) -> Sym2 {
    let we = p.weissenberg;
    let k = p.kappa;
    let e = (-t / we).exp();
    let xy = k * gammadot * (1.0 - e);
    let xx = 2.0 * k * gammadot * gammadot * (we * (1.0 - e) - t * e);
    Sym2::new(xx, xy, 0.0)
}
