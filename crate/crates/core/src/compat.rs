//! Compatibility of the initial data with the incompressible free-boundary
//! problem.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::Discretization;
use crate::params::Params;
use crate::tensor::{lambda, Mat2, Sym2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub div_u0: f64,
    pub div_f0: f64,
    pub det_f0: f64,
    pub tangential_traction: f64,
    pub pass: bool,
}

/// Maximum nodal residuals of `div u0 = 0`, `div F0 = 0`, `det F0 = 1` and of
/// the tangential part of `((1-κ)(∇u0 + ∇u0ᵀ) + τ0) n` on the boundary.
/// Derivatives are physical, i.e. taken through `J^P`. `F0` defaults to `I`.
pub fn check_compatibility(
    disc: &Discretization,
    v0: &[Vec2],
    t0: &[Sym2],
    f0: Option<&[Mat2]>,
    p: &Params,
) -> Result<CompatibilityReport> {
    let n = disc.len();
    if v0.len() != n || t0.len() != n || f0.is_some_and(|f| f.len() != n) {
        return Err(Error::Shape("initial data does not match the grid".into()));
    }
    let g = &disc.grid;
    let jp = &disc.frame.jp;
    let max_abs = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0f64, |a, v| a.max(v.abs()));

    let div_u0 = max_abs(&mut disc.trace_divergence(v0).into_iter());

    let (div_f0, det_f0) = match f0 {
        None => (0.0, 0.0),
        Some(f) => {
            let mut div = 0.0f64;
            for i in 0..2 {
                let row: Vec<Vec2> = f.iter().map(|m| Vec2::new(m[(i, 0)], m[(i, 1)])).collect();
                div = div.max(max_abs(&mut disc.trace_divergence(&row).into_iter()));
            }
            let det = max_abs(&mut f.iter().map(|m| m.determinant() - 1.0));
            (div, det)
        }
    };

    let grad = g.vector_gradient(v0);
    let l = lambda();
    let nu = p.solvent();
    let tangential_traction = max_abs(&mut (0..disc.n_boundary()).map(|k| {
        let a = grad[k] * jp[k];
        let s = (a + a.transpose()) * nu + t0[k].to_mat();
        let nhat = disc.m0[k].normalize();
        (l * nhat).dot(&(s * nhat))
    }));

    let pass = div_u0 < p.tol_div
        && div_f0 < p.tol_div
        && det_f0 < p.tol_div
        && tangential_traction < p.tol_div;
    Ok(CompatibilityReport {
        div_u0,
        div_f0,
        det_f0,
        tangential_traction,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::conformal::ConformalMap;
    use crate::geometry::InterfaceCurve;
    use crate::grid::build_reference_grid;

    fn disc(center: Vec2) -> Discretization {
        let c = InterfaceCurve::circle(center, 1.0, 32).unwrap();
        let g = Arc::new(build_reference_grid(&c, 32).unwrap());
        Discretization::new(g, ConformalMap::Identity).unwrap()
    }

    #[test]
    fn rest_passes() {
        let d = disc(Vec2::new(0.0, 0.0));
        let n = d.len();
        let f = vec![Mat2::identity(); n];
        let r = check_compatibility(
            &d,
            &vec![Vec2::zeros(); n],
            &vec![Sym2::ZERO; n],
            Some(&f),
            &Params::default(),
        )
        .unwrap();
        assert_eq!(r.div_u0, 0.0);
        assert!(r.div_f0 < 1e-12);
        assert_eq!(r.det_f0, 0.0);
        assert_eq!(r.tangential_traction, 0.0);
        assert!(r.pass);
    }

    #[test]
    fn rigid_rotation_passes() {
        let d = disc(Vec2::new(0.0, 0.0));
        let v = d.grid.sample(|x| Vec2::new(-x.y, x.x));
        let r = check_compatibility(&d, &v, &vec![Sym2::ZERO; d.len()], None, &Params::default())
            .unwrap();
        assert!(r.div_u0 < 1e-12);
        assert!(r.tangential_traction < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn stretching_fails() {
        let d = disc(Vec2::new(0.5, -0.2));
        let v = d.grid.sample(|x| Vec2::new(x.x, 0.0));
        let r = check_compatibility(&d, &v, &vec![Sym2::ZERO; d.len()], None, &Params::default())
            .unwrap();
        assert!((r.div_u0 - 1.0).abs() < 1e-12);
        assert!(!r.pass);
    }

    #[test]
    fn sheared_deformation_gradient() {
        let d = disc(Vec2::new(0.0, 0.0));
        let f: Vec<Mat2> = d.grid.sample(|x| Mat2::new(1.0, x.y, 0.0, 1.0));
        let r = check_compatibility(
            &d,
            &vec![Vec2::zeros(); d.len()],
            &vec![Sym2::ZERO; d.len()],
            Some(&f),
            &Params::default(),
        )
        .unwrap();
        assert!((r.div_f0 - 1.0).abs() < 1e-12);
        assert!(r.det_f0 < 1e-15);
        assert!(!r.pass);
    }
}
