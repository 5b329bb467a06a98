//! Lagrangian flux `dX/dt = J^P(X) v` and its derived gradients.

use rayon::prelude::*;

use crate::conformal::ConformalMap;
use crate::error::{Error, Result};
use crate::grid::{split, Grid};
use crate::tensor::{adjugate, cofactor, Mat2, Vec2};

/// Below this `det(∇X)` the flux is treated as folded.
pub const FOLD_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct FluxState {
    pub x: Vec<Vec2>,
    pub grad: Vec<Mat2>,
    pub zeta: Vec<Mat2>,
    pub grad_lambda: Vec<Mat2>,
}

impl FluxState {
    pub fn new(grid: &Grid, x: Vec<Vec2>) -> Result<Self> {
        let grad = flux_gradient(grid, &x);
        let zeta = zeta_from_gradient(&grad)?;
        let grad_lambda = grad.iter().map(cofactor).collect();
        Ok(Self {
            x,
            grad,
            zeta,
            grad_lambda,
        })
    }

    pub fn identity(grid: &Grid) -> Self {
        let n = grid.len();
        Self {
            x: grid.nodes().to_vec(),
            grad: vec![Mat2::identity(); n],
            zeta: vec![Mat2::identity(); n],
            grad_lambda: vec![Mat2::identity(); n],
        }
    }
}

/// `(∇X)_{ij} = ∂X_i/∂α_j`.
pub fn flux_gradient(grid: &Grid, x: &[Vec2]) -> Vec<Mat2> {
    let (a, b) = split(x);
    let ga = grid.gradient(&a);
    let gb = grid.gradient(&b);
    ga.iter()
        .zip(&gb)
        .map(|(p, q)| Mat2::new(p.x, p.y, q.x, q.y))
        .collect()
}

fn zeta_from_gradient(grad: &[Mat2]) -> Result<Vec<Mat2>> {
    grad.iter()
        .enumerate()
        .map(|(node, g)| {
            let det = g.determinant();
            if !(det > FOLD_TOL) {
                return Err(Error::MeshFold { node, det });
            }
            Ok(adjugate(g) / det)
        })
        .collect()
}

/// `ζ = (∇X)⁻¹` at every node.
pub fn compute_zeta(grid: &Grid, x: &[Vec2]) -> Result<Vec<Mat2>> {
    zeta_from_gradient(&flux_gradient(grid, x))
}

/// `∇_Λ X = -Λ ∇X Λ` at every node.
pub fn cofactor_gradient(grid: &Grid, x: &[Vec2]) -> Vec<Mat2> {
    flux_gradient(grid, x).iter().map(cofactor).collect()
}

fn rhs(map: &ConformalMap, x: &Vec2, v: &Vec2) -> Result<Vec2> {
    Ok(map.jacobian(x)? * v)
}

fn rk4_node(map: &ConformalMap, x: &Vec2, v0: &Vec2, v1: &Vec2, dt: f64) -> Result<Vec2> {
    let vm = (v0 + v1) * 0.5;
    let k1 = rhs(map, x, v0)?;
    let k2 = rhs(map, &(x + k1 * (0.5 * dt)), &vm)?;
    let k3 = rhs(map, &(x + k2 * (0.5 * dt)), &vm)?;
    let k4 = rhs(map, &(x + k3 * dt), v1)?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// One RK4 step with `v` frozen over the step.
pub fn advance_flux(map: &ConformalMap, x: &[Vec2], v: &[Vec2], dt: f64) -> Result<Vec<Vec2>> {
    advance_flux_linear(map, x, v, v, dt)
}

/// One RK4 step with `v` varying linearly from `v0` to `v1` across the step.
pub fn advance_flux_linear(
    map: &ConformalMap,
    x: &[Vec2],
    v0: &[Vec2],
    v1: &[Vec2],
    dt: f64,
) -> Result<Vec<Vec2>> {
    if x.len() != v0.len() || x.len() != v1.len() {
        return Err(Error::Shape("flux and velocity lengths differ".into()));
    }
    x.par_iter()
        .zip(v0.par_iter().zip(v1.par_iter()))
        .map(|(xi, (a, b))| rk4_node(map, xi, a, b, dt))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InterfaceCurve;
    use crate::grid::build_reference_grid;
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid {
        let c = InterfaceCurve::circle(Vec2::new(2.0, 0.5), 1.0, 32).unwrap();
        build_reference_grid(&c, 32).unwrap()
    }

    #[test]
    fn zero_velocity_keeps_flux() {
        let g = grid();
        let v = vec![Vec2::zeros(); g.len()];
        let x = advance_flux(&ConformalMap::default(), g.nodes(), &v, 0.1).unwrap();
        assert_eq!(x, g.nodes());
    }

    #[test]
    fn identity_mode_translates_exactly() {
        let g = grid();
        let v = vec![Vec2::new(1.0, 0.0); g.len()];
        let x = advance_flux(&ConformalMap::Identity, g.nodes(), &v, 0.1).unwrap();
        for (a, b) in x.iter().zip(g.nodes()) {
            assert_abs_diff_eq!(a - b, Vec2::new(0.1, 0.0), epsilon = 1e-15);
        }
    }

    #[test]
    fn singular_jacobian_at_branch_point() {
        let v = vec![Vec2::new(1.0, 0.0)];
        let r = advance_flux(&ConformalMap::default(), &[Vec2::zeros()], &v, 0.1);
        assert!(matches!(r, Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn zeta_examples() {
        let g = grid();
        let z = compute_zeta(&g, g.nodes()).unwrap();
        for m in &z {
            assert_abs_diff_eq!(*m, Mat2::identity(), epsilon = 1e-11);
        }
        let dil: Vec<Vec2> = g.nodes().iter().map(|p| p * 2.0).collect();
        for m in compute_zeta(&g, &dil).unwrap() {
            assert_abs_diff_eq!(m, Mat2::identity() * 0.5, epsilon = 1e-11);
        }
        let th = 0.4f64;
        let rot = Mat2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        let xr: Vec<Vec2> = g.nodes().iter().map(|p| rot * p).collect();
        for m in compute_zeta(&g, &xr).unwrap() {
            assert_abs_diff_eq!(m, rot.transpose(), epsilon = 1e-11);
        }
        let folded: Vec<Vec2> = g.nodes().iter().map(|p| Vec2::new(p.x, -p.y)).collect();
        assert!(matches!(
            compute_zeta(&g, &folded),
            Err(Error::MeshFold { .. })
        ));
    }

    #[test]
    fn cofactor_examples() {
        let g = grid();
        for m in cofactor_gradient(&g, g.nodes()) {
            assert_abs_diff_eq!(m, Mat2::identity(), epsilon = 1e-11);
        }
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(cofactor(&a), Mat2::new(4.0, -3.0, -2.0, 1.0));
    }

    proptest::proptest! {
        #[test]
        fn cofactor_preserves_determinant(c in proptest::collection::vec(-1.0f64..1.0, 6)) {
            let g = grid();
            let x: Vec<Vec2> = g.nodes().iter().map(|p| Vec2::new(
                p.x + 0.1 * (c[0] * p.y + c[1] * p.x * p.x).sin() + c[2] * p.y,
                p.y + 0.1 * (c[3] * p.x).cos() + c[4] * p.x * p.y * 0.1 + c[5] * p.x,
            )).collect();
            let grad = flux_gradient(&g, &x);
            let cof = cofactor_gradient(&g, &x);
            for (a, b) in grad.iter().zip(&cof) {
                proptest::prop_assert!((a.determinant() - b.determinant()).abs() < 1e-12 * (1.0 + a.determinant().abs()));
            }
        }
    }
}
