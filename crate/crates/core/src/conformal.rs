//! The square-root branch map `P`, its inverse, Jacobian and weight `Q²`, and
//! classification of physical-domain states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{crossing_pairs, mean_spacing, nonlocal_gap, InterfaceCurve};
use crate::tensor::{complex_matrix, Mat2, Vec2};

const CUT_TOL: f64 = 1e-12;
const SINGULAR_TOL: f64 = 1e-12;

/// Branch of `√(z - branch_point)` that is continuous off the ray
/// `branch_point + r·cut_direction`, `r ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchMap {
    pub branch_point: Vec2,
    pub cut_direction: Vec2,
}

impl Default for BranchMap {
    fn default() -> Self {
        Self {
            branch_point: Vec2::zeros(),
            cut_direction: Vec2::new(-1.0, 0.0),
        }
    }
}

impl BranchMap {
    pub fn new(branch_point: Vec2, cut_direction: Vec2) -> Result<Self> {
        if ((cut_direction.norm() - 1.0).abs() > 1e-12)
            || !branch_point.iter().all(|v| v.is_finite())
        {
            return Err(Error::param(
                "/conformal/cut_direction",
                "cut direction must have unit norm",
            ));
        }
        Ok(Self {
            branch_point,
            cut_direction,
        })
    }

    /// `-conj(d)` as a complex pair; multiplying by it rotates the cut onto the
    /// negative real axis.
    fn rot(&self) -> (f64, f64) {
        (-self.cut_direction.x, self.cut_direction.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConformalMap {
    Sqrt(BranchMap),
    /// Test-only mode: `P = id`, `J^P = I`, `Q² = 1`.
    Identity,
}

impl Default for ConformalMap {
    fn default() -> Self {
        ConformalMap::Sqrt(BranchMap::default())
    }
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

fn cinv(a: (f64, f64)) -> (f64, f64) {
    let r2 = a.0 * a.0 + a.1 * a.1;
    (a.0 / r2, -a.1 / r2)
}

/// Principal square root with branch cut on the negative real axis.
fn csqrt(a: (f64, f64)) -> (f64, f64) {
    let r = a.0.hypot(a.1);
    if r == 0.0 {
        return (0.0, 0.0);
    }
    let re = (0.5 * (r + a.0)).sqrt();
    let im = (0.5 * (r - a.0)).sqrt();
    (re, if a.1 < 0.0 { -im } else { im })
}

impl ConformalMap {
    pub fn is_identity(&self) -> bool {
        matches!(self, ConformalMap::Identity)
    }

    pub fn forward(&self, z: &Vec2) -> Result<Vec2> {
        match self {
            ConformalMap::Identity => Ok(*z),
            ConformalMap::Sqrt(b) => {
                let w = cmul((z.x - b.branch_point.x, z.y - b.branch_point.y), b.rot());
                let scale = 1.0f64.max(w.0.abs());
                if w.1.abs() < CUT_TOL * scale && w.0 <= CUT_TOL {
                    return Err(Error::BranchCut { x: z.x, y: z.y });
                }
                let s = csqrt(w);
                Ok(Vec2::new(s.0, s.1))
            }
        }
    }

    pub fn inverse(&self, zt: &Vec2) -> Vec2 {
        match self {
            ConformalMap::Identity => *zt,
            ConformalMap::Sqrt(b) => {
                let sq = cmul((zt.x, zt.y), (zt.x, zt.y));
                let w = cmul(sq, cinv(b.rot()));
                Vec2::new(w.0 + b.branch_point.x, w.1 + b.branch_point.y)
            }
        }
    }

    /// `dP/dz` at `P⁻¹(zt)` as a complex pair.
    fn derivative(&self, zt: &Vec2) -> Result<(f64, f64)> {
        match self {
            ConformalMap::Identity => Ok((1.0, 0.0)),
            ConformalMap::Sqrt(b) => {
                if zt.norm() < SINGULAR_TOL {
                    return Err(Error::SingularJacobian { x: zt.x, y: zt.y });
                }
                let inv = cinv((2.0 * zt.x, 2.0 * zt.y));
                Ok(cmul(b.rot(), inv))
            }
        }
    }

    pub fn jacobian(&self, zt: &Vec2) -> Result<Mat2> {
        let (a, b) = self.derivative(zt)?;
        Ok(complex_matrix(a, b))
    }

    pub fn q_squared(&self, zt: &Vec2) -> Result<f64> {
        let (a, b) = self.derivative(zt)?;
        Ok(a * a + b * b)
    }

    /// Partial derivatives `∂J^P/∂zt_1` and `∂J^P/∂zt_2`.
    pub fn jacobian_derivatives(&self, zt: &Vec2) -> Result<[Mat2; 2]> {
        match self {
            ConformalMap::Identity => Ok([Mat2::zeros(), Mat2::zeros()]),
            ConformalMap::Sqrt(b) => {
                if zt.norm() < SINGULAR_TOL {
                    return Err(Error::SingularJacobian { x: zt.x, y: zt.y });
                }
                // d/dzt of rot / (2 zt) is -rot / (2 zt²)
                let z2 = cmul((zt.x, zt.y), (zt.x, zt.y));
                let d = cmul(b.rot(), cinv((-2.0 * z2.0, -2.0 * z2.1)));
                let di = cmul((0.0, 1.0), d);
                Ok([complex_matrix(d.0, d.1), complex_matrix(di.0, di.1)])
            }
        }
    }

    pub fn map_curve_inverse(&self, curve: &InterfaceCurve) -> Vec<Vec2> {
        curve.markers().iter().map(|p| self.inverse(p)).collect()
    }
}

/// `J^P`, its inverse, `Q²` and the derivatives of `J^P`, sampled at a set of
/// conformal points.
#[derive(Debug, Clone)]
pub struct MapFrame {
    pub jp: Vec<Mat2>,
    pub jp_inv: Vec<Mat2>,
    pub q2: Vec<f64>,
    pub djp: Vec<[Mat2; 2]>,
}

impl MapFrame {
    pub fn at(map: &ConformalMap, pts: &[Vec2]) -> Result<Self> {
        let mut f = MapFrame {
            jp: Vec::with_capacity(pts.len()),
            jp_inv: Vec::with_capacity(pts.len()),
            q2: Vec::with_capacity(pts.len()),
            djp: Vec::with_capacity(pts.len()),
        };
        for p in pts {
            let j = map.jacobian(p)?;
            let q2 = map.q_squared(p)?;
            f.jp_inv.push(j.transpose() / q2);
            f.jp.push(j);
            f.q2.push(q2);
            f.djp.push(map.jacobian_derivatives(p)?);
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainClass {
    Regular,
    SplashTangent,
    SelfIntersecting,
}

/// Classifies `P⁻¹` of a conformal-coordinate curve. `gap_tol` defaults to
/// twice the mean physical marker spacing.
pub fn classify_physical(
    map: &ConformalMap,
    curve_conformal: &InterfaceCurve,
    gap_tol: Option<f64>,
) -> DomainClass {
    let pts = map.map_curve_inverse(curve_conformal);
    classify_polyline(&pts, gap_tol)
}

pub fn classify_polyline(pts: &[Vec2], gap_tol: Option<f64>) -> DomainClass {
    if !crossing_pairs(pts).is_empty() {
        return DomainClass::SelfIntersecting;
    }
    let tol = gap_tol.unwrap_or_else(|| 2.0 * mean_spacing(pts));
    let gap = nonlocal_gap(pts, 3.0 * tol);
    if gap <= tol * (1.0 + 1e-12) {
        DomainClass::SplashTangent
    } else {
        DomainClass::Regular
    }
}
