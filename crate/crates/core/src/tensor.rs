//! Small fixed-size algebra used node-wise throughout the solver.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// The 90 degree rotation `((0, -1), (1, 0))`.
pub fn lambda() -> Mat2 {
    Mat2::new(0.0, -1.0, 1.0, 0.0)
}

/// `-Λ A Λ`, which equals the cofactor matrix of `A`.
pub fn cofactor(a: &Mat2) -> Mat2 {
    let l = lambda();
    -(l * a * l)
}

pub fn adjugate(a: &Mat2) -> Mat2 {
    Mat2::new(a[(1, 1)], -a[(0, 1)], -a[(1, 0)], a[(0, 0)])
}

/// Symmetric 2x2 tensor stored as three components; symmetry cannot be
/// violated by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn scaled_identity(c: f64) -> Self {
        Self::new(c, 0.0, c)
    }

    /// Symmetric part `(M + M^T) / 2`.
    pub fn from_mat(m: &Mat2) -> Self {
        Self {
            xx: m[(0, 0)],
            xy: 0.5 * (m[(0, 1)] + m[(1, 0)]),
            yy: m[(1, 1)],
        }
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.xx, self.xy, self.xy, self.yy)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::new(c * self.xx, c * self.xy, c * self.yy)
    }

    pub fn add(&self, o: &Sym2) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }

    pub fn sub(&self, o: &Sym2) -> Self {
        Self::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }

    pub fn frobenius(&self) -> f64 {
        (self.xx * self.xx + 2.0 * self.xy * self.xy + self.yy * self.yy).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.xx.abs().max(self.xy.abs()).max(self.yy.abs())
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let half = 0.5 * (self.xx - self.yy);
        let r = (half * half + self.xy * self.xy).sqrt();
        [mean - r, mean + r]
    }

    pub fn components(&self) -> [f64; 3] {
        [self.xx, self.xy, self.yy]
    }
}

/// Real 2x2 representation of multiplication by the complex number `re + i im`.
pub fn complex_matrix(re: f64, im: f64) -> Mat2 {
    Mat2::new(re, -im, im, re)
}

pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
