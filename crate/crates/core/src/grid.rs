//! Body-fitted polar grid over the reference domain and its second-order
//! difference operators.
//!
//! Nodes sit on scaled copies of the boundary polygon, `x = c + ρ_j (γ_i - c)`
//! with `ρ_j = 1 - j/m`, plus one center node at `c`. Index `j·n + i` addresses
//! ring `j`, angle `i`; the center node comes last. Ring 0 is the boundary.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::{polygon_centroid, InterfaceCurve};
use crate::sparse::{Accum, CsrOp};
use crate::tensor::{cross, Mat2, Sym2, Vec2};

type Stencil = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    m: usize,
    center: Vec2,
    nodes: Vec<Vec2>,
    normals: Vec<Vec2>,
    weights: Vec<f64>,
    /// Local cell area `|det ∂x/∂ξ|` per node.
    cell_size: Vec<f64>,
    pub d1: CsrOp,
    pub d2: CsrOp,
    pub h11: CsrOp,
    pub h12: CsrOp,
    pub h22: CsrOp,
    pub lap: CsrOp,
}

/// Builds the grid with `n` boundary nodes and `n/2` rings.
pub fn build_reference_grid(curve: &InterfaceCurve, n: usize) -> Result<Grid> {
    Grid::new(curve, n, n / 2)
}

fn resample_closed(pts: &[Vec2], n: usize) -> Vec<Vec2> {
    let k = pts.len();
    let mut arc = vec![0.0; k + 1];
    for i in 0..k {
        arc[i + 1] = arc[i] + (pts[(i + 1) % k] - pts[i]).norm();
    }
    let total = arc[k];
    let mut seg = 0;
    (0..n)
        .map(|q| {
            let s = total * q as f64 / n as f64;
            while arc[seg + 1] < s {
                seg += 1;
            }
            let t = (s - arc[seg]) / (arc[seg + 1] - arc[seg]);
            pts[seg] * (1.0 - t) + pts[(seg + 1) % k] * t
        })
        .collect()
}

/// Smallest normalized wedge cross product; positive iff every ray from `c`
/// meets the polygon once.
fn star_quality(pts: &[Vec2], c: &Vec2) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let a = pts[i] - c;
            let b = pts[(i + 1) % n] - c;
            cross(&a, &b) / (a.norm() * b.norm())
        })
        .fold(f64::INFINITY, f64::min)
}

fn find_star_center(pts: &[Vec2]) -> Result<Vec2> {
    let c0 = polygon_centroid(pts);
    if star_quality(pts, &c0) > 0.0 {
        return Ok(c0);
    }
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let k = 40;
    let mut best = (f64::NEG_INFINITY, c0);
    for a in 1..k {
        for b in 1..k {
            let c = Vec2::new(
                lo.x + (hi.x - lo.x) * a as f64 / k as f64,
                lo.y + (hi.y - lo.y) * b as f64 / k as f64,
            );
            let q = star_quality(pts, &c);
            if q > best.0 {
                best = (q, c);
            }
        }
    }
    if best.0 > 0.0 {
        Ok(best.1)
    } else {
        Err(Error::Geometry(
            "curve is not star-shaped with respect to any interior point".into(),
        ))
    }
}

impl Grid {
    pub fn new(curve: &InterfaceCurve, n: usize, m: usize) -> Result<Self> {
        if !curve.self_intersections().is_empty() {
            return Err(Error::Geometry("curve self-intersects".into()));
        }
        if n < InterfaceCurve::MIN_MARKERS || m < 4 {
            return Err(Error::Geometry(format!(
                "grid needs n >= 16 and at least 4 rings (n = {n}, rings = {m})"
            )));
        }
        let boundary = if curve.len() == n {
            curve.markers().to_vec()
        } else {
            resample_closed(curve.markers(), n)
        };
        let center = find_star_center(&boundary)?;

        let mut nodes = Vec::with_capacity(n * m + 1);
        for j in 0..m {
            let rho = 1.0 - j as f64 / m as f64;
            for p in &boundary {
                nodes.push(if j == 0 {
                    *p
                } else {
                    center + (p - center) * rho
                });
            }
        }
        nodes.push(center);

        let normals = (0..n)
            .map(|i| {
                let t = boundary[(i + 1) % n] - boundary[(i + n - 1) % n];
                Vec2::new(t.y, -t.x).normalize()
            })
            .collect();

        let mut grid = Grid {
            n,
            m,
            center,
            nodes,
            normals,
            weights: Vec::new(),
            cell_size: Vec::new(),
            d1: CsrOp::from_rows(vec![]),
            d2: CsrOp::from_rows(vec![]),
            h11: CsrOp::from_rows(vec![]),
            h12: CsrOp::from_rows(vec![]),
            h22: CsrOp::from_rows(vec![]),
            lap: CsrOp::from_rows(vec![]),
        };
        if let Some(bad) = grid.cell_jacobians().iter().position(|a| *a <= 0.0) {
            return Err(Error::Geometry(format!("cell {bad} has nonpositive area")));
        }
        grid.weights = grid.quadrature_weights();
        grid.build_operators()?;
        Ok(grid)
    }

    pub fn n_theta(&self) -> usize {
        self.n
    }

    pub fn n_rings(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn center_index(&self) -> usize {
        self.n * self.m
    }

    pub fn center(&self) -> Vec2 {
        self.center
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    /// Outward unit normals at the boundary nodes `0..n`.
    pub fn normals(&self) -> &[Vec2] {
        &self.normals
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_size(&self, p: usize) -> f64 {
        self.cell_size[p]
    }

    pub fn is_boundary(&self, p: usize) -> bool {
        p < self.n
    }

    pub fn boundary_curve(&self) -> Vec<Vec2> {
        self.nodes[..self.n].to_vec()
    }

    /// `(i, j)` labels for output; the center node is `(0, m)`.
    pub fn label(&self, p: usize) -> (usize, usize) {
        if p == self.center_index() {
            (0, self.m)
        } else {
            (p % self.n, p / self.n)
        }
    }

    fn node(&self, j: usize, i: isize) -> usize {
        if j >= self.m {
            return self.center_index();
        }
        let n = self.n as isize;
        j * self.n + (((i % n) + n) % n) as usize
    }

    /// Cell areas: quads between consecutive rings and triangles at the
    /// center, vertices in counterclockwise order.
    pub fn cell_jacobians(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * self.m);
        for j in 0..self.m {
            for i in 0..self.n as isize {
                let a = self.nodes[self.node(j, i)];
                let b = self.nodes[self.node(j, i + 1)];
                let c = self.nodes[self.node(j + 1, i + 1)];
                let d = self.nodes[self.node(j + 1, i)];
                let area = if j + 1 == self.m {
                    0.5 * cross(&(b - a), &(c - a))
                } else {
                    0.5 * (cross(&(b - a), &(c - a)) + cross(&(c - a), &(d - a)))
                };
                out.push(area);
            }
        }
        out
    }

    fn quadrature_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.len()];
        let areas = self.cell_jacobians();
        for j in 0..self.m {
            for i in 0..self.n as isize {
                let area = areas[j * self.n + i as usize];
                if j + 1 == self.m {
                    for p in [self.node(j, i), self.node(j, i + 1), self.center_index()] {
                        w[p] += area / 3.0;
                    }
                } else {
                    for p in [
                        self.node(j, i),
                        self.node(j, i + 1),
                        self.node(j + 1, i + 1),
                        self.node(j + 1, i),
                    ] {
                        w[p] += area / 4.0;
                    }
                }
            }
        }
        w
    }

    fn stencil_i(&self, j: usize, i: isize) -> Stencil {
        if j >= self.m {
            return vec![];
        }
        vec![(self.node(j, i + 1), 0.5), (self.node(j, i - 1), -0.5)]
    }

    fn stencil_ii(&self, j: usize, i: isize) -> Stencil {
        vec![
            (self.node(j, i + 1), 1.0),
            (self.node(j, i), -2.0),
            (self.node(j, i - 1), 1.0),
        ]
    }

    fn j_weights(j: usize) -> Vec<(usize, f64)> {
        if j == 0 {
            vec![(0, -1.5), (1, 2.0), (2, -0.5)]
        } else {
            vec![(j + 1, 0.5), (j - 1, -0.5)]
        }
    }

    fn stencil_j(&self, j: usize, i: isize) -> Stencil {
        Self::j_weights(j)
            .into_iter()
            .map(|(jj, c)| (self.node(jj, i), c))
            .collect()
    }

    fn stencil_jj(&self, j: usize, i: isize) -> Stencil {
        let w: Vec<(usize, f64)> = if j == 0 {
            vec![(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]
        } else {
            vec![(j + 1, 1.0), (j, -2.0), (j - 1, 1.0)]
        };
        w.into_iter().map(|(jj, c)| (self.node(jj, i), c)).collect()
    }

    fn stencil_ij(&self, j: usize, i: isize) -> Stencil {
        let mut acc = Accum::default();
        for (jj, c) in Self::j_weights(j) {
            acc.extend(self.stencil_i(jj, i), c);
        }
        acc.finish()
    }

    fn eval(&self, s: &Stencil, coord: usize) -> f64 {
        s.iter().map(|(p, c)| c * self.nodes[*p][coord]).sum()
    }

    fn build_operators(&mut self) -> Result<()> {
        let total = self.len();
        let mut rows: [Vec<Stencil>; 5] = Default::default();
        let mut cell_size = vec![0.0; total];
        for j in 0..self.m {
            for i in 0..self.n as isize {
                let p = self.node(j, i);
                let s = [self.stencil_i(j, i), self.stencil_j(j, i)];
                let s2 = [
                    [self.stencil_ii(j, i), self.stencil_ij(j, i)],
                    [self.stencil_ij(j, i), self.stencil_jj(j, i)],
                ];
                // jac[(c, k)] = ∂x_c / ∂ξ_k
                let jac = Mat2::from_fn(|c, k| self.eval(&s[k], c));
                let det = jac.determinant();
                if det.abs() < 1e-300 {
                    return Err(Error::Geometry(format!("degenerate metric at node {p}")));
                }
                cell_size[p] = jac.determinant().abs();
                let jinv = jac.try_inverse().expect("nonzero determinant");
                let x2 = |c: usize| Mat2::from_fn(|k, l| self.eval(&s2[k][l], c));
                let x2c = [x2(0), x2(1)];

                let mut grad: [Stencil; 2] = Default::default();
                for (c, g) in grad.iter_mut().enumerate() {
                    let mut acc = Accum::default();
                    for k in 0..2 {
                        acc.extend(s[k].iter().copied(), jinv[(k, c)]);
                    }
                    *g = acc.finish();
                }
                let hess = |a: usize, b: usize| {
                    let mut acc = Accum::default();
                    for k in 0..2 {
                        for l in 0..2 {
                            let w = jinv[(k, a)] * jinv[(l, b)];
                            if w == 0.0 {
                                continue;
                            }
                            acc.extend(s2[k][l].iter().copied(), w);
                            for (c, g) in grad.iter().enumerate() {
                                acc.extend(g.iter().copied(), -w * x2c[c][(k, l)]);
                            }
                        }
                    }
                    acc.finish()
                };
                let h11 = hess(0, 0);
                let h12 = hess(0, 1);
                let h22 = hess(1, 1);
                let [g1, g2] = grad;
                rows[0].push(g1);
                rows[1].push(g2);
                rows[2].push(h11);
                rows[3].push(h12);
                rows[4].push(h22);
            }
        }
        let center_rows = self.center_fit()?;
        for (r, row) in rows.iter_mut().zip(center_rows) {
            r.push(row);
        }
        let inner_ring = (self.m - 1) * self.n;
        cell_size[total - 1] = cell_size[inner_ring..inner_ring + self.n]
            .iter()
            .sum::<f64>()
            / self.n as f64;
        self.cell_size = cell_size;

        let [r0, r1, r2, r3, r4] = rows;
        self.d1 = CsrOp::from_rows(r0);
        self.d2 = CsrOp::from_rows(r1);
        self.h11 = CsrOp::from_rows(r2);
        self.h12 = CsrOp::from_rows(r3);
        self.h22 = CsrOp::from_rows(r4);
        self.lap = self.h11.add(&self.h22);
        Ok(())
    }

    /// Weighted least-squares quadratic through the two innermost rings,
    /// pinned at the center value. Returns rows for g1, g2, H11, H12, H22.
    fn center_fit(&self) -> Result<[Stencil; 5]> {
        let c = self.center_index();
        let ring_nodes: Vec<usize> = (self.m.saturating_sub(2)..self.m)
            .flat_map(|j| (0..self.n).map(move |i| j * self.n + i))
            .collect();
        let mut normal = SMatrix::<f64, 5, 5>::zeros();
        let mut basis = Vec::with_capacity(ring_nodes.len());
        for &p in &ring_nodes {
            let s = self.nodes[p] - self.center;
            let a = SVector::<f64, 5>::new(s.x, s.y, 0.5 * s.x * s.x, s.x * s.y, 0.5 * s.y * s.y);
            let w = 1.0 / s.norm_squared();
            normal += a * a.transpose() * w;
            basis.push((p, a * w));
        }
        let inv = normal
            .try_inverse()
            .ok_or_else(|| Error::Geometry("center fit is singular".into()))?;
        let mut out: [Stencil; 5] = Default::default();
        for (k, row) in out.iter_mut().enumerate() {
            let mut acc = Accum::default();
            let mut sum = 0.0;
            for (p, aw) in &basis {
                let coef = (inv * aw)[k];
                acc.push(*p, coef);
                sum += coef;
            }
            acc.push(c, -sum);
            *row = acc.finish();
        }
        Ok(out)
    }

    pub fn gradient(&self, f: &[f64]) -> Vec<Vec2> {
        (0..self.len())
            .map(|p| Vec2::new(self.d1.row_dot(p, f), self.d2.row_dot(p, f)))
            .collect()
    }

    /// `(∇v)_{ij} = ∂_j v_i` at every node.
    pub fn vector_gradient(&self, v: &[Vec2]) -> Vec<Mat2> {
        let (a, b) = split(v);
        let ga = self.gradient(&a);
        let gb = self.gradient(&b);
        ga.iter()
            .zip(&gb)
            .map(|(x, y)| Mat2::new(x.x, x.y, y.x, y.y))
            .collect()
    }

    pub fn hessian(&self, f: &[f64]) -> Vec<Sym2> {
        (0..self.len())
            .map(|p| {
                Sym2::new(
                    self.h11.row_dot(p, f),
                    self.h12.row_dot(p, f),
                    self.h22.row_dot(p, f),
                )
            })
            .collect()
    }

    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        self.lap.apply(f)
    }

    pub fn vector_laplacian(&self, v: &[Vec2]) -> Vec<Vec2> {
        let (a, b) = split(v);
        let la = self.laplacian(&a);
        let lb = self.laplacian(&b);
        la.into_iter()
            .zip(lb)
            .map(|(x, y)| Vec2::new(x, y))
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Locates `point` as `(i, ρ, t)`: sector `i`, radial fraction `ρ` and
    /// angular fraction `t` within the sector.
    fn locate(&self, point: &Vec2) -> Result<(usize, f64, f64)> {
        let s = point - self.center;
        let scale = (self.nodes[0] - self.center).norm();
        if s.norm() <= 1e-14 * scale {
            return Ok((0, 0.0, 0.0));
        }
        let n = self.n;
        for i in 0..n {
            let a = self.nodes[i] - self.center;
            let b = self.nodes[(i + 1) % n] - self.center;
            let det = cross(&a, &b);
            let lam = cross(&s, &b) / det;
            let mu = cross(&a, &s) / det;
            let eps = -1e-12 * (lam.abs() + mu.abs());
            if lam >= eps && mu >= eps {
                let rho = lam + mu;
                if rho > 1.0 + 1e-12 {
                    return Err(Error::OutOfDomain {
                        x: point.x,
                        y: point.y,
                    });
                }
                return Ok((i, rho.min(1.0), (mu / rho).clamp(0.0, 1.0)));
            }
        }
        Err(Error::OutOfDomain {
            x: point.x,
            y: point.y,
        })
    }

    /// Bilinear interpolation in grid index space.
    pub fn interpolate(&self, f: &[f64], point: &Vec2) -> Result<f64> {
        let w = self.interpolation_weights(point)?;
        Ok(w.iter().map(|(p, c)| c * f[*p]).sum())
    }

    pub fn interpolate_vec(&self, f: &[Vec2], point: &Vec2) -> Result<Vec2> {
        let w = self.interpolation_weights(point)?;
        Ok(w.iter().map(|(p, c)| f[*p] * *c).sum())
    }

    pub fn interpolation_weights(&self, point: &Vec2) -> Result<[(usize, f64); 4]> {
        let c = self.center_index();
        let (i, rho, t) = self.locate(point)?;
        if rho == 0.0 {
            return Ok([(c, 1.0), (c, 0.0), (c, 0.0), (c, 0.0)]);
        }
        let r = (1.0 - rho) * self.m as f64;
        let j0 = (r.floor() as usize).min(self.m - 1);
        let fj = r - j0 as f64;
        let ii = i as isize;
        Ok([
            (self.node(j0, ii), (1.0 - fj) * (1.0 - t)),
            (self.node(j0, ii + 1), (1.0 - fj) * t),
            (self.node(j0 + 1, ii), fj * (1.0 - t)),
            (self.node(j0 + 1, ii + 1), fj * t),
        ])
    }

    /// Applies `f` node-wise to produce a sampled scalar field.
    pub fn sample<T>(&self, f: impl Fn(&Vec2) -> T) -> Vec<T> {
        self.nodes.iter().map(f).collect()
    }
}

pub fn split(v: &[Vec2]) -> (Vec<f64>, Vec<f64>) {
    (
        v.iter().map(|x| x.x).collect(),
        v.iter().map(|x| x.y).collect(),
    )
}
