//! Closed marker curves and polyline intersection predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{cross, Vec2};

/// Guard used by the floating-point orientation predicate.
pub const ORIENT_EPS: f64 = 1e-14;

/// Closed, counterclockwise polyline through at least 16 distinct markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceCurve {
    markers: Vec<Vec2>,
}

impl InterfaceCurve {
    pub const MIN_MARKERS: usize = 16;

    /// Validates the markers and normalizes the orientation to
    /// counterclockwise.
    pub fn new(mut markers: Vec<Vec2>) -> Result<Self> {
        let n = markers.len();
        if n < Self::MIN_MARKERS {
            return Err(Error::Geometry(format!(
                "curve needs at least {} markers, got {n}",
                Self::MIN_MARKERS
            )));
        }
        if markers.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Geometry("non-finite marker".into()));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if (markers[j] - markers[i]).norm() == 0.0 {
                return Err(Error::Geometry(format!(
                    "consecutive markers {i} and {j} coincide"
                )));
            }
        }
        let area = signed_area(&markers);
        let scale = bbox_diameter(&markers);
        if area.abs() <= 1e-14 * scale * scale {
            return Err(Error::Geometry("curve encloses zero signed area".into()));
        }
        if area < 0.0 {
            markers.reverse();
        }
        Ok(Self { markers })
    }

    pub fn circle(center: Vec2, radius: f64, n: usize) -> Result<Self> {
        Self::ellipse(center, radius, radius, n)
    }

    pub fn ellipse(center: Vec2, a: f64, b: f64, n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                center + Vec2::new(a * t.cos(), b * t.sin())
            })
            .collect();
        Self::new(pts)
    }

    /// Lemniscate-like figure eight with lobes of unequal size (so the signed
    /// area is nonzero); always self-intersecting.
    pub fn figure_eight(n: usize) -> Result<Self> {
        let pts = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * (k as f64 + 0.5) / n as f64;
                let r = 1.0 + 0.3 * t.sin();
                Vec2::new(r * t.sin(), r * t.sin() * t.cos())
            })
            .collect();
        Self::new(pts)
    }

    pub fn markers(&self) -> &[Vec2] {
        &self.markers
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.markers)
    }

    pub fn centroid(&self) -> Vec2 {
        polygon_centroid(&self.markers)
    }

    pub fn mean_spacing(&self) -> f64 {
        mean_spacing(&self.markers)
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        Self {
            markers: self.markers.iter().map(|p| p + shift).collect(),
        }
    }

    /// Cyclic relabeling: marker `k` becomes marker `k - offset`.
    pub fn rotated_labels(&self, offset: usize) -> Self {
        let mut m = self.markers.clone();
        let len = m.len();
        m.rotate_left(offset % len);
        Self { markers: m }
    }

    pub fn self_intersections(&self) -> Vec<(usize, usize)> {
        crossing_pairs(&self.markers)
    }
}

pub fn signed_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn polygon_centroid(pts: &[Vec2]) -> Vec2 {
    let n = pts.len();
    let mut c = Vec2::zeros();
    let mut a2 = 0.0;
    for i in 0..n {
        let p = pts[i];
        let q = pts[(i + 1) % n];
        let w = p.x * q.y - q.x * p.y;
        a2 += w;
        c += (p + q) * w;
    }
    c / (3.0 * a2)
}

pub fn mean_spacing(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| (pts[(i + 1) % n] - pts[i]).norm())
        .sum::<f64>()
        / n as f64
}

fn bbox_diameter(pts: &[Vec2]) -> f64 {
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (hi - lo).norm()
}

/// Sign of the orientation of `(a, b, c)` with a relative guard band: values
/// within the band count as collinear.
pub fn orientation(a: &Vec2, b: &Vec2, c: &Vec2) -> i8 {
    let det = cross(&(b - a), &(c - a));
    let scale = (b - a).norm() * (c - a).norm();
    if det.abs() <= ORIENT_EPS * scale.max(f64::MIN_POSITIVE) {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

/// True when the open segments `p1p2` and `q1q2` cross transversally.
/// Touching and collinear overlap do not count.
pub fn segments_cross(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> bool {
    let o1 = orientation(p1, p2, q1);
    let o2 = orientation(p1, p2, q2);
    let o3 = orientation(q1, q2, p1);
    let o4 = orientation(q1, q2, p2);
    o1 * o2 < 0 && o3 * o4 < 0
}

pub fn point_segment_distance(p: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn segment_distance(p1: &Vec2, p2: &Vec2, q1: &Vec2, q2: &Vec2) -> f64 {
    if segments_cross(p1, p2, q1, q2) {
        return 0.0;
    }
    point_segment_distance(p1, q1, q2)
        .min(point_segment_distance(p2, q1, q2))
        .min(point_segment_distance(q1, p1, p2))
        .min(point_segment_distance(q2, p1, p2))
}

/// All pairs `(i, j)`, `i < j`, of non-adjacent edges of the closed polyline
/// that cross. Edge `i` joins markers `i` and `i + 1`.
pub fn crossing_pairs(pts: &[Vec2]) -> Vec<(usize, usize)> {
    let n = pts.len();
    let boxes: Vec<(Vec2, Vec2)> = (0..n)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % n];
            (a.inf(&b), a.sup(&b))
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (lo_i, hi_i) = boxes[i];
            let (lo_j, hi_j) = boxes[j];
            if lo_i.x > hi_j.x || lo_j.x > hi_i.x || lo_i.y > hi_j.y || lo_j.y > hi_i.y {
                continue;
            }
            if segments_cross(&pts[i], &pts[(i + 1) % n], &pts[j], &pts[(j + 1) % n]) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Smallest distance between edges that are far apart along the curve:
/// pairs whose shorter arc-length separation exceeds `min_arc`.
pub fn nonlocal_gap(pts: &[Vec2], min_arc: f64) -> f64 {
    let n = pts.len();
    let mut arc = vec![0.0; n + 1];
    for i in 0..n {
        arc[i + 1] = arc[i] + (pts[(i + 1) % n] - pts[i]).norm();
    }
    let total = arc[n];
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mid_i = 0.5 * (arc[i] + arc[i + 1]);
        for j in (i + 1)..n {
            let mid_j = 0.5 * (arc[j] + arc[j + 1]);
            let d = (mid_j - mid_i).abs();
            let sep = d.min(total - d);
            // half lengths of both edges are included in the midpoint distance
            let half = 0.5 * (arc[i + 1] - arc[i] + arc[j + 1] - arc[j]);
            if sep - half <= min_arc {
                continue;
            }
            let g = segment_distance(&pts[i], &pts[(i + 1) % n], &pts[j], &pts[(j + 1) % n]);
            if g < best {
                best = g;
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Straightforward O(n^2) oracle without bounding boxes or guards.
    fn brute_force_crossings(pts: &[Vec2]) -> usize {
        let n = pts.len();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (pts[i], pts[(i + 1) % n]);
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                let d1 = cross(&(b - a), &(c - a));
                let d2 = cross(&(b - a), &(d - a));
                let d3 = cross(&(d - c), &(a - c));
                let d4 = cross(&(d - c), &(b - c));
                if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn rejects_short_or_degenerate_curves() {
        let pts: Vec<Vec2> = (0..10).map(|k| Vec2::new(k as f64, 0.0)).collect();
        assert!(InterfaceCurve::new(pts).is_err());
        let mut pts: Vec<Vec2> = InterfaceCurve::circle(Vec2::zeros(), 1.0, 20)
            .unwrap()
            .markers()
            .to_vec();
        pts[3] = pts[2];
        assert!(InterfaceCurve::new(pts).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mut pts: Vec<Vec2> = InterfaceCurve::circle(Vec2::zeros(), 1.0, 32)
            .unwrap()
            .markers()
            .to_vec();
        pts.reverse();
        let c = InterfaceCurve::new(pts).unwrap();
        assert!(c.signed_area() > 0.0);
    }

    #[test]
    fn circle_area_and_centroid() {
        let c = InterfaceCurve::circle(Vec2::new(2.0, -1.0), 1.0, 256).unwrap();
        let exact = 0.5 * 256.0 * (std::f64::consts::TAU / 256.0).sin();
        assert!((c.signed_area() - exact).abs() < 1e-12);
        assert!((c.centroid() - Vec2::new(2.0, -1.0)).norm() < 1e-12);
        assert!(c.self_intersections().is_empty());
    }

    #[test]
    fn figure_eight_self_intersects() {
        let c = InterfaceCurve::figure_eight(64).unwrap();
        let pairs = c.self_intersections();
        assert!(!pairs.is_empty());
        assert_eq!(pairs.len(), brute_force_crossings(c.markers()));
    }

    #[test]
    fn touching_segments_do_not_cross() {
        let a = Vec2::new(0.0, 0.0);
        let b = Vec2::new(1.0, 0.0);
        assert!(!segments_cross(
            &a,
            &b,
            &Vec2::new(0.5, 0.0),
            &Vec2::new(0.5, 1.0)
        ));
        assert!(segments_cross(
            &a,
            &b,
            &Vec2::new(0.5, -1.0),
            &Vec2::new(0.5, 1.0)
        ));
        assert_eq!(
            segment_distance(&a, &b, &Vec2::new(0.5, 0.25), &Vec2::new(0.5, 1.0)),
            0.25
        );
    }

    proptest::proptest! {
        #[test]
        fn crossing_count_matches_oracle(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 16 + (seed % 8) as usize;
            let pts: Vec<Vec2> = (0..n)
                .map(|_| Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            proptest::prop_assert_eq!(crossing_pairs(&pts).len(), brute_force_crossings(&pts));
        }
    }
}
