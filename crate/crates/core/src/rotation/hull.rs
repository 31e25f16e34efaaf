//! Convex hulls and Hausdorff distances for small point clouds.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::observables::dist;

/// Relative tolerance for floating orientation tests.
pub const ORIENT_TOL: f64 = 1e-12;

/// Number of support directions used when d >= 3.
const SUPPORT_DIRECTIONS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolytope {
    pub dim: usize,
    /// Extreme points; counterclockwise when dim = 2 and there are at least three.
    pub vertices: Vec<Vec<f64>>,
    /// True when the vertex set came from sampled support functions.
    pub approximate: bool,
}

fn monotone_chain<T>(pts: &[T], cmp: impl Fn(&T, &T) -> Ordering, left_turn: impl Fn(&T, &T, &T) -> bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| cmp(&pts[a], &pts[b]));
    idx.dedup_by(|a, b| cmp(&pts[*a], &pts[*b]) == Ordering::Equal);
    if idx.len() <= 2 {
        return idx;
    }
    let mut lower: Vec<usize> = Vec::new();
    for &p in &idx {
        while lower.len() >= 2 && !left_turn(&pts[lower[lower.len() - 2]], &pts[lower[lower.len() - 1]], &pts[p]) {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &p in idx.iter().rev() {
        while upper.len() >= 2 && !left_turn(&pts[upper[upper.len() - 2]], &pts[upper[upper.len() - 1]], &pts[p]) {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn cmp_f64(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or(Ordering::Equal)
}

fn left_turn_f64(a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
    let (vx, vy) = (c[0] - a[0], c[1] - a[1]);
    let cross = ux * vy - uy * vx;
    let scale = ux.hypot(uy) * vx.hypot(vy);
    cross > ORIENT_TOL * scale.max(f64::MIN_POSITIVE)
}

pub fn convex_hull(points: &[Vec<f64>]) -> Result<ConvexPolytope> {
    let Some(first) = points.first() else {
        return invalid("convex hull of an empty set");
    };
    let d = first.len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return invalid("points must share a positive dimension");
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return invalid("points must be finite");
    }
    match d {
        1 => {
            let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            let vertices = if lo == hi { vec![vec![lo]] } else { vec![vec![lo], vec![hi]] };
            Ok(ConvexPolytope { dim: 1, vertices, approximate: false })
        }
        2 => {
            let idx = monotone_chain(points, |a, b| cmp_f64(a, b), |a, b, c| left_turn_f64(a, b, c));
            Ok(ConvexPolytope {
                dim: 2,
                vertices: idx.into_iter().map(|i| points[i].clone()).collect(),
                approximate: false,
            })
        }
        _ => Ok(support_hull(points, d)),
    }
}

/// Exact planar hull of rational points; vertices are converted to f64 at the end.
pub fn convex_hull_exact(points: &[[BigRational; 2]]) -> Result<ConvexPolytope> {
    if points.is_empty() {
        return invalid("convex hull of an empty set");
    }
    let cmp = |a: &[BigRational; 2], b: &[BigRational; 2]| a[0].cmp(&b[0]).then_with(|| a[1].cmp(&b[1]));
    let left = |a: &[BigRational; 2], b: &[BigRational; 2], c: &[BigRational; 2]| {
        let cross = (&b[0] - &a[0]) * (&c[1] - &a[1]) - (&b[1] - &a[1]) * (&c[0] - &a[0]);
        cross.is_positive()
    };
    let idx = monotone_chain(points, cmp, left);
    Ok(ConvexPolytope {
        dim: 2,
        vertices: idx
            .into_iter()
            .map(|i| points[i].iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect())
            .collect(),
        approximate: false,
    })
}

fn directions(d: usize) -> Vec<Vec<f64>> {
    if d == 3 {
        // Fibonacci sphere.
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        return (0..SUPPORT_DIRECTIONS)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / SUPPORT_DIRECTIONS as f64;
                let r = (1.0 - z * z).sqrt();
                let t = golden * i as f64;
                vec![r * t.cos(), r * t.sin(), z]
            })
            .collect();
    }
    // Kronecker sequence in the cube, normalized onto the sphere.
    let alphas: Vec<f64> = (0..d).map(|j| ((j + 2) as f64).sqrt().fract()).collect();
    (0..SUPPORT_DIRECTIONS)
        .map(|i| {
            let v: Vec<f64> = alphas.iter().map(|a| ((i + 1) as f64 * a).fract() * 2.0 - 1.0).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

fn support_hull(points: &[Vec<f64>], d: usize) -> ConvexPolytope {
    let mut chosen: Vec<usize> = directions(d)
        .iter()
        .map(|u| {
            (0..points.len())
                .max_by(|&a, &b| dot(u, &points[a]).total_cmp(&dot(u, &points[b])).then(b.cmp(&a)))
                .expect("nonempty")
        })
        .collect();
    chosen.sort_unstable();
    chosen.dedup();
    let mut vertices: Vec<Vec<f64>> = chosen.into_iter().map(|i| points[i].clone()).collect();
    vertices.sort_by(|a, b| cmp_f64(a, b));
    vertices.dedup();
    ConvexPolytope { dim: d, vertices, approximate: true }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let len2 = dot(&ab, &ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(&ap, &ab) / len2).clamp(0.0, 1.0);
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(x, v)| x + t * v).collect();
    dist(p, &proj)
}

impl ConvexPolytope {
    /// Euclidean distance from `p` to the polytope (0 inside).
    ///
    /// For approximate hulls this is the support-function lower bound.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        let v = &self.vertices;
        match (self.dim, v.len()) {
            (_, 1) => dist(p, &v[0]),
            (1, _) => {
                let (lo, hi) = (v[0][0], v[1][0]);
                (lo - p[0]).max(p[0] - hi).max(0.0)
            }
            (2, 2) => point_segment_distance(p, &v[0], &v[1]),
            (2, n) => {
                let inside = (0..n).all(|i| {
                    let a = &v[i];
                    let b = &v[(i + 1) % n];
                    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
                    cross >= 0.0
                });
                if inside {
                    0.0
                } else {
                    (0..n)
                        .map(|i| point_segment_distance(p, &v[i], &v[(i + 1) % n]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
            (d, _) => directions(d)
                .iter()
                .map(|u| {
                    let h = v.iter().map(|q| dot(u, q)).fold(f64::NEG_INFINITY, f64::max);
                    dot(u, p) - h
                })
                .fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.distance_to(p) <= tol
    }

    /// Hausdorff distance between convex polytopes: the farthest vertex of one from the other.
    pub fn hausdorff(&self, other: &ConvexPolytope) -> f64 {
        let a = self.vertices.iter().map(|v| other.distance_to(v)).fold(0.0, f64::max);
        let b = other.vertices.iter().map(|v| self.distance_to(v)).fold(0.0, f64::max);
        a.max(b)
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut best = 0.0f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                best = best.max(dist(&v[i], &v[j]));
            }
        }
        best
    }
}

/// Hausdorff distance between finite point sets.
pub fn hausdorff_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return invalid("hausdorff distance of an empty set");
    }
    let one = |x: &[Vec<f64>], y: &[Vec<f64>]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(one(a, b).max(one(b, a)))
}

/// Rational point from floats, exact (every finite f64 is a dyadic rational).
pub fn exact_point(p: &[f64]) -> [BigRational; 2] {
    let q = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    [q(p[0]), q(p[1])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangle_drops_interior_point() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.2, 0.2]];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn collinear_input_is_a_segment() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.25, 0.0]).collect();
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices, vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert_eq!(h.distance_to(&[0.5, 0.3]), 0.3);
    }

    #[test]
    fn hausdorff_of_points() {
        assert_eq!(hausdorff_distance(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap(), 5.0);
    }

    #[test]
    fn exact_hull_matches_float_hull() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.25, 0.25]];
        let ex: Vec<[BigRational; 2]> = pts.iter().map(|p| exact_point(p)).collect();
        let a = convex_hull_exact(&ex).unwrap();
        let b = convex_hull(&pts).unwrap();
        assert_eq!(a.vertices, b.vertices);
    }

    #[test]
    fn three_dimensional_support_hull() {
        let mut pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        pts.push(vec![0.1, 0.1, 0.1]);
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.vertices.len(), 4);
        assert!(h.approximate);
        assert!(h.contains(&[0.2, 0.2, 0.2], 1e-12));
    }

    proptest! {
        #[test]
        fn hull_contains_inputs_and_is_idempotent(pts in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..40)) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
            let h = convex_hull(&pts).unwrap();
            for p in &pts {
                prop_assert!(h.contains(p, 1e-9));
            }
            let h2 = convex_hull(&h.vertices).unwrap();
            prop_assert_eq!(h2.vertices, h.vertices.clone());
            // Vertices are extreme: dropping any one shrinks the hull.
            if h.vertices.len() >= 3 {
                for i in 0..h.vertices.len() {
                    let rest: Vec<Vec<f64>> = h.vertices.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| v.clone()).collect();
                    let hr = convex_hull(&rest).unwrap();
                    prop_assert!(hr.distance_to(&h.vertices[i]) > 0.0);
                }
            }
        }

        #[test]
        fn hausdorff_is_a_metric(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
        ) {
            let f = |v: Vec<(f64, f64)>| v.into_iter().map(|(x, y)| vec![x, y]).collect::<Vec<_>>();
            let (a, b, c) = (f(a), f(b), f(c));
            let ab = hausdorff_distance(&a, &b).unwrap();
            let ba = hausdorff_distance(&b, &a).unwrap();
            let bc = hausdorff_distance(&b, &c).unwrap();
            let ac = hausdorff_distance(&a, &c).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        }
    }
}
