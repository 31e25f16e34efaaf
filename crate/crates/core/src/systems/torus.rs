//! Lifts of torus maps built from a small closed-form grammar.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use crate::error::{invalid, Error, Result};

/// c0 + Σ_k cos[k-1]·cos(2πky) + sin[k-1]·sin(2πky).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPoly {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        TrigPoly {
            c0: c,
            cos: vec![],
            sin: vec![],
        }
    }

    /// sin²(πy) = (1 - cos 2πy)/2.
    pub fn sin_squared() -> Self {
        TrigPoly {
            c0: 0.5,
            cos: vec![-0.5],
            sin: vec![],
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let y = y - y.floor();
        let mut s = self.c0;
        for (k, c) in self.cos.iter().enumerate() {
            s += c * (2.0 * PI * (k + 1) as f64 * y).cos();
        }
        for (k, c) in self.sin.iter().enumerate() {
            s += c * (2.0 * PI * (k + 1) as f64 * y).sin();
        }
        s
    }

    pub fn eval_interval(&self, y: Interval) -> Interval {
        let mut s = Interval::point(self.c0);
        for (k, &c) in self.cos.iter().enumerate() {
            s = s.add(y.scale((k + 1) as f64).cos2pi().scale(c));
        }
        for (k, &c) in self.sin.iter().enumerate() {
            s = s.add(y.scale((k + 1) as f64).sin2pi().scale(c));
        }
        s
    }

    pub fn sup_norm_bound(&self) -> f64 {
        self.c0.abs() + self.cos.iter().chain(&self.sin).map(|c| c.abs()).sum::<f64>()
    }

    pub fn lipschitz_bound(&self) -> f64 {
        let term = |v: &Vec<f64>| {
            v.iter()
                .enumerate()
                .map(|(k, c)| (k + 1) as f64 * c.abs())
                .sum::<f64>()
        };
        2.0 * PI * (term(&self.cos) + term(&self.sin))
    }

    /// Values of the polynomial on a uniform grid of `m` points in [0,1).
    pub fn min_max_on_grid(&self, m: usize) -> (f64, f64) {
        (0..m)
            .map(|i| self.eval(i as f64 / m as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LiftRule {
    /// z ↦ z + v.
    Translation { v: Vec<f64> },
    /// (x, y) ↦ (x + twist·y + s(y), y). Only twist = 0 is homotopic to the identity.
    Shear {
        s: TrigPoly,
        #[serde(default)]
        twist: i64,
    },
    /// x ↦ x + a + b·sin(2πx); a homeomorphism when 2π|b| < 1.
    CircleSine { a: f64, b: f64 },
    /// x ↦ 2x, a degree-two lift.
    Doubling,
    /// Apply the rules left to right.
    Compose { parts: Vec<LiftRule> },
    /// Act on consecutive blocks of coordinates independently.
    Product { parts: Vec<LiftRule> },
}

impl LiftRule {
    pub fn dim(&self) -> Result<usize> {
        match self {
            LiftRule::Translation { v } if v.is_empty() => invalid("empty translation vector"),
            LiftRule::Translation { v } => Ok(v.len()),
            LiftRule::Shear { .. } => Ok(2),
            LiftRule::CircleSine { .. } | LiftRule::Doubling => Ok(1),
            LiftRule::Compose { parts } => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::InvalidParameter("empty composition".into()))?
                    .dim()?;
                for p in parts {
                    if p.dim()? != first {
                        return invalid("composed maps must share a dimension");
                    }
                }
                Ok(first)
            }
            LiftRule::Product { parts } if parts.is_empty() => invalid("empty product"),
            LiftRule::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
        }
    }

    fn eval_into(&self, z: &mut [f64]) {
        match self {
            LiftRule::Translation { v } => {
                for (x, d) in z.iter_mut().zip(v) {
                    *x += d;
                }
            }
            LiftRule::Shear { s, twist } => {
                z[0] += *twist as f64 * z[1] + s.eval(z[1]);
            }
            LiftRule::CircleSine { a, b } => {
                let x = z[0];
                z[0] = x + a + b * (2.0 * PI * (x - x.floor())).sin();
            }
            LiftRule::Doubling => z[0] *= 2.0,
            LiftRule::Compose { parts } => {
                for p in parts {
                    p.eval_into(z);
                }
            }
            LiftRule::Product { parts } => {
                let mut off = 0;
                for p in parts {
                    let d = p.dim().expect("validated");
                    p.eval_into(&mut z[off..off + d]);
                    off += d;
                }
            }
        }
    }

    fn eval_interval_into(&self, z: &mut [Interval]) {
        match self {
            LiftRule::Translation { v } => {
                for (x, d) in z.iter_mut().zip(v) {
                    *x = x.add_scalar(*d);
                }
            }
            LiftRule::Shear { s, twist } => {
                z[0] = z[0].add(z[1].scale(*twist as f64)).add(s.eval_interval(z[1]));
            }
            LiftRule::CircleSine { a, b } => {
                z[0] = z[0].add_scalar(*a).add(z[0].sin2pi().scale(*b));
            }
            LiftRule::Doubling => z[0] = z[0].scale(2.0),
            LiftRule::Compose { parts } => {
                for p in parts {
                    p.eval_interval_into(z);
                }
            }
            LiftRule::Product { parts } => {
                let mut off = 0;
                for p in parts {
                    let d = p.dim().expect("validated");
                    p.eval_interval_into(&mut z[off..off + d]);
                    off += d;
                }
            }
        }
    }

    fn has_inverse(&self) -> bool {
        match self {
            LiftRule::Translation { .. } | LiftRule::Shear { .. } => true,
            LiftRule::CircleSine { b, .. } => 2.0 * PI * b.abs() < 1.0,
            LiftRule::Doubling => false,
            LiftRule::Compose { parts } | LiftRule::Product { parts } => {
                parts.iter().all(|p| p.has_inverse())
            }
        }
    }

    fn inverse_into(&self, z: &mut [f64]) {
        match self {
            LiftRule::Translation { v } => {
                for (x, d) in z.iter_mut().zip(v) {
                    *x -= d;
                }
            }
            LiftRule::Shear { s, twist } => {
                z[0] -= *twist as f64 * z[1] + s.eval(z[1]);
            }
            LiftRule::CircleSine { a, b } => {
                // x + a + b sin(2πx) is increasing; bracket the preimage and bisect.
                let target = z[0];
                let mut lo = target - a - b.abs();
                let mut hi = target - a + b.abs();
                let f = |x: f64| x + a + b * (2.0 * PI * (x - x.floor())).sin();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if f(mid) < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                z[0] = 0.5 * (lo + hi);
            }
            LiftRule::Doubling => z[0] *= 0.5,
            LiftRule::Compose { parts } => {
                for p in parts.iter().rev() {
                    p.inverse_into(z);
                }
            }
            LiftRule::Product { parts } => {
                let mut off = 0;
                for p in parts {
                    let d = p.dim().expect("validated");
                    p.inverse_into(&mut z[off..off + d]);
                    off += d;
                }
            }
        }
    }

    /// Per-coordinate degree: F(z + e_j) = F(z) + deg_j·e_j.
    fn degrees_into(&self, out: &mut Vec<i64>) {
        match self {
            LiftRule::Translation { v } => out.extend(std::iter::repeat_n(1, v.len())),
            LiftRule::Shear { .. } => out.extend([1, 1]),
            LiftRule::CircleSine { .. } => out.push(1),
            LiftRule::Doubling => out.push(2),
            LiftRule::Compose { parts } => {
                let d = self.dim().expect("validated");
                let mut acc = vec![1i64; d];
                for p in parts {
                    let mut g = Vec::new();
                    p.degrees_into(&mut g);
                    for (a, b) in acc.iter_mut().zip(g) {
                        *a *= b;
                    }
                }
                out.extend(acc);
            }
            LiftRule::Product { parts } => {
                for p in parts {
                    p.degrees_into(out);
                }
            }
        }
    }

    fn twisted(&self) -> bool {
        match self {
            LiftRule::Shear { twist, .. } => *twist != 0,
            LiftRule::Compose { parts } | LiftRule::Product { parts } => {
                parts.iter().any(|p| p.twisted())
            }
            _ => false,
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            LiftRule::Translation { .. } => 1.0,
            LiftRule::Shear { s, twist } => 1.0 + (*twist as f64).abs() + s.lipschitz_bound(),
            LiftRule::CircleSine { b, .. } => 1.0 + 2.0 * PI * b.abs(),
            LiftRule::Doubling => 2.0,
            LiftRule::Compose { parts } => parts.iter().map(|p| p.lipschitz()).product(),
            LiftRule::Product { parts } => parts.iter().map(|p| p.lipschitz()).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusLift {
    dim: usize,
    rule: LiftRule,
    #[serde(default)]
    claims_volume_preserving: bool,
}

impl TorusLift {
    pub fn new(rule: LiftRule) -> Result<Self> {
        let dim = rule.dim()?;
        Ok(TorusLift {
            dim,
            rule,
            claims_volume_preserving: false,
        })
    }

    pub fn with_volume_claim(mut self, claim: bool) -> Self {
        self.claims_volume_preserving = claim;
        self
    }

    pub fn translation(v: Vec<f64>) -> Result<Self> {
        TorusLift::new(LiftRule::Translation { v })
    }

    pub fn shear(s: TrigPoly) -> Self {
        TorusLift::new(LiftRule::Shear { s, twist: 0 }).expect("valid")
    }

    pub fn circle_sine(a: f64, b: f64) -> Self {
        TorusLift::new(LiftRule::CircleSine { a, b }).expect("valid")
    }

    pub fn doubling() -> Self {
        TorusLift::new(LiftRule::Doubling).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rule(&self) -> &LiftRule {
        &self.rule
    }

    pub fn claims_volume_preserving(&self) -> bool {
        self.claims_volume_preserving
    }

    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let mut out = z.to_vec();
        self.rule.eval_into(&mut out);
        out
    }

    pub fn eval_in_place(&self, z: &mut [f64]) {
        self.rule.eval_into(z);
    }

    pub fn eval_interval(&self, z: &[Interval]) -> Vec<Interval> {
        let mut out = z.to_vec();
        self.rule.eval_interval_into(&mut out);
        out
    }

    pub fn has_inverse(&self) -> bool {
        self.rule.has_inverse()
    }

    pub fn inverse(&self, z: &[f64]) -> Result<Vec<f64>> {
        if !self.has_inverse() {
            return Err(Error::MissingInverse(
                "this lift has no inverse rule".into(),
            ));
        }
        let mut out = z.to_vec();
        self.rule.inverse_into(&mut out);
        Ok(out)
    }

    pub fn degrees(&self) -> Vec<i64> {
        let mut d = Vec::with_capacity(self.dim);
        self.rule.degrees_into(&mut d);
        d
    }

    /// Degree one in every coordinate and untwisted: F(z+m) = F(z) + m.
    pub fn is_homotopic_to_identity(&self) -> bool {
        !self.rule.twisted() && self.degrees().iter().all(|&d| d == 1)
    }

    pub fn lipschitz(&self) -> f64 {
        self.rule.lipschitz()
    }

    /// F(z) - z, the displacement at z.
    pub fn displacement(&self, z: &[f64]) -> Vec<f64> {
        self.eval(z).iter().zip(z).map(|(a, b)| a - b).collect()
    }

    /// The induced map on the torus.
    pub fn step_torus(&self, x: &[f64]) -> Vec<f64> {
        project(&self.eval(x))
    }

    /// Largest deviation |F(z+m) - F(z) - deg·m| over a grid and m ∈ {-1,0,1}^d.
    pub fn equivariance_defect(&self, grid: usize) -> f64 {
        let deg = self.degrees();
        let d = self.dim;
        let mut worst = 0.0f64;
        for_grid(d, grid, |z| {
            let fz = self.eval(z);
            for_shift(d, |m| {
                let zm: Vec<f64> = z.iter().zip(m).map(|(a, b)| a + *b as f64).collect();
                let fzm = self.eval(&zm);
                for j in 0..d {
                    let want = fz[j] + (deg[j] * m[j]) as f64;
                    worst = worst.max((fzm[j] - want).abs());
                }
            });
        });
        worst
    }
}

/// Reduce coordinates into [0,1).
pub fn project(z: &[f64]) -> Vec<f64> {
    z.iter().map(|&x| frac(x)).collect()
}

#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Quotient metric on R^d / Z^d.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = frac(x - y);
            let d = d.min(1.0 - d);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Visit the points i/grid, i ∈ {0..grid}^d.
pub fn for_grid(d: usize, grid: usize, mut f: impl FnMut(&[f64])) {
    let mut idx = vec![0usize; d];
    let mut z = vec![0.0; d];
    loop {
        for j in 0..d {
            z[j] = idx[j] as f64 / grid as f64;
        }
        f(&z);
        let mut j = 0;
        loop {
            if j == d {
                return;
            }
            idx[j] += 1;
            if idx[j] < grid {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

fn for_shift(d: usize, mut f: impl FnMut(&[i64])) {
    let total = 3usize.pow(d as u32);
    let mut m = vec![0i64; d];
    for mut c in 0..total {
        for x in m.iter_mut() {
            *x = (c % 3) as i64 - 1;
            c /= 3;
        }
        f(&m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn catalog() -> Vec<TorusLift> {
        vec![
            TorusLift::translation(vec![0.3, 0.7]).unwrap(),
            TorusLift::shear(TrigPoly::sin_squared()),
            TorusLift::circle_sine(0.55, 0.1),
            TorusLift::circle_sine(0.0, 0.05),
            TorusLift::doubling(),
            TorusLift::new(LiftRule::Product {
                parts: vec![
                    LiftRule::CircleSine { a: 0.2, b: 0.05 },
                    LiftRule::Translation { v: vec![0.1] },
                ],
            })
            .unwrap(),
        ]
    }

    #[test]
    fn equivariance_on_catalog() {
        for f in catalog() {
            assert!(f.equivariance_defect(10) < 1e-12, "{:?}", f.rule());
        }
    }

    #[test]
    fn inverse_round_trip() {
        for f in catalog().into_iter().filter(|f| f.has_inverse()) {
            for_grid(f.dim(), 10, |z| {
                let back = f.inverse(&f.eval(z)).unwrap();
                for (a, b) in back.iter().zip(z) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-9);
                }
            });
        }
        assert!(TorusLift::doubling().inverse(&[0.3]).is_err());
    }

    #[test]
    fn twisted_shear_is_not_homotopic_to_identity() {
        let f = TorusLift::new(LiftRule::Shear {
            s: TrigPoly::constant(0.0),
            twist: 1,
        })
        .unwrap();
        assert!(!f.is_homotopic_to_identity());
        assert!(TorusLift::shear(TrigPoly::sin_squared()).is_homotopic_to_identity());
        assert!(!TorusLift::doubling().is_homotopic_to_identity());
    }

    #[test]
    fn interval_enclosure_contains_images() {
        for f in catalog() {
            let d = f.dim();
            for_grid(d, 7, |z| {
                let boxes: Vec<Interval> = z.iter().map(|&x| Interval::new(x, x + 0.05)).collect();
                let img = f.eval_interval(&boxes);
                let mid: Vec<f64> = z.iter().map(|x| x + 0.025).collect();
                for (i, y) in img.iter().zip(f.eval(&mid)) {
                    assert!(i.contains(y));
                }
            });
        }
    }

    #[test]
    fn torus_metric_wraps() {
        assert_abs_diff_eq!(torus_distance(&[0.95], &[0.05]), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(torus_distance(&[0.0, 0.0], &[0.5, 0.5]), 0.5f64.sqrt(), epsilon = 1e-12);
        assert!(frac(-1e-18) < 1.0);
    }
}
