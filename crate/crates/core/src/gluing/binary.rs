//! The doubling map through binary expansions.
//!
//! A point of [0,1) is carried as its binary digit sequence, so x ↦ 2x mod 1 is
//! the shift and iterating is exact. Shadowing picks, backwards in time, the
//! inverse branch nearest to the pseudo-orbit; each step halves the error, so
//! the achieved error never exceeds the largest jump.

use super::{offsets_from, GluedOrbit, SegmentSpec};
use crate::error::{invalid, Error, Result};
use crate::systems::{frac, MetricPoint, SymbolPoint};

/// Digits used when converting a sequence back to a float.
const VALUE_DIGITS: usize = 64;
/// Jumps may exceed δ by this much from float rounding in the input.
pub const JUMP_SLACK: f64 = 1e-12;

/// Exact binary digits of a float in [0,1).
pub fn to_binary(x: f64) -> SymbolPoint {
    let mut x = frac(x);
    let mut digits = Vec::new();
    while x != 0.0 {
        x *= 2.0;
        if x >= 1.0 {
            digits.push(1);
            x -= 1.0;
        } else {
            digits.push(0);
        }
    }
    SymbolPoint::new(digits, vec![0]).expect("nonempty tail")
}

/// The value of σ^start(p) as a real number.
pub fn value(p: &SymbolPoint, start: usize) -> f64 {
    let mut v = 0.0;
    for i in (0..VALUE_DIGITS).rev() {
        v = (v + p.at(start + i) as f64) * 0.5;
    }
    // All-ones tails denote 1 = 0 on the circle.
    frac(v)
}

pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

pub fn double(x: f64) -> f64 {
    frac(2.0 * x)
}

/// Binary word of the periodic point k/(2^q - 1).
pub fn periodic_point(k: u64, q: u32) -> SymbolPoint {
    let bits: Vec<u8> = (0..q).rev().map(|i| ((k >> i) & 1) as u8).collect();
    SymbolPoint::periodic(&bits)
}

fn check_jumps(pseudo: &[f64], delta: f64, cyclic: bool) -> Result<()> {
    let n = pseudo.len();
    let last = if cyclic { n } else { n - 1 };
    for k in 0..last {
        let jump = circle_dist(double(pseudo[k]), pseudo[(k + 1) % n]);
        if jump > delta + JUMP_SLACK {
            return invalid(format!("jump {jump} at step {k} exceeds delta {delta}"));
        }
    }
    Ok(())
}

fn nearest_bit(v: f64, target: f64) -> u8 {
    let a = circle_dist(0.5 * v, target);
    let b = circle_dist(0.5 * (v + 1.0), target);
    u8::from(b < a)
}

/// Achieved max_k d(f^k y, x_k).
pub fn achieved(y: &SymbolPoint, pseudo: &[f64]) -> f64 {
    pseudo
        .iter()
        .enumerate()
        .map(|(k, &x)| circle_dist(value(y, k), x))
        .fold(0.0, f64::max)
}

/// Shadow a finite δ-pseudo-orbit.
pub fn shadow_doubling(pseudo: &[f64], delta: f64) -> Result<SymbolPoint> {
    if pseudo.is_empty() {
        return invalid("empty pseudo-orbit");
    }
    check_jumps(pseudo, delta, false)?;
    let n = pseudo.len();
    let end = to_binary(pseudo[n - 1]);
    let mut v = value(&end, 0);
    let mut bits = vec![0u8; n - 1];
    for k in (0..n - 1).rev() {
        let b = nearest_bit(v, pseudo[k]);
        bits[k] = b;
        v = 0.5 * (v + b as f64);
    }
    Ok(end.prepend(&bits))
}

/// Shadow a periodic δ-pseudo-orbit (the jump from the last point back to the
/// first counts) by a periodic point of the same period.
pub fn shadow_doubling_periodic(pseudo: &[f64], delta: f64) -> Result<SymbolPoint> {
    if pseudo.is_empty() {
        return invalid("empty pseudo-orbit");
    }
    check_jumps(pseudo, delta, true)?;
    let n = pseudo.len();
    let mut v = pseudo[0];
    let mut bits = vec![0u8; n];
    let mut prev: Option<Vec<u8>> = None;
    // Each pass is a contraction by 2^-n; the digits settle quickly.
    for _ in 0..(VALUE_DIGITS / n.max(1) + 4) {
        for k in (0..n).rev() {
            let b = nearest_bit(v, pseudo[k]);
            bits[k] = b;
            v = 0.5 * (v + b as f64);
        }
        if prev.as_ref() == Some(&bits) {
            break;
        }
        prev = Some(bits.clone());
    }
    Ok(SymbolPoint::periodic(&bits))
}

/// Connector from `q` (where the orbit would go next) to `target`: the smallest
/// p and a point w with d(w, q) <= δ and f^p(w) = target.
fn connector(q: f64, target: f64, delta: f64, max_gap: usize) -> Option<(usize, Vec<f64>)> {
    for p in 0..=max_gap {
        let scale = (1u64 << p) as f64;
        let j = (q * scale - target).round().rem_euclid(scale);
        let w = frac((target + j) / scale);
        if circle_dist(w, q) <= delta {
            let mut pts = Vec::with_capacity(p);
            let mut z = w;
            for _ in 0..p {
                pts.push(z);
                z = double(z);
            }
            return Some((p, pts));
        }
    }
    None
}

/// Glue by shadowing the pseudo-orbit made of the segments and inverse-branch connectors.
pub fn glue_doubling(spec: &SegmentSpec, periodic: bool) -> Result<GluedOrbit> {
    let delta = 0.5 * spec.eps;
    // Preimages of the next anchor under f^p are 2^-p apart, so p = ⌈log2(1/δ)⌉ always works.
    let max_gap = (1.0 / delta).log2().ceil().max(0.0) as usize;
    if max_gap > 60 {
        return invalid("epsilon too small for float anchors");
    }
    let anchors: Vec<f64> = spec
        .segments
        .iter()
        .map(|s| s.anchor.coords().map(|c| frac(c[0])))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::DomainMismatch("doubling anchors are circle points".into()))?;
    let k = spec.segments.len();
    let mut pseudo = Vec::new();
    let mut gaps = Vec::new();
    for i in 0..k {
        let mut x = anchors[i];
        for _ in 0..spec.segments[i].len {
            pseudo.push(x);
            x = double(x);
        }
        let next = if i + 1 < k {
            anchors[i + 1]
        } else if periodic {
            anchors[0]
        } else {
            break;
        };
        let (p, pts) = connector(x, next, delta, max_gap)
            .ok_or_else(|| Error::Validation("no inverse-branch connector found".into()))?;
        gaps.push(p);
        pseudo.extend(pts);
    }
    let (y, period) = if periodic {
        if pseudo.is_empty() {
            return invalid("periodic gluing needs a positive total length");
        }
        (shadow_doubling_periodic(&pseudo, delta)?, Some(pseudo.len()))
    } else {
        // Keep the last anchor's orbit beyond the last segment.
        pseudo.push(if spec.segments[k - 1].len == 0 {
            anchors[k - 1]
        } else {
            let mut x = anchors[k - 1];
            for _ in 0..spec.segments[k - 1].len {
                x = double(x);
            }
            x
        });
        (shadow_doubling(&pseudo, delta)?, None)
    };
    Ok(GluedOrbit {
        point: MetricPoint::Torus(vec![value(&y, 0)]),
        binary: Some(y),
        offsets: offsets_from(spec, &gaps),
        gaps,
        period,
        gap_bound: max_gap,
        errors: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        for x in [0.0, 0.5, 0.3, 0.125, 0.999] {
            assert_eq!(value(&to_binary(x), 0), x);
        }
        assert!((value(&periodic_point(1, 3), 0) - 1.0 / 7.0).abs() < 1e-15);
        assert!((value(&periodic_point(1, 3), 1) - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn exact_orbit_shadows_itself() {
        let mut x = 0.3;
        let mut orbit = Vec::new();
        for _ in 0..40 {
            orbit.push(x);
            x = double(x);
        }
        let y = shadow_doubling(&orbit, 0.0).unwrap();
        assert_eq!(y, to_binary(0.3));
        assert_eq!(achieved(&y, &orbit), 0.0);
    }

    #[test]
    fn connector_lands_on_target() {
        let (p, pts) = connector(0.1, 0.7, 0.01, 10).unwrap();
        assert_eq!(pts.len(), p);
        let mut z = pts[0];
        for _ in 0..p {
            z = double(z);
        }
        assert!(circle_dist(z, 0.7) < 1e-12);
        assert!(circle_dist(pts[0], 0.1) <= 0.01);
    }
}
