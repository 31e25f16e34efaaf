//! Shadowing oracles for pseudo-orbits.
//!
//! On a cylinder-metric shift a δ-pseudo-orbit with δ < 1 is shadowed by
//! reading off the first symbol of every point; on the doubling map the
//! backward inverse-branch choice in [`super::binary`] is used.

use serde::{Deserialize, Serialize};

use super::binary;
use super::is_doubling;
use crate::error::{invalid, Error, Result};
use crate::systems::{MetricPoint, ShiftMetric, ShiftSpace, SymbolPoint, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shadow {
    pub point: MetricPoint,
    /// Exact binary expansion for the doubling map.
    pub binary: Option<SymbolPoint>,
    /// sup_k d(f^k y, x_k), recomputed.
    pub achieved: f64,
    /// The oracle's ε(δ).
    pub bound: f64,
    pub period: Option<usize>,
}

/// ε(δ) of the available oracle.
pub fn shadow_bound(sys: &System, delta: f64) -> Result<f64> {
    match sys {
        System::Shift(s) if matches!(s.metric(), ShiftMetric::Cylinder) => Ok(2.0 * delta),
        // λ/(λ-1) with λ = 2.
        System::Lift(f) if is_doubling(f) => Ok(2.0 * delta),
        System::Shift(_) => Err(Error::Unsupported("shadowing needs the cylinder metric".into())),
        System::Lift(_) => Err(Error::Unsupported("no shadowing oracle for this torus map".into())),
    }
}

/// Shadow `pseudo`; with `periodic` the jump from the last point back to the
/// first is part of the pseudo-orbit and the shadow has period `pseudo.len()`.
pub fn shadow(sys: &System, pseudo: &[MetricPoint], delta: f64, periodic: bool) -> Result<Shadow> {
    if pseudo.is_empty() {
        return invalid("empty pseudo-orbit");
    }
    if !(delta >= 0.0) {
        return invalid("delta must be nonnegative");
    }
    let bound = shadow_bound(sys, delta)?;
    match sys {
        System::Shift(s) => shadow_shift(s, pseudo, delta, periodic, bound),
        System::Lift(_) => {
            let xs: Vec<f64> = pseudo
                .iter()
                .map(|p| p.coords().filter(|c| c.len() == 1).map(|c| crate::systems::frac(c[0])))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::DomainMismatch("doubling pseudo-orbits are circle points".into()))?;
            let y = if periodic {
                binary::shadow_doubling_periodic(&xs, delta)?
            } else {
                binary::shadow_doubling(&xs, delta)?
            };
            let achieved = binary::achieved(&y, &xs);
            if achieved > bound + binary::JUMP_SLACK {
                return Err(Error::Validation(format!("shadow error {achieved} exceeds {bound}")));
            }
            Ok(Shadow {
                point: MetricPoint::Torus(vec![binary::value(&y, 0)]),
                binary: Some(y),
                achieved,
                bound,
                period: periodic.then_some(xs.len()),
            })
        }
    }
}

fn shadow_shift(s: &ShiftSpace, pseudo: &[MetricPoint], delta: f64, periodic: bool, bound: f64) -> Result<Shadow> {
    // Jumps below 1 keep the first symbols chained, so the splice is admissible.
    if delta >= 1.0 {
        return invalid("shift shadowing needs delta < 1");
    }
    let xs: Vec<&SymbolPoint> = pseudo
        .iter()
        .map(|p| p.as_symbol())
        .collect::<Option<_>>()
        .ok_or_else(|| Error::DomainMismatch("shift pseudo-orbits are symbol points".into()))?;
    let n = xs.len();
    let last = if periodic { n } else { n - 1 };
    for k in 0..last {
        let jump = s.distance(&xs[k].shift(), xs[(k + 1) % n]);
        if jump > delta {
            return invalid(format!("jump {jump} at step {k} exceeds delta {delta}"));
        }
    }
    let firsts: Vec<u8> = xs.iter().map(|x| x.at(0)).collect();
    let y = if periodic {
        SymbolPoint::periodic(&firsts)
    } else {
        xs[n - 1].prepend(&firsts[..n - 1])
    };
    if !s.is_admissible(&y) {
        return Err(Error::Validation("spliced point is not admissible".into()));
    }
    let achieved = xs
        .iter()
        .enumerate()
        .map(|(k, x)| s.distance(&y.shift_by(k), x))
        .fold(0.0, f64::max);
    if achieved > bound {
        return Err(Error::Validation(format!("shadow error {achieved} exceeds {bound}")));
    }
    Ok(Shadow {
        point: MetricPoint::Symbol(y),
        binary: None,
        achieved,
        bound,
        period: periodic.then_some(n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_shift_orbit_returns_its_start() {
        let s = ShiftSpace::full(2).unwrap();
        let x = SymbolPoint::new(vec![0, 1, 1], vec![0, 1]).unwrap();
        let pseudo: Vec<MetricPoint> = (0..6).map(|k| MetricPoint::Symbol(x.shift_by(k))).collect();
        let sh = shadow(&System::Shift(s), &pseudo, 0.0, false).unwrap();
        assert_eq!(sh.point, MetricPoint::Symbol(x));
        assert_eq!(sh.achieved, 0.0);
    }

    #[test]
    fn translations_have_no_oracle() {
        let sys = System::Lift(crate::systems::TorusLift::translation(vec![0.3]).unwrap());
        let r = shadow(&sys, &[MetricPoint::Torus(vec![0.0])], 0.1, false);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
