//! Dynamical systems: torus lifts and one-sided shifts.

pub mod chain;
pub mod interval;
pub mod shift;
pub mod symbol;
pub mod torus;

use serde::{Deserialize, Serialize};

pub use chain::{chain_recurrence, Component, GridGraph};
pub use shift::{ShiftMetric, ShiftSpace};
pub use symbol::SymbolPoint;
pub use torus::{frac, project, torus_distance, LiftRule, TorusLift, TrigPoly};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum System {
    Lift(TorusLift),
    Shift(ShiftSpace),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricPoint {
    /// Coordinates in [0,1)^d.
    Torus(Vec<f64>),
    /// Coordinates in R^d.
    Lift(Vec<f64>),
    Symbol(SymbolPoint),
}

impl MetricPoint {
    pub fn torus(coords: Vec<f64>) -> Self {
        MetricPoint::Torus(project(&coords))
    }

    pub fn as_symbol(&self) -> Option<&SymbolPoint> {
        match self {
            MetricPoint::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            MetricPoint::Torus(v) | MetricPoint::Lift(v) => Some(v),
            MetricPoint::Symbol(_) => None,
        }
    }
}

/// (x, f(x), ..., f^n(x)), with the lifted orbit for torus lifts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSegment {
    pub points: Vec<MetricPoint>,
    pub lifted: Option<Vec<Vec<f64>>>,
}

fn mismatch<T>(what: &str) -> Result<T> {
    Err(Error::DomainMismatch(what.to_string()))
}

impl System {
    pub fn name_of_kind(&self) -> &'static str {
        match self {
            System::Lift(_) => "torus_lift",
            System::Shift(_) => "shift",
        }
    }

    pub fn as_lift(&self) -> Option<&TorusLift> {
        match self {
            System::Lift(f) => Some(f),
            System::Shift(_) => None,
        }
    }

    pub fn as_shift(&self) -> Option<&ShiftSpace> {
        match self {
            System::Shift(s) => Some(s),
            System::Lift(_) => None,
        }
    }

    fn check(&self, x: &MetricPoint) -> Result<()> {
        match (self, x) {
            (System::Lift(f), MetricPoint::Torus(v) | MetricPoint::Lift(v)) => {
                if v.len() != f.dim() {
                    return mismatch("point dimension differs from the lift dimension");
                }
                Ok(())
            }
            (System::Shift(s), MetricPoint::Symbol(p)) => {
                if !s.is_admissible(p) {
                    return mismatch("symbol point is not admissible in this shift");
                }
                Ok(())
            }
            _ => mismatch("point variant does not match the system"),
        }
    }

    /// One application of the map; lifted points stay lifted, torus points are reduced.
    pub fn step(&self, x: &MetricPoint) -> Result<MetricPoint> {
        self.check(x)?;
        Ok(match (self, x) {
            (System::Lift(f), MetricPoint::Torus(v)) => MetricPoint::Torus(f.step_torus(v)),
            (System::Lift(f), MetricPoint::Lift(v)) => MetricPoint::Lift(f.eval(v)),
            (System::Shift(_), MetricPoint::Symbol(p)) => MetricPoint::Symbol(p.shift()),
            _ => unreachable!("checked above"),
        })
    }

    pub fn iterate(&self, x: &MetricPoint, n: usize) -> Result<OrbitSegment> {
        self.check(x)?;
        match (self, x) {
            (System::Lift(f), MetricPoint::Torus(v) | MetricPoint::Lift(v)) => {
                let mut lifted = Vec::with_capacity(n + 1);
                let mut z = v.clone();
                lifted.push(z.clone());
                for _ in 0..n {
                    f.eval_in_place(&mut z);
                    lifted.push(z.clone());
                }
                let points = lifted.iter().map(|z| MetricPoint::Torus(project(z))).collect();
                Ok(OrbitSegment {
                    points,
                    lifted: Some(lifted),
                })
            }
            (System::Shift(_), MetricPoint::Symbol(p)) => Ok(OrbitSegment {
                points: (0..=n).map(|j| MetricPoint::Symbol(p.shift_by(j))).collect(),
                lifted: None,
            }),
            _ => unreachable!("checked above"),
        }
    }

    pub fn distance(&self, x: &MetricPoint, y: &MetricPoint) -> Result<f64> {
        self.bowen_distance(x, y, 1)
    }

    /// max_{0 <= j < n} d(f^j x, f^j y).
    pub fn bowen_distance(&self, x: &MetricPoint, y: &MetricPoint, n: usize) -> Result<f64> {
        if n == 0 {
            return invalid("bowen distance needs n >= 1");
        }
        self.check(x)?;
        self.check(y)?;
        match (self, x, y) {
            (System::Shift(s), MetricPoint::Symbol(a), MetricPoint::Symbol(b)) => {
                Ok(s.bowen_distance(a, b, n))
            }
            (System::Lift(f), _, _) => {
                let mut a = project(x.coords().expect("checked"));
                let mut b = project(y.coords().expect("checked"));
                let mut best = torus_distance(&a, &b);
                for _ in 1..n {
                    a = f.step_torus(&a);
                    b = f.step_torus(&b);
                    best = best.max(torus_distance(&a, &b));
                }
                Ok(best)
            }
            _ => mismatch("point variant does not match the system"),
        }
    }
}

/// Grid lower bound for the C⁰ distance between two torus maps.
///
/// Samples `grid` points per axis; with `two_sided` the inverses are compared too.
pub fn c0_distance(f: &System, g: &System, grid: usize, two_sided: bool) -> Result<f64> {
    let (System::Lift(f), System::Lift(g)) = (f, g) else {
        return Err(Error::Unsupported(
            "c0 distance is implemented for torus lifts".into(),
        ));
    };
    if f.dim() != g.dim() {
        return mismatch("maps act on tori of different dimensions");
    }
    if grid == 0 {
        return invalid("grid must be positive");
    }
    if two_sided && !(f.has_inverse() && g.has_inverse()) {
        return Err(Error::MissingInverse(
            "two-sided distance needs both inverses".into(),
        ));
    }
    let mut best = 0.0f64;
    let mut err = None;
    torus::for_grid(f.dim(), grid, |z| {
        best = best.max(torus_distance(&f.eval(z), &g.eval(z)));
        if two_sided {
            match (f.inverse(z), g.inverse(z)) {
                (Ok(a), Ok(b)) => best = best.max(torus_distance(&a, &b)),
                (Err(e), _) | (_, Err(e)) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn translation_orbit() {
        let f = System::Lift(TorusLift::translation(vec![0.3, 0.7]).unwrap());
        let orb = f.iterate(&MetricPoint::Lift(vec![0.0, 0.0]), 3).unwrap();
        let want = [[0.0, 0.0], [0.3, 0.7], [0.6, 1.4], [0.9, 2.1]];
        for (z, w) in orb.lifted.unwrap().iter().zip(want) {
            assert_abs_diff_eq!(z[0], w[0], epsilon = 1e-12);
            assert_abs_diff_eq!(z[1], w[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn doubling_orbit_is_exact() {
        let f = System::Lift(TorusLift::doubling());
        let orb = f.iterate(&MetricPoint::Lift(vec![0.3]), 2).unwrap();
        assert_eq!(orb.lifted.unwrap(), vec![vec![0.3], vec![0.6], vec![1.2]]);
    }

    #[test]
    fn shift_orbit_and_mismatch() {
        let s = System::Shift(ShiftSpace::full(2).unwrap());
        let x = MetricPoint::Symbol(SymbolPoint::periodic(&[0, 1]));
        let orb = s.iterate(&x, 1).unwrap();
        assert_eq!(orb.points[1], MetricPoint::Symbol(SymbolPoint::periodic(&[1, 0])));
        assert!(matches!(
            s.iterate(&MetricPoint::Torus(vec![0.1]), 1),
            Err(Error::DomainMismatch(_))
        ));
    }

    #[test]
    fn translation_is_isometry() {
        let f = System::Lift(TorusLift::translation(vec![0.3, 0.7]).unwrap());
        let x = MetricPoint::Torus(vec![0.1, 0.2]);
        let y = MetricPoint::Torus(vec![0.4, 0.9]);
        let d = f.distance(&x, &y).unwrap();
        assert_abs_diff_eq!(f.bowen_distance(&x, &y, 50).unwrap(), d, epsilon = 1e-12);
    }

    #[test]
    fn c0_examples() {
        let t1 = System::Lift(TorusLift::translation(vec![0.3, 0.7]).unwrap());
        let t2 = System::Lift(TorusLift::translation(vec![0.3, 0.6]).unwrap());
        assert_eq!(c0_distance(&t1, &t1, 16, true).unwrap(), 0.0);
        assert_abs_diff_eq!(c0_distance(&t1, &t2, 16, true).unwrap(), 0.1, epsilon = 1e-12);
        let twist = System::Lift(
            TorusLift::new(LiftRule::Shear {
                s: TrigPoly::constant(0.0),
                twist: 1,
            })
            .unwrap(),
        );
        let id = System::Lift(TorusLift::translation(vec![0.0, 0.0]).unwrap());
        assert_abs_diff_eq!(c0_distance(&twist, &id, 64, false).unwrap(), 0.5, epsilon = 1e-12);
        let dbl = System::Lift(TorusLift::doubling());
        let idc = System::Lift(TorusLift::translation(vec![0.0]).unwrap());
        assert!(matches!(
            c0_distance(&dbl, &idc, 8, true),
            Err(Error::MissingInverse(_))
        ));
    }
}
