//! Fixtures shared by the benchmarks.

use ergokit::systems::torus::TrigPoly;
use ergokit::{Observable, ShiftSpace, System, TorusLift};

pub fn full_shift(alphabet: usize) -> System {
    System::Shift(ShiftSpace::full(alphabet).expect("valid alphabet"))
}

pub fn golden_mean() -> System {
    System::Shift(ShiftSpace::golden_mean())
}

pub fn shear() -> System {
    System::Lift(TorusLift::shear(TrigPoly::sin_squared()))
}

pub fn doubling() -> System {
    System::Lift(TorusLift::doubling())
}

/// Indicator of the cylinder [1].
pub fn ones() -> Observable {
    Observable::cylinder(&[1])
}

pub fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| 0.5f64.powi(k)).collect()
}
