//! Points with oscillating Birkhoff averages and fractal families of them.
//!
//! [`build_schedule`] and [`construct_wild_point`] glue P-set witnesses level
//! by level so that averages sweep a polyline of targets;
//! [`build_fractal_family`] builds separated families whose points alternate
//! between two measure averages, with an exact counting certificate for the
//! entropy of the family.

pub mod fractal;
pub mod pset;
pub mod schedule;
pub mod wild;

pub use fractal::{
    alternation_test, build_fractal_family, entropy_lower_certificate, verify_fractal_is_historic, Certificate,
    FractalFamily, FractalParams, FractalSchedule, HistoricReport,
};
pub use pset::sample_p_set;
pub use schedule::{build_schedule, GluingSchedule};
pub use wild::{construct_wild_point, empirical_extremes, verify_oscillation, Itinerary, OscillationReport, WildPoint};
