//! Shadowing and gluing-orbit constructions.
//!
//! Oracles exist for cylinder-metric shifts (word splicing), the doubling map
//! (inverse branches, with points carried as exact binary expansions) and
//! minimal translations (first-entry times). Every [`GluedOrbit`] is re-checked
//! against its [`SegmentSpec`] by direct iteration before it is returned.

pub mod binary;
pub mod measure;
pub mod net;
pub mod shadow;
pub mod symbolic;
pub mod translation;

use serde::{Deserialize, Serialize};

pub use measure::{approximate_by_periodic_measure, PeriodicMeasure};
pub use net::{build_periodic_net, gluing_from_shadowing, NetClass, PeriodicNet};
pub use shadow::{shadow, Shadow};

use crate::error::{invalid, Error, Result};
use crate::systems::torus::LiftRule;
use crate::systems::{torus_distance, MetricPoint, ShiftMetric, SymbolPoint, System, TorusLift};

/// Slack for numeric (non-symbolic) error checks.
pub const NUMERIC_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub anchor: MetricPoint,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub segments: Vec<Segment>,
    pub eps: f64,
}

impl SegmentSpec {
    pub fn new(segments: Vec<(MetricPoint, usize)>, eps: f64) -> Self {
        SegmentSpec {
            segments: segments.into_iter().map(|(anchor, len)| Segment { anchor, len }).collect(),
            eps,
        }
    }

    fn check(&self, sys: &System) -> Result<()> {
        if self.segments.is_empty() {
            return invalid("a segment spec needs at least one segment");
        }
        if !(self.eps > 0.0) {
            return invalid("epsilon must be positive");
        }
        for s in &self.segments {
            sys.distance(&s.anchor, &s.anchor)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluedOrbit {
    pub point: MetricPoint,
    /// Exact binary expansion of `point` for the doubling map.
    pub binary: Option<SymbolPoint>,
    /// p_1..p_{k-1}, plus the closing gap p_k for periodic gluing.
    pub gaps: Vec<usize>,
    /// Time at which segment i starts along the orbit of `point`.
    pub offsets: Vec<usize>,
    pub period: Option<usize>,
    pub gap_bound: usize,
    /// max_{0 <= j < n_i} d(f^{offset_i + j}(y), f^j(x_i)), recomputed.
    pub errors: Vec<f64>,
}

fn offsets_from(spec: &SegmentSpec, gaps: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(spec.segments.len());
    let mut t = 0;
    for (i, s) in spec.segments.iter().enumerate() {
        out.push(t);
        t += s.len + gaps.get(i).copied().unwrap_or(0);
    }
    out
}

pub(crate) fn is_doubling(f: &TorusLift) -> bool {
    matches!(f.rule(), LiftRule::Doubling)
}

pub(crate) fn translation_vector(f: &TorusLift) -> Option<&[f64]> {
    match f.rule() {
        LiftRule::Translation { v } => Some(v),
        _ => None,
    }
}

/// Recompute errors, gap bounds and periodicity. Errors must be at most `bound`.
pub fn validate_glued(sys: &System, spec: &SegmentSpec, g: &mut GluedOrbit, bound: f64) -> Result<()> {
    let k = spec.segments.len();
    let expect_gaps = if g.period.is_some() { k } else { k - 1 };
    if g.gaps.len() != expect_gaps || g.offsets != offsets_from(spec, &g.gaps) {
        return Err(Error::Validation("gap and offset bookkeeping is inconsistent".into()));
    }
    if let Some(p) = g.gaps.iter().find(|&&p| p > g.gap_bound) {
        return Err(Error::Validation(format!("gap {p} exceeds the bound {}", g.gap_bound)));
    }
    let mut errors = Vec::with_capacity(k);
    for (seg, &o) in spec.segments.iter().zip(&g.offsets) {
        errors.push(segment_error(sys, g, &seg.anchor, o, seg.len)?);
    }
    let numeric = matches!(sys, System::Lift(f) if !is_doubling(f));
    let slack = if numeric { NUMERIC_TOL } else { 0.0 };
    if let Some((i, e)) = errors.iter().enumerate().find(|(_, &e)| e > bound + slack) {
        return Err(Error::Validation(format!("segment {i} error {e} exceeds {bound}")));
    }
    if let Some(p) = g.period {
        let total: usize = spec.segments.iter().map(|s| s.len).sum::<usize>() + g.gaps.iter().sum::<usize>();
        if p != total {
            return Err(Error::Validation("period differs from the sum of lengths and gaps".into()));
        }
        let closes = match (sys, &g.point, &g.binary) {
            (_, _, Some(b)) | (System::Shift(_), MetricPoint::Symbol(b), _) => b.is_periodic() && p % b.tail_period() == 0,
            (System::Lift(f), MetricPoint::Torus(z), None) => {
                let mut w = z.clone();
                for _ in 0..p {
                    w = f.step_torus(&w);
                }
                torus_distance(&w, z) <= NUMERIC_TOL
            }
            _ => false,
        };
        if !closes {
            return Err(Error::Validation(format!("glued point does not have period {p}")));
        }
    }
    g.errors = errors;
    Ok(())
}

fn segment_error(sys: &System, g: &GluedOrbit, anchor: &MetricPoint, offset: usize, n: usize) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    match (sys, &g.binary) {
        (System::Lift(_), Some(b)) => {
            let x = binary::to_binary(anchor.coords().and_then(|c| c.first().copied()).unwrap_or(0.0));
            Ok((0..n)
                .map(|j| binary::circle_dist(binary::value(b, offset + j), binary::value(&x, j)))
                .fold(0.0, f64::max))
        }
        (System::Shift(_), _) => {
            let y = g.point.as_symbol().expect("shift point");
            sys.bowen_distance(&MetricPoint::Symbol(y.shift_by(offset)), anchor, n)
        }
        (System::Lift(f), None) => {
            let mut z = g.point.coords().expect("torus point").to_vec();
            for _ in 0..offset {
                z = f.step_torus(&z);
            }
            sys.bowen_distance(&MetricPoint::Torus(z), anchor, n)
        }
    }
}

/// Glue orbit segments with gaps bounded by m(ε).
pub fn glue(sys: &System, spec: &SegmentSpec) -> Result<GluedOrbit> {
    glue_impl(sys, spec, false)
}

/// Periodic variant: the glued point has period Σ (n_i + p_i).
pub fn glue_periodic(sys: &System, spec: &SegmentSpec) -> Result<GluedOrbit> {
    glue_impl(sys, spec, true)
}

fn glue_impl(sys: &System, spec: &SegmentSpec, periodic: bool) -> Result<GluedOrbit> {
    spec.check(sys)?;
    let mut g = match sys {
        System::Shift(s) => {
            if !matches!(s.metric(), ShiftMetric::Cylinder) {
                return Err(Error::Unsupported("gluing needs the cylinder metric".into()));
            }
            symbolic::glue_sft(s, spec, periodic)?
        }
        System::Lift(f) if is_doubling(f) => binary::glue_doubling(spec, periodic)?,
        System::Lift(f) => match translation_vector(f) {
            Some(v) if !periodic => translation::glue_translation(v, spec)?,
            Some(_) => {
                return Err(Error::Unsupported(
                    "minimal translations have no periodic points to glue into".into(),
                ))
            }
            None => return Err(Error::Unsupported("no gluing oracle for this torus map".into())),
        },
    };
    validate_glued(sys, spec, &mut g, spec.eps)?;
    Ok(g)
}
