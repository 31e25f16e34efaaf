//! Gluing for minimal translations by waiting for first entries.
//!
//! Translations are isometries, so the whole error of segment i is the distance
//! between the orbit position at its offset and the anchor. The gap bound m(ε)
//! is the largest first-entry time into B(0, ε/2) over a net of offsets fine
//! enough that every offset is within ε/2 of a net point, which makes m(ε) a
//! valid bound for entering B(0, ε) from anywhere.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{offsets_from, GluedOrbit, SegmentSpec};
use crate::error::{Error, Result};
use crate::systems::torus::for_grid;
use crate::systems::{frac, torus_distance, MetricPoint};

/// Give up on a first-entry search after this many steps.
pub const MAX_WAIT: usize = 10_000_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaitingTable {
    pub eps: f64,
    /// Net points per axis.
    pub resolution: usize,
    pub bound: usize,
}

fn first_entry(v: &[f64], start: &[f64], target: &[f64], radius: f64, limit: usize) -> Option<usize> {
    (0..=limit).find(|&p| {
        let z: Vec<f64> = start.iter().zip(v).map(|(s, a)| frac(s + p as f64 * a)).collect();
        torus_distance(&z, target) < radius
    })
}

/// m(ε) over a net with `refine` times the minimal resolution.
pub fn waiting_table(v: &[f64], eps: f64, refine: usize) -> Result<WaitingTable> {
    let d = v.len();
    let resolution = ((d as f64).sqrt() / eps).ceil() as usize * refine.max(1);
    let mut net = Vec::new();
    for_grid(d, resolution, |z| net.push(z.to_vec()));
    let origin = vec![0.0; d];
    let waits: Vec<Option<usize>> = net
        .par_iter()
        .map(|w| first_entry(v, w, &origin, 0.5 * eps, MAX_WAIT))
        .collect();
    let bound = waits
        .into_iter()
        .try_fold(0usize, |acc, w| w.map(|w| acc.max(w)))
        .ok_or_else(|| Error::BudgetExhausted("first-entry time exceeds the search limit; is the translation minimal?".into()))?;
    Ok(WaitingTable { eps, resolution, bound })
}

pub fn glue_translation(v: &[f64], spec: &SegmentSpec) -> Result<GluedOrbit> {
    let mut table = waiting_table(v, spec.eps, 1)?;
    let anchors: Vec<Vec<f64>> = spec
        .segments
        .iter()
        .map(|s| s.anchor.coords().map(|c| c.iter().map(|&x| frac(x)).collect()))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::DomainMismatch("translation anchors are torus points".into()))?;
    let y = anchors[0].clone();
    let mut end = spec.segments[0].len;
    let mut gaps = Vec::new();
    let mut refined = false;
    for (seg, x) in spec.segments.iter().zip(&anchors).skip(1) {
        let p = loop {
            let base: Vec<f64> = y.iter().zip(v).map(|(s, a)| frac(s + end as f64 * a)).collect();
            if let Some(p) = first_entry(v, &base, x, spec.eps, table.bound) {
                break p;
            }
            if refined {
                return Err(Error::BudgetExhausted(format!(
                    "waiting time exceeds m(eps) = {} even after refining the net",
                    table.bound
                )));
            }
            table = waiting_table(v, spec.eps, 2)?;
            refined = true;
        };
        gaps.push(p);
        end += p + seg.len;
    }
    Ok(GluedOrbit {
        point: MetricPoint::Torus(y),
        binary: None,
        offsets: offsets_from(spec, &gaps),
        gaps,
        period: None,
        gap_bound: table.bound,
        errors: Vec::new(),
    })
}
