//! One point of the nested construction: blocks of witness segments glued in
//! schedule order, plus the checkpoint verification of its averages.

use serde::{Deserialize, Serialize};

use super::pset::check_observable;
use super::schedule::GluingSchedule;
use crate::error::{invalid, Error, Result};
use crate::gluing::symbolic::{m_eps, place_in, sft_gap_bound};
use crate::observables::{dist, exact_variation, Observable};
use crate::systems::{MetricPoint, SymbolPoint, System};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentLog {
    pub k: usize,
    pub i: usize,
    /// e_j, the time the segment starts.
    pub offset: usize,
    pub gap: usize,
    pub tol: f64,
    /// Index into the block's witness list.
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: usize,
    pub i: usize,
    /// l_{k,i}: end of the block's last segment.
    pub time: usize,
    /// l_{k,i-1}.
    pub start: usize,
    /// Symbols of the block that are gaps rather than segments.
    pub gap_symbols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Itinerary {
    pub segments: Vec<SegmentLog>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WildPoint {
    pub point: SymbolPoint,
    pub itinerary: Itinerary,
    /// d(x, q).
    pub base_distance: f64,
}

/// Glue the schedule's blocks after an initial agreement with `q`.
pub fn construct_wild_point(sys: &System, phi: &Observable, sched: &GluingSchedule, q: &MetricPoint) -> Result<WildPoint> {
    let s = check_observable(sys, phi)?;
    let q = q
        .as_symbol()
        .ok_or_else(|| Error::DomainMismatch("base point must be a symbol sequence".into()))?;
    if !s.is_admissible(q) {
        return invalid("base point is not admissible");
    }
    // The base point is a length-1 segment at scale ε/2.
    let mut w = q.word(0, m_eps(sched.base_eps));
    let mut end = 1usize;
    let mut segments = Vec::new();
    let mut checkpoints = Vec::new();
    let mut last_anchor: Option<(usize, &[u8])> = None;
    for b in sched.blocks() {
        let m = m_eps(b.eps);
        let bound = sft_gap_bound(s, b.eps)?;
        let start = end;
        let mut gap_symbols = 0;
        for r in 0..b.repeats {
            let j = r % b.witnesses.len();
            let u = &b.witnesses[j];
            let window: Vec<u8> = (0..b.n + m - 1).map(|t| u[t % u.len()]).collect();
            let p = (0..=bound)
                .find(|&p| place_in(s, &mut w, end + p, &window))
                .ok_or_else(|| Error::Validation(format!("no connector within {bound} at block ({},{})", b.k, b.i)))?;
            segments.push(SegmentLog {
                k: b.k,
                i: b.i,
                offset: end + p,
                gap: p,
                tol: b.eps,
                witness: j,
            });
            last_anchor = Some((end + p, u));
            gap_symbols += p;
            end += p + b.n;
        }
        checkpoints.push(Checkpoint {
            k: b.k,
            i: b.i,
            time: end,
            start,
            gap_symbols,
        });
    }
    let point = match last_anchor {
        // Follow the last witness beyond its window.
        Some((o, u)) => SymbolPoint::periodic(u).prepend(&w[..o]),
        None => s.extend(&w),
    };
    let base_distance = s.distance(&point, q);
    let wp = WildPoint {
        point,
        itinerary: Itinerary { segments, checkpoints },
        base_distance,
    };
    check_segments(sched, &wp)?;
    Ok(wp)
}

/// Every logged segment must follow its witness for n + m - 1 symbols, which
/// is d_n ≤ tol; the point must start within ε/2 of the base point.
fn check_segments(sched: &GluingSchedule, wp: &WildPoint) -> Result<()> {
    if wp.base_distance > sched.base_eps {
        return Err(Error::Validation(format!("base distance {} exceeds {}", wp.base_distance, sched.base_eps)));
    }
    let blocks: Vec<_> = sched.blocks().collect();
    let mut bi = 0;
    for seg in &wp.itinerary.segments {
        while (blocks[bi].k, blocks[bi].i) != (seg.k, seg.i) {
            bi += 1;
        }
        let b = blocks[bi];
        let u = &b.witnesses[seg.witness];
        let len = b.n + m_eps(seg.tol) - 1;
        if (0..len).any(|t| wp.point.at(seg.offset + t) != u[t % u.len()]) {
            return Err(Error::Validation(format!("segment at {} leaves its witness", seg.offset)));
        }
    }
    Ok(())
}

/// S_t φ(x) at each of the increasing `times`.
pub fn sums_at(phi: &Observable, x: &SymbolPoint, times: &[usize]) -> Vec<Vec<f64>> {
    let w = phi.window().unwrap_or(0);
    let horizon = times.last().copied().unwrap_or(0);
    let buf = x.word(0, horizon + w);
    let d = phi.eval_word(&buf[..w]).len();
    let mut acc = vec![0.0; d];
    let mut out = Vec::with_capacity(times.len());
    let mut next = times.iter().peekable();
    for t in 0..=horizon {
        while next.next_if(|&&c| c == t).is_some() {
            out.push(acc.clone());
        }
        if t < horizon {
            for (a, v) in acc.iter_mut().zip(phi.eval_word(&buf[t..t + w])) {
                *a += v;
            }
        }
    }
    out
}

/// Scalar running averages A(t) = S_t φ / t for t = 1..=horizon (index t-1).
pub fn scalar_averages(phi: &Observable, x: &SymbolPoint, horizon: usize) -> Vec<f64> {
    let w = phi.window().unwrap_or(0);
    let buf = x.word(0, horizon + w);
    let mut acc = 0.0;
    (0..horizon)
        .map(|j| {
            acc += phi.eval_word(&buf[j..j + w])[0];
            acc / (j + 1) as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationRow {
    pub k: usize,
    pub i: usize,
    pub time: usize,
    pub target: Vec<f64>,
    pub average: Vec<f64>,
    pub measured: f64,
    pub budget: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub rows: Vec<OscillationRow>,
    pub pass: bool,
    /// First (k, i) whose deviation exceeds its budget.
    pub first_failure: Option<(usize, usize)>,
}

/// Compare averages at l_{k,i} with v_{k,i}.
///
/// Budget: δ_{k,i} + var(φ, ε_{k,i}) + 2‖φ‖ (l_{k,i-1} + gaps_{k,i}) / l_{k,i}.
/// Without an itinerary the planned times and worst-case gaps are used.
pub fn verify_oscillation(
    sys: &System,
    phi: &Observable,
    x: &MetricPoint,
    sched: &GluingSchedule,
    itinerary: Option<&Itinerary>,
) -> Result<OscillationReport> {
    let s = check_observable(sys, phi)?;
    let x = x
        .as_symbol()
        .ok_or_else(|| Error::DomainMismatch("expected a symbol sequence".into()))?;
    let norm = phi.sup_norm(sys)?;
    let blocks: Vec<_> = sched.blocks().collect();
    let checkpoints: Vec<Checkpoint> = match itinerary {
        Some(it) => it.checkpoints.clone(),
        None => {
            let mut start = m_eps(sched.base_eps);
            blocks
                .iter()
                .map(|b| {
                    let c = Checkpoint {
                        k: b.k,
                        i: b.i,
                        time: b.planned_end,
                        start,
                        gap_symbols: b.repeats * b.gap_bound,
                    };
                    start = b.planned_end;
                    c
                })
                .collect()
        }
    };
    if checkpoints.len() != blocks.len() {
        return invalid("itinerary does not match the schedule");
    }
    if checkpoints.windows(2).any(|w| w[1].time <= w[0].time) || checkpoints.first().is_some_and(|c| c.time == 0) {
        return invalid("checkpoint times must be positive and increasing");
    }
    let times: Vec<usize> = checkpoints.iter().map(|c| c.time).collect();
    let sums = sums_at(phi, x, &times);
    let mut rows = Vec::with_capacity(blocks.len());
    for ((b, c), sum) in blocks.iter().zip(&checkpoints).zip(&sums) {
        let average: Vec<f64> = sum.iter().map(|v| v / c.time as f64).collect();
        let measured = dist(&average, &b.target);
        let var = exact_variation(s, phi, b.eps)?;
        let budget = b.delta + var + 2.0 * norm * (c.start + c.gap_symbols) as f64 / c.time as f64;
        rows.push(OscillationRow {
            k: b.k,
            i: b.i,
            time: c.time,
            target: b.target.clone(),
            average,
            measured,
            budget,
            pass: measured <= budget,
        });
    }
    let first_failure = rows.iter().find(|r| !r.pass).map(|r| (r.k, r.i));
    Ok(OscillationReport {
        pass: first_failure.is_none(),
        rows,
        first_failure,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremes {
    pub from: usize,
    pub to: usize,
    pub lim_inf: f64,
    pub lim_sup: f64,
}

impl Extremes {
    pub fn spread(&self) -> f64 {
        self.lim_sup - self.lim_inf
    }
}

/// Finite-horizon lim sup / lim inf of a scalar average: extremes of A(t)
/// over t from the end of level 1 to min(horizon, end of the construction).
pub fn empirical_extremes(phi: &Observable, wp: &WildPoint, sched: &GluingSchedule, horizon: usize) -> Result<Extremes> {
    let cps = &wp.itinerary.checkpoints;
    let level1 = sched.levels.first().map_or(0, |l| l.a);
    let from = cps.get(level1.saturating_sub(1)).map(|c| c.time).unwrap_or(1);
    let to = horizon.min(cps.last().map_or(horizon, |c| c.time));
    if from == 0 || from > to {
        return invalid(format!("empty averaging window [{from}, {to}]"));
    }
    let avgs = scalar_averages(phi, &wp.point, to);
    let tail = &avgs[from - 1..to];
    Ok(Extremes {
        from,
        to,
        lim_inf: tail.iter().copied().fold(f64::INFINITY, f64::min),
        lim_sup: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
