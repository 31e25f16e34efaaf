//! Level-by-level gluing schedules for points with oscillating averages.
//!
//! Level k visits a_k targets along the polyline Δ, alternately forward and
//! backward, so that consecutive targets (also across levels) are closer than
//! 1/k. Each target (k, i) gets a tolerance δ_{k,i}, a periodic P-set witness
//! of length n_{k,i}, a repetition count N_{k,i} and a shadowing scale
//! ε/2^{b_{k-1}+i}.

use serde::{Deserialize, Serialize};

use super::pset::{check_observable, periodic_witness, BlockPool};
use crate::error::{invalid, Error, Result};
use crate::gluing::symbolic::{m_eps, sft_gap_bound};
use crate::observables::{dist, periodic_average, Observable};
use crate::systems::System;

/// Cap on the planned length of the constructed orbit segment.
pub const MAX_TOTAL_LEN: usize = 10_000_000;
pub const MAX_DEPTH: usize = 6;
/// Targets are snapped to this grid so witnesses close up exactly.
pub const TARGET_GRID: f64 = 240.0;
/// Block length over accumulated length for the last block of an early level.
pub const TURN_RATIO: f64 = 49.0;
/// Levels whose last block uses [`TURN_RATIO`].
pub const TURN_LEVELS: usize = 2;
/// Block length over accumulated length everywhere else.
pub const BASE_RATIO: f64 = 0.5;
/// Witness lengths tried above the lower bound.
const WITNESS_TRIES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBlock {
    pub k: usize,
    /// 1-based position within the level.
    pub i: usize,
    pub target: Vec<f64>,
    pub delta: f64,
    /// Shadowing scale ε/2^{b_{k-1}+i}.
    pub eps: f64,
    pub n: usize,
    pub repeats: usize,
    /// Cyclic witness words; `words[j]^∞` lies in P(target, delta, n).
    pub witnesses: Vec<Vec<u8>>,
    /// ‖period average - target‖ of the first witness.
    pub witness_error: f64,
    /// Worst-case block length, gaps included.
    pub planned_len: usize,
    /// Planned l_{k,i}.
    pub planned_end: usize,
    /// Gap bound for this block's scale.
    pub gap_bound: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLevel {
    pub k: usize,
    pub a: usize,
    /// b_k = a_1 + ... + a_k.
    pub b: usize,
    /// m_k = m(ε/2^{b_k}).
    pub m: usize,
    pub blocks: Vec<ScheduleBlock>,
    /// Largest length-form ratio at this level.
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GluingSchedule {
    /// Vertices of the polyline Δ.
    pub target_set: Vec<Vec<f64>>,
    pub eps: f64,
    pub depth: usize,
    /// Scale of the initial agreement with the base point.
    pub base_eps: f64,
    pub levels: Vec<ScheduleLevel>,
    pub total_len: usize,
    /// θ_k decreasing and θ_k ≤ 1/k; reported, not required (see README).
    pub ratio_conditions_hold: bool,
}

impl GluingSchedule {
    pub fn blocks(&self) -> impl Iterator<Item = &ScheduleBlock> {
        self.levels.iter().flat_map(|l| l.blocks.iter())
    }

    pub fn dim(&self) -> usize {
        self.target_set[0].len()
    }
}

fn polyline_length(p: &[Vec<f64>]) -> f64 {
    p.windows(2).map(|w| dist(&w[0], &w[1])).sum()
}

/// Point at arclength s along the polyline.
fn point_at(p: &[Vec<f64>], s: f64) -> Vec<f64> {
    let mut left = s;
    for w in p.windows(2) {
        let len = dist(&w[0], &w[1]);
        if left <= len && len > 0.0 {
            let t = left / len;
            return w[0].iter().zip(&w[1]).map(|(a, b)| a + t * (b - a)).collect();
        }
        left -= len;
    }
    p.last().expect("nonempty polyline").clone()
}

fn snap(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * TARGET_GRID).round() / TARGET_GRID).collect()
}

/// a_k: enough targets for gaps below 1/k after snapping (each snap moves a
/// point by at most √d / (2 · grid)), and at least k of them.
pub fn targets_per_level(length: f64, k: usize, dim: usize) -> usize {
    if length == 0.0 {
        return 1;
    }
    let slack = (dim as f64).sqrt() / TARGET_GRID;
    k.max((length / (1.0 / k as f64 - slack)).floor() as usize + 2)
}

/// Level-k targets, equally spaced by arclength and snapped to the grid.
pub fn level_targets(p: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let len = polyline_length(p);
    let a = targets_per_level(len, k, p[0].len());
    let mut v: Vec<Vec<f64>> = (0..a)
        .map(|j| if a == 1 { p[0].clone() } else { point_at(p, len * j as f64 / (a - 1) as f64) })
        .map(|x| snap(&x))
        .collect();
    if k.is_multiple_of(2) {
        v.reverse();
    }
    v
}

/// Distance from `x` to the polyline.
pub fn polyline_distance(p: &[Vec<f64>], x: &[f64]) -> f64 {
    if p.len() == 1 {
        return dist(&p[0], x);
    }
    p.windows(2)
        .map(|w| {
            let ab: Vec<f64> = w[0].iter().zip(&w[1]).map(|(a, b)| b - a).collect();
            let len2: f64 = ab.iter().map(|t| t * t).sum();
            let t = if len2 == 0.0 {
                0.0
            } else {
                (x.iter().zip(&w[0]).zip(&ab).map(|((x, a), v)| (x - a) * v).sum::<f64>() / len2).clamp(0.0, 1.0)
            };
            let q: Vec<f64> = w[0].iter().zip(&ab).map(|(a, v)| a + t * v).collect();
            dist(x, &q)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn build_schedule(sys: &System, phi: &Observable, delta_set: &[Vec<f64>], depth: usize, eps: f64) -> Result<GluingSchedule> {
    let s = check_observable(sys, phi)?;
    if delta_set.is_empty() {
        return invalid("target set needs at least one vertex");
    }
    let d = phi.dim(sys)?;
    if delta_set.iter().any(|v| v.len() != d) {
        return invalid(format!("target vertices must have dimension {d}"));
    }
    if depth == 0 || depth > MAX_DEPTH {
        return invalid(format!("depth must be in 1..={MAX_DEPTH}"));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid("epsilon must be in (0, 1]");
    }
    let pool = BlockPool::new(s, phi)?;
    let base_eps = eps / 2.0;
    let mut acc = m_eps(base_eps);
    let mut b_prev = 0usize;
    let mut prev_n = 0usize;
    let mut levels: Vec<ScheduleLevel> = Vec::new();
    for k in 1..=depth {
        let targets = level_targets(delta_set, k);
        let a = targets.len();
        let b = b_prev + a;
        let m = sft_gap_bound(s, eps / 2f64.powi(b as i32))?;
        let mut blocks = Vec::with_capacity(a);
        for (idx, v) in targets.into_iter().enumerate() {
            let i = idx + 1;
            let delta = 2f64.powi(-((b_prev + i + 2) as i32));
            let block_eps = eps / 2f64.powi((b_prev + i) as i32);
            let gap_bound = sft_gap_bound(s, block_eps)?;
            let lower = (k * (1 << k) * m).max(prev_n + 1);
            let word = periodic_witness(s, phi, &pool, &v, delta, lower, WITNESS_TRIES)?;
            let n = word.len();
            let witness_error = dist(&periodic_average(phi, &word), &v);
            let mut witnesses = vec![word.clone()];
            for r in [n / 3, 2 * n / 3] {
                let mut u = word.clone();
                u.rotate_left(r);
                if !witnesses.contains(&u) {
                    witnesses.push(u);
                }
            }
            let ratio = if k <= TURN_LEVELS && i == a && a >= 2 { TURN_RATIO } else { BASE_RATIO };
            let repeats = ((ratio * acc as f64 / n as f64).ceil() as usize).max(1);
            let planned_len = repeats * (n + gap_bound);
            acc = acc
                .checked_add(planned_len)
                .filter(|&t| t <= MAX_TOTAL_LEN)
                .ok_or_else(|| {
                    Error::BudgetExhausted(format!(
                        "planned length exceeds {MAX_TOTAL_LEN} at level {k}, block {i}; reduce the depth"
                    ))
                })?;
            blocks.push(ScheduleBlock {
                k,
                i,
                target: v,
                delta,
                eps: block_eps,
                n,
                repeats,
                witnesses,
                witness_error,
                planned_len,
                planned_end: acc,
                gap_bound,
            });
            prev_n = n;
        }
        levels.push(ScheduleLevel {
            k,
            a,
            b,
            m,
            blocks,
            theta: 0.0,
        });
        b_prev = b;
    }
    fill_theta(&mut levels, m_eps(base_eps));
    let ratio_conditions_hold = levels
        .iter()
        .enumerate()
        .all(|(j, l)| l.theta <= 1.0 / l.k as f64 && (j == 0 || l.theta < levels[j - 1].theta));
    let sched = GluingSchedule {
        target_set: delta_set.to_vec(),
        eps,
        depth,
        base_eps,
        total_len: acc,
        levels,
        ratio_conditions_hold,
    };
    check_schedule(&sched, phi)?;
    Ok(sched)
}

/// θ_k = max over the level of (n_next + m_k)/t_{k,i} and l_{k,i-1}/t_{k,i}.
fn fill_theta(levels: &mut [ScheduleLevel], start: usize) {
    let flat: Vec<(usize, usize, usize)> = levels
        .iter()
        .flat_map(|l| l.blocks.iter().map(move |b| (l.k, b.n, b.planned_len)))
        .collect();
    let mut prev_end = start;
    let mut theta = vec![0.0f64; levels.len()];
    for (j, &(k, _, t)) in flat.iter().enumerate() {
        let m = levels[k - 1].m;
        let next_n = flat.get(j + 1).map_or(0, |x| x.1);
        let r = ((next_n + m) as f64 / t as f64).max(prev_end as f64 / t as f64);
        theta[k - 1] = theta[k - 1].max(r);
        prev_end += t;
    }
    for (l, th) in levels.iter_mut().zip(theta) {
        l.theta = th;
    }
}

/// The machine-checked schedule invariants; any failure is an error.
pub fn check_schedule(sched: &GluingSchedule, phi: &Observable) -> Result<()> {
    let fail = |msg: String| Err(Error::Validation(msg));
    let mut last: Option<&ScheduleBlock> = None;
    for level in &sched.levels {
        let k = level.k as f64;
        if level.blocks.len() != level.a || level.a == 0 {
            return fail(format!("level {} has {} blocks, expected a_k = {}", level.k, level.blocks.len(), level.a));
        }
        for pt in sample_polyline(&sched.target_set) {
            let near = level.blocks.iter().map(|b| dist(&b.target, &pt)).fold(f64::INFINITY, f64::min);
            if near >= 1.0 / k {
                return fail(format!("level {} targets are not 1/k-dense near {pt:?}", level.k));
            }
        }
        for b in &level.blocks {
            if let Some(p) = last {
                let jump = dist(&p.target, &b.target);
                let bound = 1.0 / p.k as f64;
                if jump >= bound {
                    return fail(format!("targets ({},{}) and ({},{}) are {jump} apart", p.k, p.i, b.k, b.i));
                }
                if !(b.delta < p.delta) {
                    return fail(format!("delta does not decrease at ({},{})", b.k, b.i));
                }
                if b.n <= p.n {
                    return fail(format!("n does not increase at ({},{})", b.k, b.i));
                }
            }
            if b.repeats == 0 || b.witnesses.is_empty() {
                return fail(format!("block ({},{}) has no witnesses or repeats", b.k, b.i));
            }
            for w in &b.witnesses {
                if w.len() != b.n || !(dist(&periodic_average(phi, w), &b.target) < b.delta) {
                    return fail(format!("witness of block ({},{}) is not in its P-set", b.k, b.i));
                }
            }
            last = Some(b);
        }
    }
    if sched.levels.windows(2).any(|w| w[1].m < w[0].m) {
        return fail("gap bounds m_k must not decrease".into());
    }
    Ok(())
}

fn sample_polyline(p: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = polyline_length(p);
    if len == 0.0 {
        return vec![p[0].clone()];
    }
    (0..=256).map(|j| point_at(p, len * j as f64 / 256.0)).collect()
}
