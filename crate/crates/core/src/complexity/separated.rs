//! Maximal (n, ε)-separated sets.
//!
//! On cylinder-metric shifts the Bowen balls are cylinders, so the admissible
//! words of length n + m - 1 (m = ⌈log2 1/ε⌉) index a maximum separated set and
//! everything reduces to counting. On the value-metric shift the Bowen metric
//! is a weighted sup over coordinates and separated sets are products of
//! one-dimensional greedy chains. Torus maps get a greedy scan over a lattice
//! pool, which is a heuristic lower bound.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observables::Observable;
use crate::systems::{torus_distance, MetricPoint, ShiftMetric, ShiftSpace, System, TorusLift};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparatedSet {
    pub n: usize,
    pub eps: f64,
    /// ln of the cardinality.
    pub log_count: f64,
    /// The cardinality when it fits in an integer.
    pub count: Option<u128>,
    /// Materialized points in construction order (empty when over budget).
    pub points: Vec<MetricPoint>,
    /// True when the cardinality is the exact maximum.
    pub exact: bool,
}

/// Word length n + ⌈log2(1/ε)⌉ - 1 that indexes (n, ε)-separated classes; `None` when ε ≥ 1.
pub fn separation_length(n: usize, eps: f64) -> Option<usize> {
    if eps >= 1.0 {
        return None;
    }
    Some(n + cylinder_depth(eps) - 1)
}

/// m = ⌈log2(1/ε)⌉, with exact handling of dyadic ε.
pub fn cylinder_depth(eps: f64) -> usize {
    let l = (1.0 / eps).log2();
    let r = l.round();
    if (l - r).abs() < 1e-12 {
        r.max(0.0) as usize
    } else {
        l.ceil().max(0.0) as usize
    }
}

pub fn max_separated(sys: &System, n: usize, eps: f64, budget: usize) -> Result<SeparatedSet> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    if !(eps > 0.0) {
        return invalid("epsilon must be positive");
    }
    match sys {
        System::Shift(s) => match s.metric() {
            ShiftMetric::Cylinder => shift_separated(s, n, eps, budget),
            ShiftMetric::Values(v) => {
                let log_count = value_log_count(v, n, eps);
                Ok(SeparatedSet {
                    n,
                    eps,
                    log_count,
                    count: None,
                    points: Vec::new(),
                    exact: false,
                })
            }
        },
        System::Lift(f) => {
            let pool = lattice_pool(f.dim(), eps, budget)?;
            let (points, _) = greedy_torus(f, &pool, n, eps);
            let count = points.len();
            Ok(SeparatedSet {
                n,
                eps,
                log_count: (count as f64).ln(),
                count: Some(count as u128),
                points: points.into_iter().map(MetricPoint::Torus).collect(),
                exact: false,
            })
        }
    }
}

fn shift_separated(s: &ShiftSpace, n: usize, eps: f64, budget: usize) -> Result<SeparatedSet> {
    let Some(len) = separation_length(n, eps) else {
        let p = s.extend(&[0]);
        return Ok(SeparatedSet {
            n,
            eps,
            log_count: 0.0,
            count: Some(1),
            points: vec![MetricPoint::Symbol(p)],
            exact: true,
        });
    };
    let count = s.word_count(len);
    let points = if count <= budget as u128 {
        s.words(len, budget)?
            .into_iter()
            .map(|w| MetricPoint::Symbol(s.extend(&w)))
            .collect()
    } else {
        Vec::new()
    };
    Ok(SeparatedSet {
        n,
        eps,
        log_count: (count as f64).ln(),
        count: Some(count),
        points,
        exact: true,
    })
}

/// Greedy count of values pairwise more than `r` apart.
pub fn greedy_chain_count(sorted_values: &[f64], r: f64) -> usize {
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for &v in sorted_values {
        if v - last > r {
            count += 1;
            last = v;
        }
    }
    count
}

/// ln of the product of per-coordinate greedy counts for the weighted sup metric.
pub fn value_log_count(values: &[f64], n: usize, eps: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0usize;
    loop {
        let w = if i < n { 1.0 } else { 0.5f64.powi((i - n + 1) as i32) };
        if w <= eps {
            break;
        }
        total += (greedy_chain_count(&v, eps / w) as f64).ln();
        i += 1;
    }
    total
}

/// Lattice of mesh just under ε/4 in [0,1)^d, lexicographic order. The mesh is
/// chosen so that ε is not a multiple of it, which keeps lattice distances off
/// the separation threshold.
pub fn lattice_pool(d: usize, eps: f64, budget: usize) -> Result<Vec<Vec<f64>>> {
    let per_axis = (4.0 / eps).floor() as usize + 1;
    let total = (per_axis as f64).powi(d as i32);
    if total > budget as f64 {
        return Err(Error::BudgetExhausted(format!(
            "lattice pool of {total} points exceeds the budget {budget}; use a coarser epsilon"
        )));
    }
    let mut out = Vec::with_capacity(total as usize);
    crate::systems::torus::for_grid(d, per_axis, |z| out.push(z.to_vec()));
    out.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

fn orbit(f: &TorusLift, z: &[f64], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut p = crate::systems::project(z);
    for _ in 0..n {
        out.push(p.clone());
        p = f.step_torus(&p);
    }
    out
}

fn cell_of(z: &[f64], cells: usize) -> Vec<i64> {
    z.iter().map(|&x| ((x * cells as f64) as i64).min(cells as i64 - 1)).collect()
}

fn neighbor_cells(c: &[i64], cells: usize) -> Vec<Vec<i64>> {
    let d = c.len();
    let mut out = Vec::with_capacity(3usize.pow(d as u32));
    for mut k in 0..3usize.pow(d as u32) {
        let mut v = Vec::with_capacity(d);
        for &x in c {
            v.push((x + (k % 3) as i64 - 1).rem_euclid(cells as i64));
            k /= 3;
        }
        out.push(v);
    }
    out.sort();
    out.dedup();
    out
}

/// Greedy (n, ε)-separated subset of the pool in pool order, with the orbits of
/// accepted points. Only points whose initial positions are within one hash
/// cell can fail to be separated, so candidates are compared against those.
pub fn greedy_torus(f: &TorusLift, pool: &[Vec<f64>], n: usize, eps: f64) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
    let cells = ((1.0 / eps).floor() as usize).max(1);
    let orbits: Vec<Vec<Vec<f64>>> = pool.par_iter().map(|z| orbit(f, z, n)).collect();
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut accepted: Vec<usize> = Vec::new();
    for (i, orb) in orbits.iter().enumerate() {
        let c = cell_of(&orb[0], cells);
        let separated = neighbor_cells(&c, cells).iter().all(|nc| {
            grid.get(nc).is_none_or(|members| {
                members
                    .iter()
                    .all(|&j| bowen(&orbits[j], orb) > eps)
            })
        });
        if separated {
            grid.entry(c).or_default().push(i);
            accepted.push(i);
        }
    }
    let points = accepted.iter().map(|&i| pool[i].clone()).collect();
    let orbs = accepted.iter().map(|&i| orbits[i].clone()).collect();
    (points, orbs)
}

fn bowen(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| torus_distance(x, y)).fold(0.0, f64::max)
}

/// Re-check pairwise separation of a materialized set. Returns the first offending pair.
pub fn validate_separated(sys: &System, set: &SeparatedSet) -> Result<Option<(usize, usize)>> {
    let pts = &set.points;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            if sys.bowen_distance(&pts[i], &pts[j], set.n)? <= set.eps {
                return Ok(Some((i, j)));
            }
        }
    }
    Ok(None)
}

/// ln Σ_{x ∈ E} exp S_nψ(x) over the greedy torus set.
pub fn torus_log_sum(f: &TorusLift, psi: &Observable, n: usize, eps: f64, budget: usize) -> Result<f64> {
    let pool = lattice_pool(f.dim(), eps, budget)?;
    let (_, orbits) = greedy_torus(f, &pool, n, eps);
    let sums: Vec<f64> = orbits
        .iter()
        .map(|orb| orb.iter().map(|p| psi.eval_torus(f, p)[0]).sum())
        .collect();
    Ok(log_sum_exp(&sums))
}

pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::SymbolPoint;

    #[test]
    fn full_shift_count() {
        let sys = System::Shift(ShiftSpace::full(2).unwrap());
        let e = max_separated(&sys, 4, 0.125, 1 << 10).unwrap();
        assert_eq!(e.count, Some(64));
        assert_eq!(e.points.len(), 64);
        assert_eq!(validate_separated(&sys, &e).unwrap(), None);
        assert_eq!(max_separated(&sys, 1, 1.0, 10).unwrap().count, Some(1));
    }

    #[test]
    fn golden_mean_count() {
        let sys = System::Shift(ShiftSpace::golden_mean());
        assert_eq!(max_separated(&sys, 4, 0.5, 100).unwrap().count, Some(8));
    }

    #[test]
    fn separated_set_is_maximal_on_small_shift() {
        // Every admissible point is within ε of some chosen point in d_n.
        let s = ShiftSpace::golden_mean();
        let sys = System::Shift(s.clone());
        let e = max_separated(&sys, 3, 0.25, 1000).unwrap();
        for w in s.words(7, 1000).unwrap() {
            let x = MetricPoint::Symbol(s.extend(&w));
            let near = e
                .points
                .iter()
                .any(|p| sys.bowen_distance(p, &x, 3).unwrap() <= 0.25);
            assert!(near, "{}", SymbolPoint::periodic(&w));
        }
    }

    #[test]
    fn rotation_count_is_flat_in_n() {
        let sys = System::Lift(TorusLift::translation(vec![0.3, (2f64).sqrt() - 1.0]).unwrap());
        let a = max_separated(&sys, 2, 0.125, 1 << 16).unwrap();
        let b = max_separated(&sys, 8, 0.125, 1 << 16).unwrap();
        assert_eq!(a.count, b.count);
        assert_eq!(validate_separated(&sys, &b).unwrap(), None);
    }

    #[test]
    fn value_metric_counts() {
        let v: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        // Spacing 1/8 with r = 0.2: picks 0, 0.25, 0.5, 0.75, 1.
        assert_eq!(greedy_chain_count(&v, 0.2), 5);
        let lc = value_log_count(&v, 1, 0.2);
        // Coordinates 0, 1, 2 have radii 0.2, 0.4, 0.8 and give 5, 3, 2 values; weight 1/8 stops.
        assert!((lc - (30f64).ln()).abs() < 1e-12);
    }
}
