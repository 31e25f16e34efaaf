//! Witnesses for P(w, δ, n) = {x : ‖(1/n) S_n φ(x) - w‖ < δ} on shifts.
//!
//! The target is written as a convex combination of periodic φ-averages
//! (at most d + 1 of them for d ≤ 2) and a witness word is assembled from
//! whole copies of those periodic words, joined by admissible bridges.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::observables::{dist, periodic_average, Observable};
use crate::rotation::hull::convex_hull;
use crate::systems::{MetricPoint, ShiftMetric, ShiftSpace, SymbolPoint, System};

/// Period averages this close to the target count as exact.
pub const EXACT_TOL: f64 = 1e-12;
/// Longest periodic word used as a building block.
pub const MAX_BLOCK_PERIOD: usize = 6;

/// A convex decomposition of a target into periodic words.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub words: Vec<Vec<u8>>,
    pub weights: Vec<f64>,
    /// The represented point, which is `target` projected onto the hull.
    pub point: Vec<f64>,
}

/// Periodic building blocks: shortest word for each distinct average.
#[derive(Clone, Debug)]
pub struct BlockPool {
    pub words: Vec<Vec<u8>>,
    pub averages: Vec<Vec<f64>>,
}

impl BlockPool {
    pub fn new(s: &ShiftSpace, phi: &Observable) -> Result<Self> {
        let orbits = s.periodic_orbits(MAX_BLOCK_PERIOD, 1 << 16)?;
        let mut words: Vec<Vec<u8>> = Vec::new();
        let mut averages: Vec<Vec<f64>> = Vec::new();
        // Orbits come sorted by period, so the first word for an average is shortest.
        for w in orbits {
            let a = periodic_average(phi, &w);
            if !averages.iter().any(|b| dist(b, &a) < 1e-12) {
                averages.push(a);
                words.push(w);
            }
        }
        if words.is_empty() {
            return Err(Error::Validation("shift has no periodic orbits".into()));
        }
        Ok(BlockPool { words, averages })
    }

    pub fn dim(&self) -> usize {
        self.averages[0].len()
    }

    /// Distance from `w` to the hull of the pool averages.
    pub fn hull_distance(&self, w: &[f64]) -> Result<f64> {
        Ok(convex_hull(&self.averages)?.distance_to(w))
    }

    fn index_of(&self, v: &[f64]) -> usize {
        self.averages
            .iter()
            .position(|a| dist(a, v) < 1e-12)
            .expect("hull vertex comes from the pool")
    }

    /// Convex decomposition of `w`, or of its projection when it lies outside
    /// the hull by at most `slack`.
    pub fn mixture(&self, w: &[f64], slack: f64) -> Result<Mixture> {
        if w.len() != self.dim() {
            return invalid(format!("target has dimension {}, observable {}", w.len(), self.dim()));
        }
        let hull = convex_hull(&self.averages)?;
        let gap = hull.distance_to(w);
        if gap > slack {
            return invalid(format!("target {w:?} is {gap} away from the hull of periodic averages"));
        }
        let v = &hull.vertices;
        let (idx, weights, point) = match (self.dim(), v.len()) {
            (_, 1) => (vec![self.index_of(&v[0])], vec![1.0], v[0].clone()),
            (1, _) => {
                let (lo, hi) = (v[0][0], v[1][0]);
                let x = w[0].clamp(lo, hi);
                let l = (hi - x) / (hi - lo);
                (vec![self.index_of(&v[0]), self.index_of(&v[1])], vec![l, 1.0 - l], vec![x])
            }
            (2, 2) => {
                let (t, p) = project_segment(w, &v[0], &v[1]);
                (vec![self.index_of(&v[0]), self.index_of(&v[1])], vec![1.0 - t, t], p)
            }
            (2, n) => {
                if gap > 0.0 {
                    // Nearest boundary point.
                    let (i, t, p) = (0..n)
                        .map(|i| {
                            let (t, p) = project_segment(w, &v[i], &v[(i + 1) % n]);
                            (i, t, p)
                        })
                        .min_by(|a, b| dist(w, &a.2).total_cmp(&dist(w, &b.2)))
                        .expect("polygon has edges");
                    let j = (i + 1) % n;
                    (vec![self.index_of(&v[i]), self.index_of(&v[j])], vec![1.0 - t, t], p)
                } else {
                    fan_triangle(v, w)
                        .map(|(i, bary)| {
                            let ids = vec![self.index_of(&v[0]), self.index_of(&v[i]), self.index_of(&v[i + 1])];
                            (ids, bary.to_vec(), w.to_vec())
                        })
                        .ok_or_else(|| Error::Validation("point inside the hull but in no fan triangle".into()))?
                }
            }
            (d, _) => return Err(Error::Unsupported(format!("P-set witnesses are built for dimension <= 2, got {d}"))),
        };
        let mut words = Vec::new();
        let mut ws = Vec::new();
        for (i, l) in idx.into_iter().zip(weights) {
            if l > 0.0 {
                words.push(self.words[i].clone());
                ws.push(l);
            }
        }
        Ok(Mixture {
            words,
            weights: ws,
            point,
        })
    }
}

fn project_segment(p: &[f64], a: &[f64], b: &[f64]) -> (f64, Vec<f64>) {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let len2: f64 = ab.iter().map(|x| x * x).sum();
    let t = if len2 == 0.0 {
        0.0
    } else {
        (p.iter().zip(a).zip(&ab).map(|((p, a), v)| (p - a) * v).sum::<f64>() / len2).clamp(0.0, 1.0)
    };
    (t, a.iter().zip(&ab).map(|(x, v)| x + t * v).collect())
}

/// Triangle (v0, v_i, v_{i+1}) of the fan containing `p`, with barycentric weights.
fn fan_triangle(v: &[Vec<f64>], p: &[f64]) -> Option<(usize, [f64; 3])> {
    for i in 1..v.len() - 1 {
        let (a, b, c) = (&v[0], &v[i], &v[i + 1]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        if det.abs() < 1e-15 {
            continue;
        }
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        let l0 = 1.0 - l1 - l2;
        let tol = -1e-12;
        if l0 >= tol && l1 >= tol && l2 >= tol {
            return Some((i, [l0.max(0.0), l1.max(0.0), l2.max(0.0)]));
        }
    }
    None
}

/// Whole-copy counts c_j with Σ c_j |u_j| close to `len`, by largest remainder.
fn copy_counts(mix: &Mixture, len: usize) -> Vec<usize> {
    let raw: Vec<f64> = mix
        .words
        .iter()
        .zip(&mix.weights)
        .map(|(u, l)| l * len as f64 / u.len() as f64)
        .collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut used: usize = counts.iter().zip(&mix.words).map(|(c, u)| c * u.len()).sum();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for j in order {
        let u = mix.words[j].len();
        if used + u <= len {
            counts[j] += 1;
            used += u;
        }
    }
    counts
}

/// Cyclic word made of `counts[j]` copies of `words[j]`, interleaved as
/// evenly as possible (largest deficit first) and joined by the shortest
/// admissible bridges (empty on a full shift).
pub fn assemble(s: &ShiftSpace, words: &[Vec<u8>], counts: &[usize]) -> Result<Vec<u8>> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return invalid("witness needs at least one block");
    }
    let mut used = vec![0usize; counts.len()];
    let mut order = Vec::with_capacity(total);
    for step in 1..=total {
        let j = (0..counts.len())
            .filter(|&j| used[j] < counts[j])
            .max_by(|&a, &b| {
                let da = (counts[a] * step) as f64 / total as f64 - used[a] as f64;
                let db = (counts[b] * step) as f64 / total as f64 - used[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("copies remain");
        used[j] += 1;
        order.push(j);
    }
    let mut out: Vec<u8> = Vec::new();
    for (t, &j) in order.iter().enumerate() {
        let u = &words[j];
        out.extend_from_slice(u);
        let next = words[order[(t + 1) % total]][0];
        let last = *u.last().expect("nonempty word");
        let bridge = (1..=s.alphabet() + 1)
            .find_map(|steps| s.bridge(last, next, steps))
            .ok_or_else(|| Error::Validation("no bridge between periodic blocks".into()))?;
        out.extend_from_slice(&bridge);
    }
    if !s.cyclic_admissible(&out) {
        return Err(Error::Validation("assembled witness is not admissible".into()));
    }
    Ok(out)
}

/// (1/n) S_n φ at `x`.
pub fn word_average(phi: &Observable, x: &SymbolPoint, n: usize) -> Vec<f64> {
    let w = phi.window().unwrap_or(0);
    let buf = x.word(0, n + w);
    let mut acc: Vec<f64> = Vec::new();
    for j in 0..n {
        let v = phi.eval_word(&buf[j..j + w]);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += b;
        }
    }
    acc.into_iter().map(|a| a / n as f64).collect()
}

fn shift_of(sys: &System) -> Result<&ShiftSpace> {
    match sys {
        System::Shift(s) if matches!(s.metric(), ShiftMetric::Cylinder) => Ok(s),
        System::Shift(_) => Err(Error::Unsupported("P-set witnesses need the cylinder metric".into())),
        System::Lift(_) => Err(Error::Unsupported("P-set witnesses are constructed on shifts".into())),
    }
}

pub(crate) fn check_observable<'a>(sys: &'a System, phi: &Observable) -> Result<&'a ShiftSpace> {
    let s = shift_of(sys)?;
    phi.validate(sys)?;
    if phi.window().is_none() {
        return Err(Error::Unsupported("observable is not a window function".into()));
    }
    Ok(s)
}

/// Points x with ‖(1/n) S_n φ(x) - w‖ < δ.
///
/// The first witness is `u^∞` for an assembled word u of length close to n;
/// further ones are rotations of u. At most `budget` points are returned.
pub fn sample_p_set(sys: &System, phi: &Observable, w: &[f64], delta: f64, n: usize, budget: usize) -> Result<Vec<MetricPoint>> {
    let s = check_observable(sys, phi)?;
    if !(delta > 0.0) || n == 0 || budget == 0 {
        return invalid("need delta > 0, n >= 1 and a positive budget");
    }
    let pool = BlockPool::new(s, phi)?;
    let mix = pool.mixture(w, delta / 2.0)?;
    let u = assemble(s, &mix.words, &copy_counts(&mix, n))?;
    let mut out: Vec<MetricPoint> = Vec::new();
    for r in 0..u.len() {
        if out.len() >= budget {
            break;
        }
        let mut v = u.clone();
        v.rotate_left(r);
        let x = SymbolPoint::periodic(&v);
        if dist(&word_average(phi, &x, n), w) < delta && !out.iter().any(|p| p.as_symbol() == Some(&x)) {
            out.push(MetricPoint::Symbol(x));
        }
    }
    if out.is_empty() {
        return Err(Error::BudgetExhausted(format!(
            "no witness with average within {delta} of {w:?} at n = {n}; pick a larger n or delta"
        )));
    }
    Ok(out)
}

/// A cyclic witness word whose period average is within δ of `w`, with
/// length at least `min_len`. Lengths are tried upward for `tries` steps; the
/// shortest exact one wins, otherwise the shortest within δ.
pub(crate) fn periodic_witness(
    s: &ShiftSpace,
    phi: &Observable,
    pool: &BlockPool,
    w: &[f64],
    delta: f64,
    min_len: usize,
    tries: usize,
) -> Result<Vec<u8>> {
    let mix = pool.mixture(w, delta / 2.0)?;
    // Prefer the first length at which the mixture closes up exactly.
    let mut fallback = None;
    for len in min_len..min_len + tries {
        let u = assemble(s, &mix.words, &copy_counts(&mix, len))?;
        let err = dist(&periodic_average(phi, &u), w);
        if u.len() >= min_len && err <= EXACT_TOL {
            return Ok(u);
        }
        if u.len() >= min_len && err < delta && fallback.is_none() {
            fallback = Some(u);
        }
    }
    if let Some(u) = fallback {
        return Ok(u);
    }
    Err(Error::BudgetExhausted(format!(
        "no periodic witness for {w:?} within {delta} at lengths {min_len}..{}",
        min_len + tries
    )))
}
