//! Upper bounds for relative pressure from finite covers by Bowen balls.
//!
//! On a cylinder-metric shift the open ball B_n(x, ε) is the cylinder of x of
//! length n + m with m = ⌈log2 1/ε⌉, so covers are sets of cylinders and the
//! cheapest mixed-depth cover of a finite family is a dynamic program on its
//! prefix trie.

use serde::{Deserialize, Serialize};

use super::{cylinder_depth, word_log_sum};
use crate::error::{invalid, Error, Result};
use crate::observables::{exact_variation, Observable};
use crate::systems::{MetricPoint, ShiftMetric, ShiftSpace, SymbolPoint, System};

/// Bracket width above which an upper/lower pair is reported inconclusive.
pub const BRACKET_WIDTH: f64 = 0.2;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverTarget {
    /// Finite family of representatives.
    Points { points: Vec<SymbolPoint> },
    /// The whole shift, covered by all cylinders of a fixed depth.
    WholeShift,
    /// Precomputed (n, ln Σ exp sup S_nψ) over a cover by depth-n balls.
    DepthTable { rows: Vec<(usize, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverWeight {
    pub eps: f64,
    pub n_min: usize,
    pub max_depth: usize,
    /// Critical s: log M changes sign inside `bracket`.
    pub s_star: f64,
    pub bracket: (f64, f64),
    /// Balls (center index, depth n) of the optimal cover at s_star; `Points` targets only.
    pub cover: Vec<(usize, usize)>,
    pub lower: Option<f64>,
    pub inconclusive: bool,
}

impl CoverWeight {
    /// Attach a lower bound and flag wide brackets.
    pub fn with_lower(mut self, lower: f64) -> Self {
        self.lower = Some(lower);
        self.inconclusive = self.s_star - lower > BRACKET_WIDTH;
        self
    }
}

struct PointData {
    /// Word of length max_depth + m.
    word: Vec<u8>,
    /// prefix[n] = S_nψ of the point.
    prefix: Vec<f64>,
}

/// log M(Z, ψ, s, ε, N) restricted to covers with depths in [n_min, max_depth].
fn log_m_points(data: &[PointData], idx: &mut [usize], m: usize, n_min: usize, max_depth: usize, pad: f64, s: f64, cover: Option<&mut Vec<(usize, usize)>>) -> f64 {
    fn rec(
        data: &[PointData],
        idx: &mut [usize],
        depth: usize,
        m: usize,
        n_min: usize,
        max_depth: usize,
        pad: f64,
        s: f64,
        mut cover: Option<&mut Vec<(usize, usize)>>,
    ) -> f64 {
        // Node = cylinder of length `depth`; ball depth n = depth - m.
        let ball = if depth >= m + n_min {
            let n = depth - m;
            let best = idx
                .iter()
                .map(|&i| (data[i].prefix[n], i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .expect("nonempty node");
            Some((-s * n as f64 + best.0 + n as f64 * pad, best.1, n))
        } else {
            None
        };
        if depth == max_depth + m {
            let (v, i, n) = ball.expect("leaf depth is a valid ball depth");
            if let Some(c) = cover {
                c.push((i, n));
            }
            return v;
        }
        idx.sort_by_key(|&i| data[i].word[depth]);
        let mut children: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        for k in 1..=idx.len() {
            if k == idx.len() || data[idx[k]].word[depth] != data[idx[start]].word[depth] {
                children.push((start, k));
                start = k;
            }
        }
        let mut child_logs = Vec::with_capacity(children.len());
        let mut child_cover = Vec::new();
        for &(a, b) in &children {
            let c = if cover.is_some() { Some(&mut child_cover) } else { None };
            child_logs.push(rec(data, &mut idx[a..b], depth + 1, m, n_min, max_depth, pad, s, c));
        }
        let split = super::separated::log_sum_exp(&child_logs);
        match ball {
            Some((v, i, n)) if v <= split => {
                if let Some(c) = cover.as_deref_mut() {
                    c.push((i, n));
                }
                v
            }
            _ => {
                if let Some(c) = cover {
                    c.extend(child_cover);
                }
                split
            }
        }
    }
    rec(data, idx, 0, m, n_min, max_depth, pad, s, cover)
}

/// Bisection for the sign change of a nonincreasing function.
fn critical_s<F: Fn(f64) -> f64>(f: F, scale: f64) -> (f64, f64) {
    let mut lo = -scale;
    let mut hi = scale;
    for _ in 0..60 {
        if f(lo) > 0.0 {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..60 {
        if f(hi) <= 0.0 {
            break;
        }
        hi *= 2.0;
    }
    for _ in 0..100 {
        if hi - lo < 1e-10 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Upper bound for P_Z(f, ψ, ε) with covers of depth between `n_min` and `max_depth`.
pub fn relative_pressure_upper(
    sys: &System,
    z: &CoverTarget,
    psi: Option<&Observable>,
    eps: f64,
    n_min: usize,
    max_depth: usize,
) -> Result<CoverWeight> {
    let System::Shift(s) = sys else {
        return Err(Error::Unsupported("relative pressure covers are implemented for shifts".into()));
    };
    if !matches!(s.metric(), ShiftMetric::Cylinder) {
        return Err(Error::Unsupported("relative pressure needs the cylinder metric".into()));
    }
    if n_min == 0 || max_depth < n_min || !(eps > 0.0) {
        return invalid("need 1 <= n_min <= max_depth and positive epsilon");
    }
    let zero = Observable::Constant { value: vec![0.0] };
    let psi = psi.unwrap_or(&zero);
    psi.validate(sys)?;
    let Some(w) = psi.window() else {
        return invalid("relative pressure needs a window potential");
    };
    let w = w.max(1);
    let m = if eps >= 1.0 { 0 } else { cylinder_depth(eps) };
    let sup = psi.sup_norm(sys)?;
    let scale = 1.0 + sup + (s.alphabet() as f64).ln();

    let mut out = CoverWeight {
        eps,
        n_min,
        max_depth,
        s_star: 0.0,
        bracket: (0.0, 0.0),
        cover: Vec::new(),
        lower: None,
        inconclusive: false,
    };
    match z {
        CoverTarget::Points { points } => {
            if points.is_empty() {
                return invalid("the point family is empty");
            }
            if let Some(p) = points.iter().find(|p| !s.is_admissible(p)) {
                return invalid(format!("{p} is not admissible"));
            }
            let pad = exact_variation(s, psi, eps)?;
            let data: Vec<PointData> = points
                .iter()
                .map(|p| {
                    let word = p.word(0, (max_depth + m).max(max_depth + w - 1));
                    let mut prefix = vec![0.0; max_depth + 1];
                    for j in 0..max_depth {
                        prefix[j + 1] = prefix[j] + psi.eval_word_scalar(&word[j..j + w]);
                    }
                    PointData { word, prefix }
                })
                .collect();
            let f = |sv: f64| {
                let mut idx: Vec<usize> = (0..data.len()).collect();
                log_m_points(&data, &mut idx, m, n_min, max_depth, pad, sv, None)
            };
            let (lo, hi) = critical_s(f, scale);
            let mut cover = Vec::new();
            let mut idx: Vec<usize> = (0..data.len()).collect();
            log_m_points(&data, &mut idx, m, n_min, max_depth, pad, hi, Some(&mut cover));
            check_cover(sys, points, &cover, eps)?;
            out.s_star = hi;
            out.bracket = (lo, hi);
            out.cover = cover;
        }
        CoverTarget::WholeShift => {
            // Exact sup of S_nψ over each cylinder, so no padding is needed.
            let rows: Result<Vec<(usize, f64)>> = (n_min..=max_depth)
                .map(|n| word_log_sum(s, psi, n, n + m).map(|v| (n, v)))
                .collect();
            let rows = rows?;
            let (lo, hi) = critical_s(|sv| table_log_m(&rows, sv), scale);
            out.s_star = hi;
            out.bracket = (lo, hi);
        }
        CoverTarget::DepthTable { rows } => {
            let rows: Vec<(usize, f64)> = rows.iter().copied().filter(|r| r.0 >= n_min && r.0 <= max_depth).collect();
            if rows.is_empty() {
                return invalid("no depth table rows inside [n_min, max_depth]");
            }
            let (lo, hi) = critical_s(|sv| table_log_m(&rows, sv), scale.max(rows.iter().map(|r| r.1 / r.0 as f64).fold(0.0, f64::max) + 1.0));
            out.s_star = hi;
            out.bracket = (lo, hi);
        }
    }
    Ok(out)
}

fn table_log_m(rows: &[(usize, f64)], s: f64) -> f64 {
    rows.iter().map(|&(n, lw)| lw - s * n as f64).fold(f64::INFINITY, f64::min)
}

fn check_cover(sys: &System, points: &[SymbolPoint], cover: &[(usize, usize)], eps: f64) -> Result<()> {
    for p in points {
        let x = MetricPoint::Symbol(p.clone());
        let mut inside = false;
        for &(i, n) in cover {
            if sys.bowen_distance(&MetricPoint::Symbol(points[i].clone()), &x, n)? < eps {
                inside = true;
                break;
            }
        }
        if !inside {
            return Err(Error::Validation(format!("cover misses {p}")));
        }
    }
    Ok(())
}

/// Convenience for the whole shift.
pub fn whole_shift_pressure(s: &ShiftSpace, psi: Option<&Observable>, eps: f64, n_min: usize, max_depth: usize) -> Result<CoverWeight> {
    relative_pressure_upper(&System::Shift(s.clone()), &CoverTarget::WholeShift, psi, eps, n_min, max_depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_orbit_has_zero_pressure() {
        let sys = System::Shift(ShiftSpace::full(2).unwrap());
        let orbit: Vec<SymbolPoint> = (0..3).map(|k| SymbolPoint::periodic(&[0, 0, 1]).shift_by(k)).collect();
        let c = relative_pressure_upper(&sys, &CoverTarget::Points { points: orbit }, None, 0.125, 16, 256).unwrap();
        // Three balls per depth: s* = ln 3 / 256.
        assert!((c.s_star - 3f64.ln() / 256.0).abs() < 1e-8, "{}", c.s_star);
        assert_eq!(c.cover.len(), 3);
    }

    #[test]
    fn whole_shift_matches_log_two() {
        let s = ShiftSpace::full(2).unwrap();
        let c = whole_shift_pressure(&s, None, 0.125, 32, 256).unwrap();
        let oracle = 2f64.ln() * (256.0 + 3.0) / 256.0;
        assert!((c.s_star - oracle).abs() < 1e-8);
        assert!(c.bracket.1 - c.bracket.0 < 1e-9);
    }

    #[test]
    fn distinct_points_cost_one_ball_each() {
        let sys = System::Shift(ShiftSpace::full(2).unwrap());
        let pts = vec![
            SymbolPoint::periodic(&[0]),
            SymbolPoint::periodic(&[1]),
            SymbolPoint::periodic(&[0, 1]),
        ];
        let c = relative_pressure_upper(&sys, &CoverTarget::Points { points: pts }, None, 0.5, 2, 20).unwrap();
        // With ψ = 0 the deepest balls are cheapest.
        assert!((c.s_star - 3f64.ln() / 20.0).abs() < 1e-8);
        assert!(!c.clone().with_lower(0.0).inconclusive);
        assert!(c.with_lower(-1.0).inconclusive);
    }
}
