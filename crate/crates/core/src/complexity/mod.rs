//! Separated sets, entropy, pressure, metric mean dimension, Katok spans and
//! relative pressure through Bowen-ball covers.

pub mod cover;
pub mod katok;
pub mod separated;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cover::{relative_pressure_upper, CoverTarget, CoverWeight};
pub use katok::{katok_entropy, KatokEstimate};
pub use separated::{cylinder_depth, max_separated, separation_length, validate_separated, SeparatedSet};

use crate::error::{invalid, Error, Result};
use crate::observables::Observable;
use crate::systems::{ShiftMetric, ShiftSpace, System};

/// Allowed slack when checking that h(ε) does not decrease as ε shrinks.
pub const DELTA_FIT: f64 = 0.02;
/// Default candidate budget for lattice pools and materialized sets.
pub const POOL_BUDGET: usize = 1 << 20;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureCell {
    pub eps: f64,
    pub n: usize,
    pub log_sum: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthFit {
    pub eps: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdimEstimate {
    pub slope: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub potential: Option<Observable>,
    pub table: Vec<PressureCell>,
    /// Sorted by decreasing ε.
    pub fits: Vec<GrowthFit>,
    /// Growth rate at the smallest ε.
    pub estimate: f64,
    pub mdim: Option<MdimEstimate>,
    /// False when the pool is a heuristic (torus lattices).
    pub exact: bool,
    pub unreliable: bool,
}

impl PressureEstimate {
    pub fn fit_for(&self, eps: f64) -> Option<f64> {
        self.fits.iter().find(|f| f.eps == eps).map(|f| f.rate)
    }
}

/// Least-squares slope of y against x.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Slope of log-sum against n over the upper half of the n grid.
pub fn growth_rate(ns: &[usize], ys: &[f64]) -> f64 {
    let start = ns.len() / 2;
    let x: Vec<f64> = ns[start..].iter().map(|&n| n as f64).collect();
    ls_slope(&x, &ys[start..])
}

/// ln Σ over admissible words u of length `len` of exp(sup over admissible
/// continuations of S_nψ(u…)). With ψ summed inside the word the sum is exact;
/// terms that reach past `len` are maximized over continuations.
pub fn word_log_sum(s: &ShiftSpace, psi: &Observable, n: usize, len: usize) -> Result<f64> {
    let Some(w) = psi.window() else {
        return invalid("pressure on shifts needs a window observable");
    };
    let w = w.max(1);
    let a = s.alphabet();
    let state_len = (w - 1).max(1);
    let total = len.max(n + w - 1);
    let n_states = (a as f64).powi(state_len as i32);
    if n_states > 1e6 || state_len > len {
        return brute_word_log_sum(s, psi, n, len, w);
    }
    let n_states = n_states as usize;
    let a_pow = a.pow(state_len as u32 - 1);
    let decode = |mut idx: usize| -> Vec<u8> {
        let mut v = vec![0u8; state_len];
        for slot in v.iter_mut().rev() {
            *slot = (idx % a) as u8;
            idx /= a;
        }
        v
    };
    // Window value when symbol c follows state: the last w symbols of state·c.
    let mut psi_tab = vec![f64::NAN; n_states * a];
    let mut next = vec![usize::MAX; n_states * a];
    for st in 0..n_states {
        let word = decode(st);
        let last = word[state_len - 1];
        for c in 0..a as u8 {
            if !s.allowed(last, c) {
                continue;
            }
            let mut full = word.clone();
            full.push(c);
            psi_tab[st * a + c as usize] = psi.eval_word_scalar(&full[full.len() - w..]);
            next[st * a + c as usize] = (st % a_pow) * a + c as usize;
        }
    }
    let term = |t: usize| -> bool {
        // Position t completes the window starting at j = t + 1 - w.
        t + 1 >= w && t + 1 - w < n
    };

    // Sum phase, linear space with a running log scale.
    let mut val = vec![0.0f64; n_states];
    for word in s.words(state_len, usize::MAX)? {
        let idx = word.iter().fold(0usize, |acc, &c| acc * a + c as usize);
        let mut acc = 0.0;
        for j in 0..n {
            if j + w <= state_len {
                acc += psi.eval_word_scalar(&word[j..j + w]);
            }
        }
        val[idx] = acc.exp();
    }
    let mut offset = 0.0f64;
    for t in state_len..len {
        let mut nv = vec![0.0f64; n_states];
        for st in 0..n_states {
            if val[st] == 0.0 {
                continue;
            }
            for c in 0..a {
                let k = st * a + c;
                if next[k] == usize::MAX {
                    continue;
                }
                let weight = if term(t) { psi_tab[k].exp() } else { 1.0 };
                nv[next[k]] += val[st] * weight;
            }
        }
        let m = nv.iter().copied().fold(0.0, f64::max);
        if m > 1e200 {
            nv.iter_mut().for_each(|v| *v /= m);
            offset += m.ln();
        }
        val = nv;
    }

    // Max phase, backwards over the continuation.
    let mut g = vec![0.0f64; n_states];
    for t in (len..total).rev() {
        let mut ng = vec![f64::NEG_INFINITY; n_states];
        for st in 0..n_states {
            for c in 0..a {
                let k = st * a + c;
                if next[k] == usize::MAX {
                    continue;
                }
                let add = if term(t) { psi_tab[k] } else { 0.0 };
                ng[st] = ng[st].max(add + g[next[k]]);
            }
        }
        g = ng;
    }
    let r = g
        .iter()
        .zip(&val)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = val
        .iter()
        .zip(&g)
        .filter(|(&v, _)| v > 0.0)
        .map(|(&v, &x)| v * (x - r).exp())
        .sum();
    Ok(sum.ln() + r + offset)
}

fn brute_word_log_sum(s: &ShiftSpace, psi: &Observable, n: usize, len: usize, w: usize) -> Result<f64> {
    let total = len.max(n + w - 1);
    let words = s.words(total, 1 << 22)?;
    let mut best: std::collections::BTreeMap<Vec<u8>, f64> = Default::default();
    for word in words {
        let sn: f64 = (0..n).map(|j| psi.eval_word_scalar(&word[j..j + w])).sum();
        let e = best.entry(word[..len].to_vec()).or_insert(f64::NEG_INFINITY);
        *e = e.max(sn);
    }
    Ok(separated::log_sum_exp(&best.into_values().collect::<Vec<_>>()))
}

/// ln Σ_{x∈E} exp S_nψ(x) for one (n, ε) cell.
pub fn cell_log_sum(sys: &System, psi: &Observable, n: usize, eps: f64) -> Result<f64> {
    match sys {
        System::Shift(s) => match s.metric() {
            ShiftMetric::Cylinder => match separation_length(n, eps) {
                // A single point: the best orbit segment.
                None => brute_word_log_sum(s, psi, n, 0, psi.window().unwrap_or(1).max(1)),
                Some(len) => word_log_sum(s, psi, n, len),
            },
            ShiftMetric::Values(v) => {
                if !is_zero(psi) {
                    return Err(Error::Unsupported(
                        "pressure with a nonzero potential on the value-metric shift".into(),
                    ));
                }
                Ok(separated::value_log_count(v, n, eps))
            }
        },
        System::Lift(f) => separated::torus_log_sum(f, psi, n, eps, POOL_BUDGET),
    }
}

fn is_zero(psi: &Observable) -> bool {
    matches!(psi, Observable::Constant { value } if value.iter().all(|&v| v == 0.0))
}

fn zero() -> Observable {
    Observable::Constant { value: vec![0.0] }
}

pub fn entropy_estimate(sys: &System, eps_grid: &[f64], n_grid: &[usize]) -> Result<PressureEstimate> {
    let mut est = pressure_estimate(sys, &zero(), eps_grid, n_grid)?;
    est.potential = None;
    Ok(est)
}

pub fn pressure_estimate(sys: &System, psi: &Observable, eps_grid: &[f64], n_grid: &[usize]) -> Result<PressureEstimate> {
    if eps_grid.len() < 4 || n_grid.len() < 4 {
        return invalid("entropy and pressure need at least 4 values in each grid");
    }
    if eps_grid.iter().any(|&e| !(e > 0.0)) || n_grid.contains(&0) {
        return invalid("grid values must be positive");
    }
    psi.validate(sys)?;
    if psi.dim(sys)? != 1 {
        return invalid("the potential must be scalar");
    }
    let mut eps: Vec<f64> = eps_grid.to_vec();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let mut ns = n_grid.to_vec();
    ns.sort_unstable();
    ns.dedup();

    let cells: Vec<(f64, usize)> = eps.iter().flat_map(|&e| ns.iter().map(move |&n| (e, n))).collect();
    let sums: Vec<Result<f64>> = cells.par_iter().map(|&(e, n)| cell_log_sum(sys, psi, n, e)).collect();
    let mut table = Vec::with_capacity(cells.len());
    for ((e, n), r) in cells.into_iter().zip(sums) {
        table.push(PressureCell { eps: e, n, log_sum: r? });
    }
    let fits: Vec<GrowthFit> = eps
        .iter()
        .map(|&e| {
            let ys: Vec<f64> = table.iter().filter(|c| c.eps == e).map(|c| c.log_sum).collect();
            GrowthFit {
                eps: e,
                rate: growth_rate(&ns, &ys),
            }
        })
        .collect();
    let unreliable = fits.windows(2).any(|p| p[1].rate < p[0].rate - DELTA_FIT);
    let estimate = fits.last().expect("nonempty grid").rate;
    let mdim = mdim_from_fits(&fits).ok();
    Ok(PressureEstimate {
        potential: Some(psi.clone()),
        table,
        fits,
        estimate,
        mdim,
        exact: matches!(sys, System::Shift(s) if matches!(s.metric(), ShiftMetric::Cylinder)),
        unreliable,
    })
}

/// Regression of h(ε) on -ln ε, plus min/max of the two finest consecutive slopes.
pub fn mdim_from_fits(fits: &[GrowthFit]) -> Result<MdimEstimate> {
    let pts: Vec<(f64, f64)> = fits
        .iter()
        .filter(|f| f.rate.is_finite())
        .map(|f| (-f.eps.ln(), f.rate))
        .collect();
    if pts.len() < 3 {
        return invalid("mdim needs at least 3 reliable h(eps) values");
    }
    let mut pts = pts;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let slope = ls_slope(&x, &y);
    let k = pts.len();
    let s1 = (y[k - 2] - y[k - 3]) / (x[k - 2] - x[k - 3]);
    let s2 = (y[k - 1] - y[k - 2]) / (x[k - 1] - x[k - 2]);
    Ok(MdimEstimate {
        slope,
        lower: s1.min(s2),
        upper: s1.max(s2),
    })
}

pub fn mdim_estimate(sys: &System, eps_grid: &[f64], n_grid: &[usize]) -> Result<MdimEstimate> {
    let mut scales: Vec<i64> = eps_grid.iter().map(|e| e.log2().floor() as i64).collect();
    scales.sort_unstable();
    scales.dedup();
    if scales.len() < 4 {
        return invalid("the epsilon grid must span at least 4 dyadic scales");
    }
    let est = entropy_estimate(sys, eps_grid, n_grid)?;
    mdim_from_fits(&est.fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::TorusLift;
    use approx::assert_abs_diff_eq;

    fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
        (lo..=hi).map(|k| 0.5f64.powi(k)).collect()
    }

    #[test]
    fn word_log_sum_against_enumeration() {
        let s = ShiftSpace::golden_mean();
        let psi = Observable::cylinder(&[0, 1]);
        for (n, len) in [(3, 3), (4, 6), (5, 4), (2, 1)] {
            let dp = word_log_sum(&s, &psi, n, len).unwrap();
            let bf = brute_word_log_sum(&s, &psi, n, len, 2).unwrap();
            assert_abs_diff_eq!(dp, bf, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_potential_gives_exact_log_counts() {
        let s = ShiftSpace::full(2).unwrap();
        let v = word_log_sum(&s, &zero(), 4, 6).unwrap();
        assert_eq!(v, 64f64.ln());
    }

    #[test]
    fn full_shift_entropy() {
        let sys = System::Shift(ShiftSpace::full(2).unwrap());
        let est = entropy_estimate(&sys, &dyadic(3, 6), &(6..=14).collect::<Vec<_>>()).unwrap();
        assert_abs_diff_eq!(est.estimate, 2f64.ln(), epsilon = 1e-9);
        assert!(!est.unreliable);
        let m = est.mdim.unwrap();
        assert!(m.slope.abs() < 1e-9 && m.lower <= m.upper);
    }

    #[test]
    fn rotation_has_zero_entropy() {
        let sys = System::Lift(TorusLift::translation(vec![0.3, (2f64).sqrt() - 1.0]).unwrap());
        let est = entropy_estimate(&sys, &dyadic(2, 5), &[2, 3, 4, 5]).unwrap();
        assert_eq!(est.estimate, 0.0);
    }
}
