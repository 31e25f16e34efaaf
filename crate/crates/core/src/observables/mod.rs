//! Observables, Birkhoff averages and their finite-horizon accumulation sets.

pub mod sampler;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sampler::Sampler;

use crate::error::{invalid, Error, Result};
use crate::seeding::stream_seed;
use crate::systems::{frac, torus_distance, MetricPoint, ShiftMetric, ShiftSpace, SymbolPoint, System, TorusLift};

/// One term c·cos(2π k·x) + s·sin(2π k·x) of a trigonometric polynomial on T^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Observable {
    /// φ_F(π z) = F(z) - z.
    Displacement,
    /// scale · 1[x_0 .. x_{|word|-1} = word].
    CylinderIndicator {
        word: Vec<u8>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// values[x_0].
    SymbolEmbedding { values: Vec<Vec<f64>> },
    /// Scalar trigonometric polynomial on T^d.
    TrigPoly {
        #[serde(default)]
        constant: f64,
        terms: Vec<TrigTerm>,
    },
    /// g(x) - g(σx) + v on a shift.
    CoboundaryPlusConstant { g: Box<Observable>, v: f64 },
    Constant { value: Vec<f64> },
}

fn one() -> f64 {
    1.0
}

impl Observable {
    pub fn cylinder(word: &[u8]) -> Self {
        Observable::CylinderIndicator {
            word: word.to_vec(),
            scale: 1.0,
        }
    }

    pub fn scaled_cylinder(word: &[u8], scale: f64) -> Self {
        Observable::CylinderIndicator {
            word: word.to_vec(),
            scale,
        }
    }

    /// Target dimension on the given system.
    pub fn dim(&self, sys: &System) -> Result<usize> {
        match (self, sys) {
            (Observable::Displacement, System::Lift(f)) => Ok(f.dim()),
            (Observable::Displacement, System::Shift(_)) => {
                Err(Error::DomainMismatch("displacement needs a torus lift".into()))
            }
            (Observable::CylinderIndicator { .. }, _) | (Observable::TrigPoly { .. }, _) => Ok(1),
            (Observable::SymbolEmbedding { values }, _) => values
                .first()
                .map(|v| v.len())
                .filter(|&d| d > 0)
                .ok_or_else(|| Error::InvalidParameter("empty symbol embedding".into())),
            (Observable::CoboundaryPlusConstant { g, .. }, s) => {
                if g.dim(s)? != 1 {
                    return invalid("coboundary part must be scalar");
                }
                Ok(1)
            }
            (Observable::Constant { value }, _) => Ok(value.len()),
        }
    }

    /// Number of leading symbols the value depends on, for shift observables.
    pub fn window(&self) -> Option<usize> {
        match self {
            Observable::CylinderIndicator { word, .. } => Some(word.len()),
            Observable::SymbolEmbedding { .. } => Some(1),
            Observable::CoboundaryPlusConstant { g, .. } => g.window().map(|w| w + 1),
            Observable::Constant { .. } => Some(0),
            Observable::Displacement | Observable::TrigPoly { .. } => None,
        }
    }

    /// Check that the observable makes sense on the system.
    pub fn validate(&self, sys: &System) -> Result<()> {
        self.dim(sys)?;
        match (self, sys) {
            (Observable::TrigPoly { terms, .. }, System::Lift(f)) => {
                if terms.iter().any(|t| t.k.len() != f.dim()) {
                    return invalid("trig term frequency has the wrong dimension");
                }
                Ok(())
            }
            (Observable::TrigPoly { .. }, System::Shift(_)) => {
                Err(Error::DomainMismatch("trig polynomial needs a torus".into()))
            }
            (Observable::SymbolEmbedding { values }, System::Shift(s)) => {
                let d = values[0].len();
                if values.len() != s.alphabet() || values.iter().any(|v| v.len() != d) {
                    return invalid("embedding needs one vector of equal length per symbol");
                }
                Ok(())
            }
            (Observable::CylinderIndicator { word, .. }, System::Shift(s)) => {
                if word.is_empty() || word.iter().any(|&c| c as usize >= s.alphabet()) {
                    return invalid("cylinder word is empty or uses unknown symbols");
                }
                Ok(())
            }
            (Observable::CoboundaryPlusConstant { g, .. }, System::Shift(_)) => g.validate(sys),
            (Observable::Constant { value }, _) if value.is_empty() => invalid("empty constant"),
            (Observable::Constant { .. }, _) | (Observable::Displacement, System::Lift(_)) => Ok(()),
            _ => Err(Error::DomainMismatch(
                "observable kind does not fit this system".into(),
            )),
        }
    }

    /// Value on a point given by its leading symbols (`w.len() >= window`).
    pub fn eval_word(&self, w: &[u8]) -> Vec<f64> {
        match self {
            Observable::CylinderIndicator { word, scale } => {
                vec![if w.starts_with(word) { *scale } else { 0.0 }]
            }
            Observable::SymbolEmbedding { values } => values[w[0] as usize].clone(),
            Observable::CoboundaryPlusConstant { g, v } => {
                vec![g.eval_word(w)[0] - g.eval_word(&w[1..])[0] + v]
            }
            Observable::Constant { value } => value.clone(),
            Observable::Displacement | Observable::TrigPoly { .. } => {
                panic!("eval_word on a torus observable")
            }
        }
    }

    pub fn eval_word_scalar(&self, w: &[u8]) -> f64 {
        self.eval_word(w)[0]
    }

    pub fn eval_symbol(&self, x: &SymbolPoint) -> Vec<f64> {
        let w = x.word(0, self.window().unwrap_or(0));
        self.eval_word(&w)
    }

    /// Value at a lifted or torus point.
    pub fn eval_torus(&self, f: &TorusLift, z: &[f64]) -> Vec<f64> {
        match self {
            Observable::Displacement => f.displacement(z),
            Observable::TrigPoly { constant, terms } => {
                let mut s = *constant;
                for t in terms {
                    let phase: f64 = t.k.iter().zip(z).map(|(&k, &x)| k as f64 * frac(x)).sum();
                    let a = 2.0 * PI * frac(phase);
                    s += t.cos * a.cos() + t.sin * a.sin();
                }
                vec![s]
            }
            Observable::Constant { value } => value.clone(),
            _ => panic!("eval_torus on a shift observable"),
        }
    }

    pub fn eval(&self, sys: &System, x: &MetricPoint) -> Result<Vec<f64>> {
        match (sys, x) {
            (System::Lift(f), MetricPoint::Torus(z) | MetricPoint::Lift(z)) => {
                self.validate(sys)?;
                Ok(self.eval_torus(f, z))
            }
            (System::Shift(_), MetricPoint::Symbol(p)) => {
                self.validate(sys)?;
                Ok(self.eval_symbol(p))
            }
            _ => Err(Error::DomainMismatch("point variant does not match the system".into())),
        }
    }

    /// Upper bound for sup ‖φ‖ (Euclidean).
    pub fn sup_norm(&self, sys: &System) -> Result<f64> {
        self.validate(sys)?;
        match (self, sys) {
            (Observable::Displacement, System::Lift(f)) => {
                // Grid maximum plus a Lipschitz margin for the cells in between.
                let grid = if f.dim() == 1 { 4096 } else { 64 };
                let mut best = 0.0f64;
                crate::systems::torus::for_grid(f.dim(), grid, |z| {
                    best = best.max(norm(&f.displacement(z)));
                });
                let h = (f.dim() as f64).sqrt() / grid as f64;
                Ok(best + (f.lipschitz() + 1.0) * h)
            }
            (Observable::TrigPoly { constant, terms }, _) => {
                Ok(constant.abs() + terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum::<f64>())
            }
            (Observable::Constant { value }, _) => Ok(norm(value)),
            (_, System::Shift(s)) => {
                let w = self.window().unwrap_or(0).max(1);
                let words = s.words(w, 1 << 20)?;
                Ok(words.iter().map(|u| norm(&self.eval_word(u))).fold(0.0, f64::max))
            }
            _ => unreachable!("validated"),
        }
    }
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Stream φ(f^j x) for j < n into `visit`.
pub fn for_each_value(
    sys: &System,
    obs: &Observable,
    x: &MetricPoint,
    n: usize,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    obs.validate(sys)?;
    match (sys, x) {
        (System::Lift(f), MetricPoint::Torus(z) | MetricPoint::Lift(z)) => {
            if z.len() != f.dim() {
                return Err(Error::DomainMismatch("point dimension differs".into()));
            }
            let mut p = crate::systems::project(z);
            for j in 0..n {
                visit(j, &obs.eval_torus(f, &p));
                p = f.step_torus(&p);
            }
            Ok(())
        }
        (System::Shift(s), MetricPoint::Symbol(pt)) => {
            if !s.is_admissible(pt) {
                return Err(Error::DomainMismatch("inadmissible symbol point".into()));
            }
            let w = obs.window().unwrap_or(0);
            let mut buf = vec![0u8; w];
            for j in 0..n {
                for (i, b) in buf.iter_mut().enumerate() {
                    *b = pt.at(j + i);
                }
                visit(j, &obs.eval_word(&buf));
            }
            Ok(())
        }
        _ => Err(Error::DomainMismatch("point variant does not match the system".into())),
    }
}

/// S_n φ(x) = Σ_{j<n} φ(f^j x).
pub fn birkhoff_sum(sys: &System, obs: &Observable, x: &MetricPoint, n: usize) -> Result<Vec<f64>> {
    let d = obs.dim(sys)?;
    if let (System::Shift(_), MetricPoint::Symbol(pt)) = (sys, x) {
        return symbolic_sum(sys, obs, pt, n, d);
    }
    let mut acc = vec![0.0; d];
    for_each_value(sys, obs, x, n, |_, v| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
    })?;
    Ok(acc)
}

// Eventually periodic points: sum the preperiod, then whole tail cycles at once.
fn symbolic_sum(sys: &System, obs: &Observable, pt: &SymbolPoint, n: usize, d: usize) -> Result<Vec<f64>> {
    let pre = pt.prefix().len();
    let per = pt.tail_period();
    let direct = n.min(pre + per);
    let mut acc = vec![0.0; d];
    let mut cycle = vec![0.0; d];
    for_each_value(sys, obs, &MetricPoint::Symbol(pt.clone()), direct, |j, v| {
        for i in 0..d {
            acc[i] += v[i];
            if j >= pre {
                cycle[i] += v[i];
            }
        }
    })?;
    if n > direct {
        let rest = n - direct;
        let (q, r) = (rest / per, rest % per);
        let start = MetricPoint::Symbol(pt.shift_by(pre));
        let mut part = vec![0.0; d];
        for_each_value(sys, obs, &start, r, |_, v| {
            for i in 0..d {
                part[i] += v[i];
            }
        })?;
        for i in 0..d {
            acc[i] += q as f64 * cycle[i] + part[i];
        }
    }
    Ok(acc)
}

pub fn birkhoff_average(sys: &System, obs: &Observable, x: &MetricPoint, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return invalid("birkhoff average needs n >= 1");
    }
    let s = birkhoff_sum(sys, obs, x, n)?;
    Ok(s.into_iter().map(|v| v / n as f64).collect())
}

/// n_j = ⌈κ λ^j⌉, deduplicated, up to `horizon`.
pub fn geometric_checkpoints(kappa: f64, lambda: f64, horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut t = kappa;
    while t.ceil() as usize <= horizon {
        let c = t.ceil() as usize;
        if out.last() != Some(&c) && c >= 1 {
            out.push(c);
        }
        t *= lambda;
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AccumulationSet {
    pub times: Vec<usize>,
    pub averages: Vec<Vec<f64>>,
    /// Indices into `averages`, one list per single-linkage cluster.
    pub clusters: Vec<Vec<usize>>,
    pub diameter: f64,
}

impl AccumulationSet {
    pub fn is_trivial(&self, eta: f64) -> bool {
        self.diameter <= eta
    }

    pub fn from_averages(times: Vec<usize>, averages: Vec<Vec<f64>>, r_cluster: f64) -> Self {
        let clusters = single_linkage(&averages, r_cluster);
        let mut diameter = 0.0f64;
        for i in 0..averages.len() {
            for j in i + 1..averages.len() {
                diameter = diameter.max(dist(&averages[i], &averages[j]));
            }
        }
        AccumulationSet {
            times,
            averages,
            clusters,
            diameter,
        }
    }
}

pub const R_CLUSTER: f64 = 0.01;
pub const MIN_CHECKPOINTS: usize = 16;

pub fn accumulation_set(
    sys: &System,
    obs: &Observable,
    x: &MetricPoint,
    horizon: usize,
    checkpoints: &[usize],
) -> Result<AccumulationSet> {
    if checkpoints.len() < MIN_CHECKPOINTS {
        return invalid(format!("need at least {MIN_CHECKPOINTS} checkpoints"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) || checkpoints[0] == 0 {
        return invalid("checkpoints must be positive and strictly increasing");
    }
    let last = *checkpoints.last().unwrap();
    if horizon < last {
        return invalid(format!("horizon {horizon} is below the last checkpoint {last}"));
    }
    let d = obs.dim(sys)?;
    let mut acc = vec![0.0; d];
    let mut averages = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for_each_value(sys, obs, x, last, |j, v| {
        for (a, b) in acc.iter_mut().zip(v) {
            *a += b;
        }
        if j + 1 == checkpoints[next] {
            averages.push(acc.iter().map(|a| a / (j + 1) as f64).collect());
            next += 1;
        }
    })?;
    Ok(AccumulationSet::from_averages(checkpoints.to_vec(), averages, R_CLUSTER))
}

fn single_linkage(points: &[Vec<f64>], r: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut label = vec![usize::MAX; n];
    let mut clusters = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let c = clusters.len();
        let mut members = vec![s];
        label[s] = c;
        let mut k = 0;
        while k < members.len() {
            let i = members[k];
            for j in 0..n {
                if label[j] == usize::MAX && dist(&points[i], &points[j]) <= r {
                    label[j] = c;
                    members.push(j);
                }
            }
            k += 1;
        }
        members.sort_unstable();
        clusters.push(members);
    }
    clusters
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModulusEstimate {
    pub eps: Vec<f64>,
    /// Empirical var(φ, ε); `None` when no sampled pair was within ε.
    pub var: Vec<Option<f64>>,
}

/// Empirical sup of ‖φ(x) - φ(y)‖ over sampled pairs with d(x, y) < ε.
///
/// Pairs drawn for a smaller ε also count for every larger ε, which keeps the
/// estimate monotone in ε.
pub fn modulus_of_continuity(
    sys: &System,
    obs: &Observable,
    eps_grid: &[f64],
    pair_samples: usize,
    seed: u64,
) -> Result<ModulusEstimate> {
    obs.validate(sys)?;
    if eps_grid.is_empty() || eps_grid.windows(2).any(|w| w[0] <= w[1]) {
        return invalid("epsilon grid must be nonempty and strictly decreasing");
    }
    if pair_samples < 10_000 {
        return invalid("modulus estimation needs at least 1e4 pairs");
    }
    let raw: Vec<Option<f64>> = eps_grid
        .par_iter()
        .enumerate()
        .map(|(i, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, i as u64));
            let mut best: Option<f64> = None;
            for _ in 0..pair_samples {
                let Some((x, y)) = close_pair(sys, eps, &mut rng) else {
                    continue;
                };
                if sys.distance(&x, &y).ok()? >= eps {
                    continue;
                }
                let a = obs.eval(sys, &x).ok()?;
                let b = obs.eval(sys, &y).ok()?;
                let d = dist(&a, &b);
                best = Some(best.map_or(d, |m: f64| m.max(d)));
            }
            best
        })
        .collect();
    let mut var = raw.clone();
    for i in (0..var.len().saturating_sub(1)).rev() {
        if let Some(smaller) = var[i + 1] {
            var[i] = Some(var[i].map_or(smaller, |v| v.max(smaller)));
        }
    }
    Ok(ModulusEstimate {
        eps: eps_grid.to_vec(),
        var,
    })
}

fn close_pair<R: Rng>(sys: &System, eps: f64, rng: &mut R) -> Option<(MetricPoint, MetricPoint)> {
    match sys {
        System::Lift(f) => {
            let d = f.dim();
            let x: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            // Radii concentrate near ε, where the sup is attained for regular observables.
            let r = eps * rng.random::<f64>().powf(0.125);
            let mut dir: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let nrm = norm(&dir).max(1e-300);
            dir.iter_mut().for_each(|v| *v *= r / nrm);
            let y: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| frac(a + b)).collect();
            if torus_distance(&x, &y) >= eps {
                return None;
            }
            Some((MetricPoint::Torus(x), MetricPoint::Torus(y)))
        }
        System::Shift(s) => {
            let (x, y) = close_symbol_pair(s, eps, rng);
            Some((MetricPoint::Symbol(x), MetricPoint::Symbol(y)))
        }
    }
}

fn close_symbol_pair<R: Rng>(s: &ShiftSpace, eps: f64, rng: &mut R) -> (SymbolPoint, SymbolPoint) {
    // 2^-k < ε needs agreement on the first K = ⌊log2(1/ε)⌋ + 1 symbols.
    let agree = match s.metric() {
        ShiftMetric::Cylinder => (1.0 / eps).log2().floor().max(-1.0) as i64 + 1,
        ShiftMetric::Values(_) => 0,
    }
    .max(0) as usize;
    let len = agree + 8;
    let wx = s.random_word(rng, len);
    let mut wy = wx[..agree].to_vec();
    s.random_continue(rng, &mut wy, len);
    (s.extend(&wx), s.extend(&wy))
}

/// Exact var(φ, ε) for a window observable on a cylinder-metric shift.
pub fn exact_variation(s: &ShiftSpace, obs: &Observable, eps: f64) -> Result<f64> {
    if !matches!(s.metric(), ShiftMetric::Cylinder) {
        return Err(Error::Unsupported("exact variation needs the cylinder metric".into()));
    }
    let w = obs
        .window()
        .ok_or_else(|| Error::Unsupported("observable is not a window function".into()))?;
    let agree = ((1.0 / eps).log2().floor().max(-1.0) as i64 + 1).max(0) as usize;
    if agree >= w {
        return Ok(0.0);
    }
    let words = s.words(w, 1 << 16)?;
    let mut best = 0.0f64;
    for a in &words {
        for b in &words {
            if a[..agree] == b[..agree] {
                best = best.max(dist(&obs.eval_word(a), &obs.eval_word(b)));
            }
        }
    }
    Ok(best)
}

pub const TAU_COH: f64 = 1e-6;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CohomologyVerdict {
    ConstantAverages {
        value: Vec<f64>,
        orbits_checked: usize,
    },
    DistinctWitnesses {
        p1: SymbolPoint,
        p2: SymbolPoint,
        avg1: Vec<f64>,
        avg2: Vec<f64>,
    },
}

/// Average of a window observable over the periodic orbit of `word^∞`.
pub fn periodic_average(obs: &Observable, word: &[u8]) -> Vec<f64> {
    let p = word.len();
    let w = obs.window().unwrap_or(0);
    let mut buf = vec![0u8; w];
    let mut acc: Vec<f64> = Vec::new();
    for j in 0..p {
        for (i, b) in buf.iter_mut().enumerate() {
            *b = word[(j + i) % p];
        }
        let v = obs.eval_word(&buf);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, b) in acc.iter_mut().zip(&v) {
            *a += b;
        }
    }
    acc.into_iter().map(|a| a / p as f64).collect()
}

/// Look for two periodic orbits with different φ-averages.
pub fn cohomology_test(sys: &System, obs: &Observable, witness_budget: usize, tau: f64) -> Result<CohomologyVerdict> {
    obs.validate(sys)?;
    let System::Shift(s) = sys else {
        return Err(Error::Unsupported(
            "periodic enumeration is available on shifts".into(),
        ));
    };
    let orbits = s.periodic_orbits(witness_budget, 1 << 20)?;
    if orbits.is_empty() {
        return Err(Error::BudgetExhausted("no periodic orbit within the budget".into()));
    }
    let avgs: Vec<Vec<f64>> = orbits.iter().map(|w| periodic_average(obs, w)).collect();
    let (mut bi, mut bj, mut bd) = (0, 0, 0.0f64);
    for i in 0..avgs.len() {
        for j in i + 1..avgs.len() {
            let d = dist(&avgs[i], &avgs[j]);
            if d > bd {
                (bi, bj, bd) = (i, j, d);
            }
        }
    }
    if bd > tau {
        Ok(CohomologyVerdict::DistinctWitnesses {
            p1: SymbolPoint::periodic(&orbits[bi]),
            p2: SymbolPoint::periodic(&orbits[bj]),
            avg1: avgs[bi].clone(),
            avg2: avgs[bj].clone(),
        })
    } else {
        Ok(CohomologyVerdict::ConstantAverages {
            value: avgs[0].clone(),
            orbits_checked: avgs.len(),
        })
    }
}
