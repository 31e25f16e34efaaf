//! A finite-depth fractal family on a full shift with a counting certificate.
//!
//! Level k concatenates N_k units: μ₁-typical words (S_k¹) when k is odd,
//! mixed words (S_k², r_k typical words followed by s_k copies of a
//! ν-typical word x̃_k) when k is even. T_k is T_{k-1} followed by the
//! level-k block C_k. All gluing happens at scale ε on anchors `u 0^∞`, so a
//! gap in front of a word depends only on its run of leading zeros; fixing
//! that run (the pigeonhole class) fixes every gap vector. Counts are exact
//! sums over symbol-count vectors.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::complexity::pressure_estimate;
use crate::error::{invalid, Error, Result};
use crate::gluing::symbolic::{m_eps, place_in};
use crate::observables::{dist, exact_variation, norm, Observable, Sampler};
use crate::seeding::stream_seed;
use crate::systems::{ShiftMetric, ShiftSpace, SymbolPoint, System};

use super::wild::sums_at;

pub const MAX_FRACTAL_DEPTH: usize = 3;
/// Typicality radius at level 1; halved at every level.
pub const ZETA0: f64 = 1.0 / 16.0;
/// Smallest S¹ word length.
pub const MIN_WORD_LEN: usize = 16;
pub const MAX_WORD_LEN: usize = 20_000;
pub const MAX_FAMILY_LEN: usize = 10_000_000;
/// C_k is at least this many times k times longer than T_{k-1}.
pub const BLOCK_DOMINANCE: f64 = 8.0;
/// Random pairs per level for the T_k separation re-check.
pub const SEPARATION_PAIRS: usize = 1000;
const MAX_MIX_DENOM: usize = 100;
const REJECTION_TRIES: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalParams {
    pub eps: f64,
    pub gamma: f64,
    pub t: f64,
    pub depth: usize,
    /// Defaults to the Bernoulli equilibrium state of ψ.
    pub mu1: Option<Sampler>,
    pub nu: Sampler,
    pub seed: u64,
    pub representatives: usize,
}

impl FractalParams {
    pub fn new(eps: f64) -> Self {
        FractalParams {
            eps,
            gamma: 0.01,
            t: 0.9,
            depth: 2,
            mu1: None,
            nu: Sampler::Dirac {
                point: SymbolPoint::constant(0),
            },
            seed: 0,
            representatives: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalLevel {
    pub k: usize,
    pub zeta: f64,
    /// n_k¹.
    pub n1: usize,
    /// μ₁(Y_{k,1}), the mass of the typical set.
    pub typical_mass: f64,
    /// Leading-zero class chosen by the pigeonhole step (capped at m - 1).
    pub class: usize,
    /// Gap in front of every S¹ word.
    pub gap: usize,
    /// ln Σ_{S_k¹} exp S_{n¹}ψ.
    pub log_m1: f64,
    /// ln |S_k¹|.
    pub log_card1: f64,
    pub x_tilde: Vec<u8>,
    pub r: usize,
    pub s: usize,
    /// Gaps inside an S² element, in order.
    pub gap_vector: Vec<usize>,
    pub n2: usize,
    pub log_m2: f64,
    /// 1 or 2: which family C_k is built from.
    pub chi: usize,
    /// N_k.
    pub repeats: usize,
    /// c_k.
    pub c_len: usize,
    /// t_k.
    pub t_len: usize,
    /// Gap symbols inside C_k plus the join to T_{k-1}.
    pub gap_symbols: usize,
    /// ln Z_k = ln Σ_{T_k} exp S_{t_k}ψ.
    pub log_z: f64,
    /// (cardsk) for the unit of C_k: M ≥ exp(n [t P - var - 6γ]).
    pub weight_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalSchedule {
    pub eps: f64,
    pub gamma: f64,
    pub t: f64,
    pub mu1: Sampler,
    pub nu: Sampler,
    pub psi: Observable,
    /// Cylinder depth m_ε.
    pub m: usize,
    /// P_top(f, ψ, ε) from this run's pressure estimate.
    pub p_top: f64,
    pub var_psi: f64,
    /// ψ on each symbol.
    pub psi_values: Vec<f64>,
    pub levels: Vec<FractalLevel>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLog {
    pub k: usize,
    pub chi: usize,
    /// Start of C_k (after the join gap).
    pub start: usize,
    /// t_k.
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representative {
    /// The first t_depth symbols; the point is this word followed by 0^∞.
    pub word: Vec<u8>,
    pub blocks: Vec<BlockLog>,
}

impl Representative {
    pub fn point(&self) -> SymbolPoint {
        SymbolPoint::constant(0).prepend(&self.word)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationCheck {
    pub k: usize,
    /// "S2" or "T".
    pub family: String,
    pub scale: f64,
    pub pairs: usize,
    pub min_distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalFamily {
    pub schedule: FractalSchedule,
    pub representatives: Vec<Representative>,
    pub separation: Vec<SeparationCheck>,
}

/// ln n! for n up to a bound.
struct LnFact(Vec<f64>);

impl LnFact {
    fn new(n: usize) -> Self {
        let mut v = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        v.push(0.0);
        for i in 1..=n {
            acc += (i as f64).ln();
            v.push(acc);
        }
        LnFact(v)
    }

    fn multinomial(&self, counts: &[usize]) -> f64 {
        let n: usize = counts.iter().sum();
        self.0[n] - counts.iter().map(|&c| self.0[c]).sum::<f64>()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn is_typical(counts: &[usize], n: usize, probs: &[f64], zeta: f64) -> bool {
    counts
        .iter()
        .zip(probs)
        .all(|(&c, &p)| (c as f64 / n as f64 - p).abs() <= zeta + 1e-12)
}

/// Visit every count vector of length-n words that is ζ-typical for `probs`.
fn for_each_typical(n: usize, probs: &[f64], zeta: f64, mut f: impl FnMut(&[usize])) {
    fn rec(a: usize, left: usize, n: usize, probs: &[f64], zeta: f64, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if a + 1 == probs.len() {
            cur.push(left);
            if is_typical(cur, n, probs, zeta) {
                f(cur);
            }
            cur.pop();
            return;
        }
        let lo = ((probs[a] - zeta) * n as f64).ceil().max(0.0) as usize;
        let hi = (((probs[a] + zeta) * n as f64).floor() as usize).min(left);
        for c in lo..=hi {
            cur.push(c);
            rec(a + 1, left - c, n, probs, zeta, cur, f);
            cur.pop();
        }
    }
    rec(0, n, n, probs, zeta, &mut Vec::with_capacity(probs.len()), &mut f);
}

/// Leading zeros of `w`, capped at `cap`.
fn zero_class(w: &[u8], cap: usize) -> usize {
    w.iter().take_while(|&&c| c == 0).count().min(cap)
}

/// Weighted counts of typical words per leading-zero class, plus ln counts
/// and the typical mass. Class r < m - 1 is 0^r b… with b ≠ 0; class m - 1
/// is 0^{m-1}….
struct ClassTable {
    log_weight: Vec<f64>,
    log_card: Vec<f64>,
    mass: f64,
}

fn class_table(lf: &LnFact, n: usize, probs: &[f64], zeta: f64, psi: &[f64], m: usize) -> ClassTable {
    let top = m - 1;
    let mut log_weight = vec![f64::NEG_INFINITY; m];
    let mut log_card = vec![f64::NEG_INFINITY; m];
    let mut mass = 0.0;
    for_each_typical(n, probs, zeta, |c| {
        let w: f64 = c.iter().zip(psi).map(|(&k, &v)| k as f64 * v).sum();
        let lp: f64 = c
            .iter()
            .zip(probs)
            .map(|(&k, &p)| if k == 0 { 0.0 } else { k as f64 * p.ln() })
            .sum();
        mass += (lf.multinomial(c) + lp).exp();
        let mut rest = c.to_vec();
        for r in 0..=top {
            if r == top {
                if c[0] >= top {
                    rest[0] = c[0] - top;
                    let l = lf.multinomial(&rest);
                    log_card[r] = log_add(log_card[r], l);
                    log_weight[r] = log_add(log_weight[r], l + w);
                }
                break;
            }
            if c[0] < r {
                break;
            }
            for b in 1..c.len() {
                if c[b] == 0 {
                    continue;
                }
                rest.copy_from_slice(c);
                rest[0] -= r;
                rest[b] -= 1;
                let l = lf.multinomial(&rest);
                log_card[r] = log_add(log_card[r], l);
                log_weight[r] = log_add(log_weight[r], l + w);
            }
        }
    });
    ClassTable {
        log_weight,
        log_card,
        mass,
    }
}

/// Values of a window-1 observable on each symbol.
fn symbol_values(obs: &Observable, sys: &System, alphabet: usize) -> Result<Vec<Vec<f64>>> {
    obs.validate(sys)?;
    match obs.window() {
        Some(w) if w <= 1 => Ok((0..alphabet as u8).map(|a| obs.eval_word(&[a])).collect()),
        _ => Err(Error::Unsupported("the fractal family needs observables of one symbol".into())),
    }
}

fn full_shift(sys: &System) -> Result<&ShiftSpace> {
    match sys {
        System::Shift(s) if s.is_full() && matches!(s.metric(), ShiftMetric::Cylinder) => Ok(s),
        _ => Err(Error::Unsupported("the fractal family is built on full shifts with the cylinder metric".into())),
    }
}

/// Bernoulli measure with weights ∝ exp ψ(a).
pub fn equilibrium_bernoulli(psi_values: &[f64]) -> Sampler {
    let mx = psi_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = psi_values.iter().map(|v| (v - mx).exp()).collect();
    let z: f64 = w.iter().sum();
    let mut probs: Vec<f64> = w.iter().map(|x| x / z).collect();
    // Force an exact sum of 1 for validation.
    let rest: f64 = probs[1..].iter().sum();
    probs[0] = 1.0 - rest;
    Sampler::Bernoulli { probs }
}

/// (r, s) with r/(r+s) closest to t over small denominators.
fn mix_counts(t: f64) -> (usize, usize) {
    let mut best = (1, 0, f64::INFINITY);
    for d in 1..=MAX_MIX_DENOM {
        let r = (t * d as f64).round() as usize;
        let err = (r as f64 / d as f64 - t).abs();
        if err < best.2 - 1e-12 {
            best = (r, d - r, err);
        }
    }
    (best.0, best.1)
}

struct Sampling<'a> {
    sampler: &'a Sampler,
    n: usize,
    zeta: f64,
    /// Required leading-zero class, if any.
    class: Option<usize>,
    cap: usize,
}

impl Sampling<'_> {
    fn draw(&self, rng: &mut ChaCha8Rng, alphabet: usize) -> Result<Vec<u8>> {
        for _ in 0..REJECTION_TRIES {
            let w = self.sampler.sample_word(rng, self.n);
            let ok = match self.sampler {
                Sampler::Dirac { .. } => true,
                Sampler::Bernoulli { probs } => {
                    let mut c = vec![0usize; alphabet];
                    for &a in &w {
                        c[a as usize] += 1;
                    }
                    is_typical(&c, self.n, probs, self.zeta)
                }
            };
            if ok && self.class.is_none_or(|r| zero_class(&w, self.cap) == r) {
                return Ok(w);
            }
        }
        Err(Error::BudgetExhausted("rejection sampling found no typical word".into()))
    }
}

pub fn build_fractal_family(sys: &System, phi: &Observable, psi: &Observable, params: &FractalParams) -> Result<FractalFamily> {
    let s = full_shift(sys)?;
    let a = s.alphabet();
    let FractalParams { eps, gamma, t, depth, .. } = *params;
    if !(eps > 0.0 && 6.0 * eps < 1.0) {
        return invalid("need 0 < 6ε < 1 for the separation scales");
    }
    if !(gamma > 0.0 && gamma < 1.0) || !(t > 0.0 && t <= 1.0) {
        return invalid("need γ in (0,1) and t in (0,1]");
    }
    if depth == 0 || depth > MAX_FRACTAL_DEPTH {
        return invalid(format!("depth must be in 1..={MAX_FRACTAL_DEPTH}"));
    }
    let psi_vec = symbol_values(psi, sys, a)?;
    if psi_vec.iter().any(|v| v.len() != 1) {
        return invalid("ψ must be scalar");
    }
    let psi_values: Vec<f64> = psi_vec.iter().map(|v| v[0]).collect();
    let mu1 = params.mu1.clone().unwrap_or_else(|| equilibrium_bernoulli(&psi_values));
    mu1.validate(s)?;
    params.nu.validate(s)?;

    // ζ_k is also capped so that the two clusters of averages stay apart by
    // more than the typical-set slack.
    let phi_values = symbol_values(phi, sys, a)?;
    let l1: f64 = phi_values.iter().map(|v| norm(v)).sum();
    let separation = (1.0 - t) * dist(&mu1.mean_of(phi, a)?.0, &params.nu.mean_of(phi, a)?.0);
    let zeta_cap = if separation > 0.0 && l1 > 0.0 { separation / (5.0 * l1) } else { f64::INFINITY };

    let m = m_eps(eps);
    let cap = m - 1;
    let est = pressure_estimate(sys, psi, &[eps, eps / 2.0, eps / 4.0, eps / 8.0], &[6, 8, 10, 12])?;
    let p_top = est.fit_for(eps).expect("ε is on the grid");
    let var_psi = exact_variation(s, psi, eps)?;
    let lf = LnFact::new(MAX_WORD_LEN + 1);
    let (r, s_copies) = mix_counts(t);
    let psi_word = |w: &[u8]| -> f64 { w.iter().map(|&c| psi_values[c as usize]).sum() };

    let mut levels: Vec<FractalLevel> = Vec::with_capacity(depth);
    let mut prev_n1 = MIN_WORD_LEN - 1;
    let mut t_prev = 0usize;
    let mut log_z_prev = 0.0;
    for k in 1..=depth {
        let zeta = (ZETA0 / 2f64.powi(k as i32 - 1)).min(zeta_cap);
        // n_k¹, class weights and the pigeonhole class.
        let (n1, mass, class, log_m1, log_card1) = match &mu1 {
            Sampler::Dirac { point } => {
                let n1 = prev_n1 + 1;
                let w = point.word(0, n1);
                (n1, 1.0, zero_class(&w, cap), psi_word(&w), 0.0)
            }
            Sampler::Bernoulli { probs } => {
                let mut n = prev_n1 + 1;
                let table = loop {
                    let tb = class_table(&lf, n, probs, zeta, &psi_values, m);
                    if tb.mass >= 1.0 - gamma {
                        break tb;
                    }
                    n += 1;
                    if n > MAX_WORD_LEN {
                        return Err(Error::BudgetExhausted(format!(
                            "typical set at level {k} does not reach mass 1 - γ below length {MAX_WORD_LEN}"
                        )));
                    }
                };
                let class = (0..m)
                    .max_by(|&x, &y| table.log_weight[x].total_cmp(&table.log_weight[y]).then(y.cmp(&x)))
                    .expect("m >= 1");
                (n, table.mass, class, table.log_weight[class], table.log_card[class])
            }
        };
        let gap = cap - class;
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(params.seed, 1000 + k as u64));
        let x_tilde = Sampling {
            sampler: &params.nu,
            n: n1,
            zeta,
            class: None,
            cap,
        }
        .draw(&mut rng, a)?;
        let gap_x = cap - zero_class(&x_tilde, cap);
        let mut gap_vector = vec![gap; r.saturating_sub(1)];
        gap_vector.extend(std::iter::repeat_n(gap_x, s_copies));
        let n2 = (r + s_copies) * n1 + gap_vector.iter().sum::<usize>();
        let log_m2 = r as f64 * log_m1 + s_copies as f64 * psi_word(&x_tilde) + gap_vector.iter().sum::<usize>() as f64 * psi_values[0];
        let chi = if k % 2 == 1 { 1 } else { 2 };
        let (unit_len, unit_log, unit_gaps) = if chi == 1 {
            (n1, log_m1, 0)
        } else {
            (n2, log_m2, gap_vector.iter().sum::<usize>())
        };
        let repeats = if k == 1 {
            1
        } else {
            ((BLOCK_DOMINANCE * k as f64 * t_prev as f64 / unit_len as f64).ceil() as usize).max(1)
        };
        let c_len = repeats * unit_len + (repeats - 1) * gap;
        let join = if k == 1 { 0 } else { gap };
        let t_len = t_prev + join + c_len;
        if t_len > MAX_FAMILY_LEN {
            return Err(Error::BudgetExhausted(format!("t_{k} = {t_len} exceeds {MAX_FAMILY_LEN}")));
        }
        let outer_gaps = (repeats - 1) * gap + join;
        let gap_symbols = outer_gaps + repeats * unit_gaps;
        let log_z = log_z_prev + repeats as f64 * unit_log + outer_gaps as f64 * psi_values[0];
        let weight_bound_ok = unit_log >= unit_len as f64 * (t * p_top - var_psi - 6.0 * gamma);
        levels.push(FractalLevel {
            k,
            zeta,
            n1,
            typical_mass: mass,
            class,
            gap,
            log_m1,
            log_card1,
            x_tilde,
            r,
            s: s_copies,
            gap_vector,
            n2,
            log_m2,
            chi,
            repeats,
            c_len,
            t_len,
            gap_symbols,
            log_z,
            weight_bound_ok,
        });
        prev_n1 = n1;
        t_prev = t_len;
        log_z_prev = log_z;
    }
    let schedule = FractalSchedule {
        eps,
        gamma,
        t,
        mu1,
        nu: params.nu.clone(),
        psi: psi.clone(),
        m,
        p_top,
        var_psi,
        psi_values,
        levels,
    };

    let representatives = (0..params.representatives)
        .map(|j| representative(s, &schedule, stream_seed(params.seed, j as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut separation = s2_separation(s, &schedule, params.seed, params.representatives)?;
    separation.extend(t_separation(s, &schedule, &representatives, params.seed)?);
    Ok(FractalFamily {
        schedule,
        representatives,
        separation,
    })
}

fn s1_sampling<'a>(sched: &'a FractalSchedule, level: &FractalLevel) -> Sampling<'a> {
    Sampling {
        sampler: &sched.mu1,
        n: level.n1,
        zeta: level.zeta,
        class: Some(level.class),
        cap: sched.m - 1,
    }
}

/// Parts of one S² element: r typical words, then s copies of x̃.
fn s2_parts(s: &ShiftSpace, sched: &FractalSchedule, level: &FractalLevel, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<u8>>> {
    let sm = s1_sampling(sched, level);
    let mut parts = Vec::with_capacity(level.r + level.s);
    for _ in 0..level.r {
        parts.push(sm.draw(rng, s.alphabet())?);
    }
    for _ in 0..level.s {
        parts.push(level.x_tilde.clone());
    }
    Ok(parts)
}

/// Glue words at scale ε on anchors `u 0^∞`; returns the word up to the end
/// of the last part and the realized gaps.
fn glue_words(s: &ShiftSpace, m: usize, w: &mut Vec<u8>, end: &mut usize, parts: &[Vec<u8>], gaps: &mut Vec<usize>) -> Result<()> {
    for u in parts {
        let mut window = u.clone();
        window.extend(std::iter::repeat_n(0u8, m - 1));
        if w.is_empty() {
            w.extend_from_slice(&window);
            *end = u.len();
            continue;
        }
        let p = (0..m)
            .find(|&p| place_in(s, w, *end + p, &window))
            .ok_or_else(|| Error::Validation("full-shift placement failed".into()))?;
        gaps.push(p);
        *end += p + u.len();
    }
    Ok(())
}

fn representative(s: &ShiftSpace, sched: &FractalSchedule, seed: u64) -> Result<Representative> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Vec::new();
    let mut end = 0usize;
    let mut blocks = Vec::new();
    for level in &sched.levels {
        let mut gaps = Vec::new();
        let mut expected = Vec::new();
        let before = end;
        for u in 0..level.repeats {
            let parts = if level.chi == 1 {
                vec![s1_sampling(sched, level).draw(&mut rng, s.alphabet())?]
            } else {
                s2_parts(s, sched, level, &mut rng)?
            };
            if !(level.k == 1 && u == 0) {
                expected.push(level.gap);
            }
            if level.chi == 2 {
                expected.extend(&level.gap_vector);
            }
            glue_words(s, sched.m, &mut w, &mut end, &parts, &mut gaps)?;
        }
        if gaps != expected {
            return Err(Error::Validation(format!("gap vector at level {} is not the pigeonhole vector", level.k)));
        }
        if end != level.t_len {
            return Err(Error::Validation(format!("level {} ends at {end}, expected t_k = {}", level.k, level.t_len)));
        }
        let join = if level.k == 1 { 0 } else { level.gap };
        blocks.push(BlockLog {
            k: level.k,
            chi: level.chi,
            start: before + join,
            end,
        });
    }
    w.truncate(end);
    Ok(Representative { word: w, blocks })
}

fn s2_separation(s: &ShiftSpace, sched: &FractalSchedule, seed: u64, count: usize) -> Result<Vec<SeparationCheck>> {
    let scale = 4.0 * sched.eps;
    let mut out = Vec::new();
    for level in &sched.levels {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 2000 + level.k as u64));
        let mut elems: Vec<SymbolPoint> = Vec::new();
        for _ in 0..count {
            let parts = s2_parts(s, sched, level, &mut rng)?;
            let (mut w, mut end, mut gaps) = (Vec::new(), 0, Vec::new());
            glue_words(s, sched.m, &mut w, &mut end, &parts, &mut gaps)?;
            if gaps != level.gap_vector {
                return Err(Error::Validation(format!("S² gap vector at level {} is not constant", level.k)));
            }
            let x = s.extend(&w);
            if !elems.contains(&x) {
                elems.push(x);
            }
        }
        let mut pairs = 0;
        let mut min_d: Option<f64> = None;
        for i in 0..elems.len() {
            for j in i + 1..elems.len() {
                let d = s.bowen_distance(&elems[i], &elems[j], level.n2);
                if !(d > scale) {
                    return Err(Error::Validation(format!(
                        "S² elements {i} and {j} at level {} are {d}-close (need > {scale})",
                        level.k
                    )));
                }
                pairs += 1;
                min_d = Some(min_d.map_or(d, |x| x.min(d)));
            }
        }
        out.push(SeparationCheck {
            k: level.k,
            family: "S2".into(),
            scale,
            pairs,
            min_distance: min_d,
        });
    }
    Ok(out)
}

fn t_separation(s: &ShiftSpace, sched: &FractalSchedule, reps: &[Representative], seed: u64) -> Result<Vec<SeparationCheck>> {
    let scale = 2.0 * sched.eps;
    let mut out = Vec::new();
    for level in &sched.levels {
        let mut distinct: Vec<SymbolPoint> = Vec::new();
        for r in reps {
            let x = SymbolPoint::constant(0).prepend(&r.word[..level.t_len]);
            if !distinct.contains(&x) {
                distinct.push(x);
            }
        }
        let nd = distinct.len();
        let all = nd * nd.saturating_sub(1) / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 3000 + level.k as u64));
        let chosen: Vec<usize> = if all <= SEPARATION_PAIRS {
            (0..all).collect()
        } else {
            let mut v = sample(&mut rng, all, SEPARATION_PAIRS).into_vec();
            v.sort_unstable();
            v
        };
        let mut min_d: Option<f64> = None;
        let mut idx = 0;
        let mut next = chosen.iter().peekable();
        'outer: for i in 0..nd {
            for j in i + 1..nd {
                if next.peek().is_none() {
                    break 'outer;
                }
                if next.next_if(|&&c| c == idx).is_some() {
                    let d = s.bowen_distance(&distinct[i], &distinct[j], level.t_len);
                    if !(d > scale) {
                        return Err(Error::Validation(format!(
                            "T_{} representatives {i} and {j} are {d}-close (need > {scale})",
                            level.k
                        )));
                    }
                    min_d = Some(min_d.map_or(d, |x| x.min(d)));
                }
                idx += 1;
            }
        }
        out.push(SeparationCheck {
            k: level.k,
            family: "T".into(),
            scale,
            pairs: chosen.len(),
            min_distance: min_d,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub k: usize,
    pub chi: usize,
    pub repeats: usize,
    pub unit_len: usize,
    pub unit_log_weight: f64,
    pub outer_gaps: usize,
    pub t_len: usize,
    pub log_z: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub table: Vec<CountRow>,
    /// min_k ln Z_k / t_k.
    pub rate: f64,
    /// t·P_top(ψ, ε) - var(ψ, ε) - 9γ.
    pub threshold: f64,
    pub p_top: f64,
    pub var_psi: f64,
    pub passed: bool,
}

/// Re-sum a counting table: ln Z_k and the rates, from the unit weights.
pub fn resum(table: &[CountRow], psi_zero: f64) -> Vec<(f64, f64)> {
    let mut log_z = 0.0;
    table
        .iter()
        .map(|r| {
            log_z += r.repeats as f64 * r.unit_log_weight + r.outer_gaps as f64 * psi_zero;
            (log_z, log_z / r.t_len as f64)
        })
        .collect()
}

pub fn entropy_lower_certificate(family: &FractalFamily) -> Certificate {
    let sc = &family.schedule;
    let table: Vec<CountRow> = sc
        .levels
        .iter()
        .map(|l| {
            let (unit_len, unit_log_weight) = if l.chi == 1 { (l.n1, l.log_m1) } else { (l.n2, l.log_m2) };
            let join = if l.k == 1 { 0 } else { l.gap };
            CountRow {
                k: l.k,
                chi: l.chi,
                repeats: l.repeats,
                unit_len,
                unit_log_weight,
                outer_gaps: (l.repeats - 1) * l.gap + join,
                t_len: l.t_len,
                log_z: l.log_z,
                rate: l.log_z / l.t_len as f64,
            }
        })
        .collect();
    let rate = table.iter().map(|r| r.rate).fold(f64::INFINITY, f64::min);
    let threshold = sc.t * sc.p_top - sc.var_psi - 9.0 * sc.gamma;
    Certificate {
        passed: rate >= threshold,
        table,
        rate,
        threshold,
        p_top: sc.p_top,
        var_psi: sc.var_psi,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternationRow {
    pub time: usize,
    /// Level whose end is `time`, if any.
    pub k: Option<usize>,
    pub average: Vec<f64>,
    pub expected: Option<Vec<f64>>,
    pub deviation: Option<f64>,
    /// None at non-schedule times: no budget applies.
    pub budget: Option<f64>,
    pub within_budget: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternationReport {
    pub rows: Vec<AlternationRow>,
    /// ‖mean of odd-level averages - mean of even-level averages‖.
    pub cluster_gap: f64,
    /// (1 - t) ‖∫φ dμ₁ - ∫φ dν‖ / 2.
    pub required_gap: f64,
    pub historic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoricReport {
    pub mu1_average: Vec<f64>,
    pub mu2_average: Vec<f64>,
    pub points: Vec<AlternationReport>,
    pub historic: bool,
}

fn measure_averages(sys: &System, phi: &Observable, sched: &FractalSchedule) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let a = full_shift(sys)?.alphabet();
    let (a1, _) = sched.mu1.mean_of(phi, a)?;
    let (an, _) = sched.nu.mean_of(phi, a)?;
    let a2 = a1.iter().zip(&an).map(|(x, y)| sched.t * x + (1.0 - sched.t) * y).collect();
    Ok((a1, a2, an))
}

/// Averages of `x` at the schedule times t_k (and at `extra` times, which
/// are reported as uninformative), tested for alternation between the two
/// measure averages.
pub fn alternation_test(sys: &System, phi: &Observable, family: &FractalFamily, x: &SymbolPoint, extra: &[usize]) -> Result<AlternationReport> {
    let sc = &family.schedule;
    let values = symbol_values(phi, sys, full_shift(sys)?.alphabet())?;
    let sup = values.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let l1: f64 = values.iter().map(|v| norm(v)).sum();
    let (a1, a2, an) = measure_averages(sys, phi, sc)?;
    let mut times: Vec<(usize, Option<usize>)> = sc.levels.iter().map(|l| (l.t_len, Some(l.k))).collect();
    times.extend(extra.iter().filter(|&&e| e > 0 && !sc.levels.iter().any(|l| l.t_len == e)).map(|&e| (e, None)));
    times.sort();
    times.dedup();
    let ts: Vec<usize> = times.iter().map(|t| t.0).collect();
    let sums = sums_at(phi, x, &ts);
    let mut rows = Vec::new();
    let mut prev_t = 0usize;
    let (mut odd, mut even) = (Vec::new(), Vec::new());
    for (&(time, k), sum) in times.iter().zip(&sums) {
        let average: Vec<f64> = sum.iter().map(|v| v / time as f64).collect();
        let Some(k) = k else {
            rows.push(AlternationRow {
                time,
                k: None,
                average,
                expected: None,
                deviation: None,
                budget: None,
                within_budget: None,
            });
            continue;
        };
        let level = &sc.levels[k - 1];
        let expected = if level.chi == 1 { a1.clone() } else { a2.clone() };
        let mix = if level.chi == 2 {
            let tau = (level.r * level.n1) as f64 / ((level.r + level.s) * level.n1) as f64;
            2.0 * sup * (tau - sc.t).abs()
        } else {
            0.0
        };
        let budget = level.zeta * l1 + 2.0 * sup * (prev_t + level.gap_symbols) as f64 / time as f64 + mix;
        let deviation = dist(&average, &expected);
        if level.chi == 1 {
            odd.push(average.clone());
        } else {
            even.push(average.clone());
        }
        rows.push(AlternationRow {
            time,
            k: Some(k),
            average,
            expected: Some(expected),
            deviation: Some(deviation),
            budget: Some(budget),
            within_budget: Some(deviation <= budget),
        });
        prev_t = time;
    }
    let mean = |v: &[Vec<f64>]| -> Option<Vec<f64>> {
        let first = v.first()?;
        let mut acc = vec![0.0; first.len()];
        for x in v {
            for (a, b) in acc.iter_mut().zip(x) {
                *a += b / v.len() as f64;
            }
        }
        Some(acc)
    };
    let cluster_gap = match (mean(&odd), mean(&even)) {
        (Some(o), Some(e)) => dist(&o, &e),
        _ => 0.0,
    };
    let required_gap = (1.0 - sc.t) * dist(&a1, &an) / 2.0;
    let historic = required_gap > 0.0
        && cluster_gap >= required_gap
        && rows.iter().all(|r| r.within_budget != Some(false));
    Ok(AlternationReport {
        rows,
        cluster_gap,
        required_gap,
        historic,
    })
}

pub fn verify_fractal_is_historic(sys: &System, phi: &Observable, family: &FractalFamily, extra: &[usize]) -> Result<HistoricReport> {
    let (mu1_average, mu2_average, _) = measure_averages(sys, phi, &family.schedule)?;
    let points = family
        .representatives
        .iter()
        .map(|r| alternation_test(sys, phi, family, &r.point(), extra))
        .collect::<Result<Vec<_>>>()?;
    Ok(HistoricReport {
        historic: !points.is_empty() && points.iter().all(|p| p.historic),
        mu1_average,
        mu2_average,
        points,
    })
}
