//! Periodic approximation of convex combinations of ergodic measures.
//!
//! Typical words of lengths n_i ≈ α_i L are glued periodically; the periodic
//! measure is compared to the target through the truncated weak* distance
//! d_* = Σ_{b=1}^{B} 2^-b |∫ψ_b dμ_p - ∫ψ_b dν|, with 2^-B reported separately
//! as the truncation slack.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::symbolic::sft_gap_bound;
use super::{glue_periodic, GluedOrbit, SegmentSpec};
use crate::error::{invalid, Error, Result};
use crate::observables::{dist, periodic_average, Observable, Sampler};
use crate::seeding::stream_seed;
use crate::systems::{MetricPoint, ShiftSpace, SymbolPoint, System};

/// Scale used for the gluing; any segment window then equals the segment itself.
const GLUE_EPS: f64 = 0.5;
/// Total length is doubled until it reaches this.
pub const MAX_TOTAL_LEN: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicMeasure {
    pub point: SymbolPoint,
    /// One period of `point`.
    pub word: Vec<u8>,
    pub lengths: Vec<usize>,
    pub glued: GluedOrbit,
    /// ∫ψ_b dμ_p.
    pub averages: Vec<Vec<f64>>,
    /// ∫ψ_b dν for the target ν.
    pub targets: Vec<Vec<f64>>,
    pub d_star: f64,
    pub truncation: f64,
    /// d_star + truncation, at most ζ.
    pub bound: f64,
}

/// Σ_b 2^-b |avg_b - target_b| for the periodic orbit of `word`.
pub fn d_star(basis: &[Observable], word: &[u8], targets: &[Vec<f64>]) -> f64 {
    basis
        .iter()
        .zip(targets)
        .enumerate()
        .map(|(b, (psi, t))| 0.5f64.powi(b as i32 + 1) * dist(&periodic_average(psi, word), t))
        .sum()
}

pub fn approximate_by_periodic_measure(
    sys: &System,
    target: &[(Sampler, f64)],
    zeta: f64,
    basis: &[Observable],
    seed: u64,
) -> Result<PeriodicMeasure> {
    let System::Shift(s) = sys else {
        return Err(Error::Unsupported("periodic approximation is implemented for shifts".into()));
    };
    if target.is_empty() || basis.is_empty() {
        return invalid("target and basis must be nonempty");
    }
    if target.iter().any(|(_, a)| !(*a >= 0.0)) || (target.iter().map(|(_, a)| a).sum::<f64>() - 1.0).abs() > 1e-9 {
        return invalid("weights must be nonnegative and sum to 1");
    }
    let truncation = 0.5f64.powi(basis.len() as i32);
    if !(zeta > truncation) {
        return invalid(format!("zeta must exceed the truncation 2^-B = {truncation}"));
    }
    for (mu, _) in target {
        mu.validate(s)?;
    }
    let parts: Vec<&(Sampler, f64)> = target.iter().filter(|(_, a)| *a > 0.0).collect();
    let targets: Vec<Vec<f64>> = basis
        .iter()
        .map(|psi| {
            psi.validate(sys)?;
            let mut acc: Vec<f64> = Vec::new();
            for (mu, a) in &parts {
                let (m, _) = mu.mean_of(psi, s.alphabet())?;
                acc.resize(m.len(), 0.0);
                for (x, y) in acc.iter_mut().zip(&m) {
                    *x += a * y;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let k = parts.len();
    let m = sft_gap_bound(s, GLUE_EPS)?;
    // (k+1) m(ε) / L ≤ ζ/10.
    let mut total = (64 * k).max((10.0 * (k + 1) as f64 * m as f64 / zeta).ceil() as usize);
    let mut attempt = 0u64;
    loop {
        let lengths: Vec<usize> = parts.iter().map(|(_, a)| ((a * total as f64).round() as usize).max(1)).collect();
        let segments = parts
            .iter()
            .zip(&lengths)
            .enumerate()
            .map(|(i, ((mu, _), &n))| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, (attempt << 16) | i as u64));
                (MetricPoint::Symbol(anchor(s, mu, &mut rng, n)), n)
            })
            .collect();
        let glued = glue_periodic(sys, &SegmentSpec::new(segments, GLUE_EPS))?;
        let point = glued.point.as_symbol().expect("shift gluing").clone();
        let word = point.tail().to_vec();
        let d = d_star(basis, &word, &targets);
        if d + truncation <= zeta {
            return Ok(PeriodicMeasure {
                averages: basis.iter().map(|psi| periodic_average(psi, &word)).collect(),
                point,
                word,
                lengths,
                glued,
                targets,
                d_star: d,
                truncation,
                bound: d + truncation,
            });
        }
        if total >= MAX_TOTAL_LEN {
            return Err(Error::BudgetExhausted(format!(
                "sampler averages not settled: d_* = {d} at total length {total}"
            )));
        }
        total *= 2;
        attempt += 1;
    }
}

/// An admissible point starting with a typical word of length n.
fn anchor(s: &ShiftSpace, mu: &Sampler, rng: &mut ChaCha8Rng, n: usize) -> SymbolPoint {
    match mu {
        Sampler::Dirac { point } => point.clone(),
        Sampler::Bernoulli { .. } => s.extend(&mu.sample_word(rng, n)),
    }
}
