//! Invariant measures on shifts given as samplers of typical words.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{periodic_average, Observable};
use crate::error::{invalid, Result};
use crate::systems::{ShiftSpace, SymbolPoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sampler {
    /// i.i.d. symbols with the given probabilities (full shift).
    Bernoulli { probs: Vec<f64> },
    /// Point mass on a periodic orbit, started at `point`.
    Dirac { point: SymbolPoint },
}

impl Sampler {
    pub fn bernoulli(p_one: f64) -> Self {
        Sampler::Bernoulli {
            probs: vec![1.0 - p_one, p_one],
        }
    }

    pub fn validate(&self, s: &ShiftSpace) -> Result<()> {
        match self {
            Sampler::Bernoulli { probs } => {
                if !s.is_full() || probs.len() != s.alphabet() {
                    return invalid("Bernoulli sampler needs a full shift with one probability per symbol");
                }
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (total - 1.0).abs() > 1e-12 {
                    return invalid("Bernoulli probabilities must form a distribution");
                }
                Ok(())
            }
            Sampler::Dirac { point } => {
                if !point.is_periodic() || !s.is_admissible(point) {
                    return invalid("Dirac sampler needs an admissible periodic point");
                }
                Ok(())
            }
        }
    }

    pub fn sample_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<u8> {
        match self {
            Sampler::Bernoulli { probs } => (0..len)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (i, p) in probs.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return i as u8;
                        }
                    }
                    (probs.len() - 1) as u8
                })
                .collect(),
            Sampler::Dirac { point } => point.word(0, len),
        }
    }

    /// Measure-theoretic entropy.
    pub fn entropy(&self) -> f64 {
        match self {
            Sampler::Bernoulli { probs } => probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| -p * p.ln())
                .sum(),
            Sampler::Dirac { .. } => 0.0,
        }
    }

    /// μ(word), exact.
    pub fn cylinder_mass(&self, word: &[u8]) -> f64 {
        match self {
            Sampler::Bernoulli { probs } => word.iter().map(|&s| probs[s as usize]).product(),
            Sampler::Dirac { point } => {
                let p = point.tail_period();
                let hits = (0..p).filter(|&j| (0..word.len()).all(|i| point.at(j + i) == word[i])).count();
                hits as f64 / p as f64
            }
        }
    }

    /// ∫φ dμ for a window observable, with a confidence radius (zero: computed exactly).
    pub fn mean_of(&self, obs: &Observable, alphabet: usize) -> Result<(Vec<f64>, f64)> {
        let Some(w) = obs.window() else {
            return invalid("sampler integrals need a window observable");
        };
        match self {
            Sampler::Dirac { point } => Ok((periodic_average(obs, point.tail()), 0.0)),
            Sampler::Bernoulli { .. } => {
                let w = w.max(1);
                if (alphabet as f64).powi(w as i32) > 1e7 {
                    return invalid("observable window too long for exact integration");
                }
                let mut acc: Vec<f64> = Vec::new();
                let mut word = vec![0u8; w];
                loop {
                    let m = self.cylinder_mass(&word);
                    let v = obs.eval_word(&word);
                    if acc.is_empty() {
                        acc = vec![0.0; v.len()];
                    }
                    for (a, b) in acc.iter_mut().zip(&v) {
                        *a += m * b;
                    }
                    // Odometer over alphabet^w.
                    let mut i = w;
                    loop {
                        if i == 0 {
                            return Ok((acc, 0.0));
                        }
                        i -= 1;
                        word[i] += 1;
                        if (word[i] as usize) < alphabet {
                            break;
                        }
                        word[i] = 0;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bernoulli_integrals_and_entropy() {
        let b = Sampler::bernoulli(0.3);
        let (m, r) = b.mean_of(&Observable::cylinder(&[1, 1]), 2).unwrap();
        assert_abs_diff_eq!(m[0], 0.09, epsilon = 1e-12);
        assert_eq!(r, 0.0);
        let h = -0.3f64 * 0.3f64.ln() - 0.7 * 0.7f64.ln();
        assert_abs_diff_eq!(b.entropy(), h, epsilon = 1e-12);
    }

    #[test]
    fn dirac_is_periodic_average() {
        let d = Sampler::Dirac {
            point: SymbolPoint::periodic(&[0, 0, 1]),
        };
        let (m, _) = d.mean_of(&Observable::cylinder(&[1]), 2).unwrap();
        assert_abs_diff_eq!(m[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.cylinder_mass(&[0, 1]), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(d.entropy(), 0.0);
    }
}
