//! One-sided shift spaces: full shifts and subshifts of finite type.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::symbol::SymbolPoint;
use crate::error::{invalid, Error, Result};

/// How coordinates are compared.
///
/// `Cylinder` is d(x,y) = 2^-k with k the first disagreement. `Values` puts
/// each symbol at a point of [0,1] and uses d(x,y) = max_k 2^-k |v(x_k) - v(y_k)|,
/// which is what a discretised interval alphabet needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftMetric {
    Cylinder,
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpace {
    alphabet: usize,
    matrix: Option<Vec<Vec<bool>>>,
    primitivity: Option<usize>,
    embedding: Option<Vec<Vec<f64>>>,
    metric: ShiftMetric,
}

impl ShiftSpace {
    pub fn full(alphabet: usize) -> Result<Self> {
        if !(2..=255).contains(&alphabet) {
            return invalid(format!("alphabet size {alphabet} outside 2..=255"));
        }
        Ok(ShiftSpace {
            alphabet,
            matrix: None,
            primitivity: Some(1),
            embedding: None,
            metric: ShiftMetric::Cylinder,
        })
    }

    pub fn sft(matrix: Vec<Vec<bool>>) -> Result<Self> {
        let a = matrix.len();
        if !(2..=255).contains(&a) {
            return invalid(format!("alphabet size {a} outside 2..=255"));
        }
        if matrix.iter().any(|row| row.len() != a) {
            return invalid("transition matrix is not square");
        }
        for i in 0..a {
            if !matrix[i].iter().any(|&b| b) {
                return invalid(format!("row {i} of the transition matrix is zero"));
            }
            if !(0..a).any(|j| matrix[j][i]) {
                return invalid(format!("column {i} of the transition matrix is zero"));
            }
        }
        let primitivity = primitivity_exponent(&matrix);
        Ok(ShiftSpace {
            alphabet: a,
            matrix: Some(matrix),
            primitivity,
            embedding: None,
            metric: ShiftMetric::Cylinder,
        })
    }

    /// Golden-mean shift: binary sequences without two consecutive ones.
    pub fn golden_mean() -> Self {
        ShiftSpace::sft(vec![vec![true, true], vec![true, false]]).expect("valid matrix")
    }

    pub fn with_embedding(mut self, embedding: Vec<Vec<f64>>) -> Result<Self> {
        if embedding.len() != self.alphabet {
            return invalid("embedding needs one vector per symbol");
        }
        let d = embedding[0].len();
        if d == 0 || embedding.iter().any(|v| v.len() != d) {
            return invalid("embedding vectors must share a positive dimension");
        }
        self.embedding = Some(embedding);
        Ok(self)
    }

    pub fn with_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.alphabet {
            return invalid("value metric needs one value per symbol");
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return invalid("symbol values must lie in [0,1]");
        }
        self.metric = ShiftMetric::Values(values);
        Ok(self)
    }

    /// Full shift over `levels` equally spaced points of [0,1] with the value metric.
    pub fn discretized_interval(levels: usize) -> Result<Self> {
        let values = (0..levels)
            .map(|i| i as f64 / (levels - 1) as f64)
            .collect();
        ShiftSpace::full(levels)?.with_values(values)
    }

    pub fn alphabet(&self) -> usize {
        self.alphabet
    }

    pub fn is_full(&self) -> bool {
        self.matrix.is_none()
    }

    pub fn matrix(&self) -> Option<&[Vec<bool>]> {
        self.matrix.as_deref()
    }

    /// Smallest D with every entry of A^D positive, if the matrix is primitive.
    pub fn primitivity(&self) -> Option<usize> {
        self.primitivity
    }

    pub fn embedding(&self) -> Option<&[Vec<f64>]> {
        self.embedding.as_deref()
    }

    pub fn metric(&self) -> &ShiftMetric {
        &self.metric
    }

    #[inline]
    pub fn allowed(&self, a: u8, b: u8) -> bool {
        match &self.matrix {
            None => true,
            Some(m) => m[a as usize][b as usize],
        }
    }

    pub fn successors(&self, a: u8) -> impl Iterator<Item = u8> + '_ {
        (0..self.alphabet as u8).filter(move |&b| self.allowed(a, b))
    }

    pub fn word_admissible(&self, w: &[u8]) -> bool {
        w.iter().all(|&s| (s as usize) < self.alphabet) && w.windows(2).all(|p| self.allowed(p[0], p[1]))
    }

    pub fn cyclic_admissible(&self, w: &[u8]) -> bool {
        !w.is_empty() && self.word_admissible(w) && self.allowed(*w.last().unwrap(), w[0])
    }

    pub fn is_admissible(&self, x: &SymbolPoint) -> bool {
        let p = x.prefix();
        let t = x.tail();
        if x.max_symbol() as usize >= self.alphabet {
            return false;
        }
        self.word_admissible(p)
            && self.cyclic_admissible(t)
            && p.last().is_none_or(|&l| self.allowed(l, t[0]))
    }

    pub fn distance(&self, x: &SymbolPoint, y: &SymbolPoint) -> f64 {
        self.bowen_distance(x, y, 1)
    }

    /// max_{0 <= j < n} d(σ^j x, σ^j y), evaluated in closed form.
    pub fn bowen_distance(&self, x: &SymbolPoint, y: &SymbolPoint, n: usize) -> f64 {
        let n = n.max(1);
        match &self.metric {
            ShiftMetric::Cylinder => match x.first_disagreement(y) {
                None => 0.0,
                Some(k) if k < n => 1.0,
                Some(k) => 0.5f64.powi((k - n + 1) as i32),
            },
            ShiftMetric::Values(v) => {
                let Some(first) = x.first_disagreement(y) else {
                    return 0.0;
                };
                let a = x.tail_period();
                let b = y.tail_period();
                let horizon = x.prefix().len().max(y.prefix().len()) + a * b + n + 64;
                let mut best = 0.0f64;
                for i in first..horizon {
                    let w = if i < n {
                        1.0
                    } else {
                        0.5f64.powi((i - n + 1) as i32)
                    };
                    if i >= n && w <= best {
                        break;
                    }
                    let d = (v[x.at(i) as usize] - v[y.at(i) as usize]).abs();
                    best = best.max(w * d);
                }
                best
            }
        }
    }

    /// Number of admissible words of length `len`.
    pub fn word_count(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let mut v = vec![1u128; self.alphabet];
        for _ in 1..len {
            let mut next = vec![0u128; self.alphabet];
            for a in 0..self.alphabet {
                if v[a] == 0 {
                    continue;
                }
                for b in self.successors(a as u8) {
                    next[b as usize] = next[b as usize].saturating_add(v[a]);
                }
            }
            v = next;
        }
        v.iter().fold(0u128, |s, &c| s.saturating_add(c))
    }

    /// All admissible words of length `len` in lexicographic order.
    pub fn words(&self, len: usize, budget: usize) -> Result<Vec<Vec<u8>>> {
        let count = self.word_count(len);
        if count > budget as u128 {
            return Err(Error::BudgetExhausted(format!(
                "{count} words of length {len} exceed the budget {budget}"
            )));
        }
        let mut out = Vec::with_capacity(count as usize);
        let mut cur = Vec::with_capacity(len);
        self.words_rec(len, &mut cur, &mut out);
        Ok(out)
    }

    fn words_rec(&self, len: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 0..self.alphabet as u8 {
            if cur.last().is_none_or(|&l| self.allowed(l, s)) {
                cur.push(s);
                self.words_rec(len, cur, out);
                cur.pop();
            }
        }
    }

    /// Canonical admissible continuation after symbol `s`: follow the smallest
    /// successor until a state repeats.
    pub fn continuation(&self, s: u8) -> SymbolPoint {
        let mut seq = Vec::new();
        let mut seen = vec![usize::MAX; self.alphabet];
        let mut cur = s;
        loop {
            let next = self.successors(cur).next().expect("no zero rows");
            if seen[next as usize] != usize::MAX {
                let start = seen[next as usize];
                let tail = seq[start..].to_vec();
                seq.truncate(start);
                return SymbolPoint::new(seq, tail).expect("nonempty cycle");
            }
            seen[next as usize] = seq.len();
            seq.push(next);
            cur = next;
        }
    }

    /// The point `word` followed by the canonical continuation of its last symbol.
    pub fn extend(&self, word: &[u8]) -> SymbolPoint {
        match word.last() {
            None => self.continuation(0).prepend(&[0]),
            Some(&l) => self.continuation(l).prepend(word),
        }
    }

    /// Lexicographically smallest word `u` of length `steps - 1` with
    /// `a u b` admissible, if any.
    pub fn bridge(&self, a: u8, b: u8, steps: usize) -> Option<Vec<u8>> {
        if steps == 0 {
            return None;
        }
        let n = self.alphabet;
        // reach[t][s]: b reachable from s in exactly t steps.
        let mut reach = vec![vec![false; n]; steps + 1];
        reach[0][b as usize] = true;
        for t in 1..=steps {
            for s in 0..n {
                reach[t][s] = self.successors(s as u8).any(|c| reach[t - 1][c as usize]);
            }
        }
        if !reach[steps][a as usize] {
            return None;
        }
        let mut out = Vec::with_capacity(steps - 1);
        let mut cur = a;
        for t in (1..steps).rev() {
            let next = self
                .successors(cur)
                .find(|&c| reach[t][c as usize])
                .expect("reachability table is consistent");
            out.push(next);
            cur = next;
        }
        Some(out)
    }

    /// Primitive cyclic words of length at most `max_period`, one per orbit
    /// (the lexicographically least rotation), ordered by length then lexicographically.
    pub fn periodic_orbits(&self, max_period: usize, budget: usize) -> Result<Vec<Vec<u8>>> {
        let mut out = Vec::new();
        for p in 1..=max_period {
            for w in self.words(p, budget)? {
                if !self.cyclic_admissible(&w) || primitive_len(&w) != p {
                    continue;
                }
                let least = (1..p).all(|r| {
                    let rot: Vec<u8> = w[r..].iter().chain(&w[..r]).copied().collect();
                    w <= rot
                });
                if least {
                    out.push(w);
                }
                if out.len() > budget {
                    return Err(Error::BudgetExhausted(format!(
                        "more than {budget} periodic orbits up to period {max_period}"
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Every periodic point of period at most `max_period`, ordered by period then lexicographically.
    pub fn periodic_points(&self, max_period: usize, budget: usize) -> Result<Vec<SymbolPoint>> {
        let mut out = Vec::new();
        for p in 1..=max_period {
            for w in self.words(p, budget)? {
                if self.cyclic_admissible(&w) && primitive_len(&w) == p {
                    out.push(SymbolPoint::periodic(&w));
                }
            }
        }
        Ok(out)
    }

    /// A random admissible word: uniform initial symbol, then uniform among successors.
    pub fn random_word<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<u8> {
        let mut w = Vec::with_capacity(len);
        self.random_continue(rng, &mut w, len);
        w
    }

    /// Extend `w` by uniform random successors until it has length `len`.
    pub fn random_continue<R: Rng + ?Sized>(&self, rng: &mut R, w: &mut Vec<u8>, len: usize) {
        while w.len() < len {
            let next = match w.last() {
                None => rng.random_range(0..self.alphabet as u8),
                Some(&l) => {
                    let succ: Vec<u8> = self.successors(l).collect();
                    succ[rng.random_range(0..succ.len())]
                }
            };
            w.push(next);
        }
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> SymbolPoint {
        self.extend(&self.random_word(rng, len.max(1)))
    }
}

fn primitive_len(w: &[u8]) -> usize {
    let n = w.len();
    (1..=n)
        .find(|&p| n.is_multiple_of(p) && (p..n).all(|i| w[i] == w[i - p]))
        .unwrap_or(n)
}

fn primitivity_exponent(m: &[Vec<bool>]) -> Option<usize> {
    let n = m.len();
    let bound = (n - 1) * (n - 1) + 1;
    let mut p: Vec<Vec<bool>> = m.to_vec();
    for k in 1..=bound {
        if p.iter().all(|row| row.iter().all(|&b| b)) {
            return Some(k);
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for j in 0..n {
                next[i][j] = (0..n).any(|l| p[i][l] && m[l][j]);
            }
        }
        p = next;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_counts_follow_fibonacci() {
        let g = ShiftSpace::golden_mean();
        let counts: Vec<u128> = (1..=6).map(|l| g.word_count(l)).collect();
        assert_eq!(counts, vec![2, 3, 5, 8, 13, 21]);
        assert_eq!(g.primitivity(), Some(2));
    }

    #[test]
    fn rejects_zero_rows() {
        assert!(ShiftSpace::sft(vec![vec![true, true], vec![false, false]]).is_err());
    }

    #[test]
    fn bowen_distance_cylinder() {
        let s = ShiftSpace::full(2).unwrap();
        let x = SymbolPoint::constant(0);
        let y = SymbolPoint::periodic(&[0, 0, 0, 1]);
        assert_eq!(s.bowen_distance(&x, &y, 1), 0.125);
        assert_eq!(s.bowen_distance(&x, &y, 2), 0.25);
        assert_eq!(s.bowen_distance(&x, &y, 4), 1.0);
        assert_eq!(s.bowen_distance(&x, &x, 5), 0.0);
    }

    #[test]
    fn bridge_respects_transitions() {
        let g = ShiftSpace::golden_mean();
        assert_eq!(g.bridge(1, 1, 1), None);
        assert_eq!(g.bridge(1, 1, 2), Some(vec![0]));
        let w = g.bridge(1, 1, 5).unwrap();
        let mut full = vec![1];
        full.extend(&w);
        full.push(1);
        assert!(g.word_admissible(&full));
    }

    #[test]
    fn continuation_is_admissible() {
        let g = ShiftSpace::golden_mean();
        for s in 0..2 {
            let c = g.continuation(s).prepend(&[s]);
            assert!(g.is_admissible(&c));
        }
        assert!(g.is_admissible(&g.extend(&[0, 1, 0, 1])));
    }

    #[test]
    fn periodic_orbit_enumeration() {
        let s = ShiftSpace::full(2).unwrap();
        let orbits = s.periodic_orbits(3, 1000).unwrap();
        assert_eq!(
            orbits,
            vec![vec![0], vec![1], vec![0, 1], vec![0, 0, 1], vec![0, 1, 1]]
        );
        assert_eq!(s.periodic_points(2, 100).unwrap().len(), 4);
    }

    #[test]
    fn value_metric_weights_coordinates() {
        let s = ShiftSpace::discretized_interval(5).unwrap();
        let x = SymbolPoint::constant(0);
        let y = SymbolPoint::new(vec![0], vec![4]).unwrap();
        assert_eq!(s.distance(&x, &y), 0.5);
        assert_eq!(s.bowen_distance(&x, &y, 2), 1.0);
    }
}
