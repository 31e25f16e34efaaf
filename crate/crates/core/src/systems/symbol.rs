//! Eventually periodic symbol sequences.
//!
//! A point is stored as a finite prefix followed by a periodic tail, both
//! kept in canonical form (primitive tail, prefix as short as possible), so
//! structural equality coincides with equality of the infinite sequences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "SymbolPointRepr", into = "SymbolPointRepr")]
pub struct SymbolPoint {
    prefix: Vec<u8>,
    tail: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct SymbolPointRepr {
    prefix: Vec<u8>,
    tail: Vec<u8>,
}

impl TryFrom<SymbolPointRepr> for SymbolPoint {
    type Error = Error;
    fn try_from(r: SymbolPointRepr) -> Result<Self> {
        SymbolPoint::new(r.prefix, r.tail)
    }
}

impl From<SymbolPoint> for SymbolPointRepr {
    fn from(p: SymbolPoint) -> Self {
        SymbolPointRepr {
            prefix: p.prefix,
            tail: p.tail,
        }
    }
}

fn primitive_period(w: &[u8]) -> usize {
    let n = w.len();
    for p in 1..n {
        if n.is_multiple_of(p) && (p..n).all(|i| w[i] == w[i - p]) {
            return p;
        }
    }
    n
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl SymbolPoint {
    pub fn new(mut prefix: Vec<u8>, mut tail: Vec<u8>) -> Result<Self> {
        if tail.is_empty() {
            return Err(Error::InvalidParameter("periodic tail must be nonempty".into()));
        }
        let p = primitive_period(&tail);
        tail.truncate(p);
        while let Some(&last) = prefix.last() {
            if last != *tail.last().unwrap() {
                break;
            }
            prefix.pop();
            tail.rotate_right(1);
        }
        Ok(SymbolPoint { prefix, tail })
    }

    /// The periodic point `word^∞`.
    pub fn periodic(word: &[u8]) -> Self {
        SymbolPoint::new(Vec::new(), word.to_vec()).expect("nonempty word")
    }

    pub fn constant(s: u8) -> Self {
        SymbolPoint::periodic(&[s])
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn tail(&self) -> &[u8] {
        &self.tail
    }

    pub fn is_periodic(&self) -> bool {
        self.prefix.is_empty()
    }

    /// Length of the primitive tail.
    pub fn tail_period(&self) -> usize {
        self.tail.len()
    }

    #[inline]
    pub fn at(&self, i: usize) -> u8 {
        let p = self.prefix.len();
        if i < p {
            self.prefix[i]
        } else {
            self.tail[(i - p) % self.tail.len()]
        }
    }

    pub fn word(&self, start: usize, len: usize) -> Vec<u8> {
        (start..start + len).map(|i| self.at(i)).collect()
    }

    pub fn shift_by(&self, k: usize) -> SymbolPoint {
        let p = self.prefix.len();
        if k <= p {
            SymbolPoint {
                prefix: self.prefix[k..].to_vec(),
                tail: self.tail.clone(),
            }
        } else {
            let mut tail = self.tail.clone();
            let r = (k - p) % tail.len();
            tail.rotate_left(r);
            SymbolPoint {
                prefix: Vec::new(),
                tail,
            }
        }
    }

    pub fn shift(&self) -> SymbolPoint {
        self.shift_by(1)
    }

    /// Index of the first coordinate where the sequences differ, `None` if equal.
    pub fn first_disagreement(&self, other: &SymbolPoint) -> Option<usize> {
        let a = self.tail.len();
        let b = other.tail.len();
        let lcm = a / gcd(a, b) * b;
        let bound = self.prefix.len().max(other.prefix.len()) + lcm;
        (0..bound).find(|&i| self.at(i) != other.at(i))
    }

    /// The sequence `word` followed by this point.
    pub fn prepend(&self, word: &[u8]) -> SymbolPoint {
        let mut prefix = word.to_vec();
        prefix.extend_from_slice(&self.prefix);
        SymbolPoint::new(prefix, self.tail.clone()).expect("nonempty tail")
    }

    pub fn max_symbol(&self) -> u8 {
        self.prefix
            .iter()
            .chain(self.tail.iter())
            .copied()
            .max()
            .unwrap_or(0)
    }
}

fn digit(s: u8) -> char {
    if s < 10 {
        (b'0' + s) as char
    } else {
        (b'a' + s - 10) as char
    }
}

impl fmt::Display for SymbolPoint {
    /// `prefix(tail)`, symbols written as base-36 digits.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.prefix {
            write!(f, "{}", digit(s))?;
        }
        write!(f, "(")?;
        for &s in &self.tail {
            write!(f, "{}", digit(s))?;
        }
        write!(f, ")")
    }
}

impl FromStr for SymbolPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse symbol point {s:?}"));
        let open = s.find('(').ok_or_else(bad)?;
        let close = s.rfind(')').ok_or_else(bad)?;
        if close != s.len() - 1 || close < open {
            return Err(bad());
        }
        let parse = |t: &str| -> Result<Vec<u8>> {
            t.chars()
                .map(|c| c.to_digit(36).map(|d| d as u8).ok_or_else(bad))
                .collect()
        };
        SymbolPoint::new(parse(&s[..open])?, parse(&s[open + 1..close])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_makes_equality_structural() {
        let a = SymbolPoint::new(vec![0, 1], vec![0, 1, 0, 1]).unwrap();
        let b = SymbolPoint::periodic(&[0, 1]);
        assert_eq!(a, b);
        let c = SymbolPoint::new(vec![1, 1, 1], vec![1]).unwrap();
        assert_eq!(c, SymbolPoint::constant(1));
    }

    #[test]
    fn shift_of_periodic_word() {
        let x = SymbolPoint::periodic(&[0, 1]);
        assert_eq!(x.shift(), SymbolPoint::periodic(&[1, 0]));
        assert_eq!(x.shift_by(2), x);
    }

    #[test]
    fn disagreement_index() {
        let x = SymbolPoint::constant(0);
        let y = SymbolPoint::periodic(&[0, 0, 0, 1]);
        assert_eq!(x.first_disagreement(&y), Some(3));
        assert_eq!(x.first_disagreement(&x.clone()), None);
    }

    #[test]
    fn parse_round_trip() {
        let p: SymbolPoint = "0000(1)".parse().unwrap();
        assert_eq!(p.prefix(), &[0, 0, 0, 0]);
        assert_eq!(p.to_string(), "0000(1)");
        assert!("00".parse::<SymbolPoint>().is_err());
    }
}
