//! Gluing on shifts of finite type by word concatenation.
//!
//! Segment i needs y[o_i .. o_i + n_i + m - 1] to equal the first n_i + m - 1
//! symbols of x_i, where m = ⌈log2 1/ε⌉; that gives d(σ^{o_i + j} y, σ^j x_i) ≤ 2^-m
//! for j < n_i. Gaps are searched smallest first and connectors are the
//! lexicographically smallest admissible bridges.

use super::{offsets_from, GluedOrbit, SegmentSpec};
use crate::complexity::cylinder_depth;
use crate::error::{Error, Result};
use crate::systems::{MetricPoint, ShiftSpace, SymbolPoint};

/// m_ε = ⌈log2(1/ε)⌉, at least 1.
pub fn m_eps(eps: f64) -> usize {
    if eps >= 1.0 {
        1
    } else {
        cylinder_depth(eps).max(1)
    }
}

/// m(ε) = D + m_ε with D the primitivity exponent.
pub fn sft_gap_bound(s: &ShiftSpace, eps: f64) -> Result<usize> {
    let d = s
        .primitivity()
        .ok_or_else(|| Error::Unsupported("gluing needs a primitive transition matrix".into()))?;
    Ok(d + m_eps(eps))
}

/// Place `u` at offset `o` after the committed word `w`.
fn place(s: &ShiftSpace, w: &[u8], o: usize, u: &[u8]) -> Option<Vec<u8>> {
    let mut out = w.to_vec();
    place_in(s, &mut out, o, u).then_some(out)
}

/// In-place [`place`]; `w` is left untouched on failure.
pub(crate) fn place_in(s: &ShiftSpace, w: &mut Vec<u8>, o: usize, u: &[u8]) -> bool {
    if u.is_empty() {
        return true;
    }
    if o <= w.len() {
        let overlap = (w.len() - o).min(u.len());
        if w[o..o + overlap] != u[..overlap] {
            return false;
        }
        if o == w.len() && !w.is_empty() && !s.allowed(w[w.len() - 1], u[0]) {
            return false;
        }
        w.extend_from_slice(&u[overlap..]);
    } else {
        let Some(&last) = w.last() else {
            return false;
        };
        let Some(mid) = s.bridge(last, u[0], o - w.len() + 1) else {
            return false;
        };
        w.extend_from_slice(&mid);
        w.extend_from_slice(u);
    }
    true
}

/// Close `w` into a cyclic word of length `p`.
fn close(s: &ShiftSpace, w: &[u8], p: usize) -> Option<Vec<u8>> {
    if p == 0 {
        return None;
    }
    if w.len() >= p {
        if (p..w.len()).any(|i| w[i] != w[i % p]) {
            return None;
        }
        let v = w[..p].to_vec();
        if w.len() == p && !s.allowed(v[p - 1], v[0]) {
            return None;
        }
        Some(v)
    } else {
        let mid = s.bridge(*w.last()?, w[0], p - w.len() + 1)?;
        let mut v = w.to_vec();
        v.extend_from_slice(&mid);
        Some(v)
    }
}

pub fn glue_sft(s: &ShiftSpace, spec: &SegmentSpec, periodic: bool) -> Result<GluedOrbit> {
    let bound = sft_gap_bound(s, spec.eps)?;
    let m = m_eps(spec.eps);
    let windows: Vec<Vec<u8>> = spec
        .segments
        .iter()
        .map(|seg| {
            let x = seg.anchor.as_symbol().expect("segments were validated as symbol points");
            if !s.is_admissible(x) {
                return Err(Error::InvalidParameter(format!("anchor {x} is not admissible")));
            }
            Ok(if seg.len == 0 { Vec::new() } else { x.word(0, seg.len + m - 1) })
        })
        .collect::<Result<_>>()?;

    let mut w = windows[0].clone();
    let mut end = spec.segments[0].len;
    let mut gaps = Vec::new();
    for (seg, u) in spec.segments.iter().zip(&windows).skip(1) {
        let (p, nw) = (0..=bound)
            .find_map(|p| place(s, &w, end + p, u).map(|nw| (p, nw)))
            .ok_or_else(|| Error::Validation(format!("no admissible connector within m(eps) = {bound}")))?;
        gaps.push(p);
        w = nw;
        end += p + seg.len;
    }
    let (point, period) = if periodic {
        if w.is_empty() {
            // Only empty segments: any admissible periodic point works.
            w = s.continuation(0).word(0, 1);
        }
        let (p, v) = (0..=bound)
            .find_map(|p| close(s, &w, end + p).map(|v| (p, v)))
            .ok_or_else(|| Error::Validation(format!("cannot close the orbit within m(eps) = {bound}")))?;
        gaps.push(p);
        (SymbolPoint::periodic(&v), Some(end + p))
    } else if w.is_empty() {
        (s.continuation(0), None)
    } else if let Some(last) = spec.segments.last().filter(|seg| seg.len > 0) {
        // Follow the last anchor beyond its window.
        let start = end - last.len;
        let x = last.anchor.as_symbol().expect("segments were validated as symbol points");
        (x.prepend(&w[..start]), None)
    } else {
        (s.extend(&w), None)
    };
    Ok(GluedOrbit {
        point: MetricPoint::Symbol(point),
        binary: None,
        offsets: offsets_from(spec, &gaps),
        gaps,
        period,
        gap_bound: bound,
        errors: Vec::new(),
    })
}
