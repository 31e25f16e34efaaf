//! Parameter syntax shared by the commands.
//!
//! Scales accept dyadic notation `2^-k`, which is exact, as well as decimals.
//! Grids are `a..b` (inclusive, dyadic exponents step by one) or comma lists.

use ergokit::{MetricPoint, Sampler, SymbolPoint, System};

use crate::ConfigError;

type Result<T> = std::result::Result<T, ConfigError>;

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn dyadic_exponent(s: &str) -> Option<Result<i32>> {
    let rest = s.trim().strip_prefix("2^")?;
    Some(rest.parse::<i32>().map_err(|_| bad(format!("bad exponent in {s:?}"))))
}

/// `2^-3`, `0.125`, `1e-3`.
pub fn scalar(s: &str) -> Result<f64> {
    if let Some(k) = dyadic_exponent(s) {
        let k = k?;
        if !(-1000..=1000).contains(&k) {
            return Err(bad(format!("exponent out of range in {s:?}")));
        }
        return Ok(2f64.powi(k));
    }
    let v: f64 = s.trim().parse().map_err(|_| bad(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(bad(format!("not finite: {s:?}")));
    }
    Ok(v)
}

/// `2^-3..2^-6` (every exponent in between), or a comma list of scalars.
pub fn scale_grid(s: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (Some(a), Some(b)) = (dyadic_exponent(a), dyadic_exponent(b)) else {
            return Err(bad(format!("ranges need dyadic ends like 2^-3..2^-6, got {s:?}")));
        };
        let (a, b) = (a?, b?);
        let ks: Vec<i32> = if a <= b { (a..=b).collect() } else { (b..=a).rev().collect() };
        return ks.into_iter().map(|k| scalar(&format!("2^{k}"))).collect();
    }
    s.split(',').map(scalar).collect()
}

/// `6..14` (inclusive) or a comma list.
pub fn int_grid(s: &str) -> Result<Vec<usize>> {
    let int = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(format!("not a count: {t:?}")));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (int(a)?, int(b)?);
        if a > b {
            return Err(bad(format!("empty range {s:?}")));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(int).collect()
}

/// A comma list of scalars.
pub fn vector(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(scalar).collect()
}

/// Polyline vertices: `0.1,0.9` is two scalar vertices; with `;` present,
/// vertices are `;`-separated and coordinates `,`-separated.
pub fn vertices(s: &str) -> Result<Vec<Vec<f64>>> {
    let out: Vec<Vec<f64>> = if s.contains(';') {
        s.split(';').map(vector).collect::<Result<_>>()?
    } else {
        vector(s)?.into_iter().map(|v| vec![v]).collect()
    };
    if out.iter().any(|v| v.len() != out[0].len()) {
        return Err(bad("vertices have different dimensions"));
    }
    Ok(out)
}

fn symbols(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            c.to_digit(36)
                .map(|d| d as u8)
                .ok_or_else(|| bad(format!("bad symbol {c:?}")))
        })
        .collect()
}

/// `0110|1` is the prefix 0110 followed by 1^∞; a bare word is periodic.
/// Symbols are base-36 digits.
pub fn symbol_point(s: &str) -> Result<SymbolPoint> {
    let (prefix, tail) = match s.split_once('|') {
        Some((p, t)) => (symbols(p)?, symbols(t)?),
        None => (Vec::new(), symbols(s)?),
    };
    SymbolPoint::new(prefix, tail).map_err(|e| bad(e.to_string()))
}

/// A point of the system: a symbol point on shifts, coordinates on tori.
pub fn point(sys: &System, s: &str) -> Result<MetricPoint> {
    match sys {
        System::Shift(_) => Ok(MetricPoint::Symbol(symbol_point(s)?)),
        System::Lift(f) => {
            let v = vector(s)?;
            if v.len() != f.dim() {
                return Err(bad(format!("point {s:?} is not in dimension {}", f.dim())));
            }
            Ok(MetricPoint::Torus(v))
        }
    }
}

/// `bernoulli:0.9` (probability of symbol 1), `bernoulli:0.2,0.3,0.5`, or
/// `dirac:<symbol point>`.
pub fn sampler(s: &str) -> Result<Sampler> {
    let (kind, arg) = s.split_once(':').ok_or_else(|| bad(format!("expected kind:args, got {s:?}")))?;
    match kind {
        "bernoulli" => {
            let v = vector(arg)?;
            Ok(if v.len() == 1 { Sampler::bernoulli(v[0]) } else { Sampler::Bernoulli { probs: v } })
        }
        "dirac" => Ok(Sampler::Dirac { point: symbol_point(arg)? }),
        _ => Err(bad(format!("unknown measure kind {kind:?}"))),
    }
}

/// `dirac:0=0.5;dirac:1=0.5`: a convex combination of samplers.
pub fn mixture(s: &str) -> Result<Vec<(Sampler, f64)>> {
    s.split(';')
        .map(|part| {
            let (m, w) = part.rsplit_once('=').ok_or_else(|| bad(format!("expected measure=weight, got {part:?}")))?;
            Ok((sampler(m)?, scalar(w)?))
        })
        .collect()
}

/// `<point>:<length>`, where the point uses the system's syntax.
pub fn segment(sys: &System, s: &str) -> Result<(MetricPoint, usize)> {
    let (p, n) = s.rsplit_once(':').ok_or_else(|| bad(format!("expected point:length, got {s:?}")))?;
    let n = n.trim().parse().map_err(|_| bad(format!("bad segment length in {s:?}")))?;
    Ok((point(sys, p)?, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_is_exact() {
        assert_eq!(scalar("2^-3").unwrap(), 0.125);
        assert_eq!(scalar("2^-50").unwrap().to_bits(), 0.5f64.powi(50).to_bits());
        assert_eq!(scale_grid("2^-3..2^-6").unwrap(), vec![0.125, 0.0625, 0.03125, 0.015625]);
        assert_eq!(scale_grid("2^-6..2^-3").unwrap(), vec![0.015625, 0.03125, 0.0625, 0.125]);
        assert!(scale_grid("0.1..0.2").is_err());
    }

    #[test]
    fn grids_and_vertices() {
        assert_eq!(int_grid("6..8").unwrap(), vec![6, 7, 8]);
        assert_eq!(int_grid("3,5").unwrap(), vec![3, 5]);
        assert!(int_grid("8..6").is_err());
        assert_eq!(vertices("0.1,0.9").unwrap(), vec![vec![0.1], vec![0.9]]);
        assert_eq!(vertices("0.2,0.2;0.6,0.2").unwrap(), vec![vec![0.2, 0.2], vec![0.6, 0.2]]);
        assert!(vertices("0.2,0.2;0.6").is_err());
    }

    #[test]
    fn points_and_measures() {
        let p = symbol_point("0110|1").unwrap();
        assert_eq!(p.word(0, 7), vec![0, 1, 1, 0, 1, 1, 1]);
        assert_eq!(symbol_point("01").unwrap(), SymbolPoint::periodic(&[0, 1]));
        assert_eq!(sampler("bernoulli:0.9").unwrap(), Sampler::bernoulli(0.9));
        let m = mixture("dirac:0=0.5;dirac:1=0.5").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].1, 0.5);
        assert!(sampler("poisson:1").is_err());
    }
}
