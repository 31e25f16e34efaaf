//! Rotation numbers, rotation sets and their inclusion chain.

pub mod hull;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use hull::{convex_hull, convex_hull_exact, hausdorff_distance, ConvexPolytope};

use crate::error::{invalid, Error, Result};
use crate::observables::{accumulation_set, Observable};
use crate::seeding::stream_seed;
use crate::systems::{frac, LiftRule, MetricPoint, ShiftSpace, SymbolPoint, System, TorusLift};

/// Orbits settled within this circle distance count as periodic.
const LOCK_TOL: f64 = 1e-9;
const MAX_LOCK_PERIOD: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationNumber {
    /// Rotation number reduced into [0,1).
    pub value: f64,
    /// (F^n(x) - x)/n before reduction.
    pub raw: f64,
    /// |(F^{2n}(x) - x)/2n - (F^n(x) - x)/n|.
    pub cauchy_gap: f64,
    /// (p, q) when the projected orbit settles on a q-periodic orbit; p is the lift displacement.
    pub locked: Option<(i64, u64)>,
}

impl RotationNumber {
    /// Unreduced rotation number of the lift: p/q when locked, otherwise `raw`.
    pub fn lift_value(&self) -> f64 {
        match self.locked {
            Some((p, q)) => p as f64 / q as f64,
            None => self.raw,
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn rotation_number(f: &TorusLift, x: f64, n: usize) -> Result<RotationNumber> {
    if f.dim() != 1 || !f.is_homotopic_to_identity() {
        return invalid("rotation number needs a degree-one circle lift");
    }
    if n == 0 {
        return invalid("rotation number needs n >= 1");
    }
    let mut z = [x];
    for _ in 0..n {
        f.eval_in_place(&mut z);
    }
    let zn = z[0];
    for _ in 0..n {
        f.eval_in_place(&mut z);
    }
    let z2n = z[0];
    let raw = (zn - x) / n as f64;
    let cauchy_gap = ((z2n - x) / (2 * n) as f64 - raw).abs();
    // Rebase near zero so the periodicity check is not limited by the size of z.
    let base = [frac(z2n)];
    let mut w = base;
    let mut locked = None;
    for q in 1..=MAX_LOCK_PERIOD {
        f.eval_in_place(&mut w);
        let d = frac(w[0] - base[0]);
        if d.min(1.0 - d) < LOCK_TOL {
            let p = (w[0] - base[0]).round() as i64;
            let g = gcd(p.unsigned_abs(), q).max(1);
            locked = Some((p / g as i64, q / g));
            break;
        }
    }
    let value = match locked {
        Some((p, q)) => frac(p as f64 / q as f64),
        None => frac(raw),
    };
    Ok(RotationNumber {
        value,
        raw,
        cauchy_gap,
        locked,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum PointTag {
    Orbitwise { seed: usize, n: usize },
    PointwiseLimit { point: usize, time: usize },
    Periodic { period: usize, orbit: String },
    Measure { label: String },
}

impl PointTag {
    pub fn name(&self) -> &'static str {
        match self {
            PointTag::Orbitwise { .. } => "orbitwise",
            PointTag::PointwiseLimit { .. } => "pointwise",
            PointTag::Periodic { .. } => "periodic",
            PointTag::Measure { .. } => "measure",
        }
    }

    pub fn n(&self) -> usize {
        match self {
            PointTag::Orbitwise { n, .. } => *n,
            PointTag::PointwiseLimit { time, .. } => *time,
            PointTag::Periodic { period, .. } => *period,
            PointTag::Measure { .. } => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloudPoint {
    pub tag: PointTag,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub max_n: usize,
    pub seeds: usize,
    pub period_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSetEstimate {
    pub dim: usize,
    pub points: Vec<CloudPoint>,
    pub hull: ConvexPolytope,
    pub resolution: Resolution,
}

impl RotationSetEstimate {
    pub fn from_points(points: Vec<CloudPoint>, resolution: Resolution) -> Result<Self> {
        let vs: Vec<Vec<f64>> = points.iter().map(|p| p.v.clone()).collect();
        let hull = convex_hull(&vs)?;
        Ok(RotationSetEstimate {
            dim: hull.dim,
            points,
            hull,
            resolution,
        })
    }

    fn from_exact(points: Vec<CloudPoint>, exact: &[[BigRational; 2]], resolution: Resolution) -> Result<Self> {
        let hull = convex_hull_exact(exact)?;
        Ok(RotationSetEstimate {
            dim: 2,
            points,
            hull,
            resolution,
        })
    }

    pub fn vectors(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.v.clone()).collect()
    }

    pub fn merged(&self, other: &RotationSetEstimate) -> Result<RotationSetEstimate> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        let res = Resolution {
            max_n: self.resolution.max_n.max(other.resolution.max_n),
            seeds: self.resolution.seeds + other.resolution.seeds,
            period_budget: self.resolution.period_budget.max(other.resolution.period_budget),
        };
        RotationSetEstimate::from_points(pts, res)
    }
}

/// Kronecker lattice in [0,1)^d with a seeded Cranley-Patterson shift.
pub fn low_discrepancy_seeds(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    // Generalized golden ratio: the real root of x^{d+1} = x + 1.
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|j| (1.0 / phi.powi(j as i32)).fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, u64::MAX));
    let shift: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    (0..count)
        .map(|i| {
            alpha
                .iter()
                .zip(&shift)
                .map(|(a, s)| frac(s + (i as f64) * a))
                .collect()
        })
        .collect()
}

fn lift_of(sys: &System) -> Result<&TorusLift> {
    let f = sys
        .as_lift()
        .ok_or_else(|| Error::DomainMismatch("expected a torus lift".into()))?;
    if !f.is_homotopic_to_identity() {
        return Err(Error::Unsupported(
            "rotation sets need a lift homotopic to the identity".into(),
        ));
    }
    Ok(f)
}

fn embedding_of(s: &ShiftSpace) -> Result<&[Vec<f64>]> {
    s.embedding().ok_or_else(|| {
        Error::Unsupported("rotation vectors on a shift need a symbol embedding".into())
    })
}

/// The observable whose averages are rotation vectors on this system.
pub fn rotation_observable(sys: &System) -> Result<Observable> {
    match sys {
        System::Lift(_) => {
            lift_of(sys)?;
            Ok(Observable::Displacement)
        }
        System::Shift(s) => Ok(Observable::SymbolEmbedding {
            values: embedding_of(s)?.to_vec(),
        }),
    }
}

/// Cloud of (F^n z_i - z_i)/n over seeds, plus the catalog periodic vectors.
pub fn estimate_rotation_set(sys: &System, seeds: usize, n: usize, seed: u64, period_budget: usize) -> Result<RotationSetEstimate> {
    if seeds == 0 {
        return invalid("need at least one seed");
    }
    if n < 1000 {
        return invalid("rotation set estimation needs n >= 1000");
    }
    let mut points: Vec<CloudPoint> = match sys {
        System::Lift(_) => {
            let f = lift_of(sys)?;
            low_discrepancy_seeds(f.dim(), seeds, seed)
                .into_par_iter()
                .enumerate()
                .map(|(i, z0)| {
                    let mut z = z0.clone();
                    for _ in 0..n {
                        f.eval_in_place(&mut z);
                    }
                    CloudPoint {
                        tag: PointTag::Orbitwise { seed: i, n },
                        v: z.iter().zip(&z0).map(|(a, b)| (a - b) / n as f64).collect(),
                    }
                })
                .collect()
        }
        System::Shift(s) => {
            let emb = embedding_of(s)?;
            let weights = low_discrepancy_seeds(s.alphabet(), seeds, seed);
            weights
                .into_par_iter()
                .enumerate()
                .map(|(i, w)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, i as u64));
                    CloudPoint {
                        tag: PointTag::Orbitwise { seed: i, n },
                        v: biased_walk_average(s, emb, &w, n, &mut rng),
                    }
                })
                .collect()
        }
    };
    let mut res = Resolution {
        max_n: n,
        seeds,
        period_budget: 0,
    };
    if period_budget > 0 {
        match rotation_from_periodics(sys, period_budget) {
            Ok(per) => {
                points.extend(per.points);
                res.period_budget = period_budget;
            }
            Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
    }
    RotationSetEstimate::from_points(points, res)
}

// Random walk on the shift preferring symbols with larger weight; spreads the
// sampled averages over the rotation set instead of concentrating them at one
// measure.
fn biased_walk_average<R: Rng>(s: &ShiftSpace, emb: &[Vec<f64>], w: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let sharp: Vec<f64> = w.iter().map(|x| x.powi(3) + 1e-3).collect();
    let d = emb[0].len();
    let mut acc = vec![0.0; d];
    let mut cur: Option<u8> = None;
    for _ in 0..n {
        let cands: Vec<u8> = match cur {
            None => (0..s.alphabet() as u8).collect(),
            Some(l) => s.successors(l).collect(),
        };
        let total: f64 = cands.iter().map(|&c| sharp[c as usize]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = *cands.last().unwrap();
        for &c in &cands {
            u -= sharp[c as usize];
            if u < 0.0 {
                pick = c;
                break;
            }
        }
        for (a, b) in acc.iter_mut().zip(&emb[pick as usize]) {
            *a += b;
        }
        cur = Some(pick);
    }
    acc.into_iter().map(|a| a / n as f64).collect()
}

/// Accumulation set of rotation averages along one orbit.
pub fn pointwise_rotation_set(sys: &System, x: &MetricPoint, horizon: usize, checkpoints: &[usize]) -> Result<RotationSetEstimate> {
    let obs = rotation_observable(sys)?;
    let acc = accumulation_set(sys, &obs, x, horizon, checkpoints)?;
    let points = acc
        .times
        .iter()
        .zip(acc.averages)
        .map(|(&t, v)| CloudPoint {
            tag: PointTag::PointwiseLimit { point: 0, time: t },
            v,
        })
        .collect();
    RotationSetEstimate::from_points(
        points,
        Resolution {
            max_n: horizon,
            seeds: 1,
            period_budget: 0,
        },
    )
}

/// Rotation vectors of periodic orbits and other explicitly known ergodic measures.
pub fn rotation_from_periodics(sys: &System, period_budget: usize) -> Result<RotationSetEstimate> {
    if period_budget == 0 {
        return invalid("period budget must be positive");
    }
    let res = Resolution {
        max_n: 0,
        seeds: 0,
        period_budget,
    };
    match sys {
        System::Shift(s) => {
            let emb = embedding_of(s)?;
            let d = emb[0].len();
            let exact_emb: Vec<Vec<BigRational>> = emb
                .iter()
                .map(|v| v.iter().map(|&x| BigRational::from_float(x).unwrap_or_else(BigRational::zero)).collect())
                .collect();
            let orbits = s.periodic_orbits(period_budget, 1 << 20)?;
            let mut points = Vec::with_capacity(orbits.len());
            let mut exact = Vec::with_capacity(orbits.len());
            for w in &orbits {
                let mut sum = vec![BigRational::zero(); d];
                for &c in w {
                    for (a, b) in sum.iter_mut().zip(&exact_emb[c as usize]) {
                        *a += b;
                    }
                }
                let len = BigRational::from_integer(BigInt::from(w.len()));
                let avg: Vec<BigRational> = sum.into_iter().map(|x| x / &len).collect();
                points.push(CloudPoint {
                    tag: PointTag::Periodic {
                        period: w.len(),
                        orbit: SymbolPoint::periodic(w).to_string(),
                    },
                    v: avg.iter().map(|q| q.to_f64().unwrap_or(f64::NAN)).collect(),
                });
                if d == 2 {
                    exact.push([avg[0].clone(), avg[1].clone()]);
                }
            }
            if d == 2 {
                RotationSetEstimate::from_exact(points, &exact, res)
            } else {
                RotationSetEstimate::from_points(points, res)
            }
        }
        System::Lift(_) => {
            let f = lift_of(sys)?;
            let points = lift_periodics(f.rule(), period_budget)?;
            RotationSetEstimate::from_points(points, res)
        }
    }
}

const SHEAR_CIRCLES: usize = 256;

fn lift_periodics(rule: &LiftRule, budget: usize) -> Result<Vec<CloudPoint>> {
    match rule {
        LiftRule::Translation { v } => Ok(vec![CloudPoint {
            tag: PointTag::Measure {
                label: "lebesgue".into(),
            },
            v: v.clone(),
        }]),
        LiftRule::Shear { s, twist: 0 } => Ok((0..=SHEAR_CIRCLES)
            .map(|i| {
                let y = i as f64 / SHEAR_CIRCLES as f64;
                CloudPoint {
                    tag: PointTag::Measure {
                        label: format!("circle y={y}"),
                    },
                    v: vec![s.eval(y), 0.0],
                }
            })
            .collect()),
        LiftRule::CircleSine { .. } => {
            let f = TorusLift::new(rule.clone())?;
            let r = rotation_number(&f, 0.0, 1 << 14)?;
            Ok(vec![match r.locked {
                Some((p, q)) if (q as usize) <= budget.max(MAX_LOCK_PERIOD as usize) => CloudPoint {
                    tag: PointTag::Periodic {
                        period: q as usize,
                        orbit: format!("{p}/{q}"),
                    },
                    v: vec![p as f64 / q as f64],
                },
                _ => CloudPoint {
                    tag: PointTag::Measure {
                        label: "unique rotation number".into(),
                    },
                    v: vec![r.raw],
                },
            }])
        }
        LiftRule::Product { parts } => {
            let mut acc: Vec<CloudPoint> = vec![CloudPoint {
                tag: PointTag::Measure { label: String::new() },
                v: vec![],
            }];
            for p in parts {
                let factor = lift_periodics(p, budget)?;
                let mut next = Vec::with_capacity(acc.len() * factor.len());
                for a in &acc {
                    for b in &factor {
                        let mut v = a.v.clone();
                        v.extend(&b.v);
                        let label = if a.v.is_empty() {
                            tag_label(&b.tag)
                        } else {
                            format!("{} x {}", tag_label(&a.tag), tag_label(&b.tag))
                        };
                        next.push(CloudPoint {
                            tag: PointTag::Measure { label },
                            v,
                        });
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        _ => Err(Error::Unsupported(
            "no closed-form periodic family for this lift".into(),
        )),
    }
}

fn tag_label(t: &PointTag) -> String {
    match t {
        PointTag::Measure { label } => label.clone(),
        PointTag::Periodic { orbit, .. } => orbit.clone(),
        other => other.name().to_string(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionStep {
    pub from: String,
    pub to: String,
    pub max_distance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InclusionReport {
    pub eta: f64,
    pub steps: Vec<InclusionStep>,
    pub pass: bool,
}

/// Each cloud of the chain erg ⊆ p ⊆ full ⊆ inv must lie within η of the next hull.
pub fn check_inclusion_chain(
    erg: &RotationSetEstimate,
    p: &RotationSetEstimate,
    full: &RotationSetEstimate,
    inv: &RotationSetEstimate,
    eta: f64,
) -> InclusionReport {
    let chain = [("erg", erg), ("p", p), ("full", full), ("inv", inv)];
    let steps: Vec<InclusionStep> = chain
        .windows(2)
        .map(|w| {
            let d = w[0]
                .1
                .points
                .iter()
                .map(|c| w[1].1.hull.distance_to(&c.v))
                .fold(0.0, f64::max);
            InclusionStep {
                from: w[0].0.into(),
                to: w[1].0.into(),
                max_distance: d,
                pass: d <= eta,
            }
        })
        .collect();
    let pass = steps.iter().all(|s| s.pass);
    InclusionReport { eta, steps, pass }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RotationLattice {
    pub erg: RotationSetEstimate,
    pub p: RotationSetEstimate,
    pub full: RotationSetEstimate,
    pub inv: RotationSetEstimate,
    pub report: InclusionReport,
}

/// ρ_p keeps checkpoints at times ≥ horizon / TAIL_FRACTION.
pub const TAIL_FRACTION: usize = 10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeParams {
    pub seeds: usize,
    pub n: usize,
    pub pointwise_seeds: usize,
    pub pointwise_horizon: usize,
    pub period_budget: usize,
    pub seed: u64,
    pub eta: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            seeds: 64,
            n: 10_000,
            pointwise_seeds: 64,
            pointwise_horizon: 10_000,
            period_budget: 8,
            seed: 1,
            eta: 0.02,
        }
    }
}

/// All four rotation-set estimates of one system and the inclusion report.
///
/// ρ_inv is represented by the hull of the periodic cloud.
pub fn rotation_lattice(sys: &System, params: &LatticeParams) -> Result<RotationLattice> {
    let erg = rotation_from_periodics(sys, params.period_budget)?;
    let cps = crate::observables::geometric_checkpoints(16.0, 1.25, params.pointwise_horizon);
    let starts: Vec<MetricPoint> = match sys {
        System::Lift(f) => low_discrepancy_seeds(f.dim(), params.pointwise_seeds, stream_seed(params.seed, 1))
            .into_iter()
            .map(MetricPoint::Torus)
            .collect(),
        System::Shift(s) => {
            // Short periodic points plus random words extended canonically.
            let mut v: Vec<MetricPoint> = s
                .periodic_points(2, 1 << 10)?
                .into_iter()
                .map(MetricPoint::Symbol)
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(params.seed, 2));
            while v.len() < params.pointwise_seeds.max(1) {
                v.push(MetricPoint::Symbol(s.extend(&s.random_word(&mut rng, params.pointwise_horizon))));
            }
            v
        }
    };
    let pointwise: Vec<Vec<CloudPoint>> = starts
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let est = pointwise_rotation_set(sys, x, params.pointwise_horizon, &cps)?;
            // Early checkpoints are transients, not accumulation points.
            Ok(est
                .points
                .into_iter()
                .filter(|c| matches!(c.tag, PointTag::PointwiseLimit { time, .. } if time * TAIL_FRACTION >= params.pointwise_horizon))
                .map(|mut c| {
                    if let PointTag::PointwiseLimit { point, .. } = &mut c.tag {
                        *point = i;
                    }
                    c
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let p = RotationSetEstimate::from_points(
        pointwise.into_iter().flatten().collect(),
        Resolution {
            max_n: params.pointwise_horizon,
            seeds: starts.len(),
            period_budget: 0,
        },
    )?;
    let full = estimate_rotation_set(sys, params.seeds, params.n, params.seed, params.period_budget)?;
    let inv = RotationSetEstimate {
        dim: erg.dim,
        points: erg
            .hull
            .vertices
            .iter()
            .map(|v| CloudPoint {
                tag: PointTag::Measure {
                    label: "periodic hull vertex".into(),
                },
                v: v.clone(),
            })
            .collect(),
        hull: erg.hull.clone(),
        resolution: erg.resolution.clone(),
    };
    let report = check_inclusion_chain(&erg, &p, &full, &inv, params.eta);
    Ok(RotationLattice {
        erg,
        p,
        full,
        inv,
        report,
    })
}

/// Hausdorff distance between hull(periodic cloud at budget B) and the hull of
/// the sampled rotation set, for each budget.
pub fn convexity_gaps(sys: &System, budgets: &[usize], seeds: usize, n: usize, seed: u64) -> Result<Vec<(usize, f64)>> {
    let max_b = budgets.iter().copied().max().unwrap_or(1);
    let full = estimate_rotation_set(sys, seeds, n, seed, max_b)?;
    budgets
        .iter()
        .map(|&b| {
            let per = rotation_from_periodics(sys, b)?;
            Ok((b, per.hull.hausdorff(&full.hull)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::TrigPoly;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_rotation() {
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let r = rotation_number(&TorusLift::circle_sine(g, 0.0), 0.1, 1_000_000).unwrap();
        assert!(r.locked.is_none());
        assert_abs_diff_eq!(r.value, 0.618_033_988_7, epsilon = 1e-6);
        assert!(r.cauchy_gap <= 1e-6);
    }

    #[test]
    fn fixed_points_force_zero() {
        let r = rotation_number(&TorusLift::circle_sine(0.0, 0.05), 0.3, 1000).unwrap();
        assert_eq!(r.locked, Some((0, 1)));
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn doubling_is_rejected() {
        assert!(rotation_number(&TorusLift::doubling(), 0.1, 1000).is_err());
        let sys = System::Lift(TorusLift::doubling());
        assert!(matches!(estimate_rotation_set(&sys, 4, 1000, 0, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn translation_set_is_a_point() {
        let sys = System::Lift(TorusLift::translation(vec![0.3, 0.7]).unwrap());
        let est = estimate_rotation_set(&sys, 16, 100_000, 3, 1).unwrap();
        assert!(est.hull.diameter() < 1e-6);
        assert_abs_diff_eq!(est.hull.vertices[0][0], 0.3, epsilon = 1e-6);
    }

    #[test]
    fn embedding_periodics() {
        let s = ShiftSpace::full(3)
            .unwrap()
            .with_embedding(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap();
        let sys = System::Shift(s);
        let one = rotation_from_periodics(&sys, 1).unwrap();
        assert_eq!(one.vectors(), vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let two = rotation_from_periodics(&sys, 2).unwrap();
        let mids: Vec<Vec<f64>> = two.vectors().into_iter().skip(3).collect();
        assert_eq!(mids, vec![vec![0.5, 0.0], vec![0.0, 0.5], vec![0.5, 0.5]]);
        assert_eq!(two.hull.vertices.len(), 3);
    }

    #[test]
    fn product_of_rotations() {
        let f = TorusLift::new(LiftRule::Product {
            parts: vec![
                LiftRule::CircleSine { a: 0.25, b: 0.0 },
                LiftRule::CircleSine { a: 0.5, b: 0.0 },
            ],
        })
        .unwrap();
        let est = estimate_rotation_set(&System::Lift(f), 8, 1000, 0, 4).unwrap();
        assert!(est.hull.diameter() < 1e-9);
        assert_abs_diff_eq!(est.hull.vertices[0][1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn shear_lattice_passes() {
        let sys = System::Lift(TorusLift::shear(TrigPoly::sin_squared()));
        let params = LatticeParams {
            n: 2000,
            pointwise_horizon: 2000,
            ..LatticeParams::default()
        };
        let lat = rotation_lattice(&sys, &params).unwrap();
        assert!(lat.report.pass, "{:?}", lat.report);
    }
}
