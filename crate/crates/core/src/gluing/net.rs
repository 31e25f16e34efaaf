//! Periodic nets and periodic gluing assembled from shadowing.
//!
//! A net is a maximal δ-separated family of periodic points, filled greedily in
//! (period, lexicographic) order until it covers the class at scale δ. Members
//! are linked by hops: follow θ_a for t+1 ≤ π(θ_a) steps and jump to θ_b when
//! d(f^{t+1} θ_a, θ_b) ≤ 2δ. Consecutive members of a δ-separated family are
//! never δ-close, so 2δ is the smallest hop scale that can connect them; the
//! assembled pseudo-orbits are therefore 2δ-pseudo-orbits.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::binary::{self, circle_dist};
use super::shadow::shadow;
use super::{is_doubling, offsets_from, validate_glued, GluedOrbit, SegmentSpec};
use crate::complexity::{cylinder_depth, POOL_BUDGET};
use crate::error::{invalid, Error, Result};
use crate::systems::torus::LiftRule;
use crate::systems::{frac, GridGraph, MetricPoint, ShiftMetric, ShiftSpace, System, TorusLift};

/// Largest period tried when filling a net.
pub const MAX_NET_PERIOD: usize = 20;
/// Grid used to bracket roots of F^q(x) - x - p for circle lifts.
const ROOT_GRID: usize = 4096;
/// Periodic points of circle lifts closer than this are merged.
const ROOT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NetClass {
    Whole,
    /// A union of grid boxes on the circle, as produced by chain recurrence.
    Boxes { boxes: Vec<usize>, boxes_per_axis: usize },
}

impl NetClass {
    pub fn from_component(g: &GridGraph, component: usize) -> Result<Self> {
        let c = g
            .components
            .get(component)
            .ok_or_else(|| Error::InvalidParameter(format!("no component {component}")))?;
        if g.dim != 1 {
            return Err(Error::Unsupported("box classes are supported on the circle only".into()));
        }
        Ok(NetClass::Boxes { boxes: c.boxes.clone(), boxes_per_axis: g.boxes_per_axis })
    }

    fn contains(&self, x: f64) -> bool {
        match self {
            NetClass::Whole => true,
            NetClass::Boxes { boxes, boxes_per_axis } => {
                let b = ((frac(x) * *boxes_per_axis as f64) as usize).min(boxes_per_axis - 1);
                boxes.binary_search(&b).is_ok()
            }
        }
    }
}

/// Members visited along a route and how long each is followed before the hop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub members: Vec<usize>,
    pub steps: Vec<usize>,
}

impl Route {
    /// Length of the connecting pseudo-orbit: the route's steps plus one full
    /// period of the final member.
    pub fn len(&self, periods: &[usize]) -> usize {
        self.steps.iter().sum::<usize>() + periods[*self.members.last().expect("nonempty route")]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicNet {
    pub delta: f64,
    pub class: NetClass,
    pub members: Vec<MetricPoint>,
    pub periods: Vec<usize>,
    /// The orbit θ, f(θ), ..., f^{π-1}(θ) of every member.
    pub orbits: Vec<Vec<MetricPoint>>,
    /// routes[a][b] connects member a to member b.
    pub routes: Vec<Vec<Route>>,
    /// K = m · max π.
    pub k_bound: usize,
}

impl PeriodicNet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Nearest member within δ of `x`.
    fn nearest(&self, sys: &System, x: &MetricPoint) -> Result<Option<usize>> {
        let mut best: Option<(usize, f64)> = None;
        for (i, m) in self.members.iter().enumerate() {
            let d = sys.distance(x, m)?;
            if d <= self.delta && best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        Ok(best.map(|(i, _)| i))
    }

    /// The pseudo-orbit θ_a, ..., (hops) ..., θ_b, ..., f^{π(b)-1}(θ_b).
    pub fn route_points(&self, a: usize, b: usize) -> Vec<MetricPoint> {
        let r = &self.routes[a][b];
        let mut out = Vec::new();
        for (&m, &t) in r.members.iter().zip(&r.steps) {
            out.extend((0..t).map(|j| self.orbits[m][j % self.periods[m]].clone()));
        }
        out.extend(self.orbits[b].iter().cloned());
        out
    }

    /// Re-check separation, coverage-independent route invariants and K.
    pub fn check(&self, sys: &System) -> Result<()> {
        for i in 0..self.size() {
            for j in 0..i {
                if sys.distance(&self.members[i], &self.members[j])? <= self.delta {
                    return Err(Error::Validation(format!("members {j} and {i} are not delta-separated")));
                }
            }
        }
        for a in 0..self.size() {
            for b in 0..self.size() {
                let pts = self.route_points(a, b);
                if pts.len() > self.k_bound {
                    return Err(Error::Validation(format!("route {a}->{b} is longer than K = {}", self.k_bound)));
                }
                for w in pts.windows(2) {
                    if sys.distance(&sys.step(&w[0])?, &w[1])? > 2.0 * self.delta + binary::JUMP_SLACK {
                        return Err(Error::Validation(format!("route {a}->{b} has a jump above 2 delta")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Candidate periodic points of exact period q with their orbits, in lexicographic order.
fn candidates(sys: &System, class: &NetClass, q: usize) -> Result<Vec<Vec<MetricPoint>>> {
    match sys {
        System::Shift(s) => {
            if !matches!(class, NetClass::Whole) {
                return Err(Error::Unsupported("shift nets cover the whole shift".into()));
            }
            Ok(s.periodic_points(q, POOL_BUDGET)?
                .into_iter()
                .filter(|x| x.tail_period() == q && x.prefix().is_empty())
                .map(|x| (0..q).map(|t| MetricPoint::Symbol(x.shift_by(t))).collect())
                .collect())
        }
        System::Lift(f) if is_doubling(f) => {
            let modulus = (1u64 << q) - 1;
            let mut out = Vec::new();
            for k in 0..modulus.max(1) {
                let orbit: Vec<u64> = (0..q).map(|t| ((k as u128 * (1u128 << t)) % modulus.max(1) as u128) as u64).collect();
                if orbit[1..].contains(&k) {
                    continue;
                }
                let pts: Vec<MetricPoint> = orbit
                    .iter()
                    .map(|&j| MetricPoint::Torus(vec![if modulus == 0 { 0.0 } else { j as f64 / modulus as f64 }]))
                    .collect();
                if class.contains(pts[0].coords().expect("torus")[0]) {
                    out.push(pts);
                }
            }
            Ok(out)
        }
        System::Lift(f) if matches!(f.rule(), LiftRule::CircleSine { .. }) => Ok(circle_periodic(f, class, q)),
        System::Lift(_) => Err(Error::Unsupported("periodic points are enumerable for shifts, doubling and circle-sine maps only".into())),
    }
}

fn lift_iter(f: &TorusLift, x: f64, q: usize) -> f64 {
    let mut z = [x];
    for _ in 0..q {
        f.eval_in_place(&mut z);
    }
    z[0]
}

/// Roots of F^q(x) - x - p on [0,1) by sign changes on a grid and bisection.
fn circle_periodic(f: &TorusLift, class: &NetClass, q: usize) -> Vec<Vec<MetricPoint>> {
    let g = |x: f64| lift_iter(f, x, q) - x;
    let vals: Vec<f64> = (0..=ROOT_GRID).map(|i| g(i as f64 / ROOT_GRID as f64)).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min).ceil() as i64;
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max).floor() as i64;
    let mut roots: Vec<f64> = Vec::new();
    for p in lo..=hi {
        let h = |i: usize| vals[i] - p as f64;
        for i in 0..ROOT_GRID {
            let (ya, yb) = (h(i), h(i + 1));
            if ya == 0.0 {
                roots.push(i as f64 / ROOT_GRID as f64);
                continue;
            }
            if ya * yb >= 0.0 {
                continue;
            }
            let (mut a, mut b) = (i as f64 / ROOT_GRID as f64, (i + 1) as f64 / ROOT_GRID as f64);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if (g(mid) - p as f64) * ya > 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    let mut roots: Vec<f64> = roots.into_iter().map(frac).collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| circle_dist(*a, *b) < ROOT_TOL);
    roots
        .into_iter()
        .filter(|&x| class.contains(x))
        .filter(|&x| (1..q).all(|j| circle_dist(frac(lift_iter(f, x, j)), x) > ROOT_TOL))
        .map(|x| {
            let mut z = vec![x];
            (0..q)
                .map(|_| {
                    let p = MetricPoint::Torus(z.clone());
                    z = f.step_torus(&z);
                    p
                })
                .collect()
        })
        .collect()
}

fn covers(sys: &System, class: &NetClass, members: &[MetricPoint], delta: f64) -> bool {
    match sys {
        System::Shift(s) => shift_covers(s, members, delta),
        System::Lift(_) => {
            let mut xs: Vec<f64> = members.iter().map(|m| m.coords().expect("torus")[0]).collect();
            if xs.is_empty() {
                return false;
            }
            xs.sort_by(f64::total_cmp);
            match class {
                NetClass::Whole => {
                    let wrap = xs[0] + 1.0 - xs[xs.len() - 1];
                    wrap <= 2.0 * delta && xs.windows(2).all(|w| w[1] - w[0] <= 2.0 * delta)
                }
                NetClass::Boxes { boxes, boxes_per_axis } => boxes.iter().all(|&b| {
                    let c = (b as f64 + 0.5) / *boxes_per_axis as f64;
                    xs.iter().any(|&x| circle_dist(x, c) <= delta)
                }),
            }
        }
    }
}

/// Every admissible word of length A = ⌈log2 1/δ⌉ is a member prefix.
fn shift_covers(s: &ShiftSpace, members: &[MetricPoint], delta: f64) -> bool {
    let a = if delta >= 1.0 { 0 } else { cylinder_depth(delta) };
    let mut prefixes: Vec<Vec<u8>> = members.iter().map(|m| m.as_symbol().expect("symbol").word(0, a)).collect();
    prefixes.sort();
    match s.words(a, POOL_BUDGET) {
        Ok(words) => words.iter().all(|w| prefixes.binary_search(w).is_ok()),
        Err(_) => false,
    }
}

/// Shortest routes from every member, weights = steps spent before each hop.
fn all_routes(hops: &[Vec<(usize, usize)>]) -> Result<Vec<Vec<Route>>> {
    let m = hops.len();
    let mut table = Vec::with_capacity(m);
    for a in 0..m {
        let mut dist = vec![usize::MAX; m];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; m];
        let mut heap = BinaryHeap::new();
        dist[a] = 0;
        heap.push(Reverse((0usize, a)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &hops[u] {
                if d + w < dist[v] {
                    dist[v] = d + w;
                    prev[v] = Some((u, w));
                    heap.push(Reverse((d + w, v)));
                }
            }
        }
        let mut row = Vec::with_capacity(m);
        for b in 0..m {
            if dist[b] == usize::MAX {
                return Err(Error::Validation(format!("net member {b} is unreachable from member {a}")));
            }
            let mut members = vec![b];
            let mut steps = Vec::new();
            let mut cur = b;
            while let Some((u, w)) = prev[cur] {
                if cur == a {
                    break;
                }
                members.push(u);
                steps.push(w);
                cur = u;
            }
            members.reverse();
            steps.reverse();
            row.push(Route { members, steps });
        }
        table.push(row);
    }
    Ok(table)
}

pub fn build_periodic_net(sys: &System, class: &NetClass, delta: f64) -> Result<PeriodicNet> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    if let System::Shift(s) = sys {
        if !matches!(s.metric(), ShiftMetric::Cylinder) {
            return Err(Error::Unsupported("shift nets need the cylinder metric".into()));
        }
    }
    let mut orbits: Vec<Vec<MetricPoint>> = Vec::new();
    let mut members: Vec<MetricPoint> = Vec::new();
    let mut covered = false;
    for q in 1..=MAX_NET_PERIOD {
        for orbit in candidates(sys, class, q)? {
            let mut separated = true;
            for m in &members {
                if sys.distance(&orbit[0], m)? <= delta {
                    separated = false;
                    break;
                }
            }
            if separated {
                members.push(orbit[0].clone());
                orbits.push(orbit);
            }
        }
        if covers(sys, class, &members, delta) {
            covered = true;
            break;
        }
    }
    if !covered {
        return Err(Error::BudgetExhausted(format!(
            "periodic points of period <= {MAX_NET_PERIOD} do not cover the class at scale {delta}"
        )));
    }
    let periods: Vec<usize> = orbits.iter().map(Vec::len).collect();
    let m = members.len();
    let mut hops = vec![Vec::new(); m];
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            for t in 0..periods[a] {
                let img = &orbits[a][(t + 1) % periods[a]];
                if sys.distance(img, &members[b])? <= 2.0 * delta {
                    hops[a].push((b, t + 1));
                    break;
                }
            }
        }
    }
    let routes = all_routes(&hops)?;
    let net = PeriodicNet {
        delta,
        class: class.clone(),
        members,
        k_bound: m * periods.iter().copied().max().unwrap_or(1),
        periods,
        orbits,
        routes,
    };
    net.check(sys)?;
    Ok(net)
}

/// Periodic gluing through the net: segment orbits joined by route pseudo-orbits,
/// then shadowed periodically. Gaps are bounded by K; errors by the oracle's ε(2δ)
/// and re-checked against `spec.eps`, which must be at least 2δ.
pub fn gluing_from_shadowing(sys: &System, net: &PeriodicNet, spec: &SegmentSpec) -> Result<GluedOrbit> {
    spec.check(sys)?;
    let delta = net.delta;
    if spec.eps < 2.0 * delta {
        return invalid(format!("epsilon {} is below 2 delta = {}", spec.eps, 2.0 * delta));
    }
    if spec.segments[0].len == 0 {
        return invalid("the first segment must be nonempty");
    }
    let k = spec.segments.len();
    let mut pseudo: Vec<MetricPoint> = Vec::new();
    let mut gaps = Vec::with_capacity(k);
    for i in 0..k {
        let seg = &spec.segments[i];
        let mut x = seg.anchor.clone();
        for _ in 0..seg.len {
            let nx = sys.step(&x)?;
            pseudo.push(std::mem::replace(&mut x, nx));
        }
        // Where the pseudo-orbit would go next.
        let q = sys.step(pseudo.last().expect("first segment is nonempty"))?;
        let next = &spec.segments[(i + 1) % k].anchor;
        if sys.distance(&q, next)? <= 2.0 * delta {
            gaps.push(0);
            continue;
        }
        let a = net
            .nearest(sys, &q)?
            .ok_or_else(|| Error::InvalidParameter(format!("orbit end of segment {i} is not within delta of the net")))?;
        let b = net
            .nearest(sys, next)?
            .ok_or_else(|| Error::InvalidParameter(format!("anchor {} is not within delta of the net", (i + 1) % k)))?;
        let pts = net.route_points(a, b);
        gaps.push(pts.len());
        pseudo.extend(pts);
    }
    let sh = shadow(sys, &pseudo, 2.0 * delta, true)?;
    let mut g = GluedOrbit {
        point: sh.point,
        binary: sh.binary,
        offsets: offsets_from(spec, &gaps),
        gaps,
        period: Some(pseudo.len()),
        gap_bound: net.k_bound,
        errors: Vec::new(),
    };
    validate_glued(sys, spec, &mut g, spec.eps)?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_quarter_net() {
        let sys = System::Shift(ShiftSpace::full(2).unwrap());
        let net = build_periodic_net(&sys, &NetClass::Whole, 0.25).unwrap();
        assert_eq!(net.size(), 4);
        assert_eq!(net.k_bound, 8);
    }

    #[test]
    fn doubling_candidates_have_exact_period() {
        let sys = System::Lift(TorusLift::doubling());
        let c = candidates(&sys, &NetClass::Whole, 3).unwrap();
        assert_eq!(c.len(), 6);
        assert!(c.iter().all(|o| o.len() == 3));
    }
}
