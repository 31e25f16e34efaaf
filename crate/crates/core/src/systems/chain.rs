//! Chain recurrence on a uniform box grid of the torus.
//!
//! Box i has an edge to box j when the interval image of box i meets box j.
//! Recurrent SCCs whose boxes touch are merged: near a hyperbolic fixed point
//! the graph has a run of self-looped boxes that are not mutually reachable,
//! and at this resolution they cannot be told apart from the fixed point.

use serde::{Deserialize, Serialize};

use super::interval::Interval;
use super::torus::TorusLift;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Component {
    /// Flat box indices, sorted.
    pub boxes: Vec<usize>,
    pub isolated: bool,
    /// Smallest index distance (per-axis max, cyclic) to any other component.
    pub gap_to_rest: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridGraph {
    pub boxes_per_axis: usize,
    pub dim: usize,
    pub adjacency: Vec<Vec<usize>>,
    pub components: Vec<Component>,
    pub warning: Option<String>,
}

const MAX_BOXES: usize = 1 << 20;
const MAX_EDGES: usize = 1 << 26;

impl GridGraph {
    pub fn total_boxes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn recurrent_boxes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.components.iter().flat_map(|c| c.boxes.clone()).collect();
        v.sort_unstable();
        v
    }

    pub fn box_coords(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, self.boxes_per_axis, self.dim)
    }
}

pub fn chain_recurrence(f: &TorusLift, boxes: usize) -> Result<GridGraph> {
    if boxes < 8 {
        return invalid("chain recurrence needs at least 8 boxes per axis");
    }
    let d = f.dim();
    let total = boxes
        .checked_pow(d as u32)
        .filter(|&t| t <= MAX_BOXES)
        .ok_or_else(|| Error::BudgetExhausted(format!("{boxes}^{d} boxes exceed {MAX_BOXES}")))?;
    let h = 1.0 / boxes as f64;
    let mut adjacency = Vec::with_capacity(total);
    let mut edges = 0usize;
    for flat in 0..total {
        let idx = unflatten(flat, boxes, d);
        let cell: Vec<Interval> = idx
            .iter()
            .map(|&i| Interval::new(i as f64 * h, (i + 1) as f64 * h))
            .collect();
        let img = f.eval_interval(&cell);
        let ranges: Vec<Vec<usize>> = img.iter().map(|iv| hit_range(*iv, boxes)).collect();
        let count: usize = ranges.iter().map(|r| r.len()).product();
        edges += count;
        if edges > MAX_EDGES {
            return Err(Error::BudgetExhausted("box graph has too many edges".into()));
        }
        let mut out = Vec::with_capacity(count);
        product_indices(&ranges, boxes, &mut out);
        out.sort_unstable();
        out.dedup();
        adjacency.push(out);
    }
    let sccs = tarjan(&adjacency);
    let comps: Vec<Vec<usize>> = sccs
        .into_iter()
        .filter(|c| c.len() > 1 || adjacency[c[0]].binary_search(&c[0]).is_ok())
        .map(|mut c| {
            c.sort_unstable();
            c
        })
        .collect();
    let comps = merge_touching(comps, boxes, d);

    let mut components: Vec<Component> = Vec::with_capacity(comps.len());
    for (i, c) in comps.iter().enumerate() {
        let gap = comps
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, o)| set_gap(c, o, boxes, d))
            .min();
        components.push(Component {
            boxes: c.clone(),
            isolated: gap.is_none_or(|g| g >= 3),
            gap_to_rest: gap,
        });
    }
    let warning = if components.len() > 1 && components.iter().all(|c| !c.isolated) {
        Some("resolution too coarse to separate any components".to_string())
    } else {
        None
    };
    Ok(GridGraph {
        boxes_per_axis: boxes,
        dim: d,
        adjacency,
        components,
        warning,
    })
}

fn merge_touching(comps: Vec<Vec<usize>>, n: usize, d: usize) -> Vec<Vec<usize>> {
    let k = comps.len();
    let mut parent: Vec<usize> = (0..k).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..k {
        for j in i + 1..k {
            if set_gap(&comps[i], &comps[j], n, d) <= 1 {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, c) in comps.into_iter().enumerate() {
        let r = root(&mut parent, i);
        groups[r].extend(c);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|mut g| {
            g.sort_unstable();
            g
        })
        .collect();
    out.sort();
    out
}

/// Box indices (mod `n`) met by the closed interval.
fn hit_range(iv: Interval, n: usize) -> Vec<usize> {
    let nf = n as f64;
    // Box j = [j/n, (j+1)/n] meets [lo, hi] iff j/n <= hi and (j+1)/n >= lo.
    let lo = (iv.lo * nf).ceil() as i64 - 1;
    let hi = (iv.hi * nf).floor() as i64;
    if hi - lo + 1 >= n as i64 {
        return (0..n).collect();
    }
    (lo..=hi).map(|i| i.rem_euclid(n as i64) as usize).collect()
}

fn product_indices(ranges: &[Vec<usize>], n: usize, out: &mut Vec<usize>) {
    let d = ranges.len();
    let mut pos = vec![0usize; d];
    loop {
        let mut flat = 0;
        for j in (0..d).rev() {
            flat = flat * n + ranges[j][pos[j]];
        }
        out.push(flat);
        let mut j = 0;
        loop {
            if j == d {
                return;
            }
            pos[j] += 1;
            if pos[j] < ranges[j].len() {
                break;
            }
            pos[j] = 0;
            j += 1;
        }
    }
}

fn unflatten(mut flat: usize, n: usize, d: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(d);
    for _ in 0..d {
        v.push(flat % n);
        flat /= n;
    }
    v
}

fn set_gap(a: &[usize], b: &[usize], n: usize, d: usize) -> usize {
    let ua: Vec<Vec<usize>> = a.iter().map(|&x| unflatten(x, n, d)).collect();
    let ub: Vec<Vec<usize>> = b.iter().map(|&x| unflatten(x, n, d)).collect();
    let mut best = usize::MAX;
    for p in &ua {
        for q in &ub {
            let g = p
                .iter()
                .zip(q)
                .map(|(&x, &y)| {
                    let diff = x.abs_diff(y);
                    diff.min(n - diff)
                })
                .max()
                .unwrap_or(0);
            best = best.min(g);
        }
    }
    best
}

/// Strongly connected components, iterative Tarjan.
pub fn tarjan(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut counter = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        call.push((root, 0));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < adj[v].len() {
                let w = adj[v][top.1];
                top.1 += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("stack holds the component");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    out.push(comp);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tarjan_small_graph() {
        let adj = vec![vec![1], vec![2], vec![0], vec![2, 4], vec![]];
        let mut sccs: Vec<Vec<usize>> = tarjan(&adj)
            .into_iter()
            .map(|mut c| {
                c.sort();
                c
            })
            .collect();
        sccs.sort();
        assert_eq!(sccs, vec![vec![0, 1, 2], vec![3], vec![4]]);
    }

    #[test]
    fn irrational_rotation_is_one_component() {
        let g = chain_recurrence(&TorusLift::circle_sine(0.618_033_988_749_894_9, 0.0), 256).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].boxes.len(), 256);
    }

    #[test]
    fn north_south_map_has_two_isolated_components() {
        let g = chain_recurrence(&TorusLift::circle_sine(0.0, 0.05), 512).unwrap();
        assert_eq!(g.components.len(), 2);
        assert!(g.components.iter().all(|c| c.isolated));
        let has = |x: f64| {
            let b = (x * 512.0) as usize;
            g.components.iter().position(|c| c.boxes.contains(&b))
        };
        assert!(has(0.0).is_some() && has(0.5).is_some());
        assert_ne!(has(0.0), has(0.5));
    }

    #[test]
    fn doubling_is_one_component() {
        let g = chain_recurrence(&TorusLift::doubling(), 1024).unwrap();
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].boxes.len(), 1024);
    }
}
