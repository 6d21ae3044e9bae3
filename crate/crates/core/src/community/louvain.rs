use std::collections::BTreeMap;

use super::{Partition, SimilarityGraph};

const MIN_GAIN: f64 = 1e-12;
/// Largest union of two communities re-split by exhaustive bisection.
const MAX_REBISECT: usize = 12;

/// Local moving on a dense weighted graph with self-loops, starting from `comm`
/// (labels below `n`). Returns compact labels (numbered by first appearance) and
/// whether any vertex changed community.
fn local_moving(w: &[Vec<f64>], mut comm: Vec<usize>, allow_new: bool) -> (Vec<usize>, bool) {
    let n = w.len();
    let two_m: f64 = w.iter().map(|r| r.iter().sum::<f64>()).sum();
    let k: Vec<f64> = w.iter().map(|r| r.iter().sum()).collect();
    let mut tot = vec![0.0; n];
    for (i, &c) in comm.iter().enumerate() {
        tot[c] += k[i];
    }
    let mut moved = false;
    loop {
        let mut improved = false;
        for i in 0..n {
            let own = comm[i];
            tot[own] -= k[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(own, 0.0);
            for j in 0..n {
                if j != i && w[i][j] > 0.0 {
                    *links.entry(comm[j]).or_insert(0.0) += w[i][j];
                }
            }
            let gain = |c: usize, kic: f64| kic - tot[c] * k[i] / two_m;
            let mut best = own;
            let mut best_gain = gain(own, links[&own]);
            if allow_new {
                // An empty label, if any, stands for a fresh singleton community.
                if let Some(empty) = (0..n).find(|&c| tot[c] == 0.0 && !comm.contains(&c)) {
                    links.entry(empty).or_insert(0.0);
                }
            }
            for (&c, &kic) in &links {
                let g = gain(c, kic);
                if g > best_gain + MIN_GAIN {
                    best = c;
                    best_gain = g;
                }
            }
            comm[i] = best;
            tot[best] += k[i];
            if best != own {
                improved = true;
                moved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut labels = Vec::with_capacity(n);
    for c in comm {
        let next = remap.len();
        labels.push(*remap.entry(c).or_insert(next));
    }
    (labels, moved)
}

fn aggregate(w: &[Vec<f64>], labels: &[usize]) -> Vec<Vec<f64>> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut out = vec![vec![0.0; k]; k];
    for (i, row) in w.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[labels[i]][labels[j]] += v;
        }
    }
    out
}

/// Deterministic Louvain modularity optimisation.
pub fn louvain(graph: &SimilarityGraph) -> Partition {
    let n = graph.len();
    if !(graph.total_weight() > 0.0) {
        return Partition::singletons(n);
    }
    let mut w: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| graph.weight(i, j)).collect()).collect();
    let mut membership: Vec<usize> = (0..n).collect();
    loop {
        let (labels, moved) = local_moving(&w, (0..w.len()).collect(), false);
        if !moved {
            break;
        }
        for m in &mut membership {
            *m = labels[*m];
        }
        w = aggregate(&w, &labels);
    }
    Partition::from_labels(&membership)
}

/// Alternates greedy single-vertex moves, community merges and pairwise
/// re-bisection from `start` until none raises modularity.
pub fn refine(graph: &SimilarityGraph, start: &Partition) -> Partition {
    let n = graph.len();
    if !(graph.total_weight() > 0.0) {
        return start.clone();
    }
    let w: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| graph.weight(i, j)).collect()).collect();
    let two_m: f64 = w.iter().map(|r| r.iter().sum::<f64>()).sum();
    let mut labels = start.labels(n);
    loop {
        let (moved_labels, moved) = local_moving(&w, labels, true);
        labels = moved_labels;
        let merged = merge_pass(&w, &mut labels, two_m);
        let split = rebisect_pass(&w, &mut labels, two_m);
        if !moved && !merged && !split {
            break;
        }
    }
    Partition::from_labels(&labels)
}

/// Repeatedly merges the pair of communities with the largest positive modularity gain.
fn merge_pass(w: &[Vec<f64>], labels: &mut [usize], two_m: f64) -> bool {
    let mut any = false;
    loop {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let between = aggregate(w, labels);
        let tot: Vec<f64> = between.iter().map(|r| r.iter().sum()).collect();
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..k {
            for b in a + 1..k {
                // Gain of merging a and b, scaled by 2m.
                let gain = 2.0 * between[a][b] - 2.0 * tot[a] * tot[b] / two_m;
                if gain > MIN_GAIN && best.is_none_or(|(_, _, g)| gain > g + MIN_GAIN) {
                    best = Some((a, b, gain));
                }
            }
        }
        let Some((a, b, _)) = best else { return any };
        any = true;
        for l in labels.iter_mut() {
            if *l == b {
                *l = a;
            } else if *l > b {
                *l -= 1;
            }
        }
    }
}

/// Internal weight minus expected weight of a vertex set, scaled by 2m.
fn set_score(w: &[Vec<f64>], members: &[usize], two_m: f64) -> f64 {
    let mut inside = 0.0;
    let mut tot = 0.0;
    for &i in members {
        tot += w[i].iter().sum::<f64>();
        for &j in members {
            inside += w[i][j];
        }
    }
    inside - tot * tot / two_m
}

/// Re-splits each small community, and the union of each pair of them, by the
/// best bisection (possibly empty), keeping any split that raises modularity.
fn rebisect_pass(w: &[Vec<f64>], labels: &mut [usize], two_m: f64) -> bool {
    let mut any = false;
    'outer: loop {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let members: Vec<Vec<usize>> =
            (0..k).map(|c| (0..labels.len()).filter(|&i| labels[i] == c).collect()).collect();
        let none: Vec<usize> = Vec::new();
        for a in 0..k {
            // b == k pairs community a with an empty one, so a alone may split.
            for b in a + 1..=k {
                let other = if b < k { &members[b] } else { &none };
                let union: Vec<usize> = members[a].iter().chain(other).copied().collect();
                if union.len() > MAX_REBISECT || union.len() < 2 {
                    continue;
                }
                let current = set_score(w, &members[a], two_m) + set_score(w, other, two_m);
                let rest = &union[1..];
                let mut best: Option<(u32, f64)> = None;
                for mask in 0u32..1 << rest.len() {
                    let (mut s, mut t) = (vec![union[0]], Vec::new());
                    for (bit, &v) in rest.iter().enumerate() {
                        if mask >> bit & 1 == 1 { s.push(v) } else { t.push(v) }
                    }
                    let score = set_score(w, &s, two_m) + set_score(w, &t, two_m);
                    if score > current + MIN_GAIN && best.is_none_or(|(_, b)| score > b + MIN_GAIN) {
                        best = Some((mask, score));
                    }
                }
                if let Some((mask, _)) = best {
                    for (bit, &v) in rest.iter().enumerate() {
                        labels[v] = if mask >> bit & 1 == 1 { a } else { b };
                    }
                    labels[union[0]] = a;
                    compact(labels);
                    any = true;
                    continue 'outer;
                }
            }
        }
        return any;
    }
}

/// Renumbers labels by first appearance, dropping empty communities.
fn compact(labels: &mut [usize]) {
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    for l in labels.iter_mut() {
        let next = remap.len();
        *l = *remap.entry(*l).or_insert(next);
    }
}
