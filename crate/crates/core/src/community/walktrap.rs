use super::{modularity, Partition, SimilarityGraph};

struct Community {
    members: Vec<usize>,
    prob: Vec<f64>,
}

/// Agglomerative random-walk clustering with walks of length `t`.
///
/// The dendrogram is cut where modularity on the input graph peaks; ties prefer
/// fewer communities.
pub fn walktrap(graph: &SimilarityGraph, t: usize) -> Partition {
    let n = graph.len();
    if n == 0 {
        return Partition::new(Vec::new());
    }
    if !(graph.total_weight() > 0.0) {
        return Partition::singletons(n);
    }
    let mut best = Partition::singletons(n);
    let mut best_q = f64::NEG_INFINITY;
    for p in walktrap_levels(graph, t) {
        let q = modularity(graph, &p).expect("positive weight");
        if q >= best_q - 1e-12 {
            best_q = best_q.max(q);
            best = p;
        }
    }
    best
}

/// Every level of the Walktrap dendrogram, from singletons to the last possible merge.
///
/// Each vertex gets a self-loop weighted by the mean of its incident edges, and
/// only communities joined by an edge are merged.
pub fn walktrap_levels(graph: &SimilarityGraph, t: usize) -> Vec<Partition> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }

    let mut adj = vec![vec![0.0; n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 0..n {
            let w = if i == j { 0.0 } else { graph.weight(i, j) };
            row[j] = w;
            if w > 0.0 {
                sum += w;
                count += 1;
            }
        }
        row[i] = if count > 0 { sum / count as f64 } else { 1.0 };
    }
    let degree: Vec<f64> = adj.iter().map(|r| r.iter().sum()).collect();

    let walk = |start: usize| {
        let mut v = vec![0.0; n];
        v[start] = 1.0;
        for _ in 0..t {
            let mut next = vec![0.0; n];
            for (i, &vi) in v.iter().enumerate() {
                if vi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    next[j] += vi * adj[i][j] / degree[i];
                }
            }
            v = next;
        }
        v
    };

    let mut comms: Vec<Option<Community>> =
        (0..n).map(|i| Some(Community { members: vec![i], prob: walk(i) })).collect();

    let distance = |a: &Community, b: &Community| {
        let r2: f64 = a
            .prob
            .iter()
            .zip(&b.prob)
            .zip(&degree)
            .map(|((x, y), d)| (x - y).powi(2) / d)
            .sum();
        let (sa, sb) = (a.members.len() as f64, b.members.len() as f64);
        sa * sb / (sa + sb) * r2 / n as f64
    };
    let adjacent = |a: &Community, b: &Community| {
        a.members.iter().any(|&i| b.members.iter().any(|&j| graph.weight(i, j) > 0.0))
    };

    let snapshot = |comms: &[Option<Community>]| {
        Partition::new(comms.iter().flatten().map(|c| c.members.clone()).collect())
    };
    let mut levels = vec![snapshot(&comms)];

    loop {
        let mut choice: Option<(usize, usize, f64)> = None;
        for a in 0..comms.len() {
            let Some(ca) = &comms[a] else { continue };
            for b in a + 1..comms.len() {
                let Some(cb) = &comms[b] else { continue };
                if !adjacent(ca, cb) {
                    continue;
                }
                let d = distance(ca, cb);
                if choice.is_none_or(|(_, _, bd)| d < bd * (1.0 - 1e-12)) {
                    choice = Some((a, b, d));
                }
            }
        }
        let Some((a, b, _)) = choice else { break };
        let ca = comms[a].take().expect("active");
        let cb = comms[b].take().expect("active");
        let (sa, sb) = (ca.members.len() as f64, cb.members.len() as f64);
        let prob = ca.prob.iter().zip(&cb.prob).map(|(x, y)| (sa * x + sb * y) / (sa + sb)).collect();
        let mut members = ca.members;
        members.extend(cb.members);
        comms.push(Some(Community { members, prob }));

        levels.push(snapshot(&comms));
    }
    levels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::tests::{blocks, ids};

    #[test]
    fn separates_weakly_linked_cliques() {
        let g = blocks(&[4, 4], 1.0, 0.05);
        let p = walktrap(&g, 4);
        assert_eq!(p.communities(), &[vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    }

    #[test]
    fn uniform_graph_stays_whole() {
        let g = blocks(&[5], 0.6, 0.0);
        assert_eq!(walktrap(&g, 4), Partition::whole(5));
    }

    #[test]
    fn disconnected_components_never_merge() {
        let mut g = SimilarityGraph::new(ids(5));
        g.set_weight(0, 1, 1.0).unwrap();
        g.set_weight(2, 3, 1.0).unwrap();
        let p = walktrap(&g, 4);
        assert_eq!(p.communities(), &[vec![0, 1], vec![2, 3], vec![4]]);
    }
}
