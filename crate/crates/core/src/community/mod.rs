//! Weighted similarity graphs, modularity and community detection.

mod louvain;
mod walktrap;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SubjectId;

pub use louvain::{louvain, refine};
pub use walktrap::{walktrap, walktrap_levels};

/// Undirected weighted graph without self-loops; weights are clamped to be non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    nodes: Vec<SubjectId>,
    weights: Vec<f64>,
}

impl SimilarityGraph {
    pub fn new(nodes: Vec<SubjectId>) -> Self {
        let n = nodes.len();
        Self { nodes, weights: vec![0.0; n * n] }
    }

    /// Builds a graph from a weight function evaluated on each unordered pair `i < j`.
    pub fn from_fn(nodes: Vec<SubjectId>, mut w: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut g = Self::new(nodes);
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                g.set_weight(i, j, w(i, j))?;
            }
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[SubjectId] {
        &self.nodes
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == id)
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.len() + j]
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        if w.is_nan() {
            return Err(Error::param("edge weight is NaN"));
        }
        if i == j {
            return Err(Error::param("self-loops are not allowed"));
        }
        let n = self.len();
        let w = w.max(0.0);
        self.weights[i * n + j] = w;
        self.weights[j * n + i] = w;
        Ok(())
    }

    pub fn degree(&self, i: usize) -> f64 {
        let n = self.len();
        self.weights[i * n..(i + 1) * n].iter().sum()
    }

    /// Sum of weights over unordered pairs.
    pub fn total_weight(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                s += self.weight(i, j);
            }
        }
        s
    }

    /// Mean weight over all unordered pairs of `members`.
    pub fn mean_weight(&self, members: &[usize]) -> Option<f64> {
        let mut s = 0.0;
        let mut c = 0usize;
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                s += self.weight(i, j);
                c += 1;
            }
        }
        (c > 0).then(|| s / c as f64)
    }

    /// Induced subgraph over `members`, in the given order.
    pub fn subgraph(&self, members: &[usize]) -> Self {
        let nodes = members.iter().map(|&i| self.nodes[i].clone()).collect();
        let mut g = Self::new(nodes);
        for (a, &i) in members.iter().enumerate() {
            for (b, &j) in members.iter().enumerate() {
                if a != b {
                    g.weights[a * members.len() + b] = self.weight(i, j);
                }
            }
        }
        g
    }

    /// Weighted sum `(1 - w) * self + w * other` over the same node list.
    pub fn blend(&self, other: &Self, w: f64) -> Result<Self> {
        if self.nodes != other.nodes {
            return Err(Error::param("blended graphs must share nodes"));
        }
        let weights =
            self.weights.iter().zip(&other.weights).map(|(a, b)| (1.0 - w) * a + w * b).collect();
        Ok(Self { nodes: self.nodes.clone(), weights })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { nodes: self.nodes.clone(), weights: self.weights.iter().map(|w| w * factor).collect() }
    }
}

/// Communities as lists of node indices, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    communities: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut communities: Vec<Vec<usize>>) -> Self {
        communities.retain(|c| !c.is_empty());
        for c in &mut communities {
            c.sort_unstable();
            c.dedup();
        }
        communities.sort();
        Self { communities }
    }

    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            map.entry(*l).or_default().push(i);
        }
        Self::new(map.into_values().collect())
    }

    pub fn singletons(n: usize) -> Self {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    pub fn whole(n: usize) -> Self {
        Self::new(vec![(0..n).collect()])
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn labels(&self, n: usize) -> Vec<usize> {
        let mut l = vec![usize::MAX; n];
        for (c, members) in self.communities.iter().enumerate() {
            for &i in members {
                l[i] = c;
            }
        }
        l
    }
}

/// Weighted Newman modularity of `partition` on `graph`.
pub fn modularity(graph: &SimilarityGraph, partition: &Partition) -> Result<f64> {
    let two_w = 2.0 * graph.total_weight();
    if !(two_w > 0.0) {
        return Err(Error::DegenerateGraph("graph has zero total weight".into()));
    }
    let mut q = 0.0;
    for members in partition.communities() {
        let mut inner = 0.0;
        let mut deg = 0.0;
        for &i in members {
            deg += graph.degree(i);
            for &j in members {
                if i != j {
                    inner += graph.weight(i, j);
                }
            }
        }
        q += inner / two_w - (deg / two_w).powi(2);
    }
    Ok(q)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Walktrap,
    Louvain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommunityConfig {
    pub algorithm: Algorithm,
    pub walk_length: usize,
    /// Follow the chosen algorithm with greedy single-vertex moves.
    pub refine: bool,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self { algorithm: Algorithm::Walktrap, walk_length: 4, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub partition: Partition,
    pub modularity: f64,
}

/// Runs the chosen algorithm. A graph without edges yields singletons with modularity 0.
pub fn detect_communities(graph: &SimilarityGraph, cfg: &CommunityConfig) -> Detection {
    if !(graph.total_weight() > 0.0) {
        return Detection { partition: Partition::singletons(graph.len()), modularity: 0.0 };
    }
    let q_of = |p: &Partition| modularity(graph, p).expect("graph has positive weight");
    let candidates = match (cfg.algorithm, cfg.refine) {
        (Algorithm::Walktrap, false) => vec![walktrap(graph, cfg.walk_length)],
        (Algorithm::Walktrap, true) => walktrap_levels(graph, cfg.walk_length)
            .into_iter()
            .rev()
            .map(|p| louvain::refine(graph, &p))
            .collect(),
        (Algorithm::Louvain, false) => vec![louvain(graph)],
        (Algorithm::Louvain, true) => vec![louvain::refine(graph, &louvain(graph))],
    };
    // Coarsest candidate wins ties.
    let mut partition = candidates[0].clone();
    let mut q = q_of(&partition);
    for p in &candidates[1..] {
        let pq = q_of(p);
        if pq > q + 1e-12 {
            partition = p.clone();
            q = pq;
        }
    }
    Detection { partition, modularity: q }
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    node_i: String,
    node_j: String,
    weight: f64,
}

/// Reads a `node_i,node_j,weight` edge list; nodes are ordered lexicographically.
pub fn read_edge_list(path: &Path) -> Result<SimilarityGraph> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let rows: Vec<EdgeRow> = rdr
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::format(path, e))?;
    let mut ids: Vec<String> = rows.iter().flat_map(|r| [r.node_i.clone(), r.node_j.clone()]).collect();
    ids.sort();
    ids.dedup();
    let mut g = SimilarityGraph::new(ids);
    for r in rows {
        let (i, j) = (g.index_of(&r.node_i).unwrap(), g.index_of(&r.node_j).unwrap());
        g.set_weight(i, j, r.weight).map_err(|e| Error::format(path, e))?;
    }
    Ok(g)
}

pub fn write_edge_list(path: &Path, graph: &SimilarityGraph) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::format(path, e))?;
    for i in 0..graph.len() {
        for j in i + 1..graph.len() {
            w.serialize(EdgeRow {
                node_i: graph.nodes[i].clone(),
                node_j: graph.nodes[j].clone(),
                weight: graph.weight(i, j),
            })
            .map_err(|e| Error::format(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub communities: Vec<Vec<SubjectId>>,
    pub modularity: f64,
}

impl PartitionJson {
    pub fn new(graph: &SimilarityGraph, d: &Detection) -> Self {
        Self {
            communities: d
                .partition
                .communities()
                .iter()
                .map(|c| c.iter().map(|&i| graph.nodes()[i].clone()).collect())
                .collect(),
            modularity: d.modularity,
        }
    }
}
