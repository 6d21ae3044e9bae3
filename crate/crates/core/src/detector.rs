//! Staged, modularity-gated group detection over refined pair features.
//!
//! Subjects with proximity data are first clustered on the proximity graph.
//! Strongly structured proximity leads to per-cluster acoustic detection,
//! ambiguous proximity to a sweep over blended proximity/acoustic graphs, and
//! weak proximity to rejection unless the population reads as one group.
//! Subjects without proximity data are grouped on the acoustic graph alone.

use serde::{Deserialize, Serialize};

use crate::community::{detect_communities, modularity, CommunityConfig, Partition, SimilarityGraph};
use crate::error::{Error, Result};
use crate::pipeline::FeatureSet;
use crate::SubjectId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub delta_p1: f64,
    pub delta_p2: f64,
    pub delta_alpha: f64,
    pub weight_grid: Vec<f64>,
    pub window_t_s: f64,
    /// Minimum mean pair weight for a set to count as one cohesive group.
    pub single_group_floor: f64,
    /// Minimum acoustic weight for a two-subject group.
    pub pair_floor: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            delta_p1: 0.30,
            delta_p2: 0.10,
            delta_alpha: 0.10,
            weight_grid: (0..=10).map(|k| k as f64 / 10.0).collect(),
            window_t_s: 900.0,
            single_group_floor: 0.2,
            pair_floor: 0.3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.delta_p2 && self.delta_p2 < self.delta_p1 && self.delta_p1 <= 1.0) {
            return Err(Error::param("thresholds must satisfy 0 <= delta_p2 < delta_p1 <= 1"));
        }
        if self.weight_grid.iter().any(|w| !(0.0..=1.0).contains(w))
            || !self.weight_grid.contains(&0.0)
            || !self.weight_grid.contains(&1.0)
        {
            return Err(Error::param("weight grid must lie in [0, 1] and contain both endpoints"));
        }
        if !(self.window_t_s > 0.0) {
            return Err(Error::param("window length must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionPath {
    #[serde(rename = "proximity+audio")]
    ProximityAudio,
    #[serde(rename = "weighted-combined")]
    WeightedCombined,
    #[serde(rename = "audio-only")]
    AudioOnly,
    #[serde(rename = "rejected")]
    Rejected,
}

impl DecisionPath {
    pub fn label(&self) -> &'static str {
        match self {
            DecisionPath::ProximityAudio => "proximity+audio",
            DecisionPath::WeightedCombined => "weighted-combined",
            DecisionPath::AudioOnly => "audio-only",
            DecisionPath::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageModularity {
    pub stage: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    /// Disjoint groups; unassigned subjects appear as singletons.
    pub groups: Vec<Vec<SubjectId>>,
    /// Modularity of the final partition on the graph that decided it.
    pub modularity: f64,
    pub modularities: Vec<StageModularity>,
    pub decision_path: DecisionPath,
    /// Name of the branch that produced the result.
    pub branch: String,
    /// Blend weight chosen by the combined sweep, when it ran.
    pub best_weight: Option<f64>,
}

impl GroupResult {
    fn canonical(mut self) -> Self {
        for g in &mut self.groups {
            g.sort();
        }
        self.groups.sort();
        self
    }
}

/// Result of gating one partition: accepted communities and leftover singletons.
struct Gated {
    groups: Vec<Vec<usize>>,
    accepted: bool,
}

fn cohesive(graph: &SimilarityGraph, members: &[usize], cfg: &DetectorConfig) -> bool {
    match members.len() {
        0 | 1 => false,
        2 => graph.weight(members[0], members[1]) >= cfg.pair_floor,
        _ => graph.mean_weight(members).unwrap_or(0.0) >= cfg.single_group_floor,
    }
}

fn singletons(members: impl IntoIterator<Item = usize>) -> Vec<Vec<usize>> {
    members.into_iter().map(|i| vec![i]).collect()
}

/// Accepts a structured partition's cohesive communities, falling back to the single-group rule.
fn gate(graph: &SimilarityGraph, partition: &Partition, q: f64, threshold: f64, cfg: &DetectorConfig) -> Gated {
    let n = graph.len();
    if partition.len() > 1 && q >= threshold {
        let mut groups = Vec::new();
        let mut any = false;
        for c in partition.communities() {
            if cohesive(graph, c, cfg) {
                groups.push(c.clone());
                any = true;
            } else {
                groups.extend(singletons(c.iter().copied()));
            }
        }
        if any {
            return Gated { groups, accepted: true };
        }
    }
    single_group_rule(graph, cfg).unwrap_or(Gated { groups: singletons(0..n), accepted: false })
}

fn single_group_rule(graph: &SimilarityGraph, cfg: &DetectorConfig) -> Option<Gated> {
    let all: Vec<usize> = (0..graph.len()).collect();
    let accept = match all.len() {
        0 | 1 => false,
        2 => graph.weight(0, 1) >= cfg.pair_floor,
        _ => graph.mean_weight(&all).unwrap_or(0.0) > cfg.single_group_floor,
    };
    accept.then(|| Gated { groups: vec![all], accepted: true })
}

fn q_or_zero(graph: &SimilarityGraph, groups: &[Vec<usize>]) -> f64 {
    modularity(graph, &Partition::new(groups.to_vec())).unwrap_or(0.0)
}

fn to_ids(ids: &[SubjectId], members: &[usize], groups: Vec<Vec<usize>>) -> Vec<Vec<SubjectId>> {
    groups.into_iter().map(|g| g.into_iter().map(|i| ids[members[i]].clone()).collect()).collect()
}

fn rejected(f: &FeatureSet, members: &[usize], modularities: Vec<StageModularity>, branch: &str) -> GroupResult {
    GroupResult {
        groups: members.iter().map(|&i| vec![f.subjects[i].clone()]).collect(),
        modularity: 0.0,
        modularities,
        decision_path: DecisionPath::Rejected,
        branch: branch.into(),
        best_weight: None,
    }
    .canonical()
}

/// Proximity-available branch over `members` (indices into `f`).
pub fn proximity_available(
    f: &FeatureSet,
    members: &[usize],
    cfg: &DetectorConfig,
    community: &CommunityConfig,
) -> GroupResult {
    let prox = f.proximity.graph(&f.subjects, members);
    let acoustic = f.acoustic.graph(&f.subjects, members);
    let run = |g: &SimilarityGraph| detect_communities(g, community);
    let mut stages = Vec::new();

    let dp = run(&prox);
    let mp = dp.modularity;
    stages.push(StageModularity { stage: "proximity".into(), value: mp });

    let structured = dp.partition.len() > 1;
    if structured && mp >= cfg.delta_p1 {
        let clusters: Vec<Vec<usize>> = gate(&prox, &dp.partition, mp, cfg.delta_p1, cfg).groups;
        return cluster_acoustic(f, members, &acoustic, clusters, stages, cfg, community, "strong proximity");
    }
    if structured && mp >= cfg.delta_p2 {
        return combined_sweep(f, members, &prox, &acoustic, stages, cfg, community);
    }
    match single_group_rule(&prox, cfg) {
        Some(_) => {
            let whole = vec![(0..members.len()).collect()];
            cluster_acoustic(f, members, &acoustic, whole, stages, cfg, community, "co-located population")
        }
        None => rejected(f, members, stages, "proximity insignificance"),
    }
}

#[allow(clippy::too_many_arguments)]
fn cluster_acoustic(
    f: &FeatureSet,
    members: &[usize],
    acoustic: &SimilarityGraph,
    clusters: Vec<Vec<usize>>,
    mut stages: Vec<StageModularity>,
    cfg: &DetectorConfig,
    community: &CommunityConfig,
    branch: &str,
) -> GroupResult {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut any = false;
    for (k, cluster) in clusters.iter().enumerate() {
        if cluster.len() < 3 {
            if cohesive(acoustic, cluster, cfg) {
                groups.push(cluster.clone());
                any = true;
            } else {
                groups.extend(singletons(cluster.iter().copied()));
            }
            continue;
        }
        let sub = acoustic.subgraph(cluster);
        let d = detect_communities(&sub, community);
        stages.push(StageModularity { stage: format!("acoustic[{k}]"), value: d.modularity });
        let gated = gate(&sub, &d.partition, d.modularity, cfg.delta_alpha, cfg);
        any |= gated.accepted;
        groups.extend(gated.groups.into_iter().map(|g| g.into_iter().map(|i| cluster[i]).collect::<Vec<_>>()));
    }
    if !any {
        return rejected(f, members, stages, branch);
    }
    GroupResult {
        modularity: q_or_zero(acoustic, &groups),
        groups: to_ids(&f.subjects, members, groups),
        modularities: stages,
        decision_path: DecisionPath::ProximityAudio,
        branch: branch.into(),
        best_weight: None,
    }
    .canonical()
}

fn combined_sweep(
    f: &FeatureSet,
    members: &[usize],
    prox: &SimilarityGraph,
    acoustic: &SimilarityGraph,
    mut stages: Vec<StageModularity>,
    cfg: &DetectorConfig,
    community: &CommunityConfig,
) -> GroupResult {
    let mut grid = cfg.weight_grid.clone();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let mut best: Option<(f64, SimilarityGraph, crate::community::Detection)> = None;
    for &w in &grid {
        let g = prox.blend(acoustic, w).expect("same node list");
        let d = detect_communities(&g, community);
        if best.as_ref().is_none_or(|(_, _, b)| d.modularity > b.modularity + 1e-12) {
            best = Some((w, g, d));
        }
    }
    let (w, g, d) = best.expect("grid is non-empty");
    stages.push(StageModularity { stage: format!("combined[w={w:.2}]"), value: d.modularity });
    let gated = gate(&g, &d.partition, d.modularity, cfg.delta_alpha, cfg);
    if !gated.accepted {
        return rejected(f, members, stages, "ambiguous proximity");
    }
    GroupResult {
        modularity: q_or_zero(&g, &gated.groups),
        groups: to_ids(&f.subjects, members, gated.groups),
        modularities: stages,
        decision_path: DecisionPath::WeightedCombined,
        branch: "ambiguous proximity".into(),
        best_weight: Some(w),
    }
    .canonical()
}

/// Audio-only branch over `members`.
pub fn proximity_not_available(
    f: &FeatureSet,
    members: &[usize],
    cfg: &DetectorConfig,
    community: &CommunityConfig,
) -> GroupResult {
    let acoustic = f.acoustic.graph(&f.subjects, members);
    let d = detect_communities(&acoustic, community);
    let stages = vec![StageModularity { stage: "acoustic".into(), value: d.modularity }];
    let gated = gate(&acoustic, &d.partition, d.modularity, cfg.delta_alpha, cfg);
    if !gated.accepted {
        return rejected(f, members, stages, "audio influence");
    }
    GroupResult {
        modularity: q_or_zero(&acoustic, &gated.groups),
        groups: to_ids(&f.subjects, members, gated.groups),
        modularities: stages,
        decision_path: DecisionPath::AudioOnly,
        branch: "audio influence".into(),
        best_weight: None,
    }
    .canonical()
}

/// Routes subjects by proximity availability and merges both branch results.
pub fn detect(f: &FeatureSet, cfg: &DetectorConfig, community: &CommunityConfig) -> Result<GroupResult> {
    cfg.validate()?;
    if f.len() < 2 {
        return Err(Error::InsufficientPopulation(format!("{} subject(s); need at least 2", f.len())));
    }
    let mut with: Vec<usize> = (0..f.len()).filter(|&i| f.has_proximity[i]).collect();
    let mut without: Vec<usize> = (0..f.len()).filter(|&i| !f.has_proximity[i]).collect();
    // A lone subject with scans has nobody to compare proximity with.
    if with.len() == 1 {
        without.append(&mut with);
        without.sort_unstable();
    }
    let mut parts = Vec::new();
    if !with.is_empty() {
        parts.push(proximity_available(f, &with, cfg, community));
    }
    match without.len() {
        0 => {}
        1 => parts.push(rejected(f, &without, Vec::new(), "audio influence")),
        _ => parts.push(proximity_not_available(f, &without, cfg, community)),
    }
    let lead = parts
        .iter()
        .find(|p| p.decision_path != DecisionPath::Rejected)
        .unwrap_or(&parts[0])
        .clone();
    let mut out = GroupResult {
        groups: parts.iter().flat_map(|p| p.groups.clone()).collect(),
        modularities: parts.iter().flat_map(|p| p.modularities.clone()).collect(),
        ..lead
    };
    if parts.len() > 1 {
        out.branch = parts.iter().map(|p| p.branch.as_str()).collect::<Vec<_>>().join(" / ");
    }
    Ok(out.canonical())
}
