//! Audio-fingerprint baselines: dominant-frequency Jaccard matching and 16-bit spectrogram fingerprints.

mod audiomatch;
mod next2me;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use audiomatch::{audiomatch_similarity, hamming, AudioMatchConfig};
pub use next2me::{next2me_similarity, Next2MeConfig};

use crate::community::{detect_communities, Algorithm, CommunityConfig};
use crate::detector::{DecisionPath, GroupResult, StageModularity};
use crate::error::{Error, Result};
use crate::pipeline::{AlignedPair, PairMatrix, ProximitySource};
use crate::SubjectId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineMethod {
    Next2Me,
    AudioMatch,
}

impl BaselineMethod {
    pub fn label(&self) -> &'static str {
        match self {
            BaselineMethod::Next2Me => "Next2Me",
            BaselineMethod::AudioMatch => "AudioMatch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub next2me: Next2MeConfig,
    pub audiomatch: AudioMatchConfig,
    /// Pairs whose mean proximity similarity falls below this are not linked.
    pub proximity_min_similarity: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            next2me: Next2MeConfig::default(),
            audiomatch: AudioMatchConfig::default(),
            proximity_min_similarity: 1.0 - 10.0 / 30.0,
        }
    }
}

/// Per-window baseline similarity for one subject pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintSeries {
    pub subject_i: SubjectId,
    pub subject_j: SubjectId,
    pub method: BaselineMethod,
    pub values: Vec<Option<f64>>,
}

impl FingerprintSeries {
    pub fn mean(&self) -> Option<f64> {
        let v: Vec<f64> = self.values.iter().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn fingerprint_series(method: BaselineMethod, pair: &AlignedPair, cfg: &BaselineConfig) -> Result<FingerprintSeries> {
    let values = match method {
        BaselineMethod::Next2Me => next2me_similarity(&pair.first, &pair.second, &cfg.next2me)?,
        BaselineMethod::AudioMatch => audiomatch_similarity(&pair.first, &pair.second, &cfg.audiomatch)?,
    };
    Ok(FingerprintSeries {
        subject_i: pair.first.subject_id.clone(),
        subject_j: pair.second.subject_id.clone(),
        method,
        values,
    })
}

/// Pairwise baseline graph weights: mean window similarity, cut where proximity says the pair is apart.
pub fn baseline_matrix(
    method: BaselineMethod,
    subjects: &[SubjectId],
    aligned: &[AlignedPair],
    proximity: &dyn ProximitySource,
    cfg: &BaselineConfig,
) -> Result<(PairMatrix, bool)> {
    let weights: Vec<(Option<f64>, bool)> = aligned
        .par_iter()
        .map(|p| {
            let audio = fingerprint_series(method, p, cfg)?.mean();
            let (a, b) = (&subjects[p.i], &subjects[p.j]);
            let mut filtered = false;
            let mut w = audio;
            if proximity.available(a) && proximity.available(b) {
                filtered = true;
                if let Some(series) = proximity.series(a, b)? {
                    if !series.is_empty() {
                        let f = series.iter().sum::<f64>() / series.len() as f64;
                        if f < cfg.proximity_min_similarity {
                            w = Some(0.0);
                        }
                    }
                }
            }
            Ok((w, filtered))
        })
        .collect::<Result<_>>()?;
    let mut m = PairMatrix::new(subjects.len());
    let mut any_proximity = false;
    for (p, (w, f)) in aligned.iter().zip(weights) {
        m.set(p.i, p.j, w);
        any_proximity |= f;
    }
    Ok((m, any_proximity))
}

/// Groups subjects with a baseline similarity graph; the partition is taken as is.
pub fn baseline_detect(
    method: BaselineMethod,
    subjects: &[SubjectId],
    aligned: &[AlignedPair],
    proximity: &dyn ProximitySource,
    cfg: &BaselineConfig,
    community: &CommunityConfig,
) -> Result<GroupResult> {
    if subjects.len() < 2 {
        return Err(Error::InsufficientPopulation(format!("{} subject(s); need at least 2", subjects.len())));
    }
    let (m, any_proximity) = baseline_matrix(method, subjects, aligned, proximity, cfg)?;
    let all: Vec<usize> = (0..subjects.len()).collect();
    let graph = m.graph(subjects, &all);
    let algorithm = match method {
        BaselineMethod::Next2Me => Algorithm::Louvain,
        BaselineMethod::AudioMatch => community.algorithm,
    };
    let d = detect_communities(&graph, &CommunityConfig { algorithm, ..community.clone() });
    let mut groups: Vec<Vec<SubjectId>> = d
        .partition
        .communities()
        .iter()
        .map(|c| {
            let mut g: Vec<SubjectId> = c.iter().map(|&i| subjects[i].clone()).collect();
            g.sort();
            g
        })
        .collect();
    groups.sort();
    Ok(GroupResult {
        groups,
        modularity: d.modularity,
        modularities: vec![StageModularity { stage: method.label().to_lowercase(), value: d.modularity }],
        decision_path: if any_proximity { DecisionPath::ProximityAudio } else { DecisionPath::AudioOnly },
        branch: method.label().into(),
        best_weight: None,
    })
}
