//! From raw recordings and scans to refined pairwise features.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{self, AcousticConfig, AcousticFeatureSeries, AudioTrace, DriftEstimate};
use crate::baselines::{baseline_detect, BaselineMethod};
use crate::community::SimilarityGraph;
use crate::config::MeetSenseConfig;
use crate::detector::{detect, GroupResult};
use crate::error::{Error, Result};
use crate::features::{feature_construct, FeatureConfig, RefinedFeature};
use crate::proximity::{proximity_similarity, ProximityConfig, ScanRecord};
use crate::SubjectId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub bandpass_low_hz: f64,
    pub bandpass_high_hz: f64,
    pub filter_order: usize,
    pub max_shift_s: f64,
    pub similarity: AcousticConfig,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            bandpass_low_hz: 300.0,
            bandpass_high_hz: 3400.0,
            filter_order: 4,
            max_shift_s: 30.0,
            similarity: AcousticConfig::default(),
        }
    }
}

/// Bandpass filtering followed by peak normalisation.
pub fn preprocess(traces: &[AudioTrace], cfg: &AudioConfig) -> Result<Vec<AudioTrace>> {
    traces
        .par_iter()
        .map(|t| {
            let f = audio::bandpass_with_order(t, cfg.bandpass_low_hz, cfg.bandpass_high_hz, cfg.filter_order)?;
            Ok(audio::normalize(&f))
        })
        .collect()
}

/// Two traces trimmed to their common span after drift correction.
#[derive(Debug, Clone)]
pub struct AlignedPair {
    pub i: usize,
    pub j: usize,
    pub first: AudioTrace,
    pub second: AudioTrace,
    pub drift: DriftEstimate,
}

pub(crate) fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Aligns every unordered pair independently.
pub fn align_all_pairs(traces: &[AudioTrace], max_shift_s: f64) -> Result<Vec<AlignedPair>> {
    pairs(traces.len())
        .into_par_iter()
        .map(|(i, j)| {
            let (first, second, drift) = audio::align_pair(&traces[i], &traces[j], max_shift_s)?;
            Ok(AlignedPair { i, j, first, second, drift })
        })
        .collect()
}

/// Symmetric matrix of optional pair values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMatrix {
    n: usize,
    values: Vec<Option<f64>>,
}

impl PairMatrix {
    pub fn new(n: usize) -> Self {
        Self { n, values: vec![None; n * n] }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Option<f64>) {
        self.values[i * self.n + j] = v;
        self.values[j * self.n + i] = v;
    }

    /// Graph over `members`; missing values become zero-weight edges.
    pub fn graph(&self, ids: &[SubjectId], members: &[usize]) -> SimilarityGraph {
        let nodes = members.iter().map(|&i| ids[i].clone()).collect();
        SimilarityGraph::from_fn(nodes, |a, b| self.get(members[a], members[b]).unwrap_or(0.0))
            .expect("pair values are finite")
    }
}

/// Refined pair features for a population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub subjects: Vec<SubjectId>,
    pub has_proximity: Vec<bool>,
    pub acoustic: PairMatrix,
    pub proximity: PairMatrix,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }
}

/// Source of per-window proximity similarity for subject pairs.
pub trait ProximitySource: Sync {
    fn available(&self, id: &str) -> bool;
    /// Per-window similarity series, or `None` when the pair has no comparable data.
    fn series(&self, a: &str, b: &str) -> Result<Option<Vec<f64>>>;
}

/// WiFi-scan proximity over per-subject scan logs.
pub struct WifiProximity<'a> {
    pub logs: &'a BTreeMap<SubjectId, Vec<ScanRecord>>,
    pub config: ProximityConfig,
}

impl ProximitySource for WifiProximity<'_> {
    fn available(&self, id: &str) -> bool {
        self.logs.get(id).is_some_and(|l| !l.is_empty())
    }

    fn series(&self, a: &str, b: &str) -> Result<Option<Vec<f64>>> {
        let (Some(la), Some(lb)) = (self.logs.get(a), self.logs.get(b)) else { return Ok(None) };
        match proximity_similarity(la, lb, &self.config) {
            Ok(s) => Ok(Some(s.defined())),
            Err(Error::InsufficientData(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// Per-pair intermediate results kept for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub subject_i: SubjectId,
    pub subject_j: SubjectId,
    pub drift: DriftEstimate,
    pub acoustic_series: Vec<Option<f64>>,
    pub acoustic: Option<RefinedFeature>,
    pub proximity_series: Option<Vec<f64>>,
    pub proximity: Option<RefinedFeature>,
}

fn refine(series: &[f64], cfg: &FeatureConfig) -> Result<Option<RefinedFeature>> {
    match feature_construct(series, cfg) {
        Ok(r) => Ok(Some(r)),
        Err(Error::InsufficientData(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn acoustic_series_for(pair: &AlignedPair, cfg: &AcousticConfig) -> Result<AcousticFeatureSeries> {
    audio::acoustic_similarity(&pair.first, &pair.second, cfg)
}

/// Derives refined acoustic and proximity features for all pairs of already-preprocessed traces.
pub fn extract_features(
    traces: &[AudioTrace],
    aligned: &[AlignedPair],
    proximity: &dyn ProximitySource,
    audio_cfg: &AudioConfig,
    feature_cfg: &FeatureConfig,
) -> Result<(FeatureSet, Vec<PairReport>)> {
    let n = traces.len();
    let subjects: Vec<SubjectId> = traces.iter().map(|t| t.subject_id.clone()).collect();
    let has_proximity: Vec<bool> = subjects.iter().map(|s| proximity.available(s)).collect();
    let reports: Vec<PairReport> = aligned
        .par_iter()
        .map(|p| {
            let series = acoustic_series_for(p, &audio_cfg.similarity)?;
            let acoustic = refine(&series.defined(), feature_cfg)?;
            let (proximity_series, prox) = if has_proximity[p.i] && has_proximity[p.j] {
                let s = proximity.series(&subjects[p.i], &subjects[p.j])?;
                let r = match &s {
                    Some(v) => refine(v, feature_cfg)?,
                    None => None,
                };
                (s, r)
            } else {
                (None, None)
            };
            Ok(PairReport {
                subject_i: subjects[p.i].clone(),
                subject_j: subjects[p.j].clone(),
                drift: p.drift.clone(),
                acoustic_series: series.values,
                acoustic,
                proximity_series,
                proximity: prox,
            })
        })
        .collect::<Result<_>>()?;
    let mut acoustic = PairMatrix::new(n);
    let mut prox = PairMatrix::new(n);
    for (p, r) in aligned.iter().zip(&reports) {
        acoustic.set(p.i, p.j, r.acoustic.as_ref().map(|f| f.mean_value));
        prox.set(p.i, p.j, r.proximity.as_ref().map(|f| f.mean_value));
    }
    Ok((FeatureSet { subjects, has_proximity, acoustic, proximity: prox }, reports))
}

/// Subject traces after preprocessing, with every pair aligned.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub traces: Vec<AudioTrace>,
    pub aligned: Vec<AlignedPair>,
}

impl Prepared {
    pub fn subjects(&self) -> Vec<SubjectId> {
        self.traces.iter().map(|t| t.subject_id.clone()).collect()
    }
}

pub fn prepare(raw: &[AudioTrace], cfg: &AudioConfig) -> Result<Prepared> {
    let traces = preprocess(raw, cfg)?;
    let aligned = align_all_pairs(&traces, cfg.max_shift_s)?;
    Ok(Prepared { traces, aligned })
}

/// Keeps the scans that fall inside the detection window opened by the earliest recording.
pub fn window_scans(
    logs: &BTreeMap<SubjectId, Vec<ScanRecord>>,
    traces: &[AudioTrace],
    window_s: f64,
) -> BTreeMap<SubjectId, Vec<ScanRecord>> {
    let t0 = traces.iter().map(|t| t.start_time).fold(f64::INFINITY, f64::min);
    logs.iter()
        .map(|(id, l)| (id.clone(), l.iter().filter(|s| s.timestamp_s >= t0 && s.timestamp_s <= t0 + window_s).cloned().collect()))
        .collect()
}

/// Full staged detection on prepared audio and optional scan logs.
pub fn groupsense(
    prepared: &Prepared,
    scans: &BTreeMap<SubjectId, Vec<ScanRecord>>,
    cfg: &MeetSenseConfig,
) -> Result<(GroupResult, FeatureSet, Vec<PairReport>)> {
    let logs = window_scans(scans, &prepared.traces, cfg.detector.window_t_s);
    let prox = WifiProximity { logs: &logs, config: cfg.proximity.clone() };
    let (features, reports) = extract_features(&prepared.traces, &prepared.aligned, &prox, &cfg.audio, &cfg.features)?;
    let result = detect(&features, &cfg.detector, &cfg.community)?;
    Ok((result, features, reports))
}

/// Grouping by one of the baseline methods on the same prepared inputs.
pub fn baseline(
    method: BaselineMethod,
    prepared: &Prepared,
    scans: &BTreeMap<SubjectId, Vec<ScanRecord>>,
    cfg: &MeetSenseConfig,
) -> Result<GroupResult> {
    let logs = window_scans(scans, &prepared.traces, cfg.detector.window_t_s);
    let prox = WifiProximity { logs: &logs, config: cfg.proximity.clone() };
    baseline_detect(method, &prepared.subjects(), &prepared.aligned, &prox, &cfg.baselines, &cfg.community)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_enumeration() {
        assert_eq!(pairs(3), vec![(0, 1), (0, 2), (1, 2)]);
        assert!(pairs(1).is_empty());
    }

    #[test]
    fn matrix_graph_fills_missing_with_zero() {
        let mut m = PairMatrix::new(3);
        m.set(0, 1, Some(0.5));
        m.set(1, 2, None);
        let ids: Vec<SubjectId> = vec!["a".into(), "b".into(), "c".into()];
        let g = m.graph(&ids, &[0, 1, 2]);
        assert_eq!(g.weight(1, 0), 0.5);
        assert_eq!(g.weight(2, 1), 0.0);
        let sub = m.graph(&ids, &[1, 0]);
        assert_eq!(sub.nodes(), &["b".to_string(), "a".to_string()]);
    }
}
