//! Scoring detected groups against ground truth, method comparisons and noise sweeps.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_matrix, BaselineMethod};
use crate::config::MeetSenseConfig;
use crate::detector::GroupResult;
use crate::error::{Error, Result};
use crate::pipeline::{self, window_scans, Prepared, WifiProximity};
use crate::sim::{synth_audio, synth_scans, Scenario};
use crate::SubjectId;

/// F1 agreement of a truth group and a detected group; symmetric in its arguments.
pub fn f1_pair<S: AsRef<str> + Ord>(truth: &[S], detected: &[S]) -> f64 {
    if truth.is_empty() || detected.is_empty() {
        return 0.0;
    }
    let t: BTreeSet<&str> = truth.iter().map(AsRef::as_ref).collect();
    let d: BTreeSet<&str> = detected.iter().map(AsRef::as_ref).collect();
    2.0 * t.intersection(&d).count() as f64 / (t.len() + d.len()) as f64
}

/// Mean over detected groups of each group's best F1 against any truth group.
pub fn f1_overall<S: AsRef<str> + Ord>(truth: &[Vec<S>], detected: &[Vec<S>]) -> f64 {
    if detected.is_empty() {
        return 0.0;
    }
    let total: f64 = detected
        .iter()
        .map(|d| truth.iter().map(|t| f1_pair(t, d)).fold(0.0, f64::max))
        .sum();
    total / detected.len() as f64
}

const MAX_ASSIGNMENT_GROUPS: usize = 20;

/// As [`f1_overall`] but each truth group may be matched to at most one detected group.
pub fn f1_overall_optimal<S: AsRef<str> + Ord>(truth: &[Vec<S>], detected: &[Vec<S>]) -> Result<f64> {
    if detected.is_empty() {
        return Ok(0.0);
    }
    if truth.len() > MAX_ASSIGNMENT_GROUPS {
        return Err(Error::param(format!("optimal assignment supports at most {MAX_ASSIGNMENT_GROUPS} truth groups")));
    }
    let k = truth.len();
    let scores: Vec<Vec<f64>> = detected.iter().map(|d| truth.iter().map(|t| f1_pair(t, d)).collect()).collect();
    // best[mask] = best total using the truth groups in `mask` over the detected groups seen so far.
    let mut best = vec![f64::NEG_INFINITY; 1 << k];
    best[0] = 0.0;
    for row in &scores {
        let mut next = best.clone();
        for mask in 0..1usize << k {
            if best[mask] == f64::NEG_INFINITY {
                continue;
            }
            for (j, s) in row.iter().enumerate() {
                if mask & (1 << j) == 0 {
                    let m2 = mask | (1 << j);
                    next[m2] = next[m2].max(best[mask] + s);
                }
            }
        }
        best = next;
    }
    Ok(best.into_iter().fold(0.0, f64::max) / detected.len() as f64)
}

pub fn score(truth: &[Vec<SubjectId>], detected: &[Vec<SubjectId>], optimal: bool) -> Result<f64> {
    if optimal {
        f1_overall_optimal(truth, detected)
    } else {
        Ok(f1_overall(truth, detected))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    GroupSense,
    Next2Me,
    AudioMatch,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GroupSense, Method::Next2Me, Method::AudioMatch];

    pub fn label(&self) -> &'static str {
        match self {
            Method::GroupSense => "GroupSense",
            Method::Next2Me => "Next2Me",
            Method::AudioMatch => "AudioMatch",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.label().eq_ignore_ascii_case(s))
    }

    fn baseline(&self) -> Option<BaselineMethod> {
        match self {
            Method::GroupSense => None,
            Method::Next2Me => Some(BaselineMethod::Next2Me),
            Method::AudioMatch => Some(BaselineMethod::AudioMatch),
        }
    }
}

/// Runs one method on prepared inputs.
pub fn run_method(
    method: Method,
    prepared: &Prepared,
    scans: &std::collections::BTreeMap<SubjectId, Vec<crate::proximity::ScanRecord>>,
    cfg: &MeetSenseConfig,
) -> Result<GroupResult> {
    match method.baseline() {
        None => pipeline::groupsense(prepared, scans, cfg).map(|r| r.0),
        Some(b) => pipeline::baseline(b, prepared, scans, cfg),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub scenario: String,
    pub method: String,
    pub f1: f64,
    pub modularity: f64,
    pub decision_path: String,
}

/// Four decimals, with values that round to zero printed unsigned.
fn fixed4(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    /// Mean F1 and modularity per method.
    pub fn aggregate(&self) -> Vec<EvalRow> {
        let mut methods: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !methods.contains(&r.method.as_str()) {
                methods.push(&r.method);
            }
        }
        methods
            .into_iter()
            .map(|m| {
                let rows: Vec<&EvalRow> = self.rows.iter().filter(|r| r.method == m).collect();
                let n = rows.len() as f64;
                EvalRow {
                    scenario: "mean".into(),
                    method: m.into(),
                    f1: rows.iter().map(|r| r.f1).sum::<f64>() / n,
                    modularity: rows.iter().map(|r| r.modularity).sum::<f64>() / n,
                    decision_path: String::new(),
                }
            })
            .collect()
    }

    /// CSV with fixed four-decimal formatting so repeated runs are byte-identical.
    pub fn to_csv(&self, with_aggregate: bool) -> String {
        let mut out = String::from("scenario,method,f1,modularity,decision_path\n");
        let agg = if with_aggregate { self.aggregate() } else { Vec::new() };
        for r in self.rows.iter().chain(&agg) {
            let _ = writeln!(out, "{},{},{},{},{}", r.scenario, r.method, fixed4(r.f1), fixed4(r.modularity), r.decision_path);
        }
        out
    }
}

/// Synthesises a scenario and runs and scores every requested method on it.
pub fn evaluate_scenario(sc: &Scenario, methods: &[Method], cfg: &MeetSenseConfig) -> Result<Vec<EvalRow>> {
    let raw = synth_audio(sc)?;
    let scans = synth_scans(sc)?;
    let prepared = pipeline::prepare(&raw, &cfg.audio)?;
    let truth = sc.ground_truth().groups;
    methods
        .iter()
        .map(|&m| {
            let r = run_method(m, &prepared, &scans, cfg)?;
            Ok(EvalRow {
                scenario: sc.name.clone(),
                method: m.label().into(),
                f1: score(&truth, &r.groups, cfg.eval.optimal_assignment)?,
                modularity: r.modularity,
                decision_path: r.decision_path.label().into(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub method: String,
    pub f1: f64,
    /// Mean pair similarity over truly co-grouped pairs, in each method's own feature.
    pub same_group_similarity: f64,
}

fn same_group_pairs(truth: &[Vec<SubjectId>], subjects: &[SubjectId]) -> Vec<(usize, usize)> {
    let group_of = |id: &SubjectId| truth.iter().position(|g| g.contains(id));
    crate::pipeline::pairs(subjects.len())
        .into_iter()
        .filter(|&(i, j)| {
            let (gi, gj) = (group_of(&subjects[i]), group_of(&subjects[j]));
            gi.is_some() && gi == gj && truth[gi.unwrap()].len() > 1
        })
        .collect()
}

fn mean_over(m: &crate::pipeline::PairMatrix, pairs: &[(usize, usize)]) -> f64 {
    let v: Vec<f64> = pairs.iter().filter_map(|&(i, j)| m.get(i, j)).collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Scores every method on one scenario regenerated at each SNR point.
pub fn noise_sweep(sc: &Scenario, snr_grid_db: &[f64], methods: &[Method], cfg: &MeetSenseConfig) -> Result<Vec<SweepPoint>> {
    let mut out = Vec::new();
    for &snr in snr_grid_db {
        let s = sc.with_snr(Some(snr));
        let raw = synth_audio(&s)?;
        let scans = synth_scans(&s)?;
        let prepared = pipeline::prepare(&raw, &cfg.audio)?;
        let truth = s.ground_truth().groups;
        let subjects = prepared.subjects();
        let same = same_group_pairs(&truth, &subjects);
        let logs = window_scans(&scans, &prepared.traces, cfg.detector.window_t_s);
        let prox = WifiProximity { logs: &logs, config: cfg.proximity.clone() };
        for &m in methods {
            let (result, similarity) = match m.baseline() {
                None => {
                    let (r, f, _) = pipeline::groupsense(&prepared, &scans, cfg)?;
                    (r, mean_over(&f.acoustic, &same))
                }
                Some(b) => {
                    let r = pipeline::baseline(b, &prepared, &scans, cfg)?;
                    let unfiltered = MeetSenseConfig {
                        baselines: crate::baselines::BaselineConfig { proximity_min_similarity: f64::NEG_INFINITY, ..cfg.baselines.clone() },
                        ..cfg.clone()
                    };
                    let (mat, _) = baseline_matrix(b, &subjects, &prepared.aligned, &prox, &unfiltered.baselines)?;
                    (r, mean_over(&mat, &same))
                }
            };
            out.push(SweepPoint {
                snr_db: snr,
                method: m.label().into(),
                f1: score(&truth, &result.groups, cfg.eval.optimal_assignment)?,
                same_group_similarity: similarity,
            });
        }
    }
    Ok(out)
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("snr_db,method,f1,same_group_similarity\n");
    for p in points {
        let _ = writeln!(out, "{:.1},{},{},{}", p.snr_db, p.method, fixed4(p.f1), fixed4(p.same_group_similarity));
    }
    out
}

/// Wall time of the per-pair acoustic feature computation for one method.
pub fn feature_time_s(method: Method, prepared: &Prepared, cfg: &MeetSenseConfig) -> Result<f64> {
    let start = Instant::now();
    for p in &prepared.aligned {
        match method.baseline() {
            None => {
                crate::audio::acoustic_similarity(&p.first, &p.second, &cfg.audio.similarity)?;
            }
            Some(b) => {
                crate::baselines::fingerprint_series(b, p, &cfg.baselines)?;
            }
        }
    }
    Ok(start.elapsed().as_secs_f64())
}
