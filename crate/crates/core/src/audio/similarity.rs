use serde::{Deserialize, Serialize};

use super::{AudioTrace, CepstrumPlan};
use crate::error::{Error, Result};
use crate::SubjectId;

/// Which part of each segment's complex cepstrum enters the correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CepstralPart {
    /// Even part, (c[q] + c[-q]) / 2.
    Even,
    /// Raw coefficients at both positive and negative quefrencies.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcousticConfig {
    pub segment_len_s: f64,
    pub cepstral_part: CepstralPart,
    /// Lowest quefrency compared; coefficient 0 is always excluded.
    pub quefrency_min_s: f64,
    pub quefrency_max_s: f64,
    /// Spectral magnitudes more than this far below the segment peak are clamped.
    pub dynamic_range_db: f64,
}

impl Default for AcousticConfig {
    fn default() -> Self {
        Self {
            segment_len_s: 1.0,
            cepstral_part: CepstralPart::Even,
            quefrency_min_s: 0.0025,
            quefrency_max_s: 0.016,
            dynamic_range_db: 30.0,
        }
    }
}

impl AcousticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_len_s > 0.0) {
            return Err(Error::param("segment length must be positive"));
        }
        if !(self.quefrency_min_s >= 0.0 && self.quefrency_min_s <= self.quefrency_max_s) {
            return Err(Error::param("quefrency range must satisfy 0 <= min <= max"));
        }
        if !(self.dynamic_range_db > 0.0) {
            return Err(Error::param("dynamic range must be positive"));
        }
        Ok(())
    }

    pub(crate) fn segment_samples(&self, fs: f64) -> usize {
        (self.segment_len_s * fs).round() as usize
    }

    fn quefrency_bins(&self, fs: f64, n: usize) -> (usize, usize) {
        let lo = ((self.quefrency_min_s * fs).round() as usize).max(1);
        let hi = ((self.quefrency_max_s * fs).round() as usize).min(n / 2);
        (lo, hi)
    }
}

/// Per-segment acoustic similarity of a subject pair; `None` marks silent segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticFeatureSeries {
    pub subject_i: SubjectId,
    pub subject_j: SubjectId,
    pub values: Vec<Option<f64>>,
}

impl AcousticFeatureSeries {
    pub fn defined(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }
}

/// Extracts the compared cepstral coefficients of one segment, or `None` when silent.
pub(crate) struct CepstralExtractor {
    plan: CepstrumPlan,
    part: CepstralPart,
    lo: usize,
    hi: usize,
    floor: f64,
}

impl CepstralExtractor {
    pub(crate) fn new(cfg: &AcousticConfig, fs: f64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.segment_samples(fs);
        let (lo, hi) = cfg.quefrency_bins(fs, n);
        if lo > hi {
            return Err(Error::param("quefrency range selects no coefficients"));
        }
        let floor = 10f64.powf(-cfg.dynamic_range_db / 20.0);
        Ok(Self { plan: CepstrumPlan::new(n), part: cfg.cepstral_part, lo, hi, floor })
    }

    pub(crate) fn segment_len(&self) -> usize {
        self.plan.len()
    }

    pub(crate) fn extract(&self, segment: &[f64]) -> Result<Option<Vec<f64>>> {
        let c = match self.part {
            // The even part needs no phase, so the real cepstrum gives it directly.
            CepstralPart::Even => self.plan.real_cepstrum_with_floor(segment, self.floor),
            CepstralPart::Full => self.plan.ccep_with_floor(segment, self.floor),
        };
        let c = match c {
            Ok(c) => c,
            Err(Error::DegenerateInput(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let n = c.len();
        let out = match self.part {
            CepstralPart::Even => c[self.lo..=self.hi].to_vec(),
            CepstralPart::Full => {
                let mut v: Vec<f64> = (self.lo..=self.hi).map(|q| c[q]).collect();
                v.extend((self.lo..=self.hi).filter(|q| n - q != *q).map(|q| c[n - q]));
                v
            }
        };
        Ok(Some(out))
    }

    pub(crate) fn extract_all(&self, samples: &[f64]) -> Result<Vec<Option<Vec<f64>>>> {
        let n = self.segment_len();
        samples.chunks_exact(n).map(|s| self.extract(s)).collect()
    }
}

pub(crate) fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let denom = (sxx * syy).sqrt();
    if !(denom > 0.0) {
        return None;
    }
    Some((sxy / denom).clamp(-1.0, 1.0))
}

pub(crate) fn check_same_span(a: &AudioTrace, b: &AudioTrace) -> Result<()> {
    if a.sample_rate_hz != b.sample_rate_hz
        || a.samples.len() != b.samples.len()
        || (a.start_time - b.start_time).abs() > 0.5 / a.fs()
    {
        return Err(Error::Alignment(format!(
            "traces {} and {} do not cover the same span",
            a.subject_id, b.subject_id
        )));
    }
    Ok(())
}

pub(crate) fn correlate_cepstra(
    ci: &[Option<Vec<f64>>],
    cj: &[Option<Vec<f64>>],
) -> Vec<Option<f64>> {
    ci.iter()
        .zip(cj)
        .map(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => pearson(a, b),
            _ => None,
        })
        .collect()
}

/// Segment-wise correlation of the cepstra of two aligned traces.
pub fn acoustic_similarity(
    trace_i: &AudioTrace,
    trace_j: &AudioTrace,
    cfg: &AcousticConfig,
) -> Result<AcousticFeatureSeries> {
    check_same_span(trace_i, trace_j)?;
    let ex = CepstralExtractor::new(cfg, trace_i.fs())?;
    let ci = ex.extract_all(&trace_i.samples)?;
    let cj = ex.extract_all(&trace_j.samples)?;
    Ok(AcousticFeatureSeries {
        subject_i: trace_i.subject_id.clone(),
        subject_j: trace_j.subject_id.clone(),
        values: correlate_cepstra(&ci, &cj),
    })
}
