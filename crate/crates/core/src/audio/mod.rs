//! Audio front-end: filtering, clock alignment and cepstral similarity.

mod cepstrum;
mod drift;
mod filter;
mod similarity;
mod wav;

pub use cepstrum::{ccep, CepstrumPlan};
pub use drift::{align, align_pair, estimate_drift, DriftEstimate};
pub use filter::{bandpass, bandpass_with_order, BandpassFilter};
pub use similarity::{acoustic_similarity, AcousticConfig, AcousticFeatureSeries, CepstralPart};
pub use wav::{read_wav, write_wav};
pub(crate) use wav::quantize as wav_quantize;
pub(crate) use similarity::check_same_span;

use crate::error::{Error, Result};
use crate::SubjectId;

pub const DEFAULT_SAMPLE_RATE_HZ: u32 = 44_100;

/// A mono recording from one subject's device.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioTrace {
    pub subject_id: SubjectId,
    pub sample_rate_hz: u32,
    /// Device-clock time of the first sample, in seconds.
    pub start_time: f64,
    pub samples: Vec<f64>,
}

impl AudioTrace {
    pub fn new(
        subject_id: impl Into<SubjectId>,
        sample_rate_hz: u32,
        start_time: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        if !start_time.is_finite() || samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("trace contains non-finite values"));
        }
        Ok(Self { subject_id: subject_id.into(), sample_rate_hz, start_time, samples })
    }

    pub fn fs(&self) -> f64 {
        self.sample_rate_hz as f64
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs()
    }

    pub fn end_time(&self) -> f64 {
        self.start_time + self.duration_s()
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    pub(crate) fn with_samples(&self, samples: Vec<f64>) -> Self {
        Self { samples, ..self.clone() }
    }
}

pub(crate) fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Peak-normalises a trace to unit maximum magnitude. Silent traces are returned unchanged.
pub fn normalize(trace: &AudioTrace) -> AudioTrace {
    let peak = trace.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if peak == 0.0 {
        return trace.clone();
    }
    trace.with_samples(trace.samples.iter().map(|x| x / peak).collect())
}
