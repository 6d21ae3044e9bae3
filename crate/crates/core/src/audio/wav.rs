use std::path::Path;

use super::AudioTrace;
use crate::error::{Error, Result};

/// Reads a 16-bit PCM mono WAV file into a trace starting at `start_time`.
pub fn read_wav(path: &Path, subject_id: &str, start_time: f64) -> Result<AudioTrace> {
    let mut reader = hound::WavReader::open(path).map_err(|e| Error::format(path, e))?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(path, "expected 16-bit PCM mono"));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::format(path, e))?;
    AudioTrace::new(subject_id, spec.sample_rate, start_time, samples)
}

pub(crate) fn quantize(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Writes a trace as 16-bit PCM mono, clipping to full scale.
pub fn write_wav(path: &Path, trace: &AudioTrace) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: trace.sample_rate_hz,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(|e| Error::format(path, e))?;
    for &s in &trace.samples {
        w.write_sample(quantize(s)).map_err(|e| Error::format(path, e))?;
    }
    w.finalize().map_err(|e| Error::format(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact_for_quantised_samples() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let samples = vec![0.0, 0.5, -0.25, -1.0, 32767.0 / 32768.0];
        let t = AudioTrace::new("a", 44_100, 0.0, samples).unwrap();
        write_wav(&p, &t).unwrap();
        let back = read_wav(&p, "a", 0.0).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_stereo() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let spec = hound::WavSpec { channels: 2, sample_rate: 8000, bits_per_sample: 16, sample_format: hound::SampleFormat::Int };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(0i16).unwrap();
        w.write_sample(0i16).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav(&p, "s", 0.0), Err(Error::Format { .. })));
    }
}
