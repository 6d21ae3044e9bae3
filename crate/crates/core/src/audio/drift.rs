use realfft::RealFftPlanner;
use rustfft::num_complex::Complex64;

use super::AudioTrace;
use crate::error::{Error, Result};
use crate::SubjectId;

/// Clock offset between two traces. Positive `shift_s` means the target is delayed.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriftEstimate {
    pub reference_id: SubjectId,
    pub target_id: SubjectId,
    pub shift_s: f64,
    pub peak_correlation: f64,
}

pub(crate) fn next_fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p5 = 1usize;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut m = p35;
            while m < n {
                m *= 2;
            }
            best = best.min(m);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

fn prefix_squares(x: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for v in x {
        acc += v * v;
        out.push(acc);
    }
    out
}

/// Estimates the clock shift of `target` relative to `reference` by maximising the
/// normalised cross-correlation over shifts within `max_shift_s`, in one-sample steps.
pub fn estimate_drift(
    reference: &AudioTrace,
    target: &AudioTrace,
    max_shift_s: f64,
) -> Result<DriftEstimate> {
    if reference.sample_rate_hz != target.sample_rate_hz {
        return Err(Error::Alignment("sample rates differ".into()));
    }
    if !(max_shift_s >= 0.0) {
        return Err(Error::param("max shift must be non-negative"));
    }
    let fs = reference.fs();
    let r = &reference.samples;
    let t = &target.samples;
    let (nr, nt) = (r.len() as i64, t.len() as i64);
    let min_overlap = fs.round() as i64;
    if nr.min(nt) < min_overlap {
        return Err(Error::Alignment("traces shorter than the 1 s minimum overlap".into()));
    }

    // corr[d] = sum_m r[m + d] * t[m]; a target delay of k samples corresponds to d = base - k.
    let base = ((target.start_time - reference.start_time) * fs).round() as i64;
    let max_k = (max_shift_s * fs).round() as i64;
    let n = next_fast_len((nr + nt) as usize);
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let spectrum = |x: &[f64]| {
        let mut buf = fwd.make_input_vec();
        buf[..x.len()].copy_from_slice(x);
        let mut out = fwd.make_output_vec();
        fwd.process(&mut buf, &mut out).expect("fft length");
        out
    };
    let rs = spectrum(r);
    let ts = spectrum(t);
    let mut prod: Vec<Complex64> = rs.iter().zip(&ts).map(|(a, b)| a * b.conj()).collect();
    drop((rs, ts));
    let mut corr = inv.make_output_vec();
    inv.process(&mut prod, &mut corr).expect("fft length");
    let scale = 1.0 / n as f64;

    let er = prefix_squares(r);
    let et = prefix_squares(t);
    let mut best: Option<(i64, f64)> = None;
    for k in -max_k..=max_k {
        let d = base - k;
        let m_lo = 0.max(-d);
        let m_hi = nt.min(nr - d);
        if m_hi - m_lo < min_overlap {
            continue;
        }
        let energy_t = et[m_hi as usize] - et[m_lo as usize];
        let energy_r = er[(m_hi + d) as usize] - er[(m_lo + d) as usize];
        let denom = (energy_t * energy_r).sqrt();
        let value = if denom > 0.0 {
            let idx = d.rem_euclid(n as i64) as usize;
            (corr[idx] * scale / denom).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        let better = match best {
            None => true,
            Some((bk, bv)) => value > bv || (value == bv && k.abs() < bk.abs()),
        };
        if better {
            best = Some((k, value));
        }
    }
    let (k, peak) = best.ok_or_else(|| {
        Error::Alignment(format!(
            "no shift within +-{max_shift_s} s leaves 1 s of overlap between {} and {}",
            reference.subject_id, target.subject_id
        ))
    })?;
    Ok(DriftEstimate {
        reference_id: reference.subject_id.clone(),
        target_id: target.subject_id.clone(),
        shift_s: k as f64 / fs,
        peak_correlation: peak,
    })
}

fn truncate_to_span(trace: &AudioTrace, corrected_start: f64, span_start: f64, len: usize) -> AudioTrace {
    let offset = ((span_start - corrected_start) * trace.fs()).round().max(0.0) as usize;
    let end = (offset + len).min(trace.samples.len());
    AudioTrace {
        subject_id: trace.subject_id.clone(),
        sample_rate_hz: trace.sample_rate_hz,
        start_time: span_start,
        samples: trace.samples[offset.min(end)..end].to_vec(),
    }
}

/// Shifts every trace onto the reference clock and truncates all of them to the common span.
pub fn align(traces: &[AudioTrace], reference_id: &str, max_shift_s: f64) -> Result<Vec<AudioTrace>> {
    Ok(align_with_estimates(traces, reference_id, max_shift_s)?.0)
}

fn align_with_estimates(
    traces: &[AudioTrace],
    reference_id: &str,
    max_shift_s: f64,
) -> Result<(Vec<AudioTrace>, Vec<DriftEstimate>)> {
    let reference = traces
        .iter()
        .find(|t| t.subject_id == reference_id)
        .ok_or_else(|| Error::param(format!("reference {reference_id} not among traces")))?;
    if traces.len() == 1 {
        return Ok((traces.to_vec(), Vec::new()));
    }
    let fs = reference.fs();
    let mut starts = Vec::with_capacity(traces.len());
    let mut estimates = Vec::new();
    for t in traces {
        if t.subject_id == reference_id {
            starts.push(t.start_time);
            continue;
        }
        let est = estimate_drift(reference, t, max_shift_s)?;
        starts.push(t.start_time - est.shift_s);
        estimates.push(est);
    }
    let span_start = starts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span_end = traces
        .iter()
        .zip(&starts)
        .map(|(t, s)| s + t.duration_s())
        .fold(f64::INFINITY, f64::min);
    let len = ((span_end - span_start) * fs + 1e-6).floor();
    if len < 1.0 {
        return Err(Error::Alignment("traces share no common span".into()));
    }
    let aligned: Vec<AudioTrace> = traces
        .iter()
        .zip(&starts)
        .map(|(t, s)| truncate_to_span(t, *s, span_start, len as usize))
        .collect();
    let common = aligned.iter().map(|t| t.samples.len()).min().unwrap_or(0);
    let aligned = aligned
        .into_iter()
        .map(|mut t| {
            t.samples.truncate(common);
            t
        })
        .collect();
    Ok((aligned, estimates))
}

/// Aligns a single pair onto the first trace's clock.
pub fn align_pair(
    a: &AudioTrace,
    b: &AudioTrace,
    max_shift_s: f64,
) -> Result<(AudioTrace, AudioTrace, DriftEstimate)> {
    let (mut aligned, mut est) =
        align_with_estimates(&[a.clone(), b.clone()], &a.subject_id, max_shift_s)?;
    let est = est.pop().ok_or_else(|| Error::param("pair must contain two distinct traces"))?;
    let bb = aligned.pop().expect("two traces");
    let aa = aligned.pop().expect("two traces");
    Ok((aa, bb, est))
}
