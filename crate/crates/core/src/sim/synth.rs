use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use super::scenario::{position_on, AmbientKind, Scenario, SubjectSpec, Turn, Waypoint};
use super::voice::{reference_rms, VoiceSource};
use crate::audio::AudioTrace;
use crate::error::Result;
use crate::proximity::{ScanRecord, RSSI_FLOOR_DBM};
use crate::SubjectId;

pub const SPEED_OF_SOUND_M_S: f64 = 343.0;
/// Scaling applied before 16-bit quantisation, leaving headroom for near-field speech.
pub const FULL_SCALE: f64 = 0.1;
const MIN_DISTANCE_M: f64 = 0.5;
const FADE_S: f64 = 0.01;

const STREAM_VOICE: u64 = 1_000;
const STREAM_AMBIENT: u64 = 2_000;
const STREAM_SENSOR: u64 = 3_000;
const STREAM_SCAN: u64 = 4_000;
const STREAM_SCHEDULE: u64 = 5_000;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Speaker turns per group: explicit schedules as given, otherwise a seeded rotation.
pub fn resolved_turns(sc: &Scenario) -> Vec<Vec<Turn>> {
    sc.groups
        .iter()
        .enumerate()
        .map(|(g, spec)| {
            if !spec.turns.is_empty() {
                return spec.turns.clone();
            }
            let pool = if spec.speakers.is_empty() { &spec.members } else { &spec.speakers };
            let mut rng = rng_for(sc.seed, STREAM_SCHEDULE + g as u64);
            let mut turns = Vec::new();
            let mut t = rng.gen_range(0.0..0.5);
            let mut prev: Option<usize> = None;
            while t < sc.duration_s {
                let mut pick = rng.gen_range(0..pool.len());
                if pool.len() > 1 && Some(pick) == prev {
                    pick = (pick + 1 + rng.gen_range(0..pool.len() - 1)) % pool.len();
                }
                let end = (t + rng.gen_range(3.0..8.0)).min(sc.duration_s);
                turns.push(Turn { speaker: pool[pick].clone(), start_s: t, end_s: end });
                prev = Some(pick);
                t = end + rng.gen_range(0.1..0.5);
            }
            turns
        })
        .collect()
}

enum Wave {
    Voice(VoiceSource),
    Hum { f0: f64, amps: Vec<f64>, phases: Vec<(f64, f64)>, scale: f64 },
    Noise { start: f64, fs: f64, buf: Vec<f64> },
}

impl Wave {
    fn sample(&self, t: f64) -> f64 {
        match self {
            Wave::Voice(v) => v.sample(t),
            Wave::Hum { f0, amps, phases, scale } => {
                // Harmonic k is Im(e^{i p_k} z^k) with z = e^{i 2 pi f0 t}.
                let (s1, c1) = (2.0 * PI * f0 * t).sin_cos();
                let (mut re, mut im) = (c1, s1);
                let mut total = 0.0;
                for (a, (sp, cp)) in amps.iter().zip(phases) {
                    total += a * (sp * re + cp * im);
                    (re, im) = (re * c1 - im * s1, re * s1 + im * c1);
                }
                scale * total
            }
            Wave::Noise { start, fs, buf } => {
                let i = ((t - start) * fs).round();
                if i >= 0.0 && (i as usize) < buf.len() {
                    buf[i as usize]
                } else {
                    0.0
                }
            }
        }
    }
}

struct Emitter {
    track: Vec<Waypoint>,
    level: f64,
    wave: Wave,
    intervals: Vec<(f64, f64)>,
    fade: bool,
}

fn fade_gain(te: f64, a: f64, b: f64) -> f64 {
    let ramp = |x: f64| if x >= 1.0 { 1.0 } else { 0.5 * (1.0 - (PI * x.max(0.0)).cos()) };
    ramp((te - a) / FADE_S) * ramp((b - te) / FADE_S)
}

fn true_time_span(sc: &Scenario) -> (f64, f64) {
    let lo = sc.subjects.iter().map(|s| s.clock_offset_s).fold(0.0, f64::min);
    let hi = sc.subjects.iter().map(|s| s.clock_offset_s).fold(0.0, f64::max) + sc.duration_s;
    (lo - 2.0, hi + 2.0)
}

fn build_emitters(sc: &Scenario) -> Vec<Emitter> {
    let turns = resolved_turns(sc);
    let mut emitters = Vec::new();
    for (i, s) in sc.subjects.iter().enumerate() {
        let own: Vec<(f64, f64)> = turns
            .iter()
            .flatten()
            .filter(|t| t.speaker == s.id)
            .map(|t| (t.start_s, t.end_s))
            .collect();
        if own.is_empty() {
            continue;
        }
        let t0 = own.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
        let t1 = own.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        let mut rng = rng_for(sc.seed, STREAM_VOICE + i as u64);
        emitters.push(Emitter {
            track: s.track.clone(),
            level: 1.0,
            wave: Wave::Voice(VoiceSource::new(&s.voice, t0, t1, &mut rng)),
            intervals: own,
            fade: true,
        });
    }
    let (lo, hi) = true_time_span(sc);
    let fs = sc.sample_rate_hz as f64;
    for (k, a) in sc.noise.ambient.iter().enumerate() {
        let mut rng = rng_for(sc.seed, STREAM_AMBIENT + k as u64);
        let wave = match &a.kind {
            AmbientKind::Voice(p) => Wave::Voice(VoiceSource::new(p, lo, hi, &mut rng)),
            AmbientKind::Hum { fundamental_hz, harmonics } => {
                let amps: Vec<f64> = (1..=*harmonics).map(|h| 1.0 / h as f64).collect();
                let raw = (amps.iter().map(|a| a * a / 2.0).sum::<f64>()).sqrt();
                let phases = (0..*harmonics).map(|_| rng.gen_range(0.0..2.0 * PI).sin_cos()).collect();
                Wave::Hum { f0: *fundamental_hz, amps, phases, scale: reference_rms() / raw }
            }
            AmbientKind::Broadband => {
                let n = ((hi - lo) * fs).ceil() as usize + 1;
                let r = reference_rms();
                let buf = (0..n).map(|_| r * rng.sample::<f64, _>(StandardNormal)).collect();
                Wave::Noise { start: lo, fs, buf }
            }
        };
        emitters.push(Emitter {
            track: vec![Waypoint { t: 0.0, x: a.position.x, y: a.position.y }],
            level: a.level,
            wave,
            intervals: vec![(lo, hi)],
            fade: false,
        });
    }
    emitters
}

fn render(sc: &Scenario, listener: &SubjectSpec, emitters: &[Emitter]) -> Vec<f64> {
    let fs = sc.sample_rate_hz as f64;
    let n = (sc.duration_s * fs).round() as usize;
    let off = listener.clock_offset_s;
    let mut out = vec![0.0; n];
    let k0 = off.floor() as i64 - 1;
    let k1 = (off + sc.duration_s).ceil() as i64 + 2;
    for e in emitters {
        // Distances sampled once per second of true time, interpolated per sample.
        let dist: Vec<f64> = (k0..=k1)
            .map(|k| {
                let t = k as f64;
                position_on(&e.track, t).distance(&listener.position(t))
            })
            .collect();
        let dmax = dist.iter().cloned().fold(0.0, f64::max);
        for &(a, b) in &e.intervals {
            let m_lo = (((a - off) * fs).floor().max(0.0) as usize).min(n);
            let m_hi = ((((b + dmax / SPEED_OF_SOUND_M_S - off) * fs).ceil() + 1.0).max(0.0) as usize).min(n);
            for (m, o) in out.iter_mut().enumerate().take(m_hi).skip(m_lo) {
                let t = m as f64 / fs + off;
                let x = t - k0 as f64;
                let i = (x.floor() as usize).min(dist.len() - 2);
                let d = dist[i] + (x - i as f64) * (dist[i + 1] - dist[i]);
                let te = t - d / SPEED_OF_SOUND_M_S;
                if te < a || te > b {
                    continue;
                }
                let g = if e.fade { fade_gain(te, a, b) } else { 1.0 };
                *o += e.level * g * e.wave.sample(te) / d.max(MIN_DISTANCE_M);
            }
        }
    }
    out
}

/// Renders every subject's device recording as a 16-bit quantised trace.
pub fn synth_audio(sc: &Scenario) -> Result<Vec<AudioTrace>> {
    sc.validate()?;
    let emitters = build_emitters(sc);
    let sigma = sc.noise.snr_db.map(|snr| reference_rms() * 10f64.powf(-snr / 20.0));
    sc.subjects
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut x = render(sc, s, &emitters);
            let mut rng = rng_for(sc.seed, STREAM_SENSOR + i as u64);
            let noise = sigma.map(|sd| Normal::new(0.0, sd).expect("finite sigma"));
            for v in &mut x {
                let mut y = s.device_gain * *v;
                if let Some(d) = &noise {
                    y += d.sample(&mut rng);
                }
                *v = crate::audio::wav_quantize(y * FULL_SCALE) as f64 / 32768.0;
            }
            AudioTrace::new(s.id.clone(), sc.sample_rate_hz, 0.0, x)
        })
        .collect()
}

/// Log-distance path-loss WiFi scans, one per subject per interval over the scan span.
pub fn synth_scans(sc: &Scenario) -> Result<BTreeMap<SubjectId, Vec<ScanRecord>>> {
    sc.validate()?;
    let r = &sc.radio;
    let mut out = BTreeMap::new();
    for (i, s) in sc.subjects.iter().enumerate() {
        if !s.has_scans {
            continue;
        }
        let mut rng = rng_for(sc.seed, STREAM_SCAN + i as u64);
        let noise = Normal::new(0.0, r.rssi_sigma_db).expect("finite sigma");
        let mut t = rng.gen_range(0.0..r.scan_interval_s);
        let mut log = Vec::new();
        while t < r.scan_span_s {
            let p = s.position(t);
            let readings: Vec<(String, f64)> = r
                .access_points
                .iter()
                .map(|ap| {
                    let d = ap.distance_to(&p).max(1.0);
                    let rssi = ap.tx_power_dbm - 10.0 * ap.path_loss_exponent * d.log10() + noise.sample(&mut rng);
                    (ap.id.clone(), rssi.round())
                })
                .collect();
            log.push(ScanRecord::new(s.id.clone(), t - s.clock_offset_s, readings, RSSI_FLOOR_DBM));
            t += r.scan_interval_s;
        }
        out.insert(s.id.clone(), log);
    }
    Ok(out)
}
