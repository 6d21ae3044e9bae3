use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioMatchConfig {
    pub frame_s: f64,
    pub overlap: f64,
    /// Aggregation window for per-window similarity.
    pub window_s: f64,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl Default for AudioMatchConfig {
    fn default() -> Self {
        Self { frame_s: 0.064, overlap: 0.5, window_s: 1.0, low_hz: 300.0, high_hz: 3400.0 }
    }
}

impl AudioMatchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_s > 0.0 && self.window_s >= self.frame_s) {
            return Err(Error::param("audiomatch frame must be positive and no longer than the window"));
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(Error::param("audiomatch overlap must lie in [0, 1)"));
        }
        if !(0.0 <= self.low_hz && self.low_hz < self.high_hz) {
            return Err(Error::param("audiomatch band must satisfy 0 <= low < high"));
        }
        Ok(())
    }
}

/// Time/frequency offsets of the 16 cells each spectrogram cell is compared against.
pub(crate) const NEIGHBOURS: [(i32, i32); 16] = [
    (-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1),
    (-2, -2), (-2, 2), (2, -2), (2, 2), (-2, 0), (2, 0), (0, -2), (0, 2),
];

/// Fingerprint words per frame; frames whose interior cells cannot be compared are omitted.
#[derive(Debug, Clone)]
pub(crate) struct Fingerprint {
    /// Index of each word row's frame.
    pub frames: Vec<usize>,
    pub words: Vec<Vec<u16>>,
    pub silent: Vec<bool>,
    pub frame_hop: usize,
}

pub(crate) fn fingerprint(samples: &[f64], fs: f64, cfg: &AudioMatchConfig) -> Fingerprint {
    let frame_len = (cfg.frame_s * fs).round() as usize;
    let hop = ((frame_len as f64 * (1.0 - cfg.overlap)).round() as usize).max(1);
    let nfft = frame_len.next_power_of_two();
    let window: Vec<f64> = (0..frame_len)
        .map(|i| 0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (frame_len - 1).max(1) as f64).cos())
        .collect();
    let lo = (cfg.low_hz * nfft as f64 / fs).ceil() as usize;
    let hi = ((cfg.high_hz * nfft as f64 / fs).floor() as usize).min(nfft / 2);

    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(nfft);
    let mut input = fft.make_input_vec();
    let mut spectrum = fft.make_output_vec();
    let frame_count = if samples.len() >= frame_len { (samples.len() - frame_len) / hop + 1 } else { 0 };
    let mut logmag = Vec::with_capacity(frame_count);
    let mut silent = Vec::with_capacity(frame_count);
    for f in 0..frame_count {
        let seg = &samples[f * hop..f * hop + frame_len];
        input.iter_mut().for_each(|x| *x = 0.0);
        for (dst, (x, w)) in input.iter_mut().zip(seg.iter().zip(&window)) {
            *dst = x * w;
        }
        silent.push(seg.iter().all(|&x| x == 0.0));
        fft.process(&mut input, &mut spectrum).expect("buffer sizes match plan");
        logmag.push(spectrum[lo..=hi].iter().map(|c| (c.norm_sqr() + 1e-20).ln()).collect::<Vec<f64>>());
    }

    let bins = if hi >= lo { hi - lo + 1 } else { 0 };
    let mut frames = Vec::new();
    let mut words = Vec::new();
    if frame_count >= 5 && bins >= 5 {
        for t in 2..frame_count - 2 {
            let row = (2..bins - 2)
                .map(|k| {
                    let centre = logmag[t][k];
                    NEIGHBOURS.iter().enumerate().fold(0u16, |w, (bit, &(dt, dk))| {
                        let other = logmag[(t as i32 + dt) as usize][(k as i32 + dk) as usize];
                        if centre > other {
                            w | (1 << bit)
                        } else {
                            w
                        }
                    })
                })
                .collect();
            frames.push(t);
            words.push(row);
        }
    }
    Fingerprint { frames, words, silent, frame_hop: hop }
}

/// Number of differing bits between two fingerprint words.
pub fn hamming(a: u16, b: u16) -> u32 {
    (a ^ b).count_ones()
}

pub(crate) fn compare(a: &Fingerprint, b: &Fingerprint, fs: f64, cfg: &AudioMatchConfig, windows: usize) -> Vec<Option<f64>> {
    let window_len = (cfg.window_s * fs).round() as usize;
    let mut dist = vec![0u64; windows];
    let mut count = vec![0u64; windows];
    let mut silent = vec![false; windows];
    for (row, &t) in a.frames.iter().enumerate() {
        let w = t * a.frame_hop / window_len;
        if w >= windows {
            break;
        }
        if a.silent[t] || b.silent[t] {
            silent[w] = true;
            continue;
        }
        for (x, y) in a.words[row].iter().zip(&b.words[row]) {
            dist[w] += hamming(*x, *y) as u64;
            count[w] += 1;
        }
    }
    (0..windows)
        .map(|w| (count[w] > 0 && !silent[w]).then(|| 1.0 - dist[w] as f64 / (16.0 * count[w] as f64)))
        .collect()
}

/// Per-window fingerprint similarity (1 minus the mean normalised Hamming distance) of two aligned traces.
pub fn audiomatch_similarity(a: &AudioTrace, b: &AudioTrace, cfg: &AudioMatchConfig) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    crate::audio::check_same_span(a, b)?;
    let fs = a.fs();
    let windows = a.samples.len() / (cfg.window_s * fs).round() as usize;
    let (fa, fb) = (fingerprint(&a.samples, fs, cfg), fingerprint(&b.samples, fs, cfg));
    Ok(compare(&fa, &fb, fs, cfg, windows))
}
