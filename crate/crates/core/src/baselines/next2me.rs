use std::collections::BTreeSet;

use realfft::RealFftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::AudioTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Next2MeConfig {
    pub window_s: f64,
    pub top_n: usize,
}

impl Default for Next2MeConfig {
    fn default() -> Self {
        Self { window_s: 1.0, top_n: 6 }
    }
}

impl Next2MeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_s > 0.0) || self.top_n == 0 {
            return Err(Error::param("next2me window and top-n must be positive"));
        }
        Ok(())
    }
}

/// Indices of the `n` largest-magnitude rfft bins of each full window; `None` for silent windows.
pub(crate) fn top_bins(samples: &[f64], window: usize, n: usize) -> Vec<Option<BTreeSet<usize>>> {
    let mut planner = RealFftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(window);
    let mut input = fft.make_input_vec();
    let mut spectrum = fft.make_output_vec();
    samples
        .chunks_exact(window)
        .map(|w| {
            input.copy_from_slice(w);
            fft.process(&mut input, &mut spectrum).expect("buffer sizes match plan");
            let mags: Vec<f64> = spectrum.iter().map(|c| c.norm_sqr()).collect();
            if mags.iter().all(|&m| m == 0.0) {
                return None;
            }
            let mut order: Vec<usize> = (0..mags.len()).collect();
            // Stable ordering keeps ties deterministic (lowest bin first).
            order.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
            Some(order.into_iter().take(n).collect())
        })
        .collect()
}

pub(crate) fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Per-window Jaccard similarity of the dominant frequency bins of two aligned traces.
pub fn next2me_similarity(a: &AudioTrace, b: &AudioTrace, cfg: &Next2MeConfig) -> Result<Vec<Option<f64>>> {
    cfg.validate()?;
    crate::audio::check_same_span(a, b)?;
    let window = (cfg.window_s * a.fs()).round() as usize;
    let (ta, tb) = (top_bins(&a.samples, window, cfg.top_n), top_bins(&b.samples, window, cfg.top_n));
    Ok(ta
        .iter()
        .zip(&tb)
        .map(|(x, y)| match (x, y) {
            (Some(x), Some(y)) => Some(jaccard(x, y)),
            _ => None,
        })
        .collect())
}
