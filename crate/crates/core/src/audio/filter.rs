use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use super::AudioTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 3],
}

impl Biquad {
    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        let num = self.b[0] + z_inv * self.b[1] + z2 * self.b[2];
        let den = self.a[0] + z_inv * self.a[1] + z2 * self.a[2];
        num / den
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    /// Steady-state transposed direct-form II state for a constant input `u`.
    fn steady_state(&self, u: f64) -> [f64; 2] {
        let y = u * self.dc_gain();
        [y - self.b[0] * u, self.b[2] * u - self.a[2] * y]
    }

    fn run(&self, x: &mut [f64], mut z: [f64; 2]) {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Butterworth bandpass as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct BandpassFilter {
    sections: Vec<Biquad>,
}

impl BandpassFilter {
    /// Designs a bandpass whose lowpass prototype has `order` poles (2*order poles in total).
    pub fn butterworth(order: usize, low_hz: f64, high_hz: f64, fs: f64) -> Result<Self> {
        if order == 0 || order > 12 {
            return Err(Error::param(format!("filter order {order} outside 1..=12")));
        }
        if !(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0) {
            return Err(Error::param(format!(
                "band edges must satisfy 0 < {low_hz} < {high_hz} < {}",
                fs / 2.0
            )));
        }
        let fs2 = 2.0 * fs;
        let w1 = fs2 * (PI * low_hz / fs).tan();
        let w2 = fs2 * (PI * high_hz / fs).tan();
        let bw = w2 - w1;
        let w0_sq = w1 * w2;

        let mut complex_poles = Vec::new();
        let mut real_poles = Vec::new();
        for k in 0..order {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            let half = Complex64::from_polar(1.0, theta) * (bw / 2.0);
            let disc = (half * half - w0_sq).sqrt();
            for s in [half + disc, half - disc] {
                let z = (fs2 + s) / (fs2 - s);
                if z.im.abs() <= 1e-12 * z.norm() {
                    real_poles.push(z.re);
                } else if z.im > 0.0 {
                    complex_poles.push(z);
                }
            }
        }
        real_poles.sort_by(|a, b| a.total_cmp(b));

        let mut denominators: Vec<[f64; 3]> = complex_poles
            .iter()
            .map(|p| [1.0, -2.0 * p.re, p.norm_sqr()])
            .collect();
        for pair in real_poles.chunks(2) {
            match pair {
                [a, b] => denominators.push([1.0, -(a + b), a * b]),
                [a] => denominators.push([1.0, -a, 0.0]),
                _ => unreachable!(),
            }
        }
        if denominators.len() != order {
            return Err(Error::param("bandpass design produced an unexpected pole layout"));
        }
        let mut sections: Vec<Biquad> = denominators
            .into_iter()
            .map(|a| Biquad { b: [1.0, 0.0, -1.0], a })
            .collect();

        let centre = 2.0 * (w0_sq.sqrt() / fs2).atan();
        let mut filter = Self { sections: sections.clone() };
        let gain = filter.response_at(centre).norm();
        let per_section = gain.powf(-1.0 / order as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per_section;
            }
        }
        filter.sections = sections;
        Ok(filter)
    }

    fn response_at(&self, omega: f64) -> Complex64 {
        let z_inv = Complex64::from_polar(1.0, -omega);
        self.sections.iter().fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    /// Single-pass magnitude response at `freq_hz`.
    pub fn magnitude(&self, freq_hz: f64, fs: f64) -> f64 {
        self.response_at(2.0 * PI * freq_hz / fs).norm()
    }

    fn run_with_initial(&self, x: &mut [f64]) {
        let Some(&first) = x.first() else { return };
        let mut u = first;
        for s in &self.sections {
            let z = s.steady_state(u);
            u *= s.dc_gain();
            s.run(x, z);
        }
    }

    /// Zero-phase forward-backward filtering with odd-extension edge padding.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.iter().map(|v| v * self.magnitude(0.0, 1.0).powi(2)).collect();
        }
        let pad = (3 * (2 * self.sections.len() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        self.run_with_initial(&mut ext);
        ext.reverse();
        self.run_with_initial(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Zero-phase 4th-order Butterworth bandpass.
pub fn bandpass(trace: &AudioTrace, low_hz: f64, high_hz: f64) -> Result<AudioTrace> {
    bandpass_with_order(trace, low_hz, high_hz, 4)
}

pub fn bandpass_with_order(
    trace: &AudioTrace,
    low_hz: f64,
    high_hz: f64,
    order: usize,
) -> Result<AudioTrace> {
    let filter = BandpassFilter::butterworth(order, low_hz, high_hz, trace.fs())?;
    Ok(trace.with_samples(filter.filtfilt(&trace.samples)))
}
