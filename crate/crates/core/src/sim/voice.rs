use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::scenario::VoiceParams;

pub(crate) fn harmonic_amplitudes(harmonics: usize, rolloff_db_per_octave: f64) -> Vec<f64> {
    (1..=harmonics)
        .map(|k| 10f64.powf(-rolloff_db_per_octave * (k as f64).log2() / 20.0))
        .collect()
}

/// RMS of the default voice heard at 1 m; the reference level for SNR.
pub fn reference_rms() -> f64 {
    let p = VoiceParams::default();
    let amps = harmonic_amplitudes(p.harmonics, p.harmonic_rolloff_db_per_octave);
    // Mean square of the raised-cosine syllabic envelope is 3/8.
    (0.375 * amps.iter().map(|a| a * a / 2.0).sum::<f64>()).sqrt()
}

/// Harmonic voice with a piecewise-linear random pitch contour and a syllabic envelope.
#[derive(Debug, Clone)]
pub(crate) struct VoiceSource {
    f0: f64,
    depth: f64,
    knot_step: f64,
    t0: f64,
    knots: Vec<f64>,
    cumulative: Vec<f64>,
    amps: Vec<f64>,
    syllable_rate: f64,
    syllable_phase: f64,
}

impl VoiceSource {
    pub(crate) fn new<R: Rng>(p: &VoiceParams, t0: f64, t1: f64, rng: &mut R) -> Self {
        let knot_step = 1.0 / p.intonation_rate_hz.max(1e-3);
        let count = ((t1 - t0).max(0.0) / knot_step).ceil() as usize + 2;
        let knots: Vec<f64> = (0..count)
            .map(|_| rng.sample::<f64, _>(StandardNormal).clamp(-2.5, 2.5))
            .collect();
        let mut cumulative = Vec::with_capacity(count);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in knots.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * knot_step;
            cumulative.push(acc);
        }
        Self {
            f0: p.fundamental_hz,
            depth: p.intonation_depth,
            knot_step,
            t0,
            knots,
            cumulative,
            amps: harmonic_amplitudes(p.harmonics, p.harmonic_rolloff_db_per_octave),
            syllable_rate: p.syllable_rate_hz,
            syllable_phase: rng.gen_range(0.0..2.0 * PI),
        }
    }

    fn contour_integral(&self, tau: f64) -> f64 {
        let pos = (tau / self.knot_step).max(0.0);
        let i = (pos.floor() as usize).min(self.knots.len() - 2);
        let u = tau - i as f64 * self.knot_step;
        let (a, b) = (self.knots[i], self.knots[i + 1]);
        self.cumulative[i] + a * u + (b - a) * u * u / (2.0 * self.knot_step)
    }

    pub(crate) fn sample(&self, t: f64) -> f64 {
        let tau = t - self.t0;
        let phase = 2.0 * PI * self.f0 * (tau + self.depth * self.contour_integral(tau));
        let env = 0.5 * (1.0 - (2.0 * PI * self.syllable_rate * t + self.syllable_phase).cos());
        let (s1, c1) = phase.sin_cos();
        let (mut prev, mut cur) = (0.0, s1);
        let mut total = 0.0;
        for a in &self.amps {
            total += a * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        env * total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn rolloff_amplitudes() {
        let a = harmonic_amplitudes(8, 6.0);
        assert_eq!(a[0], 1.0);
        assert!((a[1] - 10f64.powf(-0.3)).abs() < 1e-12);
        assert!((a[3] - 10f64.powf(-0.6)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_recurrence_matches_direct_sum() {
        let p = VoiceParams { intonation_depth: 0.0, ..VoiceParams::default() };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let v = VoiceSource::new(&p, 0.0, 1.0, &mut rng);
        let amps = harmonic_amplitudes(8, 6.0);
        for t in [0.0123, 0.25, 0.777] {
            let env = 0.5 * (1.0 - (2.0 * PI * 4.0 * t + v.syllable_phase).cos());
            let direct: f64 = amps
                .iter()
                .enumerate()
                .map(|(k, a)| a * (2.0 * PI * 150.0 * (k + 1) as f64 * t).sin())
                .sum();
            assert!((v.sample(t) - env * direct).abs() < 1e-9);
        }
    }

    #[test]
    fn rms_matches_reference() {
        let p = VoiceParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let v = VoiceSource::new(&p, 0.0, 20.0, &mut rng);
        let fs = 44_100.0;
        let n = (20.0 * fs) as usize;
        let ms = (0..n).map(|i| v.sample(i as f64 / fs).powi(2)).sum::<f64>() / n as f64;
        assert!((ms.sqrt() / reference_rms() - 1.0).abs() < 0.03, "{}", ms.sqrt());
    }

    #[test]
    fn pitch_contour_is_continuous() {
        let p = VoiceParams::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let v = VoiceSource::new(&p, 0.0, 5.0, &mut rng);
        for i in 1..20 {
            let t = i as f64 * v.knot_step;
            let l = v.contour_integral(t - 1e-9);
            let r = v.contour_integral(t + 1e-9);
            assert!((l - r).abs() < 1e-6);
        }
    }
}
