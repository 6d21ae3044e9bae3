use std::f64::consts::PI;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};

/// Reusable FFT plans for complex cepstra of a fixed segment length.
pub struct CepstrumPlan {
    len: usize,
    fwd: Arc<dyn RealToComplex<f64>>,
    inv: Arc<dyn ComplexToReal<f64>>,
}

impl std::fmt::Debug for CepstrumPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CepstrumPlan").field("len", &self.len).finish()
    }
}

impl CepstrumPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self { len, fwd: planner.plan_fft_forward(len), inv: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Complex cepstrum: inverse FFT of log magnitude plus unwrapped phase with the
    /// integer linear-phase term removed. Output is real and has the input length.
    pub fn ccep(&self, segment: &[f64]) -> Result<Vec<f64>> {
        self.ccep_with_floor(segment, 1e-12)
    }

    /// As [`Self::ccep`], with magnitudes clamped to at least `floor` times the spectral peak.
    pub fn ccep_with_floor(&self, segment: &[f64], floor: f64) -> Result<Vec<f64>> {
        let n = self.len;
        if segment.len() != n {
            return Err(Error::param(format!("segment length {} != plan length {n}", segment.len())));
        }
        if n < 2 {
            return Err(Error::DegenerateInput("segment shorter than two samples".into()));
        }
        if segment.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateInput("all-zero segment".into()));
        }
        let mut input = segment.to_vec();
        let mut spec = self.fwd.make_output_vec();
        self.fwd.process(&mut input, &mut spec).expect("fft length");

        let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let floor = peak * floor.max(1e-300);
        let mut phase: Vec<f64> = spec.iter().map(|c| c.im.atan2(c.re)).collect();
        unwrap_in_place(&mut phase);

        // Sign convention for a negative DC term, then remove integer linear phase.
        if spec[0].re < 0.0 {
            phase.iter_mut().for_each(|p| *p -= PI);
        }
        let last = phase.len() - 1;
        let lag = (phase[last] * n as f64 / (2.0 * PI * last as f64)).round();
        for (k, p) in phase.iter_mut().enumerate() {
            *p -= 2.0 * PI * lag * k as f64 / n as f64;
        }

        let mut log_spec: Vec<Complex64> = spec
            .iter()
            .zip(&phase)
            .map(|(c, p)| Complex64::new(c.norm().max(floor).ln(), *p))
            .collect();
        // The inverse real FFT ignores the imaginary parts of DC and Nyquist.
        log_spec[0].im = 0.0;
        if n.is_multiple_of(2) {
            log_spec[last].im = 0.0;
        }
        let mut out = self.inv.make_output_vec();
        self.inv.process(&mut log_spec, &mut out).expect("fft length");
        let scale = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }
}

impl CepstrumPlan {
    /// Real cepstrum, the inverse FFT of the floored log magnitude. Equals the even part of the complex cepstrum.
    pub fn real_cepstrum_with_floor(&self, segment: &[f64], floor: f64) -> Result<Vec<f64>> {
        let n = self.len;
        if segment.len() != n {
            return Err(Error::param(format!("segment length {} != plan length {n}", segment.len())));
        }
        if n < 2 {
            return Err(Error::DegenerateInput("segment shorter than two samples".into()));
        }
        if segment.iter().all(|v| *v == 0.0) {
            return Err(Error::DegenerateInput("all-zero segment".into()));
        }
        let mut input = segment.to_vec();
        let mut spec = self.fwd.make_output_vec();
        self.fwd.process(&mut input, &mut spec).expect("fft length");
        let peak2 = spec.iter().fold(0.0f64, |m, c| m.max(c.norm_sqr()));
        let floor2 = peak2 * floor.max(1e-300).powi(2);
        for c in spec.iter_mut() {
            *c = Complex64::new(0.5 * c.norm_sqr().max(floor2).ln(), 0.0);
        }
        let mut out = self.inv.make_output_vec();
        self.inv.process(&mut spec, &mut out).expect("fft length");
        let scale = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }
}

fn unwrap_in_place(phase: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let mut d = raw - phase[i - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        phase[i] = phase[i - 1] + d;
    }
}

/// Complex cepstrum of one segment.
pub fn ccep(segment: &[f64]) -> Result<Vec<f64>> {
    CepstrumPlan::new(segment.len()).ccep(segment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_cepstrum_is_even_part_of_complex() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [64usize, 101, 1000] {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let plan = CepstrumPlan::new(n);
            for floor in [1e-12, 0.03] {
                let c = plan.ccep_with_floor(&x, floor).unwrap();
                let r = plan.real_cepstrum_with_floor(&x, floor).unwrap();
                for q in 0..n {
                    let even = 0.5 * (c[q] + c[(n - q) % n]);
                    assert!((even - r[q]).abs() < 1e-9, "n={n} q={q}");
                }
            }
        }
    }

    fn impulse(n: usize, at: usize, g: f64) -> Vec<f64> {
        let mut x = vec![0.0; n];
        x[at] = g;
        x
    }

    // Minimum-phase x[n] = d[n] - a d[n-1] has cepstrum -a^k / k for k >= 1.
    fn min_phase_oracle(a: f64, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (k, v) in c.iter_mut().enumerate().skip(1).take(n / 2 - 1) {
            *v = -a.powi(k as i32) / k as f64;
        }
        c
    }

    #[test]
    fn impulse_gives_zeros() {
        for at in [0, 5] {
            let c = ccep(&impulse(64, at, 1.0)).unwrap();
            assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
        }
    }

    #[test]
    fn scaled_impulse_puts_log_gain_in_c0() {
        let c = ccep(&impulse(64, 0, 3.0)).unwrap();
        assert!((c[0] - 3.0f64.ln()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
        let c = ccep(&impulse(64, 0, -0.5)).unwrap();
        assert!((c[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gain_only_moves_c0() {
        let x: Vec<f64> = (0..256).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) * (1.0 + (i as f64 * 0.07).sin())).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let (cx, cy) = (ccep(&x).unwrap(), ccep(&y).unwrap());
        assert!((cy[0] - cx[0] - 2.0f64.ln()).abs() < 1e-9);
        for k in 1..cx.len() {
            assert!((cx[k] - cy[k]).abs() < 1e-9, "{k}");
        }
    }

    #[test]
    fn minimum_phase_sequence() {
        let n = 512;
        let mut x = vec![0.0; n];
        x[0] = 1.0;
        x[1] = -0.6;
        let c = ccep(&x).unwrap();
        let want = min_phase_oracle(0.6, n);
        for k in 0..n / 2 {
            assert!((c[k] - want[k]).abs() < 1e-9, "{k}: {} vs {}", c[k], want[k]);
        }
        assert!(c[n / 2..].iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn odd_length_and_degenerate() {
        assert_eq!(ccep(&impulse(63, 2, 1.0)).unwrap().len(), 63);
        assert!(matches!(ccep(&[0.0; 16]), Err(Error::DegenerateInput(_))));
    }
}
