//! FFT-based linear convolution and correlation of real signals.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

use crate::numerics::C64;

/// A fixed-size real FFT pair. Transforms are unnormalized; [`FftPlan::inverse`]
/// applies the `1/n` factor.
pub struct FftPlan {
    len: usize,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl FftPlan {
    /// Smallest power-of-two plan holding a linear result of `len` samples.
    pub fn for_linear(len: usize) -> Self {
        Self::new(len.max(2).next_power_of_two())
    }

    pub fn new(len: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Spectrum of `x` zero-padded to the plan length.
    pub fn forward(&self, x: &[f64]) -> Vec<C64> {
        assert!(x.len() <= self.len, "input longer than fft plan");
        let mut buf = self.forward.make_input_vec();
        buf[..x.len()].copy_from_slice(x);
        let mut spec = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut spec)
            .expect("buffer sizes come from the plan");
        spec
    }

    /// Time signal of a one-sided spectrum, scaled by `1/n`.
    pub fn inverse(&self, spec: &[C64]) -> Vec<f64> {
        let mut s = spec.to_vec();
        s[0].im = 0.0;
        let last = s.len() - 1;
        s[last].im = 0.0;
        let mut out = self.inverse.make_output_vec();
        self.inverse
            .process(&mut s, &mut out)
            .expect("buffer sizes come from the plan");
        let scale = 1.0 / self.len as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

/// Pointwise product `a·b` (or `conj(a)·b` when `conj_a`).
pub fn spectral_product(a: &[C64], b: &[C64], conj_a: bool) -> Vec<C64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| if conj_a { x.conj() * y } else { x * y })
        .collect()
}

/// Full linear convolution, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let plan = FftPlan::for_linear(out_len);
    let prod = spectral_product(&plan.forward(a), &plan.forward(b), false);
    let mut y = plan.inverse(&prod);
    y.truncate(out_len);
    y
}

/// `r[k] = Σ_t a[t]·b[t + k]` for `k = 0..lags`, with both signals treated as
/// zero outside their support.
pub fn cross_correlation(a: &[f64], b: &[f64], lags: usize) -> Vec<f64> {
    let plan = FftPlan::for_linear(a.len() + b.len() + lags);
    let prod = spectral_product(&plan.forward(a), &plan.forward(b), true);
    let mut r = plan.inverse(&prod);
    r.truncate(lags);
    r.resize(lags, 0.0);
    r
}

/// Convolves one signal against many filters, reusing its spectrum.
pub struct Convolver {
    plan: FftPlan,
    spectrum: Vec<C64>,
    signal_len: usize,
    max_filter: usize,
}

impl Convolver {
    pub fn new(signal: &[f64], max_filter: usize) -> Self {
        let plan = FftPlan::for_linear(signal.len() + max_filter.max(1) - 1);
        let spectrum = plan.forward(signal);
        Self {
            plan,
            spectrum,
            signal_len: signal.len(),
            max_filter: max_filter.max(1),
        }
    }

    /// `signal * filter`, truncated to the signal length.
    pub fn apply(&self, filter: &[f64]) -> Vec<f64> {
        assert!(filter.len() <= self.max_filter, "filter longer than planned");
        if filter.is_empty() {
            return vec![0.0; self.signal_len];
        }
        let prod = spectral_product(&self.spectrum, &self.plan.forward(filter), false);
        let mut y = self.plan.inverse(&prod);
        y.truncate(self.signal_len);
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_conv(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, h) in b.iter().enumerate() {
                y[i + j] += x * h;
            }
        }
        y
    }

    #[test]
    fn matches_direct_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..41).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = convolve(&a, &b);
        let slow = direct_conv(&a, &b);
        for (x, y) in fast.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-12);
        }
        let c = Convolver::new(&a, 64).apply(&b);
        assert_eq!(c.len(), a.len());
        for (x, y) in c.iter().zip(&slow) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_matches_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..100).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = cross_correlation(&a, &b, 10);
        for (k, rk) in r.iter().enumerate() {
            let want: f64 = (0..100 - k).map(|t| a[t] * b[t + k]).sum();
            assert!((rk - want).abs() < 1e-12, "lag {k}");
        }
    }
}
