//! Seeded test signals: Gaussian white noise, pink noise, and a
//! speech-like source (syllables of gliding harmonic tones shaped by random
//! formants, with unvoiced bursts and pauses).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fftconv::FftPlan;

/// Independent random streams derived from one scenario seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Placement,
    White,
    Source(usize),
    PointNoise(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Placement => 1,
            Stream::White => 2,
            Stream::Source(n) => 0x1_0000 + n as u64,
            Stream::PointNoise(k) => 0x2_0000 + k as u64,
        }
    }
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

pub fn white_noise(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn normalize_rms(x: &mut [f64]) {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
}

/// Unit-variance noise with a `1/f` power spectrum (DC removed).
pub fn pink_noise(len: usize, rng: &mut impl Rng) -> Vec<f64> {
    if len == 0 {
        return Vec::new();
    }
    let plan = FftPlan::for_linear(len);
    let mut spec = plan.forward(&white_noise(plan.len(), rng));
    spec[0] = 0.0.into();
    for (k, z) in spec.iter_mut().enumerate().skip(1) {
        *z /= (k as f64).sqrt();
    }
    let mut x = plan.inverse(&spec);
    x.truncate(len);
    normalize_rms(&mut x);
    x
}

fn raised_cosine_envelope(k: usize, n: usize, ramp: usize) -> f64 {
    let ramp = ramp.min(n / 2).max(1);
    let edge = k.min(n - 1 - k);
    if edge >= ramp {
        1.0
    } else {
        0.5 - 0.5 * (PI * edge as f64 / ramp as f64).cos()
    }
}

/// Unit-RMS speech-like signal. Each draw fixes a speaker pitch range, then
/// alternates pauses (25%), unvoiced bursts and voiced syllables with
/// lognormal loudness, so the short-time power fluctuates jointly across
/// frequency.
pub fn speech_like(len: usize, sample_rate: u32, rng: &mut impl Rng) -> Vec<f64> {
    let fs = sample_rate as f64;
    let top = (0.45 * fs).min(7000.0);
    let ramp = (0.015 * fs) as usize;
    let base_f0: f64 = if rng.random_bool(0.5) {
        rng.random_range(95.0..140.0)
    } else {
        rng.random_range(170.0..240.0)
    };
    let mut out = vec![0.0; len];
    let mut t = 0;
    while t < len {
        if rng.random_bool(0.25) {
            t += (rng.random_range(0.08..0.35) * fs) as usize;
            continue;
        }
        let n = ((rng.random_range(0.10..0.32) * fs) as usize).min(len - t);
        let z: f64 = rng.sample(StandardNormal);
        let gain = (0.6 * z).exp();
        let seg = &mut out[t..t + n];
        if rng.random_bool(0.8) {
            let f0a: f64 = base_f0 * rng.random_range(0.85..1.15);
            let f0b = f0a * rng.random_range(0.85..1.2);
            let formants = [
                (rng.random_range(300.0..850.0), rng.random_range(80.0..140.0)),
                (rng.random_range(900.0..2300.0), rng.random_range(100.0..180.0)),
                (rng.random_range(2400.0..3300.0), rng.random_range(140.0..220.0)),
            ];
            let f_mid = 0.5 * (f0a + f0b);
            let harmonics: Vec<(f64, f64)> = (1..)
                .take_while(|&h| h as f64 * f0a.max(f0b) < top)
                .map(|h| {
                    let f = h as f64 * f_mid;
                    let shape: f64 = formants
                        .iter()
                        .map(|(c, bw)| (-0.5 * ((f - c) / bw).powi(2)).exp())
                        .sum();
                    let amp = (0.05 + shape) / (h as f64).sqrt();
                    (amp, rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            let mut phase = 0.0;
            for (k, y) in seg.iter_mut().enumerate() {
                let f0 = f0a + (f0b - f0a) * k as f64 / n as f64;
                phase += 2.0 * PI * f0 / fs;
                let s: f64 = harmonics
                    .iter()
                    .enumerate()
                    .map(|(h, (a, th))| a * ((h + 1) as f64 * phase + th).sin())
                    .sum();
                *y = gain * raised_cosine_envelope(k, n, ramp) * s;
            }
        } else {
            let mut prev = 0.0;
            for (k, y) in seg.iter_mut().enumerate() {
                let w: f64 = rng.sample(StandardNormal);
                *y = 0.5 * gain * raised_cosine_envelope(k, n, ramp) * (w - prev);
                prev = w;
            }
        }
        t += n;
    }
    normalize_rms(&mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band_power(x: &[f64], lo: usize, hi: usize) -> f64 {
        let plan = FftPlan::for_linear(x.len());
        plan.forward(x)[lo..hi].iter().map(|z| z.norm_sqr()).sum()
    }

    #[test]
    fn pink_noise_halves_power_per_octave_band_density() {
        let mut rng = stream_rng(1, Stream::PointNoise(0));
        let x = pink_noise(1 << 16, &mut rng);
        let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        assert!((var - 1.0).abs() < 1e-12);
        // Equal power per octave for 1/f noise.
        let a = band_power(&x, 256, 512);
        let b = band_power(&x, 2048, 4096);
        assert!((10.0 * (a / b).log10()).abs() < 1.0, "{a} vs {b}");
    }

    #[test]
    fn speech_like_is_bursty_and_deterministic() {
        let mut r1 = stream_rng(7, Stream::Source(0));
        let mut r2 = stream_rng(7, Stream::Source(0));
        let x = speech_like(16_000 * 3, 16_000, &mut r1);
        assert_eq!(x, speech_like(16_000 * 3, 16_000, &mut r2));
        // Kurtosis of frame powers well above the Gaussian value.
        let powers: Vec<f64> = x.chunks(256).map(|c| c.iter().map(|v| v * v).sum::<f64>()).collect();
        let mean = powers.iter().sum::<f64>() / powers.len() as f64;
        let cv = (powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / powers.len() as f64).sqrt() / mean;
        assert!(cv > 0.8, "frame power coefficient of variation {cv}");
        assert!(x.contains(&0.0), "expected pauses");
    }

    #[test]
    fn streams_are_independent() {
        let a = white_noise(8, &mut stream_rng(3, Stream::Source(0)));
        let b = white_noise(8, &mut stream_rng(3, Stream::Source(1)));
        assert_ne!(a, b);
    }
}
