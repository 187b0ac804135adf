use rayon::prelude::*;
use serde::Serialize;

use super::rir::{rir_bank, rir_length};
use super::signals::{stream_rng, white_noise, Stream};
use super::{Scenario, SceneGeometry};
use crate::error::{Error, Result};
use crate::fftconv::Convolver;

/// Level of the sensor white noise relative to the point-noise field,
/// `10^(−0.75)`.
pub const WHITE_NOISE_GAIN: f64 = 0.177_827_941_003_892_3;

/// Mean-square level of source 0's image at microphone 0 after scaling.
const REFERENCE_POWER: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixMetadata {
    pub sample_rate: u32,
    pub geometry: SceneGeometry,
    pub rir_length: usize,
    /// Amplitude applied to each dry target signal.
    pub source_gains: Vec<f64>,
    /// Overall noise scale `σ_v` (0 when noise is disabled).
    pub sigma_v: f64,
    /// Standard deviation of the unscaled white component before the
    /// `10^(−0.75)` factor: the RMS of the point-noise field.
    pub white_std: f64,
    /// Whether an input SIR target was applied (false for one source).
    pub isir_applied: bool,
    /// Measured input SIR at microphone 0.
    pub isir_db: Option<f64>,
    /// Measured input SNR at microphone 0.
    pub isnr_db: Option<f64>,
}

/// A synthesized scene. `observations[m] = Σ_n images[n][m] + noise[m]`,
/// summed in that order, sample for sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureBundle {
    pub observations: Vec<Vec<f64>>,
    /// Scaled source images, `[source][mic][sample]`.
    pub images: Vec<Vec<Vec<f64>>>,
    pub noise: Vec<Vec<f64>>,
    pub meta: MixMetadata,
}

impl MixtureBundle {
    pub fn mics(&self) -> usize {
        self.observations.len()
    }

    pub fn sources(&self) -> usize {
        self.images.len()
    }

    pub fn len(&self) -> usize {
        self.observations.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The images of every source at microphone `mic`.
    pub fn reference_images(&self, mic: usize) -> Vec<Vec<f64>> {
        self.images.iter().map(|per_mic| per_mic[mic].clone()).collect()
    }

    /// Noise-free mixture at every microphone.
    pub fn clean_mixture(&self) -> Vec<Vec<f64>> {
        (0..self.mics())
            .map(|m| {
                let mut acc = vec![0.0; self.len()];
                for img in &self.images {
                    acc.iter_mut().zip(&img[m]).for_each(|(a, v)| *a += v);
                }
                acc
            })
            .collect()
    }
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn db(num: f64, den: f64) -> f64 {
    10.0 * (num / den).log10()
}

/// Convolves every signal with its impulse responses: `[signal][mic]`.
fn spatialize(signals: &[Vec<f64>], rirs: &[Vec<Vec<f64>>], rir_len: usize) -> Vec<Vec<Vec<f64>>> {
    signals
        .par_iter()
        .zip(rirs)
        .map(|(s, per_mic)| {
            let conv = Convolver::new(s, rir_len);
            per_mic.par_iter().map(|h| conv.apply(h)).collect()
        })
        .collect()
}

/// Renders `scenario` with the given dry target and point-noise signals.
///
/// Targets are scaled so source 0's image at microphone 0 has mean-square
/// `0.01` and every other target sits `isir_db` below it (their sum, split
/// evenly). The noise is `σ_v·(v_p + 10^(−0.75)·v_w)`, where `v_w` is
/// white Gaussian noise with the RMS of the point-noise field `v_p` on
/// every channel and `σ_v` sets the input SNR at microphone 0. With
/// `isnr_db = None` no noise is added and `noise_signals` is ignored.
pub fn mix(
    scenario: &Scenario,
    target_signals: &[Vec<f64>],
    noise_signals: &[Vec<f64>],
    white_seed: u64,
) -> Result<MixtureBundle> {
    let geometry = scenario.geometry()?;
    let n_src = geometry.sources.len();
    if target_signals.len() != n_src {
        return Err(Error::Contract(format!(
            "scenario has {n_src} sources but {} target signals were given",
            target_signals.len()
        )));
    }
    let len = target_signals[0].len();
    if len == 0 {
        return Err(Error::Contract("target signals are empty".into()));
    }
    let noisy = scenario.isnr_db.is_some();
    if noisy && noise_signals.len() != geometry.noise.len() {
        return Err(Error::Contract(format!(
            "scenario has {} noise sources but {} noise signals were given",
            geometry.noise.len(),
            noise_signals.len()
        )));
    }
    let all = target_signals.iter().chain(if noisy { noise_signals } else { &[] });
    if all.clone().any(|s| s.len() != len) {
        return Err(Error::Contract("all signals must have equal length".into()));
    }
    if let Some(n) = target_signals.iter().position(|s| energy(s) == 0.0) {
        return Err(Error::Contract(format!("target signal {n} has zero energy")));
    }

    let room = &scenario.room;
    let rir_len = rir_length(room, &geometry.reflection);
    let mics = geometry.mics.len();
    let rirs = rir_bank(room, &geometry.reflection, &geometry.sources, &geometry.mics)?;
    let mut images = spatialize(target_signals, &rirs, rir_len);

    let e: Vec<f64> = images.iter().map(|img| energy(&img[0])).collect();
    if let Some(n) = e.iter().position(|&v| v == 0.0) {
        return Err(Error::Contract(format!("source {n} produces no signal at microphone 0")));
    }
    let e0 = REFERENCE_POWER * len as f64;
    let ratio = 10f64.powf(scenario.isir_db / 10.0);
    let gains: Vec<f64> = (0..n_src)
        .map(|n| {
            let want = if n == 0 { e0 } else { e0 / (ratio * (n_src - 1) as f64) };
            (want / e[n]).sqrt()
        })
        .collect();
    for (img, g) in images.iter_mut().zip(&gains) {
        for ch in img.iter_mut() {
            ch.iter_mut().for_each(|v| *v *= g);
        }
    }

    let mut clean0 = vec![0.0; len];
    for img in &images {
        clean0.iter_mut().zip(&img[0]).for_each(|(a, v)| *a += v);
    }
    let target_energy = energy(&clean0);

    let (noise, sigma_v, white_std) = match scenario.isnr_db {
        None => (vec![vec![0.0; len]; mics], 0.0, 0.0),
        Some(isnr) => {
            let noise_rirs = rir_bank(room, &geometry.reflection, &geometry.noise, &geometry.mics)?;
            let point = spatialize(noise_signals, &noise_rirs, rir_len);
            let mut field = vec![vec![0.0; len]; mics];
            for src in &point {
                for (acc, ch) in field.iter_mut().zip(src) {
                    acc.iter_mut().zip(ch).for_each(|(a, v)| *a += v);
                }
            }
            let field_power = field.iter().map(|c| energy(c)).sum::<f64>() / (mics * len) as f64;
            if !(field_power > 0.0) {
                return Err(Error::Contract(
                    "point-noise field has zero energy; cannot calibrate the input SNR".into(),
                ));
            }
            let white_std = field_power.sqrt();
            let mut rng = stream_rng(white_seed, Stream::White);
            for ch in field.iter_mut() {
                let w = white_noise(len, &mut rng);
                ch.iter_mut()
                    .zip(&w)
                    .for_each(|(a, v)| *a += WHITE_NOISE_GAIN * white_std * v);
            }
            let sigma_v = (target_energy / (energy(&field[0]) * 10f64.powf(isnr / 10.0))).sqrt();
            for ch in field.iter_mut() {
                ch.iter_mut().for_each(|v| *v *= sigma_v);
            }
            (field, sigma_v, white_std)
        }
    };

    let observations: Vec<Vec<f64>> = (0..mics)
        .map(|m| {
            let mut acc = vec![0.0; len];
            for img in &images {
                acc.iter_mut().zip(&img[m]).for_each(|(a, v)| *a += v);
            }
            acc.iter_mut().zip(&noise[m]).for_each(|(a, v)| *a += v);
            acc
        })
        .collect();

    let scaled: Vec<f64> = images.iter().map(|img| energy(&img[0])).collect();
    let meta = MixMetadata {
        sample_rate: room.sample_rate,
        geometry,
        rir_length: rir_len,
        source_gains: gains,
        sigma_v,
        white_std,
        isir_applied: n_src > 1,
        isir_db: (n_src > 1).then(|| db(scaled[0], scaled[1..].iter().sum())),
        isnr_db: noisy.then(|| db(target_energy, energy(&noise[0]))),
    };
    Ok(MixtureBundle {
        observations,
        images,
        noise,
        meta,
    })
}
