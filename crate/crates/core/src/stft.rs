//! Multichannel analysis/synthesis filter bank.
//!
//! Frame `j` covers samples `[j·hop, j·hop + fft_size)`; the tail of the
//! signal is zero-padded up to the last frame. Spectra are one-sided
//! (`fft_size/2 + 1` bins) with unnormalized forward transforms.
//!
//! Synthesis uses the weighted overlap-add dual of the analysis window,
//! `g[n] = w[n] / Σ_k w²[n + k·hop]`, which reconstructs untouched frames
//! exactly wherever the overlap is complete (everything except the first and
//! last `fft_size - hop` samples).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5·cos(2πn/N)`.
    #[default]
    Hann,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => (0..len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowKind,
    pub sample_rate: u32,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_size: 1024,
            hop: 256,
            window: WindowKind::Hann,
            sample_rate: 16_000,
        }
    }
}

impl StftConfig {
    /// Number of one-sided frequency bins.
    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.fft_size < 2 || !self.fft_size.is_multiple_of(2) {
            return Err(Error::Config(format!("fft_size must be even and >= 2, got {}", self.fft_size)));
        }
        if self.hop == 0 || !self.fft_size.is_multiple_of(self.hop) {
            return Err(Error::Config(format!(
                "hop ({}) must divide fft_size ({})",
                self.hop, self.fft_size
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        Ok(())
    }

    /// Frames needed to cover `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len <= self.fft_size {
            1
        } else {
            (len - self.fft_size).div_ceil(self.hop) + 1
        }
    }

    /// Length of the signal produced by synthesizing `frames` frames.
    pub fn synthesis_len(&self, frames: usize) -> usize {
        if frames == 0 {
            0
        } else {
            (frames - 1) * self.hop + self.fft_size
        }
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }
}

/// One STFT time frame: an `M`-channel observation vector for every bin.
#[derive(Clone, PartialEq)]
pub struct SpectralFrame {
    pub index: usize,
    bins: usize,
    channels: usize,
    // bin-major: data[i * channels + m]
    data: Vec<C64>,
}

impl fmt::Debug for SpectralFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFrame")
            .field("index", &self.index)
            .field("bins", &self.bins)
            .field("channels", &self.channels)
            .finish()
    }
}

impl SpectralFrame {
    pub fn zeros(index: usize, bins: usize, channels: usize) -> Self {
        Self {
            index,
            bins,
            channels,
            data: vec![ZERO; bins * channels],
        }
    }

    /// Builds a frame from per-bin vectors (each of length `channels`).
    pub fn from_bins(index: usize, bins: &[Vec<C64>]) -> Result<Self> {
        let channels = bins.first().map_or(0, Vec::len);
        if channels == 0 || bins.iter().any(|b| b.len() != channels) {
            return Err(Error::Contract("frame bins must be non-empty and equally sized".into()));
        }
        Ok(Self {
            index,
            bins: bins.len(),
            channels,
            data: bins.concat(),
        })
    }

    #[inline]
    pub fn num_bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Observation vector `x_i` at bin `i`.
    #[inline]
    pub fn bin(&self, i: usize) -> &[C64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    #[inline]
    pub fn bin_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.channels..(i + 1) * self.channels]
    }

    pub fn channel(&self, m: usize) -> Vec<C64> {
        (0..self.bins).map(|i| self.bin(i)[m]).collect()
    }

    /// Keeps only the first `count` channels.
    pub fn truncate_channels(&self, count: usize) -> SpectralFrame {
        let mut out = SpectralFrame::zeros(self.index, self.bins, count);
        for i in 0..self.bins {
            out.bin_mut(i).copy_from_slice(&self.bin(i)[..count]);
        }
        out
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Planned forward/inverse transforms for one configuration.
pub struct Stft {
    cfg: StftConfig,
    window: Vec<f64>,
    synthesis_window: Vec<f64>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Stft {
    pub fn new(cfg: StftConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.fft_size;
        let window = cfg.window.coefficients(n);
        let mut overlap = vec![0.0; cfg.hop];
        for (k, w) in window.iter().enumerate() {
            overlap[k % cfg.hop] += w * w;
        }
        if overlap.iter().any(|&s| s <= 0.0) {
            return Err(Error::Config("window/hop pair has no overlap-add dual".into()));
        }
        let synthesis_window = window
            .iter()
            .enumerate()
            .map(|(k, w)| w / overlap[k % cfg.hop])
            .collect();
        let mut planner = RealFftPlanner::<f64>::new();
        Ok(Self {
            cfg,
            window,
            synthesis_window,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.cfg
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Transforms an `M`-channel signal into a sequence of frames.
    pub fn analyze(&self, signal: &[Vec<f64>]) -> Result<Vec<SpectralFrame>> {
        let channels = signal.len();
        let len = signal.first().map_or(0, Vec::len);
        if channels == 0 || signal.iter().any(|c| c.len() != len) {
            return Err(Error::Contract("signal must have >= 1 channel of equal length".into()));
        }
        if len < self.cfg.fft_size {
            return Err(Error::Contract(format!(
                "signal length {len} is shorter than fft_size {}",
                self.cfg.fft_size
            )));
        }
        let bins = self.cfg.bins();
        let count = self.cfg.frame_count(len);
        let mut frames: Vec<SpectralFrame> =
            (0..count).map(|j| SpectralFrame::zeros(j, bins, channels)).collect();
        let mut buf = self.forward.make_input_vec();
        let mut spec = self.forward.make_output_vec();
        let mut scratch = self.forward.make_scratch_vec();
        for (m, chan) in signal.iter().enumerate() {
            for (j, frame) in frames.iter_mut().enumerate() {
                let start = j * self.cfg.hop;
                for (k, (b, w)) in buf.iter_mut().zip(&self.window).enumerate() {
                    *b = chan.get(start + k).copied().unwrap_or(0.0) * w;
                }
                self.forward
                    .process_with_scratch(&mut buf, &mut spec, &mut scratch)
                    .map_err(|e| Error::Contract(format!("forward fft: {e}")))?;
                for (i, &z) in spec.iter().enumerate() {
                    frame.bin_mut(i)[m] = z;
                }
            }
        }
        Ok(frames)
    }

    /// Weighted overlap-add resynthesis. Returns `synthesis_len(frames.len())`
    /// samples per channel.
    pub fn synthesize(&self, frames: &[SpectralFrame]) -> Result<Vec<Vec<f64>>> {
        let Some(first) = frames.first() else {
            return Ok(Vec::new());
        };
        let bins = self.cfg.bins();
        let channels = first.channels();
        if frames.iter().any(|f| f.num_bins() != bins || f.channels() != channels) {
            return Err(Error::Contract(format!(
                "frames do not match the configuration ({bins} bins, {channels} channels)"
            )));
        }
        let n = self.cfg.fft_size;
        let scale = 1.0 / n as f64;
        let len = self.cfg.synthesis_len(frames.len());
        let mut out = vec![vec![0.0; len]; channels];
        let mut spec = self.inverse.make_input_vec();
        let mut buf = self.inverse.make_output_vec();
        let mut scratch = self.inverse.make_scratch_vec();
        for (m, chan) in out.iter_mut().enumerate() {
            for (j, frame) in frames.iter().enumerate() {
                for (i, s) in spec.iter_mut().enumerate() {
                    *s = frame.bin(i)[m];
                }
                spec[0].im = 0.0;
                spec[bins - 1].im = 0.0;
                self.inverse
                    .process_with_scratch(&mut spec, &mut buf, &mut scratch)
                    .map_err(|e| Error::Contract(format!("inverse fft: {e}")))?;
                let start = j * self.cfg.hop;
                for k in 0..n {
                    chan[start + k] += buf[k] * scale * self.synthesis_window[k];
                }
            }
        }
        Ok(out)
    }
}
