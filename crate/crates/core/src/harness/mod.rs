//! End-to-end experiment pipeline: simulate a scene, separate it online,
//! and score the result.
//!
//! The `cmd_*` functions back the command-line subcommands and work on
//! files. The underlying in-memory steps ([`simulate`], [`separate`],
//! [`evaluate`]) are public as well.

mod benchmark;
mod commands;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{EvalConfig, EvalReport, Evaluator};
use crate::roomsim::signals::{pink_noise, speech_like, stream_rng, Stream};
use crate::roomsim::{mix, MixtureBundle, Scenario};
use crate::separators::{SeparatorConfig, SeparatorState, StageTimings};
use crate::stft::{SpectralFrame, Stft, StftConfig};

pub use benchmark::{run_benchmark, BenchmarkOutcome, RunFailure, RunManifest, RunRecord, SeedAxis, SummaryRow};
pub use commands::{cmd_benchmark, cmd_evaluate, cmd_rir, cmd_separate, cmd_simulate, output_root, OUTPUT_ROOT_ENV};

/// Synthetic speech-like dry signals for every target in `scenario`.
pub fn synthetic_sources(scenario: &Scenario, seed: u64) -> Vec<Vec<f64>> {
    let len = scenario.samples();
    (0..scenario.sources.len())
        .map(|n| speech_like(len, scenario.sample_rate(), &mut stream_rng(seed, Stream::Source(n))))
        .collect()
}

/// Pink-noise signals for every point-noise source in `scenario`.
pub fn synthetic_noise(scenario: &Scenario, seed: u64, len: usize) -> Vec<Vec<f64>> {
    (0..scenario.noise_count())
        .map(|k| pink_noise(len, &mut stream_rng(seed, Stream::PointNoise(k))))
        .collect()
}

/// Renders `scenario` with synthetic sources and noise, all drawn from
/// `scenario.seed`.
pub fn simulate(scenario: &Scenario) -> Result<MixtureBundle> {
    simulate_with_sources(scenario, &synthetic_sources(scenario, scenario.seed))
}

/// Renders `scenario` with the given dry targets. Noise placement, noise
/// signals and sensor noise follow `scenario.seed`.
pub fn simulate_with_sources(scenario: &Scenario, targets: &[Vec<f64>]) -> Result<MixtureBundle> {
    let len = targets.first().map_or(0, Vec::len);
    let noise = if scenario.isnr_db.is_some() {
        synthetic_noise(scenario, scenario.seed, len)
    } else {
        Vec::new()
    };
    mix(scenario, targets, &noise, scenario.seed)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SeparateOptions {
    /// Input channels fed to the separator, in order. `None` uses every
    /// channel.
    pub channels: Option<Vec<usize>>,
    /// Microphone (index into the selected channels) that projection back
    /// scales the outputs to.
    pub reference: usize,
    /// Collect a per-stage timing breakdown.
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StageLog {
    pub statistics_s: f64,
    pub filters_s: f64,
    pub constraint_s: f64,
    pub output_s: f64,
}

impl From<&StageTimings> for StageLog {
    fn from(t: &StageTimings) -> Self {
        Self {
            statistics_s: t.statistics.as_secs_f64(),
            filters_s: t.filters.as_secs_f64(),
            constraint_s: t.constraint.as_secs_f64(),
            output_s: t.output.as_secs_f64(),
        }
    }
}

/// Run statistics of one separation stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationLog {
    pub config: SeparatorConfig,
    pub channels: Vec<usize>,
    pub frames: usize,
    pub bins: usize,
    /// Wall time of the frame loop (separator update, projection back).
    pub wall_s: f64,
    pub frames_per_s: f64,
    /// Wall time over signal duration.
    pub real_time_factor: f64,
    /// Frame-bin pairs whose orthogonal-constraint solve was singular.
    pub skipped_constraints: usize,
    pub stages: Option<StageLog>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separation {
    /// Outputs scaled to the reference microphone by projection back.
    pub outputs: Vec<Vec<f64>>,
    /// Outputs as produced by the demixing filters.
    pub raw: Vec<Vec<f64>>,
    pub log: SeparationLog,
}

/// Separates `observations` frame by frame: STFT, one `process_frame` per
/// frame in arrival order, projection back with the filters of that same
/// frame, and overlap-add synthesis. Frame `j` of the output depends only
/// on input frames `0..=j`.
pub fn separate(
    observations: &[Vec<f64>],
    sample_rate: u32,
    cfg: &SeparatorConfig,
    opts: &SeparateOptions,
) -> Result<Separation> {
    let channels: Vec<usize> = opts
        .channels
        .clone()
        .unwrap_or_else(|| (0..observations.len()).collect());
    if let Some(&bad) = channels.iter().find(|&&c| c >= observations.len()) {
        return Err(Error::Contract(format!(
            "channel {bad} requested but the input has {} channels",
            observations.len()
        )));
    }
    if channels.len() != cfg.mics {
        return Err(Error::Contract(format!(
            "separator expects {} channels, {} selected",
            cfg.mics,
            channels.len()
        )));
    }
    let input: Vec<Vec<f64>> = channels.iter().map(|&c| observations[c].clone()).collect();
    let len = input.first().map_or(0, Vec::len);
    let stft = Stft::new(StftConfig {
        sample_rate,
        ..StftConfig::default()
    })?;
    let frames = stft.analyze(&input)?;
    let bins = stft.config().bins();
    let mut state = SeparatorState::new(cfg.clone(), bins)?;
    if opts.timing {
        state.enable_timing();
    }

    let start = Instant::now();
    let mut raw_frames: Vec<SpectralFrame> = Vec::with_capacity(frames.len());
    let mut scaled_frames: Vec<SpectralFrame> = Vec::with_capacity(frames.len());
    for frame in &frames {
        let est = state.process_frame(frame)?;
        let scaled = state.projection_back(&est, opts.reference).map_err(|e| Error::Frame {
            index: frame.index,
            source: Box::new(e),
        })?;
        raw_frames.push(est.into_frame());
        scaled_frames.push(scaled.into_frame());
    }
    let wall = start.elapsed();

    let finish = |frames: &[SpectralFrame]| -> Result<Vec<Vec<f64>>> {
        let mut y = stft.synthesize(frames)?;
        y.iter_mut().for_each(|c| c.truncate(len));
        Ok(y)
    };
    let duration = len as f64 / sample_rate as f64;
    let log = SeparationLog {
        config: cfg.clone(),
        channels,
        frames: frames.len(),
        bins,
        wall_s: wall.as_secs_f64(),
        frames_per_s: frames.len() as f64 / wall.max(Duration::from_nanos(1)).as_secs_f64(),
        real_time_factor: wall.as_secs_f64() / duration,
        skipped_constraints: state.skipped_constraints(),
        stages: state.timings().map(StageLog::from),
    };
    Ok(Separation {
        outputs: finish(&scaled_frames)?,
        raw: finish(&raw_frames)?,
        log,
    })
}

/// Scores `estimates` against `references` after matching outputs to
/// references by `cfg.pairing`. Returns the report and
/// the pairing (`pairing[n]` is the estimate matched to reference `n`).
pub fn evaluate(
    estimates: &[Vec<f64>],
    references: &[Vec<f64>],
    mixture: &[f64],
    sample_rate: u32,
    cfg: EvalConfig,
) -> Result<(EvalReport, Vec<usize>)> {
    let ev = Evaluator::new(references, sample_rate, cfg)?;
    evaluate_with(&ev, &ev.baseline(mixture)?, estimates)
}

pub(crate) fn evaluate_with(
    ev: &Evaluator,
    baseline: &crate::metrics::Baseline,
    estimates: &[Vec<f64>],
) -> Result<(EvalReport, Vec<usize>)> {
    let pairing = ev.pair(estimates, ev.config().pairing)?;
    let aligned: Vec<Vec<f64>> = pairing.iter().map(|&e| estimates[e].clone()).collect();
    Ok((ev.report(&aligned, baseline)?, pairing))
}
