use std::path::{Path, PathBuf};

use serde::Serialize;

use super::benchmark::{run_benchmark, BenchmarkOutcome, RunManifest};
use super::{evaluate, separate, simulate, simulate_with_sources, SeparateOptions, Separation};
use crate::error::{Error, Result};
use crate::io::{read_wav, write_json, write_wav, AudioBuffer, SampleFormat};
use crate::metrics::{EvalConfig, EvalReport};
use crate::roomsim::{measure_t60, rir_bank, rir_length, MixtureBundle, Scenario, SceneGeometry};
use crate::separators::SeparatorConfig;

/// Environment variable overriding the root of relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "ONLINE_IVA_OUT";

/// `$ONLINE_IVA_OUT` if set and non-empty, else the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::from(e).in_file(out))
}

#[derive(Debug, Clone, Serialize)]
pub struct RirInfo {
    pub geometry: SceneGeometry,
    pub sample_rate: u32,
    pub rir_length: usize,
    /// Schroeder T60 of each target's response at microphone 0, seconds.
    pub measured_t60_s: Vec<Option<f64>>,
}

/// Writes one multichannel float32 WAV per target (`rir_source{n}.wav`)
/// and per noise source (`rir_noise{k}.wav`), plus `rir.json`.
pub fn cmd_rir(scenario: &Scenario, out: &Path) -> Result<RirInfo> {
    prepare(out)?;
    let geometry = scenario.geometry()?;
    let room = &scenario.room;
    let fs = scenario.sample_rate();
    let targets = rir_bank(room, &geometry.reflection, &geometry.sources, &geometry.mics)?;
    let noise = rir_bank(room, &geometry.reflection, &geometry.noise, &geometry.mics)?;
    for (n, h) in targets.iter().enumerate() {
        write_wav(&AudioBuffer::new(fs, h.clone())?, out.join(format!("rir_source{n}.wav")), SampleFormat::Float32)?;
    }
    for (k, h) in noise.iter().enumerate() {
        write_wav(&AudioBuffer::new(fs, h.clone())?, out.join(format!("rir_noise{k}.wav")), SampleFormat::Float32)?;
    }
    let info = RirInfo {
        rir_length: rir_length(room, &geometry.reflection),
        measured_t60_s: targets.iter().map(|h| measure_t60(&h[0], fs).ok()).collect(),
        sample_rate: fs,
        geometry,
    };
    write_json(&info, out.join("rir.json"))?;
    Ok(info)
}

/// Renders `scenario` and writes `mixture.wav` (every microphone),
/// `references.wav` (each source's image at microphone 0), `noise.wav` and
/// `meta.json`. With no `sources`, speech-like signals are synthesized from
/// the scenario seed. Given source files use their first channel and are cut
/// to the shortest file and to the scenario duration.
pub fn cmd_simulate(scenario: &Scenario, sources: &[PathBuf], out: &Path) -> Result<MixtureBundle> {
    prepare(out)?;
    let fs = scenario.sample_rate();
    let bundle = if sources.is_empty() {
        simulate(scenario)?
    } else {
        if sources.len() != scenario.sources.len() {
            return Err(Error::Config(format!(
                "scenario has {} sources but {} source files were given",
                scenario.sources.len(),
                sources.len()
            )));
        }
        let mut dry = Vec::with_capacity(sources.len());
        for p in sources {
            let b = read_wav(p)?;
            b.require_rate(fs).map_err(|e| e.in_file(p))?;
            dry.push(b.samples.into_iter().next().expect("at least one channel"));
        }
        let len = dry.iter().map(Vec::len).min().unwrap_or(0).min(scenario.samples());
        dry.iter_mut().for_each(|s| s.truncate(len));
        simulate_with_sources(scenario, &dry)?
    };
    write_wav(&AudioBuffer::new(fs, bundle.observations.clone())?, out.join("mixture.wav"), SampleFormat::Float32)?;
    write_wav(&AudioBuffer::new(fs, bundle.reference_images(0))?, out.join("references.wav"), SampleFormat::Float32)?;
    write_wav(&AudioBuffer::new(fs, bundle.noise.clone())?, out.join("noise.wav"), SampleFormat::Float32)?;
    write_json(&bundle.meta, out.join("meta.json"))?;
    Ok(bundle)
}

/// Separates a multichannel WAV and writes `separated.wav` (projection back
/// to the reference microphone), `separated_raw.wav` and `separate.json`.
pub fn cmd_separate(mixture: &Path, cfg: &SeparatorConfig, out: &Path, opts: &SeparateOptions) -> Result<Separation> {
    prepare(out)?;
    let input = read_wav(mixture)?;
    let sep = separate(&input.samples, input.sample_rate, cfg, opts)?;
    let fs = input.sample_rate;
    write_wav(&AudioBuffer::new(fs, sep.outputs.clone())?, out.join("separated.wav"), SampleFormat::Float32)?;
    write_wav(&AudioBuffer::new(fs, sep.raw.clone())?, out.join("separated_raw.wav"), SampleFormat::Float32)?;
    write_json(&sep.log, out.join("separate.json"))?;
    Ok(sep)
}

/// Scores separated signals against reference images and writes the
/// per-segment CSV to `out`. `mixture` supplies the unprocessed signal at
/// `cfg.reference_channel` for the improvement baseline.
pub fn cmd_evaluate(
    estimates: &Path,
    references: &Path,
    mixture: &Path,
    cfg: EvalConfig,
    out: &Path,
) -> Result<(EvalReport, Vec<usize>)> {
    let est = read_wav(estimates)?;
    let refs = read_wav(references)?;
    let mix = read_wav(mixture)?;
    refs.require_rate(est.sample_rate).map_err(|e| e.in_file(references))?;
    mix.require_rate(est.sample_rate).map_err(|e| e.in_file(mixture))?;
    if cfg.reference_channel >= mix.channels() {
        return Err(Error::Config(format!(
            "reference channel {} out of range for a {}-channel mixture",
            cfg.reference_channel,
            mix.channels()
        )));
    }
    let len = est.len().min(refs.len()).min(mix.len());
    let cut = |b: &AudioBuffer| -> Vec<Vec<f64>> { b.samples.iter().map(|c| c[..len].to_vec()).collect() };
    let (report, pairing) = evaluate(
        &cut(&est),
        &cut(&refs),
        &mix.samples[cfg.reference_channel][..len],
        est.sample_rate,
        cfg,
    )?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        prepare(dir)?;
    }
    report.save_csv(out)?;
    Ok((report, pairing))
}

/// Loads the manifest, runs every `(separator, seed)` pair and writes the
/// results under the manifest's output directory.
pub fn cmd_benchmark(manifest: &Path, overrides: &[(String, String)]) -> Result<(BenchmarkOutcome, PathBuf)> {
    let m = RunManifest::load(manifest, overrides, &output_root())?;
    let plan = m.plan()?;
    let outcome = run_benchmark(&plan, Some(&m.output_dir))?;
    Ok((outcome, m.output_dir))
}
