//! WAV files and JSON configuration.
//!
//! Samples are normalized to `[-1, 1]`: integer PCM is divided by `2^(bits−1)`
//! on read, so a full-scale PCM16 sample `32767` reads as `32767/32768`.
//!
//! JSON documents may be patched before deserialization with `key = value`
//! overrides, where `key` is a dotted path (`room.walls.t60`) and `value` is
//! parsed as JSON, falling back to a plain string. Precedence is override >
//! file > built-in default.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::roomsim::Scenario;
use crate::separators::{balanced_factors, Algorithm, SeparatorConfig};

/// Multichannel audio, `samples[channel][time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub sample_rate: u32,
    pub samples: Vec<Vec<f64>>,
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, samples: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Contract("sample rate must be > 0".into()));
        }
        if samples.is_empty() {
            return Err(Error::Contract("audio buffer needs at least one channel".into()));
        }
        let len = samples[0].len();
        if samples.iter().any(|c| c.len() != len) {
            return Err(Error::Contract("all channels must have equal length".into()));
        }
        Ok(Self { sample_rate, samples })
    }

    pub fn channels(&self) -> usize {
        self.samples.len()
    }

    pub fn len(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Errors unless the buffer is at `expected` Hz. Nothing is resampled.
    pub fn require_rate(&self, expected: u32) -> Result<()> {
        if self.sample_rate != expected {
            return Err(Error::Contract(format!(
                "sample rate {} Hz does not match the expected {expected} Hz",
                self.sample_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    Float32,
    Pcm16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteReport {
    /// Samples outside the PCM16 range that were clipped.
    pub clipped: usize,
}

fn interleaved<T, F>(reader: WavReader<BufReader<File>>, convert: F) -> Result<Vec<f64>>
where
    T: hound::Sample,
    F: Fn(T) -> f64,
{
    reader
        .into_samples::<T>()
        .map(|s| s.map(&convert).map_err(Error::from))
        .collect()
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let inner = || -> Result<AudioBuffer> {
        let reader = WavReader::open(path)?;
        let spec = reader.spec();
        let flat = match (spec.sample_format, spec.bits_per_sample) {
            (HoundFormat::Int, 16) => interleaved(reader, |s: i16| s as f64 / 32_768.0)?,
            (HoundFormat::Int, 24) => interleaved(reader, |s: i32| s as f64 / 8_388_608.0)?,
            (HoundFormat::Float, 32) => interleaved(reader, |s: f32| s as f64)?,
            (fmt, bits) => return Err(Error::UnsupportedWav(format!("{bits}-bit {fmt:?}"))),
        };
        let ch = spec.channels as usize;
        if ch == 0 || flat.len() % ch != 0 {
            return Err(Error::UnsupportedWav("truncated sample frame".into()));
        }
        let mut samples = vec![Vec::with_capacity(flat.len() / ch); ch];
        for (k, v) in flat.into_iter().enumerate() {
            samples[k % ch].push(v);
        }
        AudioBuffer::new(spec.sample_rate, samples)
    };
    inner().map_err(|e| e.in_file(path))
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, format: SampleFormat) -> Result<WriteReport> {
    let path = path.as_ref();
    let inner = || -> Result<WriteReport> {
        let channels = u16::try_from(buffer.channels())
            .map_err(|_| Error::UnsupportedWav(format!("{} channels", buffer.channels())))?;
        let (bits, sample_format) = match format {
            SampleFormat::Float32 => (32, HoundFormat::Float),
            SampleFormat::Pcm16 => (16, HoundFormat::Int),
        };
        let spec = WavSpec {
            channels,
            sample_rate: buffer.sample_rate,
            bits_per_sample: bits,
            sample_format,
        };
        let mut w = WavWriter::new(BufWriter::new(File::create(path)?), spec)?;
        let mut report = WriteReport::default();
        for t in 0..buffer.len() {
            for ch in &buffer.samples {
                match format {
                    SampleFormat::Float32 => w.write_sample(ch[t] as f32)?,
                    SampleFormat::Pcm16 => {
                        // f64::round rounds half away from zero.
                        let q = (ch[t] * 32_768.0).round();
                        if !(-32_768.0..=32_767.0).contains(&q) {
                            report.clipped += 1;
                        }
                        w.write_sample(q.clamp(-32_768.0, 32_767.0) as i16)?;
                    }
                }
            }
        }
        w.finalize()?;
        Ok(report)
    };
    inner().map_err(|e| e.in_file(path))
}

/// Parses a `key=value` override.
pub fn parse_override(arg: &str) -> Result<(String, String)> {
    arg.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| Error::Config(format!("override `{arg}` is not of the form key=value")))
}

/// Parses trailing command-line overrides: `--key value` pairs, or single
/// `key=value` tokens.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(tok) = it.next() {
        match tok.strip_prefix("--") {
            Some(key) if key.contains('=') => out.push(parse_override(key)?),
            Some(key) => {
                let value = it
                    .next()
                    .ok_or_else(|| Error::Config(format!("override `--{key}` has no value")))?;
                out.push((key.to_string(), value.clone()));
            }
            None => out.push(parse_override(tok)?),
        }
    }
    Ok(out)
}

/// Sets `key` (dotted path) in `doc`, creating intermediate objects.
pub fn apply_override(doc: &mut Value, key: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Map::new());
            } else {
                return Err(Error::Schema {
                    path: parts[..k].join("."),
                    message: format!("cannot set `{key}`: not an object"),
                });
            }
        }
        let map = node.as_object_mut().expect("checked above");
        if k + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Deserializes `doc` with JSON-path context on failure.
pub fn from_value<T: DeserializeOwned>(doc: Value) -> Result<T> {
    serde_path_to_error::deserialize(doc).map_err(|e| Error::Schema {
        path: match e.path().to_string() {
            p if p == "." => "$".to_string(),
            p => format!("$.{p}"),
        },
        message: e.into_inner().to_string(),
    })
}

/// Reads `path` as JSON, applies `overrides`, and deserializes.
pub fn load_json<T: DeserializeOwned>(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<T> {
    let path = path.as_ref();
    let inner = || -> Result<T> {
        let mut doc: Value = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        for (k, v) in overrides {
            apply_override(&mut doc, k, v)?;
        }
        from_value(doc)
    };
    inner().map_err(|e| e.in_file(path))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let inner = || -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, value)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        Ok(())
    };
    inner().map_err(|e| e.in_file(path))
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    load_scenario_with(path, &[])
}

pub fn load_scenario_with(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Scenario> {
    let path = path.as_ref();
    let scenario: Scenario = load_json(path, overrides)?;
    scenario.validate().map_err(|e| e.in_file(path))?;
    Ok(scenario)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// 36 microphones (6 × 6 for BiIVA), two sources, AuxIVA on two
    /// channels.
    PaperReplica,
}

/// On-disk separator configuration. Only `algorithm` is required; missing
/// fields take the algorithm's defaults, or the preset's when one is given.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparatorFile {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub mics: Option<usize>,
    #[serde(default)]
    pub sources: Option<usize>,
    #[serde(default)]
    pub sub_filters: Option<(usize, usize)>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub inner_iters: Option<usize>,
    #[serde(default)]
    pub loading: Option<f64>,
    #[serde(default)]
    pub weight_floor: Option<f64>,
}

impl SeparatorFile {
    /// Fills defaults and validates. Without a preset, `sources` defaults
    /// to 2 and `mics` to `sources` for AuxIVA; the other algorithms need
    /// `mics`.
    pub fn resolve(&self) -> Result<SeparatorConfig> {
        let mut cfg = match self.preset {
            Some(Preset::PaperReplica) => SeparatorConfig::paper_replica(self.algorithm),
            None => {
                let sources = self.sources.unwrap_or(2);
                let mics = match (self.mics, self.algorithm) {
                    (Some(m), _) => m,
                    (None, Algorithm::Auxiva) => sources,
                    (None, alg) => {
                        return Err(Error::Schema {
                            path: "$.mics".into(),
                            message: format!("{alg} needs the microphone count"),
                        })
                    }
                };
                SeparatorConfig::new(self.algorithm, mics, sources)
            }
        };
        if let Some(m) = self.mics {
            cfg.mics = m;
            if cfg.algorithm == Algorithm::Biiva && self.sub_filters.is_none() {
                cfg.sub_filters = Some(balanced_factors(m));
            }
        }
        if let Some(n) = self.sources {
            cfg.sources = n;
        }
        if let Some(sf) = self.sub_filters {
            cfg.sub_filters = Some(sf);
        }
        if let Some(a) = self.alpha {
            cfg.alpha = a;
        }
        if let Some(i) = self.inner_iters {
            cfg.inner_iters = i;
        }
        if let Some(l) = self.loading {
            cfg.loading = l;
        }
        if let Some(f) = self.weight_floor {
            cfg.weight_floor = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_separator_config(path: impl AsRef<Path>) -> Result<SeparatorConfig> {
    load_separator_config_with(path, &[])
}

pub fn load_separator_config_with(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<SeparatorConfig> {
    let path = path.as_ref();
    let file: SeparatorFile = load_json(path, overrides)?;
    file.resolve().map_err(|e| e.in_file(path))
}
