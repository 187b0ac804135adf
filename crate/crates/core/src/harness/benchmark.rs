use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_with, separate, simulate_with_sources, synthetic_sources, SeparateOptions, SeparationLog};
use crate::error::{Error, Result};
use crate::io::{load_json, load_scenario, load_separator_config, write_json, write_wav, AudioBuffer, SampleFormat};
use crate::metrics::{EvalConfig, EvalReport, Evaluator, SENTINEL_DB};
use crate::roomsim::Scenario;
use crate::separators::{Algorithm, SeparatorConfig};

/// Which random draws change from seed to seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedAxis {
    /// Source signals, noise placement and noise signals all follow the seed.
    #[default]
    Both,
    /// Only the source signals change; the noise scene uses the scenario's
    /// own seed.
    Signals,
    /// Only the noise scene changes; source signals use the scenario's seed.
    Noise,
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_output() -> PathBuf {
    PathBuf::from("benchmark")
}

/// A benchmark description. Relative `scenario` and `separators` paths are
/// resolved against the manifest's directory, a relative `output_dir`
/// against the output root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub scenario: PathBuf,
    /// One separator config file per run label (the file stem).
    pub separators: Vec<PathBuf>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub seed_axis: SeedAxis,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub eval: EvalConfig,
    /// Also write the separated signals of every run.
    #[serde(default)]
    pub write_audio: bool,
}

impl RunManifest {
    /// Loads a manifest and resolves its paths.
    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)], output_root: &Path) -> Result<Self> {
        let path = path.as_ref();
        let mut m: RunManifest = load_json(path, overrides)?;
        let base = path.parent().unwrap_or(Path::new("."));
        m.scenario = base.join(&m.scenario);
        m.separators = m.separators.iter().map(|p| base.join(p)).collect();
        m.output_dir = output_root.join(&m.output_dir);
        m.validate().map_err(|e| e.in_file(path))?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.separators.is_empty() {
            return Err(Error::Config("manifest lists no separators".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("manifest lists no seeds".into()));
        }
        for p in std::iter::once(&self.scenario).chain(&self.separators) {
            if !p.is_file() {
                return Err(Error::Config(format!("{} does not exist", p.display())));
            }
        }
        self.eval.validate()
    }

    /// Loads the referenced scenario and separator configs.
    pub fn plan(&self) -> Result<BenchmarkPlan> {
        let scenario = load_scenario(&self.scenario)?;
        let mut separators = Vec::new();
        for p in &self.separators {
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("separator{}", separators.len()));
            if separators.iter().any(|(l, _)| l == &label) {
                return Err(Error::Config(format!("duplicate separator label `{label}`")));
            }
            separators.push((label, load_separator_config(p)?));
        }
        Ok(BenchmarkPlan {
            scenario,
            separators,
            seeds: self.seeds.clone(),
            seed_axis: self.seed_axis,
            eval: self.eval,
            write_audio: self.write_audio,
        })
    }
}

/// A fully loaded benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkPlan {
    pub scenario: Scenario,
    /// `(label, config)` in run order.
    pub separators: Vec<(String, SeparatorConfig)>,
    pub seeds: Vec<u64>,
    pub seed_axis: SeedAxis,
    pub eval: EvalConfig,
    pub write_audio: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub label: String,
    pub seed: u64,
    /// `pairing[n]` is the separator output matched to source `n`.
    pub pairing: Vec<usize>,
    pub separation: SeparationLog,
    #[serde(skip)]
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunFailure {
    pub label: String,
    pub seed: u64,
    pub error: String,
}

/// Mean ± sample standard deviation over every `(seed, source)` pair of
/// one label in one segment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub label: String,
    pub algorithm: Algorithm,
    pub segment_index: usize,
    pub t_start_s: f64,
    pub samples: usize,
    pub sir_improvement_mean_db: f64,
    pub sir_improvement_std_db: f64,
    pub sdr_improvement_mean_db: f64,
    pub sdr_improvement_std_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutcome {
    pub runs: Vec<RunRecord>,
    pub failures: Vec<RunFailure>,
    pub summary: Vec<SummaryRow>,
    /// Human-readable converged-performance table.
    pub table: String,
}

impl BenchmarkOutcome {
    /// Mean over runs and sources of the converged SIR improvement.
    pub fn converged_sir_improvement(&self, label: &str) -> Option<f64> {
        mean_std(&self.converged_samples(label, |s| s.sir_improvement_db)).map(|(m, _)| m)
    }

    pub fn converged_sdr_improvement(&self, label: &str) -> Option<f64> {
        mean_std(&self.converged_samples(label, |s| s.sdr_improvement_db)).map(|(m, _)| m)
    }

    fn converged_samples(&self, label: &str, f: impl Fn(&crate::metrics::SourceSummary) -> f64) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.label == label)
            .flat_map(|r| r.report.converged.iter().map(&f))
            .collect()
    }

    /// Whether every run completed.
    pub fn complete(&self) -> bool {
        self.failures.is_empty()
    }
}

fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let xs: Vec<f64> = xs.iter().map(|v| v.clamp(-SENTINEL_DB, SENTINEL_DB)).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Some((mean, var.sqrt()))
}

fn run_dir(out: &Path, label: &str, seed: u64) -> PathBuf {
    out.join("runs").join(label).join(format!("seed{seed}"))
}

struct SeedResult {
    runs: Vec<RunRecord>,
    failures: Vec<RunFailure>,
}

fn run_seed(plan: &BenchmarkPlan, seed: u64, out: Option<&Path>) -> Result<SeedResult> {
    let base_seed = plan.scenario.seed;
    let mut scenario = plan.scenario.clone();
    let signal_seed = match plan.seed_axis {
        SeedAxis::Both => {
            scenario.seed = seed;
            seed
        }
        SeedAxis::Signals => seed,
        SeedAxis::Noise => {
            scenario.seed = seed;
            base_seed
        }
    };
    let bundle = simulate_with_sources(&scenario, &synthetic_sources(&scenario, signal_seed))?;
    let fs = bundle.meta.sample_rate;
    let refch = plan.eval.reference_channel;
    if refch >= bundle.mics() {
        return Err(Error::Config(format!(
            "reference channel {refch} out of range for {} microphones",
            bundle.mics()
        )));
    }
    let ev = Evaluator::new(&bundle.reference_images(refch), fs, plan.eval)?;
    let baseline = ev.baseline(&bundle.observations[refch])?;
    if let Some(out) = out {
        let dir = out.join("scenes");
        std::fs::create_dir_all(&dir)?;
        write_json(&bundle.meta, dir.join(format!("seed{seed}.json")))?;
    }

    let results: Vec<std::result::Result<RunRecord, RunFailure>> = plan
        .separators
        .par_iter()
        .map(|(label, cfg)| {
            let attempt = || -> Result<RunRecord> {
                if cfg.mics > bundle.mics() {
                    return Err(Error::Config(format!(
                        "{label} needs {} microphones, the scene has {}",
                        cfg.mics,
                        bundle.mics()
                    )));
                }
                let opts = SeparateOptions {
                    channels: Some((0..cfg.mics).collect()),
                    reference: refch,
                    timing: true,
                };
                let sep = separate(&bundle.observations, fs, cfg, &opts)?;
                let (report, pairing) = evaluate_with(&ev, &baseline, &sep.outputs)?;
                let mut report = report;
                report.isnr_db = bundle.meta.isnr_db;
                let record = RunRecord {
                    label: label.clone(),
                    seed,
                    pairing,
                    separation: sep.log,
                    report,
                };
                if let Some(out) = out {
                    let dir = run_dir(out, label, seed);
                    std::fs::create_dir_all(&dir)?;
                    record.report.save_csv(&dir.join("metrics.csv"))?;
                    write_json(&RunJson::new(&record), dir.join("run.json"))?;
                    if plan.write_audio {
                        let aligned = record.pairing.iter().map(|&e| sep.outputs[e].clone()).collect();
                        write_wav(&AudioBuffer::new(fs, aligned)?, dir.join("separated.wav"), SampleFormat::Float32)?;
                    }
                }
                Ok(record)
            };
            attempt().map_err(|e| RunFailure {
                label: label.clone(),
                seed,
                error: e.to_string(),
            })
        })
        .collect();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => runs.push(rec),
            Err(f) => failures.push(f),
        }
    }
    Ok(SeedResult { runs, failures })
}

#[derive(Serialize)]
struct RunJson<'a> {
    label: &'a str,
    seed: u64,
    pairing: &'a [usize],
    separation: &'a SeparationLog,
    isnr_db: Option<f64>,
    segments: usize,
    converged_segments: usize,
    converged: &'a [crate::metrics::SourceSummary],
}

impl<'a> RunJson<'a> {
    fn new(r: &'a RunRecord) -> Self {
        Self {
            label: &r.label,
            seed: r.seed,
            pairing: &r.pairing,
            separation: &r.separation,
            isnr_db: r.report.isnr_db,
            segments: r.report.segments,
            converged_segments: r.report.converged_segments,
            converged: &r.report.converged,
        }
    }
}

/// Runs simulate → separate → evaluate for every `(separator, seed)`.
/// Seeds are processed one after another; the separators of one seed run
/// in parallel and share one scene and one evaluator. A failing run is
/// recorded and the others continue. With `out`, per-run files and the
/// summary are written there.
pub fn run_benchmark(plan: &BenchmarkPlan, out: Option<&Path>) -> Result<BenchmarkOutcome> {
    if let Some(out) = out {
        std::fs::create_dir_all(out).map_err(|e| Error::from(e).in_file(out))?;
    }
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for &seed in &plan.seeds {
        match run_seed(plan, seed, out) {
            Ok(r) => {
                runs.extend(r.runs);
                failures.extend(r.failures);
            }
            Err(e) => failures.extend(plan.separators.iter().map(|(label, _)| RunFailure {
                label: label.clone(),
                seed,
                error: e.to_string(),
            })),
        }
    }
    let order = |label: &str| plan.separators.iter().position(|(l, _)| l == label);
    runs.sort_by_key(|r| (order(&r.label), r.seed));
    failures.sort_by_key(|f| (order(&f.label), f.seed));

    let summary = summarize(plan, &runs);
    let mut outcome = BenchmarkOutcome {
        runs,
        failures,
        summary,
        table: String::new(),
    };
    outcome.table = render_table(plan, &outcome);
    if let Some(out) = out {
        write_summary_csv(&outcome.summary, &out.join("summary.csv"))?;
        std::fs::write(out.join("summary.txt"), &outcome.table).map_err(|e| Error::from(e).in_file(out))?;
        if !outcome.failures.is_empty() {
            write_json(&outcome.failures, out.join("failures.json"))?;
        }
    }
    Ok(outcome)
}

fn summarize(plan: &BenchmarkPlan, runs: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (label, cfg) in &plan.separators {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| &r.label == label).collect();
        let segments = mine.iter().map(|r| r.report.segments).min().unwrap_or(0);
        for j in 0..segments {
            let scores: Vec<_> = mine
                .iter()
                .flat_map(|r| r.report.scores.iter().filter(move |s| s.segment == j))
                .collect();
            let sir: Vec<f64> = scores.iter().map(|s| s.sir_improvement_db).collect();
            let sdr: Vec<f64> = scores.iter().map(|s| s.sdr_improvement_db).collect();
            let (sir_m, sir_s) = mean_std(&sir).unwrap_or((f64::NAN, f64::NAN));
            let (sdr_m, sdr_s) = mean_std(&sdr).unwrap_or((f64::NAN, f64::NAN));
            rows.push(SummaryRow {
                label: label.clone(),
                algorithm: cfg.algorithm,
                segment_index: j,
                t_start_s: scores.first().map_or(0.0, |s| s.t_start_s),
                samples: scores.len(),
                sir_improvement_mean_db: sir_m,
                sir_improvement_std_db: sir_s,
                sdr_improvement_mean_db: sdr_m,
                sdr_improvement_std_db: sdr_s,
            });
        }
    }
    rows
}

fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let mut text = String::from(
        "label,algorithm,segment_index,t_start_s,samples,sir_improvement_mean_db,sir_improvement_std_db,sdr_improvement_mean_db,sdr_improvement_std_db\n",
    );
    for r in rows {
        writeln!(
            text,
            "{},{},{},{:.3},{},{:.4},{:.4},{:.4},{:.4}",
            r.label,
            r.algorithm,
            r.segment_index,
            r.t_start_s,
            r.samples,
            r.sir_improvement_mean_db,
            r.sir_improvement_std_db,
            r.sdr_improvement_mean_db,
            r.sdr_improvement_std_db
        )
        .expect("writing to a String");
    }
    std::fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}

fn render_table(plan: &BenchmarkPlan, outcome: &BenchmarkOutcome) -> String {
    let mut t = String::new();
    let tail = outcome.runs.first().map(|r| r.report.converged_segments);
    writeln!(
        t,
        "converged performance (mean ± std over runs and sources, final {} segment(s))",
        tail.map_or("-".to_string(), |n| n.to_string())
    )
    .unwrap();
    writeln!(
        t,
        "{:<12} {:<8} {:>4} {:>4}  {:>16}  {:>16}  {:>16}",
        "label", "algo", "mics", "runs", "SIR impr. (dB)", "SDR impr. (dB)", "input SIR (dB)"
    )
    .unwrap();
    let mut by_algo: Vec<(Algorithm, f64)> = Vec::new();
    for (label, cfg) in &plan.separators {
        let runs: Vec<&RunRecord> = outcome.runs.iter().filter(|r| &r.label == label).collect();
        let pick = |f: &dyn Fn(&crate::metrics::SourceSummary) -> f64| {
            let v: Vec<f64> = runs.iter().flat_map(|r| r.report.converged.iter().map(f)).collect();
            mean_std(&v)
        };
        let fmt = |v: Option<(f64, f64)>| v.map_or("-".to_string(), |(m, s)| format!("{m:7.2} ± {s:5.2}"));
        let sir = pick(&|s| s.sir_improvement_db);
        writeln!(
            t,
            "{:<12} {:<8} {:>4} {:>4}  {:>16}  {:>16}  {:>16}",
            label,
            cfg.algorithm.name(),
            cfg.mics,
            runs.len(),
            fmt(sir),
            fmt(pick(&|s| s.sdr_improvement_db)),
            fmt(pick(&|s| s.input_sir_db)),
        )
        .unwrap();
        if let Some((m, _)) = sir {
            if !by_algo.iter().any(|(a, _)| *a == cfg.algorithm) {
                by_algo.push((cfg.algorithm, m));
            }
        }
    }
    let get = |a: Algorithm| by_algo.iter().find(|(b, _)| *b == a).map(|(_, m)| *m);
    if let (Some(b), Some(o), Some(a)) = (get(Algorithm::Biiva), get(Algorithm::Overiva), get(Algorithm::Auxiva)) {
        let holds = b >= o && o >= a;
        writeln!(
            t,
            "expected ordering biiva >= overiva >= auxiva (SIR impr. {b:.2} / {o:.2} / {a:.2}): {}",
            if holds { "holds" } else { "does not hold" }
        )
        .unwrap();
    }
    if !outcome.failures.is_empty() {
        writeln!(t, "{} run(s) failed:", outcome.failures.len()).unwrap();
        for f in &outcome.failures {
            writeln!(t, "  {} seed {}: {}", f.label, f.seed, f.error).unwrap();
        }
    }
    t
}
