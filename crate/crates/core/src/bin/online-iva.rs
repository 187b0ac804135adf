//! Command-line front end: `rir`, `simulate`, `separate`, `evaluate`,
//! `benchmark`.
//!
//! Relative output paths are resolved against `$ONLINE_IVA_OUT` when set.
//! Config values can be overridden after `--` with `--key value` pairs
//! (dotted keys reach nested fields, e.g. `-- --room.walls.t60 0.2`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use online_iva::harness::{
    cmd_benchmark, cmd_evaluate, cmd_rir, cmd_separate, cmd_simulate, output_root, SeparateOptions,
};
use online_iva::io::{load_scenario_with, load_separator_config_with, parse_overrides};
use online_iva::metrics::{EvalConfig, PairingRule};

#[derive(Parser)]
#[command(name = "online-iva", version, about = "Online IVA separation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the room impulse responses of a scenario.
    Rir {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario overrides: `--key value` pairs.
        #[arg(last = true)]
        overrides: Vec<String>,
    },
    /// Render a scenario into mixture, reference-image and noise WAVs.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Dry source WAV, one per scenario source (synthetic when omitted).
        #[arg(long = "source")]
        sources: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(last = true)]
        overrides: Vec<String>,
    },
    /// Separate a multichannel WAV frame by frame.
    Separate {
        #[arg(long)]
        mixture: PathBuf,
        /// Separator config JSON.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Input channels to use, e.g. `0,1` (default: all).
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<usize>>,
        /// Projection-back reference, index into the selected channels.
        #[arg(long, default_value_t = 0)]
        reference: usize,
        /// Record a per-stage timing breakdown.
        #[arg(long)]
        timing: bool,
        /// Separator config overrides: `--key value` pairs.
        #[arg(last = true)]
        overrides: Vec<String>,
    },
    /// Score separated signals segment by segment.
    Evaluate {
        #[arg(long)]
        estimates: PathBuf,
        /// Reference source images at the reference microphone.
        #[arg(long)]
        references: PathBuf,
        /// Unprocessed mixture (for the improvement baseline).
        #[arg(long)]
        mixture: PathBuf,
        /// Output CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        segment_length: f64,
        #[arg(long, default_value_t = 512)]
        filter_length: usize,
        #[arg(long, default_value_t = 0)]
        reference_channel: usize,
        /// Pair outputs on the first segment only instead of all segments.
        #[arg(long)]
        first_segment_pairing: bool,
    },
    /// Run simulate, separate and evaluate for every separator and seed.
    Benchmark {
        #[arg(long)]
        manifest: PathBuf,
        /// Manifest overrides: `--key value` pairs.
        #[arg(last = true)]
        overrides: Vec<String>,
    },
}

fn resolve(out: &Path) -> PathBuf {
    output_root().join(out)
}

fn run(cli: Cli) -> online_iva::Result<bool> {
    match cli.command {
        Command::Rir { scenario, out, overrides } => {
            let s = load_scenario_with(&scenario, &parse_overrides(&overrides)?)?;
            let out = resolve(&out);
            let info = cmd_rir(&s, &out)?;
            println!(
                "wrote {} source and {} noise responses of {} samples to {}",
                info.geometry.sources.len(),
                info.geometry.noise.len(),
                info.rir_length,
                out.display()
            );
        }
        Command::Simulate { scenario, sources, out, overrides } => {
            let s = load_scenario_with(&scenario, &parse_overrides(&overrides)?)?;
            let out = resolve(&out);
            let b = cmd_simulate(&s, &sources, &out)?;
            let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.2} dB"));
            println!(
                "{} mics x {} samples, iSIR {}, iSNR {} -> {}",
                b.mics(),
                b.len(),
                fmt(b.meta.isir_db),
                fmt(b.meta.isnr_db),
                out.display()
            );
        }
        Command::Separate { mixture, config, out, channels, reference, timing, overrides } => {
            let cfg = load_separator_config_with(&config, &parse_overrides(&overrides)?)?;
            let out = resolve(&out);
            let opts = SeparateOptions { channels, reference, timing };
            let sep = cmd_separate(&mixture, &cfg, &out, &opts)?;
            println!(
                "{}: {} frames, {:.1} frames/s, real-time factor {:.3} -> {}",
                cfg.algorithm,
                sep.log.frames,
                sep.log.frames_per_s,
                sep.log.real_time_factor,
                out.display()
            );
        }
        Command::Evaluate {
            estimates,
            references,
            mixture,
            out,
            segment_length,
            filter_length,
            reference_channel,
            first_segment_pairing,
        } => {
            let cfg = EvalConfig {
                segment_length,
                filter_length,
                reference_channel,
                pairing: if first_segment_pairing { PairingRule::FirstSegment } else { PairingRule::AllSegments },
            };
            let out = resolve(&out);
            let (report, pairing) = cmd_evaluate(&estimates, &references, &mixture, cfg, &out)?;
            println!("pairing (reference -> output): {pairing:?}");
            for s in &report.converged {
                println!(
                    "source {}: SIR {:.2} dB (+{:.2}), SDR {:.2} dB (+{:.2})",
                    s.source, s.sir_db, s.sir_improvement_db, s.sdr_db, s.sdr_improvement_db
                );
            }
        }
        Command::Benchmark { manifest, overrides } => {
            let (outcome, dir) = cmd_benchmark(&manifest, &parse_overrides(&overrides)?)?;
            print!("{}", outcome.table);
            println!("results in {}", dir.display());
            return Ok(outcome.complete());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
