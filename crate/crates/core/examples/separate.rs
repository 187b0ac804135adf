//! Online separation of a simulated desk scene with each algorithm, scored
//! every 2 s so the convergence is visible.
//!
//! ```text
//! cargo run --release --example separate -- [seconds]
//! ```

use online_iva::harness::{evaluate, separate, simulate, SeparateOptions};
use online_iva::metrics::EvalConfig;
use online_iva::roomsim::Scenario;
use online_iva::separators::{Algorithm, SeparatorConfig};

fn main() -> online_iva::Result<()> {
    let seconds: f64 = std::env::args().nth(1).map_or(20.0, |v| v.parse().expect("duration in seconds"));
    let scenario = Scenario {
        duration_s: seconds,
        ..Scenario::default()
    };
    let fs = scenario.sample_rate();
    let bundle = simulate(&scenario)?;
    let refs = bundle.reference_images(0);
    let mics = bundle.mics();

    let configs = [
        SeparatorConfig::new(Algorithm::Auxiva, 2, 2),
        SeparatorConfig::new(Algorithm::Overiva, mics, 2),
        SeparatorConfig::new(Algorithm::Biiva, mics, 2).with_sub_filters(3, 3),
    ];
    for cfg in configs {
        let opts = SeparateOptions {
            channels: Some((0..cfg.mics).collect()),
            ..SeparateOptions::default()
        };
        let sep = separate(&bundle.observations, fs, &cfg, &opts)?;
        let (report, _) = evaluate(&sep.outputs, &refs, &bundle.observations[0], fs, EvalConfig::default())?;
        let curve: Vec<String> = report
            .track(0)
            .map(|s| format!("{:>5.1}", s.sir_improvement_db))
            .collect();
        println!(
            "{:<8} M={:<2} rtf {:.3}  SIR improvement of source 0 per segment: {}",
            cfg.algorithm,
            cfg.mics,
            sep.log.real_time_factor,
            curve.join(" ")
        );
    }
    Ok(())
}
