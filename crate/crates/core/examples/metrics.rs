//! SIR/SDR by least-squares projection onto the references: a target that
//! passes through a short filter still counts as target, leaked
//! interference and added noise do not.
//!
//! ```text
//! cargo run --release --example metrics
//! ```

use online_iva::metrics::decompose;
use online_iva::roomsim::signals::{speech_like, stream_rng, white_noise, Stream};

fn main() -> online_iva::Result<()> {
    let fs = 16_000;
    let len = 4 * fs as usize;
    let refs: Vec<Vec<f64>> = (0..2).map(|n| speech_like(len, fs, &mut stream_rng(1, Stream::Source(n)))).collect();
    let noise = white_noise(len, &mut stream_rng(1, Stream::White));

    // Target through a 3-tap filter, plus scaled interference and noise.
    let taps = [1.0, 0.5, -0.2];
    let filtered: Vec<f64> = (0..len)
        .map(|t| taps.iter().enumerate().filter(|&(k, _)| k <= t).map(|(k, g)| g * refs[0][t - k]).sum())
        .collect();
    let build = |leak: f64, noise_gain: f64| -> Vec<f64> {
        (0..len).map(|t| filtered[t] + leak * refs[1][t] + noise_gain * noise[t]).collect()
    };
    let rms = |x: &[f64]| (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    let r = rms(&refs[0]);
    for (label, leak, ng) in [
        ("filtered target only", 0.0, 0.0),
        ("+ interference", 0.25, 0.0),
        ("+ interference + noise", 0.25, 0.0316 * r / rms(&noise)),
    ] {
        let est = build(leak, ng);
        let d = decompose(&est, &refs, 0, 32)?;
        let (sir, sdr) = d.sir_sdr();
        println!("{label:<24} SIR {sir:>8.2} dB  SDR {sdr:>8.2} dB");
    }
    Ok(())
}
