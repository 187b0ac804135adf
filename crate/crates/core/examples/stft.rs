//! Short-time Fourier analysis and overlap-add resynthesis with the
//! 1024-sample Hann window and hop of 256.
//!
//! ```text
//! cargo run --example stft
//! ```

use online_iva::stft::{Stft, StftConfig};

fn main() -> online_iva::Result<()> {
    let cfg = StftConfig::default();
    let stft = Stft::new(cfg)?;
    let fs = cfg.sample_rate as f64;

    // One second of a rising chirp from 200 Hz to 4 kHz.
    let len = cfg.sample_rate as usize;
    let chirp: Vec<f64> = (0..len)
        .map(|t| {
            let s = t as f64 / fs;
            (2.0 * std::f64::consts::PI * (200.0 * s + 0.5 * 3800.0 * s * s)).sin()
        })
        .collect();

    let frames = stft.analyze(&std::slice::from_ref(&chirp))?;
    println!("{} frames x {} bins, hop {:.1} ms", frames.len(), cfg.bins(), 1e3 * cfg.hop_seconds());
    for f in frames.iter().step_by(12) {
        let peak = (0..cfg.bins())
            .max_by(|&a, &b| f.bin(a)[0].norm().total_cmp(&f.bin(b)[0].norm()))
            .unwrap_or(0);
        println!("frame {:>3}: peak at {:>6.0} Hz", f.index, peak as f64 * fs / cfg.fft_size as f64);
    }

    let mut back = stft.synthesize(&frames)?.remove(0);
    back.truncate(len);
    // Overlap-add is exact once a sample is covered by every window
    // position, i.e. away from the first and last `fft_size` samples.
    let interior = cfg.fft_size..len - cfg.fft_size;
    let err = chirp[interior.clone()]
        .iter()
        .zip(&back[interior])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("max resynthesis error in the interior {err:.2e}");
    Ok(())
}
