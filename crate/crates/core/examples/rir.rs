//! Image-source room impulse responses: calibrate the walls to a target
//! reverberation time, then check the direct path and the measured decay.
//!
//! ```text
//! cargo run --release --example rir -- [t60 seconds]
//! ```

use online_iva::roomsim::{image_source_rir, measure_t60, Room, Walls, SPEED_OF_SOUND};

fn main() -> online_iva::Result<()> {
    let t60: f64 = std::env::args().nth(1).map_or(0.15, |v| v.parse().expect("t60 in seconds"));
    let room = Room::new([8.0, 9.0, 3.5], Walls::T60(t60));
    let fs = room.sample_rate;
    let beta = room.reflection()?;
    println!("target T60 {t60:.3} s -> wall reflection coefficient {:.4}", beta[0]);

    let mic = [4.0, 4.5, 3.0];
    for src in [[7.0, 6.0, 1.75], [6.5, 6.9, 1.75], [1.0, 1.0, 1.0]] {
        let h = image_source_rir(&room, &src, &mic)?;
        let dist = src.iter().zip(&mic).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let peak = (0..h.len()).max_by(|&a, &b| h[a].abs().total_cmp(&h[b].abs())).unwrap_or(0);
        println!(
            "source {src:?}: {} taps, direct path {:.1} samples (peak at {peak}), measured T60 {:.3} s",
            h.len(),
            dist / SPEED_OF_SOUND * fs as f64,
            measure_t60(&h, fs)?
        );
    }
    Ok(())
}
