use std::f64::consts::{LN_10, PI};

use rayon::prelude::*;

use super::{Point, Room, SPEED_OF_SOUND};
use crate::error::{Error, Result};

/// Length of the windowed-sinc fractional-delay kernel.
pub const KERNEL_TAPS: usize = 81;
const HALF: i64 = (KERNEL_TAPS as i64 - 1) / 2;

/// Eyring reverberation time of a room with the given wall coefficients.
fn eyring_t60(room: &Room, beta: &[f64; 6]) -> f64 {
    let [lx, ly, lz] = room.dimensions;
    let areas = [ly * lz, ly * lz, lx * lz, lx * lz, lx * ly, lx * ly];
    let s = room.surface();
    let reflected: f64 = areas.iter().zip(beta).map(|(a, b)| a * b * b).sum::<f64>() / s;
    if reflected <= 0.0 {
        return 0.0;
    }
    24.0 * LN_10 * room.volume() / (-SPEED_OF_SOUND * s * reflected.ln())
}

/// Uniform reflection coefficient whose impulse responses decay with
/// reverberation time `t60`.
///
/// The Eyring formula (`1 − absorption = β²`) systematically underestimates
/// image-method decay times in shoebox rooms, so `β` is refined until the
/// Schroeder-measured T60 matches for a fixed probe pair (source and
/// microphone at fractions `[0.3, 0.35, 0.4]` and `[0.7, 0.6, 0.55]` of the
/// room dimensions).
pub fn t60_to_reflection(t60: f64, room: &Room) -> Result<[f64; 6]> {
    if !(t60 > 0.0 && t60.is_finite()) {
        return Err(Error::Config(format!("t60 must be positive, got {t60}")));
    }
    let unreachable = |why: &str| {
        Error::Geometry(format!(
            "t60 = {t60} s is unreachable in a {:?} m room ({why})",
            room.dimensions
        ))
    };
    let src: Point = std::array::from_fn(|a| room.dimensions[a] * [0.3, 0.35, 0.4][a]);
    let mic: Point = std::array::from_fn(|a| room.dimensions[a] * [0.7, 0.6, 0.55][a]);
    let measure = |beta: f64| {
        let b = [beta; 6];
        let h = compute(room, &b, rir_length(room, &b), &src, &mic);
        measure_t60(&h, room.sample_rate).unwrap_or(0.0)
    };
    // Decay time scales almost exactly with 1/(−ln β); iterate that
    // relation starting from the Eyring coefficient.
    let eyring = 24.0 * LN_10 * room.volume() / (2.0 * SPEED_OF_SOUND * room.surface() * t60);
    let mut g = eyring;
    let mut reached = 0.0;
    for _ in 0..MAX_ITERS {
        let beta = (-g).exp();
        if !(MIN_BETA..=MAX_BETA).contains(&beta) {
            return Err(unreachable(&format!("reflection coefficient {beta:.4} out of range")));
        }
        reached = measure(beta);
        if !(reached > 0.0) {
            return Err(unreachable("decay too short to measure"));
        }
        if (reached / t60 - 1.0).abs() < 1e-3 {
            break;
        }
        g *= reached / t60;
    }
    if (reached / t60 - 1.0).abs() > 0.02 {
        return Err(unreachable(&format!("closest decay is {reached:.3} s")));
    }
    Ok([(-g).exp(); 6])
}

const MIN_BETA: f64 = 0.01;
const MAX_BETA: f64 = 0.95;
const MAX_ITERS: usize = 12;

fn diagonal(room: &Room) -> f64 {
    room.dimensions.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Latest arrival kept, in seconds: 1.6 times the Eyring T60 (which runs
/// short for image-method rooms) plus the longest possible direct path, so
/// the discarded tail sits roughly 60 dB below the start of the decay.
fn cutoff_seconds(room: &Room, beta: &[f64; 6]) -> f64 {
    1.6 * eyring_t60(room, beta) + diagonal(room) / SPEED_OF_SOUND
}

/// Number of samples in every impulse response of `room`.
pub fn rir_length(room: &Room, beta: &[f64; 6]) -> usize {
    (cutoff_seconds(room, beta) * room.sample_rate as f64).ceil() as usize + HALF as usize + 1
}

fn add_fractional_impulse(h: &mut [f64], delay: f64, amp: f64) {
    let centre = delay.round() as i64;
    let frac = centre as f64 - delay;
    if frac == 0.0 {
        if let Some(v) = usize::try_from(centre).ok().and_then(|k| h.get_mut(k)) {
            *v += amp;
        }
        return;
    }
    // sin(π(j + frac)) = (−1)^j sin(π·frac)
    let s0 = (PI * frac).sin() / PI;
    for j in -HALF..=HALF {
        let k = centre + j;
        if k < 0 || k as usize >= h.len() {
            continue;
        }
        let t = j as f64 + frac;
        let window = 0.5 * (1.0 + (PI * t / (HALF + 1) as f64).cos());
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        h[k as usize] += amp * window * sign * s0 / t;
    }
}

fn check_pair(room: &Room, src: &Point, mic: &Point) -> Result<()> {
    room.require_inside("source", src)?;
    room.require_inside("microphone", mic)?;
    if src == mic {
        return Err(Error::Contract("source and microphone coincide".into()));
    }
    Ok(())
}

fn compute(room: &Room, beta: &[f64; 6], len: usize, src: &Point, mic: &Point) -> Vec<f64> {
    let fs = room.sample_rate as f64;
    let max_dist = cutoff_seconds(room, beta) * SPEED_OF_SOUND;
    let reach: Vec<i64> = room
        .dimensions
        .iter()
        .map(|l| (max_dist / (2.0 * l)).ceil() as i64 + 1)
        .collect();
    let mut h = vec![0.0; len];
    for mx in -reach[0]..=reach[0] {
        for my in -reach[1]..=reach[1] {
            for mz in -reach[2]..=reach[2] {
                let m = [mx, my, mz];
                for q in 0..8 {
                    let flip = [q & 1, (q >> 1) & 1, (q >> 2) & 1];
                    let mut d2 = 0.0;
                    let mut gain = 1.0;
                    let mut order = 0;
                    for a in 0..3 {
                        let s = if flip[a] == 1 { -src[a] } else { src[a] };
                        let c = s + 2.0 * m[a] as f64 * room.dimensions[a] - mic[a];
                        d2 += c * c;
                        let near = (m[a] - flip[a]).unsigned_abs() as i32;
                        let far = m[a].unsigned_abs() as i32;
                        gain *= beta[2 * a].powi(near) * beta[2 * a + 1].powi(far);
                        order += near + far;
                    }
                    let d = d2.sqrt();
                    if d > max_dist || gain == 0.0 {
                        continue;
                    }
                    if room.max_image_order.is_some_and(|k| order as usize > k) {
                        continue;
                    }
                    add_fractional_impulse(&mut h, d / SPEED_OF_SOUND * fs, gain / (4.0 * PI * d));
                }
            }
        }
    }
    h
}

/// Image-source impulse response from `src` to `mic`, [`rir_length`]
/// samples long. Each image contributes `β-product / (4π·d)` at a delay of
/// `d / c` seconds through an 81-tap Hann-windowed sinc.
pub fn image_source_rir(room: &Room, src: &Point, mic: &Point) -> Result<Vec<f64>> {
    room.validate()?;
    check_pair(room, src, mic)?;
    let beta = room.reflection()?;
    Ok(compute(room, &beta, rir_length(room, &beta), src, mic))
}

/// Impulse responses for every `(source, mic)` pair, indexed `[source][mic]`,
/// for the already resolved wall coefficients `beta`.
pub fn rir_bank(
    room: &Room,
    beta: &[f64; 6],
    sources: &[Point],
    mics: &[Point],
) -> Result<Vec<Vec<Vec<f64>>>> {
    room.validate()?;
    for s in sources {
        for m in mics {
            check_pair(room, s, m)?;
        }
    }
    if beta.iter().any(|b| !(0.0..1.0).contains(b)) {
        return Err(Error::Config(format!("reflection coefficients must lie in [0, 1), got {beta:?}")));
    }
    let len = rir_length(room, beta);
    Ok(sources
        .par_iter()
        .map(|s| mics.par_iter().map(|m| compute(room, beta, len, s, m)).collect())
        .collect())
}

/// Reverberation time by Schroeder backward integration, from a line fit to
/// the energy decay curve between −5 and −35 dB.
pub fn measure_t60(h: &[f64], sample_rate: u32) -> Result<f64> {
    let mut edc = vec![0.0; h.len()];
    let mut acc = 0.0;
    for (e, x) in edc.iter_mut().zip(h).rev() {
        acc += x * x;
        *e = acc;
    }
    if !(acc > 0.0) {
        return Err(Error::Contract("impulse response has no energy".into()));
    }
    let db: Vec<f64> = edc.iter().map(|e| 10.0 * (e / acc).log10()).collect();
    let start = db.iter().position(|&v| v <= -5.0);
    let end = db.iter().position(|&v| v <= -35.0);
    let (Some(start), Some(end)) = (start, end) else {
        return Err(Error::Contract("energy decay never reaches -35 dB".into()));
    };
    if end <= start + 1 {
        return Err(Error::Contract("energy decay too abrupt to fit".into()));
    }
    let n = (end - start + 1) as f64;
    let ts: Vec<f64> = (start..=end).map(|k| k as f64 / sample_rate as f64).collect();
    let mean_t = ts.iter().sum::<f64>() / n;
    let mean_y = db[start..=end].iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in ts.iter().zip(&db[start..=end]) {
        sxy += (t - mean_t) * (y - mean_y);
        sxx += (t - mean_t) * (t - mean_t);
    }
    let slope = sxy / sxx;
    Ok(-60.0 / slope)
}
