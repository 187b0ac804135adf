use rand::Rng;

use super::signals::{stream_rng, Stream};
use super::{NoisePlacement, Point, Room};
use crate::error::{Error, Result};

const MAX_ROUNDS: usize = 50;

/// x-y azimuth of `p` about `center`, degrees in `(-180, 180]`.
pub fn azimuth_about(center: &Point, p: &Point) -> f64 {
    (p[1] - center[1]).atan2(p[0] - center[0]).to_degrees()
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

fn radial(center: &Point, p: &Point) -> f64 {
    (p[0] - center[0]).hypot(p[1] - center[1])
}

/// Draws `rules.count` noise positions that keep `rules.wall_margin` from
/// every wall, lie at least `rules.center_distance` from the room centre in
/// the x-y plane, and are at least `rules.separation_deg` apart in azimuth
/// from each other and from every point in `occupied`. Deterministic in
/// `seed`.
pub fn place_noise_sources(
    room: &Room,
    rules: &NoisePlacement,
    seed: u64,
    occupied: &[Point],
) -> Result<Vec<Point>> {
    room.validate()?;
    let margin = rules.wall_margin;
    if room.dimensions.iter().any(|&d| d <= 2.0 * margin) {
        return Err(Error::Geometry(format!(
            "a {margin} m wall margin leaves no room inside {:?} m",
            room.dimensions
        )));
    }
    let center = room.center();
    let taken: Vec<f64> = occupied.iter().map(|p| azimuth_about(&center, p)).collect();
    let mut rng = stream_rng(seed, Stream::Placement);
    for _ in 0..MAX_ROUNDS {
        let mut placed: Vec<Point> = Vec::with_capacity(rules.count);
        let mut angles = taken.clone();
        'source: for _ in 0..rules.count {
            for _ in 0..rules.max_attempts.max(1) {
                let p: Point = std::array::from_fn(|a| rng.random_range(margin..room.dimensions[a] - margin));
                if radial(&center, &p) < rules.center_distance {
                    continue;
                }
                let az = azimuth_about(&center, &p);
                if angles.iter().any(|&b| angular_gap(az, b) < rules.separation_deg) {
                    continue;
                }
                angles.push(az);
                placed.push(p);
                continue 'source;
            }
            break;
        }
        if placed.len() == rules.count {
            return Ok(placed);
        }
    }
    Err(Error::Geometry(format!(
        "could not place {} noise sources in a {:?} m room after {MAX_ROUNDS} rounds",
        rules.count, room.dimensions
    )))
}
