//! Shoebox room acoustics: image-source impulse responses, noise-source
//! placement, synthetic test signals, and calibrated scenario mixing.
//!
//! Coordinates are meters with the origin at the room's bottom-left floor
//! corner. Microphone and source indices are 0-based; "microphone 0" is the
//! reference for all input-level calibration.

mod mix;
mod placement;
mod rir;
pub mod signals;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mix::{mix, MixMetadata, MixtureBundle, WHITE_NOISE_GAIN};
pub use placement::{azimuth_about, place_noise_sources};
pub use rir::{image_source_rir, measure_t60, rir_bank, rir_length, t60_to_reflection, KERNEL_TAPS};

pub type Point = [f64; 3];

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Wall absorption, given either directly or as a reverberation target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Walls {
    /// Uniform reflection coefficient obtained by inverting the target T60
    /// (seconds).
    T60(f64),
    /// Pressure reflection coefficients `[x0, x1, y0, y1, z0, z1]`.
    Reflection([f64; 6]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Room {
    pub dimensions: Point,
    pub walls: Walls,
    pub sample_rate: u32,
    /// Cap on the number of wall reflections per image. `None` keeps every
    /// image arriving within the estimated reverberation time.
    pub max_image_order: Option<usize>,
}

impl Default for Room {
    fn default() -> Self {
        Self {
            dimensions: [8.0, 9.0, 3.5],
            walls: Walls::T60(0.15),
            sample_rate: 16_000,
            max_image_order: None,
        }
    }
}

impl Room {
    pub fn new(dimensions: Point, walls: Walls) -> Self {
        Self {
            dimensions,
            walls,
            ..Self::default()
        }
    }

    pub fn volume(&self) -> f64 {
        self.dimensions.iter().product()
    }

    pub fn surface(&self) -> f64 {
        let [x, y, z] = self.dimensions;
        2.0 * (x * y + x * z + y * z)
    }

    pub fn center(&self) -> Point {
        self.dimensions.map(|d| d / 2.0)
    }

    /// Strictly inside the room.
    pub fn contains(&self, p: &Point) -> bool {
        p.iter().zip(&self.dimensions).all(|(&c, &d)| c > 0.0 && c < d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::Config(format!(
                "room dimensions must be positive, got {:?}",
                self.dimensions
            )));
        }
        if self.sample_rate == 0 {
            return Err(Error::Config("room sample_rate must be positive".into()));
        }
        match self.walls {
            Walls::T60(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::Config(format!("t60 must be positive, got {t}")))
            }
            Walls::Reflection(b) if b.iter().any(|&v| !(0.0..1.0).contains(&v)) => Err(
                Error::Config(format!("reflection coefficients must lie in [0, 1), got {b:?}")),
            ),
            _ => Ok(()),
        }
    }

    /// Per-wall reflection coefficients, inverting the T60 target if needed.
    pub fn reflection(&self) -> Result<[f64; 6]> {
        match self.walls {
            Walls::Reflection(b) => Ok(b),
            Walls::T60(t) => t60_to_reflection(t, self),
        }
    }

    pub(crate) fn require_inside(&self, what: &str, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "{what} at {p:?} is not strictly inside the {:?} m room",
                self.dimensions
            )))
        }
    }
}

/// Microphone positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub positions: Vec<Point>,
}

impl ArrayGeometry {
    /// Horizontal `rows × cols` grid centred on `center`. Microphone
    /// `p·cols + q` sits in row `p` (along y) and column `q` (along x), so a
    /// far-field steering vector factors as `a_rows ⊗ a_cols`.
    pub fn grid(center: Point, rows: usize, cols: usize, spacing: f64) -> Self {
        let off = |k: usize, n: usize| (k as f64 - (n as f64 - 1.0) / 2.0) * spacing;
        let positions = (0..rows)
            .flat_map(|p| {
                (0..cols).map(move |q| [center[0] + off(q, cols), center[1] + off(p, rows), center[2]])
            })
            .collect();
        Self { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn centroid(&self) -> Point {
        let n = self.positions.len().max(1) as f64;
        let mut c = [0.0; 3];
        for p in &self.positions {
            for k in 0..3 {
                c[k] += p[k] / n;
            }
        }
        c
    }
}

/// Array description as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArraySpec {
    Grid {
        center: Point,
        rows: usize,
        cols: usize,
        spacing: f64,
    },
    Positions(Vec<Point>),
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec::Grid {
            center: [4.0, 4.5, 3.0],
            rows: 3,
            cols: 3,
            spacing: 0.06,
        }
    }
}

impl ArraySpec {
    pub fn geometry(&self) -> ArrayGeometry {
        match self {
            ArraySpec::Grid {
                center,
                rows,
                cols,
                spacing,
            } => ArrayGeometry::grid(*center, *rows, *cols, *spacing),
            ArraySpec::Positions(p) => ArrayGeometry { positions: p.clone() },
        }
    }
}

/// Point-noise sources: explicit positions, or `count` seeded random
/// placements subject to the margin, radius and angular-separation rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisePlacement {
    pub count: usize,
    pub positions: Option<Vec<Point>>,
    /// Minimum distance from every wall, meters.
    pub wall_margin: f64,
    /// Minimum x-y distance from the room centre, meters.
    pub center_distance: f64,
    /// Minimum x-y azimuth separation about the room centre from every
    /// other source (targets included), degrees.
    pub separation_deg: f64,
    /// Candidate draws per source before a placement round is abandoned.
    pub max_attempts: usize,
}

impl Default for NoisePlacement {
    fn default() -> Self {
        Self {
            count: 3,
            positions: None,
            wall_margin: 0.5,
            center_distance: 3.0,
            separation_deg: 20.0,
            max_attempts: 2_000,
        }
    }
}

/// Everything needed to synthesize one noisy convolutive mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub room: Room,
    pub array: ArraySpec,
    /// Target source positions.
    pub sources: Vec<Point>,
    pub noise: NoisePlacement,
    /// Input SIR at microphone 0: power of source 0 over the summed power
    /// of the other targets, which are set equal to each other.
    pub isir_db: f64,
    /// Input SNR at microphone 0. `None` disables noise entirely.
    pub isnr_db: Option<f64>,
    /// Length of generated signals, seconds.
    pub duration_s: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            room: Room::default(),
            array: ArraySpec::default(),
            sources: vec![[7.0, 6.0, 1.75], [6.5, 6.9, 1.75]],
            noise: NoisePlacement::default(),
            isir_db: 0.0,
            isnr_db: Some(20.0),
            duration_s: 30.0,
            seed: 0,
        }
    }
}

/// Resolved positions and wall coefficients of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneGeometry {
    pub reflection: [f64; 6],
    pub mics: Vec<Point>,
    pub sources: Vec<Point>,
    pub noise: Vec<Point>,
}

impl Scenario {
    /// The 36-microphone reference setup: 6 × 6 grid, T60 200 ms, five
    /// point-noise sources.
    pub fn paper_replica() -> Self {
        Self {
            room: Room {
                walls: Walls::T60(0.2),
                ..Room::default()
            },
            array: ArraySpec::Grid {
                center: [4.0, 4.5, 3.0],
                rows: 6,
                cols: 6,
                spacing: 0.06,
            },
            noise: NoisePlacement {
                count: 5,
                ..NoisePlacement::default()
            },
            ..Self::default()
        }
    }

    pub fn sample_rate(&self) -> u32 {
        self.room.sample_rate
    }

    pub fn samples(&self) -> usize {
        (self.duration_s * self.room.sample_rate as f64).round() as usize
    }

    pub fn noise_count(&self) -> usize {
        self.noise.positions.as_ref().map_or(self.noise.count, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        self.room.validate()?;
        let mics = self.array.geometry();
        if mics.is_empty() {
            return Err(Error::Config("array needs at least one microphone".into()));
        }
        if let ArraySpec::Grid { spacing, .. } = self.array {
            if !(spacing > 0.0) {
                return Err(Error::Config(format!("array spacing must be positive, got {spacing}")));
            }
        }
        for (m, p) in mics.positions.iter().enumerate() {
            self.room.require_inside(&format!("microphone {m}"), p)?;
        }
        if self.sources.is_empty() {
            return Err(Error::Config("scenario needs at least one target source".into()));
        }
        for (n, s) in self.sources.iter().enumerate() {
            self.room.require_inside(&format!("source {n}"), s)?;
            if mics.positions.iter().any(|m| m == s) {
                return Err(Error::Geometry(format!("source {n} coincides with a microphone")));
            }
        }
        if let Some(ps) = &self.noise.positions {
            for (k, p) in ps.iter().enumerate() {
                self.room.require_inside(&format!("noise source {k}"), p)?;
            }
        }
        if !self.isir_db.is_finite() {
            return Err(Error::Config("isir_db must be finite".into()));
        }
        if self.isnr_db.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Config("isnr_db must be finite or null".into()));
        }
        if !(self.duration_s > 0.0) {
            return Err(Error::Config(format!("duration_s must be positive, got {}", self.duration_s)));
        }
        Ok(())
    }

    /// Validates and resolves wall coefficients and noise positions.
    pub fn geometry(&self) -> Result<SceneGeometry> {
        self.validate()?;
        let noise = match &self.noise.positions {
            Some(p) => p.clone(),
            None => place_noise_sources(&self.room, &self.noise, self.seed, &self.sources)?,
        };
        Ok(SceneGeometry {
            reflection: self.room.reflection()?,
            mics: self.array.geometry().positions,
            sources: self.sources.clone(),
            noise,
        })
    }
}
