use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DEFAULT_LOADING;

/// Default floor for the broadband source power in the contrast weight.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Determined online AuxIVA (uses as many microphones as sources).
    Auxiva,
    /// Overdetermined IVA with the orthogonal-constraint noise block.
    Overiva,
    /// OverIVA with each extraction filter factored as `w1 ⊗ w2`.
    Biiva,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Auxiva, Algorithm::Overiva, Algorithm::Biiva];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Auxiva => "auxiva",
            Algorithm::Overiva => "overiva",
            Algorithm::Biiva => "biiva",
        }
    }

    /// Forgetting factor that worked best for each algorithm on the
    /// 36-microphone reference setup.
    pub fn default_forgetting(self) -> f64 {
        match self {
            Algorithm::Auxiva => 0.96,
            Algorithm::Overiva => 0.99,
            Algorithm::Biiva => 0.98,
        }
    }

    /// Whether the algorithm carries an orthogonal-constraint noise block.
    pub fn has_noise_block(self) -> bool {
        !matches!(self, Algorithm::Auxiva)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auxiva" => Ok(Algorithm::Auxiva),
            "overiva" => Ok(Algorithm::Overiva),
            "biiva" => Ok(Algorithm::Biiva),
            other => Err(Error::Config(format!(
                "unknown algorithm `{other}` (expected auxiva, overiva or biiva)"
            ))),
        }
    }
}

/// Static parameters of one separation stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparatorConfig {
    pub algorithm: Algorithm,
    /// Number of microphones `M` consumed by the separator.
    pub mics: usize,
    /// Number of target sources `N`.
    pub sources: usize,
    /// Sub-filter lengths `(M1, M2)`, BiIVA only.
    pub sub_filters: Option<(usize, usize)>,
    /// Forgetting factor `α ∈ (0, 1]`.
    pub alpha: f64,
    /// Filter-update sweeps per source per frame. `0` freezes the filters.
    pub inner_iters: usize,
    /// Trace-scaled diagonal loading for Hermitian solves.
    pub loading: f64,
    /// Floor on the broadband source power in the contrast weight.
    pub weight_floor: f64,
}

impl SeparatorConfig {
    /// Defaults for `algorithm` with `mics` microphones and `sources` sources.
    /// BiIVA gets the most balanced factorization `M1 ≥ M2`.
    pub fn new(algorithm: Algorithm, mics: usize, sources: usize) -> Self {
        let sub_filters = (algorithm == Algorithm::Biiva).then(|| balanced_factors(mics));
        Self {
            algorithm,
            mics,
            sources,
            sub_filters,
            alpha: algorithm.default_forgetting(),
            inner_iters: 1,
            loading: DEFAULT_LOADING,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
        }
    }

    /// The 36-microphone, two-source reference setup (6 × 6 factorization;
    /// AuxIVA on the first two channels).
    pub fn paper_replica(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Auxiva => Self::new(algorithm, 2, 2),
            Algorithm::Overiva => Self::new(algorithm, 36, 2),
            Algorithm::Biiva => Self::new(algorithm, 36, 2).with_sub_filters(6, 6),
        }
    }

    pub fn with_sub_filters(mut self, m1: usize, m2: usize) -> Self {
        self.sub_filters = Some((m1, m2));
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_inner_iters(mut self, iters: usize) -> Self {
        self.inner_iters = iters;
        self
    }

    pub fn with_loading(mut self, loading: f64) -> Self {
        self.loading = loading;
        self
    }

    /// Number of noise-block rows `M − N`.
    pub fn noise_dim(&self) -> usize {
        if self.algorithm.has_noise_block() {
            self.mics - self.sources
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.mics == 0 || self.sources == 0 {
            return bad("mics and sources must both be >= 1".into());
        }
        match self.algorithm {
            Algorithm::Auxiva if self.mics != self.sources => {
                return bad(format!(
                    "auxiva is determined: mics ({}) must equal sources ({})",
                    self.mics, self.sources
                ))
            }
            Algorithm::Overiva | Algorithm::Biiva if self.sources >= self.mics => {
                return bad(format!(
                    "{} needs sources ({}) < mics ({})",
                    self.algorithm, self.sources, self.mics
                ))
            }
            _ => {}
        }
        if self.algorithm == Algorithm::Biiva {
            let Some((m1, m2)) = self.sub_filters else {
                return bad("biiva needs sub_filters (M1, M2)".into());
            };
            if m1 * m2 != self.mics {
                return bad(format!("biiva needs M1·M2 = M, got {m1}·{m2} != {}", self.mics));
            }
            if m1 < m2 {
                return bad(format!("biiva needs M1 >= M2, got M1 = {m1}, M2 = {m2}"));
            }
            if self.sources > m1 {
                return bad(format!(
                    "biiva initializes w1 = e_n, so sources ({}) must not exceed M1 ({m1})",
                    self.sources
                ));
            }
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.loading >= 0.0 && self.loading.is_finite()) {
            return bad(format!("loading must be finite and >= 0, got {}", self.loading));
        }
        if !(self.weight_floor > 0.0 && self.weight_floor.is_finite()) {
            return bad(format!("weight_floor must be > 0, got {}", self.weight_floor));
        }
        Ok(())
    }
}

/// Factor `m = m1·m2` with `m1 ≥ m2` and `m2` as large as possible.
pub fn balanced_factors(m: usize) -> (usize, usize) {
    let mut m2 = (m as f64).sqrt() as usize;
    while m2 > 1 && !m.is_multiple_of(m2) {
        m2 -= 1;
    }
    let m2 = m2.max(1);
    (m / m2, m2)
}
