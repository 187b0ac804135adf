use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::numerics::{dotu, kron, unit, CMat, CVec, Lu, C64};
use crate::stft::SpectralFrame;

use super::config::{Algorithm, SeparatorConfig};
use super::updates::{
    balance_factors, bilinear_update_first, bilinear_update_second, contrast_weight, ip_step, oc_update,
    set_filter_row, set_noise_rows, source_columns_of_inverse, update_spatial_cov, update_weighted_cov,
};
use crate::numerics::solve_column;

/// Separated spectra for one frame: `N` sources × `I` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceEstimate(SpectralFrame);

impl SourceEstimate {
    pub fn index(&self) -> usize {
        self.0.index
    }

    pub fn sources(&self) -> usize {
        self.0.channels()
    }

    pub fn bins(&self) -> usize {
        self.0.num_bins()
    }

    /// `Y_{n,i}`.
    pub fn get(&self, n: usize, i: usize) -> C64 {
        self.0.bin(i)[n]
    }

    /// The estimate viewed as an `N`-channel spectral frame, ready for
    /// synthesis.
    pub fn as_frame(&self) -> &SpectralFrame {
        &self.0
    }

    pub fn into_frame(self) -> SpectralFrame {
        self.0
    }
}

/// Accumulated wall time per processing stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub frames: usize,
    pub statistics: Duration,
    pub filters: Duration,
    pub constraint: Duration,
    pub output: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.statistics + self.filters + self.constraint + self.output
    }
}

/// All adaptive quantities of one online separation stream.
///
/// Per frequency bin `i` the state holds the `M × M` demixing matrix `W̃_i`
/// (rows `0..N` are `w_nᴴ`, rows `N..M` the noise block `[J_i, −I]`), the
/// spatial covariance `C_i`, the coupling block `J_i`, and per source the
/// weighted covariance `V_{n,i}` plus (BiIVA) the sub-filters `w1`, `w2`.
///
/// Initialization: every covariance starts at the identity and `J = 0`.
/// AuxIVA/OverIVA start from `W̃ = I`. BiIVA starts from `w1 = e_n`,
/// `w2 = e_0`, so source row `n` is `e_{n·M2}ᵀ`; the remaining rows are the
/// unused standard basis vectors in ascending order, which keeps `W̃`
/// invertible before the first orthogonal-constraint update. The `[J, −I]`
/// noise-block structure holds from the first frame whose constraint solve
/// is nonsingular, i.e. the first frame carrying signal.
#[derive(Debug, Clone)]
pub struct SeparatorState {
    cfg: SeparatorConfig,
    bins: usize,
    demix: Vec<CMat>,
    spatial: Vec<CMat>,
    coupling: Vec<CMat>,
    // rows N..M of the demixing matrix hold [J, −I]
    constrained: Vec<bool>,
    // [source][bin]
    weighted: Vec<Vec<CMat>>,
    // [source][bin] -> (w1, w2)
    sub_filters: Vec<Vec<(CVec, CVec)>>,
    frames_seen: usize,
    skipped_constraints: usize,
    timings: Option<StageTimings>,
}

impl SeparatorState {
    /// Creates the initial state for `bins` frequency bins.
    pub fn new(cfg: SeparatorConfig, bins: usize) -> Result<Self> {
        cfg.validate()?;
        if bins == 0 {
            return Err(Error::Config("need at least one frequency bin".into()));
        }
        let m = cfg.mics;
        let n_src = cfg.sources;
        let mut demix0 = CMat::identity(m);
        let mut sub_filters = Vec::new();
        if cfg.algorithm == Algorithm::Biiva {
            let (m1, m2) = cfg.sub_filters.expect("validated");
            let pairs: Vec<(CVec, CVec)> = (0..n_src).map(|n| (unit(m1, n), unit(m2, 0))).collect();
            let mut used = vec![false; m];
            for (n, (w1, w2)) in pairs.iter().enumerate() {
                set_filter_row(&mut demix0, n, &kron(w1, w2));
                used[n * m2] = true;
            }
            let free = (0..m).filter(|&k| !used[k]);
            for (r, k) in (n_src..m).zip(free) {
                set_filter_row(&mut demix0, r, &unit(m, k));
            }
            sub_filters = (0..n_src).map(|n| vec![pairs[n].clone(); bins]).collect();
        }
        let noise_dim = cfg.noise_dim();
        Ok(Self {
            bins,
            demix: vec![demix0; bins],
            spatial: if noise_dim > 0 { vec![CMat::identity(m); bins] } else { Vec::new() },
            coupling: vec![CMat::zeros(noise_dim, n_src); bins],
            constrained: vec![false; bins],
            weighted: vec![vec![CMat::identity(m); bins]; n_src],
            sub_filters,
            frames_seen: 0,
            skipped_constraints: 0,
            timings: None,
            cfg,
        })
    }

    pub fn config(&self) -> &SeparatorConfig {
        &self.cfg
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    /// Number of frames processed so far.
    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    /// Bin-frames in which the orthogonal constraint was singular and the
    /// previous noise block was kept.
    pub fn skipped_constraints(&self) -> usize {
        self.skipped_constraints
    }

    pub fn demix(&self, bin: usize) -> &CMat {
        &self.demix[bin]
    }

    pub fn demix_all(&self) -> &[CMat] {
        &self.demix
    }

    pub fn spatial_cov(&self, bin: usize) -> Option<&CMat> {
        self.spatial.get(bin)
    }

    pub fn weighted_cov(&self, source: usize, bin: usize) -> &CMat {
        &self.weighted[source][bin]
    }

    pub fn coupling(&self, bin: usize) -> &CMat {
        &self.coupling[bin]
    }

    /// `(w1, w2)` for BiIVA, `None` otherwise.
    pub fn sub_filters(&self, source: usize, bin: usize) -> Option<(&[C64], &[C64])> {
        self.sub_filters
            .get(source)
            .map(|per_bin| (per_bin[bin].0.as_slice(), per_bin[bin].1.as_slice()))
    }

    /// The `N × M` source-extraction block of bin `bin`.
    pub fn source_rows(&self, bin: usize) -> CMat {
        let w = &self.demix[bin];
        CMat::from_fn(self.cfg.sources, self.cfg.mics, |r, c| w[(r, c)])
    }

    /// Starts accumulating per-stage wall time.
    pub fn enable_timing(&mut self) {
        self.timings.get_or_insert_with(StageTimings::default);
    }

    pub fn timings(&self) -> Option<&StageTimings> {
        self.timings.as_ref()
    }

    /// Consumes one frame and returns `y = W̃ x` for the source rows.
    pub fn process_frame(&mut self, frame: &SpectralFrame) -> Result<SourceEstimate> {
        let index = frame.index;
        self.step(frame).map_err(|e| Error::Frame {
            index,
            source: Box::new(e),
        })
    }

    fn step(&mut self, frame: &SpectralFrame) -> Result<SourceEstimate> {
        let (m, n_src) = (self.cfg.mics, self.cfg.sources);
        if frame.num_bins() != self.bins || frame.channels() != m {
            return Err(Error::dim(
                "process_frame",
                format!(
                    "frame has {} bins x {} channels, separator expects {} x {}",
                    frame.num_bins(),
                    frame.channels(),
                    self.bins,
                    m
                ),
            ));
        }
        if !frame.is_finite() {
            return Err(Error::Contract("frame contains non-finite values".into()));
        }
        let alpha = self.cfg.alpha;
        let mut clock = Clock::new(self.timings.is_some());

        for (c, i) in self.spatial.iter_mut().zip(0..) {
            update_spatial_cov(c, frame.bin(i), alpha);
        }
        clock.lap(self.timings.as_mut().map(|t| &mut t.statistics));

        for n in 0..n_src {
            // The weight is taken relative to the mean power per bin rather
            // than the sum, so that `wᴴVw = 1` is also the steady-state output
            // scale. With the plain sum every normalization inflates the
            // outputs by about `I`, and the recursion stops tracking new data.
            let phi = self.bins as f64 * contrast_weight(&self.demix, frame, n, self.cfg.weight_floor);
            for (v, i) in self.weighted[n].iter_mut().zip(0..) {
                update_weighted_cov(v, frame.bin(i), phi, alpha);
            }
            clock.lap(self.timings.as_mut().map(|t| &mut t.statistics));

            for i in 0..self.bins {
                self.update_source(n, i)
                    .map_err(|e| e.within(format!("source {n}, bin {i}")))?;
            }
            clock.lap(self.timings.as_mut().map(|t| &mut t.filters));
        }

        if self.cfg.algorithm.has_noise_block() && self.cfg.inner_iters > 0 {
            for i in 0..self.bins {
                match oc_update(&self.spatial[i], &self.source_rows(i)) {
                    Ok(j) => {
                        set_noise_rows(&mut self.demix[i], &j);
                        self.coupling[i] = j;
                        self.constrained[i] = true;
                    }
                    // Only reachable while C has no data in the source
                    // directions (e.g. leading silence): keep the old block.
                    Err(Error::SingularMatrix { .. }) => self.skipped_constraints += 1,
                    Err(e) => return Err(e.within(format!("bin {i}"))),
                }
            }
            clock.lap(self.timings.as_mut().map(|t| &mut t.constraint));
        }

        let mut out = SpectralFrame::zeros(frame.index, self.bins, n_src);
        for i in 0..self.bins {
            let x = frame.bin(i);
            let w = &self.demix[i];
            for (n, y) in out.bin_mut(i).iter_mut().enumerate() {
                *y = dotu(w.row(n), x);
            }
        }
        clock.lap(self.timings.as_mut().map(|t| &mut t.output));
        if let Some(t) = self.timings.as_mut() {
            t.frames += 1;
        }
        self.frames_seen += 1;
        Ok(SourceEstimate(out))
    }

    /// `W̃⁻¹ e_n`, through the `N × N` reduced system once the noise block
    /// has its constrained form.
    fn target(&self, n: usize, i: usize) -> Result<CVec> {
        let target = if self.constrained[i] {
            source_columns_of_inverse(&self.demix[i], &self.coupling[i]).map(|inv| inv.column(n))
        } else {
            solve_column(&self.demix[i], n)
        };
        target.map_err(|e| e.within("demixing matrix"))
    }

    fn update_source(&mut self, n: usize, i: usize) -> Result<()> {
        let loading = self.cfg.loading;
        for _ in 0..self.cfg.inner_iters {
            let target = self.target(n, i)?;
            let demix = &mut self.demix[i];
            let v = &self.weighted[n][i];
            match self.cfg.algorithm {
                Algorithm::Auxiva | Algorithm::Overiva => {
                    let w = ip_step(&target, v, loading)?;
                    set_filter_row(demix, n, &w);
                }
                Algorithm::Biiva => {
                    let (m1, m2) = self.cfg.sub_filters.expect("validated");
                    let (w1, w2) = &mut self.sub_filters[n][i];
                    *w1 = bilinear_update_first(&target, v, w2, m1, loading)?.filter;
                    *w2 = bilinear_update_second(&target, v, w1, m2, loading)?.filter;
                    balance_factors(w1, w2);
                    set_filter_row(demix, n, &kron(w1, w2));
                }
            }
        }
        Ok(())
    }

    /// Rescales each source by `(W̃⁻¹)_{ref,n}` so it approximates that
    /// source's image at microphone `reference`.
    pub fn projection_back(&self, estimate: &SourceEstimate, reference: usize) -> Result<SourceEstimate> {
        if reference >= self.cfg.mics {
            return Err(Error::Contract(format!(
                "reference microphone {reference} out of range (M = {})",
                self.cfg.mics
            )));
        }
        if estimate.bins() != self.bins || estimate.sources() != self.cfg.sources {
            return Err(Error::dim("projection_back", "estimate does not match the separator"));
        }
        let mut out = estimate.0.clone();
        let e_ref = unit(self.cfg.mics, reference);
        for i in 0..self.bins {
            let context = |e: Error| e.within(format!("projection back, bin {i}"));
            let z = if self.constrained[i] {
                source_columns_of_inverse(&self.demix[i], &self.coupling[i]).map_err(context)?.row(reference).to_vec()
            } else {
                // row `reference` of W̃⁻¹ solves W̃ᵀ z = e_ref
                Lu::factor(&self.demix[i].transpose()).map_err(context)?.solve(&e_ref)
            };
            for (n, y) in out.bin_mut(i).iter_mut().enumerate() {
                *y *= z[n];
            }
        }
        Ok(SourceEstimate(out))
    }
}

struct Clock(Option<Instant>);

impl Clock {
    fn new(enabled: bool) -> Self {
        Clock(enabled.then(Instant::now))
    }

    fn lap(&mut self, slot: Option<&mut Duration>) {
        if let (Some(start), Some(slot)) = (self.0.as_mut(), slot) {
            let now = Instant::now();
            *slot += now - *start;
            *start = now;
        }
    }
}
