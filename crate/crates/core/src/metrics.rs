//! SIR/SDR scoring against reference source images.
//!
//! An estimate is split into a target part (its projection onto `L`-tap
//! filtered versions of the true source), an interference part (the extra
//! captured by also allowing filtered versions of the other references) and
//! an artifact residual. Segments are scored independently, so the allowed
//! distortion filter may change from segment to segment. All signals are
//! treated as zero outside their support, and the parts are `L − 1` samples
//! longer than the estimate.

use std::io::Write;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fftconv::{cross_correlation, FftPlan};

/// Written to CSV in place of ±∞.
pub const SENTINEL_DB: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Segment length, seconds.
    pub segment_length: f64,
    /// Allowed distortion filter length `L`, taps.
    pub filter_length: usize,
    /// Microphone whose source images serve as references.
    pub reference_channel: usize,
    /// How separator outputs are matched to references.
    pub pairing: PairingRule,
}

/// Rule for the fixed output-to-reference permutation of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingRule {
    /// Maximize the SIR summed over every segment.
    #[default]
    AllSegments,
    /// Maximize the SIR of the first segment only.
    FirstSegment,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            segment_length: 2.0,
            filter_length: 512,
            reference_channel: 0,
            pairing: PairingRule::default(),
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_length > 0.0 && self.segment_length.is_finite()) {
            return Err(Error::Config(format!(
                "segment_length must be positive, got {}",
                self.segment_length
            )));
        }
        if self.filter_length == 0 {
            return Err(Error::Config("filter_length must be >= 1".into()));
        }
        Ok(())
    }
}

/// `estimate = target + interference + artifact` (with the estimate padded
/// by `L − 1` zeros).
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub target: Vec<f64>,
    pub interference: Vec<f64>,
    pub artifact: Vec<f64>,
}

fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn ratio_db(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        f64::NEG_INFINITY
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (num / den).log10()
    }
}

impl Decomposition {
    /// `(SIR, SDR)` in dB. Zero target energy gives `−∞` for both; a zero
    /// denominator gives `+∞`.
    pub fn sir_sdr(&self) -> (f64, f64) {
        let t = energy(&self.target);
        let i = energy(&self.interference);
        let d: f64 = self
            .interference
            .iter()
            .zip(&self.artifact)
            .map(|(a, b)| (a + b) * (a + b))
            .sum();
        (ratio_db(t, i), ratio_db(t, d))
    }
}

/// Free-function form of [`Decomposition::sir_sdr`].
pub fn sir_sdr(d: &Decomposition) -> (f64, f64) {
    d.sir_sdr()
}

/// Gram factorizations for one set of references, reusable across
/// estimates.
pub struct ReferenceSet {
    refs: Vec<Vec<f64>>,
    taps: usize,
    plan: FftPlan,
    ref_spectra: Vec<Vec<crate::numerics::C64>>,
    all: Cholesky<f64, Dyn>,
    single: Vec<Cholesky<f64, Dyn>>,
}

impl ReferenceSet {
    pub fn new(references: &[Vec<f64>], taps: usize) -> Result<Self> {
        let n = references.len();
        let len = references.first().map_or(0, Vec::len);
        if n == 0 || len == 0 || references.iter().any(|r| r.len() != len) {
            return Err(Error::Contract("references must be non-empty and of equal length".into()));
        }
        if taps == 0 {
            return Err(Error::Config("filter length must be >= 1".into()));
        }
        if let Some(k) = references.iter().position(|r| energy(r) == 0.0) {
            return Err(Error::singular(format!("reference {k} is silent")));
        }
        // corr[k][l][d] = Σ_u s_k(u)·s_l(u + d), d = 0..taps
        let corr: Vec<Vec<Vec<f64>>> = references
            .iter()
            .map(|a| references.iter().map(|b| cross_correlation(a, b, taps)).collect())
            .collect();
        let gram_entry = |k: usize, a: usize, l: usize, b: usize| {
            if a >= b {
                corr[k][l][a - b]
            } else {
                corr[l][k][b - a]
            }
        };
        let full = DMatrix::from_fn(n * taps, n * taps, |r, c| {
            gram_entry(r / taps, r % taps, c / taps, c % taps)
        });
        let all = full
            .clone()
            .cholesky()
            .ok_or_else(|| Error::singular("reference Gram matrix is rank deficient"))?;
        let single = (0..n)
            .map(|k| {
                full.view((k * taps, k * taps), (taps, taps))
                    .into_owned()
                    .cholesky()
                    .ok_or_else(|| Error::singular(format!("Gram matrix of reference {k} is rank deficient")))
            })
            .collect::<Result<Vec<_>>>()?;
        let plan = FftPlan::for_linear(2 * len + taps);
        let ref_spectra = references.iter().map(|r| plan.forward(r)).collect();
        Ok(Self {
            refs: references.to_vec(),
            taps,
            plan,
            ref_spectra,
            all,
            single,
        })
    }

    pub fn sources(&self) -> usize {
        self.refs.len()
    }

    pub fn len(&self) -> usize {
        self.refs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `Σ_k (c_k * s_k)` over the given references, length `len + taps − 1`.
    fn synthesize(&self, which: &[usize], coeffs: &DVector<f64>) -> Vec<f64> {
        let mut acc = vec![crate::numerics::ZERO; self.plan.len() / 2 + 1];
        for (slot, &k) in which.iter().enumerate() {
            let c: Vec<f64> = coeffs.rows(slot * self.taps, self.taps).iter().copied().collect();
            let spec = self.plan.forward(&c);
            for ((a, x), y) in acc.iter_mut().zip(&spec).zip(&self.ref_spectra[k]) {
                *a += x * y;
            }
        }
        let mut y = self.plan.inverse(&acc);
        y.truncate(self.len() + self.taps - 1);
        y
    }

    /// Decomposes `estimate` with reference `target` as the true source.
    pub fn decompose(&self, estimate: &[f64], target: usize) -> Result<Decomposition> {
        if estimate.len() != self.len() {
            return Err(Error::dim(
                "decompose",
                format!("estimate has {} samples, references {}", estimate.len(), self.len()),
            ));
        }
        if target >= self.sources() {
            return Err(Error::Contract(format!(
                "target {target} out of range for {} references",
                self.sources()
            )));
        }
        let l = self.taps;
        let rhs: Vec<Vec<f64>> = self.refs.iter().map(|r| cross_correlation(r, estimate, l)).collect();
        let all_rhs = DVector::from_iterator(rhs.len() * l, rhs.iter().flatten().copied());
        let all_coeffs = self.all.solve(&all_rhs);
        let target_coeffs = self.single[target].solve(&DVector::from_column_slice(&rhs[target]));
        let everything: Vec<usize> = (0..self.sources()).collect();
        let p_all = self.synthesize(&everything, &all_coeffs);
        let p_target = self.synthesize(&[target], &target_coeffs);
        let out_len = self.len() + l - 1;
        let mut interference = vec![0.0; out_len];
        let mut artifact = vec![0.0; out_len];
        for t in 0..out_len {
            let e = estimate.get(t).copied().unwrap_or(0.0);
            interference[t] = p_all[t] - p_target[t];
            artifact[t] = e - p_target[t] - interference[t];
        }
        Ok(Decomposition {
            target: p_target,
            interference,
            artifact,
        })
    }
}

/// One-shot decomposition of `estimate` against `references[target]`.
pub fn decompose(estimate: &[f64], references: &[Vec<f64>], target: usize, taps: usize) -> Result<Decomposition> {
    ReferenceSet::new(references, taps)?.decompose(estimate, target)
}

/// Scores of one source in one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentScore {
    pub segment: usize,
    pub t_start_s: f64,
    pub source: usize,
    pub sir_db: f64,
    pub sdr_db: f64,
    pub sir_improvement_db: f64,
    pub sdr_improvement_db: f64,
}

/// Mean over the converged (final 25%) segments of one source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceSummary {
    pub source: usize,
    pub input_sir_db: f64,
    pub sir_db: f64,
    pub sdr_db: f64,
    pub sir_improvement_db: f64,
    pub sdr_improvement_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub sample_rate: u32,
    pub segments: usize,
    /// Segments averaged for the converged values.
    pub converged_segments: usize,
    /// Input SNR of the mixture, when known.
    pub isnr_db: Option<f64>,
    /// Row per `(segment, source)`, segment-major.
    pub scores: Vec<SegmentScore>,
    pub converged: Vec<SourceSummary>,
}

#[derive(Serialize)]
struct CsvRow {
    segment_index: usize,
    t_start_s: f64,
    source: usize,
    sir_db: f64,
    sdr_db: f64,
    sir_improvement_db: f64,
    sdr_improvement_db: f64,
    clipped_flag: u8,
}

fn clip(v: f64, flag: &mut u8) -> f64 {
    if v.is_infinite() {
        *flag = 1;
        SENTINEL_DB.copysign(v)
    } else {
        v
    }
}

impl EvalReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.scores {
            let mut flag = 0;
            let row = CsvRow {
                segment_index: s.segment,
                t_start_s: s.t_start_s,
                source: s.source,
                sir_db: clip(s.sir_db, &mut flag),
                sdr_db: clip(s.sdr_db, &mut flag),
                sir_improvement_db: clip(s.sir_improvement_db, &mut flag),
                sdr_improvement_db: clip(s.sdr_improvement_db, &mut flag),
                clipped_flag: flag,
            };
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
        self.write_csv(std::io::BufWriter::new(file)).map_err(|e| e.in_file(path))
    }

    /// Scores of `source` in segment order.
    pub fn track(&self, source: usize) -> impl Iterator<Item = &SegmentScore> {
        self.scores.iter().filter(move |s| s.source == source)
    }
}

/// Per-source SIR/SDR of the unprocessed mixture in every segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    /// `[segment][source] -> (SIR, SDR)`
    scores: Vec<Vec<(f64, f64)>>,
}

/// Segment-wise reference factorizations, shared by every estimate scored
/// against the same references.
pub struct Evaluator {
    cfg: EvalConfig,
    sample_rate: u32,
    segment_samples: usize,
    segments: Vec<ReferenceSet>,
}

impl Evaluator {
    /// `floor(duration / segment_length)` segments starting at `t = 0`.
    pub fn new(references: &[Vec<f64>], sample_rate: u32, cfg: EvalConfig) -> Result<Self> {
        cfg.validate()?;
        let len = references.first().map_or(0, Vec::len);
        let seg = (cfg.segment_length * sample_rate as f64).round() as usize;
        let count = len.checked_div(seg).unwrap_or(0);
        if count == 0 {
            return Err(Error::Contract(format!(
                "signal of {len} samples is shorter than one {} s segment",
                cfg.segment_length
            )));
        }
        let segments = (0..count)
            .into_par_iter()
            .map(|j| {
                let refs: Vec<Vec<f64>> = references.iter().map(|r| r[j * seg..(j + 1) * seg].to_vec()).collect();
                ReferenceSet::new(&refs, cfg.filter_length).map_err(|e| e.within(format!("segment {j}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg,
            sample_rate,
            segment_samples: seg,
            segments,
        })
    }

    pub fn segments(&self) -> usize {
        self.segments.len()
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    pub fn sources(&self) -> usize {
        self.segments[0].sources()
    }

    fn check(&self, signal: &[f64]) -> Result<()> {
        if signal.len() < self.segments() * self.segment_samples {
            return Err(Error::dim(
                "evaluate",
                format!(
                    "signal has {} samples, need {}",
                    signal.len(),
                    self.segments() * self.segment_samples
                ),
            ));
        }
        Ok(())
    }

    fn slice<'a>(&self, signal: &'a [f64], j: usize) -> &'a [f64] {
        &signal[j * self.segment_samples..(j + 1) * self.segment_samples]
    }

    /// `(SIR, SDR)` of `estimate` against reference `source` in segment `j`.
    pub fn score(&self, estimate: &[f64], source: usize, j: usize) -> Result<(f64, f64)> {
        self.check(estimate)?;
        Ok(self.segments[j].decompose(self.slice(estimate, j), source)?.sir_sdr())
    }

    pub fn baseline(&self, mixture: &[f64]) -> Result<Baseline> {
        self.check(mixture)?;
        let scores = (0..self.segments())
            .into_par_iter()
            .map(|j| {
                (0..self.sources())
                    .map(|n| Ok(self.segments[j].decompose(self.slice(mixture, j), n)?.sir_sdr()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Baseline { scores })
    }

    /// Permutation `p` maximizing the summed SIR when estimate `p[n]` is
    /// scored against reference `n`, over the segments selected by `rule`.
    pub fn pair(&self, estimates: &[Vec<f64>], rule: PairingRule) -> Result<Vec<usize>> {
        let n = self.sources();
        if estimates.len() != n {
            return Err(Error::dim(
                "pair",
                format!("{} estimates for {n} references", estimates.len()),
            ));
        }
        for e in estimates {
            self.check(e)?;
        }
        let segments = match rule {
            PairingRule::AllSegments => self.segments(),
            PairingRule::FirstSegment => 1,
        };
        let mut sir = vec![vec![0.0; n]; n];
        for (e, est) in estimates.iter().enumerate() {
            for (r, row) in sir.iter_mut().enumerate() {
                row[e] = (0..segments)
                    .into_par_iter()
                    .map(|j| {
                        let d = self.segments[j].decompose(self.slice(est, j), r)?;
                        // Infinite scores are clamped so the sum stays comparable.
                        Ok(d.sir_sdr().0.clamp(-SENTINEL_DB, SENTINEL_DB))
                    })
                    .collect::<Result<Vec<f64>>>()?
                    .iter()
                    .sum();
            }
        }
        let mut best = (f64::NEG_INFINITY, (0..n).collect::<Vec<_>>());
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p| {
            let total: f64 = p.iter().enumerate().map(|(r, &e)| sir[r][e]).sum();
            if total > best.0 {
                best = (total, p.to_vec());
            }
        });
        Ok(best.1)
    }

    /// Scores aligned estimates (`estimates[n]` ↔ reference `n`) segment by
    /// segment, with improvements relative to `baseline`.
    pub fn report(&self, estimates: &[Vec<f64>], baseline: &Baseline) -> Result<EvalReport> {
        let n = self.sources();
        if estimates.len() != n {
            return Err(Error::dim(
                "report",
                format!("{} estimates for {n} references", estimates.len()),
            ));
        }
        for e in estimates {
            self.check(e)?;
        }
        let hop = self.segment_samples as f64 / self.sample_rate as f64;
        let scores: Vec<SegmentScore> = (0..self.segments())
            .into_par_iter()
            .map(|j| {
                (0..n)
                    .map(|src| {
                        let (sir, sdr) = self.segments[j].decompose(self.slice(&estimates[src], j), src)?.sir_sdr();
                        let (sir0, sdr0) = baseline.scores[j][src];
                        Ok(SegmentScore {
                            segment: j,
                            t_start_s: j as f64 * hop,
                            source: src,
                            sir_db: sir,
                            sdr_db: sdr,
                            sir_improvement_db: sir - sir0,
                            sdr_improvement_db: sdr - sdr0,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let segs = self.segments();
        let tail = segs.div_ceil(4).max(1);
        let mean = |xs: &mut dyn Iterator<Item = f64>| {
            let v: Vec<f64> = xs.collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let converged = (0..n)
            .map(|src| {
                let last: Vec<&SegmentScore> =
                    scores.iter().filter(|s| s.source == src && s.segment >= segs - tail).collect();
                SourceSummary {
                    source: src,
                    input_sir_db: mean(&mut baseline.scores.iter().map(|row| row[src].0)),
                    sir_db: mean(&mut last.iter().map(|s| s.sir_db)),
                    sdr_db: mean(&mut last.iter().map(|s| s.sdr_db)),
                    sir_improvement_db: mean(&mut last.iter().map(|s| s.sir_improvement_db)),
                    sdr_improvement_db: mean(&mut last.iter().map(|s| s.sdr_improvement_db)),
                }
            })
            .collect();
        Ok(EvalReport {
            config: self.cfg,
            sample_rate: self.sample_rate,
            segments: segs,
            converged_segments: tail,
            isnr_db: None,
            scores,
            converged,
        })
    }
}

fn permutations(p: &mut [usize], k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

/// Convergence curve of one run: per-segment scores of aligned `estimates`
/// against `references`, with improvements over `mixture` (the unprocessed
/// reference-channel signal).
pub fn convergence_curve(
    estimates: &[Vec<f64>],
    references: &[Vec<f64>],
    mixture: &[f64],
    sample_rate: u32,
    cfg: EvalConfig,
) -> Result<EvalReport> {
    let ev = Evaluator::new(references, sample_rate, cfg)?;
    let base = ev.baseline(mixture)?;
    ev.report(estimates, &base)
}
