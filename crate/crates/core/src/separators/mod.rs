//! Online frequency-domain IVA engines.
//!
//! Three algorithms share one state layout and one frame loop:
//!
//! * **AuxIVA**: determined IVA (`M = N`) updated row by row with
//!   iterative projection.
//! * **OverIVA**: `M > N`; the `N` extraction filters are IP-updated and
//!   the remaining `M − N` rows form a noise block `[J, −I]` whose `J`
//!   comes from an orthogonal constraint against the spatial covariance.
//! * **BiIVA**: OverIVA with each extraction filter constrained to a
//!   Kronecker product `w1 ⊗ w2` of two short sub-filters, updated by
//!   alternating iterative projection on the lifted covariances.
//!
//! Each call to [`SeparatorState::process_frame`] runs, in order: the spatial
//! covariance recursion (once per frame), then for each source the contrast
//! weight, the weighted covariance recursion and the filter update; then the
//! orthogonal constraint; then the output `y = W̃ x`.

mod config;
mod engine;
pub mod updates;

pub use config::{balanced_factors, Algorithm, SeparatorConfig, DEFAULT_WEIGHT_FLOOR};
pub use engine::{SeparatorState, SourceEstimate, StageTimings};
