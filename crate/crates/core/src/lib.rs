//! Conditional density estimation with Gaussianizing Iterative Slicing flows
//! and in-distribution anomaly detection by local over-density.
//!
//! The pipeline is:
//!
//! 1. [`jets`] turns particle-level events into five jet features
//!    `(m_jj, m_j1, m_j1 − m_j2, τ21_1, τ21_2)`.
//! 2. [`gis_flow::fit_gis`] fits `p(x | m)` with the invariant mass `m_jj`
//!    as the conditional variable ([`conditional`] handles the binning).
//! 3. [`anomaly::score_events`] compares `p(x | m)` with a Gaussian-weighted
//!    average of `p(x | m ± δ)`; the ratio `α` peaks on localized
//!    over-densities.
//!
//! [`synth`] generates labelled benchmarks for all of the above.

pub mod anomaly;
pub mod conditional;
pub mod csvio;
pub mod error;
pub mod gis_flow;
pub mod jets;
pub mod normal;
pub mod synth;

pub use error::{Error, Result};
