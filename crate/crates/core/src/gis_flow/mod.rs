//! Gaussianizing Iterative Slicing (GIS) flows.
//!
//! Each layer picks an orthonormal frame `W` of the most non-Gaussian
//! directions and Gaussianizes the data's 1D marginals along it, leaving the
//! orthogonal complement untouched:
//!
//! ```text
//! x ← x − W Wᵀ x + W Ψ_m(Wᵀ x)
//! ```
//!
//! `Ψ_m` is fitted per conditional bin and interpolated in `m`. The Jacobian
//! determinant of a layer is the product of the `K` marginal derivatives, so
//! `ln p(x | m)` is exact.

mod fit;
mod io;
mod marginal;
mod model;
mod slice;

pub use fit::{fit_gis, FitConfig, FitReport, FittedFlow, IterationRecord, StopReason};
pub use io::{load_model, model_to_string, parse_model, save_model, MODEL_HEADER};
pub use marginal::{fit_marginal_transform, smoothed_quantile, Marginal1DTransform, DEFAULT_DERIVATIVE_FLOOR};
pub use model::{FlowModel, FlowOutput, GisLayer, Standardization};
pub use slice::{select_slice, wasserstein_1d_to_gaussian};

/// Convenience wrappers matching the operation names used elsewhere.
pub fn apply_marginal(t: &Marginal1DTransform, y: f64) -> (f64, f64) {
    t.apply(y)
}

pub fn invert_marginal(t: &Marginal1DTransform, z: f64) -> f64 {
    t.invert(z)
}
