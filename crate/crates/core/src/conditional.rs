//! Binning along the conditional variable and interpolation of per-bin
//! marginal transforms.
//!
//! Bins are equal-occupancy. A transform is fitted per bin; between two bin
//! centres the outputs (and derivatives) of the two neighbouring transforms
//! are blended linearly, so the flow is continuous in `m`.

use crate::error::{Error, Result};
use crate::gis_flow::Marginal1DTransform;

/// Fewest training samples a conditional bin may hold.
pub const MIN_BIN_OCCUPANCY: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalBinning {
    edges: Vec<f64>,
    centers: Vec<f64>,
}

/// Where a conditional value lands relative to the bin centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: usize,
    pub upper: usize,
    /// Weight of `upper`, in `[0, 1]`.
    pub t: f64,
}

impl ConditionalBinning {
    /// Rebuilds a binning from explicit edges; centres are the midpoints.
    pub fn from_edges(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::config("binning needs at least two edges"));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::input("bin edges must be finite"));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("bin edges must be strictly increasing"));
        }
        let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Ok(Self { edges, centers })
    }

    /// A single bin spanning `[lo, hi]`: the unconditional case.
    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Self::from_edges(vec![lo, hi])
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn n_bins(&self) -> usize {
        self.centers.len()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.edges.len() - 1])
    }

    /// Clamps `m` into the binning range; the flag is set when it moved.
    pub fn clamp(&self, m: f64) -> (f64, bool) {
        let (lo, hi) = self.range();
        if m < lo {
            (lo, true)
        } else if m > hi {
            (hi, true)
        } else {
            (m, false)
        }
    }

    /// Bin holding `m`; the top edge belongs to the last bin.
    pub fn bin_of(&self, m: f64) -> usize {
        let (m, _) = self.clamp(m);
        let above = self.edges.partition_point(|&e| e <= m);
        above.saturating_sub(1).min(self.n_bins() - 1)
    }

    /// Bracketing bin centres for an in-range `m`.
    pub fn bracket(&self, m: f64) -> Bracket {
        let c = &self.centers;
        let last = c.len() - 1;
        if m <= c[0] {
            return Bracket { lower: 0, upper: 0, t: 0.0 };
        }
        if m >= c[last] {
            return Bracket { lower: last, upper: last, t: 0.0 };
        }
        let upper = c.partition_point(|&v| v <= m);
        let lower = upper - 1;
        let t = (m - c[lower]) / (c[upper] - c[lower]);
        Bracket { lower, upper, t }
    }
}

/// Equal-occupancy binning of `m_values` into `n_bins` bins.
///
/// Inner edges sit halfway between the last sample of one bin and the first
/// of the next; the outer edges are the sample extremes.
pub fn build_binning(m_values: &[f64], n_bins: usize) -> Result<ConditionalBinning> {
    if n_bins < 2 {
        return Err(Error::config("need at least 2 conditional bins"));
    }
    if let Some(i) = m_values.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("conditional value {i} is not finite")));
    }
    let n = m_values.len();
    if n_bins * MIN_BIN_OCCUPANCY > n {
        return Err(Error::fit(format!(
            "{n_bins} bins over {n} samples leaves fewer than {MIN_BIN_OCCUPANCY} per bin"
        )));
    }
    let mut sorted = m_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[n - 1] {
        return Err(Error::fit("conditional values span a zero range"));
    }

    let mut edges = Vec::with_capacity(n_bins + 1);
    edges.push(sorted[0]);
    for b in 1..n_bins {
        let split = b * n / n_bins;
        let (below, above) = (sorted[split - 1], sorted[split]);
        edges.push(below + 0.5 * (above - below));
    }
    edges.push(sorted[n - 1]);
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::fit(
            "tied conditional values make equal-occupancy edges coincide; use fewer bins",
        ));
    }
    ConditionalBinning::from_edges(edges)
}

/// Applies the per-bin transforms of one slice at conditional value `m`,
/// blending the bracketing bins' outputs. Returns `(ψ, ln ψ')`.
pub fn interpolated_apply(
    transforms: &[Marginal1DTransform],
    binning: &ConditionalBinning,
    y: f64,
    m: f64,
) -> (f64, f64) {
    let (m, _) = binning.clamp(m);
    apply_bracketed(transforms, binning.bracket(m), y)
}

pub(crate) fn apply_bracketed(transforms: &[Marginal1DTransform], br: Bracket, y: f64) -> (f64, f64) {
    if br.lower == br.upper || br.t == 0.0 {
        return transforms[br.lower].apply(y);
    }
    let lo = &transforms[br.lower];
    let hi = &transforms[br.upper];
    let (v0, d0) = lo.eval(y);
    let (v1, d1) = hi.eval(y);
    let floor = lo.derivative_floor().min(hi.derivative_floor());
    let value = (1.0 - br.t) * v0 + br.t * v1;
    let deriv = (1.0 - br.t) * d0.max(lo.derivative_floor()) + br.t * d1.max(hi.derivative_floor());
    (value, deriv.max(floor).ln())
}

/// Inverse of [`apply_bracketed`] by safeguarded Newton iteration.
pub(crate) fn invert_bracketed(transforms: &[Marginal1DTransform], br: Bracket, z: f64) -> f64 {
    if br.lower == br.upper || br.t == 0.0 {
        return transforms[br.lower].invert(z);
    }
    let lo = &transforms[br.lower];
    let hi = &transforms[br.upper];
    let f = |y: f64| {
        let (v0, d0) = lo.eval(y);
        let (v1, d1) = hi.eval(y);
        ((1.0 - br.t) * v0 + br.t * v1 - z, (1.0 - br.t) * d0 + br.t * d1)
    };
    // The root lies between the two component inverses.
    let (ya, yb) = (lo.invert(z), hi.invert(z));
    let (mut a, mut b) = if ya <= yb { (ya, yb) } else { (yb, ya) };
    if a == b {
        return a;
    }
    let mut y = (1.0 - br.t) * ya + br.t * yb;
    for _ in 0..200 {
        let (g, dg) = f(y);
        if g == 0.0 {
            return y;
        }
        if g < 0.0 {
            a = y;
        } else {
            b = y;
        }
        let newton = y - g / dg;
        let next = if dg > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        if (next - y).abs() <= 1e-15 * y.abs().max(1.0) {
            return next;
        }
        y = next;
    }
    y
}
