//! One-dimensional Gaussianizing maps.
//!
//! A [`Marginal1DTransform`] is a monotone rational-quadratic spline through
//! `(knots_in[j], knots_out[j])` with linear extrapolation outside the knot
//! range. Knot derivatives are the harmonic mean of the neighbouring secants
//! and the end derivatives equal the tail slopes, so the map is C¹ on the
//! whole real line and strictly increasing. Evaluation, derivative and
//! inverse are all closed form.

use crate::error::{Error, Result};
use crate::normal;

/// Default lower bound on `dψ/dy`.
pub const DEFAULT_DERIVATIVE_FLOOR: f64 = 1e-6;

/// Width of the rank kernel used by [`smoothed_quantile`], in units of its
/// standard deviation.
const KERNEL_CUTOFF: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Marginal1DTransform {
    knots_in: Vec<f64>,
    knots_out: Vec<f64>,
    tail_slopes: (f64, f64),
    derivative_floor: f64,
    // Derived from the four fields above; never serialized.
    derivs: Vec<f64>,
}

impl Marginal1DTransform {
    pub fn new(
        knots_in: Vec<f64>,
        knots_out: Vec<f64>,
        tail_slopes: (f64, f64),
        derivative_floor: f64,
    ) -> Result<Self> {
        if knots_in.len() != knots_out.len() {
            return Err(Error::config(format!(
                "knot tables differ in length ({} vs {})",
                knots_in.len(),
                knots_out.len()
            )));
        }
        if knots_in.len() < 2 {
            return Err(Error::config("a marginal transform needs at least 2 knots"));
        }
        if !(derivative_floor > 0.0 && derivative_floor.is_finite()) {
            return Err(Error::config("derivative floor must be positive"));
        }
        for (name, knots) in [("knots_in", &knots_in), ("knots_out", &knots_out)] {
            if knots.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("{name} contains a non-finite value")));
            }
            if knots.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(format!("{name} must be strictly increasing")));
            }
        }
        let (lo, hi) = tail_slopes;
        if !(lo > 0.0 && hi > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Error::config("tail slopes must be positive and finite"));
        }

        let secants: Vec<f64> = knots_in
            .windows(2)
            .zip(knots_out.windows(2))
            .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
            .collect();
        let mut derivs = Vec::with_capacity(knots_in.len());
        derivs.push(lo);
        for s in secants.windows(2) {
            derivs.push(2.0 * s[0] * s[1] / (s[0] + s[1]));
        }
        derivs.push(hi);

        Ok(Self {
            knots_in,
            knots_out,
            tail_slopes,
            derivative_floor,
            derivs,
        })
    }

    /// `ψ(y) = y`.
    pub fn identity() -> Self {
        Self::affine(1.0, 0.0)
    }

    /// `ψ(y) = scale · y + shift` for `scale > 0`.
    pub fn affine(scale: f64, shift: f64) -> Self {
        assert!(scale > 0.0, "affine transform needs a positive scale");
        Self::new(
            vec![-1.0, 1.0],
            vec![shift - scale, shift + scale],
            (scale, scale),
            DEFAULT_DERIVATIVE_FLOOR,
        )
        .expect("affine knots are valid")
    }

    pub fn knots_in(&self) -> &[f64] {
        &self.knots_in
    }

    pub fn knots_out(&self) -> &[f64] {
        &self.knots_out
    }

    pub fn tail_slopes(&self) -> (f64, f64) {
        self.tail_slopes
    }

    pub fn derivative_floor(&self) -> f64 {
        self.derivative_floor
    }

    /// Value and raw derivative at `y`.
    pub(crate) fn eval(&self, y: f64) -> (f64, f64) {
        let last = self.knots_in.len() - 1;
        if y < self.knots_in[0] {
            let s = self.tail_slopes.0;
            return (linear(s, self.knots_in[0], self.knots_out[0], y), s);
        }
        if y > self.knots_in[last] {
            let s = self.tail_slopes.1;
            return (linear(s, self.knots_in[last], self.knots_out[last], y), s);
        }
        let k = segment_index(&self.knots_in, y);
        let (x0, x1) = (self.knots_in[k], self.knots_in[k + 1]);
        let (y0, y1) = (self.knots_out[k], self.knots_out[k + 1]);
        let (d0, d1) = (self.derivs[k], self.derivs[k + 1]);
        let w = x1 - x0;
        let h = y1 - y0;
        let s = h / w;
        if d0 == s && d1 == s {
            return (linear(s, x0, y0, y), s);
        }
        let xi = (y - x0) / w;
        let omx = 1.0 - xi;
        let xi_omx = xi * omx;
        let denom = s + (d1 + d0 - 2.0 * s) * xi_omx;
        let value = y0 + h * (s * xi * xi + d0 * xi_omx) / denom;
        let deriv = s * s * (d1 * xi * xi + 2.0 * s * xi_omx + d0 * omx * omx) / (denom * denom);
        (value, deriv)
    }

    /// Returns `(ψ(y), ln ψ'(y))` with the derivative clamped at the floor.
    pub fn apply(&self, y: f64) -> (f64, f64) {
        let (value, deriv) = self.eval(y);
        (value, deriv.max(self.derivative_floor).ln())
    }

    /// Derivative of `ψ` at `y`, clamped at the floor.
    pub fn derivative(&self, y: f64) -> f64 {
        self.eval(y).1.max(self.derivative_floor)
    }

    pub fn invert(&self, z: f64) -> f64 {
        let last = self.knots_out.len() - 1;
        if z < self.knots_out[0] {
            return linear_inverse(self.tail_slopes.0, self.knots_in[0], self.knots_out[0], z);
        }
        if z > self.knots_out[last] {
            return linear_inverse(self.tail_slopes.1, self.knots_in[last], self.knots_out[last], z);
        }
        let k = segment_index(&self.knots_out, z);
        let (x0, x1) = (self.knots_in[k], self.knots_in[k + 1]);
        let (y0, y1) = (self.knots_out[k], self.knots_out[k + 1]);
        let (d0, d1) = (self.derivs[k], self.derivs[k + 1]);
        let w = x1 - x0;
        let h = y1 - y0;
        let s = h / w;
        if d0 == s && d1 == s {
            return linear_inverse(s, x0, y0, z);
        }
        let dz = z - y0;
        let curv = d1 + d0 - 2.0 * s;
        let a = h * (s - d0) + dz * curv;
        let b = h * d0 - dz * curv;
        let c = -s * dz;
        let disc = (b * b - 4.0 * a * c).max(0.0);
        let denom = -b - disc.sqrt();
        let xi = if denom == 0.0 { 0.0 } else { (2.0 * c / denom).clamp(0.0, 1.0) };
        let mut y = x0 + xi * w;

        // One Newton polish step, kept inside the segment.
        let (value, deriv) = self.eval(y);
        if deriv > 0.0 {
            let polished = y - (value - z) / deriv;
            if polished >= x0 && polished <= x1 {
                y = polished;
            }
        }
        y
    }
}

// Slope-intercept form keeps the identity map exact.
fn linear(slope: f64, x0: f64, y0: f64, y: f64) -> f64 {
    slope * y + (y0 - slope * x0)
}

fn linear_inverse(slope: f64, x0: f64, y0: f64, z: f64) -> f64 {
    (z - (y0 - slope * x0)) / slope
}

/// Index `k` of the segment `[knots[k], knots[k + 1]]` containing `v`,
/// assuming `knots[0] <= v <= knots[last]`.
fn segment_index(knots: &[f64], v: f64) -> usize {
    let upper = knots.partition_point(|&k| k <= v);
    upper.saturating_sub(1).min(knots.len() - 2)
}

/// Rank-kernel smoothed quantile of pre-sorted data.
///
/// Order statistics are weighted by a Gaussian in plotting position centred
/// on `p` with the width of the sampling distribution of the `p`-quantile,
/// `sqrt(p(1 - p) / (n + 2))`. This is the normal approximation to the
/// Harrell-Davis estimator.
pub fn smoothed_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let nf = n as f64;
    let width = (p * (1.0 - p) / (nf + 2.0)).sqrt();
    let reach = KERNEL_CUTOFF * width;
    // plotting position of index i is (i + 0.5) / n
    let lo = (((p - reach) * nf - 0.5).floor().max(0.0)) as usize;
    let hi = ((((p + reach) * nf - 0.5).ceil()).max(0.0) as usize).min(n - 1);
    let nearest = ((p * nf - 0.5).round().max(0.0) as usize).min(n - 1);
    let lo = lo.min(nearest);
    let hi = hi.max(nearest);

    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in sorted.iter().enumerate().take(hi + 1).skip(lo) {
        let u = (i as f64 + 0.5) / nf;
        let t = (u - p) / width;
        let w = (-0.5 * t * t).exp();
        num += w * v;
        den += w;
    }
    if den > 0.0 {
        num / den
    } else {
        sorted[nearest]
    }
}

/// Fits a Gaussianizing map to `samples`: knots at smoothed empirical
/// quantiles of the equispaced levels `(j + 0.5) / knots`, mapped to the
/// matching standard-normal quantiles.
pub fn fit_marginal_transform(samples: &[f64], knots: usize, floor: f64) -> Result<Marginal1DTransform> {
    if knots < 2 {
        return Err(Error::config("knots_per_transform must be at least 2"));
    }
    if samples.len() < 2 * knots {
        return Err(Error::fit(format!(
            "{} samples is fewer than the {} required for {knots} knots",
            samples.len(),
            2 * knots
        )));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("sample {i} is not finite")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::fit("samples have zero variance"));
    }

    let mut knots_in = Vec::with_capacity(knots);
    let mut knots_out = Vec::with_capacity(knots);
    for j in 0..knots {
        let p = (j as f64 + 0.5) / knots as f64;
        let q = smoothed_quantile(&sorted, p);
        // Heavily tied data can produce repeated quantiles; keep the first.
        if knots_in.last().is_some_and(|&prev| q <= prev) {
            continue;
        }
        knots_in.push(q);
        knots_out.push(normal::quantile(p));
    }
    if knots_in.len() < 2 {
        return Err(Error::fit("samples are too concentrated to place two distinct knots"));
    }

    let last = knots_in.len() - 1;
    let lo = ((knots_out[1] - knots_out[0]) / (knots_in[1] - knots_in[0])).max(floor);
    let hi = ((knots_out[last] - knots_out[last - 1]) / (knots_in[last] - knots_in[last - 1])).max(floor);
    Marginal1DTransform::new(knots_in, knots_out, (lo, hi), floor)
}
