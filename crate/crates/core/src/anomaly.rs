//! Local over-density scoring.
//!
//! For each event the conditional density at its own `m` (`p_signal`) is
//! compared with a Gaussian-weighted average of the density at neighbouring
//! values `m + δ` (`p_background`). The ratio `α = p_signal / p_background`
//! sits near 1 wherever the data vary smoothly in `m` and rises above 1 on a
//! localized excess.

use std::fmt;

use rayon::prelude::*;

use crate::csvio::{fmt_float, FeatureTable};
use crate::error::{Error, Result};
use crate::gis_flow::FlowModel;
use crate::normal;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreConfig {
    /// Width of the background kernel, in units of `m`.
    pub sigma: f64,
    /// Number of kernel sample points on `[−2σ, 2σ]`.
    pub n_quad: usize,
    /// Offsets with `|δ| < exclusion_halfwidth` are dropped from the kernel.
    pub exclusion_halfwidth: f64,
    pub cut_thresholds: Vec<f64>,
    /// When set, `p_signal` is itself averaged over a Gaussian of this
    /// width instead of being the point estimate.
    pub signal_sigma: Option<f64>,
}

impl Default for ScoreConfig {
    /// σ = 250 GeV, 10 kernel points, α cuts at 1.5, 2.5 and 5.
    fn default() -> Self {
        Self::with_sigma(250.0)
    }
}

impl ScoreConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        Self {
            sigma,
            n_quad: 10,
            exclusion_halfwidth: 0.5 * sigma,
            cut_thresholds: vec![1.5, 2.5, 5.0],
            signal_sigma: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("sigma must be positive"));
        }
        if self.n_quad < 2 {
            return Err(Error::config("n_quad must be at least 2"));
        }
        if !(self.exclusion_halfwidth >= 0.0) {
            return Err(Error::config("exclusion_halfwidth must be non-negative"));
        }
        if self.cut_thresholds.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::config("cut thresholds must be positive"));
        }
        if let Some(s) = self.signal_sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("signal_sigma must be positive"));
            }
        }
        Ok(())
    }

    /// Thresholds sorted ascending with duplicates removed.
    pub fn sorted_thresholds(&self) -> Vec<f64> {
        let mut t = self.cut_thresholds.clone();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }
}

/// Discrete Gaussian kernel in `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub offsets: Vec<f64>,
    /// Sum to one.
    pub weights: Vec<f64>,
}

impl Kernel {
    /// `n` equally spaced points on `[−2σ, 2σ]` with Gaussian weights,
    /// dropping `|δ| < exclusion`.
    pub fn gaussian(sigma: f64, n: usize, exclusion: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::config("kernel needs at least 2 points"));
        }
        let (offsets, raw): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|j| -2.0 * sigma + 4.0 * sigma * j as f64 / (n - 1) as f64)
            .filter(|d| d.abs() >= exclusion)
            .map(|d| (d, normal::pdf(d / sigma)))
            .unzip();
        if offsets.is_empty() {
            return Err(Error::config(format!(
                "exclusion half-width {exclusion} removes every kernel point"
            )));
        }
        let total: f64 = raw.iter().sum();
        Ok(Self {
            offsets,
            weights: raw.iter().map(|w| w / total).collect(),
        })
    }

    pub fn background(cfg: &ScoreConfig) -> Result<Self> {
        Self::gaussian(cfg.sigma, cfg.n_quad, cfg.exclusion_halfwidth)
    }

    /// `Σ_j w_j p(x | m + δ_j)`; the flag is set if any offset was clamped.
    pub fn smoothed_density(&self, model: &FlowModel, x: &[f64], m: f64) -> Result<(f64, bool)> {
        let mut total = 0.0;
        let mut clamped = false;
        for (d, w) in self.offsets.iter().zip(&self.weights) {
            let (ld, c) = model.log_density_flagged(x, m + d)?;
            total += w * ld.exp();
            clamped |= c;
        }
        Ok((total, clamped))
    }
}

/// Point estimate `p(x | m)`.
pub fn signal_density(model: &FlowModel, x: &[f64], m: f64) -> Result<f64> {
    Ok(model.log_density(x, m)?.exp())
}

/// Kernel-averaged density from neighbouring conditional values.
pub fn background_density(model: &FlowModel, x: &[f64], m: f64, cfg: &ScoreConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(Kernel::background(cfg)?.smoothed_density(model, x, m)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventScore {
    /// `p_signal / p_background`; `+∞` when the background underflowed.
    pub alpha: f64,
    pub p_signal: f64,
    pub p_background: f64,
    /// The event's `m` or one of the kernel offsets left the trained range.
    pub clamped: bool,
    /// `p_background` underflowed to zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub threshold: f64,
    /// Event indices with `α > threshold`, ascending.
    pub indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStat {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    /// Standard error of the mean.
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub stats: Vec<FeatureStat>,
    /// Only one event was selected; `std` and `sem` are reported as 0.
    pub single_event: bool,
}

impl Summary {
    pub fn stat(&self, name: &str) -> Option<&FeatureStat> {
        self.stats.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stats {
            writeln!(f, "  {} = {:.4} ± {:.4} (std {:.4})", s.name, s.mean, s.sem, s.std)?;
        }
        if self.single_event {
            writeln!(f, "  (single event: spread undefined)")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    /// One entry per event, input order.
    pub scores: Vec<EventScore>,
    /// One per threshold, ascending.
    pub selections: Vec<Selection>,
    /// Summary of each selection over the conditional and all features;
    /// `None` where no event passes.
    pub summaries: Vec<Option<Summary>>,
}

impl AnomalyReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.alpha).collect()
    }

    /// Human-readable cut summary.
    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        for (sel, summary) in self.selections.iter().zip(&self.summaries) {
            out.push_str(&format!("alpha > {}: {} events\n", fmt_float(sel.threshold), sel.indices.len()));
            match summary {
                Some(s) => out.push_str(&s.to_string()),
                None => out.push_str("  no events pass cut\n"),
            }
        }
        out
    }
}

pub fn score_event(
    model: &FlowModel,
    x: &[f64],
    m: f64,
    background: &Kernel,
    signal: Option<&Kernel>,
) -> Result<EventScore> {
    let (p_signal, sig_clamped) = match signal {
        Some(k) => k.smoothed_density(model, x, m)?,
        None => {
            let (ld, c) = model.log_density_flagged(x, m)?;
            (ld.exp(), c)
        }
    };
    let (p_background, bg_clamped) = background.smoothed_density(model, x, m)?;
    let degenerate = p_background == 0.0;
    let alpha = if degenerate { f64::INFINITY } else { p_signal / p_background };
    Ok(EventScore {
        alpha,
        p_signal,
        p_background,
        clamped: sig_clamped || bg_clamped,
        degenerate,
    })
}

/// Scores every event and applies the configured cuts. Degenerate events
/// (background underflow) carry `α = +∞` but are kept out of selections.
pub fn score_events(model: &FlowModel, events: &FeatureTable, cfg: &ScoreConfig) -> Result<AnomalyReport> {
    cfg.validate()?;
    if events.dim() != model.dim() {
        return Err(Error::config(format!(
            "model expects {} features, table has {}",
            model.dim(),
            events.dim()
        )));
    }
    let background = Kernel::background(cfg)?;
    let signal = cfg
        .signal_sigma
        .map(|s| Kernel::gaussian(s, cfg.n_quad, 0.0))
        .transpose()?;

    let scores = (0..events.len())
        .into_par_iter()
        .map(|i| {
            let row = events.features.row(i);
            let x = row.as_slice().map(<[f64]>::to_vec).unwrap_or_else(|| row.to_vec());
            score_event(model, &x, events.conditionals[i], &background, signal.as_ref())
                .map_err(|e| Error::input(format!("event {} (row {i}): {e}", events.ids[i])))
        })
        .collect::<Result<Vec<_>>>()?;

    let selections: Vec<Selection> = cfg
        .sorted_thresholds()
        .into_iter()
        .map(|threshold| Selection {
            threshold,
            indices: scores
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.degenerate && s.alpha > threshold)
                .map(|(i, _)| i)
                .collect(),
        })
        .collect();
    let names = events.column_names();
    let summaries = selections
        .iter()
        .map(|sel| match summarize(events, &sel.indices, &names) {
            Ok(s) => Ok(Some(s)),
            Err(Error::NoEventsPassCut) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AnomalyReport {
        scores,
        selections,
        summaries,
    })
}

/// Mean, sample standard deviation and standard error of the mean of the
/// selected events, over the conditional followed by every feature.
pub fn summarize(events: &FeatureTable, selection: &[usize], feature_names: &[String]) -> Result<Summary> {
    if selection.is_empty() {
        return Err(Error::NoEventsPassCut);
    }
    let n_cols = events.dim() + 1;
    if feature_names.len() != n_cols {
        return Err(Error::config(format!(
            "{} names given for {n_cols} columns",
            feature_names.len()
        )));
    }
    let n = selection.len();
    let nf = n as f64;
    let stats = (0..n_cols)
        .map(|c| {
            let value = |i: usize| {
                if c == 0 {
                    events.conditionals[i]
                } else {
                    events.features[[i, c - 1]]
                }
            };
            let mean = selection.iter().map(|&i| value(i)).sum::<f64>() / nf;
            let std = if n > 1 {
                (selection.iter().map(|&i| (value(i) - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
            } else {
                0.0
            };
            FeatureStat {
                name: feature_names[c].clone(),
                mean,
                std,
                sem: std / nf.sqrt(),
            }
        })
        .collect();
    Ok(Summary {
        n,
        stats,
        single_event: n == 1,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanBin {
    pub m_lo: f64,
    pub m_hi: f64,
    pub count: usize,
    pub alpha_max: Option<f64>,
    pub alpha_p99: Option<f64>,
}

/// Linear-interpolation percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi || sorted[lo] == sorted[hi] {
        return sorted[lo];
    }
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bins events in `m` with width `bin_width` (edges on multiples of the
/// width) and reports the count, maximum α and 99th-percentile α per bin.
pub fn scan_profile(report: &AnomalyReport, events: &FeatureTable, bin_width: f64) -> Result<Vec<ScanBin>> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(Error::config("scan bin width must be positive"));
    }
    if report.scores.len() != events.len() {
        return Err(Error::config("report and event table differ in length"));
    }
    if events.is_empty() {
        return Ok(Vec::new());
    }
    let lo = events.conditionals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = events.conditionals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let first = (lo / bin_width).floor() as i64;
    let last = (hi / bin_width).floor() as i64;
    let n_bins = (last - first + 1) as usize;
    let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
    for (m, s) in events.conditionals.iter().zip(&report.scores) {
        let b = ((m / bin_width).floor() as i64 - first) as usize;
        per_bin[b].push(s.alpha);
    }
    Ok(per_bin
        .into_iter()
        .enumerate()
        .map(|(b, mut alphas)| {
            let m_lo = (first + b as i64) as f64 * bin_width;
            alphas.sort_by(f64::total_cmp);
            ScanBin {
                m_lo,
                m_hi: m_lo + bin_width,
                count: alphas.len(),
                alpha_max: alphas.last().copied(),
                alpha_p99: (!alphas.is_empty()).then(|| percentile_sorted(&alphas, 0.99)),
            }
        })
        .collect())
}

/// Index of the scan bin with the largest 99th-percentile α. The
/// percentile rather than the maximum keeps a single badly modelled event
/// from deciding the peak.
pub fn peak_bin(bins: &[ScanBin]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in bins.iter().enumerate() {
        if let Some(a) = b.alpha_p99 {
            if best.is_none_or(|(_, v)| a > v) {
                best = Some((i, a));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// The `min_events` highest-α events with `m` inside `window`, plus any
/// ties at the cut. Returns the cut value (the lowest selected α) and the
/// ascending event indices; degenerate events are never selected.
pub fn top_in_window(
    report: &AnomalyReport,
    events: &FeatureTable,
    window: (f64, f64),
    min_events: usize,
) -> Result<Selection> {
    if min_events == 0 {
        return Err(Error::config("min_events must be positive"));
    }
    let inside: Vec<usize> = (0..events.len())
        .filter(|&i| {
            let m = events.conditionals[i];
            !report.scores[i].degenerate && m >= window.0 && m <= window.1
        })
        .collect();
    if inside.len() < min_events {
        return Err(Error::NoEventsPassCut);
    }
    let mut alphas: Vec<f64> = inside.iter().map(|&i| report.scores[i].alpha).collect();
    alphas.sort_by(|a, b| b.total_cmp(a));
    let threshold = alphas[min_events - 1];
    Ok(Selection {
        threshold,
        indices: inside.into_iter().filter(|&i| report.scores[i].alpha >= threshold).collect(),
    })
}
