use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::conditional::{build_binning, Bracket, ConditionalBinning};
use crate::error::{Error, Result};
use crate::gis_flow::marginal::{fit_marginal_transform, DEFAULT_DERIVATIVE_FLOOR};
use crate::gis_flow::model::{FlowModel, GisLayer, Standardization};
use crate::gis_flow::slice::{search, ScoringSet};

/// Expected W₁ distance of an `n`-point standard normal sample to N(0, 1)
/// is close to `W1_NOISE / sqrt(n)`.
const W1_NOISE: f64 = 1.3;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Upper bound on the number of layers.
    pub n_iterations: usize,
    pub slices_per_iteration: usize,
    pub n_direction_candidates: usize,
    pub knots_per_transform: usize,
    pub derivative_floor: f64,
    pub rng_seed: u64,
    /// 1 fits an unconditional flow.
    pub n_conditional_bins: usize,
    /// Stop once the mean W₁ per selected slice drops below this. `None`
    /// uses twice the sampling noise of a bin, `2.6 / sqrt(n_bin)`.
    pub tolerance: Option<f64>,
}

impl FitConfig {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            n_iterations: 100,
            slices_per_iteration: dim.clamp(1, 4),
            n_direction_candidates: 64,
            knots_per_transform: 32,
            derivative_floor: DEFAULT_DERIVATIVE_FLOOR,
            rng_seed: 0,
            n_conditional_bins: 32,
            tolerance: None,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.slices_per_iteration == 0 || self.slices_per_iteration > dim {
            return Err(Error::config(format!(
                "slices_per_iteration must be in 1..={dim}, got {}",
                self.slices_per_iteration
            )));
        }
        if self.n_direction_candidates == 0 {
            return Err(Error::config("n_direction_candidates must be positive"));
        }
        if self.knots_per_transform < 8 {
            return Err(Error::config("knots_per_transform must be at least 8"));
        }
        if !(self.derivative_floor > 0.0 && self.derivative_floor.is_finite()) {
            return Err(Error::config("derivative_floor must be positive"));
        }
        if self.n_conditional_bins == 0 {
            return Err(Error::config("n_conditional_bins must be positive"));
        }
        if let Some(tol) = self.tolerance {
            if !(tol >= 0.0 && tol.is_finite()) {
                return Err(Error::config("tolerance must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    /// The best slice was already within sampling noise of Gaussian.
    Converged,
    /// The best slice was no less Gaussian than the previous iteration's.
    NoProgress,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// W₁ of each selected slice before the update.
    pub before: Vec<f64>,
    /// W₁ of the same slices after the update.
    pub after: Vec<f64>,
    /// Winning candidate; 0 is the axis-aligned frame.
    pub candidate: usize,
}

impl IterationRecord {
    pub fn total_before(&self) -> f64 {
        self.before.iter().sum()
    }

    pub fn total_after(&self) -> f64 {
        self.after.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub iterations: Vec<IterationRecord>,
    pub stop: StopReason,
    pub tolerance: f64,
    /// Training data pushed through the fitted flow, row-major.
    pub transformed: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct FittedFlow {
    pub model: FlowModel,
    pub report: FitReport,
}

fn iteration_seed(seed: u64, iteration: usize) -> u64 {
    // splitmix64 finalizer over (seed, iteration)
    let mut z = seed ^ (iteration as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fits a conditional GIS flow to `data` (rows are samples) given one
/// conditional value per row.
pub fn fit_gis(data: ArrayView2<'_, f64>, conditionals: &[f64], config: &FitConfig) -> Result<FittedFlow> {
    let (n, d) = data.dim();
    if d == 0 {
        return Err(Error::input("data has no feature columns"));
    }
    config.validate(d)?;
    if conditionals.len() != n {
        return Err(Error::input(format!(
            "{n} rows but {} conditional values",
            conditionals.len()
        )));
    }
    if n <= 10 * d {
        return Err(Error::input(format!("need more than {} rows for {d} features, got {n}", 10 * d)));
    }
    if let Some((i, j)) = data.indexed_iter().find(|(_, v)| !v.is_finite()).map(|(ix, _)| ix) {
        return Err(Error::input(format!("row {i}, column {j} is not finite")));
    }
    if let Some(i) = conditionals.iter().position(|v| !v.is_finite()) {
        return Err(Error::input(format!("conditional value at row {i} is not finite")));
    }

    let standardization = standardize_params(data)?;
    let binning = if config.n_conditional_bins == 1 {
        let lo = conditionals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = conditionals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let hi = if hi > lo { hi } else { lo + 1.0 };
        ConditionalBinning::single(lo, hi)?
    } else {
        build_binning(conditionals, config.n_conditional_bins)?
    };

    let n_bins = binning.n_bins();
    let mut groups = vec![Vec::new(); n_bins];
    for (i, &m) in conditionals.iter().enumerate() {
        groups[binning.bin_of(m)].push(i);
    }
    let required = 2 * config.knots_per_transform;
    for (b, g) in groups.iter().enumerate() {
        if g.len() < required {
            let edges = binning.edges();
            return Err(Error::fit(format!(
                "conditional bin {b} [{}, {}] holds {} samples; {required} needed for {} knots",
                edges[b],
                edges[b + 1],
                g.len(),
                config.knots_per_transform
            )));
        }
    }
    let brackets: Vec<Bracket> = conditionals.iter().map(|&m| binning.bracket(m)).collect();

    let mut z: Vec<f64> = Vec::with_capacity(n * d);
    for row in data.rows() {
        for (j, v) in row.iter().enumerate() {
            z.push((v - standardization.shift()[j]) / standardization.scale()[j]);
        }
    }

    let smallest = groups.iter().map(Vec::len).min().unwrap_or(n) as f64;
    let tolerance = config.tolerance.unwrap_or(2.0 * W1_NOISE / smallest.sqrt());
    let k = config.slices_per_iteration;
    let mut layers = Vec::new();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut stop = StopReason::MaxIterations;

    for it in 0..config.n_iterations {
        let choice = {
            let set = ScoringSet::new(&z, d, &groups);
            search(&set, k, config.n_direction_candidates, iteration_seed(config.rng_seed, it))?
        };
        let score = choice.score();
        if score / k as f64 <= tolerance {
            stop = StopReason::Converged;
            break;
        }
        if iterations.last().is_some_and(|prev| score >= prev.total_before()) {
            stop = StopReason::NoProgress;
            break;
        }

        let frame = choice.frame.clone();
        let mut per_bin = Vec::with_capacity(n_bins);
        let mut proj = Vec::new();
        for (b, group) in groups.iter().enumerate() {
            let mut row_transforms = Vec::with_capacity(k);
            for c in 0..k {
                proj.clear();
                proj.extend(group.iter().map(|&i| {
                    z[i * d..(i + 1) * d]
                        .iter()
                        .enumerate()
                        .map(|(j, v)| v * frame[j * k + c])
                        .sum::<f64>()
                }));
                let t = fit_marginal_transform(&proj, config.knots_per_transform, config.derivative_floor)
                    .map_err(|e| Error::fit(format!("iteration {it}, bin {b}, slice {c}: {e}")))?;
                row_transforms.push(t);
            }
            per_bin.push(row_transforms);
        }
        let frame = Array2::from_shape_vec((d, k), frame).expect("frame has d × k entries");
        let layer = GisLayer::new(frame, per_bin)?;

        z.par_chunks_mut(d).zip(brackets.par_iter()).for_each_init(Vec::new, |scratch, (row, br)| {
            layer.forward_in_place(row, *br, scratch);
        });

        let after = ScoringSet::new(&z, d, &groups).column_scores(&choice.frame, k);
        iterations.push(IterationRecord {
            before: choice.column_scores,
            after,
            candidate: choice.candidate,
        });
        layers.push(layer);
    }

    let model = FlowModel::new(standardization, binning, layers)?;
    let transformed = Array2::from_shape_vec((n, d), z).expect("n × d transformed values");
    Ok(FittedFlow {
        model,
        report: FitReport {
            iterations,
            stop,
            tolerance,
            transformed,
        },
    })
}

fn standardize_params(data: ArrayView2<'_, f64>) -> Result<Standardization> {
    let n = data.nrows() as f64;
    let mut shift = Vec::with_capacity(data.ncols());
    let mut scale = Vec::with_capacity(data.ncols());
    for (j, col) in data.columns().into_iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        if !(var > 0.0) {
            return Err(Error::fit(format!("feature column {j} has zero variance")));
        }
        shift.push(mean);
        scale.push(var.sqrt());
    }
    Standardization::new(shift, scale)
}
