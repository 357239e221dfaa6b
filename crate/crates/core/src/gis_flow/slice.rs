//! Choosing the directions to Gaussianize.
//!
//! Candidate frames are scored by how far their 1D projections are from a
//! standard normal in order-1 Wasserstein distance; the most non-Gaussian
//! frame wins.

use std::collections::HashMap;

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::normal;

/// W₁ between the empirical distribution of `samples` and N(0, 1), by
/// quantile matching at plotting positions `(j - 0.5) / n`.
pub fn wasserstein_1d_to_gaussian(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::input("need at least 2 samples for a Wasserstein distance"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(w1_sorted(&sorted, &normal::plotting_quantiles(sorted.len())))
}

pub(crate) fn w1_sorted(sorted: &[f64], quantiles: &[f64]) -> f64 {
    debug_assert_eq!(sorted.len(), quantiles.len());
    let total: f64 = sorted.iter().zip(quantiles).map(|(s, q)| (s - q).abs()).sum();
    total / sorted.len() as f64
}

/// Row-major `n × d` data split into groups (conditional bins) for scoring.
pub(crate) struct ScoringSet<'a> {
    pub data: &'a [f64],
    pub dim: usize,
    pub groups: &'a [Vec<usize>],
    quantiles: HashMap<usize, Vec<f64>>,
}

impl<'a> ScoringSet<'a> {
    pub fn new(data: &'a [f64], dim: usize, groups: &'a [Vec<usize>]) -> Self {
        let mut quantiles = HashMap::new();
        for g in groups {
            quantiles
                .entry(g.len())
                .or_insert_with(|| normal::plotting_quantiles(g.len()));
        }
        Self {
            data,
            dim,
            groups,
            quantiles,
        }
    }

    fn total_rows(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Occupancy-weighted W₁ of each column of `frame` (row-major `d × k`).
    pub fn column_scores(&self, frame: &[f64], k: usize) -> Vec<f64> {
        let n_total = self.total_rows() as f64;
        let mut scores = vec![0.0; k];
        let mut proj = Vec::new();
        for group in self.groups {
            let q = &self.quantiles[&group.len()];
            let weight = group.len() as f64 / n_total;
            for (c, score) in scores.iter_mut().enumerate() {
                proj.clear();
                proj.extend(group.iter().map(|&i| {
                    let row = &self.data[i * self.dim..(i + 1) * self.dim];
                    row.iter().enumerate().map(|(j, x)| x * frame[j * k + c]).sum::<f64>()
                }));
                proj.sort_unstable_by(f64::total_cmp);
                *score += weight * w1_sorted(&proj, q);
            }
        }
        scores
    }
}

/// Outcome of a slice search.
#[derive(Debug, Clone)]
pub struct SliceChoice {
    /// Row-major `d × k` matrix with orthonormal columns.
    pub frame: Vec<f64>,
    /// W₁ of each selected column before the update.
    pub column_scores: Vec<f64>,
    /// Index of the winning candidate; 0 is the axis-aligned frame.
    pub candidate: usize,
}

impl SliceChoice {
    pub fn score(&self) -> f64 {
        self.column_scores.iter().sum()
    }
}

pub(crate) fn search(set: &ScoringSet<'_>, k: usize, n_candidates: usize, seed: u64) -> Result<SliceChoice> {
    let d = set.dim;
    if k == 0 || k > d {
        return Err(Error::input(format!("slice count {k} must be in 1..={d}")));
    }

    let axis_scores = set.column_scores(&identity_frame(d), d);
    let mut ranked: Vec<usize> = (0..d).collect();
    // stable sort: ties keep the lower axis first
    ranked.sort_by(|&a, &b| axis_scores[b].total_cmp(&axis_scores[a]));
    let mut axis = vec![0.0; d * k];
    for (c, &j) in ranked.iter().take(k).enumerate() {
        axis[j * k + c] = 1.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::with_capacity(n_candidates + 1);
    candidates.push(axis);
    for _ in 0..n_candidates {
        candidates.push(random_frame(d, k, &mut rng));
    }

    let scored: Vec<Vec<f64>> = candidates
        .par_iter()
        .map(|frame| set.column_scores(frame, k))
        .collect();
    let mut best = 0;
    let mut best_total = f64::NEG_INFINITY;
    for (i, s) in scored.iter().enumerate() {
        let total: f64 = s.iter().sum();
        if total > best_total {
            best = i;
            best_total = total;
        }
    }
    let column_scores = scored[best].clone();
    Ok(SliceChoice {
        frame: candidates.swap_remove(best),
        column_scores,
        candidate: best,
    })
}

/// Picks a `d × k` orthonormal frame whose projections are furthest from
/// Gaussian, among `n_candidates` random frames and the best axis-aligned
/// one. Deterministic given `seed`.
pub fn select_slice(data: ArrayView2<'_, f64>, k: usize, n_candidates: usize, seed: u64) -> Result<Array2<f64>> {
    let (n, d) = data.dim();
    if k > d {
        return Err(Error::input(format!("cannot take {k} slices of {d}-dimensional data")));
    }
    if n <= d {
        return Err(Error::input(format!("need more rows ({n}) than dimensions ({d})")));
    }
    let flat: Vec<f64> = data.iter().copied().collect();
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("data contains a non-finite value"));
    }
    let groups = vec![(0..n).collect::<Vec<_>>()];
    let set = ScoringSet::new(&flat, d, &groups);
    let choice = search(&set, k, n_candidates, seed)?;
    Ok(Array2::from_shape_vec((d, k), choice.frame).expect("frame has d × k entries"))
}

fn identity_frame(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Gaussian `d × k` matrix orthonormalized by two passes of modified
/// Gram-Schmidt.
fn random_frame(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| StandardNormal.sample(rng)).collect())
            .collect();
        if orthonormalize(&mut cols) {
            let mut frame = vec![0.0; d * k];
            for (c, col) in cols.iter().enumerate() {
                for (j, v) in col.iter().enumerate() {
                    frame[j * k + c] = *v;
                }
            }
            return frame;
        }
    }
}

fn orthonormalize(cols: &mut [Vec<f64>]) -> bool {
    for i in 0..cols.len() {
        for _pass in 0..2 {
            for j in 0..i {
                let dot: f64 = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(i);
                for (a, b) in tail[0].iter_mut().zip(&head[j]) {
                    *a -= dot * b;
                }
            }
            let norm = cols[i].iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 1e-8 {
                return false;
            }
            cols[i].iter_mut().for_each(|v| *v /= norm);
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gram_error(w: &Array2<f64>) -> f64 {
        let g = w.t().dot(w);
        let mut worst = 0.0f64;
        for ((i, j), v) in g.indexed_iter() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
        worst
    }

    #[test]
    fn two_point_sample() {
        let w = wasserstein_1d_to_gaussian(&[-1.0, 1.0]).unwrap();
        let expected = ((-1.0 - normal::quantile(0.25)).abs() + (1.0 - normal::quantile(0.75)).abs()) / 2.0;
        assert!((w - expected).abs() < 1e-15);
        assert!((w - 0.3255).abs() < 1e-4);
        assert!(wasserstein_1d_to_gaussian(&[1.0]).is_err());
    }

    #[test]
    fn gaussian_and_shifted_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(wasserstein_1d_to_gaussian(&z).unwrap() < 0.02);
        let shifted: Vec<f64> = z.iter().map(|v| v + 2.0).collect();
        assert!((wasserstein_1d_to_gaussian(&shifted).unwrap() - 2.0).abs() < 0.02);
    }

    fn uniform_axis_data(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, 2), |(_, j)| {
            if j == 0 {
                rng.random_range(-3.0..3.0)
            } else {
                StandardNormal.sample(&mut rng)
            }
        })
    }

    #[test]
    fn picks_the_non_gaussian_axis() {
        let data = uniform_axis_data(20_000, 3);
        // oracle: score both axes directly
        let col0: Vec<f64> = data.column(0).to_vec();
        let col1: Vec<f64> = data.column(1).to_vec();
        assert!(wasserstein_1d_to_gaussian(&col0).unwrap() > wasserstein_1d_to_gaussian(&col1).unwrap());

        let w = select_slice(data.view(), 1, 64, 9).unwrap();
        assert!(w[[0, 0]].abs() > 0.95, "{w:?}");
    }

    #[test]
    fn square_frames_are_orthogonal_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((500, 4), |_| rng.random::<f64>().powi(3));
        let w = select_slice(data.view(), 4, 32, 77).unwrap();
        assert!(gram_error(&w) < 1e-10);
        let again = select_slice(data.view(), 4, 32, 77).unwrap();
        assert_eq!(w, again);
    }

    #[test]
    fn too_many_slices_is_an_input_error() {
        let data = uniform_axis_data(100, 1);
        assert!(matches!(select_slice(data.view(), 3, 4, 0), Err(Error::Input(_))));
    }

    #[test]
    fn random_frames_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(d, k) in &[(1, 1), (3, 2), (5, 4), (8, 8)] {
            let f = random_frame(d, k, &mut rng);
            let w = Array2::from_shape_vec((d, k), f).unwrap();
            assert!(gram_error(&w) < 1e-12);
        }
    }
}
