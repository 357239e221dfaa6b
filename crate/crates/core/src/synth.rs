//! Synthetic benchmarks with known truth.
//!
//! * [`generate_toy`]: features `x ~ N(μ(m), σ)` with `μ` affine in a
//!   uniformly distributed conditional `m`, plus a compact signal blob.
//! * [`generate_lhc_like`]: a five-feature dijet sample
//!   `(m_jj, m_j1, Δm, τ21_1, τ21_2)` with a falling `m_jj` spectrum and an
//!   injected two-prong resonance.
//!
//! Both shuffle background and signal together and keep labels aside.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::normal;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub conditional_name: String,
    pub feature_names: Vec<String>,
    /// One conditional value per event.
    pub conditionals: Vec<f64>,
    /// `n × d` feature matrix.
    pub features: Array2<f64>,
    /// `true` for injected signal.
    pub labels: Vec<bool>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.conditionals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditionals.is_empty()
    }

    pub fn n_signal(&self) -> usize {
        self.labels.iter().filter(|&&s| s).count()
    }

    fn shuffled(
        conditional_name: &str,
        feature_names: &[&str],
        mut rows: Vec<(f64, Vec<f64>, bool)>,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        rows.shuffle(rng);
        let d = feature_names.len();
        let mut flat = Vec::with_capacity(rows.len() * d);
        let mut conditionals = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for (m, x, s) in rows {
            conditionals.push(m);
            flat.extend(x);
            labels.push(s);
        }
        Self {
            conditional_name: conditional_name.to_owned(),
            feature_names: feature_names.iter().map(|s| s.to_string()).collect(),
            features: Array2::from_shape_vec((conditionals.len(), d), flat).expect("rows have d features"),
            conditionals,
            labels,
        }
    }
}

/// Smooth Gaussian background with a localized signal. Defaults are the
/// canonical toy: one feature, `m` uniform on `[1000, 5000]`,
/// `μ(m) = (m − 3000) / 4000`, unit width, and 500 signal events at
/// `(x, m) = (1.0, 3000)` with widths `(0.05, 25)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub n_background: usize,
    pub n_signal: usize,
    pub m_range: (f64, f64),
    /// Per-feature `μ_j(m) = intercept_j + slope_j · m`.
    pub background_intercept: Vec<f64>,
    pub background_slope: Vec<f64>,
    pub background_width: Vec<f64>,
    pub signal_center: Vec<f64>,
    pub signal_m: f64,
    pub signal_width: Vec<f64>,
    pub signal_m_width: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            n_background: 50_000,
            n_signal: 500,
            m_range: (1000.0, 5000.0),
            background_intercept: vec![-0.75],
            background_slope: vec![2.5e-4],
            background_width: vec![1.0],
            signal_center: vec![1.0],
            signal_m: 3000.0,
            signal_width: vec![0.05],
            signal_m_width: 25.0,
            seed: 0,
        }
    }
}

impl ToyConfig {
    pub fn dim(&self) -> usize {
        self.background_intercept.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::config("toy needs at least one feature"));
        }
        let lens = [
            self.background_slope.len(),
            self.background_width.len(),
            self.signal_center.len(),
            self.signal_width.len(),
        ];
        if lens.iter().any(|&l| l != d) {
            return Err(Error::config("toy per-feature vectors must share one length"));
        }
        let widths_ok = self
            .background_width
            .iter()
            .chain(&self.signal_width)
            .chain(std::iter::once(&self.signal_m_width))
            .all(|&w| w > 0.0 && w.is_finite());
        if !widths_ok {
            return Err(Error::config("toy widths must be positive"));
        }
        if !(self.m_range.1 > self.m_range.0) {
            return Err(Error::config("toy m range must be increasing"));
        }
        Ok(())
    }

    pub fn background_mean(&self, m: f64) -> Vec<f64> {
        self.background_intercept
            .iter()
            .zip(&self.background_slope)
            .map(|(a, b)| a + b * m)
            .collect()
    }

    /// Analytic background `p(x | m)`.
    pub fn background_density(&self, x: &[f64], m: f64) -> f64 {
        self.background_log_density(x, m).exp()
    }

    pub fn background_log_density(&self, x: &[f64], m: f64) -> f64 {
        self.background_mean(m)
            .iter()
            .zip(&self.background_width)
            .zip(x)
            .map(|((mu, s), v)| normal::log_pdf((v - mu) / s) - s.ln())
            .sum()
    }
}

pub fn generate_toy(cfg: &ToyConfig) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.m_range;
    let mut rows = Vec::with_capacity(cfg.n_background + cfg.n_signal);
    for _ in 0..cfg.n_background {
        let m = rng.random_range(lo..hi);
        let x = cfg
            .background_mean(m)
            .iter()
            .zip(&cfg.background_width)
            .map(|(mu, s)| mu + s * gauss(&mut rng))
            .collect();
        rows.push((m, x, false));
    }
    for _ in 0..cfg.n_signal {
        let m = cfg.signal_m + cfg.signal_m_width * gauss(&mut rng);
        let x = cfg
            .signal_center
            .iter()
            .zip(&cfg.signal_width)
            .map(|(c, s)| c + s * gauss(&mut rng))
            .collect();
        rows.push((m, x, true));
    }
    let names: Vec<String> = if cfg.dim() == 1 {
        vec!["x".into()]
    } else {
        (1..=cfg.dim()).map(|j| format!("x{j}")).collect()
    };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    Ok(LabeledDataset::shuffled("m", &names, rows, &mut rng))
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Feature names for the dijet representation, in column order after the
/// conditional `m_jj`.
pub const LHC_FEATURES: [&str; 4] = ["m_j1", "dm", "tau21_1", "tau21_2"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Parent mass, GeV.
    pub mass: f64,
    /// Daughter masses, GeV.
    pub m1: f64,
    pub m2: f64,
    /// Gaussian widths of `(m_jj, m_j1, Δm)`, GeV.
    pub widths: (f64, f64, f64),
}

impl Default for Resonance {
    fn default() -> Self {
        Self {
            mass: 3823.0,
            m1: 732.0,
            m2: 378.0,
            widths: (60.0, 15.0, 20.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LhcConfig {
    pub n_background: usize,
    pub n_signal: usize,
    pub resonance: Resonance,
    /// `m_jj` support, GeV.
    pub mjj_window: (f64, f64),
    /// Decay length of the falling `m_jj` spectrum, GeV.
    pub mjj_scale: f64,
    pub seed: u64,
}

impl Default for LhcConfig {
    /// 100 000 events with the black-box signal fraction of 0.08%.
    fn default() -> Self {
        Self {
            n_background: 99_920,
            n_signal: 80,
            resonance: Resonance::default(),
            mjj_window: (2250.0, 4750.0),
            mjj_scale: 500.0,
            seed: 0,
        }
    }
}

// Background shape constants.
const J1_MASS_FRACTION: f64 = 0.07;
const J2_MASS_FRACTION: f64 = 0.05;
const JET_MASS_LOG_WIDTH: f64 = 0.6;
const TAU21_BETA: (f64, f64) = (5.0, 3.5);
const SIGNAL_TAU21: (f64, f64) = (0.2, 0.05);

pub fn generate_lhc_like(cfg: &LhcConfig) -> Result<LabeledDataset> {
    let (lo, hi) = cfg.mjj_window;
    let (w_jj, w_j1, w_dm) = cfg.resonance.widths;
    if !(hi > lo) || !(cfg.mjj_scale > 0.0) {
        return Err(Error::config("m_jj window must be increasing and the spectrum scale positive"));
    }
    if ![w_jj, w_j1, w_dm].iter().all(|&w| w > 0.0 && w.is_finite()) {
        return Err(Error::config("resonance widths must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tau = Beta::new(TAU21_BETA.0, TAU21_BETA.1).expect("valid beta parameters");
    let tail_mass = 1.0 - (-(hi - lo) / cfg.mjj_scale).exp();

    let mut rows = Vec::with_capacity(cfg.n_background + cfg.n_signal);
    for _ in 0..cfg.n_background {
        let u: f64 = rng.random();
        let m_jj = lo - cfg.mjj_scale * (1.0 - u * tail_mass).ln();
        let m_j1 = J1_MASS_FRACTION * m_jj * (JET_MASS_LOG_WIDTH * gauss(&mut rng)).exp();
        let m_j2 = J2_MASS_FRACTION * m_jj * (JET_MASS_LOG_WIDTH * gauss(&mut rng)).exp();
        let t1 = tau.sample(&mut rng);
        let t2 = tau.sample(&mut rng);
        rows.push((m_jj, vec![m_j1, m_j1 - m_j2, t1, t2], false));
    }

    let r = &cfg.resonance;
    let tau_sig = Normal::new(SIGNAL_TAU21.0, SIGNAL_TAU21.1).expect("valid normal");
    let two_prong = |rng: &mut ChaCha8Rng| loop {
        let t: f64 = tau_sig.sample(rng);
        if t > 0.0 && t < 1.0 {
            break t;
        }
    };
    for _ in 0..cfg.n_signal {
        let m_jj = r.mass + w_jj * gauss(&mut rng);
        let m_j1 = r.m1 + w_j1 * gauss(&mut rng);
        let dm = (r.m1 - r.m2) + w_dm * gauss(&mut rng);
        let t1 = two_prong(&mut rng);
        let t2 = two_prong(&mut rng);
        rows.push((m_jj, vec![m_j1, dm, t1, t2], true));
    }
    Ok(LabeledDataset::shuffled("m_jj", &LHC_FEATURES, rows, &mut rng))
}
