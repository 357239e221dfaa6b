use gisflow::normal;
use gisflow::synth::{generate_lhc_like, generate_toy, LhcConfig, ToyConfig};

/// Two-sample Kolmogorov-Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Critical value at significance 1e-3.
fn ks_critical(n: usize, m: usize) -> f64 {
    let c = (-(0.5e-3f64).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[test]
fn toy_histogram_matches_analytic_density() {
    let cfg = ToyConfig {
        n_signal: 0,
        ..ToyConfig::default()
    };
    let ds = generate_toy(&cfg).unwrap();
    let (m_bins, x_bins) = (10usize, 12usize);
    let (m_lo, m_hi) = cfg.m_range;
    let dm = (m_hi - m_lo) / m_bins as f64;
    let x_edges: Vec<f64> = (0..=x_bins).map(|k| -3.0 + 6.0 * k as f64 / x_bins as f64).collect();
    let mut counts = vec![vec![0.0; x_bins]; m_bins];
    for (&m, &x) in ds.conditionals.iter().zip(ds.features.column(0)) {
        let i = (((m - m_lo) / dm) as usize).min(m_bins - 1);
        let mu = cfg.background_mean(m)[0];
        if let Some(k) = x_edges.windows(2).position(|w| x - mu >= w[0] && x - mu < w[1]) {
            counts[i][k] += 1.0;
        }
    }
    // residuals x - μ(m) are standard normal at every m
    let width = cfg.background_width[0];
    let per_m = cfg.n_background as f64 / m_bins as f64;
    let mut chi = Vec::new();
    for row in &counts {
        for (k, &c) in row.iter().enumerate() {
            let p = normal::cdf(x_edges[k + 1] / width) - normal::cdf(x_edges[k] / width);
            let e = per_m * p;
            chi.push((c - e) * (c - e) / e);
        }
    }
    let good = chi.iter().filter(|&&c| c < 4.0).count() as f64 / chi.len() as f64;
    assert!(good >= 0.95, "{good}");
}

#[test]
fn lhc_background_is_smooth_in_mjj() {
    let cfg = LhcConfig {
        n_background: 100_000,
        n_signal: 0,
        ..LhcConfig::default()
    };
    let split = |ds: &gisflow::synth::LabeledDataset| {
        // jet masses scale with m_jj; compare their scale-free ratios
        let mut bins: Vec<Vec<[f64; 4]>> = vec![Vec::new(); 10];
        for (i, &m) in ds.conditionals.iter().enumerate() {
            let f = ds.features.row(i);
            let b = (((m - 2250.0) / 250.0) as usize).min(9);
            bins[b].push([f[0] / m, f[1] / m, f[2], f[3]]);
        }
        bins
    };
    let worst = |bins: &[Vec<[f64; 4]>]| {
        let mut out = Vec::new();
        for w in bins.windows(2) {
            let r = (0..4)
                .map(|c| {
                    let a: Vec<f64> = w[0].iter().map(|v| v[c]).collect();
                    let b: Vec<f64> = w[1].iter().map(|v| v[c]).collect();
                    ks(a, b) / ks_critical(w[0].len(), w[1].len())
                })
                .fold(0.0, f64::max);
            out.push(r);
        }
        out
    };
    let null = worst(&split(&generate_lhc_like(&cfg).unwrap()));
    assert!(null.iter().all(|&r| r < 1.0), "{null:?}");

    let injected = generate_lhc_like(&LhcConfig { n_signal: 2000, ..cfg }).unwrap();
    let with_signal = worst(&split(&injected));
    // the resonance sits in [3750, 4000), between comparisons 5-6 and 6-7
    assert!(with_signal[5] > 1.0 && with_signal[6] > 1.0, "{with_signal:?}");
}
