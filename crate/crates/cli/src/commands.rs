use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use gisflow::anomaly::{peak_bin, percentile_sorted, scan_profile, score_events, summarize, top_in_window, AnomalyReport, ScoreConfig};
use gisflow::csvio::{self, FeatureTable};
use gisflow::gis_flow::{fit_gis, model_to_string, parse_model, FitConfig};
use gisflow::jets::{self, RejectReason};
use gisflow::synth::{self, LabeledDataset, LhcConfig, ToyConfig, LHC_FEATURES};
use gisflow::{Error, Result};
use ndarray::Array2;

use crate::output::{sha256_hex, sibling, Manifest, Staged};
use crate::settings::{FloatList, Settings};
use crate::{FeaturesArgs, FitArgs, ScoreArgs, SynthArgs, SynthKind};

const DEFAULT_WINDOW: (f64, f64) = (2250.0, 4750.0);

pub fn features(a: &FeaturesArgs) -> Result<()> {
    let mut s = Settings::load(a.config.as_deref())?;
    let radius = s.get("radius", a.radius, jets::DEFAULT_RADIUS)?;
    let eta_max = s.get("eta-max", a.eta_max, jets::DEFAULT_ETA_MAX)?;
    let lo = s.get("window-lo", a.window_lo, DEFAULT_WINDOW.0)?;
    let hi = s.get("window-hi", a.window_hi, DEFAULT_WINDOW.1)?;
    let resolved = s.finish()?;
    if !(lo < hi) {
        return Err(Error::Config(format!("window bounds out of order: {lo} >= {hi}")));
    }
    if !(radius > 0.0) || !(eta_max > 0.0) {
        return Err(Error::Config("radius and eta-max must be positive".into()));
    }

    let file = File::open(&a.input).map_err(|e| Error::Input(format!("cannot read {}: {e}", a.input.display())))?;
    let mut ids = Vec::new();
    let mut conditionals = Vec::new();
    let mut flat = Vec::new();
    let mut rejected: BTreeMap<RejectReason, usize> = RejectReason::ALL.iter().map(|&r| (r, 0)).collect();
    let mut n_in = 0usize;
    for event in jets::read_particle_events(BufReader::new(file))? {
        let (id, particles) = event?;
        n_in += 1;
        let outcome = jets::extract_features(&particles, radius, eta_max)?
            .and_then(|f| if f.m_jj > lo && f.m_jj < hi { Ok(f) } else { Err(RejectReason::OutsideWindow) });
        match outcome {
            Ok(f) => {
                let v = f.to_array();
                ids.push(id);
                conditionals.push(v[0]);
                flat.extend_from_slice(&v[1..]);
            }
            Err(reason) => *rejected.entry(reason).or_default() += 1,
        }
    }
    let n_out = ids.len();
    let table = FeatureTable {
        ids,
        conditional_name: "m_jj".into(),
        feature_names: LHC_FEATURES.iter().map(|s| s.to_string()).collect(),
        conditionals,
        features: Array2::from_shape_vec((n_out, LHC_FEATURES.len()), flat).expect("five features per event"),
    };

    let mut m = Manifest::new("features");
    m.input("input", &a.input)?;
    m.config(resolved);
    m.set("events_in", n_in);
    m.set("events_out", n_out);
    for (reason, count) in &rejected {
        m.set(format!("rejected.{reason}"), count);
    }
    let mut out = Staged::default();
    out.write(&a.output, |w| csvio::write_features(&table, w))?;
    out.write_str(&sibling(&a.output, "manifest"), &m.render())?;
    out.commit()?;

    println!("events in: {n_in}, written: {n_out}");
    for (reason, count) in &rejected {
        println!("  rejected {reason}: {count}");
    }
    Ok(())
}

fn read_table(path: &Path) -> Result<FeatureTable> {
    let file = File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    csvio::read_features(file)
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let table = read_table(&a.input)?;
    let d = table.dim();
    let base = FitConfig::for_dim(d);
    let mut s = Settings::load(a.config.as_deref())?;
    let cfg = FitConfig {
        n_iterations: s.get("iterations", a.iterations, base.n_iterations)?,
        slices_per_iteration: s.get("slices", a.slices, base.slices_per_iteration)?,
        n_direction_candidates: s.get("candidates", a.candidates, base.n_direction_candidates)?,
        knots_per_transform: s.get("knots", a.knots, base.knots_per_transform)?,
        n_conditional_bins: s.get("bins", a.bins, base.n_conditional_bins)?,
        rng_seed: s.get("seed", a.seed, base.rng_seed)?,
        derivative_floor: s.get("derivative-floor", a.derivative_floor, base.derivative_floor)?,
        tolerance: s.get_opt("tolerance", a.tolerance)?,
    };
    let resolved = s.finish()?;
    cfg.validate(d)?;

    println!("fitting {} events, {d} features, conditional `{}`", table.len(), table.conditional_name);
    let fitted = fit_gis(table.features.view(), &table.conditionals, &cfg)?;
    let report = &fitted.report;
    for (i, it) in report.iterations.iter().enumerate() {
        println!(
            "iteration {:>3}: W1 {:.5} -> {:.5} (frame {})",
            i + 1,
            it.total_before(),
            it.total_after(),
            it.candidate
        );
    }
    println!("stopped: {:?} (tolerance {:.5})", report.stop, report.tolerance);

    let text = model_to_string(&fitted.model);
    let mut m = Manifest::new("fit");
    m.input("input", &a.input)?;
    m.config(resolved);
    m.set("rows", table.len());
    m.set("dim", d);
    m.set("layers", fitted.model.layers().len());
    m.set("stop", format!("{:?}", report.stop));
    m.set("model.sha256", sha256_hex(text.as_bytes()));
    let mut out = Staged::default();
    out.write_str(&a.output, &text)?;
    out.write_str(&sibling(&a.output, "manifest"), &m.render())?;
    out.commit()
}

pub fn score(a: &ScoreArgs) -> Result<()> {
    let mut s = Settings::load(a.config.as_deref())?;
    let sigma = s.get("sigma", a.sigma, 250.0)?;
    let defaults = ScoreConfig::with_sigma(sigma);
    let cfg = ScoreConfig {
        sigma,
        n_quad: s.get("n-quad", a.n_quad, defaults.n_quad)?,
        exclusion_halfwidth: s.get("exclusion", a.exclusion, defaults.exclusion_halfwidth)?,
        cut_thresholds: s.get("thresholds", a.thresholds.clone(), FloatList(defaults.cut_thresholds))?.0,
        signal_sigma: s.get_opt("signal-sigma", a.signal_sigma)?,
    };
    let scan_width = s.get("scan-width", a.scan_width, sigma)?;
    let peak_events = s.get("peak-events", a.peak_events, 50usize)?;
    let resolved = s.finish()?;
    cfg.validate()?;

    let model_text = std::fs::read_to_string(&a.model)
        .map_err(|e| Error::Input(format!("cannot read model {}: {e}", a.model.display())))?;
    let model = parse_model(&model_text)?;
    let table = read_table(&a.input)?;
    let report = score_events(&model, &table, &cfg)?;
    let scan = scan_profile(&report, &table, scan_width)?;

    let mut summary = report.summary_text();
    if let Some(p) = peak_bin(&scan) {
        let b = &scan[p];
        let center = 0.5 * (b.m_lo + b.m_hi);
        let window = (center - sigma, center + sigma);
        summary.push_str(&format!(
            "scan peak: {} in [{}, {})\n",
            table.conditional_name, b.m_lo, b.m_hi
        ));
        match top_in_window(&report, &table, window, peak_events) {
            Ok(sel) => {
                let st = summarize(&table, &sel.indices, &table.column_names())?;
                summary.push_str(&format!(
                    "peak window [{}, {}], alpha >= {:.4}: {} events\n{st}",
                    window.0,
                    window.1,
                    sel.threshold,
                    sel.indices.len()
                ));
            }
            Err(Error::NoEventsPassCut) => {
                summary.push_str(&format!("peak window holds fewer than {peak_events} events\n"));
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(labels) = &a.labels {
        summary.push_str(&label_metrics(&report, &table, labels)?);
    }
    print!("{summary}");

    let mut m = Manifest::new("score");
    m.input("input", &a.input)?;
    m.input("model", &a.model)?;
    if let Some(l) = &a.labels {
        m.input("labels", l)?;
    }
    m.config(resolved);
    m.set("rows", table.len());
    m.set("clamped", report.scores.iter().filter(|s| s.clamped).count());
    m.set("degenerate", report.scores.iter().filter(|s| s.degenerate).count());
    for sel in &report.selections {
        m.set(format!("selected.alpha>{}", sel.threshold), sel.indices.len());
    }
    let mut out = Staged::default();
    out.write(&a.output, |w| csvio::write_scores(&table, &report, w))?;
    out.write(&sibling(&a.output, "scan.csv"), |w| csvio::write_scan(&scan, w))?;
    out.write_str(&sibling(&a.output, "summary.txt"), &summary)?;
    out.write_str(&sibling(&a.output, "manifest"), &m.render())?;
    out.commit()
}

fn label_metrics(report: &AnomalyReport, table: &FeatureTable, path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    let labels: HashMap<u64, bool> = csvio::read_labels(file)?.into_iter().collect();
    let mut is_signal = Vec::with_capacity(table.len());
    for id in &table.ids {
        let l = labels
            .get(id)
            .ok_or_else(|| Error::Input(format!("no label for event {id}")))?;
        is_signal.push(*l);
    }
    let alphas = report.alphas();
    let mut bg: Vec<f64> = alphas.iter().zip(&is_signal).filter(|(_, &s)| !s).map(|(a, _)| *a).collect();
    let sig: Vec<f64> = alphas.iter().zip(&is_signal).filter(|(_, &s)| s).map(|(a, _)| *a).collect();
    bg.sort_by(f64::total_cmp);
    let mut out = String::from("truth metrics:\n");
    if !bg.is_empty() {
        out.push_str(&format!(
            "  background alpha median {:.4}, p95 {:.4}, p99 {:.4}\n",
            percentile_sorted(&bg, 0.5),
            percentile_sorted(&bg, 0.95),
            percentile_sorted(&bg, 0.99)
        ));
    }
    if !sig.is_empty() {
        out.push_str(&format!(
            "  signal events {}, mean alpha {:.4}\n",
            sig.len(),
            sig.iter().sum::<f64>() / sig.len() as f64
        ));
        for sel in &report.selections {
            let hits = sel.indices.iter().filter(|&&i| is_signal[i]).count();
            out.push_str(&format!(
                "  alpha > {}: {} selected, signal recall {:.4}\n",
                sel.threshold,
                sel.indices.len(),
                hits as f64 / sig.len() as f64
            ));
        }
    }
    Ok(out)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let mut s = Settings::load(a.config.as_deref())?;
    let (kind, ds): (&str, LabeledDataset) = match a.kind {
        SynthKind::Toy => {
            let d = ToyConfig::default();
            let cfg = ToyConfig {
                seed: s.get("seed", a.seed, d.seed)?,
                n_background: s.get("n-background", a.n_background, d.n_background)?,
                n_signal: s.get("n-signal", a.n_signal, d.n_signal)?,
                ..d
            };
            ("toy", synth::generate_toy(&cfg)?)
        }
        SynthKind::Lhc => {
            let d = LhcConfig::default();
            let cfg = LhcConfig {
                seed: s.get("seed", a.seed, d.seed)?,
                n_background: s.get("n-background", a.n_background, d.n_background)?,
                n_signal: s.get("n-signal", a.n_signal, d.n_signal)?,
                ..d
            };
            ("lhc", synth::generate_lhc_like(&cfg)?)
        }
    };
    let resolved = s.finish()?;
    let table = FeatureTable::from(&ds);
    let labels_path = a.labels.clone().unwrap_or_else(|| sibling(&a.output, "labels.csv"));

    let mut m = Manifest::new(&format!("synth {kind}"));
    m.config(resolved);
    m.set("rows", ds.len());
    m.set("signal", ds.n_signal());
    let mut out = Staged::default();
    out.write(&a.output, |w| csvio::write_features(&table, w))?;
    out.write(&labels_path, |w| csvio::write_labels(&table.ids, &ds.labels, w))?;
    out.write_str(&sibling(&a.output, "manifest"), &m.render())?;
    out.commit()?;
    println!("wrote {} events ({} signal)", ds.len(), ds.n_signal());
    Ok(())
}
