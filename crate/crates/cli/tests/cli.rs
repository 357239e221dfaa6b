#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::jet_oracle::brute_features;
use gisflow::jets::Particle;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn gisflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gisflow"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gisflow(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str], code: i32) -> String {
    let out = gisflow(dir, args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn manifest_value(path: &Path, key: &str) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")).map(str::to_string))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
}

fn digest(path: &Path) -> String {
    format!("{:x}", Sha256::digest(fs::read(path).unwrap()))
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_string).collect()
}

fn particle_events(n: usize, seed: u64) -> Vec<Vec<Particle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| common::random_event(&mut rng, 40)).collect()
}

fn write_particles(path: &Path, events: &[Vec<Particle>]) {
    let mut text = String::from("event_id,pt,eta,phi\n");
    for (id, ev) in events.iter().enumerate() {
        for p in ev {
            text.push_str(&format!("{id},{},{},{}\n", p.pt, p.eta, p.phi));
        }
    }
    fs::write(path, text).unwrap();
}

#[test]
fn features_match_oracle_and_count_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let events = particle_events(300, 21);
    write_particles(&dir.path().join("p.csv"), &events);
    let oracle: Vec<Option<[f64; 5]>> = events.iter().map(|e| brute_features(e, 1.0, 2.5)).collect();
    let mut masses: Vec<f64> = oracle.iter().flatten().map(|f| f[0]).collect();
    masses.sort_by(f64::total_cmp);
    let (lo, hi) = (masses[masses.len() / 4], masses[3 * masses.len() / 4]);
    ok(
        dir.path(),
        &["features", "--input", "p.csv", "--output", "f.csv", "--window-lo", &lo.to_string(), "--window-hi", &hi.to_string()],
    );
    let expected: Vec<(usize, [f64; 5])> = oracle
        .iter()
        .enumerate()
        .filter_map(|(i, f)| f.filter(|f| f[0] > lo && f[0] < hi).map(|f| (i, f)))
        .collect();
    let rows = data_rows(&dir.path().join("f.csv"));
    assert_eq!(rows.len(), expected.len());
    for (row, (id, f)) in rows.iter().zip(&expected) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells[0] as usize, *id);
        for (a, b) in cells[1..].iter().zip(f) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{row} vs {f:?}");
        }
    }
    let m = dir.path().join("f.manifest");
    assert_eq!(manifest_value(&m, "events_in"), "300");
    assert_eq!(manifest_value(&m, "events_out"), expected.len().to_string());
    let outside = oracle.iter().flatten().filter(|f| !(f[0] > lo && f[0] < hi)).count();
    assert_eq!(manifest_value(&m, "rejected.outside_window"), outside.to_string());
    let rejected: usize = ["fewer_than_two_jets", "missing_substructure", "outside_window"]
        .iter()
        .map(|r| manifest_value(&m, &format!("rejected.{r}")).parse::<usize>().unwrap())
        .sum();
    assert_eq!(rejected + expected.len(), 300);
}

#[test]
fn empty_particle_file_gives_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "event_id,pt,eta,phi\n").unwrap();
    ok(dir.path(), &["features", "--input", "p.csv", "--output", "f.csv"]);
    assert!(data_rows(&dir.path().join("f.csv")).is_empty());
    assert_eq!(manifest_value(&dir.path().join("f.manifest"), "events_in"), "0");
    assert_eq!(manifest_value(&dir.path().join("f.manifest"), "events_out"), "0");
}

#[test]
fn inverted_window_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("p.csv"), "event_id,pt,eta,phi\n").unwrap();
    let err = fails(dir.path(), &["features", "--input", "p.csv", "--output", "f.csv", "--window-lo", "5000"], 2);
    assert!(err.contains("window"), "{err}");
}

#[test]
fn non_finite_feature_is_reported_by_position() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "400", "--n-signal", "0"]);
    let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let cells: Vec<&str> = lines[6].split(',').collect();
    lines[6] = format!("{},{},inf", cells[0], cells[1]);
    fs::write(dir.path().join("t.csv"), lines.join("\n") + "\n").unwrap();
    let err = fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model"], 1);
    assert!(err.contains("line 7") && err.contains("column `x`") && err.contains("non-finite"), "{err}");
    assert!(!dir.path().join("t.model").exists());
}

#[test]
fn missing_model_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "400", "--n-signal", "0"]);
    let err = fails(dir.path(), &["score", "--input", "t.csv", "--model", "absent.model", "--output", "s.csv"], 1);
    assert!(err.contains("absent.model"), "{err}");
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "400", "--n-signal", "0"]);
    fs::write(dir.path().join("unknown.cfg"), "knots = 16\nfrobnicate = 1\n").unwrap();
    let err = fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--config", "unknown.cfg"], 2);
    assert!(err.contains("frobnicate"), "{err}");
    fs::write(dir.path().join("bad.cfg"), "knots = many\n").unwrap();
    fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--config", "bad.cfg"], 2);
    fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--bins", "0"], 2);
    fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--no-such-flag"], 2);
    assert!(!dir.path().join("t.model").exists());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "2000", "--n-signal", "0"]);
    fs::write(dir.path().join("fit.cfg"), "# small fit\nknots = 12\nderivative_floor = 1e-5\n").unwrap();
    ok(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--config", "fit.cfg", "--knots", "10", "--bins", "2"]);
    let m = dir.path().join("t.manifest");
    assert_eq!(manifest_value(&m, "config.knots"), "10");
    assert_eq!(manifest_value(&m, "config.derivative-floor"), "0.00001");
    assert_eq!(manifest_value(&m, "config.bins"), "2");
}

#[test]
fn thresholds_come_out_sorted() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "4000", "--n-signal", "100"]);
    ok(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--bins", "8"]);
    ok(dir.path(), &["score", "--input", "t.csv", "--model", "t.model", "--output", "s.csv", "--thresholds", "3,1.2,2"]);
    let manifest = fs::read_to_string(dir.path().join("s.manifest")).unwrap();
    let cuts: Vec<&str> = manifest
        .lines()
        .filter_map(|l| l.strip_prefix("selected.alpha>"))
        .map(|l| l.split(' ').next().unwrap())
        .collect();
    assert_eq!(cuts, ["1.2", "2", "3"]);
    assert_eq!(data_rows(&dir.path().join("s.csv")).len(), 4100);
    assert!(dir.path().join("s.scan.csv").exists() && dir.path().join("s.summary.txt").exists());
}

#[test]
fn synth_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--seed", "7", "--output", "a.csv"]);
    ok(dir.path(), &["synth", "toy", "--seed", "7", "--output", "b.csv"]);
    ok(dir.path(), &["synth", "toy", "--seed", "8", "--output", "c.csv"]);
    let p = |n: &str| dir.path().join(n);
    assert_eq!(digest(&p("a.csv")), digest(&p("b.csv")));
    assert_eq!(digest(&p("a.labels.csv")), digest(&p("b.labels.csv")));
    assert_ne!(digest(&p("a.csv")), digest(&p("c.csv")));
}

#[test]
fn lhc_default_signal_fraction() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "lhc", "--output", "l.csv"]);
    let m = dir.path().join("l.manifest");
    assert_eq!(manifest_value(&m, "rows"), "100000");
    assert_eq!(manifest_value(&m, "signal"), "80");
    let signal = data_rows(&dir.path().join("l.labels.csv")).iter().filter(|r| r.ends_with(",1")).count();
    assert_eq!(signal, 80);
}

#[test]
fn zero_events_give_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "0", "--n-signal", "0"]);
    for name in ["t.csv", "t.labels.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}: {text}");
    }
    fails(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model"], 1);
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "toy", "--output", "t.csv", "--n-background", "2000", "--n-signal", "0"]);
    ok(dir.path(), &["fit", "--input", "t.csv", "--output", "t.model", "--bins", "2"]);
    // a directory in the way of a later output makes the run fail midway
    fs::create_dir(dir.path().join("s.summary.txt.partial")).unwrap();
    fails(dir.path(), &["score", "--input", "t.csv", "--model", "t.model", "--output", "s.csv"], 1);
    let mut left: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("s."))
        .collect();
    left.sort();
    assert_eq!(left, ["s.summary.txt.partial"]);
}
