//! CSV interchange.
//!
//! Feature tables have a mandatory header `event_id,<conditional>,<features…>`;
//! the first data column is always the conditional variable. All writers
//! format floats with Rust's shortest round-trip representation so output
//! is byte-reproducible.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::anomaly::{AnomalyReport, ScanBin};
use crate::error::{Error, Result};
use crate::synth::LabeledDataset;

/// Events as read from or written to a features CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<u64>,
    pub conditional_name: String,
    pub feature_names: Vec<String>,
    pub conditionals: Vec<f64>,
    /// `n × d`, one row per event.
    pub features: Array2<f64>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Conditional name followed by the feature names.
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once(self.conditional_name.clone())
            .chain(self.feature_names.iter().cloned())
            .collect()
    }

    /// Conditional value followed by the features of event `i`.
    pub fn full_row(&self, i: usize) -> Vec<f64> {
        std::iter::once(self.conditionals[i])
            .chain(self.features.row(i).iter().copied())
            .collect()
    }
}

impl From<&LabeledDataset> for FeatureTable {
    fn from(ds: &LabeledDataset) -> Self {
        Self {
            ids: (0..ds.len() as u64).collect(),
            conditional_name: ds.conditional_name.clone(),
            feature_names: ds.feature_names.clone(),
            conditionals: ds.conditionals.clone(),
            features: ds.features.clone(),
        }
    }
}

pub(crate) fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

pub fn write_features<W: Write>(table: &FeatureTable, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "event_id,{}", table.column_names().join(","))?;
    for i in 0..table.len() {
        let cells: Vec<String> = table.full_row(i).into_iter().map(fmt_float).collect();
        writeln!(out, "{},{}", table.ids[i], cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_features<R: std::io::Read>(input: R) -> Result<FeatureTable> {
    let mut lines = BufReader::new(input).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::parse(1, "missing header")),
    };
    let columns: Vec<String> = header.trim().split(',').map(|s| s.trim().to_owned()).collect();
    if columns.len() < 3 || columns[0] != "event_id" {
        return Err(Error::parse(
            1,
            "header must be `event_id,<conditional>,<feature>[,...]`",
        ));
    }
    let d = columns.len() - 2;
    let mut ids = Vec::new();
    let mut conditionals = Vec::new();
    let mut flat = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != columns.len() {
            return Err(Error::parse(
                line_no,
                format!("expected {} cells, found {}", columns.len(), cells.len()),
            ));
        }
        let id = cells[0]
            .parse::<u64>()
            .map_err(|_| Error::parse(line_no, format!("bad event_id `{}`", cells[0])))?;
        ids.push(id);
        for (c, cell) in cells.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::parse(line_no, format!("column `{}`: bad number `{cell}`", columns[c])))?;
            if !v.is_finite() {
                return Err(Error::parse(line_no, format!("column `{}`: non-finite value", columns[c])));
            }
            if c == 1 {
                conditionals.push(v);
            } else {
                flat.push(v);
            }
        }
    }
    let n = ids.len();
    Ok(FeatureTable {
        ids,
        conditional_name: columns[1].clone(),
        feature_names: columns[2..].to_vec(),
        conditionals,
        features: Array2::from_shape_vec((n, d), flat).expect("rows have d cells"),
    })
}

pub fn read_features_file(path: &Path) -> Result<FeatureTable> {
    read_features(fs::File::open(path)?)
}

/// Truth labels, kept apart from the features.
pub fn write_labels<W: Write>(ids: &[u64], labels: &[bool], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "event_id,is_signal")?;
    for (id, &s) in ids.iter().zip(labels) {
        writeln!(out, "{id},{}", u8::from(s))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_labels<R: std::io::Read>(input: R) -> Result<Vec<(u64, bool)>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if idx == 0 {
            if line.trim() != "event_id,is_signal" {
                return Err(Error::parse(1, "labels header must be `event_id,is_signal`"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (id, flag) = line
            .split_once(',')
            .ok_or_else(|| Error::parse(idx + 1, "expected two cells"))?;
        let id = id.trim().parse().map_err(|_| Error::parse(idx + 1, "bad event_id"))?;
        let flag = match flag.trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(idx + 1, format!("bad is_signal `{other}`"))),
        };
        out.push((id, flag));
    }
    Ok(out)
}

pub const SCORE_HEADER: &str = "event_id,m,alpha,p_signal,p_background,clamped_flag";
pub const SCAN_HEADER: &str = "m_lo,m_hi,count,alpha_max,alpha_p99";

pub fn write_scores<W: Write>(table: &FeatureTable, report: &AnomalyReport, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{SCORE_HEADER}")?;
    for (i, s) in report.scores.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            table.ids[i],
            fmt_float(table.conditionals[i]),
            fmt_float(s.alpha),
            fmt_float(s.p_signal),
            fmt_float(s.p_background),
            u8::from(s.clamped)
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scan<W: Write>(bins: &[ScanBin], out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{SCAN_HEADER}")?;
    let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for b in bins {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(b.m_lo),
            fmt_float(b.m_hi),
            b.count,
            opt(b.alpha_max),
            opt(b.alpha_p99)
        )?;
    }
    out.flush()?;
    Ok(())
}
