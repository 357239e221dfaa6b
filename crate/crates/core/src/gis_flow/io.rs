//! Plain-text model files.
//!
//! ```text
//! GISFLOW v1
//! dim <d>
//! shift <d floats>
//! scale <d floats>
//! edges <B+1 floats>
//! centers <B floats>
//! layers <L>
//! layer <i> slices <K>
//! w <d·K floats, row-major>
//! transform <bin> <slice> knots <n> floor <f> tails <lo> <hi>
//! in <n floats>
//! out <n floats>
//! ...
//! end
//! ```
//!
//! Every float is written with 17 significant digits, which round-trips
//! IEEE doubles exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::conditional::ConditionalBinning;
use crate::error::{Error, Result};
use crate::gis_flow::model::{FlowModel, GisLayer, Standardization};
use crate::gis_flow::Marginal1DTransform;

pub const MODEL_HEADER: &str = "GISFLOW v1";

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_floats(out: &mut String, key: &str, values: impl IntoIterator<Item = f64>) {
    out.push_str(key);
    for v in values {
        out.push(' ');
        out.push_str(&fmt_float(v));
    }
    out.push('\n');
}

pub fn model_to_string(model: &FlowModel) -> String {
    let mut out = String::new();
    out.push_str(MODEL_HEADER);
    out.push('\n');
    out.push_str(&format!("dim {}\n", model.dim()));
    let st = model.standardization();
    push_floats(&mut out, "shift", st.shift().iter().copied());
    push_floats(&mut out, "scale", st.scale().iter().copied());
    push_floats(&mut out, "edges", model.binning().edges().iter().copied());
    push_floats(&mut out, "centers", model.binning().centers().iter().copied());
    out.push_str(&format!("layers {}\n", model.layers().len()));
    for (i, layer) in model.layers().iter().enumerate() {
        out.push_str(&format!("layer {i} slices {}\n", layer.n_slices()));
        push_floats(&mut out, "w", layer.frame().iter().copied());
        for b in 0..layer.n_bins() {
            for c in 0..layer.n_slices() {
                let t = layer.transform(b, c);
                let (lo, hi) = t.tail_slopes();
                out.push_str(&format!(
                    "transform {b} {c} knots {} floor {} tails {} {}\n",
                    t.knots_in().len(),
                    fmt_float(t.derivative_floor()),
                    fmt_float(lo),
                    fmt_float(hi)
                ));
                push_floats(&mut out, "in", t.knots_in().iter().copied());
                push_floats(&mut out, "out", t.knots_out().iter().copied());
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &FlowModel, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    file.write_all(model_to_string(model).as_bytes())?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FlowModel> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self, key: &str) -> Result<Vec<&'a str>> {
        for (i, raw) in self.iter.by_ref() {
            self.line = i + 1;
            let raw = raw.trim();
            if raw.is_empty() {
                continue;
            }
            let mut tokens = raw.split_ascii_whitespace();
            let head = tokens.next().unwrap_or_default();
            if head != key {
                return Err(Error::parse(self.line, format!("expected `{key}`, found `{head}`")));
            }
            return Ok(tokens.collect());
        }
        Err(Error::parse(self.line + 1, format!("unexpected end of file, expected `{key}`")))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn floats(&mut self, key: &str, expected: Option<usize>) -> Result<Vec<f64>> {
        let tokens = self.next_tokens(key)?;
        let values = tokens
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("bad number `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(n) = expected {
            if values.len() != n {
                return Err(self.err(format!("`{key}` needs {n} values, found {}", values.len())));
            }
        }
        Ok(values)
    }

    fn usize_at(&self, tokens: &[&str], idx: usize) -> Result<usize> {
        tokens
            .get(idx)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected a non-negative integer"))
    }

    fn f64_at(&self, tokens: &[&str], idx: usize) -> Result<f64> {
        tokens
            .get(idx)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected a number"))
    }
}

pub fn parse_model(text: &str) -> Result<FlowModel> {
    let mut lines = Lines {
        iter: text.lines().enumerate(),
        line: 0,
    };
    match lines.iter.next() {
        Some((_, first)) if first.trim() == MODEL_HEADER => lines.line = 1,
        _ => return Err(Error::parse(1, format!("missing `{MODEL_HEADER}` header"))),
    }

    let dim_tokens = lines.next_tokens("dim")?;
    let dim = lines.usize_at(&dim_tokens, 0)?;
    let shift = lines.floats("shift", Some(dim))?;
    let scale = lines.floats("scale", Some(dim))?;
    let standardization = Standardization::new(shift, scale).map_err(|e| lines.err(e.to_string()))?;
    let edges = lines.floats("edges", None)?;
    let binning = ConditionalBinning::from_edges(edges).map_err(|e| lines.err(e.to_string()))?;
    let centers = lines.floats("centers", Some(binning.n_bins()))?;
    if centers != binning.centers() {
        return Err(lines.err("bin centers are not the midpoints of the edges"));
    }

    let layer_tokens = lines.next_tokens("layers")?;
    let n_layers = lines.usize_at(&layer_tokens, 0)?;
    let mut layers = Vec::with_capacity(n_layers);
    for i in 0..n_layers {
        let tokens = lines.next_tokens("layer")?;
        if lines.usize_at(&tokens, 0)? != i || tokens.get(1) != Some(&"slices") {
            return Err(lines.err(format!("expected `layer {i} slices <K>`")));
        }
        let k = lines.usize_at(&tokens, 2)?;
        let w = lines.floats("w", Some(dim * k))?;
        let frame = Array2::from_shape_vec((dim, k), w).expect("checked length");
        let mut per_bin = Vec::with_capacity(binning.n_bins());
        for b in 0..binning.n_bins() {
            let mut row = Vec::with_capacity(k);
            for c in 0..k {
                let t = lines.next_tokens("transform")?;
                let ok_shape = lines.usize_at(&t, 0)? == b
                    && lines.usize_at(&t, 1)? == c
                    && t.get(2) == Some(&"knots")
                    && t.get(4) == Some(&"floor")
                    && t.get(6) == Some(&"tails");
                if !ok_shape {
                    return Err(lines.err(format!(
                        "expected `transform {b} {c} knots <n> floor <f> tails <lo> <hi>`"
                    )));
                }
                let n_knots = lines.usize_at(&t, 3)?;
                let floor = lines.f64_at(&t, 5)?;
                let tails = (lines.f64_at(&t, 7)?, lines.f64_at(&t, 8)?);
                let knots_in = lines.floats("in", Some(n_knots))?;
                let knots_out = lines.floats("out", Some(n_knots))?;
                let transform = Marginal1DTransform::new(knots_in, knots_out, tails, floor)
                    .map_err(|e| lines.err(e.to_string()))?;
                row.push(transform);
            }
            per_bin.push(row);
        }
        layers.push(GisLayer::new(frame, per_bin).map_err(|e| lines.err(e.to_string()))?);
    }
    lines.next_tokens("end")?;
    FlowModel::new(standardization, binning, layers)
}
