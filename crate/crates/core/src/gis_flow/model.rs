use ndarray::{Array2, ArrayView2};

use crate::conditional::{apply_bracketed, invert_bracketed, Bracket, ConditionalBinning};
use crate::error::{Error, Result};
use crate::gis_flow::Marginal1DTransform;
use crate::normal;

/// Per-feature affine map applied before the first layer: `(x - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    shift: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardization {
    pub fn new(shift: Vec<f64>, scale: Vec<f64>) -> Result<Self> {
        if shift.len() != scale.len() || shift.is_empty() {
            return Err(Error::config("standardization shift and scale must have the same positive length"));
        }
        if shift.iter().any(|v| !v.is_finite()) || scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::config("standardization needs finite shifts and positive scales"));
        }
        Ok(Self { shift, scale })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// `ln |det|` of the standardizing map.
    pub fn log_det(&self) -> f64 {
        -self.scale.iter().map(|s| s.ln()).sum::<f64>()
    }
}

/// One flow iteration: `x ← x − W Wᵀ x + W Ψ(Wᵀ x)`.
///
/// `W` is `d × K` with orthonormal columns and is shared by every
/// conditional bin; `Ψ` is one transform per (bin, slice).
#[derive(Debug, Clone, PartialEq)]
pub struct GisLayer {
    frame: Array2<f64>,
    // indexed [slice][bin]
    transforms: Vec<Vec<Marginal1DTransform>>,
}

impl GisLayer {
    /// `transforms[b][k]` is the map for bin `b`, slice `k`.
    pub fn new(frame: Array2<f64>, transforms: Vec<Vec<Marginal1DTransform>>) -> Result<Self> {
        let (_, k) = frame.dim();
        if k == 0 || transforms.is_empty() {
            return Err(Error::config("a layer needs at least one slice and one bin"));
        }
        if transforms.iter().any(|row| row.len() != k) {
            return Err(Error::config(format!("every bin needs exactly {k} slice transforms")));
        }
        let n_bins = transforms.len();
        let by_slice = (0..k)
            .map(|c| (0..n_bins).map(|b| transforms[b][c].clone()).collect())
            .collect();
        Ok(Self {
            frame: frame.as_standard_layout().into_owned(),
            transforms: by_slice,
        })
    }

    pub fn frame(&self) -> ArrayView2<'_, f64> {
        self.frame.view()
    }

    pub fn n_slices(&self) -> usize {
        self.frame.ncols()
    }

    pub fn n_bins(&self) -> usize {
        self.transforms[0].len()
    }

    pub fn transform(&self, bin: usize, slice: usize) -> &Marginal1DTransform {
        &self.transforms[slice][bin]
    }

    fn w(&self) -> &[f64] {
        self.frame.as_slice().expect("frame is stored in standard layout")
    }

    fn project(&self, x: &[f64], c: usize) -> f64 {
        let k = self.n_slices();
        let w = self.w();
        x.iter().enumerate().map(|(j, v)| v * w[j * k + c]).sum()
    }

    /// Updates `x` in place; returns the layer's `ln |det J|`. `scratch` is
    /// resized to the slice count.
    pub(crate) fn forward_in_place(&self, x: &mut [f64], br: Bracket, scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        let mut log_det = 0.0;
        for c in 0..self.n_slices() {
            let y = self.project(x, c);
            let (psi, ld) = apply_bracketed(&self.transforms[c], br, y);
            scratch.push(psi - y);
            log_det += ld;
        }
        self.add_frame_combination(x, scratch);
        log_det
    }

    pub(crate) fn inverse_in_place(&self, z: &mut [f64], br: Bracket) {
        let k = self.n_slices();
        let mut delta = vec![0.0; k];
        for (c, dc) in delta.iter_mut().enumerate() {
            let y = self.project(z, c);
            *dc = invert_bracketed(&self.transforms[c], br, y) - y;
        }
        self.add_frame_combination(z, &delta);
    }

    fn add_frame_combination(&self, x: &mut [f64], coeffs: &[f64]) {
        let k = self.n_slices();
        let w = self.w();
        for (j, xj) in x.iter_mut().enumerate() {
            let row = &w[j * k..(j + 1) * k];
            *xj += row.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>();
        }
    }
}

/// Result of pushing one point through the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOutput {
    pub z: Vec<f64>,
    /// `ln |det ∂z/∂x|`, standardization included.
    pub log_det: f64,
    /// The conditional value lay outside the trained range and was clamped.
    pub clamped: bool,
}

/// A fitted conditional flow `z = f_m(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    dim: usize,
    standardization: Standardization,
    binning: ConditionalBinning,
    layers: Vec<GisLayer>,
}

impl FlowModel {
    pub fn new(standardization: Standardization, binning: ConditionalBinning, layers: Vec<GisLayer>) -> Result<Self> {
        let dim = standardization.shift.len();
        for (i, layer) in layers.iter().enumerate() {
            if layer.frame.nrows() != dim {
                return Err(Error::config(format!(
                    "layer {i} acts on {} dimensions, model has {dim}",
                    layer.frame.nrows()
                )));
            }
            if layer.n_bins() != binning.n_bins() {
                return Err(Error::config(format!(
                    "layer {i} has {} bins, binning has {}",
                    layer.n_bins(),
                    binning.n_bins()
                )));
            }
        }
        Ok(Self {
            dim,
            standardization,
            binning,
            layers,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn binning(&self) -> &ConditionalBinning {
        &self.binning
    }

    pub fn layers(&self) -> &[GisLayer] {
        &self.layers
    }

    fn check_point(&self, x: &[f64], m: f64) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::input(format!("expected {} features, got {}", self.dim, x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) || !m.is_finite() {
            return Err(Error::input("non-finite feature or conditional value"));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64], m: f64) -> Result<FlowOutput> {
        self.check_point(x, m)?;
        let (m, clamped) = self.binning.clamp(m);
        let br = self.binning.bracket(m);
        let st = &self.standardization;
        let mut z: Vec<f64> = x
            .iter()
            .zip(st.shift.iter().zip(&st.scale))
            .map(|(v, (mu, s))| (v - mu) / s)
            .collect();
        let mut log_det = st.log_det();
        let mut scratch = Vec::new();
        for layer in &self.layers {
            log_det += layer.forward_in_place(&mut z, br, &mut scratch);
        }
        Ok(FlowOutput { z, log_det, clamped })
    }

    pub fn inverse(&self, z: &[f64], m: f64) -> Result<Vec<f64>> {
        self.check_point(z, m)?;
        let (m, _) = self.binning.clamp(m);
        let br = self.binning.bracket(m);
        let mut x = z.to_vec();
        for layer in self.layers.iter().rev() {
            layer.inverse_in_place(&mut x, br);
        }
        let st = &self.standardization;
        for (v, (mu, s)) in x.iter_mut().zip(st.shift.iter().zip(&st.scale)) {
            *v = *v * s + mu;
        }
        Ok(x)
    }

    /// `ln p(x | m)` and whether `m` was clamped.
    pub fn log_density_flagged(&self, x: &[f64], m: f64) -> Result<(f64, bool)> {
        let out = self.forward(x, m)?;
        let base: f64 = out.z.iter().map(|&v| normal::log_pdf(v)).sum();
        Ok((base + out.log_det, out.clamped))
    }

    /// `ln p(x | m) = ln π(f_m(x)) + ln |det ∂f_m/∂x|`.
    pub fn log_density(&self, x: &[f64], m: f64) -> Result<f64> {
        self.log_density_flagged(x, m).map(|(v, _)| v)
    }
}
