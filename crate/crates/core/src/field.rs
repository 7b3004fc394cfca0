//! Complex m-component fields on a periodic grid with lazily cached Fourier
//! coefficients.
//!
//! The Fourier convention is ĝ(ξ) = ∫ e^{-2πi x·ξ} g(x) dx, discretised by
//! the trapezoid rule on the centered box: û_j = (∏h_k) (-1)^{Σ j_k} X_j
//! where X is the standard DFT of the samples. Samples and coefficients are
//! stored component-major; either side may be constructed first, the other is
//! filled on demand (idempotent, safe under concurrent reads).

use std::sync::OnceLock;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub struct SpectralField {
    grid: GridSpec,
    values: OnceLock<Vec<Complex64>>,
    fourier: OnceLock<Vec<Complex64>>,
}

impl Clone for SpectralField {
    fn clone(&self) -> Self {
        let f = SpectralField::empty(self.grid.clone());
        if let Some(v) = self.values.get() {
            let _ = f.values.set(v.clone());
        }
        if let Some(c) = self.fourier.get() {
            let _ = f.fourier.set(c.clone());
        }
        f
    }
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("has_values", &self.values.get().is_some())
            .field("has_fourier", &self.fourier.get().is_some())
            .finish()
    }
}

impl SpectralField {
    fn empty(grid: GridSpec) -> Self {
        Self {
            grid,
            values: OnceLock::new(),
            fourier: OnceLock::new(),
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.total_len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid holding {}",
                values.len(),
                grid.total_len()
            )));
        }
        let f = Self::empty(grid);
        let _ = f.values.set(values);
        Ok(f)
    }

    pub fn from_fourier(grid: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.total_len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid holding {}",
                coeffs.len(),
                grid.total_len()
            )));
        }
        let f = Self::empty(grid);
        let _ = f.fourier.set(coeffs);
        Ok(f)
    }

    /// Sample a function of (component, coordinates).
    pub fn from_fn<F: Fn(usize, &[f64]) -> Complex64>(grid: GridSpec, f: F) -> Self {
        let spc = grid.samples_per_component();
        let m = grid.components();
        let dim = grid.dimension();
        let mut vals = vec![Complex64::default(); m * spc];
        let mut idx = [0usize; 3];
        let mut x = [0.0f64; 3];
        for i in 0..spc {
            grid.unravel(i, &mut idx[..dim]);
            for a in 0..dim {
                x[a] = grid.coord(a, idx[a]);
            }
            for c in 0..m {
                vals[c * spc + i] = f(c, &x[..dim]);
            }
        }
        let fld = Self::empty(grid);
        let _ = fld.values.set(vals);
        fld
    }

    /// Scalar convenience for m = 1 grids.
    pub fn from_scalar_fn<F: Fn(&[f64]) -> Complex64>(grid: GridSpec, f: F) -> Self {
        Self::from_fn(grid, |_, x| f(x))
    }

    pub fn zero(grid: GridSpec) -> Self {
        let n = grid.total_len();
        let f = Self::empty(grid);
        let _ = f.values.set(vec![Complex64::default(); n]);
        let _ = f.fourier.set(vec![Complex64::default(); n]);
        f
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Samples, computed from the coefficients if not yet cached.
    pub fn values(&self) -> &[Complex64] {
        self.values.get_or_init(|| {
            let coeffs = self
                .fourier
                .get()
                .expect("field constructed with neither values nor coefficients");
            let mut data = coeffs.clone();
            let scale = 1.0 / self.grid.cell_volume();
            apply_phase_and_scale(&mut data, &self.grid, scale);
            transform(&mut data, &self.grid, false);
            let inv_n = 1.0 / self.grid.samples_per_component() as f64;
            for v in &mut data {
                *v *= inv_n;
            }
            data
        })
    }

    /// Fourier coefficients û(ξ) on the discrete frequency set.
    pub fn fourier(&self) -> &[Complex64] {
        self.fourier.get_or_init(|| {
            let vals = self
                .values
                .get()
                .expect("field constructed with neither values nor coefficients");
            let mut data = vals.clone();
            transform(&mut data, &self.grid, true);
            apply_phase_and_scale(&mut data, &self.grid, self.grid.cell_volume());
            data
        })
    }

    /// Complex conjugate field; uses whichever cache is present.
    pub fn conj(&self) -> SpectralField {
        if let Some(vals) = self.values.get() {
            let out: Vec<Complex64> = vals.iter().map(|v| v.conj()).collect();
            SpectralField::from_values(self.grid.clone(), out).expect("same grid")
        } else {
            // conj(u)^(ξ) = conj(û(-ξ))
            let coeffs = self.fourier();
            let spc = self.grid.samples_per_component();
            let m = self.grid.components();
            let dim = self.grid.dimension();
            let mut out = vec![Complex64::default(); coeffs.len()];
            let mut idx = [0usize; 3];
            let mut ridx = [0usize; 3];
            for i in 0..spc {
                self.grid.unravel(i, &mut idx[..dim]);
                for a in 0..dim {
                    ridx[a] = self.grid.reflect(a, idx[a]);
                }
                let j = self.grid.ravel(&ridx[..dim]);
                for c in 0..m {
                    out[c * spc + i] = coeffs[c * spc + j].conj();
                }
            }
            SpectralField::from_fourier(self.grid.clone(), out).expect("same grid")
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, alpha: Complex64) -> SpectralField {
        if let Some(c) = self.fourier.get() {
            let out = c.iter().map(|v| alpha * v).collect();
            SpectralField::from_fourier(self.grid.clone(), out).expect("same grid")
        } else {
            let out = self.values().iter().map(|v| alpha * v).collect();
            SpectralField::from_values(self.grid.clone(), out).expect("same grid")
        }
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectralField> {
        if !self.grid.same_layout(&other.grid) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        // Combine in frequency space when both sides have it, so that
        // layer-type fields (meaningful only spectrally) stay exact.
        if self.fourier.get().is_some() && other.fourier.get().is_some() {
            let out = self
                .fourier()
                .iter()
                .zip(other.fourier())
                .map(|(a, b)| op(*a, *b))
                .collect();
            SpectralField::from_fourier(self.grid.clone(), out)
        } else {
            let out = self
                .values()
                .iter()
                .zip(other.values())
                .map(|(a, b)| op(*a, *b))
                .collect();
            SpectralField::from_values(self.grid.clone(), out)
        }
    }

    /// Pointwise multiplication of every component by a scalar function.
    pub fn mul_fn<F: Fn(&[f64]) -> Complex64>(&self, g: F) -> SpectralField {
        let spc = self.grid.samples_per_component();
        let m = self.grid.components();
        let dim = self.grid.dimension();
        let vals = self.values();
        let mut out = vec![Complex64::default(); vals.len()];
        let mut idx = [0usize; 3];
        let mut x = [0.0f64; 3];
        for i in 0..spc {
            self.grid.unravel(i, &mut idx[..dim]);
            for a in 0..dim {
                x[a] = self.grid.coord(a, idx[a]);
            }
            let gv = g(&x[..dim]);
            for c in 0..m {
                out[c * spc + i] = gv * vals[c * spc + i];
            }
        }
        SpectralField::from_values(self.grid.clone(), out).expect("same grid")
    }

    /// Zero out samples outside the predicate region. Returns the restricted
    /// field and the number of samples kept (0 flags an empty region).
    pub fn restrict_support<P: Fn(&[f64]) -> bool>(&self, region: P) -> (SpectralField, usize) {
        let spc = self.grid.samples_per_component();
        let m = self.grid.components();
        let dim = self.grid.dimension();
        let vals = self.values();
        let mut out = vec![Complex64::default(); vals.len()];
        let mut idx = [0usize; 3];
        let mut x = [0.0f64; 3];
        let mut kept = 0usize;
        for i in 0..spc {
            self.grid.unravel(i, &mut idx[..dim]);
            for a in 0..dim {
                x[a] = self.grid.coord(a, idx[a]);
            }
            if region(&x[..dim]) {
                kept += 1;
                for c in 0..m {
                    out[c * spc + i] = vals[c * spc + i];
                }
            }
        }
        (
            SpectralField::from_values(self.grid.clone(), out).expect("same grid"),
            kept,
        )
    }

    /// Extract one component as a scalar field on the same grid.
    pub fn component(&self, c: usize) -> SpectralField {
        assert!(c < self.grid.components());
        let spc = self.grid.samples_per_component();
        let grid = GridSpec::new(self.grid.extents(), self.grid.points(), 1)
            .unwrap_or_else(|_| GridSpec::point(1));
        if let Some(cf) = self.fourier.get() {
            SpectralField::from_fourier(grid, cf[c * spc..(c + 1) * spc].to_vec()).expect("len ok")
        } else {
            SpectralField::from_values(grid, self.values()[c * spc..(c + 1) * spc].to_vec())
                .expect("len ok")
        }
    }

    /// Max |u| on the outermost sample shell relative to max |u| overall.
    /// Values above ~1e-10 signal that the periodic box is too small for the
    /// field to stand in for a function on R^n.
    pub fn boundary_tail(&self) -> f64 {
        let dim = self.grid.dimension();
        if dim == 0 {
            return 0.0;
        }
        let spc = self.grid.samples_per_component();
        let m = self.grid.components();
        let vals = self.values();
        let mut idx = [0usize; 3];
        let mut max_all = 0.0f64;
        let mut max_edge = 0.0f64;
        for i in 0..spc {
            self.grid.unravel(i, &mut idx[..dim]);
            let on_edge = (0..dim).any(|a| idx[a] == 0 || idx[a] + 1 == self.grid.points()[a]);
            for c in 0..m {
                let a = vals[c * spc + i].norm();
                max_all = max_all.max(a);
                if on_edge {
                    max_edge = max_edge.max(a);
                }
            }
        }
        if max_all == 0.0 {
            0.0
        } else {
            max_edge / max_all
        }
    }
}

fn apply_phase_and_scale(data: &mut [Complex64], grid: &GridSpec, scale: f64) {
    let dim = grid.dimension();
    let spc = grid.samples_per_component();
    let mut idx = [0usize; 3];
    for i in 0..spc {
        grid.unravel(i, &mut idx[..dim]);
        let parity: usize = idx[..dim].iter().sum();
        let factor = if parity.is_multiple_of(2) { scale } else { -scale };
        for c in 0..grid.components() {
            data[c * spc + i] *= factor;
        }
    }
}

/// In-place n-dimensional DFT per component (no normalisation).
fn transform(data: &mut [Complex64], grid: &GridSpec, forward: bool) {
    let dim = grid.dimension();
    if dim == 0 {
        return;
    }
    let dims = grid.points();
    let spc = grid.samples_per_component();
    let mut planner = FftPlanner::new();
    for comp in data.chunks_exact_mut(spc) {
        for axis in 0..dim {
            let len = dims[axis];
            let stride: usize = dims[axis + 1..].iter().product();
            let outer: usize = dims[..axis].iter().product();
            let plan = if forward {
                planner.plan_fft_forward(len)
            } else {
                planner.plan_fft_inverse(len)
            };
            let mut buf = vec![Complex64::default(); len];
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * len * stride + s;
                    for k in 0..len {
                        buf[k] = comp[base + k * stride];
                    }
                    plan.process(&mut buf);
                    for k in 0..len {
                        comp[base + k * stride] = buf[k];
                    }
                }
            }
        }
    }
}
