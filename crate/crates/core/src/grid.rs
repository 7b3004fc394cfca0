//! Uniform periodic grids standing in for R^n.
//!
//! A field lives on the box [-L_k/2, L_k/2) per axis with N_k samples; the
//! discrete frequencies are ξ_j = j / L_k for j in [-N_k/2, N_k/2). Fields
//! that decay below ~1e-10 at the box edge make every Fourier-multiplier
//! operator exact on this grid.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Box extent per axis (length units).
    extents: Vec<f64>,
    /// Sample count per axis; power of two, at least 4.
    points: Vec<usize>,
    /// Number of field components m >= 1.
    components: usize,
}

impl GridSpec {
    pub fn new(extents: &[f64], points: &[usize], components: usize) -> Result<Self> {
        if extents.len() != points.len() {
            return Err(Error::InvalidGrid(format!(
                "{} extents vs {} point counts",
                extents.len(),
                points.len()
            )));
        }
        if extents.len() > 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension {} > 3",
                extents.len()
            )));
        }
        if components == 0 {
            return Err(Error::InvalidGrid("component count must be >= 1".into()));
        }
        for (&l, &n) in extents.iter().zip(points) {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!("extent {l} not positive")));
            }
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "point count {n} must be a power of two >= 4"
                )));
            }
        }
        Ok(Self {
            extents: extents.to_vec(),
            points: points.to_vec(),
            components,
        })
    }

    /// Cubic grid: n axes of identical extent and sample count.
    pub fn cubic(dimension: usize, extent: f64, points: usize, components: usize) -> Result<Self> {
        Self::new(&vec![extent; dimension], &vec![points; dimension], components)
    }

    /// Zero-dimensional grid: a single m-component value. Used as the
    /// boundary grid of a one-dimensional bulk field.
    pub fn point(components: usize) -> Self {
        Self {
            extents: vec![],
            points: vec![],
            components,
        }
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    /// Samples per component.
    pub fn samples_per_component(&self) -> usize {
        self.points.iter().product()
    }

    /// Total stored complex numbers (components x samples).
    pub fn total_len(&self) -> usize {
        self.components * self.samples_per_component()
    }

    /// Grid spacing along an axis.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.points[axis] as f64
    }

    /// Volume of one sample cell, ∏ h_k (1.0 for the point grid).
    pub fn cell_volume(&self) -> f64 {
        (0..self.dimension()).map(|a| self.spacing(a)).product()
    }

    /// Volume of one frequency cell, ∏ 1/L_k (1.0 for the point grid).
    pub fn freq_cell_volume(&self) -> f64 {
        self.extents.iter().map(|l| 1.0 / l).product()
    }

    /// Sample coordinate along an axis: x_j = -L/2 + j h.
    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        -0.5 * self.extents[axis] + index as f64 * self.spacing(axis)
    }

    /// Frequency along an axis for storage index k (FFT layout):
    /// ξ = k/L for k < N/2 and (k-N)/L otherwise.
    pub fn freq(&self, axis: usize, index: usize) -> f64 {
        let n = self.points[axis];
        let j = if index < n / 2 {
            index as isize
        } else {
            index as isize - n as isize
        };
        j as f64 / self.extents[axis]
    }

    /// Storage index of the reflected frequency -ξ (Nyquist maps to itself).
    pub fn reflect(&self, axis: usize, index: usize) -> usize {
        let n = self.points[axis];
        (n - index) % n
    }

    /// Decompose a flat sample index into per-axis indices (row-major,
    /// last axis fastest).
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for axis in (0..self.dimension()).rev() {
            out[axis] = flat % self.points[axis];
            flat /= self.points[axis];
        }
    }

    /// Flat index of per-axis indices.
    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for axis in 0..self.dimension() {
            flat = flat * self.points[axis] + idx[axis];
        }
        flat
    }

    /// |ξ|² at a flat frequency index.
    pub fn freq_norm_sq(&self, flat: usize) -> f64 {
        let mut idx = [0usize; 3];
        self.unravel(flat, &mut idx[..self.dimension()]);
        (0..self.dimension())
            .map(|a| {
                let f = self.freq(a, idx[a]);
                f * f
            })
            .sum()
    }

    /// Grid for the hyperplane x_n = 0: drops the last axis, keeps m.
    pub fn boundary_grid(&self) -> Result<GridSpec> {
        match self.dimension() {
            0 => Err(Error::InvalidGrid("point grid has no boundary grid".into())),
            1 => Ok(GridSpec::point(self.components)),
            _ => GridSpec::new(
                &self.extents[..self.dimension() - 1],
                &self.points[..self.dimension() - 1],
                self.components,
            ),
        }
    }

    pub fn same_layout(&self, other: &GridSpec) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_point_counts() {
        assert!(GridSpec::new(&[1.0], &[3], 1).is_err());
        assert!(GridSpec::new(&[1.0], &[6], 1).is_err());
        assert!(GridSpec::new(&[1.0], &[2], 1).is_err());
        assert!(GridSpec::new(&[1.0], &[8], 1).is_ok());
    }

    #[test]
    fn frequency_layout_is_signed() {
        let g = GridSpec::new(&[2.0], &[8], 1).unwrap();
        assert_eq!(g.freq(0, 0), 0.0);
        assert_eq!(g.freq(0, 1), 0.5);
        assert_eq!(g.freq(0, 3), 1.5);
        assert_eq!(g.freq(0, 4), -2.0); // Nyquist
        assert_eq!(g.freq(0, 7), -0.5);
    }

    #[test]
    fn reflection_pairs_frequencies() {
        let g = GridSpec::new(&[2.0], &[8], 1).unwrap();
        for k in 0..8 {
            let r = g.reflect(0, k);
            if k != 4 {
                assert_eq!(g.freq(0, r), -g.freq(0, k));
            } else {
                assert_eq!(r, 4);
            }
        }
    }

    #[test]
    fn coords_are_centered() {
        let g = GridSpec::new(&[16.0], &[256], 1).unwrap();
        assert_eq!(g.coord(0, 128), 0.0);
        assert_eq!(g.coord(0, 0), -8.0);
    }
}
