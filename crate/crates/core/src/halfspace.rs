//! Trace operator, its adjoint, extensions and boundary-density recovery on
//! the half-space {x_n > 0}, with the boundary hyperplane x_n = 0.
//!
//! Bulk fields live on a centered periodic box, so the hyperplane passes
//! through the sample at index N_n/2. A hyperplane layer γ*v has Fourier
//! data constant in ξ_n; its Sobolev norms are evaluated with the tangential
//! lattice and the exact line integral over the continuous ξ_n axis
//! (`quad::bessel_line_integral`), because a truncated ξ_n lattice sum
//! converges like T^{1-2s} and is hopeless near s = 1/2.

use num_complex::Complex64;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::GridSpec;
use crate::quad;
use crate::rng::random_band_limited;
use crate::spectral::Kahan;

/// Boundary data is an (n-1)-dimensional field; a single complex value (point
/// grid) when the bulk is one-dimensional.
pub type BoundaryField = SpectralField;

/// C_s = ∫ (1+η²)^{-s} dη together with the index it belongs to.
#[derive(Debug, Clone, Copy)]
pub struct TraceConstant {
    pub s: f64,
    pub value: f64,
}

/// Closed form C_s = √π Γ(s-1/2)/Γ(s), s > 1/2.
pub fn trace_constant(s: f64) -> Result<TraceConstant> {
    if !(s > 0.5) {
        return Err(Error::Domain(format!(
            "C_s diverges as s -> 1/2+; got s = {s}"
        )));
    }
    let value = std::f64::consts::PI.sqrt() * gamma(s - 0.5) / gamma(s);
    Ok(TraceConstant { s, value })
}

/// Quadrature route for C_s; the independent cross-check of the closed form.
pub fn trace_constant_quadrature(s: f64) -> Result<f64> {
    quad::trace_constant_quadrature(s)
}

/// γu: restriction of samples to the hyperplane x_n = 0.
pub fn trace(u: &SpectralField) -> Result<BoundaryField> {
    let grid = u.grid();
    let dim = grid.dimension();
    if dim == 0 {
        return Err(Error::Domain("cannot trace a point field".into()));
    }
    let bgrid = grid.boundary_grid()?;
    let n_last = grid.points()[dim - 1];
    let mid = n_last / 2; // x_n = 0 on the centered box
    let spc = grid.samples_per_component();
    let bspc = bgrid.samples_per_component();
    let vals = u.values();
    let mut out = vec![Complex64::default(); bgrid.total_len()];
    for c in 0..grid.components() {
        for i in 0..bspc {
            out[c * bspc + i] = vals[c * spc + i * n_last + mid];
        }
    }
    BoundaryField::from_values(bgrid, out)
}

/// γ*v: the bulk distribution with Fourier data v̂(ξ') for every ξ_n,
/// i.e. the single layer v ⊗ δ(x_n) stored spectrally.
pub fn trace_adjoint(v: &BoundaryField, bulk: &GridSpec) -> Result<SpectralField> {
    check_tangential(v.grid(), bulk)?;
    let dim = bulk.dimension();
    let n_last = bulk.points()[dim - 1];
    let spc = bulk.samples_per_component();
    let bspc = v.grid().samples_per_component();
    let vc = v.fourier();
    let mut out = vec![Complex64::default(); bulk.total_len()];
    for c in 0..bulk.components() {
        for i in 0..bspc {
            for k in 0..n_last {
                out[c * spc + i * n_last + k] = vc[c * bspc + i];
            }
        }
    }
    SpectralField::from_fourier(bulk.clone(), out)
}

/// Precomputed per-bin line integrals for layer norms at one index s.
pub struct LayerNorm {
    s: f64,
    weights: Vec<f64>, // I_s(|ξ'|) per tangential bin
    dxi: f64,
}

impl LayerNorm {
    pub fn new(boundary: &GridSpec, s: f64) -> Result<Self> {
        if !(s > 0.5) {
            return Err(Error::Domain(format!(
                "H^{{-s}} layer norm needs s > 1/2, got {s}"
            )));
        }
        let bspc = boundary.samples_per_component();
        let mut cache: std::collections::BTreeMap<u64, f64> = Default::default();
        let mut weights = vec![0.0; bspc];
        for (i, w) in weights.iter_mut().enumerate() {
            let r2 = boundary.freq_norm_sq(i);
            let key = r2.to_bits();
            let val = match cache.get(&key) {
                Some(v) => *v,
                None => {
                    let v = quad::bessel_line_integral(s, r2.sqrt())?;
                    cache.insert(key, v);
                    v
                }
            };
            *w = val;
        }
        Ok(Self {
            s,
            weights,
            dxi: boundary.freq_cell_volume(),
        })
    }

    /// ||γ*v||_{H^{-s}(R^n)} = ( Σ_{ξ'} |v̂(ξ')|² I_s(|ξ'|) Δξ' )^{1/2}.
    pub fn adjoint_norm(&self, v: &BoundaryField) -> f64 {
        let bspc = v.grid().samples_per_component();
        debug_assert_eq!(bspc, self.weights.len());
        let vc = v.fourier();
        let mut acc = Kahan::default();
        for i in 0..bspc {
            for c in 0..v.grid().components() {
                acc.add(self.weights[i] * vc[c * bspc + i].norm_sqr());
            }
        }
        (acc.value() * self.dxi).max(0.0).sqrt()
    }

    pub fn index(&self) -> f64 {
        self.s
    }
}

/// One-off convenience wrapper around [`LayerNorm`].
pub fn adjoint_norm(v: &BoundaryField, s: f64) -> Result<f64> {
    Ok(LayerNorm::new(v.grid(), s)?.adjoint_norm(v))
}

/// Decay profile of the extension in the normal direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionKernel {
    /// e^{-(1+|ξ'|²)^{1/2} |x_n|}: the Poisson-type multiplier extension.
    Exponential,
    /// e^{-(1+|ξ'|²) x_n²/2}: same trace, different decay; used to probe
    /// that density recovery does not depend on the lifting.
    Gaussian,
}

impl ExtensionKernel {
    fn profile(self, beta_sq: f64, xn: f64) -> f64 {
        match self {
            ExtensionKernel::Exponential => (-beta_sq.sqrt() * xn.abs()).exp(),
            ExtensionKernel::Gaussian => (-0.5 * beta_sq * xn * xn).exp(),
        }
    }
}

/// γ_{-1} v: bulk field Σ_{ξ'} v̂(ξ') e^{2πi x'·ξ'} K(ξ', x_n) with K(ξ', 0) = 1,
/// so γ γ_{-1} = id holds exactly on the grid.
pub fn extension(v: &BoundaryField, s: f64, bulk: &GridSpec) -> Result<SpectralField> {
    if !(0.5..=1.5).contains(&s) {
        return Err(Error::Domain(format!(
            "extension is controlled for 1/2 <= s <= 3/2, got {s}"
        )));
    }
    extension_with_kernel(v, bulk, ExtensionKernel::Exponential)
}

pub fn extension_with_kernel(
    v: &BoundaryField,
    bulk: &GridSpec,
    kernel: ExtensionKernel,
) -> Result<SpectralField> {
    check_tangential(v.grid(), bulk)?;
    let dim = bulk.dimension();
    let n_last = bulk.points()[dim - 1];
    let bgrid = v.grid();
    let bspc = bgrid.samples_per_component();
    let spc = bulk.samples_per_component();
    let m = bulk.components();
    let vc = v.fourier();
    let mut out = vec![Complex64::default(); bulk.total_len()];
    // One damped copy of the boundary spectrum per x_n slice, transformed back
    // to samples tangentially.
    for k in 0..n_last {
        let xn = bulk.coord(dim - 1, k);
        let mut slice = vec![Complex64::default(); bgrid.total_len()];
        for i in 0..bspc {
            let beta_sq = 1.0 + bgrid.freq_norm_sq(i);
            let damp = kernel.profile(beta_sq, xn);
            for c in 0..m {
                slice[c * bspc + i] = vc[c * bspc + i] * damp;
            }
        }
        let slice_field = BoundaryField::from_fourier(bgrid.clone(), slice)?;
        let sv = slice_field.values();
        for c in 0..m {
            for i in 0..bspc {
                out[c * spc + i * n_last + k] = sv[c * bspc + i];
            }
        }
    }
    SpectralField::from_values(bulk.clone(), out)
}

/// Recover the boundary density v with γ*v = g from a hyperplane-supported
/// distribution g, by pairing g against lifted boundary modes:
/// ⟨v, w⟩_∂ = ⟨g, γ_{-1} w⟩ per tangential mode w.
pub fn recover_density(
    g: &SpectralField,
    t: f64,
    kernel: ExtensionKernel,
) -> Result<BoundaryField> {
    let grid = g.grid();
    let dim = grid.dimension();
    if dim == 0 {
        return Err(Error::Domain("point fields carry no layer".into()));
    }
    let bgrid = grid.boundary_grid()?;
    let gc = g.fourier();
    let spc = grid.samples_per_component();
    let bspc = bgrid.samples_per_component();
    let n_last = grid.points()[dim - 1];
    let m = grid.components();

    let layer_scale = gc.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if t >= -0.5 && layer_scale > 1e-13 {
        return Err(Error::InconsistentExtension(format!(
            "H^t on the boundary is trivial for t = {t} >= -1/2 but g is nonzero"
        )));
    }
    if t <= -1.5 {
        return Err(Error::Domain(format!(
            "recovery needs -3/2 < t < -1/2, got {t}"
        )));
    }
    // g must really be a layer: Fourier data constant along ξ_n.
    for c in 0..m {
        for i in 0..bspc {
            let base = gc[c * spc + i * n_last];
            for k in 1..n_last {
                if (gc[c * spc + i * n_last + k] - base).norm() > 1e-10 * layer_scale.max(1e-300) {
                    return Err(Error::InconsistentExtension(
                        "Fourier data varies along ξ_n; not a hyperplane layer".into(),
                    ));
                }
            }
        }
    }

    // Fourier transform of the kernel profile along the normal axis, per
    // distinct tangential |ξ'|.
    let axis_grid = GridSpec::new(
        &[grid.extents()[dim - 1]],
        &[grid.points()[dim - 1]],
        1,
    )?;
    let dxi_n = 1.0 / grid.extents()[dim - 1];
    let mut kernel_cache: std::collections::BTreeMap<u64, Vec<Complex64>> = Default::default();

    let mut vc = vec![Complex64::default(); bgrid.total_len()];
    for i in 0..bspc {
        let beta_sq = 1.0 + bgrid.freq_norm_sq(i);
        let khat = kernel_cache.entry(beta_sq.to_bits()).or_insert_with(|| {
            let prof = SpectralField::from_scalar_fn(axis_grid.clone(), |x| {
                Complex64::new(kernel.profile(beta_sq, x[0]), 0.0)
            });
            prof.fourier().to_vec()
        });
        // ⟨g, γ_{-1} e_μ⟩ with μ = -ξ'_i collapses to the ξ_n line at bin i.
        for c in 0..m {
            let mut acc = Complex64::default();
            for k in 0..n_last {
                let kr = grid.reflect(dim - 1, k);
                acc += gc[c * spc + i * n_last + kr] * khat[k];
            }
            vc[c * bspc + i] = acc * dxi_n;
        }
    }
    BoundaryField::from_fourier(bgrid, vc)
}

/// One row of the trace-operator norm table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BlowupRow {
    pub s: f64,
    pub c_s: f64,
    pub empirical_norm: f64,
    pub ratio_to_sqrt_cs: f64,
}

/// Empirical operator norm of γ (equivalently γ*, by the adjoint identity)
/// over seeded random band-limited boundary densities: the max of
/// ||γ*v||_{H^{-s}} / ||v||_{H^{1/2-s}}, tabulated against √C_s.
pub fn blowup_probe(
    boundary: &GridSpec,
    s_list: &[f64],
    probes: usize,
    seed: u64,
) -> Result<Vec<BlowupRow>> {
    let band = boundary
        .points()
        .iter()
        .map(|n| n / 3)
        .min()
        .unwrap_or(0)
        .max(1);
    let mut rows = Vec::with_capacity(s_list.len());
    for &s in s_list {
        let layer = LayerNorm::new(boundary, s)?;
        let c_s = trace_constant(s)?.value;
        let mut emp: f64 = 0.0;
        for p in 0..probes {
            let v = if boundary.dimension() == 0 {
                BoundaryField::from_values(
                    boundary.clone(),
                    vec![Complex64::new(1.0, 0.0); boundary.components()],
                )?
            } else {
                random_band_limited(boundary, band, seed.wrapping_add(p as u64))
            };
            let num = layer.adjoint_norm(&v);
            let den = v.sobolev_norm(0.5 - s);
            if den > 0.0 {
                emp = emp.max(num / den);
            }
        }
        rows.push(BlowupRow {
            s,
            c_s,
            empirical_norm: emp,
            ratio_to_sqrt_cs: emp / c_s.sqrt(),
        });
    }
    Ok(rows)
}

fn check_tangential(boundary: &GridSpec, bulk: &GridSpec) -> Result<()> {
    let dim = bulk.dimension();
    if dim == 0 {
        return Err(Error::GridMismatch("bulk grid has dimension 0".into()));
    }
    let expected = bulk.boundary_grid()?;
    if !boundary.same_layout(&expected) {
        return Err(Error::GridMismatch(
            "boundary grid does not match the bulk tangential layout".into(),
        ));
    }
    Ok(())
}
