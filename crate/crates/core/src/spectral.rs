//! Bessel potential multipliers, fractional Sobolev norms and dual products.
//!
//! Everything here is a diagonal operation on the discrete frequency set, so
//! the operator identities (isometry, group law, Parseval) hold to rounding.
//! Frequency sums are accumulated with Neumaier compensation since the
//! identities are asserted at the 1e-12 level.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Compensated (Neumaier) accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// A frequency-diagonal operator with an m x m matrix symbol; Bessel
/// potentials use the scalar special case.
pub struct FourierMultiplier {
    symbol: Box<dyn Fn(&[f64]) -> Complex64 + Sync>,
}

impl FourierMultiplier {
    pub fn new<F: Fn(&[f64]) -> Complex64 + Sync + 'static>(symbol: F) -> Self {
        Self {
            symbol: Box::new(symbol),
        }
    }

    /// The Bessel symbol (1 + |ξ|²)^{t/2}.
    pub fn bessel(t: f64) -> Self {
        Self::new(move |xi: &[f64]| {
            let r2: f64 = xi.iter().map(|x| x * x).sum();
            Complex64::new((1.0 + r2).powf(0.5 * t), 0.0)
        })
    }

    pub fn apply(&self, u: &SpectralField) -> SpectralField {
        let grid = u.grid().clone();
        let dim = grid.dimension();
        let spc = grid.samples_per_component();
        let m = grid.components();
        let coeffs = u.fourier();
        let mut out = vec![Complex64::default(); coeffs.len()];
        let mut idx = [0usize; 3];
        let mut xi = [0.0f64; 3];
        for i in 0..spc {
            grid.unravel(i, &mut idx[..dim]);
            for a in 0..dim {
                xi[a] = grid.freq(a, idx[a]);
            }
            let s = (self.symbol)(&xi[..dim]);
            for c in 0..m {
                out[c * spc + i] = s * coeffs[c * spc + i];
            }
        }
        SpectralField::from_fourier(grid, out).expect("same grid")
    }
}

impl SpectralField {
    /// J^t u: Fourier coefficients scaled by (1 + |ξ|²)^{t/2}.
    pub fn bessel_potential(&self, t: f64) -> Result<SpectralField> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("Bessel order {t} not finite")));
        }
        Ok(FourierMultiplier::bessel(t).apply(self))
    }

    /// (u, v)_{H^s} = Σ_ξ (1+|ξ|²)^s conj(û)·v̂ Δξ  (sesquilinear).
    pub fn sobolev_inner(&self, other: &SpectralField, s: f64) -> Result<Complex64> {
        if !self.grid().same_layout(other.grid()) {
            return Err(Error::GridMismatch(
                "inner product requires a shared grid".into(),
            ));
        }
        let grid = self.grid();
        let spc = grid.samples_per_component();
        let m = grid.components();
        let a = self.fourier();
        let b = other.fourier();
        let dxi = grid.freq_cell_volume();
        let mut re = Kahan::default();
        let mut im = Kahan::default();
        for i in 0..spc {
            let w = (1.0 + grid.freq_norm_sq(i)).powf(s);
            for c in 0..m {
                let term = a[c * spc + i].conj() * b[c * spc + i];
                re.add(w * term.re);
                im.add(w * term.im);
            }
        }
        Ok(Complex64::new(re.value(), im.value()) * dxi)
    }

    /// ||u||_{H^s}; the s = 0 case is the L2 norm by Parseval.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let ip = self
            .sobolev_inner(self, s)
            .expect("same grid by construction");
        ip.re.max(0.0).sqrt()
    }

    /// ⟨u, v⟩ = Σ_ξ û(-ξ)·v̂(ξ) Δξ  (bilinear, no conjugation).
    pub fn dual_product(&self, other: &SpectralField) -> Result<Complex64> {
        if !self.grid().same_layout(other.grid()) {
            return Err(Error::GridMismatch(
                "dual product requires a shared grid".into(),
            ));
        }
        let grid = self.grid();
        let dim = grid.dimension();
        let spc = grid.samples_per_component();
        let m = grid.components();
        let a = self.fourier();
        let b = other.fourier();
        let dxi = grid.freq_cell_volume();
        let mut re = Kahan::default();
        let mut im = Kahan::default();
        let mut idx = [0usize; 3];
        let mut ridx = [0usize; 3];
        for i in 0..spc {
            grid.unravel(i, &mut idx[..dim]);
            for ax in 0..dim {
                ridx[ax] = grid.reflect(ax, idx[ax]);
            }
            let j = grid.ravel(&ridx[..dim]);
            for c in 0..m {
                let term = a[c * spc + j] * b[c * spc + i];
                re.add(term.re);
                im.add(term.im);
            }
        }
        Ok(Complex64::new(re.value(), im.value()) * dxi)
    }

    /// Quadrature L2 norm of the samples (no Fourier side); used to check
    /// Parseval rather than assume it.
    pub fn sample_l2_norm(&self) -> f64 {
        let mut acc = Kahan::default();
        for v in self.values() {
            acc.add(v.norm_sqr());
        }
        (acc.value() * self.grid().cell_volume()).max(0.0).sqrt()
    }
}

pub fn bessel_potential(u: &SpectralField, t: f64) -> Result<SpectralField> {
    u.bessel_potential(t)
}

pub fn sobolev_norm(u: &SpectralField, s: f64) -> f64 {
    u.sobolev_norm(s)
}

pub fn sobolev_inner(u: &SpectralField, v: &SpectralField, s: f64) -> Result<Complex64> {
    u.sobolev_inner(v, s)
}

pub fn dual_product(u: &SpectralField, v: &SpectralField) -> Result<Complex64> {
    u.dual_product(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::rng::{random_band_limited, seeded_rng};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn gaussian_1d() -> SpectralField {
        let grid = GridSpec::new(&[16.0], &[256], 1).unwrap();
        SpectralField::from_scalar_fn(grid, |x| {
            Complex64::new((-PI * x[0] * x[0]).exp(), 0.0)
        })
    }

    #[test]
    fn bessel_zero_is_identity() {
        let u = gaussian_1d();
        let v = u.bessel_potential(0.0).unwrap();
        for (a, b) in u.fourier().iter().zip(v.fourier()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn bessel_inverse_roundtrip() {
        let u = random_band_limited(
            &GridSpec::new(&[8.0, 8.0], &[32, 32], 2).unwrap(),
            10,
            7,
        );
        let w = u
            .bessel_potential(1.3)
            .unwrap()
            .bessel_potential(-1.3)
            .unwrap();
        let err = w.sub(&u).unwrap().sobolev_norm(0.0) / u.sobolev_norm(0.0);
        assert!(err <= 1e-12, "relative error {err}");
    }

    #[test]
    fn bessel_group_law() {
        let u = random_band_limited(&GridSpec::new(&[4.0], &[64], 1).unwrap(), 20, 3);
        let a = u
            .bessel_potential(0.7)
            .unwrap()
            .bessel_potential(-1.9)
            .unwrap();
        let b = u.bessel_potential(-1.2).unwrap();
        let err = a.sub(&b).unwrap().sobolev_norm(0.0) / b.sobolev_norm(0.0);
        assert!(err <= 1e-12);
    }

    #[test]
    fn bessel_isometry_between_sobolev_levels() {
        let u = random_band_limited(&GridSpec::new(&[8.0], &[128], 1).unwrap(), 30, 11);
        for s in [-2.0, -0.5, 0.7, 1.5] {
            let shifted = u.bessel_potential(s).unwrap().sobolev_norm(0.0);
            let direct = u.sobolev_norm(s);
            assert!(
                (shifted - direct).abs() <= 1e-12 * direct.max(1.0),
                "s={s}: {shifted} vs {direct}"
            );
        }
    }

    #[test]
    fn parseval_over_random_fields() {
        let grid = GridSpec::new(&[4.0, 4.0], &[16, 16], 1).unwrap();
        for seed in 0..100 {
            let u = random_band_limited(&grid, 6, seed);
            let a = u.sobolev_norm(0.0);
            let b = u.sample_l2_norm();
            assert!((a - b).abs() <= 1e-12 * b.max(1.0), "seed {seed}: {a} vs {b}");
        }
    }

    #[test]
    fn gaussian_h1_norm_matches_moment_identities() {
        // ∫ e^{-2πξ²} dξ = 2^{-1/2}, ∫ ξ² e^{-2πξ²} dξ = 2^{-1/2}/(4π)
        let u = gaussian_1d();
        let expect = (2f64.powf(-0.5) * (1.0 + 1.0 / (4.0 * PI))).sqrt();
        let got = u.sobolev_norm(1.0);
        assert!((got - expect).abs() <= 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn norm_homogeneity() {
        let u = gaussian_1d();
        let alpha = Complex64::new(-2.5, 1.2);
        let scaled = u.scale(alpha);
        let a = scaled.sobolev_norm(0.7);
        let b = alpha.norm() * u.sobolev_norm(0.7);
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn monotone_embedding_in_s() {
        let u = random_band_limited(&GridSpec::new(&[8.0], &[64], 2).unwrap(), 20, 5);
        let mut last = u.sobolev_norm(-2.0);
        for s in [-1.0, -0.3, 0.0, 0.4, 1.1, 2.0] {
            let n = u.sobolev_norm(s);
            assert!(n >= last - 1e-13 * n.max(1.0));
            last = n;
        }
    }

    #[test]
    fn inner_product_definiteness_and_l2_case() {
        let grid = GridSpec::new(&[4.0], &[64], 1).unwrap();
        let u = random_band_limited(&grid, 12, 1);
        let v = random_band_limited(&grid, 12, 2);
        let ip_uu = u.sobolev_inner(&u, 0.9).unwrap();
        let norm2 = u.sobolev_norm(0.9).powi(2);
        assert!((ip_uu.re - norm2).abs() <= 1e-12 * norm2);
        assert!(ip_uu.im.abs() <= 1e-12 * norm2);
        // s = 0 reduces to the L2 inner product of samples.
        let l2 = u.sobolev_inner(&v, 0.0).unwrap();
        let h = grid.spacing(0);
        let mut direct = Complex64::default();
        for (a, b) in u.values().iter().zip(v.values()) {
            direct += a.conj() * b * h;
        }
        assert!((l2 - direct).norm() <= 1e-12 * direct.norm().max(1.0));
    }

    #[test]
    fn inner_product_equals_dual_with_shifted_bessel() {
        // (u, v)_{H^s} = ⟨conj(u), J^{2s} v⟩
        let grid = GridSpec::new(&[8.0], &[128], 2).unwrap();
        let u = random_band_limited(&grid, 18, 21);
        let v = random_band_limited(&grid, 18, 22);
        for s in [-0.75, 0.0, 0.6, 1.3] {
            let lhs = u.sobolev_inner(&v, s).unwrap();
            let rhs = u
                .conj()
                .dual_product(&v.bessel_potential(2.0 * s).unwrap())
                .unwrap();
            assert!(
                (lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0),
                "s={s}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn dual_product_of_conjugate_pair_is_l2_norm() {
        let u = random_band_limited(&GridSpec::new(&[4.0, 2.0], &[16, 8], 1).unwrap(), 5, 9);
        let d = u.dual_product(&u.conj()).unwrap();
        let l2 = u.sobolev_norm(0.0).powi(2);
        assert!(d.im.abs() <= 1e-12 * l2);
        assert!((d.re - l2).abs() <= 1e-12 * l2);
    }

    #[test]
    fn dual_product_disjoint_frequency_supports() {
        let grid = GridSpec::new(&[4.0], &[32], 1).unwrap();
        let mut lo = vec![Complex64::default(); 32];
        let mut hi = vec![Complex64::default(); 32];
        lo[1] = Complex64::new(1.0, 0.5);
        lo[31] = Complex64::new(0.3, -0.2); // ξ = -1/4
        hi[5] = Complex64::new(2.0, 1.0);
        hi[27] = Complex64::new(-1.0, 0.4);
        let u = SpectralField::from_fourier(grid.clone(), lo).unwrap();
        let v = SpectralField::from_fourier(grid, hi).unwrap();
        assert!(u.dual_product(&v).unwrap().norm() == 0.0);
    }

    #[test]
    fn duality_bound_at_s_07() {
        // |⟨u, v⟩| <= ||u||_{H^s} ||v||_{H^{-s}}
        let grid = GridSpec::new(&[8.0, 8.0], &[32, 32], 1).unwrap();
        let s = 0.7;
        let mut worst_slack = f64::INFINITY;
        for seed in 0..50 {
            let u = random_band_limited(&grid, 9, 1000 + seed);
            let v = random_band_limited(&grid, 9, 2000 + seed);
            let lhs = u.dual_product(&v).unwrap().norm();
            let rhs = u.sobolev_norm(s) * v.sobolev_norm(-s);
            assert!(lhs <= rhs * (1.0 + 1e-12), "seed {seed}");
            worst_slack = worst_slack.min(rhs - lhs);
        }
        assert!(worst_slack >= 0.0);
    }

    #[test]
    fn restriction_preserves_interior_pairings() {
        // Pairing of a half-space restriction against an interior bump equals
        // the full pairing: quadrature on the bump support.
        let grid = GridSpec::new(&[16.0, 16.0], &[64, 64], 1).unwrap();
        let gauss = SpectralField::from_fn(grid.clone(), |_, x| {
            Complex64::new((-PI * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0)
        });
        // bump supported well inside {x1 > 0}
        let bump = SpectralField::from_fn(grid, |_, x| {
            let r2 = (x[1] - 3.0) * (x[1] - 3.0) + x[0] * x[0];
            Complex64::new(if r2 < 4.0 { (-1.0 / (1.0 - r2 / 4.0)).exp() } else { 0.0 }, 0.0)
        });
        let (restricted, kept) = gauss.restrict_support(|x| x[1] > 0.0);
        assert!(kept > 0);
        let full = gauss.dual_product(&bump).unwrap();
        let cut = restricted.dual_product(&bump).unwrap();
        assert!((full - cut).norm() <= 1e-10 * full.norm());
    }

    #[test]
    fn bessel_minus_two_matches_quadrature_oracle() {
        // J^{-2} of e^{-πx²} equals ∫ (1+ξ²)^{-1} e^{-πξ²} e^{2πixξ} dξ,
        // evaluated here by panel quadrature independent of any FFT.
        let u = gaussian_1d();
        let smoothed = u.bessel_potential(-2.0).unwrap();
        let oracle = |x: f64| {
            crate::quad::adaptive_gl(
                |xi: f64| {
                    (1.0 + xi * xi).recip()
                        * (-PI * xi * xi).exp()
                        * (2.0 * PI * x * xi).cos()
                },
                -8.0,
                8.0,
                1e-12,
            )
            .unwrap()
        };
        let grid = smoothed.grid().clone();
        let vals = smoothed.values();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in (0..256).step_by(4) {
            let x = grid.coord(0, i);
            let expect = oracle(x);
            num += (vals[i].re - expect).powi(2) + vals[i].im.powi(2);
            den += expect * expect;
        }
        assert!((num / den).sqrt() <= 1e-8, "relative L2 error {}", (num / den).sqrt());
    }

    #[test]
    fn deterministic_rng_helper() {
        use rand::Rng;
        let mut a = seeded_rng(42);
        let mut b = seeded_rng(42);
        let x: f64 = a.gen();
        let y: f64 = b.gen();
        assert_eq!(x, y);
    }
}
