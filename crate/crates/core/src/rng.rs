//! Deterministic randomness for probe families and tests.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::field::SpectralField;
use crate::grid::GridSpec;

/// Every randomised experiment draws from a `ChaCha8Rng` seeded here so runs
/// are reproducible byte for byte.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random band-limited field: independent standard complex Gaussians on the
/// frequency bins with every signed index |j_a| <= band, zero elsewhere.
pub fn random_band_limited(grid: &GridSpec, band: usize, seed: u64) -> SpectralField {
    let mut rng = seeded_rng(seed);
    let dim = grid.dimension();
    let spc = grid.samples_per_component();
    let m = grid.components();
    let mut coeffs = vec![Complex64::default(); grid.total_len()];
    let mut idx = [0usize; 3];
    for i in 0..spc {
        grid.unravel(i, &mut idx[..dim]);
        let inside = (0..dim).all(|a| {
            let n = grid.points()[a];
            let j = if idx[a] < n / 2 {
                idx[a] as isize
            } else {
                idx[a] as isize - n as isize
            };
            j.unsigned_abs() <= band
        });
        if inside {
            for c in 0..m {
                coeffs[c * spc + i] = Complex64::new(standard_normal(&mut rng), standard_normal(&mut rng));
            }
        }
    }
    SpectralField::from_fourier(grid.clone(), coeffs).expect("sized to grid")
}

/// Box-Muller standard normal; avoids pulling a distributions crate for one
/// sampler.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            let v: f64 = rng.gen();
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}
