//! Property tests for the spectral-core invariants.

use num_complex::Complex64;
use proptest::prelude::*;
use sobolab::rng::random_band_limited;
use sobolab::GridSpec;

fn index_range() -> impl Strategy<Value = f64> {
    (-20i32..=20).prop_map(|k| k as f64 / 8.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bessel_group_law(s in index_range(), t in index_range(), seed in 0u64..1000) {
        let grid = GridSpec::new(&[8.0], &[64], 1).unwrap();
        let u = random_band_limited(&grid, 20, seed);
        let two_step = u.bessel_potential(s).unwrap().bessel_potential(t).unwrap();
        let one_step = u.bessel_potential(s + t).unwrap();
        let err = two_step.sub(&one_step).unwrap().sobolev_norm(0.0);
        let scale = one_step.sobolev_norm(0.0).max(1e-300);
        prop_assert!(err <= 1e-12 * scale);
    }

    #[test]
    fn bessel_isometry(s in index_range(), seed in 0u64..1000) {
        let grid = GridSpec::new(&[8.0], &[64], 2).unwrap();
        let u = random_band_limited(&grid, 20, seed);
        let a = u.bessel_potential(s).unwrap().sobolev_norm(0.0);
        let b = u.sobolev_norm(s);
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn parseval(seed in 0u64..1000) {
        let grid = GridSpec::new(&[4.0, 4.0], &[16, 16], 1).unwrap();
        let u = random_band_limited(&grid, 6, seed);
        let a = u.sobolev_norm(0.0);
        let b = u.sample_l2_norm();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn norm_homogeneity(re in -3.0f64..3.0, im in -3.0f64..3.0, seed in 0u64..1000) {
        let grid = GridSpec::new(&[4.0], &[32], 1).unwrap();
        let u = random_band_limited(&grid, 8, seed);
        let alpha = Complex64::new(re, im);
        let a = u.scale(alpha).sobolev_norm(0.7);
        let b = alpha.norm() * u.sobolev_norm(0.7);
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-12));
    }

    #[test]
    fn duality_bound(s in 0.0f64..1.5, seed in 0u64..500) {
        let grid = GridSpec::new(&[4.0], &[32], 1).unwrap();
        let u = random_band_limited(&grid, 8, seed);
        let v = random_band_limited(&grid, 8, seed + 7777);
        let lhs = u.dual_product(&v).unwrap().norm();
        let rhs = u.sobolev_norm(s) * v.sobolev_norm(-s);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn monotone_embedding(s1 in index_range(), s2 in index_range(), seed in 0u64..500) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let grid = GridSpec::new(&[4.0], &[32], 1).unwrap();
        let u = random_band_limited(&grid, 8, seed);
        let a = u.sobolev_norm(lo);
        let b = u.sobolev_norm(hi);
        prop_assert!(a <= b * (1.0 + 1e-13));
    }

    #[test]
    fn restriction_is_idempotent_projection(seed in 0u64..500, cut in -2.0f64..2.0) {
        let grid = GridSpec::new(&[8.0], &[64], 1).unwrap();
        let u = random_band_limited(&grid, 10, seed);
        let (once, kept1) = u.restrict_support(|x| x[0] > cut);
        let (twice, kept2) = once.restrict_support(|x| x[0] > cut);
        prop_assert_eq!(kept1, kept2);
        let err = twice.sub(&once).unwrap().sobolev_norm(0.0);
        prop_assert!(err == 0.0);
    }
}
