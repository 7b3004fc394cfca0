// Index loops here follow the explicit stride arithmetic of grids, bands and
// dof maps; comparisons written as !(x > 0) must fail on NaN.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::type_complexity
)]

//! Numerical laboratory for fractional Sobolev machinery on periodic grids,
//! half-space trace operators, weak elliptic systems with variational
//! co-normal derivative recovery, Hölder coefficient estimates and the
//! screened-Poisson volume potential.

pub mod acceptance;
pub mod conormal;
pub mod error;
pub mod estimates;
pub mod experiments;
pub mod fem;
pub mod field;
pub mod grid;
pub mod io;
pub mod halfspace;
pub mod holder;
pub mod linalg;
pub mod mesh;
pub mod potential;
pub mod quad;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use field::SpectralField;
pub use grid::GridSpec;
