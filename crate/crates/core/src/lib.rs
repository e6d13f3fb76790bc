//! Interior transmission eigenvalues of anisotropic media in two dimensions.
//!
//! The eigenvalues are the values where the difference of two Robin-to-Dirichlet
//! maps, one for the inhomogeneous medium and one for free space, becomes
//! singular. That difference is discretized with P1 finite elements and its
//! eigenvalues are located by a contour-integral spectral indicator driving a
//! quadtree search in the complex plane.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod linsolve;
pub mod mesh;
pub mod operator;
pub mod simh;
pub mod sparse;

pub use faer::c64;
