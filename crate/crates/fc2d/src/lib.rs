//! Two-dimensional Fourier continuation (2D-FC) on domains with corners.
//!
//! The crate builds biperiodic, `d`-th order accurate trigonometric extensions of
//! smooth functions defined on bounded 2D domains whose boundaries may contain
//! convex and concave corners. The construction rests on a few cooperating
//! pieces:
//!
//! * [`btz1d`] — precomputed 1D "blending-to-zero" operators (Gram-polynomial
//!   basis plus a band-limited trigonometric least-squares fit) that extend
//!   boundary data smoothly to zero over a fixed number of grid points,
//! * [`geometry`] — boundary-fitted patches (smooth `S`, concave-corner `C1`,
//!   convex-corner `C2`) with parameter-space meshes, Newton inversion of the
//!   patch maps and decomposition validation,
//! * [`pou`] — a partition of unity over the patch cover, built from erfc-based
//!   boundary windows and boundary projections,
//! * [`btz2d`] — the per-patch 2D blending procedures in parameter space,
//! * [`continuation`] — transfer of patch extensions onto a global Cartesian
//!   grid, FFT of the assembled field and error measurement,
//! * [`poisson`] — an FC-based Dirichlet Poisson solver: spectral particular
//!   solution plus a graded-mesh Nyström solve of the Laplace boundary
//!   integral equation, with near-boundary potential evaluation.
//!
//! See the `examples/` directory for one runnable program per capability and
//! `src/bin/fc2d.rs` for a small command-line driver.

pub mod btz1d;
pub mod btz2d;
pub mod config;
pub mod continuation;
pub mod dd;
pub mod domains;
pub mod error;
pub mod fft;
pub mod geometry;
pub mod grid;
pub mod interp;
pub mod manifest;
pub mod mask;
pub mod pou;
pub mod poisson;
pub mod runs;

pub use error::{FcError, Result};
