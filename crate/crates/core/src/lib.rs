//! Localization kernels on the projective line, trace-built antiderivatives
//! on branched covers, and exact residue integrality checks.
//!
//! - [`exactkernel`]: split coefficients b_{m,l} in exact rationals.
//! - [`plocal`]: the roots-of-unity kernel and its decay and Lipschitz scans.
//! - [`cover`]: cover models P(t, w) = 0, fibers, exact and numerical traces.
//! - [`antideriv`]: null families, adapted bases and the local G_x.
//! - [`arithcheck`]: contour integrals of ω·G₂, exact residues, scale sweeps
//!   and the height bound.
//! - [`runner`] and [`report`]: config-driven experiments and their output.
//!
//! ```
//! use antider_kit::exactkernel::split_coefficients;
//!
//! let b = split_coefficients(2);
//! assert_eq!(b.sum(), 1);
//! assert_eq!(b.scaled_integers().unwrap(), [1, 4, 1]);
//! ```

pub mod algebra;
pub mod antideriv;
pub mod arithcheck;
pub mod cover;
pub mod error;
pub mod exactkernel;
pub mod model;
pub mod numeric;
pub mod plocal;
pub mod report;
pub mod runner;

pub use error::{Error, Result};
