//! Spectral solver for the mixed parabolic-hyperbolic problem
//!
//! ```text
//!   u_tt - u_xx = f(x,t),   0 < t <= T
//!   u_t  + u_xx = f(x,t),  -T <= t < 0
//! ```
//!
//! on `0 < x < p` with homogeneous Dirichlet walls and continuity of `u`,
//! `u_t` and `u_tt` across the seam `t = 0`.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation; file formats, the command line and parallel drivers live in
//! the `parahyp` crate.
//!
//! Module map:
//!
//! * [`domain`]: rectangle geometry and the forcing catalog.
//! * [`quadrature`]: composite Gauss-Legendre rules with dyadic refinement.
//! * [`basis`]: sine eigenbasis, forcing projection, coefficient decay fits.
//! * [`modes`]: closed-form per-mode solutions and Duhamel kernels.
//! * [`series`]: truncated series assembly, tail bounds, field grids.
//! * [`verify`]: residuals, seam jumps, bound checks, scans and studies.
//! * [`oracle`]: independent reference computations.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basis;
pub mod domain;
mod error;
pub mod fit;
pub mod modes;
pub mod oracle;
pub mod quadrature;
pub mod series;
pub mod verify;

pub use crate::basis::{Eigenpair, ModeForcing};
pub use crate::domain::{Forcing, ForcingTerm, RectDomain, SpatialProfile, TemporalProfile};
pub use crate::error::{Error, Result};
pub use crate::modes::{ModeCoefficients, ModeSolution};
pub use crate::series::{Field, FieldGrid, Side, SpectralSolution, TruncationPolicy};
pub use crate::verify::VerificationReport;
