//! Monte Carlo laboratory for random-surface measures, Schramm-Loewner
//! curves, and correlated Brownian motion in a cone.
//!
//! The crate samples the discretized Gaussian fields behind quantum disks,
//! wedges, spheres, and cones, builds their multiplicative-chaos boundary and
//! area measures, simulates beaded (thin) surfaces at the boundary-length
//! level, draws SLE_kappa(rho) driving processes and traces, and estimates
//! hitting kernels of correlated planar Brownian motion — then checks each
//! construction against its closed-form law.

pub mod beaded;
pub mod cone;
pub mod error;
pub mod gmc;
pub mod grid;
pub mod horizontal;
pub mod lateral;
pub mod laws;
pub mod params;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod sle;
pub mod surface;
pub mod two_lengths;

pub use error::{Error, Result};
pub use grid::GridSpec;
pub use horizontal::{HorizontalProcess, SurfaceKind};
pub use params::{derive_params, LqgParams};
pub use surface::{sample_surface, BoundarySide, FieldSample};
