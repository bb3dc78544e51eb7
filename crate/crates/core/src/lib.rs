//! Photoacoustic tomography forward and adjoint operators on a k-space
//! pseudospectral acoustic solver, with off-grid line receivers,
//! adjointness verification and projected gradient reconstruction.
//!
//! The pieces, bottom up:
//!
//! - [`grid`]: grid, medium, staggered spectral derivatives, PML profiles
//! - [`solver`]: the first-order time stepper with pluggable sources and probes
//! - [`receivers`]: line receivers, quadrature weights, sinc delta kernels
//! - [`operators`]: [`PatOperator`] with `forward` and `adjoint`
//! - [`verify`]: inner products, the dot-product test, the dense oracle
//! - [`recon`]: positivity-projected gradient descent
//! - [`phantom`], [`container`], [`config`]: inputs, storage, presets
//!
//! ```no_run
//! use pat_adjoint::prelude::*;
//!
//! let grid = Grid::new([64, 64], 0.4e-3, 10, 2.0, 300, 0.08e-6)?;
//! let medium = Medium::homogeneous(&grid, 1500.0, 1000.0)?;
//! let array = build_circular_array(16, 11e-3, 1e-3, 10, [0.0, 0.0])?;
//! let kernel = KernelSpec::relative(&grid, 0.01);
//! let op = PatOperator::new(grid, medium, array, kernel, SmootherSpec::default())?;
//! let p0 = make_disc_phantom(&op.grid, 8e-3, [0.0, 0.0], (0.0, 1.0), 1)?;
//! let data = op.forward(&p0)?;
//! let back = op.adjoint(&data)?;
//! # Ok::<(), pat_adjoint::Error>(())
//! ```

pub mod config;
pub mod container;
pub mod error;
pub mod experiments;
mod fft;
pub mod grid;
pub mod operators;
pub mod phantom;
pub mod receivers;
pub mod recon;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use operators::PatOperator;

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::grid::{Grid, Medium, Shift};
    pub use crate::operators::{BoundaryData, Image, PatOperator, SmootherSpec};
    pub use crate::phantom::{add_awgn, make_disc_phantom, make_vessel_phantom};
    pub use crate::receivers::{build_circular_array, build_ongrid_lines, KernelSpec, ReceiverArray, Side};
    pub use crate::recon::{reconstruct, ReconConfig, ReconResult};
    pub use crate::verify::{boundary_inner, domain_inner, inner_product_test, relative_error};
}
