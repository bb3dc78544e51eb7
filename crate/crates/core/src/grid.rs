//! Computational grid, acoustic medium, k-space corrected spectral
//! derivatives and the perfectly matched layer multipliers.
//!
//! Fields live on the full grid (interior plus `pml_size` points on every
//! side) in row-major `[x][y]` order. Interior point `(i, j)` sits at
//! `((i - nx/2) dx, (j - ny/2) dx)`, so a 256-point axis with
//! `dx = 0.4 mm` spans `[-51.2, 50.8] mm`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;

/// Number of spatial dimensions handled by the solver.
pub const DIM: usize = 2;

/// Smallest interior extent accepted along any axis.
pub const MIN_AXIS_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Interior points per axis.
    pub dims: [usize; DIM],
    pub dx: f64,
    pub pml_size: usize,
    /// Peak PML absorption in nepers per grid point.
    pub pml_alpha_max: f64,
    pub nt: usize,
    pub dt: f64,
    wavenumbers: [Vec<f64>; DIM],
}

impl Grid {
    pub fn new(
        dims: [usize; DIM],
        dx: f64,
        pml_size: usize,
        pml_alpha_max: f64,
        nt: usize,
        dt: f64,
    ) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {dx}")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {dt}")));
        }
        if nt < 1 {
            return Err(Error::InvalidGrid("nt must be at least 1".into()));
        }
        if !(pml_alpha_max >= 0.0 && pml_alpha_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "pml_alpha_max must be non-negative, got {pml_alpha_max}"
            )));
        }
        if let Some(n) = dims.iter().find(|&&n| n < MIN_AXIS_POINTS) {
            return Err(Error::InvalidGrid(format!(
                "every axis needs at least {MIN_AXIS_POINTS} interior points, got {n}"
            )));
        }
        let wavenumbers = std::array::from_fn(|a| wavenumber_table(dims[a] + 2 * pml_size, dx));
        Ok(Grid {
            dims,
            dx,
            pml_size,
            pml_alpha_max,
            nt,
            dt,
            wavenumbers,
        })
    }

    /// Points per axis including both PML layers.
    pub fn total_dims(&self) -> [usize; DIM] {
        std::array::from_fn(|a| self.dims[a] + 2 * self.pml_size)
    }

    pub fn total_len(&self) -> usize {
        self.total_dims().iter().product()
    }

    pub fn interior_len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Cell volume `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(DIM as i32)
    }

    /// Wavenumbers (rad/m) along `axis` over the full extent, in FFT order.
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.wavenumbers[axis]
    }

    /// Physical coordinate of full-grid index `idx` along `axis`.
    pub fn coordinate(&self, axis: usize, idx: f64) -> f64 {
        (idx - self.pml_size as f64 - (self.dims[axis] / 2) as f64) * self.dx
    }

    /// Fractional full-grid index of physical coordinate `x` along `axis`.
    pub fn index_of(&self, axis: usize, x: f64) -> f64 {
        x / self.dx + self.pml_size as f64 + (self.dims[axis] / 2) as f64
    }

    /// Physical coordinate of interior index `i` along `axis`.
    pub fn interior_coordinate(&self, axis: usize, i: f64) -> f64 {
        self.coordinate(axis, i + self.pml_size as f64)
    }

    /// Fractional interior index of physical coordinate `x` along `axis`.
    pub fn interior_index_of(&self, axis: usize, x: f64) -> f64 {
        self.index_of(axis, x) - self.pml_size as f64
    }

    pub fn full_index(&self, ix: usize, iy: usize) -> usize {
        ix * self.total_dims()[1] + iy
    }

    /// Full-grid flat index of interior point `(i, j)`.
    pub fn interior_to_full(&self, i: usize, j: usize) -> usize {
        self.full_index(i + self.pml_size, j + self.pml_size)
    }

    /// Zero-pads an interior field onto the full grid.
    pub fn embed(&self, interior: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.total_len()];
        let ny = self.dims[1];
        for (i, row) in interior.chunks(ny).enumerate() {
            let start = self.interior_to_full(i, 0);
            out[start..start + ny].copy_from_slice(row);
        }
        out
    }

    /// Restricts a full-grid field to the interior.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        let ny = self.dims[1];
        let mut out = Vec::with_capacity(self.interior_len());
        for i in 0..self.dims[0] {
            let start = self.interior_to_full(i, 0);
            out.extend_from_slice(&full[start..start + ny]);
        }
        out
    }

    /// Total simulated time `nt * dt`.
    pub fn duration(&self) -> f64 {
        self.nt as f64 * self.dt
    }
}

/// FFT-ordered wavenumbers `2 pi n / (N dx)`. For even `N` the Nyquist
/// entry is `-pi/dx`.
pub fn wavenumber_table(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|i| {
            let signed = if i < n.div_ceil(2) { i as i64 } else { i as i64 - n as i64 };
            signed as f64 * dk
        })
        .collect()
}

fn is_nyquist(i: usize, n: usize) -> bool {
    n.is_multiple_of(2) && i == n / 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct Medium {
    /// Sound speed (m/s) on the full grid.
    pub c: Vec<f64>,
    /// Ambient density (kg/m^d) on the full grid.
    pub rho0: Vec<f64>,
    /// Reference speed for the k-space correction.
    pub c_ref: f64,
}

impl Medium {
    pub fn homogeneous(grid: &Grid, c: f64, rho0: f64) -> Result<Self> {
        let n = grid.total_len();
        Medium::new(grid, vec![c; n], vec![rho0; n], None)
    }

    /// `c_ref` defaults to `max(c)`.
    pub fn new(grid: &Grid, c: Vec<f64>, rho0: Vec<f64>, c_ref: Option<f64>) -> Result<Self> {
        let n = grid.total_len();
        if c.len() != n || rho0.len() != n {
            return Err(Error::Shape(format!(
                "medium fields must have {n} entries, got c={} rho0={}",
                c.len(),
                rho0.len()
            )));
        }
        if !c.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidMedium("sound speed must be positive".into()));
        }
        if !rho0.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidMedium("density must be positive".into()));
        }
        let c_ref = c_ref.unwrap_or_else(|| c.iter().copied().fold(0.0, f64::max));
        if !(c_ref > 0.0 && c_ref.is_finite()) {
            return Err(Error::InvalidMedium(format!("c_ref must be positive, got {c_ref}")));
        }
        Ok(Medium { c, rho0, c_ref })
    }

    /// Courant number `c_ref dt / dx`.
    pub fn cfl(&self, grid: &Grid) -> f64 {
        self.c_ref * grid.dt / grid.dx
    }
}

/// Half-cell offset of a spectral derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shift {
    /// Evaluated at `x - dx/2`.
    Backward,
    Centered,
    /// Evaluated at `x + dx/2`.
    Forward,
}

impl Shift {
    fn sign(self) -> f64 {
        match self {
            Shift::Backward => -1.0,
            Shift::Centered => 0.0,
            Shift::Forward => 1.0,
        }
    }
}

/// Spectral multiplier `i k kappa exp(i s k dx / 2)` in `[ky][kx]` layout.
///
/// `kappa = sinc(c_ref |k| dt / 2)` when `correction` carries `c_ref * dt`;
/// the Nyquist bin of the differentiated axis is zeroed.
pub(crate) fn derivative_symbol(
    grid: &Grid,
    axis: usize,
    shift: Shift,
    correction: Option<f64>,
) -> Vec<Complex64> {
    let [nx, ny] = grid.total_dims();
    let (kx, ky) = (grid.wavenumbers(0), grid.wavenumbers(1));
    let mut out = Vec::with_capacity(nx * ny);
    for jy in 0..ny {
        for ix in 0..nx {
            let (k_axis, nyq) = if axis == 0 {
                (kx[ix], is_nyquist(ix, nx))
            } else {
                (ky[jy], is_nyquist(jy, ny))
            };
            if nyq {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let kappa = correction
                .map(|c_dt| sinc(0.5 * c_dt * kx[ix].hypot(ky[jy])))
                .unwrap_or(1.0);
            let phase = Complex64::from_polar(1.0, 0.5 * shift.sign() * k_axis * grid.dx);
            out.push(Complex64::new(0.0, k_axis * kappa) * phase);
        }
    }
    out
}

pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Reusable spectral derivative on one grid.
pub struct SpectralDerivative {
    fft: Fft2,
    symbols: [[Vec<Complex64>; 3]; DIM],
    buf: Vec<Complex64>,
}

impl SpectralDerivative {
    /// `kspace` selects the k-space correction (`Some(medium)`) or a plain
    /// spectral derivative (`None`).
    pub fn new(grid: &Grid, kspace: Option<&Medium>) -> Self {
        let correction = kspace.map(|m| m.c_ref * grid.dt);
        let [nx, ny] = grid.total_dims();
        let symbols = std::array::from_fn(|axis| {
            [Shift::Backward, Shift::Centered, Shift::Forward]
                .map(|s| derivative_symbol(grid, axis, s, correction))
        });
        SpectralDerivative {
            fft: Fft2::new(nx, ny),
            symbols,
            buf: vec![Complex64::new(0.0, 0.0); nx * ny],
        }
    }

    pub fn apply(&mut self, field: &[f64], axis: usize, shift: Shift) -> Result<Vec<f64>> {
        if field.len() != self.fft.len() {
            return Err(Error::Shape(format!(
                "field has {} entries, grid has {}",
                field.len(),
                self.fft.len()
            )));
        }
        if axis >= DIM {
            return Err(Error::Shape(format!("axis {axis} out of range")));
        }
        for (b, &f) in self.buf.iter_mut().zip(field) {
            *b = Complex64::new(f, 0.0);
        }
        self.fft.forward(&mut self.buf);
        let sym = &self.symbols[axis][shift as usize];
        for (b, s) in self.buf.iter_mut().zip(sym) {
            *b *= s;
        }
        self.fft.inverse(&mut self.buf);
        Ok(self.buf.iter().map(|c| c.re).collect())
    }
}

/// One-shot k-space corrected derivative of a full-grid field.
pub fn spectral_derivative(
    field: &[f64],
    axis: usize,
    shift: Shift,
    grid: &Grid,
    medium: &Medium,
) -> Result<Vec<f64>> {
    SpectralDerivative::new(grid, Some(medium)).apply(field, axis, shift)
}

/// PML multipliers `exp(-alpha dt / 2)` along one axis, at regular grid
/// points and at the `+dx/2` staggered points.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlProfile {
    pub regular: Vec<f64>,
    pub staggered: Vec<f64>,
}

/// Absorption follows a quartic ramp `alpha_max (xi/L)^4 c_ref/dx` over the
/// layer depth `xi` (in grid points).
pub fn pml_profile(grid: &Grid, axis: usize, c_ref: f64) -> PmlProfile {
    let n = grid.total_dims()[axis];
    if grid.pml_size == 0 {
        return PmlProfile {
            regular: vec![1.0; n],
            staggered: vec![1.0; n],
        };
    }
    let pml = grid.pml_size as f64;
    let first_interior = pml;
    let last_interior = (grid.pml_size + grid.dims[axis] - 1) as f64;
    let lambda = |pos: f64| -> f64 {
        let depth = if pos < first_interior {
            first_interior - pos
        } else if pos > last_interior {
            pos - last_interior
        } else {
            return 1.0;
        };
        let alpha = grid.pml_alpha_max * (depth / pml).powi(4) * c_ref / grid.dx;
        (-alpha * grid.dt / 2.0).exp()
    };
    PmlProfile {
        regular: (0..n).map(|i| lambda(i as f64)).collect(),
        staggered: (0..n).map(|i| lambda(i as f64 + 0.5)).collect(),
    }
}
