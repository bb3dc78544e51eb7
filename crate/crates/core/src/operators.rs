//! The scaled photoacoustic forward operator (initial pressure to boundary
//! data) and its adjoint, both built on [`WaveSolver`].
//!
//! Forward: the smoothed initial pressure enters as a mass source split
//! over the first two half steps; each receiver node records half the
//! kernel-weighted outward normal derivative of the pressure.
//!
//! Adjoint: the time-reversed boundary data is emitted as a force source
//! through the same kernels, the same solver runs forward in time, and the
//! output is the scaled two-step pressure difference at the final time.
//!
//! The normal derivative is taken with the same `+dx/2` staggered gradient
//! that drives the velocity update, and kernels for component `z` are
//! evaluated at the staggered velocity points. With this pairing the
//! emission is the exact transpose of the reception, so outside the PML the
//! discrete adjoint holds to round-off.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{Grid, Medium, DIM};
use crate::receivers::{quadrature_weights, ArrayKernels, KernelSpec, Point, ReceiverArray};
use crate::solver::{PressureRecorder, Probe, Snapshot, SourceSchedule, VectorField, WaveSolver};

/// Scalar field on the grid interior, row-major `[x][y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub dims: [usize; DIM],
    pub dx: f64,
    pub values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: &Grid) -> Self {
        Image {
            dims: grid.dims,
            dx: grid.dx,
            values: vec![0.0; grid.interior_len()],
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.interior_len() {
            return Err(Error::Shape(format!(
                "image needs {} values, got {}",
                grid.interior_len(),
                values.len()
            )));
        }
        Ok(Image {
            dims: grid.dims,
            dx: grid.dx,
            values,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.dims[1] + j]
    }

    /// Physical coordinate of interior index `i` along `axis`.
    pub fn coordinate(&self, axis: usize, i: f64) -> f64 {
        (i - (self.dims[axis] / 2) as f64) * self.dx
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, a: f64) -> Image {
        Image {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Image) -> Image {
        Image {
            values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
            ..self.clone()
        }
    }

    fn check(&self, grid: &Grid) -> Result<()> {
        if self.dims != grid.dims || self.values.len() != grid.interior_len() {
            return Err(Error::Shape(format!(
                "image is {:?}, grid interior is {:?}",
                self.dims, grid.dims
            )));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidSource("image contains non-finite values".into()));
        }
        Ok(())
    }
}

/// Scaled Dirichlet data, one trace per receiver node over `t = 0 ..= nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub n_nodes: usize,
    pub n_times: usize,
    pub dt: f64,
    /// Node-major: `values[j * n_times + t]`.
    pub values: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(n_nodes: usize, grid: &Grid) -> Self {
        let n_times = grid.nt + 1;
        BoundaryData {
            n_nodes,
            n_times,
            dt: grid.dt,
            values: vec![0.0; n_nodes * n_times],
        }
    }

    pub fn trace(&self, node: usize) -> &[f64] {
        &self.values[node * self.n_times..(node + 1) * self.n_times]
    }

    pub fn trace_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.n_times..(node + 1) * self.n_times]
    }

    pub fn scaled(&self, a: f64) -> Self {
        BoundaryData {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &BoundaryData) -> Self {
        BoundaryData {
            values: self.values.iter().zip(&other.values).map(|(x, y)| x + a * y).collect(),
            ..self.clone()
        }
    }

    fn check(&self, n_nodes: usize, grid: &Grid) -> Result<()> {
        if self.n_nodes != n_nodes || self.n_times != grid.nt + 1 || self.values.len() != n_nodes * (grid.nt + 1) {
            return Err(Error::Shape(format!(
                "boundary data is {}x{}, operator expects {}x{}",
                self.n_nodes,
                self.n_times,
                n_nodes,
                grid.nt + 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    Identity,
    RaisedCosine,
}

/// Radial k-space window: one up to `cutoff - rolloff`, a raised-cosine
/// taper to zero at `cutoff`, both as fractions of the Nyquist wavenumber.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmootherSpec {
    pub kind: WindowKind,
    pub cutoff: f64,
    pub rolloff: f64,
}

impl Default for SmootherSpec {
    fn default() -> Self {
        SmootherSpec {
            kind: WindowKind::RaisedCosine,
            cutoff: 1.0,
            rolloff: 0.5,
        }
    }
}

impl SmootherSpec {
    pub fn identity() -> Self {
        SmootherSpec {
            kind: WindowKind::Identity,
            cutoff: 1.0,
            rolloff: 0.0,
        }
    }

    /// Window value at `|k| / k_nyquist = r`.
    pub fn transfer(&self, r: f64) -> f64 {
        match self.kind {
            WindowKind::Identity => 1.0,
            WindowKind::RaisedCosine => {
                let start = self.cutoff - self.rolloff;
                if r <= start {
                    1.0
                } else if r >= self.cutoff {
                    0.0
                } else {
                    0.5 * (1.0 + (std::f64::consts::PI * (r - start) / self.rolloff).cos())
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.kind {
            WindowKind::Identity => true,
            WindowKind::RaisedCosine => {
                self.cutoff > 0.0 && self.rolloff > 0.0 && self.rolloff <= self.cutoff
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid smoother {self:?}")))
        }
    }
}

/// Smoothing on the full grid; used by both operators so that the pair
/// stays transpose-consistent.
fn smooth_full(field: &mut [f64], grid: &Grid, spec: &SmootherSpec) {
    if spec.kind == WindowKind::Identity {
        return;
    }
    let [nx, ny] = grid.total_dims();
    let (kx, ky) = (grid.wavenumbers(0), grid.wavenumbers(1));
    let k_nyq = std::f64::consts::PI / grid.dx;
    let mut fft = Fft2::new(nx, ny);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for jy in 0..ny {
        for ix in 0..nx {
            buf[jy * nx + ix] *= spec.transfer(kx[ix].hypot(ky[jy]) / k_nyq);
        }
    }
    fft.inverse(&mut buf);
    for (f, b) in field.iter_mut().zip(&buf) {
        *f = b.re;
    }
}

/// Applies the smoothing window to an interior image (zero-padded through
/// the PML, then restricted back).
pub fn smooth(image: &Image, spec: &SmootherSpec, grid: &Grid) -> Result<Image> {
    image.check(grid)?;
    let mut full = grid.embed(&image.values);
    smooth_full(&mut full, grid, spec);
    Image::from_values(grid, grid.restrict(&full))
}

/// Mass source of the forward operator: `S_m^z = S p0 / (2 c^2 d dt)` at
/// `t in {-1, 0}`.
pub struct MassSchedule {
    per_component: Vec<f64>,
}

impl MassSchedule {
    /// The split mass-source field `S_m^z` (identical for every `z`).
    pub fn field(&self) -> &[f64] {
        &self.per_component
    }
}

impl SourceSchedule for MassSchedule {
    fn add_mass(&self, t: i64, dt: f64, rho: &mut VectorField) {
        if t != -1 && t != 0 {
            return;
        }
        for comp in rho.iter_mut() {
            for (r, s) in comp.iter_mut().zip(&self.per_component) {
                *r += dt * s;
            }
        }
    }
}

/// Force source of the adjoint operator: each node emits its
/// time-reversed trace along the inward normal through its kernels.
pub struct ForceSchedule<'a> {
    data: &'a BoundaryData,
    kernels: &'a ArrayKernels,
    /// `-w_j n_in / 2` per node.
    coefficients: Vec<Point>,
}

impl SourceSchedule for ForceSchedule<'_> {
    fn add_force(&self, t: i64, dt: f64, u: &mut VectorField) {
        let nt = self.data.n_times as i64 - 1;
        let sample = nt - t - 1;
        if sample < 0 || sample > nt {
            return;
        }
        for (j, coef) in self.coefficients.iter().enumerate() {
            let f = self.data.values[j * self.data.n_times + sample as usize];
            if f == 0.0 {
                continue;
            }
            for (axis, comp) in u.iter_mut().enumerate() {
                if coef[axis] != 0.0 {
                    self.kernels.per_axis[axis][j].scatter(dt * coef[axis] * f, comp);
                }
            }
        }
    }
}

/// Records `1/2 * dx^d * sum_z n_out^z K^z_j . D+_z p` for every node.
struct Reception<'a> {
    kernels: &'a ArrayKernels,
    normals: &'a [Point],
    scale: f64,
    out: BoundaryData,
}

impl Probe for Reception<'_> {
    fn record(&mut self, snap: &Snapshot<'_>) {
        let n_times = self.out.n_times;
        let values: Vec<f64> = (0..self.normals.len())
            .into_par_iter()
            .map(|j| {
                let n = self.normals[j];
                let mut acc = 0.0;
                for axis in 0..DIM {
                    if n[axis] != 0.0 {
                        acc += n[axis] * self.kernels.per_axis[axis][j].gather(&snap.grad[axis]);
                    }
                }
                self.scale * acc
            })
            .collect();
        for (j, v) in values.into_iter().enumerate() {
            self.out.values[j * n_times + snap.t] = v;
        }
    }
}

/// Forward/adjoint pair for one grid, medium and receiver array.
#[derive(Debug, Clone)]
pub struct PatOperator {
    pub grid: Grid,
    pub medium: Medium,
    pub array: ReceiverArray,
    pub kernels: ArrayKernels,
    pub smoother: SmootherSpec,
    weights: Vec<f64>,
    normals: Vec<Point>,
}

impl PatOperator {
    pub fn new(
        grid: Grid,
        medium: Medium,
        array: ReceiverArray,
        kernel: KernelSpec,
        smoother: SmootherSpec,
    ) -> Result<Self> {
        if medium.c.len() != grid.total_len() {
            return Err(Error::Shape("medium does not match grid".into()));
        }
        smoother.validate()?;
        let kernels = ArrayKernels::build(&array, &grid, kernel)?;
        Ok(PatOperator {
            weights: quadrature_weights(&array),
            normals: array.node_normals(),
            grid,
            medium,
            array,
            kernels,
            smoother,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.weights.len()
    }

    /// Per-node quadrature weights `w_j`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn forward_mass_schedule(&self, p0: &Image) -> Result<MassSchedule> {
        self.mass_schedule(p0, true)
    }

    fn mass_schedule(&self, p0: &Image, guard_pml: bool) -> Result<MassSchedule> {
        p0.check(&self.grid)?;
        if guard_pml && self.grid.pml_size > 0 && touches_boundary(p0) {
            return Err(Error::InvalidSource(
                "initial pressure reaches the outermost interior points next to the PML".into(),
            ));
        }
        let mut field = self.grid.embed(&p0.values);
        smooth_full(&mut field, &self.grid, &self.smoother);
        let denom = 2.0 * DIM as f64 * self.grid.dt;
        for (f, c) in field.iter_mut().zip(&self.medium.c) {
            *f /= denom * c * c;
        }
        Ok(MassSchedule {
            per_component: field,
        })
    }

    pub fn forward(&self, p0: &Image) -> Result<BoundaryData> {
        self.forward_impl(p0, true)
    }

    /// Forward map without the PML-contact guard; the dense oracle needs
    /// every unit image, including those on the interior rim.
    pub(crate) fn forward_unguarded(&self, p0: &Image) -> Result<BoundaryData> {
        self.forward_impl(p0, false)
    }

    fn forward_impl(&self, p0: &Image, guard_pml: bool) -> Result<BoundaryData> {
        let schedule = self.mass_schedule(p0, guard_pml)?;
        let mut reception = Reception {
            kernels: &self.kernels,
            normals: &self.normals,
            scale: 0.5 * self.grid.cell_volume(),
            out: BoundaryData::zeros(self.n_nodes(), &self.grid),
        };
        let mut solver = WaveSolver::new(&self.grid, &self.medium)?;
        solver.run(&schedule, &mut [&mut reception])?;
        Ok(reception.out)
    }

    pub fn adjoint_force_schedule<'a>(&'a self, data: &'a BoundaryData) -> Result<ForceSchedule<'a>> {
        data.check(self.n_nodes(), &self.grid)?;
        let coefficients = self
            .weights
            .iter()
            .zip(&self.normals)
            .map(|(w, n_out)| [0.5 * w * n_out[0], 0.5 * w * n_out[1]])
            .collect();
        Ok(ForceSchedule {
            data,
            kernels: &self.kernels,
            coefficients,
        })
    }

    /// `S [ (p(nt) - p(nt-2)) / (2 c^2 rho0 dt) ]` on the interior.
    pub fn adjoint(&self, data: &BoundaryData) -> Result<Image> {
        let schedule = self.adjoint_force_schedule(data)?;
        let nt = self.grid.nt;
        let early = nt.checked_sub(2);
        let mut recorder = PressureRecorder::new(early.into_iter().chain([nt]));
        let mut solver = WaveSolver::new(&self.grid, &self.medium)?;
        solver.run(&schedule, &mut [&mut recorder])?;
        let last = recorder.frame(nt).expect("final pressure recorded");
        let zeros = vec![0.0; last.len()];
        let before = early.and_then(|t| recorder.frame(t)).unwrap_or(&zeros);
        let dt = self.grid.dt;
        let mut out: Vec<f64> = (0..last.len())
            .map(|i| {
                let c = self.medium.c[i];
                (last[i] - before[i]) / (2.0 * c * c * self.medium.rho0[i] * dt)
            })
            .collect();
        smooth_full(&mut out, &self.grid, &self.smoother);
        Image::from_values(&self.grid, self.grid.restrict(&out))
    }
}

/// True if the image is nonzero on its outermost ring of points.
pub fn touches_boundary(image: &Image) -> bool {
    let [nx, ny] = image.dims;
    (0..nx).any(|i| image.at(i, 0) != 0.0 || image.at(i, ny - 1) != 0.0)
        || (0..ny).any(|j| image.at(0, j) != 0.0 || image.at(nx - 1, j) != 0.0)
}
