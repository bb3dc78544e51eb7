#![allow(dead_code)]

use std::f64::consts::PI;

use pat_adjoint::grid::{Grid, Medium};
use pat_adjoint::solver::{Silent, WaveSolver, WaveState};
use pat_adjoint::operators::{Image, PatOperator, SmootherSpec};
use pat_adjoint::receivers::{build_circular_array, KernelSpec};

/// 16 x 16 grid, 1 mm spacing, four off-grid line receivers.
pub fn tiny_operator(pml_size: usize) -> PatOperator {
    let grid = Grid::new([16, 16], 1e-3, pml_size, 2.0, 30, 0.2e-6).unwrap();
    let medium = Medium::homogeneous(&grid, 1500.0, 1000.0).unwrap();
    let array = build_circular_array(4, 5.3e-3, 1.2e-3, 3, [0.0, 0.0]).unwrap();
    let kernel = KernelSpec::relative(&grid, 0.01);
    PatOperator::new(grid, medium, array, kernel, SmootherSpec::default()).unwrap()
}

/// Image from raw values with the outer ring cleared.
pub fn interior_image(op: &PatOperator, values: &[f64]) -> Image {
    let [nx, ny] = op.grid.dims;
    let mut img = Image::zeros(&op.grid);
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            img.values[i * ny + j] = values[(i * ny + j) % values.len()];
        }
    }
    img
}

pub const C: f64 = 1500.0;
pub const RHO0: f64 = 1000.0;

/// Periodic profile made of a few whole wavelengths across the grid.
fn profile(x: f64, length: f64) -> f64 {
    let k = 2.0 * PI / length;
    (k * x).sin() + 0.5 * (3.0 * k * x + 0.3).cos() + 0.25 * (7.0 * k * x).sin()
}

pub fn plane_wave_error(n: usize, cfl: f64, steps: usize) -> f64 {
    let dx = 1e-4;
    let dt = cfl * dx / C;
    let grid = Grid::new([n, n], dx, 0, 0.0, steps, dt).unwrap();
    let medium = Medium::homogeneous(&grid, C, RHO0).unwrap();
    let length = n as f64 * dx;
    let x = |i: usize| i as f64 * dx;

    // p and rho at t = 0, u at t = -1/2 on the staggered points.
    let mut state = WaveState::zeros(&grid);
    for i in 0..n {
        let p = profile(x(i), length);
        let u = profile(x(i) + 0.5 * dx + 0.5 * C * dt, length) / (RHO0 * C);
        for j in 0..n {
            let idx = i * n + j;
            state.p[idx] = p;
            state.rho[0][idx] = p / (C * C);
            state.u[0][idx] = u;
        }
    }
    let mut solver = WaveSolver::new(&grid, &medium).unwrap();
    for t in 0..steps {
        solver.step(&mut state, &Silent, t as i64).unwrap();
    }
    let shift = C * dt * steps as f64;
    let mut err: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for i in 0..n {
        let exact = profile(x(i) - shift, length);
        peak = peak.max(exact.abs());
        for j in 0..n {
            err = err.max((state.p[i * n + j] - exact).abs());
        }
    }
    err / peak
}

pub struct Pulse {
    pub grid: Grid,
    pub medium: Medium,
    pub state: WaveState,
}

pub fn gaussian_pulse(n: usize, pml: usize, sigma_cells: f64) -> Pulse {
    let dx = 1e-4;
    let dt = 0.3 * dx / C;
    let grid = Grid::new([n, n], dx, pml, 2.0, 1, dt).unwrap();
    let medium = Medium::homogeneous(&grid, C, RHO0).unwrap();
    let mut state = WaveState::zeros(&grid);
    let [tx, ty] = grid.total_dims();
    for i in 0..tx {
        let x = grid.coordinate(0, i as f64);
        for j in 0..ty {
            let y = grid.coordinate(1, j as f64);
            let r2 = (x * x + y * y) / (sigma_cells * dx).powi(2);
            let p = (-0.5 * r2).exp();
            let idx = i * ty + j;
            state.p[idx] = p;
            state.rho[0][idx] = 0.5 * p / (C * C);
            state.rho[1][idx] = 0.5 * p / (C * C);
        }
    }
    Pulse { grid, medium, state }
}

pub fn interior_max(grid: &Grid, p: &[f64]) -> f64 {
    grid.restrict(p).iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Late interior amplitude relative to the outgoing peak. The outgoing
/// peak is the largest amplitude on the outermost interior ring during the
/// first crossing; "late" is anything left in the interior after two.
pub fn reentry_ratio(pml: usize) -> (f64, f64) {
    let Pulse { grid, medium, mut state } = gaussian_pulse(96, pml, 2.0);
    let mut solver = WaveSolver::new(&grid, &medium).unwrap();
    let crossing = (grid.dims[0] as f64 * grid.dx / (C * grid.dt)).ceil() as usize;
    let [nx, ny] = grid.dims;
    let mut outgoing: f64 = 0.0;
    let mut late: f64 = 0.0;
    for t in 0..3 * crossing {
        solver.step(&mut state, &Silent, t as i64).unwrap();
        let interior = grid.restrict(&state.p);
        if t < crossing {
            for i in 0..nx {
                for j in 0..ny {
                    if i.min(j).min(nx - 1 - i).min(ny - 1 - j) < 3 {
                        outgoing = outgoing.max(interior[i * ny + j].abs());
                    }
                }
            }
        }
        if t >= 2 * crossing {
            late = late.max(interior.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }
    (late / outgoing, outgoing)
}
