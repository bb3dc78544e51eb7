//! A periodic plane wave carried through 100 steps at CFL 0.3 on a grid
//! without PML. The k-space corrected scheme moves every Fourier mode at
//! exactly the sound speed, so the translated profile matches to rounding.
//!
//! ```bash
//! cargo run --release --example plane_wave
//! ```

use std::f64::consts::PI;

use pat_adjoint::grid::{Grid, Medium, Shift, SpectralDerivative};
use pat_adjoint::solver::{Silent, WaveSolver, WaveState};

const C: f64 = 1500.0;
const RHO0: f64 = 1000.0;

fn main() -> pat_adjoint::Result<()> {
    let n = 64;
    let dx = 1e-4;
    let dt = 0.3 * dx / C;
    let steps = 100;
    let grid = Grid::new([n, n], dx, 0, 0.0, steps, dt)?;
    let medium = Medium::homogeneous(&grid, C, RHO0)?;
    let length = n as f64 * dx;
    let profile = |x: f64| (2.0 * PI * x / length).sin() + 0.5 * (6.0 * PI * x / length).cos();

    // The staggered derivative of a sine is exact up to rounding.
    let field: Vec<f64> = (0..n * n).map(|idx| profile((idx / n) as f64 * dx)).collect();
    let mut deriv = SpectralDerivative::new(&grid, None);
    let d = deriv.apply(&field, 0, Shift::Forward)?;
    let k = 2.0 * PI / length;
    let exact = |x: f64| k * (k * x).cos() - 1.5 * k * (3.0 * k * x).sin();
    let derr = (0..n).map(|i| (d[i * n] - exact((i as f64 + 0.5) * dx)).abs()).fold(0.0, f64::max);
    println!("D+ error at the staggered points: {:.2e} (peak {:.2e})", derr, 2.5 * k);

    let mut state = WaveState::zeros(&grid);
    for i in 0..n {
        let x = i as f64 * dx;
        let p = profile(x);
        let u = profile(x + 0.5 * dx + 0.5 * C * dt) / (RHO0 * C);
        for j in 0..n {
            state.p[i * n + j] = p;
            state.rho[0][i * n + j] = p / (C * C);
            state.u[0][i * n + j] = u;
        }
    }
    let mut solver = WaveSolver::new(&grid, &medium)?;
    for t in 0..steps {
        solver.step(&mut state, &Silent, t as i64)?;
    }
    let shift = C * dt * steps as f64;
    let err = (0..n)
        .map(|i| (state.p[i * n] - profile(i as f64 * dx - shift)).abs())
        .fold(0.0, f64::max);
    println!("after {steps} steps the wave moved {:.3} mm; max error {err:.2e}", shift * 1e3);
    Ok(())
}
