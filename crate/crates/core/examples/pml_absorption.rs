//! A Gaussian pulse leaves the domain through PMLs of several widths. The
//! table shows the largest interior amplitude left after the pulse has
//! had time to cross the domain twice; without a PML the grid is periodic
//! and the pulse comes straight back. With any PML the remainder is the
//! slowly decaying wake a 2D pulse leaves behind it, so it barely depends on
//! the layer.
//!
//! ```bash
//! cargo run --release --example pml_absorption
//! ```

use pat_adjoint::grid::{Grid, Medium};
use pat_adjoint::solver::{Silent, WaveSolver, WaveState};

const C: f64 = 1500.0;

fn residual(pml: usize, alpha: f64) -> pat_adjoint::Result<f64> {
    let dx = 1e-4;
    let grid = Grid::new([96, 96], dx, pml, alpha, 1, 0.3 * dx / C)?;
    let medium = Medium::homogeneous(&grid, C, 1000.0)?;
    let mut state = WaveState::zeros(&grid);
    let [tx, ty] = grid.total_dims();
    for i in 0..tx {
        for j in 0..ty {
            let (x, y) = (grid.coordinate(0, i as f64), grid.coordinate(1, j as f64));
            let p = (-0.5 * (x * x + y * y) / (2.0 * dx).powi(2)).exp();
            state.p[i * ty + j] = p;
            state.rho[0][i * ty + j] = 0.5 * p / (C * C);
            state.rho[1][i * ty + j] = 0.5 * p / (C * C);
        }
    }
    let mut solver = WaveSolver::new(&grid, &medium)?;
    let crossing = (96.0 / 0.3) as usize;
    let mut late = 0.0f64;
    for t in 0..3 * crossing {
        solver.step(&mut state, &Silent, t as i64)?;
        if t >= 2 * crossing {
            late = grid.restrict(&state.p).iter().fold(late, |m, v| m.max(v.abs()));
        }
    }
    Ok(late)
}

fn main() -> pat_adjoint::Result<()> {
    println!("{:>5} {:>6} {:>14}", "pml", "alpha", "late / peak");
    for (pml, alpha) in [(0, 0.0), (10, 2.0), (20, 1.0), (20, 2.0), (20, 4.0), (30, 2.0)] {
        println!("{pml:>5} {alpha:>6.1} {:>14.3e}", residual(pml, alpha)?);
    }
    Ok(())
}
