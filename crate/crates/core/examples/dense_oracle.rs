//! Assembles the forward and adjoint operators as dense matrices on a tiny
//! problem and compares `A` with `B^T`.
//!
//! ```bash
//! cargo run --release --example dense_oracle
//! ```

use pat_adjoint::config::{ArrayKind, Experiment, ExperimentConfig, Scale};
use pat_adjoint::experiments::run_oracle;
use pat_adjoint::verify::ORACLE_BUDGET;

fn main() -> pat_adjoint::Result<()> {
    let base = ExperimentConfig::preset(Scale::Desk, Experiment::Oracle);

    let mut offgrid = base.clone();
    offgrid.array.kind = ArrayKind::Circular;
    offgrid.array.n_receivers = 4;
    offgrid.array.radius = 5.3e-3;
    offgrid.array.half_length = 1.2e-3;
    offgrid.array.nodes = 3;

    let mut with_pml = base.clone();
    with_pml.grid.pml_size = 6;

    println!("{:<28} {:>8} {:>6} {:>14}", "case", "rows", "cols", "|A-B^T|/|A|");
    for (name, cfg) in [
        ("on-grid, no PML", &base),
        ("off-grid, no PML", &offgrid),
        ("on-grid, 6-point PML", &with_pml),
    ] {
        let (_, _, s) = run_oracle(cfg, ORACLE_BUDGET)?;
        println!("{name:<28} {:>8} {:>6} {:>14.3e}", s.rows, s.cols, s.discrepancy);
    }
    Ok(())
}
