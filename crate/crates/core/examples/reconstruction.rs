//! Simulates noisy measurements of a vessel phantom on a fine grid, then
//! reconstructs on a coarser grid with fewer receiver nodes (so the
//! reconstruction never reuses the simulation's discretization).
//!
//! ```bash
//! cargo run --release --example reconstruction            # 30 dB noise
//! cargo run --release --example reconstruction -- clean   # noiseless
//! ```

use std::time::Instant;

use pat_adjoint::config::{Experiment, ExperimentConfig, Scale};
use pat_adjoint::experiments::{reconstruct_dataset, simulate};

fn main() -> pat_adjoint::Result<()> {
    let clean = std::env::args().nth(1).as_deref() == Some("clean");

    let mut sim_cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Simulation);
    if clean {
        sim_cfg.noise.snr_db = None;
    }
    let rec_cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Reconstruction);

    let start = Instant::now();
    let sim = simulate(&sim_cfg)?;
    println!(
        "simulated {} nodes x {} samples on {:?} (dx {:.1} um) in {:.1?}",
        sim.measured.n_nodes,
        sim.measured.n_times,
        sim.op.grid.dims,
        sim.op.grid.dx * 1e6,
        start.elapsed()
    );

    let dataset = sim.to_container(&sim_cfg)?;
    let start = Instant::now();
    let (op, result) = reconstruct_dataset(&rec_cfg, &dataset, false, Some(&sim.phantom))?;
    println!(
        "reconstructed on {:?} (dx {:.1} um), tau {:.3e}, {} iterations ({}) in {:.1?}",
        op.grid.dims,
        op.grid.dx * 1e6,
        result.tau,
        result.iterations,
        result.termination,
        start.elapsed()
    );
    let re = result.re_history.as_ref().expect("truth was supplied");
    println!("{:>5} {:>14} {:>8}", "iter", "objective", "RE %");
    for (n, (chi, e)) in result.objective_history.iter().zip(re).enumerate() {
        println!("{n:>5} {chi:>14.6e} {e:>8.2}");
    }
    Ok(())
}
