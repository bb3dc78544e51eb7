//! Generates the disc and vessel phantoms and adds white Gaussian noise at
//! a few SNRs to simulated traces. The SNR is relative to the peak of each
//! trace; the measured value is `20 log10(peak / std(noise))` averaged over
//! traces.
//!
//! ```bash
//! cargo run --release --example phantom_noise
//! ```

use pat_adjoint::config::{Experiment, ExperimentConfig, Scale};
use pat_adjoint::phantom::{add_awgn, make_disc_phantom, make_vessel_phantom};

fn main() -> pat_adjoint::Result<()> {
    let cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Simulation);
    let op = cfg.build_operator(None)?;
    let grid = &op.grid;

    let disc = make_disc_phantom(grid, 4e-3, [1e-3, -2e-3], (0.2, 1.0), 3)?;
    let lit = disc.values.iter().filter(|v| **v > 0.0).count();
    println!("disc: {lit} nonzero pixels, range [{:.3}, {:.3}]", min(&disc.values), max(&disc.values));

    for seed in 1..=3 {
        let vessel = make_vessel_phantom(grid, seed, &cfg.phantom.vessel_spec())?;
        let lit = vessel.values.iter().filter(|v| **v > 1e-3).count();
        println!("vessel seed {seed}: {lit} pixels above 1e-3, peak {:.3}", max(&vessel.values));
    }

    let phantom = make_vessel_phantom(grid, 1, &cfg.phantom.vessel_spec())?;
    let clean = op.forward(&phantom)?;
    for snr in [10.0, 30.0, 50.0] {
        let noisy = add_awgn(&clean, Some(snr), 7)?;
        let noise = noisy.axpy(-1.0, &clean);
        let measured = (0..clean.n_nodes)
            .map(|j| {
                let peak = clean.trace(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let n = noise.trace(j);
                let std = (n.iter().map(|v| v * v).sum::<f64>() / n.len() as f64).sqrt();
                20.0 * (peak / std).log10()
            })
            .sum::<f64>()
            / clean.n_nodes as f64;
        println!("target {snr:>4} dB -> measured {measured:.2} dB");
    }
    Ok(())
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().filter(|x| *x > 0.0).fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
