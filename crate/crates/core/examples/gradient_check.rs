//! Finite-difference check of the descent direction on the oracle-sized
//! problem: central differences of the objective along random directions
//! against `<-d, v>`, over a sweep of step sizes.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use pat_adjoint::config::{Experiment, ExperimentConfig, Scale};
use pat_adjoint::experiments::make_phantom;
use pat_adjoint::operators::Image;
use pat_adjoint::phantom::make_disc_phantom;
use pat_adjoint::verify::gradient_check;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> pat_adjoint::Result<()> {
    let cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Oracle);
    let op = cfg.build_operator(None)?;
    let truth = make_phantom(&cfg, &op.grid)?;
    let measured = op.forward(&truth)?;
    let p = make_disc_phantom(&op.grid, 3e-3, [1e-3, 0.0], (0.0, 1.0), 5)?;

    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let [nx, ny] = op.grid.dims;
    for dir in 0..5 {
        let mut v = Image::zeros(&op.grid);
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                v.values[i * ny + j] = rng.random_range(-1.0..1.0);
            }
        }
        let (checks, best) = gradient_check(&op, &p, &measured, &v)?;
        let errs: Vec<String> = checks.iter().map(|c| format!("{:.0e}", c.rel_error)).collect();
        let b = checks[best];
        println!(
            "direction {dir}: <-d,v> = {:+.6e}, best h {:.0e} -> rel error {:.2e}   [{}]",
            b.analytic,
            b.h,
            b.rel_error,
            errs.join(" ")
        );
    }
    Ok(())
}
