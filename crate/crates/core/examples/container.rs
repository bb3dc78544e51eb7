//! Writes a phantom and a set of traces to the binary container format,
//! reads them back and checks that every bit survived.
//!
//! ```bash
//! cargo run --release --example container -- /tmp/pat-demo
//! ```

use std::path::PathBuf;

use pat_adjoint::config::{Experiment, ExperimentConfig, Scale};
use pat_adjoint::container::{boundary_container, boundary_from_container, Container};
use pat_adjoint::experiments::make_phantom;
use pat_adjoint::operators::BoundaryData;

fn main() -> pat_adjoint::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "target/pat-demo".into()).into();
    std::fs::create_dir_all(&dir).map_err(|source| pat_adjoint::Error::Io { path: dir.clone(), source })?;

    let cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Simulation);
    let grid = cfg.build_grid()?;
    let phantom = make_phantom(&cfg, &grid)?;
    let mut c = pat_adjoint::container::image_container(&phantom, "Pa")?;
    c.set_meta("config_digest", cfg.digest());
    let path = dir.join("phantom.pat");
    c.write(&path)?;
    let back = Container::read(&path)?;
    let same = back.require("p0")?.data.iter().zip(&phantom.values).all(|(a, b)| a.to_bits() == b.to_bits());
    println!("{}: {} bytes, bit-exact {same}", path.display(), c.to_bytes().len());
    for (k, v) in &back.metadata {
        println!("  {k} = {v}");
    }

    let mut traces = BoundaryData::zeros(3, &grid);
    for (i, v) in traces.values.iter_mut().enumerate() {
        *v = (i as f64).sqrt() * if i % 2 == 0 { 1.0 } else { -f64::MIN_POSITIVE };
    }
    let path = dir.join("traces.pat");
    boundary_container(&traces, &grid)?.write(&path)?;
    let back = boundary_from_container(&Container::read(&path)?)?;
    println!("{}: {} x {} samples, identical {}", path.display(), back.n_nodes, back.n_times, back == traces);
    Ok(())
}
