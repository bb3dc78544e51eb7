//! End-to-end runs shared by the CLI, the examples and the acceptance
//! suite: dot-product trials, measurement simulation, reconstruction from
//! a stored dataset, and the dense oracle.

use rayon::prelude::*;

use crate::config::{ExperimentConfig, PhantomKind};
use crate::container::{boundary_container, boundary_from_container, image_container, Container};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{BoundaryData, Image, PatOperator};
use crate::phantom::{add_awgn, make_disc_phantom, make_vessel_phantom};
use crate::receivers::ReceiverArray;
use crate::recon::{reconstruct, ReconResult};
use crate::verify::{inner_product_test, DenseOracle, InnerProductReport};

/// Phantom described by the `[phantom]` block.
pub fn make_phantom(cfg: &ExperimentConfig, grid: &Grid) -> Result<Image> {
    let p = &cfg.phantom;
    match p.kind {
        PhantomKind::Disc => make_disc_phantom(grid, p.radius, p.center, p.range, cfg.seeds.phantom),
        PhantomKind::Vessel => make_vessel_phantom(grid, cfg.seeds.phantom, &p.vessel_spec()),
    }
}

#[derive(Debug, Clone)]
pub struct AdjointSuite {
    pub reports: Vec<InnerProductReport>,
}

impl AdjointSuite {
    pub fn mean_rd(&self) -> f64 {
        self.reports.iter().map(|r| r.rd_percent).sum::<f64>() / self.reports.len().max(1) as f64
    }

    pub fn max_rd(&self) -> f64 {
        self.reports.iter().map(|r| r.rd_percent).fold(0.0, f64::max)
    }
}

/// Runs `trials` dot-product tests; the random image fills the phantom disc.
pub fn adjoint_suite(cfg: &ExperimentConfig, trials: usize) -> Result<AdjointSuite> {
    let op = cfg.build_operator(None)?;
    adjoint_suite_with(&op, cfg, trials)
}

pub fn adjoint_suite_with(op: &PatOperator, cfg: &ExperimentConfig, trials: usize) -> Result<AdjointSuite> {
    let digest = cfg.digest();
    let reports = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            inner_product_test(op, cfg.seeds.trials + k, cfg.phantom.radius, cfg.phantom.center).map(|mut r| {
                r.digest = digest.clone();
                r
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdjointSuite { reports })
}

pub struct Simulation {
    pub op: PatOperator,
    pub phantom: Image,
    pub clean: BoundaryData,
    pub measured: BoundaryData,
}

impl Simulation {
    /// Measured traces plus everything a reconstruction needs to check its
    /// discretization against this one.
    pub fn to_container(&self, cfg: &ExperimentConfig) -> Result<Container> {
        let mut c = boundary_container(&self.measured, &self.op.grid)?;
        c.set_meta("config_digest", cfg.digest());
        c.set_meta("noise_seed", cfg.seeds.noise);
        c.set_meta("phantom_seed", cfg.seeds.phantom);
        c.set_meta("snr_db", cfg.noise.snr_db.map_or("none".to_string(), |s| s.to_string()));
        c.set_meta("nodes_per_receiver", nodes_per_receiver(&self.op.array));
        c.set_meta("receivers", self.op.array.to_text());
        Ok(c)
    }

    pub fn phantom_container(&self, cfg: &ExperimentConfig) -> Result<Container> {
        let mut c = image_container(&self.phantom, "Pa")?;
        c.set_meta("config_digest", cfg.digest());
        c.set_meta("seed", cfg.seeds.phantom);
        Ok(c)
    }
}

fn nodes_per_receiver(array: &ReceiverArray) -> usize {
    array.receivers.first().map_or(0, |r| r.nodes.len())
}

/// Forward simulation of the configured phantom, with optional noise.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    let op = cfg.build_operator(None)?;
    let phantom = make_phantom(cfg, &op.grid)?;
    simulate_with(op, phantom, cfg)
}

pub fn simulate_with(op: PatOperator, phantom: Image, cfg: &ExperimentConfig) -> Result<Simulation> {
    let clean = op.forward(&phantom)?;
    let measured = add_awgn(&clean, cfg.noise.snr_db, cfg.seeds.noise)?;
    Ok(Simulation {
        op,
        phantom,
        clean,
        measured,
    })
}

/// A dataset loaded for reconstruction.
pub struct Dataset {
    pub data: BoundaryData,
    pub array: ReceiverArray,
    pub dx: f64,
    pub nodes_per_receiver: usize,
}

impl Dataset {
    pub fn from_container(c: &Container) -> Result<Self> {
        let array = ReceiverArray::from_text(
            c.meta("receivers")
                .ok_or_else(|| Error::Format("dataset has no receiver geometry".into()))?,
        )?;
        Ok(Dataset {
            data: boundary_from_container(c)?,
            nodes_per_receiver: c.meta_parse("nodes_per_receiver")?,
            dx: c.meta_parse("dx")?,
            array,
        })
    }
}

/// Builds the reconstruction operator for a dataset, refusing to repeat the
/// simulation's discretization unless `allow_inverse_crime` is set.
pub fn reconstruction_operator(cfg: &ExperimentConfig, ds: &Dataset, allow_inverse_crime: bool) -> Result<PatOperator> {
    let op = cfg.build_operator(Some(&ds.array))?;
    let same_dx = (op.grid.dx - ds.dx).abs() <= 1e-12 * ds.dx;
    let same_nodes = nodes_per_receiver(&op.array) == ds.nodes_per_receiver;
    if same_dx && same_nodes && !allow_inverse_crime {
        return Err(Error::Config(
            "reconstruction grid spacing and receiver node count both equal the simulation's \
             (inverse crime); change one or pass --allow-inverse-crime"
                .into(),
        ));
    }
    if ds.data.n_times != op.grid.nt + 1 || (ds.data.dt - op.grid.dt).abs() > 1e-12 * op.grid.dt {
        return Err(Error::Config(format!(
            "dataset time axis ({} samples, dt {:e}) differs from the configured one ({} samples, dt {:e})",
            ds.data.n_times,
            ds.data.dt,
            op.grid.nt + 1,
            op.grid.dt
        )));
    }
    Ok(op)
}

/// Reconstruction data must live on the reconstruction array's nodes. The
/// arrays share receivers but not nodes, so each receiver's trace is
/// resampled linearly along the receiver.
pub fn transfer_traces(data: &BoundaryData, from: &ReceiverArray, to: &ReceiverArray) -> Result<BoundaryData> {
    if from.receivers.len() != to.receivers.len() {
        return Err(Error::Shape("arrays have different receiver counts".into()));
    }
    let n_times = data.n_times;
    let mut out = BoundaryData {
        n_nodes: to.n_nodes(),
        n_times,
        dt: data.dt,
        values: Vec::with_capacity(to.n_nodes() * n_times),
    };
    let mut src_base = 0;
    for (rf, rt) in from.receivers.iter().zip(&to.receivers) {
        let nf = rf.nodes.len();
        let nt_nodes = rt.nodes.len();
        for k in 0..nt_nodes {
            let s = if nt_nodes == 1 { 0.0 } else { k as f64 / (nt_nodes - 1) as f64 };
            let pos = s * (nf - 1) as f64;
            let i0 = (pos.floor() as usize).min(nf - 1);
            let i1 = (i0 + 1).min(nf - 1);
            let w = pos - i0 as f64;
            let a = &data.values[(src_base + i0) * n_times..(src_base + i0 + 1) * n_times];
            let b = &data.values[(src_base + i1) * n_times..(src_base + i1 + 1) * n_times];
            out.values.extend(a.iter().zip(b).map(|(x, y)| (1.0 - w) * x + w * y));
        }
        src_base += nf;
    }
    Ok(out)
}

/// Loads a dataset, maps its traces onto the reconstruction array and runs
/// the projected descent.
pub fn reconstruct_dataset(
    cfg: &ExperimentConfig,
    container: &Container,
    allow_inverse_crime: bool,
    truth: Option<&Image>,
) -> Result<(PatOperator, ReconResult)> {
    let ds = Dataset::from_container(container)?;
    let op = reconstruction_operator(cfg, &ds, allow_inverse_crime)?;
    let measured = transfer_traces(&ds.data, &ds.array, &op.array)?;
    let result = reconstruct(&op, &measured, &cfg.recon, truth)?;
    Ok((op, result))
}

pub struct OracleSummary {
    pub discrepancy: f64,
    pub a_max: f64,
    pub rows: usize,
    pub cols: usize,
}

pub fn run_oracle(cfg: &ExperimentConfig, budget: usize) -> Result<(PatOperator, DenseOracle, OracleSummary)> {
    let op = cfg.build_operator(None)?;
    let oracle = DenseOracle::assemble(&op, budget)?;
    let summary = OracleSummary {
        discrepancy: oracle.discrepancy(),
        a_max: oracle.a_max(),
        rows: oracle.rows,
        cols: oracle.cols,
    };
    Ok((op, oracle, summary))
}
