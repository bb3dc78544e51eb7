//! Experiment configuration: TOML with one table per block, plus built-in
//! presets at desk and full scale.
//!
//! ```toml
//! [grid]
//! dims = [128, 128]
//! dx = 4e-4
//! pml_size = 20
//! nt = 600
//! dt = 8e-8
//!
//! [array]
//! kind = "ongrid"
//! sides = ["left", "bottom", "right"]
//! inset = 2
//! ```
//!
//! Every block except `[grid]` and `[array]` has defaults.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::container::Container;
use crate::error::{Error, Result};
use crate::grid::{Grid, Medium};
use crate::operators::{PatOperator, SmootherSpec};
use crate::phantom::VesselSpec;
use crate::receivers::{build_circular_array, build_ongrid_lines, KernelSpec, Point, ReceiverArray, Side};
use crate::recon::ReconConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub medium: MediumConfig,
    pub array: ArrayConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub phantom: PhantomConfig,
    #[serde(default)]
    pub recon: ReconConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub seeds: SeedConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dims: [usize; 2],
    pub dx: f64,
    #[serde(default = "default_pml")]
    pub pml_size: usize,
    #[serde(default = "default_alpha")]
    pub pml_alpha_max: f64,
    pub nt: usize,
    pub dt: f64,
}

fn default_pml() -> usize {
    20
}

fn default_alpha() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumConfig {
    /// Homogeneous sound speed, m/s; ignored when `c_file` is set.
    pub c: f64,
    /// Homogeneous density, kg/m^2; ignored when `rho0_file` is set.
    pub rho0: f64,
    pub c_ref: Option<f64>,
    /// Container with a full-grid array named `c`.
    pub c_file: Option<PathBuf>,
    /// Container with a full-grid array named `rho0`.
    pub rho0_file: Option<PathBuf>,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            c: 1500.0,
            rho0: 1000.0,
            c_ref: None,
            c_file: None,
            rho0_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    /// Two-node segments between neighbouring grid points, exact delta.
    Ongrid,
    /// Tangent segments on a circle, band-limited delta.
    Circular,
    /// The array stored with a simulated dataset, resampled to `nodes`.
    Dataset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub kind: ArrayKind,
    pub sides: Vec<String>,
    pub inset: usize,
    /// Keeps an evenly spaced subset of this many on-grid receivers.
    pub max_receivers: Option<usize>,
    pub n_receivers: usize,
    pub radius: f64,
    pub half_length: f64,
    pub nodes: usize,
    pub center: Point,
    /// Kernel threshold as a multiple of `1 / b^2`.
    pub eps_factor: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        ArrayConfig {
            kind: ArrayKind::Ongrid,
            sides: vec!["left".into(), "bottom".into(), "right".into()],
            inset: 2,
            max_receivers: None,
            n_receivers: 32,
            radius: 0.0,
            half_length: 0.0,
            nodes: 2,
            center: [0.0, 0.0],
            eps_factor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    /// Kernel bandwidth as a multiple of `dx`.
    pub bandwidth_factor: f64,
    pub smoother: SmootherSpec,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            bandwidth_factor: 1.0,
            smoother: SmootherSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    Disc,
    Vessel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomConfig {
    pub kind: PhantomKind,
    pub radius: f64,
    pub center: Point,
    pub range: (f64, f64),
    pub n_branches: usize,
    pub width_range: (f64, f64),
    pub max_radius: f64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            kind: PhantomKind::Disc,
            radius: 18e-3,
            center: [0.0, 0.0],
            range: (0.0, 1.0),
            n_branches: 8,
            width_range: (0.15e-3, 0.45e-3),
            max_radius: 8e-3,
        }
    }
}

impl PhantomConfig {
    pub fn vessel_spec(&self) -> VesselSpec {
        VesselSpec {
            n_branches: self.n_branches,
            width_range: self.width_range,
            max_radius: self.max_radius,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Noise level relative to each trace's peak; absent means noiseless.
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub phantom: u64,
    pub noise: u64,
    /// Trial `k` of the dot-product test uses seed `trials + k`.
    pub trials: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        SeedConfig {
            phantom: 1,
            noise: 2,
            trials: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            _ => Err(Error::Config(format!("unknown preset `{s}` (expected desk or full)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Dot-product test with on-grid receivers on three sides.
    Ongrid,
    /// Dot-product test with a circular array of off-grid line receivers.
    Offgrid,
    /// Measurement simulation on the fine grid.
    Simulation,
    /// Reconstruction on the coarse grid.
    Reconstruction,
    /// Tiny problem for the dense transpose oracle.
    Oracle,
}

/// Desk-scale reconstruction extent: the full-scale 512 x 43 um field.
const RECON_EXTENT: f64 = 512.0 * 43e-6;
/// Full-scale measurement duration.
const RECON_DURATION: f64 = 20.75e-6;

impl ExperimentConfig {
    pub fn preset(scale: Scale, experiment: Experiment) -> Self {
        match (experiment, scale) {
            (Experiment::Ongrid, s) => Self::ongrid(s),
            (Experiment::Offgrid, s) => Self::offgrid(s),
            (Experiment::Simulation, s) => Self::simulation(s),
            (Experiment::Reconstruction, s) => Self::reconstruction(s),
            (Experiment::Oracle, _) => Self::oracle(),
        }
    }

    fn ongrid(scale: Scale) -> Self {
        let (n, nt, radius) = match scale {
            Scale::Desk => (128, 600, 18e-3),
            Scale::Full => (256, 1207, 36e-3),
        };
        ExperimentConfig {
            grid: GridConfig {
                dims: [n, n],
                dx: 0.4e-3,
                pml_size: 20,
                pml_alpha_max: 2.0,
                nt,
                dt: 0.08e-6,
            },
            medium: MediumConfig::default(),
            array: ArrayConfig::default(),
            operator: OperatorConfig::default(),
            phantom: PhantomConfig {
                radius,
                ..PhantomConfig::default()
            },
            recon: ReconConfig::default(),
            noise: NoiseConfig::default(),
            seeds: SeedConfig::default(),
        }
    }

    fn offgrid(scale: Scale) -> Self {
        let base = Self::ongrid(scale);
        let (n_receivers, radius) = match scale {
            Scale::Desk => (32, 22.5e-3),
            Scale::Full => (64, 45e-3),
        };
        ExperimentConfig {
            array: ArrayConfig {
                kind: ArrayKind::Circular,
                n_receivers,
                radius,
                half_length: 2e-3,
                nodes: 40,
                eps_factor: 0.01,
                ..ArrayConfig::default()
            },
            ..base
        }
    }

    fn simulation(scale: Scale) -> Self {
        let (n, dt, nt, n_receivers, nodes) = match scale {
            Scale::Desk => {
                let dx = RECON_EXTENT / 160.0;
                let dt = 0.3 * dx / 1500.0;
                (160, dt, (RECON_DURATION / dt).round() as usize, 128, 4)
            }
            Scale::Full => (512, 5.733e-9, 3621, 256, 20),
        };
        ExperimentConfig {
            grid: GridConfig {
                dims: [n, n],
                dx: RECON_EXTENT / n as f64,
                pml_size: 20,
                pml_alpha_max: 2.0,
                nt,
                dt,
            },
            medium: MediumConfig::default(),
            array: ArrayConfig {
                kind: ArrayKind::Circular,
                n_receivers,
                radius: 9e-3,
                half_length: 0.1e-3,
                nodes,
                eps_factor: 0.001,
                ..ArrayConfig::default()
            },
            operator: OperatorConfig::default(),
            phantom: PhantomConfig {
                kind: PhantomKind::Vessel,
                ..PhantomConfig::default()
            },
            recon: ReconConfig {
                support_radius: Some(8.5e-3),
                ..ReconConfig::default()
            },
            noise: NoiseConfig { snr_db: Some(30.0) },
            seeds: SeedConfig::default(),
        }
    }

    fn reconstruction(scale: Scale) -> Self {
        let sim = Self::simulation(scale);
        let (n, nodes) = match scale {
            Scale::Desk => (140, 3),
            Scale::Full => (440, 16),
        };
        ExperimentConfig {
            grid: GridConfig {
                dims: [n, n],
                dx: RECON_EXTENT / n as f64,
                ..sim.grid.clone()
            },
            array: ArrayConfig {
                kind: ArrayKind::Dataset,
                nodes,
                eps_factor: 0.005,
                ..sim.array.clone()
            },
            ..sim
        }
    }

    fn oracle() -> Self {
        ExperimentConfig {
            grid: GridConfig {
                dims: [16, 16],
                dx: 1e-3,
                pml_size: 0,
                pml_alpha_max: 2.0,
                nt: 40,
                dt: 0.2e-6,
            },
            array: ArrayConfig {
                sides: vec!["left".into(), "right".into()],
                inset: 3,
                max_receivers: Some(4),
                ..ArrayConfig::default()
            },
            phantom: PhantomConfig {
                radius: 4e-3,
                ..PhantomConfig::default()
            },
            ..Self::ongrid(Scale::Desk)
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// FNV-1a hash of the resolved TOML, as 16 hex digits.
    pub fn digest(&self) -> String {
        let hash = self
            .to_toml()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        format!("{hash:016x}")
    }

    pub fn validate(&self) -> Result<()> {
        self.build_grid()?;
        self.recon.validate()?;
        self.operator.smoother.validate()?;
        self.sides()?;
        if !(self.operator.bandwidth_factor > 0.0) {
            return Err(Error::Config("bandwidth_factor must be positive".into()));
        }
        if !(self.array.eps_factor >= 0.0) {
            return Err(Error::Config("eps_factor must be non-negative".into()));
        }
        Ok(())
    }

    pub fn sides(&self) -> Result<Vec<Side>> {
        self.array.sides.iter().map(|s| s.parse()).collect()
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.dims, g.dx, g.pml_size, g.pml_alpha_max, g.nt, g.dt)
    }

    pub fn build_medium(&self, grid: &Grid) -> Result<Medium> {
        let m = &self.medium;
        let field = |file: &Option<PathBuf>, name: &str, value: f64| -> Result<Vec<f64>> {
            match file {
                None => Ok(vec![value; grid.total_len()]),
                Some(path) => {
                    let c = Container::read(path)?;
                    let a = c.require(name)?;
                    if a.data.len() != grid.total_len() {
                        return Err(Error::Shape(format!(
                            "`{name}` in {} has {} values, the full grid has {}",
                            path.display(),
                            a.data.len(),
                            grid.total_len()
                        )));
                    }
                    Ok(a.data.clone())
                }
            }
        };
        Medium::new(
            grid,
            field(&m.c_file, "c", m.c)?,
            field(&m.rho0_file, "rho0", m.rho0)?,
            m.c_ref,
        )
    }

    /// Builds the receiver array; `dataset` supplies the stored array for
    /// [`ArrayKind::Dataset`].
    pub fn build_array(&self, grid: &Grid, dataset: Option<&ReceiverArray>) -> Result<ReceiverArray> {
        let a = &self.array;
        match a.kind {
            ArrayKind::Ongrid => {
                let mut array = build_ongrid_lines(grid, &self.sides()?, a.inset)?;
                if let Some(keep) = a.max_receivers.filter(|&k| k > 0 && k < array.receivers.len()) {
                    let n = array.receivers.len();
                    let picked = (0..keep).map(|k| array.receivers[(2 * k + 1) * n / (2 * keep)].clone()).collect();
                    array.receivers = picked;
                }
                Ok(array)
            }
            ArrayKind::Circular => build_circular_array(a.n_receivers, a.radius, a.half_length, a.nodes, a.center),
            ArrayKind::Dataset => dataset
                .ok_or_else(|| Error::Config("array kind `dataset` needs an input dataset".into()))?
                .resampled(a.nodes),
        }
    }

    pub fn kernel_spec(&self, grid: &Grid) -> KernelSpec {
        let b = self.operator.bandwidth_factor * grid.dx;
        KernelSpec {
            b,
            eps: self.array.eps_factor / (b * b),
        }
    }

    pub fn build_operator(&self, dataset_array: Option<&ReceiverArray>) -> Result<PatOperator> {
        let grid = self.build_grid()?;
        let medium = self.build_medium(&grid)?;
        let array = self.build_array(&grid, dataset_array)?;
        let kernel = self.kernel_spec(&grid);
        PatOperator::new(grid, medium, array, kernel, self.operator.smoother)
    }
}
