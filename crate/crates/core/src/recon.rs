//! Positivity-projected gradient descent on `chi(p) = ||F p - m||^2`.
//!
//! ```text
//! d^n     = -2 F* (F p^n - m)
//! p^(n+1) = max(p^n + tau d^n, 0)
//! stop when ||p^(n+1) - p^n|| / ||p^n|| < eta
//! ```
//!
//! The projection also zeroes the outermost ring of the image, which the
//! forward operator refuses as a source next to the PML, and, when a
//! support disc is configured, everything outside it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operators::{BoundaryData, Image, PatOperator};
use crate::verify::{boundary_inner, domain_inner, relative_error};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum StepLength {
    Fixed(f64),
    /// `0.9 / L`, with `L` a power-method estimate of `||2 F* F||`.
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl StepLength {
    pub const AUTO: StepLength = StepLength::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconConfig {
    pub tau: StepLength,
    pub eta: f64,
    pub max_iters: usize,
    pub power_iterations: usize,
    /// Seed of the power method's starting image.
    pub seed: u64,
    /// Iterates are confined to this disc about the origin (metres).
    pub support_radius: Option<f64>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        ReconConfig {
            tau: StepLength::AUTO,
            eta: 1e-3,
            max_iters: 50,
            power_iterations: 10,
            seed: 0,
            support_radius: None,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if let StepLength::Fixed(t) = self.tau {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("tau must be positive, got {t}")));
            }
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if self.support_radius.is_some_and(|r| !(r > 0.0)) {
            return Err(Error::Config("support_radius must be positive".into()));
        }
        if matches!(self.tau, StepLength::Auto(_)) && self.power_iterations == 0 {
            return Err(Error::Config("auto step length needs power_iterations >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Tolerance,
    /// The projected step left the iterate unchanged.
    Stationary,
    MaxIters,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::Stationary => "stationary",
            Termination::MaxIters => "max_iters",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ReconResult {
    pub p0: Image,
    /// `chi(p^0), ..., chi(p^n)`; one longer than `iterations`.
    pub objective_history: Vec<f64>,
    /// Relative error in percent per iterate, when a truth image was given.
    pub re_history: Option<Vec<f64>>,
    pub iterations: usize,
    pub termination: Termination,
    pub tau: f64,
}

impl ReconResult {
    pub fn history_csv(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .objective_history
            .iter()
            .enumerate()
            .map(|(n, chi)| {
                let mut row = vec![n.to_string(), format!("{chi:.10e}")];
                if let Some(re) = &self.re_history {
                    row.push(format!("{:.6}", re[n]));
                }
                row
            })
            .collect();
        let mut header = vec!["iteration", "objective"];
        if self.re_history.is_some() {
            header.push("relative_error_percent");
        }
        (header, rows)
    }
}

/// `chi = ||F p0 - m||^2` in the boundary inner product.
pub fn objective(op: &PatOperator, p0: &Image, measured: &BoundaryData) -> Result<f64> {
    let r = op.forward(p0)?.axpy(-1.0, measured);
    Ok(boundary_inner(&r, &r, op.weights()))
}

/// Objective and descent direction `-2 F* (F p0 - m)` from one forward and
/// one adjoint call.
pub fn objective_and_direction(op: &PatOperator, p0: &Image, measured: &BoundaryData) -> Result<(f64, Image)> {
    let r = op.forward(p0)?.axpy(-1.0, measured);
    let chi = boundary_inner(&r, &r, op.weights());
    Ok((chi, op.adjoint(&r)?.scaled(-2.0)))
}

pub fn step_direction(op: &PatOperator, p0: &Image, measured: &BoundaryData) -> Result<Image> {
    objective_and_direction(op, p0, measured).map(|(_, d)| d)
}

/// Power-method estimate of the largest eigenvalue of `2 F* F`.
/// The estimate is taken over images allowed by `support_radius`.
pub fn estimate_lipschitz(op: &PatOperator, iterations: usize, seed: u64, support_radius: Option<f64>) -> Result<f64> {
    let mask = support_mask(&op.grid, support_radius);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Image::zeros(&op.grid);
    for x in v.values.iter_mut() {
        *x = rng.random_range(0.0..1.0);
    }
    apply_mask(&mut v, &mask);
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let norm = domain_inner(&v, &v).sqrt();
        if norm == 0.0 {
            break;
        }
        v = v.scaled(1.0 / norm);
        let mut w = op.adjoint(&op.forward(&v)?)?.scaled(2.0);
        apply_mask(&mut w, &mask);
        lambda = domain_inner(&w, &v);
        v = w;
    }
    Ok(lambda)
}

/// Points an iterate may occupy: not on the outer ring, and inside the
/// support disc if one is set.
fn support_mask(grid: &crate::grid::Grid, radius: Option<f64>) -> Vec<bool> {
    let [nx, ny] = grid.dims;
    let mut mask = vec![true; nx * ny];
    for i in 0..nx {
        let x = grid.interior_coordinate(0, i as f64);
        for j in 0..ny {
            let y = grid.interior_coordinate(1, j as f64);
            let rim = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
            let outside = radius.is_some_and(|r| x.hypot(y) > r);
            mask[i * ny + j] = !(rim || outside);
        }
    }
    mask
}

fn apply_mask(img: &mut Image, mask: &[bool]) {
    for (v, &keep) in img.values.iter_mut().zip(mask) {
        if !keep {
            *v = 0.0;
        }
    }
}

/// Runs the projected descent from `p^0 = 0`. With `truth` given, the
/// relative error of every iterate is recorded.
pub fn reconstruct(
    op: &PatOperator,
    measured: &BoundaryData,
    config: &ReconConfig,
    truth: Option<&Image>,
) -> Result<ReconResult> {
    config.validate()?;
    let tau = match config.tau {
        StepLength::Fixed(t) => t,
        StepLength::Auto(_) => {
            let l = estimate_lipschitz(op, config.power_iterations, config.seed, config.support_radius)?;
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!("step length estimate failed (L = {l})")));
            }
            0.9 / l
        }
    };
    let error_of = |p: &Image| truth.map(|t| relative_error(p, t)).transpose();

    let mask = support_mask(&op.grid, config.support_radius);
    let mut p = Image::zeros(&op.grid);
    let mut objective_history = Vec::new();
    let mut re_history = truth.map(|_| Vec::new());
    let mut termination = Termination::MaxIters;
    let mut iterations = 0;
    while iterations < config.max_iters {
        let (chi, d) = objective_and_direction(op, &p, measured)?;
        if !chi.is_finite() {
            return Err(Error::NonFiniteObjective(iterations));
        }
        objective_history.push(chi);
        if let (Some(h), Some(e)) = (re_history.as_mut(), error_of(&p)?) {
            h.push(e);
        }
        let mut next = p.axpy(tau, &d);
        for v in next.values.iter_mut() {
            *v = v.max(0.0);
        }
        apply_mask(&mut next, &mask);
        iterations += 1;
        let change = next.axpy(-1.0, &p).norm();
        let prev_norm = p.norm();
        p = next;
        if change == 0.0 {
            termination = Termination::Stationary;
            break;
        }
        if prev_norm > 0.0 && change / prev_norm < config.eta {
            termination = Termination::Tolerance;
            break;
        }
    }
    let chi = objective(op, &p, measured)?;
    if !chi.is_finite() {
        return Err(Error::NonFiniteObjective(iterations));
    }
    objective_history.push(chi);
    if let (Some(h), Some(e)) = (re_history.as_mut(), error_of(&p)?) {
        h.push(e);
    }
    Ok(ReconResult {
        p0: p,
        objective_history,
        re_history,
        iterations,
        termination,
        tau,
    })
}
