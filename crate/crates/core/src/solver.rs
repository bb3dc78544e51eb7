//! Time stepping of the coupled first-order acoustic system on a grid
//! staggered in space and time.
//!
//! Velocity `u^z` lives at `t + 1/2` and at `+dx/2` along its own axis;
//! split densities `rho^z` and pressure `p` live at integer times on the
//! regular points. Per step:
//!
//! ```text
//! u^z   <- L^z [ L^z u^z   - dt / rho0 * D+_z p   ] + dt S_f^z(t)
//! rho^z <- L^z [ L^z rho^z - dt * rho0 * D-_z u^z ] + dt S_m^z(t + 1/2)
//! p     <- c^2 sum_z rho^z
//! ```
//!
//! where `L^z` is the PML multiplier and `D+`/`D-` are the forward and
//! backward staggered k-space derivatives.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::{derivative_symbol, pml_profile, Grid, Medium, PmlProfile, Shift, DIM};

pub type VectorField = [Vec<f64>; DIM];

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub u: VectorField,
    pub rho: VectorField,
    pub p: Vec<f64>,
}

impl WaveState {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.total_len();
        WaveState {
            u: std::array::from_fn(|_| vec![0.0; n]),
            rho: std::array::from_fn(|_| vec![0.0; n]),
            p: vec![0.0; n],
        }
    }
}

/// Mass and force sources driving the system. Both default to absent.
pub trait SourceSchedule {
    /// Adds `dt * S_f^z(t)` to the velocity components.
    fn add_force(&self, _t: i64, _dt: f64, _u: &mut VectorField) {}

    /// Adds `dt * S_m^z(t + 1/2)` to the split densities.
    fn add_mass(&self, _t: i64, _dt: f64, _rho: &mut VectorField) {}
}

/// No sources at all.
pub struct Silent;

impl SourceSchedule for Silent {}

/// Pressure at integer time `t`, with its forward-staggered gradient.
pub struct Snapshot<'a> {
    pub t: usize,
    pub p: &'a [f64],
    /// `D+_z p`, located at `+dx/2` along axis `z`.
    pub grad: &'a VectorField,
}

pub trait Probe {
    fn record(&mut self, snap: &Snapshot<'_>);
}

/// Keeps full pressure snapshots at selected time steps.
pub struct PressureRecorder {
    times: Vec<usize>,
    pub frames: Vec<(usize, Vec<f64>)>,
}

impl PressureRecorder {
    pub fn new(times: impl IntoIterator<Item = usize>) -> Self {
        PressureRecorder {
            times: times.into_iter().collect(),
            frames: Vec::new(),
        }
    }

    pub fn frame(&self, t: usize) -> Option<&[f64]> {
        self.frames
            .iter()
            .find(|(ft, _)| *ft == t)
            .map(|(_, f)| f.as_slice())
    }
}

impl Probe for PressureRecorder {
    fn record(&mut self, snap: &Snapshot<'_>) {
        if self.times.contains(&snap.t) {
            self.frames.push((snap.t, snap.p.to_vec()));
        }
    }
}

/// Records pressure at fixed flat grid indices for every time step.
pub struct PointProbe {
    indices: Vec<usize>,
    /// `traces[k][t]` is the pressure at `indices[k]`.
    pub traces: Vec<Vec<f64>>,
}

impl PointProbe {
    pub fn new(indices: Vec<usize>) -> Self {
        let traces = vec![Vec::new(); indices.len()];
        PointProbe { indices, traces }
    }
}

impl Probe for PointProbe {
    fn record(&mut self, snap: &Snapshot<'_>) {
        for (trace, &i) in self.traces.iter_mut().zip(&self.indices) {
            trace.push(snap.p[i]);
        }
    }
}

pub struct WaveSolver<'a> {
    grid: &'a Grid,
    medium: &'a Medium,
    pml: [PmlProfile; DIM],
    fft: Fft2,
    grad_symbols: [Vec<Complex64>; DIM],
    div_symbols: [Vec<Complex64>; DIM],
    spec: Vec<Complex64>,
    work: Vec<Complex64>,
    grad: VectorField,
    div: VectorField,
}

impl<'a> WaveSolver<'a> {
    pub fn new(grid: &'a Grid, medium: &'a Medium) -> Result<Self> {
        let n = grid.total_len();
        if medium.c.len() != n || medium.rho0.len() != n {
            return Err(Error::Shape("medium does not match grid".into()));
        }
        let [nx, ny] = grid.total_dims();
        let c_dt = Some(medium.c_ref * grid.dt);
        Ok(WaveSolver {
            grid,
            medium,
            pml: std::array::from_fn(|a| pml_profile(grid, a, medium.c_ref)),
            fft: Fft2::new(nx, ny),
            grad_symbols: std::array::from_fn(|a| derivative_symbol(grid, a, Shift::Forward, c_dt)),
            div_symbols: std::array::from_fn(|a| derivative_symbol(grid, a, Shift::Backward, c_dt)),
            spec: vec![Complex64::new(0.0, 0.0); n],
            work: vec![Complex64::new(0.0, 0.0); n],
            grad: std::array::from_fn(|_| vec![0.0; n]),
            div: std::array::from_fn(|_| vec![0.0; n]),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn pml(&self) -> &[PmlProfile; DIM] {
        &self.pml
    }

    /// Advances `state` from time `t` to `t + 1`.
    pub fn step(
        &mut self,
        state: &mut WaveState,
        schedule: &dyn SourceSchedule,
        t: i64,
    ) -> Result<()> {
        let mut grad = std::mem::take(&mut self.grad);
        gradient_into(self, &state.p, &mut grad);
        let res = self.advance(state, &grad, schedule, t);
        self.grad = grad;
        res
    }

    /// Runs the full loop `t = -1 .. nt-1` from a quiescent state and feeds
    /// every probe the pressure at `t = 0 ..= nt`. Returns the final state.
    pub fn run(
        &mut self,
        schedule: &dyn SourceSchedule,
        probes: &mut [&mut dyn Probe],
    ) -> Result<WaveState> {
        let nt = self.grid.nt as i64;
        let mut state = WaveState::zeros(self.grid);
        let mut grad = std::mem::take(&mut self.grad);
        for g in grad.iter_mut() {
            g.fill(0.0);
        }
        // p(-1) = 0, so the first gradient is zero.
        let mut res = self.advance(&mut state, &grad, schedule, -1);
        let mut t = 0;
        while res.is_ok() && t <= nt {
            gradient_into(self, &state.p, &mut grad);
            let snap = Snapshot {
                t: t as usize,
                p: &state.p,
                grad: &grad,
            };
            for probe in probes.iter_mut() {
                probe.record(&snap);
            }
            if t < nt {
                res = self.advance(&mut state, &grad, schedule, t);
            }
            t += 1;
        }
        self.grad = grad;
        res.map(|_| state)
    }

    fn advance(
        &mut self,
        state: &mut WaveState,
        grad: &VectorField,
        schedule: &dyn SourceSchedule,
        t: i64,
    ) -> Result<()> {
        let dt = self.grid.dt;
        let ny = self.grid.total_dims()[1];
        let medium = self.medium;
        let rho0 = &medium.rho0;
        let [px, py] = &self.pml;

        for (idx, u) in state.u[0].iter_mut().enumerate() {
            let l = px.staggered[idx / ny];
            *u = l * (l * *u - dt / rho0[idx] * grad[0][idx]);
        }
        for (idx, u) in state.u[1].iter_mut().enumerate() {
            let l = py.staggered[idx % ny];
            *u = l * (l * *u - dt / rho0[idx] * grad[1][idx]);
        }
        schedule.add_force(t, dt, &mut state.u);

        let mut div = std::mem::take(&mut self.div);
        divergence_parts_into(self, &state.u, &mut div);
        let [px, py] = &self.pml;
        for (idx, r) in state.rho[0].iter_mut().enumerate() {
            let l = px.regular[idx / ny];
            *r = l * (l * *r - dt * rho0[idx] * div[0][idx]);
        }
        for (idx, r) in state.rho[1].iter_mut().enumerate() {
            let l = py.regular[idx % ny];
            *r = l * (l * *r - dt * rho0[idx] * div[1][idx]);
        }
        self.div = div;
        schedule.add_mass(t, dt, &mut state.rho);

        let c = &self.medium.c;
        let mut finite = true;
        for (idx, p) in state.p.iter_mut().enumerate() {
            *p = c[idx] * c[idx] * (state.rho[0][idx] + state.rho[1][idx]);
            finite &= p.is_finite();
        }
        if !finite || !state.u.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::Unstable {
                step: t,
                cfl: self.medium.cfl(self.grid),
            });
        }
        Ok(())
    }
}

/// `D+_x p` and `D+_y p` from one forward and one inverse transform: both
/// results are real, so they travel as the real and imaginary parts of a
/// single inverse FFT.
fn gradient_into(s: &mut WaveSolver<'_>, p: &[f64], out: &mut VectorField) {
    for (b, &v) in s.spec.iter_mut().zip(p) {
        *b = Complex64::new(v, 0.0);
    }
    s.fft.forward(&mut s.spec);
    let [gx, gy] = &s.grad_symbols;
    for (k, w) in s.work.iter_mut().enumerate() {
        *w = gx[k] * s.spec[k] + Complex64::i() * gy[k] * s.spec[k];
    }
    s.fft.inverse(&mut s.work);
    let [ox, oy] = out;
    for ((w, a), b) in s.work.iter().zip(ox.iter_mut()).zip(oy.iter_mut()) {
        *a = w.re;
        *b = w.im;
    }
}

/// `D-_x u^x` and `D-_y u^y` (not summed), packing the two real inputs
/// into one complex transform and separating them by Hermitian symmetry.
fn divergence_parts_into(s: &mut WaveSolver<'_>, u: &VectorField, out: &mut VectorField) {
    let [nx, ny] = s.grid.total_dims();
    for ((b, &a), &c) in s.spec.iter_mut().zip(&u[0]).zip(&u[1]) {
        *b = Complex64::new(a, c);
    }
    s.fft.forward(&mut s.spec);
    let [dx_sym, dy_sym] = &s.div_symbols;
    for jy in 0..ny {
        let jy_neg = (ny - jy) % ny;
        for ix in 0..nx {
            let ix_neg = (nx - ix) % nx;
            let k = jy * nx + ix;
            let z = s.spec[k];
            let zc = s.spec[jy_neg * nx + ix_neg].conj();
            let ux = (z + zc) * 0.5;
            let uy = (z - zc) * Complex64::new(0.0, -0.5);
            s.work[k] = dx_sym[k] * ux + Complex64::i() * dy_sym[k] * uy;
        }
    }
    s.fft.inverse(&mut s.work);
    let [ox, oy] = out;
    for ((w, a), b) in s.work.iter().zip(ox.iter_mut()).zip(oy.iter_mut()) {
        *a = w.re;
        *b = w.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpectralDerivative;

    #[test]
    fn packed_transforms_match_separate_derivatives() {
        let g = Grid::new([12, 10], 1e-3, 3, 2.0, 5, 1e-7).unwrap();
        let m = Medium::homogeneous(&g, 1500.0, 1000.0).unwrap();
        let n = g.total_len();
        let f: Vec<f64> = (0..n).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
        let h: Vec<f64> = (0..n).map(|i| ((i * 104729) % 89) as f64 / 89.0 - 0.5).collect();
        let mut solver = WaveSolver::new(&g, &m).unwrap();
        let mut d = SpectralDerivative::new(&g, Some(&m));

        let mut grad: VectorField = [vec![0.0; n], vec![0.0; n]];
        gradient_into(&mut solver, &f, &mut grad);
        let gx = d.apply(&f, 0, Shift::Forward).unwrap();
        let gy = d.apply(&f, 1, Shift::Forward).unwrap();
        for i in 0..n {
            assert!((grad[0][i] - gx[i]).abs() < 1e-9);
            assert!((grad[1][i] - gy[i]).abs() < 1e-9);
        }

        let u: VectorField = [f.clone(), h.clone()];
        let mut div: VectorField = [vec![0.0; n], vec![0.0; n]];
        divergence_parts_into(&mut solver, &u, &mut div);
        let dxx = d.apply(&f, 0, Shift::Backward).unwrap();
        let dyy = d.apply(&h, 1, Shift::Backward).unwrap();
        for i in 0..n {
            assert!((div[0][i] - dxx[i]).abs() < 1e-9);
            assert!((div[1][i] - dyy[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn null_dynamics() {
        let g = Grid::new([16, 16], 1e-3, 4, 2.0, 20, 1e-7).unwrap();
        let m = Medium::homogeneous(&g, 1500.0, 1000.0).unwrap();
        let mut solver = WaveSolver::new(&g, &m).unwrap();
        let mut state = WaveState::zeros(&g);
        for t in -1..5 {
            solver.step(&mut state, &Silent, t).unwrap();
        }
        assert_eq!(state, WaveState::zeros(&g));
    }

    #[test]
    fn pressure_is_c2_times_density_sum() {
        struct Kick;
        impl SourceSchedule for Kick {
            fn add_mass(&self, t: i64, dt: f64, rho: &mut VectorField) {
                if t == -1 {
                    rho[0][200] += dt * 1e3;
                    rho[1][200] += dt * 2e3;
                }
            }
        }
        let g = Grid::new([16, 16], 1e-3, 2, 2.0, 20, 1e-7).unwrap();
        let c: Vec<f64> = (0..g.total_len()).map(|i| 1400.0 + (i % 7) as f64 * 20.0).collect();
        let m = Medium::new(&g, c, vec![1000.0; g.total_len()], None).unwrap();
        let mut solver = WaveSolver::new(&g, &m).unwrap();
        let mut state = WaveState::zeros(&g);
        for t in -1..6 {
            solver.step(&mut state, &Kick, t).unwrap();
            for i in 0..g.total_len() {
                let expected = m.c[i] * m.c[i] * (state.rho[0][i] + state.rho[1][i]);
                assert_eq!(state.p[i], expected);
            }
        }
    }

    #[test]
    fn instability_reports_cfl() {
        struct Blowup;
        impl SourceSchedule for Blowup {
            fn add_mass(&self, t: i64, _dt: f64, rho: &mut VectorField) {
                if t == 0 {
                    rho[0][5] = f64::NAN;
                }
            }
        }
        let g = Grid::new([8, 8], 1e-3, 0, 2.0, 3, 2e-7).unwrap();
        let m = Medium::homogeneous(&g, 1500.0, 1000.0).unwrap();
        let mut solver = WaveSolver::new(&g, &m).unwrap();
        match solver.run(&Blowup, &mut []) {
            Err(Error::Unstable { step, cfl }) => {
                assert_eq!(step, 0);
                assert!((cfl - 0.3).abs() < 1e-12);
            }
            other => panic!("expected instability, got {other:?}"),
        }
    }
}
