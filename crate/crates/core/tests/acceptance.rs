//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any fails.

mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::time::{Duration, Instant};

use pat_adjoint::config::{Experiment, ExperimentConfig, Scale};
use pat_adjoint::container::{boundary_container, boundary_from_container, Container};
use pat_adjoint::experiments::{adjoint_suite, make_phantom, reconstruct_dataset, run_oracle, simulate};
use pat_adjoint::grid::{Grid, Medium};
use pat_adjoint::operators::{smooth, Image, PatOperator, SmootherSpec};
use pat_adjoint::phantom::{add_awgn, make_disc_phantom};
use pat_adjoint::receivers::{build_circular_array, build_ongrid_lines, delta_kernel, KernelSpec, Side};
use pat_adjoint::recon::StepLength;
use pat_adjoint::verify::{domain_inner, gradient_check, random_boundary_data, ORACLE_BUDGET};
use pat_adjoint::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{plane_wave_error, reentry_ratio, tiny_operator};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn main() {
    let criteria: [(&str, fn() -> Result<Verdict>); 7] = [
        ("1 on-grid dot-product test", ongrid_rd),
        ("2 off-grid dot-product test", offgrid_rd),
        ("3 dense transpose oracle", dense_oracle),
        ("4 gradient check", gradient),
        ("5 reconstruction", reconstruction),
        ("6 solver physics", physics),
        ("7 unit and property suites", units),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {name}: {detail} [{:.1?}]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn rd_suite(exp: Experiment, max_allowed: Option<f64>, budget: Duration) -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Scale::Desk, exp);
    let start = Instant::now();
    let suite = adjoint_suite(&cfg, 10)?;
    let elapsed = start.elapsed();
    let (mean, max) = (suite.mean_rd(), suite.max_rd());
    let pass = mean <= 1e-2 && max_allowed.is_none_or(|m| max <= m) && elapsed < budget;
    verdict(
        pass,
        format!("10 trials, mean RD {mean:.3e} %, max RD {max:.3e} %, {elapsed:.1?}"),
    )
}

fn ongrid_rd() -> Result<Verdict> {
    rd_suite(Experiment::Ongrid, Some(5e-2), Duration::from_secs(300))
}

fn offgrid_rd() -> Result<Verdict> {
    rd_suite(Experiment::Offgrid, None, Duration::from_secs(600))
}

fn dense_oracle() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Oracle);
    let start = Instant::now();
    let (op, _, s) = run_oracle(&cfg, ORACLE_BUDGET)?;
    let elapsed = start.elapsed();
    let shape = format!("{:?} grid, {} steps, {} receivers", op.grid.dims, op.grid.nt, op.array.receivers.len());
    verdict(
        s.discrepancy < 1e-10 && elapsed < Duration::from_secs(120),
        format!("{shape}, |A-B^T|max/|A|max = {:.3e}", s.discrepancy),
    )
}

fn gradient() -> Result<Verdict> {
    let cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Oracle);
    let op = cfg.build_operator(None)?;
    let measured = op.forward(&make_phantom(&cfg, &op.grid)?)?;
    let p = make_disc_phantom(&op.grid, 3e-3, [1e-3, 0.0], (0.0, 1.0), 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let [nx, ny] = op.grid.dims;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let mut v = Image::zeros(&op.grid);
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                v.values[i * ny + j] = rng.random_range(-1.0..1.0);
            }
        }
        let (checks, best) = gradient_check(&op, &p, &measured, &v)?;
        worst = worst.max(checks[best].rel_error);
    }
    verdict(worst < 1e-4, format!("5 directions, worst relative error at the best h {worst:.2e}"))
}

fn reconstruction() -> Result<Verdict> {
    let sim_cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Simulation);
    let rec_cfg = ExperimentConfig::preset(Scale::Desk, Experiment::Reconstruction);
    let mut clean_cfg = sim_cfg.clone();
    clean_cfg.noise.snr_db = None;
    let sim = simulate(&clean_cfg)?;
    let clean = sim.to_container(&clean_cfg)?;

    let noisy_traces = add_awgn(&sim.clean, sim_cfg.noise.snr_db, sim_cfg.seeds.noise)?;
    let mut noisy = clean.clone();
    for a in noisy.arrays.iter_mut().filter(|a| a.name == "traces") {
        a.data.clone_from(&noisy_traces.values);
    }
    noisy.set_meta("snr_db", sim_cfg.noise.snr_db.unwrap_or(f64::INFINITY));

    let (_, clean_res) = reconstruct_dataset(&rec_cfg, &clean, false, Some(&sim.phantom))?;
    // Same operator, same power-method seed: the auto step is reused.
    let mut noisy_cfg = rec_cfg.clone();
    noisy_cfg.recon.tau = StepLength::Fixed(clean_res.tau);
    let (_, noisy_res) = reconstruct_dataset(&noisy_cfg, &noisy, false, Some(&sim.phantom))?;

    let monotone = |h: &[f64]| h.windows(2).all(|w| w[1] <= w[0]);
    let noisy_re = noisy_res.re_history.as_deref().unwrap_or_default();
    let clean_re = clean_res.re_history.as_deref().unwrap_or_default();
    let start_re = noisy_re.first().copied().unwrap_or(f64::NAN);
    let best_noisy = noisy_re.iter().take(51).copied().fold(f64::INFINITY, f64::min);
    let final_clean = clean_re.last().copied().unwrap_or(f64::NAN);
    let pass = monotone(&noisy_res.objective_history)
        && monotone(&clean_res.objective_history)
        && (start_re - 100.0).abs() < 1e-9
        && best_noisy < 40.0
        && final_clean < 15.0;
    verdict(
        pass,
        format!(
            "30 dB: objective monotone {}, RE {start_re:.1} % -> {best_noisy:.2} % in {} iterations; \
             noiseless: monotone {}, RE {final_clean:.2} % in {} iterations",
            monotone(&noisy_res.objective_history),
            noisy_res.iterations,
            monotone(&clean_res.objective_history),
            clean_res.iterations
        ),
    )
}

fn physics() -> Result<Verdict> {
    let translation = plane_wave_error(64, 0.3, 100);
    let (reentry, _) = reentry_ratio(20);
    verdict(
        translation < 1e-6 && reentry < 1e-2,
        format!("plane wave error {translation:.2e} after 100 steps at CFL 0.3, PML re-entry {reentry:.2e} of outgoing peak"),
    )
}

fn units() -> Result<Verdict> {
    let checks = [
        ("sinc", sinc_closed_form()?),
        ("quadrature", quadrature_sums()?),
        ("smoother", smoother_symmetry()?),
        ("container", container_bits()?),
        ("determinism", determinism()?),
    ];
    let pass = checks.iter().all(|(_, (ok, _))| *ok);
    let detail = checks
        .iter()
        .map(|(name, (ok, d))| format!("{name} {} ({d})", if *ok { "ok" } else { "FAILED" }))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, detail)
}

/// Kernel values of nodes at dyadic fractional offsets against
/// `(-1)^n sin(pi f) / (pi (n + f)) / b` per axis.
fn sinc_closed_form() -> Result<(bool, String)> {
    let dx = 2f64.powi(-11);
    let grid = Grid::new([64, 64], dx, 10, 2.0, 1, 1e-8)?;
    let b = dx;
    let mut worst = 0.0f64;
    for (fx, sin_fx) in [(0.5, 1.0), (0.25, FRAC_1_SQRT_2), (0.75, FRAC_1_SQRT_2)] {
        let (i0, j0) = (20usize, 37usize);
        let node = [grid.interior_coordinate(0, i0 as f64 + fx), grid.interior_coordinate(1, j0 as f64)];
        let k = delta_kernel(node, &grid, b, 0.0).expect("node inside the grid");
        let ny = grid.total_dims()[1];
        for &(idx, v) in &k.entries {
            let (i, j) = (idx / ny - grid.pml_size, idx % ny - grid.pml_size);
            let n = i0 as f64 - i as f64;
            let along_x = if n.rem_euclid(2.0) == 0.0 { sin_fx } else { -sin_fx } / (PI * (n + fx)) / b;
            let along_y = if j == j0 { 1.0 / b } else { 0.0 };
            worst = worst.max((v - along_x * along_y).abs() * b * b);
        }
    }
    Ok((worst <= 1e-15, format!("max deviation {worst:.1e} of 1/b^2")))
}

fn quadrature_sums() -> Result<(bool, String)> {
    let grid = Grid::new([128, 128], 0.4e-3, 20, 2.0, 1, 1e-8)?;
    let mut worst = 0.0f64;
    let circular = build_circular_array(32, 22.5e-3, 2e-3, 40, [0.0, 0.0])?;
    let ongrid = build_ongrid_lines(&grid, &[Side::Left, Side::Bottom, Side::Right], 2)?;
    for r in circular.receivers.iter().chain(&ongrid.receivers) {
        let total: f64 = r.node_weights().iter().sum();
        worst = worst.max((total - r.length()).abs() / r.length());
    }
    Ok((worst <= 1e-15, format!("worst per-receiver relative deviation {worst:.1e}")))
}

fn smoother_symmetry() -> Result<(bool, String)> {
    let grid = Grid::new([40, 36], 1e-3, 8, 2.0, 1, 1e-8)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random = || {
        let values = (0..40 * 36).map(|_| rng.random_range(-1.0..1.0)).collect();
        Image::from_values(&grid, values)
    };
    let mut worst = 0.0f64;
    for spec in [SmootherSpec::default(), SmootherSpec { cutoff: 0.6, rolloff: 0.3, ..SmootherSpec::default() }] {
        let (a, b) = (random()?, random()?);
        let lhs = domain_inner(&smooth(&a, &spec, &grid)?, &b);
        let rhs = domain_inner(&a, &smooth(&b, &spec, &grid)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs());
    }
    Ok((worst <= 1e-12, format!("relative asymmetry {worst:.1e}")))
}

fn container_bits() -> Result<(bool, String)> {
    let grid = Grid::new([16, 16], 1e-3, 4, 2.0, 20, 1e-7)?;
    let op = tiny_operator(4);
    let mut data = random_boundary_data(&op, 5);
    let specials = [f64::NAN, -0.0, f64::INFINITY, f64::MIN_POSITIVE / 8.0, f64::from_bits(0x7ff8_dead_beef_0001)];
    for (v, s) in data.values.iter_mut().zip(specials) {
        *v = s;
    }
    let dir = tempfile::tempdir().map_err(|e| pat_adjoint::Error::Format(e.to_string()))?;
    let path = dir.path().join("traces.pat");
    boundary_container(&data, &grid)?.write(&path)?;
    let back = boundary_from_container(&Container::read(&path)?)?;
    let same = back.n_nodes == data.n_nodes
        && back.n_times == data.n_times
        && back.dt.to_bits() == data.dt.to_bits()
        && back.values.iter().zip(&data.values).all(|(a, b)| a.to_bits() == b.to_bits());
    Ok((same, format!("{} values incl. NaN payloads", data.values.len())))
}

/// Forward and adjoint twice on one thread and once on a three-thread pool.
fn determinism() -> Result<(bool, String)> {
    let op = offgrid_operator()?;
    let p0 = make_disc_phantom(&op.grid, 6e-3, [0.0, 0.0], (0.0, 1.0), 3)?;
    let data = random_boundary_data(&op, 4);
    let run = |op: &PatOperator| -> Result<(Vec<u64>, Vec<u64>)> {
        let y = op.forward(&p0)?;
        let x = op.adjoint(&data)?;
        Ok((y.values.iter().map(|v| v.to_bits()).collect(), x.values.iter().map(|v| v.to_bits()).collect()))
    };
    let first = run(&op)?;
    let second = run(&op)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .map_err(|e| pat_adjoint::Error::Config(e.to_string()))?;
    let pooled = pool.install(|| run(&op))?;
    Ok((first == second && first == pooled, "off-grid forward and adjoint, 1 and 3 threads".into()))
}

fn offgrid_operator() -> Result<PatOperator> {
    let grid = Grid::new([48, 48], 4e-4, 10, 2.0, 120, 8e-8)?;
    let medium = Medium::homogeneous(&grid, 1500.0, 1000.0)?;
    let array = build_circular_array(12, 8e-3, 1e-3, 6, [0.0, 0.0])?;
    let kernel = KernelSpec::relative(&grid, 0.01);
    PatOperator::new(grid, medium, array, kernel, SmootherSpec::default())
}
