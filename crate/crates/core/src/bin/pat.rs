//! Command-line front end. Every subcommand resolves a configuration (a
//! preset or a TOML file), writes it next to its outputs as `config.toml`
//! and removes what it wrote if it fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pat_adjoint::config::{Experiment, ExperimentConfig, PhantomKind, Scale};
use pat_adjoint::container::{image_container, image_from_container, write_atomic, write_csv, Container};
use pat_adjoint::experiments::{adjoint_suite, make_phantom, reconstruct_dataset, run_oracle, simulate};
use pat_adjoint::verify::{InnerProductReport, ORACLE_BUDGET};
use pat_adjoint::Result;

#[derive(Parser)]
#[command(name = "pat", version, about = "Photoacoustic forward/adjoint operators and reconstruction")]
struct Cli {
    /// Built-in preset used when no --config is given.
    #[arg(long, global = true, default_value = "desk")]
    preset: String,
    /// TOML configuration file; replaces the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Writes the configured phantom as an image container.
    Phantom {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Disc radius in metres.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Simulates measured traces of the configured phantom.
    Simulate,
    /// Runs seeded dot-product trials and writes one CSV row per trial.
    AdjointTest {
        #[arg(long, value_enum, default_value = "ongrid")]
        mode: Mode,
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Reconstructs an initial pressure image from a simulated dataset.
    Reconstruct {
        /// Dataset written by `pat simulate`.
        #[arg(long)]
        data: PathBuf,
        /// Ground-truth phantom; adds relative errors to the history.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long)]
        allow_inverse_crime: bool,
    },
    /// Assembles both operators densely and compares A with B^T.
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Disc,
    Vessel,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ongrid,
    Offgrid,
}

/// Files written so far, deleted again if the command fails.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn discard(&self) {
        for p in &self.written {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PAT_THREADS").ok().and_then(|s| s.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut outputs = Outputs {
        dir: cli.out.clone(),
        written: Vec::new(),
    };
    match run(&cli, &mut outputs) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            outputs.discard();
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn resolve(cli: &Cli, experiment: Experiment) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::preset(cli.preset.parse::<Scale>()?, experiment),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn save_config(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    std::fs::create_dir_all(&out.dir).map_err(|source| pat_adjoint::Error::Io {
        path: out.dir.clone(),
        source,
    })?;
    let path = out.path("config.toml");
    write_atomic(&path, cfg.to_toml().as_bytes())
}

fn run(cli: &Cli, out: &mut Outputs) -> Result<()> {
    match &cli.command {
        Command::Phantom { kind, radius } => {
            let mut cfg = resolve(cli, Experiment::Simulation)?;
            if let Some(k) = kind {
                cfg.phantom.kind = match k {
                    KindArg::Disc => PhantomKind::Disc,
                    KindArg::Vessel => PhantomKind::Vessel,
                };
            }
            if let Some(r) = radius {
                cfg.phantom.radius = *r;
            }
            save_config(&cfg, out)?;
            let grid = cfg.build_grid()?;
            let phantom = make_phantom(&cfg, &grid)?;
            let mut c = image_container(&phantom, "Pa")?;
            c.set_meta("config_digest", cfg.digest());
            c.write(&out.path("phantom.pat"))?;
            println!("phantom {:?} -> {}", grid.dims, out.dir.join("phantom.pat").display());
        }
        Command::Simulate => {
            let cfg = resolve(cli, Experiment::Simulation)?;
            save_config(&cfg, out)?;
            let sim = simulate(&cfg)?;
            sim.to_container(&cfg)?.write(&out.path("data.pat"))?;
            sim.phantom_container(&cfg)?.write(&out.path("phantom.pat"))?;
            println!(
                "{} nodes x {} samples -> {}",
                sim.measured.n_nodes,
                sim.measured.n_times,
                out.dir.join("data.pat").display()
            );
        }
        Command::AdjointTest { mode, trials } => {
            let experiment = match mode {
                Mode::Ongrid => Experiment::Ongrid,
                Mode::Offgrid => Experiment::Offgrid,
            };
            let cfg = resolve(cli, experiment)?;
            save_config(&cfg, out)?;
            let trials = trials.unwrap_or(10);
            let suite = adjoint_suite(&cfg, trials)?;
            let rows: Vec<_> = suite.reports.iter().map(InnerProductReport::csv_row).collect();
            write_csv(&out.path("adjoint_test.csv"), &InnerProductReport::CSV_HEADER, &rows)?;
            println!(
                "{trials} trials: mean RD {:.3e} %, max RD {:.3e} %",
                suite.mean_rd(),
                suite.max_rd()
            );
        }
        Command::Reconstruct {
            data,
            truth,
            allow_inverse_crime,
        } => {
            let cfg = resolve(cli, Experiment::Reconstruction)?;
            save_config(&cfg, out)?;
            let dataset = Container::read(data)?;
            let truth = truth.as_deref().map(read_image).transpose()?;
            let (_, result) = reconstruct_dataset(&cfg, &dataset, *allow_inverse_crime, truth.as_ref())?;
            let mut c = image_container(&result.p0, "Pa")?;
            c.set_meta("config_digest", cfg.digest());
            c.set_meta("iterations", result.iterations);
            c.set_meta("termination", result.termination);
            c.set_meta("tau", result.tau);
            c.write(&out.path("recon.pat"))?;
            let (header, rows) = result.history_csv();
            write_csv(&out.path("history.csv"), &header, &rows)?;
            print!("{} iterations ({})", result.iterations, result.termination);
            if let Some(re) = result.re_history.as_ref().and_then(|h| h.last()) {
                print!(", relative error {re:.2} %");
            }
            println!();
        }
        Command::Oracle => {
            let cfg = resolve(cli, Experiment::Oracle)?;
            save_config(&cfg, out)?;
            let (_, _, s) = run_oracle(&cfg, ORACLE_BUDGET)?;
            write_csv(
                &out.path("oracle.csv"),
                &["rows", "cols", "a_max", "discrepancy"],
                &[vec![
                    s.rows.to_string(),
                    s.cols.to_string(),
                    format!("{:e}", s.a_max),
                    format!("{:e}", s.discrepancy),
                ]],
            )?;
            println!("{} x {}: |A-B^T|/|A| = {:.3e}", s.rows, s.cols, s.discrepancy);
        }
    }
    Ok(())
}

fn read_image(path: &Path) -> Result<pat_adjoint::operators::Image> {
    image_from_container(&Container::read(path)?)
}
