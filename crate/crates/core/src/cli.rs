//! Command-line front end.
//!
//! Exit codes: 0 success, 1 failed quantitative gate, 2 usage, config or
//! I/O error. Configuration is validated before the output directory is
//! created, and every file is written atomically.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, RunConfig};
use crate::dynamics::{casimir, energy, SimParams};
use crate::ensemble::{self, NoiseSharing};
use crate::error::Error;
use crate::integrators::{step_split_with_dt, State};
use crate::lyapunov::{self, LyapunovOptions, MIN_HORIZON};
use crate::rng::{Domain, StreamFactory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GATE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "rbnoise",
    version,
    about = "Stochastic rigid body with double-bracket dissipation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one trajectory from `pi0` and write trajectory.csv.
    Simulate(RunArgs),
    /// Advance a uniform ensemble and write snapshots at `snapshot_times`.
    Ensemble(RunArgs),
    /// Compare the ensemble law at `t_end` with the Gibbs measure.
    GibbsCheck(RunArgs),
    /// Top Lyapunov exponent over the `sigmas` x `thetas` grid.
    LyapunovSweep(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Path to a `key = value` config file.
    #[arg(short, long)]
    config: PathBuf,
    /// Override one config key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn load(args: &RunArgs) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply_overrides(&args.set)?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    let (name, args) = match &command {
        Command::Simulate(a) => ("simulate", a),
        Command::Ensemble(a) => ("ensemble", a),
        Command::GibbsCheck(a) => ("gibbs-check", a),
        Command::LyapunovSweep(a) => ("lyapunov-sweep", a),
    };
    let cfg = load(args)?;
    let params = cfg.sim_params()?;
    match command {
        Command::Simulate(_) => check_simulate(&cfg)?,
        Command::Ensemble(_) => {}
        Command::GibbsCheck(_) => check_gibbs(&cfg)?,
        Command::LyapunovSweep(_) => check_sweep(&cfg)?,
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
    pool.install(|| {
        let (code, files) = match command {
            Command::Simulate(_) => simulate(&cfg, &params)?,
            Command::Ensemble(_) => run_ensemble(&cfg, &params)?,
            Command::GibbsCheck(_) => gibbs_check(&cfg, &params)?,
            Command::LyapunovSweep(_) => lyapunov_sweep(&cfg, &params)?,
        };
        write_manifest(&cfg, name, &files)?;
        Ok(code)
    })
}

fn check_simulate(cfg: &RunConfig) -> Result<(), ConfigError> {
    if !(cfg.pi0_vector().norm() > 0.0) {
        return Err(invalid("pi0", "must be non-zero"));
    }
    Ok(())
}

fn check_gibbs(cfg: &RunConfig) -> Result<(), ConfigError> {
    if cfg.sigma == 0.0 {
        return Err(invalid(
            "sigma",
            "the stationary measure is singular when sigma = 0",
        ));
    }
    Ok(())
}

fn check_sweep(cfg: &RunConfig) -> Result<(), ConfigError> {
    check_simulate(cfg)?;
    if cfg.t_end < MIN_HORIZON {
        return Err(invalid(
            "t_end",
            format!("must be >= {MIN_HORIZON} for exponent estimates"),
        ));
    }
    if cfg.burn_in >= cfg.t_end {
        return Err(invalid("burn_in", "must be smaller than t_end"));
    }
    Ok(())
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

type Outcome = (i32, Vec<PathBuf>);

fn simulate(cfg: &RunConfig, params: &SimParams<f64>) -> Result<Outcome, Error> {
    let (n_full, partial) = ensemble::step_plan(cfg.t_end, cfg.dt);
    let n_steps = n_full + u64::from(partial.is_some());
    let mut noise = StreamFactory::new(cfg.seed, Domain::Noise).brownian(0, 0);
    let mut s = State::new(cfg.pi0_vector(), 0.0);
    let mut out = String::from("t,px,py,pz,energy,casimir\n");
    let mut row = |s: &State<f64>| {
        let p = s.pi;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.t,
            p.x,
            p.y,
            p.z,
            energy(p, &params.inertia),
            casimir(p)
        )
        .unwrap();
    };
    row(&s);
    for j in 0..n_steps {
        let h = if j < n_full {
            cfg.dt
        } else {
            partial.unwrap_or(cfg.dt)
        };
        s = step_split_with_dt(&s, params, h, noise.next_increments(h));
        if (j + 1) % cfg.stride == 0 || j + 1 == n_steps {
            row(&s);
        }
    }
    let path = cfg.output_dir.join("trajectory.csv");
    crate::io::write_atomic(&path, out.as_bytes())?;
    Ok((EXIT_OK, vec![path]))
}

fn run_ensemble(cfg: &RunConfig, params: &SimParams<f64>) -> Result<Outcome, Error> {
    let times = if cfg.snapshot_times.is_empty() {
        vec![cfg.t_end]
    } else {
        cfg.snapshot_times.clone()
    };
    let sharing = match cfg.noise {
        NoiseSharing::Shared { .. } => NoiseSharing::Shared {
            realization: cfg.seed,
        },
        s => s,
    };
    let mut ens = ensemble::init_uniform(cfg.n_particles, cfg.c, cfg.seed)?;
    let mut files = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        ensemble::advance_in_place(&mut ens, t, params, sharing)?;
        let written = ensemble::snapshot_export(
            &ens,
            cfg.n_bands,
            &cfg.output_dir,
            &format!("snapshot_{k:03}"),
        )?;
        files.push(written.particles);
        files.push(written.histogram);
    }
    Ok((EXIT_OK, files))
}

fn gibbs_check(cfg: &RunConfig, params: &SimParams<f64>) -> Result<Outcome, Error> {
    let mut ens = ensemble::init_uniform(cfg.n_particles, cfg.c, cfg.seed)?;
    ensemble::advance_in_place(&mut ens, cfg.t_end, params, NoiseSharing::Independent)?;
    let hist = ensemble::histogram(&ens, cfg.n_bands)?;
    let mut reference = params.clone();
    reference.theta = cfg.reference_theta.unwrap_or(cfg.theta);
    let d = ensemble::compare(&hist, &reference)?;
    let [i1, i2, i3] = cfg.inertia;
    let report = format!(
        "l1,kl,n,bands,t_end,params\n{:.16e},{:.16e},{},{},{:.16e},inertia={i1}:{i2}:{i3};sigma={};theta={};reference_theta={};dt={};seed={}\n",
        d.l1,
        d.kl,
        hist.total(),
        cfg.n_bands,
        cfg.t_end,
        cfg.sigma,
        cfg.theta,
        reference.theta,
        cfg.dt,
        cfg.seed
    );
    let report_path = cfg.output_dir.join("gibbs_report.csv");
    let hist_path = cfg.output_dir.join("gibbs_hist.csv");
    hist.write_csv(&hist_path)?;
    crate::io::write_atomic(&report_path, report.as_bytes())?;
    let pass = d.l1 < cfg.l1_gate;
    println!(
        "l1 = {:.6} kl = {:.6} gate = {} -> {}",
        d.l1,
        d.kl,
        cfg.l1_gate,
        if pass { "pass" } else { "fail" }
    );
    Ok((
        if pass { EXIT_OK } else { EXIT_GATE },
        vec![report_path, hist_path],
    ))
}

fn lyapunov_sweep(cfg: &RunConfig, params: &SimParams<f64>) -> Result<Outcome, Error> {
    let sigmas = cfg.sigmas.clone().unwrap_or_else(|| vec![cfg.sigma]);
    let thetas = cfg.thetas.clone().unwrap_or_else(|| vec![cfg.theta]);
    let seeds: Vec<u64> = (0..cfg.lyapunov_seeds as u64)
        .map(|k| cfg.seed.wrapping_add(k))
        .collect();
    let opts = LyapunovOptions {
        burn_in: cfg.burn_in,
        n_blocks: cfg.n_blocks,
        ..LyapunovOptions::default()
    };
    let rows = lyapunov::sweep(
        params,
        cfg.pi0_vector(),
        &sigmas,
        &thetas,
        cfg.t_end,
        &seeds,
        &opts,
    )?;
    let path = cfg.output_dir.join("sweep.csv");
    lyapunov::write_sweep_csv(&rows, &path)?;
    Ok((EXIT_OK, vec![path]))
}

fn write_manifest(cfg: &RunConfig, command: &str, files: &[PathBuf]) -> Result<(), Error> {
    let mut s = String::new();
    writeln!(s, "command = {command}").unwrap();
    writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "config_sha256 = {}", cfg.hash()).unwrap();
    for f in files {
        let name = f.file_name().map(Path::new).unwrap_or(f);
        writeln!(s, "file = {}", name.display()).unwrap();
    }
    s.push_str("[config]\n");
    s.push_str(&cfg.canonical());
    crate::io::write_atomic(&cfg.output_dir.join("manifest.txt"), s.as_bytes())
}
