//! Monte-Carlo ensembles of rigid bodies on one momentum sphere.
//!
//! Particles never interact. Particle `k` draws its initial condition from
//! stream `k` of the `Init` domain and, with [`NoiseSharing::Independent`],
//! its Brownian increments from stream `k` of the `Noise` domain at word
//! position `step`. Results are therefore bit-identical for any thread
//! count. With [`NoiseSharing::Shared`] every particle sees the same noise
//! realisation, which is what a random-attractor snapshot shows.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::{energy, inverse_temperature, partition_function, SimParams};
use crate::error::{Error, Result};
use crate::histogram::{distance, DistributionDistance, SphereHistogram};
use crate::integrators::{step_split_with_dt, State};
use crate::rng::{Domain, StreamFactory};
use crate::scalar::Scalar;
use crate::so3::{sample_uniform_sphere, BodyVector};

/// Sub-cells per bin side when integrating the stationary density over bins.
const REFERENCE_SUBDIVISION: usize = 16;
/// Gauss-Legendre order for the partition function.
const PARTITION_QUADRATURE: usize = 96;

/// How Brownian increments are assigned to particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSharing {
    /// Particle `k` uses noise stream `k`: samples the Fokker-Planck law.
    Independent,
    /// All particles use noise stream `realization`: one random dynamical
    /// system applied to many initial conditions.
    Shared { realization: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble<T> {
    pub particles: Vec<BodyVector<T>>,
    pub t: T,
    pub casimir_radius: T,
    pub master_seed: u64,
    /// Number of steps taken so far; addresses the noise streams.
    pub step: u64,
}

impl<T: Scalar> Ensemble<T> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Largest `| |Pi| - c | / c` over the particles.
    pub fn max_casimir_drift(&self) -> T {
        let c = self.casimir_radius;
        self.particles
            .iter()
            .map(|p| ((p.norm() - c) / c).abs())
            .fold(T::zero(), T::max)
    }

    /// Largest angle (radians) between a particle and the nearer of `+-c e_axis`.
    pub fn max_angle_to_poles(&self, axis: usize) -> T {
        self.particles
            .iter()
            .map(|p| {
                let cos = (p[axis].abs() / p.norm()).min(T::one());
                cos.acos()
            })
            .fold(T::zero(), T::max)
    }
}

fn validate_size<T: Scalar>(n: usize, c: T) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n_particles", "must be >= 1"));
    }
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::param("c", "must be finite and > 0"));
    }
    Ok(())
}

/// `n` independent uniform samples on `|Pi| = c`.
pub fn init_uniform<T: Scalar>(n: usize, c: T, seed: u64) -> Result<Ensemble<T>> {
    validate_size(n, c)?;
    let streams = StreamFactory::new(seed, Domain::Init);
    let particles = (0..n as u64)
        .into_par_iter()
        .map(|k| sample_uniform_sphere(c, &mut streams.stream(k)))
        .collect();
    Ok(Ensemble {
        particles,
        t: T::zero(),
        casimir_radius: c,
        master_seed: seed,
        step: 0,
    })
}

/// `n` exact samples of the Gibbs measure `exp(-2 theta h / sigma^2)` on
/// `|Pi| = c` by rejection from the uniform proposal. Returns the ensemble
/// and the overall acceptance rate. With `theta = 0` this is
/// [`init_uniform`] draw for draw.
pub fn init_gibbs<T: Scalar>(
    n: usize,
    c: T,
    params: &SimParams<T>,
    seed: u64,
) -> Result<(Ensemble<T>, f64)> {
    validate_size(n, c)?;
    let beta = inverse_temperature(params.theta, params.noise.sigma)?;
    let h_min = params.inertia.energy_bounds(c).0;
    let streams = StreamFactory::new(seed, Domain::Init);
    let draws: Vec<(BodyVector<T>, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = streams.stream(k);
            let mut tries = 0u64;
            loop {
                tries += 1;
                let p: BodyVector<T> = sample_uniform_sphere(c, &mut rng);
                if beta == T::zero() {
                    return (p, tries);
                }
                let accept = (-beta * (energy(p, &params.inertia) - h_min)).exp();
                let u: f64 = rng.random();
                if u < accept.to_f64_lossy() {
                    return (p, tries);
                }
            }
        })
        .collect();
    let total: u64 = draws.iter().map(|d| d.1).sum();
    let ensemble = Ensemble {
        particles: draws.into_iter().map(|d| d.0).collect(),
        t: T::zero(),
        casimir_radius: c,
        master_seed: seed,
        step: 0,
    };
    Ok((ensemble, n as f64 / total as f64))
}

/// Step lengths covering `span` with steps of `dt`, the last one shortened
/// when `span` is not a multiple of `dt`.
pub(crate) fn step_plan<T: Scalar>(span: T, dt: T) -> (u64, Option<T>) {
    if span <= T::zero() {
        return (0, None);
    }
    let ratio = (span / dt).to_f64_lossy();
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-6 * nearest.max(1.0) {
        return (nearest as u64, None);
    }
    let full = ratio.floor();
    let rest = span - dt * T::lit(full);
    (full as u64, Some(rest))
}

/// Steps every particle with the split scheme from `ensemble.t` to `t_target`.
pub fn advance<T: Scalar>(
    ensemble: &Ensemble<T>,
    t_target: T,
    params: &SimParams<T>,
    sharing: NoiseSharing,
) -> Result<Ensemble<T>> {
    let mut out = ensemble.clone();
    advance_in_place(&mut out, t_target, params, sharing)?;
    Ok(out)
}

/// In-place form of [`advance`].
pub fn advance_in_place<T: Scalar>(
    ensemble: &mut Ensemble<T>,
    t_target: T,
    params: &SimParams<T>,
    sharing: NoiseSharing,
) -> Result<()> {
    if t_target < ensemble.t {
        return Err(Error::param(
            "t_target",
            "must not precede the ensemble time",
        ));
    }
    let (n_full, partial) = step_plan(t_target - ensemble.t, params.dt);
    let n_steps = n_full + u64::from(partial.is_some());
    if n_steps == 0 {
        return Ok(());
    }
    let dt = params.dt;
    let step_len = |j: u64| {
        if j < n_full {
            dt
        } else {
            partial.unwrap_or(dt)
        }
    };
    let first_step = ensemble.step;
    let t0 = ensemble.t;
    let streams = StreamFactory::new(ensemble.master_seed, Domain::Noise);

    let run = |pi: BodyVector<T>, next_dw: &mut dyn FnMut(u64, T) -> [T; 3]| {
        let mut s = State::new(pi, t0);
        for j in 0..n_steps {
            let h = step_len(j);
            s = step_split_with_dt(&s, params, h, next_dw(j, h));
        }
        s.pi
    };

    match sharing {
        NoiseSharing::Independent => {
            ensemble
                .particles
                .par_iter_mut()
                .enumerate()
                .for_each(|(k, pi)| {
                    let mut b = streams.brownian(k as u64, first_step);
                    *pi = run(*pi, &mut |_, h| {
                        b.next_increments(h.to_f64_lossy()).map(T::lit)
                    });
                });
        }
        NoiseSharing::Shared { realization } => {
            let mut b = streams.brownian(realization, first_step);
            let increments: Vec<[T; 3]> = (0..n_steps)
                .map(|j| b.next_increments(step_len(j).to_f64_lossy()).map(T::lit))
                .collect();
            ensemble.particles.par_iter_mut().for_each(|pi| {
                *pi = run(*pi, &mut |j, _| increments[j as usize]);
            });
        }
    }
    ensemble.step = first_step + n_steps;
    ensemble.t = t_target;
    Ok(())
}

/// Equal-area histogram of the particles.
pub fn histogram<T: Scalar>(ensemble: &Ensemble<T>, n_bands: usize) -> Result<SphereHistogram> {
    let mut h = SphereHistogram::new(n_bands, ensemble.casimir_radius.to_f64_lossy())?;
    let partials = ensemble
        .particles
        .par_chunks(4096)
        .map(|chunk| {
            let mut local = h.clone();
            for p in chunk {
                local.add(p.cast::<f64>().to_array());
            }
            local
        })
        .collect::<Vec<_>>();
    for part in &partials {
        h.merge(part)?;
    }
    Ok(h)
}

/// Bin probabilities of the stationary measure: uniform when `theta = 0`,
/// otherwise `Z^{-1} exp(-2 theta h / sigma^2)` integrated over each bin.
pub fn stationary_probabilities<T: Scalar>(
    layout: &SphereHistogram,
    params: &SimParams<T>,
) -> Result<Vec<f64>> {
    let m = layout.n_bins();
    if params.theta == T::zero() {
        return Ok(vec![1.0 / m as f64; m]);
    }
    let beta = inverse_temperature(params.theta, params.noise.sigma)?.to_f64_lossy();
    let c = layout.radius();
    let z = partition_function(
        &params.inertia,
        params.theta,
        params.noise.sigma,
        T::lit(c),
        PARTITION_QUADRATURE,
    )?
    .to_f64_lossy();
    let inv = params.inertia.moments().map(|v| 1.0 / v.to_f64_lossy());
    Ok(layout.bin_integrals(REFERENCE_SUBDIVISION, |x, y, zc| {
        let h = 0.5 * (x * x * inv[0] + y * y * inv[1] + zc * zc * inv[2]);
        (-beta * h).exp() / z
    }))
}

/// Distance between the histogram and the analytic stationary measure.
pub fn compare<T: Scalar>(
    hist: &SphereHistogram,
    params: &SimParams<T>,
) -> Result<DistributionDistance> {
    let q = stationary_probabilities(hist, params)?;
    Ok(distance(&hist.probabilities(), &q, hist.total()))
}

/// Paths written by [`snapshot_export`].
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFiles {
    pub particles: PathBuf,
    pub histogram: PathBuf,
}

/// Writes `<label>_particles.csv` (`id,px,py,pz,t`) and `<label>_hist.csv`
/// into `dir`.
pub fn snapshot_export<T: Scalar>(
    ensemble: &Ensemble<T>,
    n_bands: usize,
    dir: &Path,
    label: &str,
) -> Result<SnapshotFiles> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let hist = histogram(ensemble, n_bands)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let particles_path = dir.join(format!("{label}_particles.csv"));
    let hist_path = dir.join(format!("{label}_hist.csv"));
    let t = ensemble.t.to_f64_lossy();
    let mut s = String::with_capacity(ensemble.len() * 96 + 16);
    s.push_str("id,px,py,pz,t\n");
    for (k, p) in ensemble.particles.iter().enumerate() {
        let p = p.cast::<f64>();
        writeln!(s, "{k},{:.16e},{:.16e},{:.16e},{:.16e}", p.x, p.y, p.z, t).unwrap();
    }
    crate::io::write_atomic(&particles_path, s.as_bytes())?;
    hist.write_csv(&hist_path)?;
    Ok(SnapshotFiles {
        particles: particles_path,
        histogram: hist_path,
    })
}

/// Reads a particle snapshot back: positions in id order and the time.
pub fn read_particles(path: &Path) -> Result<(Vec<BodyVector<f64>>, f64)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, reason: &str| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines();
    if lines.next() != Some("id,px,py,pz,t") {
        return Err(bad(1, "expected header `id,px,py,pz,t`"));
    }
    let mut particles = Vec::new();
    let mut time = 0.0;
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(lineno, "expected 5 fields"));
        }
        let id: usize = fields[0].parse().map_err(|_| bad(lineno, "bad id"))?;
        if id != particles.len() {
            return Err(bad(lineno, "ids must be consecutive from 0"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(lineno, "bad number"));
        particles.push(BodyVector::new(
            num(fields[1])?,
            num(fields[2])?,
            num(fields[3])?,
        ));
        time = num(fields[4])?;
    }
    Ok((particles, time))
}
