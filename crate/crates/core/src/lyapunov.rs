//! Top Lyapunov exponent of the stochastic rigid body.
//!
//! A base trajectory and one tangent vector are advanced together through
//! the split scheme with a shared noise realisation; the tangent is
//! projected onto the sphere's tangent plane and renormalised every step.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::dynamics::{NoiseModel, SimParams};
use crate::error::{Error, Result};
use crate::integrators::{step_split_tangent, step_split_tangent_unprojected, State, TangentState};
use crate::rng::{Domain, StreamFactory};
use crate::scalar::Scalar;
use crate::so3::{sample_uniform_sphere, BodyVector};

/// Shortest total horizon accepted by [`estimate_top`].
pub const MIN_HORIZON: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions<T> {
    /// Time discarded before accumulating growth.
    pub burn_in: T,
    /// Equal blocks used for the standard error.
    pub n_blocks: usize,
    /// Number of running-estimate samples kept in the trace.
    pub trace_points: usize,
}

impl<T: Scalar> Default for LyapunovOptions<T> {
    fn default() -> Self {
        Self {
            burn_in: T::lit(10.0),
            n_blocks: 20,
            trace_points: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovEstimate<T> {
    pub lambda_top: T,
    pub stderr: T,
    pub t_total: T,
    pub n_blocks: usize,
    /// `(time since burn-in, log growth / time)` pairs.
    pub trace: Vec<(T, T)>,
}

fn initial_tangent<T: Scalar>(pi: BodyVector<T>, seed: u64) -> TangentState<T> {
    let mut rng = StreamFactory::new(seed, Domain::Tangent).stream(0);
    loop {
        let d: BodyVector<T> = sample_uniform_sphere(T::one(), &mut rng);
        if let Ok(t) = TangentState::new(d, pi) {
            return t;
        }
    }
}

fn steps_for<T: Scalar>(span: T, dt: T) -> u64 {
    (span / dt).round().to_f64_lossy().max(0.0) as u64
}

/// Estimates the top exponent from `pi0` over `t_total` (including burn-in).
pub fn estimate_top<T: Scalar>(
    params: &SimParams<T>,
    pi0: BodyVector<T>,
    t_total: T,
    seed: u64,
    opts: &LyapunovOptions<T>,
) -> Result<LyapunovEstimate<T>> {
    if !(pi0.norm() > T::zero()) {
        return Err(Error::ZeroMomentum);
    }
    if !(t_total >= T::lit(MIN_HORIZON)) {
        return Err(Error::param("t_total", format!("must be >= {MIN_HORIZON}")));
    }
    if !(opts.burn_in >= T::zero() && opts.burn_in < t_total) {
        return Err(Error::param("burn_in", "must lie in [0, t_total)"));
    }
    if opts.n_blocks < 2 {
        return Err(Error::param("n_blocks", "must be >= 2"));
    }
    let dt = params.dt;
    let n_burn = steps_for(opts.burn_in, dt);
    let n_meas = steps_for(t_total - opts.burn_in, dt);
    if n_meas < opts.n_blocks as u64 {
        return Err(Error::param(
            "t_total",
            "too short for the requested block count",
        ));
    }

    let mut noise = StreamFactory::new(seed, Domain::Noise).brownian(0, 0);
    let dt64 = dt.to_f64_lossy();
    let mut state = State::new(pi0, T::zero());
    let mut tangent = initial_tangent(pi0, seed);
    for _ in 0..n_burn {
        let dw = noise.next_increments(dt64).map(T::lit);
        (state, tangent) = step_split_tangent(&state, &tangent, params, dw);
    }
    tangent.log_norm_sum = T::zero();

    let block_len = n_meas / opts.n_blocks as u64;
    let trace_every = (n_meas / opts.trace_points.max(1) as u64).max(1);
    let mut block_rates = Vec::with_capacity(opts.n_blocks);
    let mut trace = Vec::with_capacity(opts.trace_points + 1);
    let mut block_start_log = T::zero();
    let mut block_start_step = 0u64;
    for j in 1..=n_meas {
        let dw = noise.next_increments(dt64).map(T::lit);
        (state, tangent) = step_split_tangent(&state, &tangent, params, dw);
        let elapsed = dt * T::lit(j as f64);
        if j % trace_every == 0 || j == n_meas {
            trace.push((elapsed, tangent.log_norm_sum / elapsed));
        }
        let last_block = block_rates.len() + 1 == opts.n_blocks;
        if (!last_block && j - block_start_step == block_len) || j == n_meas {
            let span = dt * T::lit((j - block_start_step) as f64);
            block_rates.push((tangent.log_norm_sum - block_start_log) / span);
            block_start_log = tangent.log_norm_sum;
            block_start_step = j;
        }
    }
    let measured = dt * T::lit(n_meas as f64);
    let lambda_top = tangent.log_norm_sum / measured;
    Ok(LyapunovEstimate {
        lambda_top,
        stderr: block_stderr(&block_rates),
        t_total,
        n_blocks: block_rates.len(),
        trace,
    })
}

fn block_stderr<T: Scalar>(rates: &[T]) -> T {
    let n = T::lit(rates.len() as f64);
    let mean = rates.iter().copied().sum::<T>() / n;
    let var = rates.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / (n - T::one());
    (var / n).sqrt()
}

/// Finite-time growth rate `log(|delta(t)| / |delta(0)|) / t` from an
/// explicit starting tangent, optionally without tangent-plane projection.
pub fn finite_time_rate<T: Scalar>(
    params: &SimParams<T>,
    pi0: BodyVector<T>,
    delta0: BodyVector<T>,
    duration: T,
    seed: u64,
    project: bool,
) -> Result<T> {
    let n = delta0.norm();
    if !(n > T::zero()) {
        return Err(Error::DegenerateTangent);
    }
    let mut tangent = if project {
        TangentState::new(delta0, pi0)?
    } else {
        TangentState {
            delta: delta0.scale(T::one() / n),
            log_norm_sum: T::zero(),
        }
    };
    let mut noise = StreamFactory::new(seed, Domain::Noise).brownian(0, 0);
    let mut state = State::new(pi0, T::zero());
    let steps = steps_for(duration, params.dt);
    for _ in 0..steps {
        let dw = noise.next_increments(params.dt.to_f64_lossy()).map(T::lit);
        (state, tangent) = if project {
            step_split_tangent(&state, &tangent, params, dw)
        } else {
            step_split_tangent_unprojected(&state, &tangent, params, dw)
        };
    }
    Ok(tangent.log_norm_sum / (params.dt * T::lit(steps as f64)))
}

/// One row of a `(sigma, theta)` sweep, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub sigma: T,
    pub theta: T,
    pub lambda: T,
    pub stderr: T,
    pub t_total: T,
    pub seed_count: usize,
}

/// Runs [`estimate_top`] on every `(sigma, theta, seed)` with sigma as the
/// outer grid index. Jobs run in parallel; rows come back in grid order.
#[allow(clippy::too_many_arguments)]
pub fn sweep<T: Scalar>(
    base: &SimParams<T>,
    pi0: BodyVector<T>,
    sigmas: &[T],
    thetas: &[T],
    t_total: T,
    seeds: &[u64],
    opts: &LyapunovOptions<T>,
) -> Result<Vec<SweepRow<T>>> {
    if sigmas.is_empty() || thetas.is_empty() || seeds.is_empty() {
        return Err(Error::param(
            "grid",
            "sigmas, thetas and seeds must be non-empty",
        ));
    }
    let grid: Vec<(T, T)> = sigmas
        .iter()
        .flat_map(|&s| thetas.iter().map(move |&th| (s, th)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..grid.len())
        .flat_map(|g| seeds.iter().map(move |&s| (g, s)))
        .collect();
    let results: Vec<LyapunovEstimate<T>> = jobs
        .par_iter()
        .map(|&(g, seed)| {
            let (sigma, theta) = grid[g];
            let mut p = base.clone();
            p.noise = NoiseModel::isotropic(sigma)?;
            p.theta = theta;
            p.validate()?;
            estimate_top(&p, pi0, t_total, seed, opts)
        })
        .collect::<Result<_>>()?;
    let k = seeds.len();
    let kf = T::lit(k as f64);
    Ok(grid
        .iter()
        .zip(results.chunks(k))
        .map(|(&(sigma, theta), ests)| {
            let lambda = ests.iter().map(|e| e.lambda_top).sum::<T>() / kf;
            let stderr = ests.iter().map(|e| e.stderr * e.stderr).sum::<T>().sqrt() / kf;
            SweepRow {
                sigma,
                theta,
                lambda,
                stderr,
                t_total,
                seed_count: k,
            }
        })
        .collect())
}

/// Writes `sigma,theta,lambda,stderr,t_total,seed_count`.
pub fn write_sweep_csv<T: Scalar>(rows: &[SweepRow<T>], path: &Path) -> Result<()> {
    let mut s = String::from("sigma,theta,lambda,stderr,t_total,seed_count\n");
    for r in rows {
        writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.sigma.to_f64_lossy(),
            r.theta.to_f64_lossy(),
            r.lambda.to_f64_lossy(),
            r.stderr.to_f64_lossy(),
            r.t_total.to_f64_lossy(),
            r.seed_count
        )
        .unwrap();
    }
    crate::io::write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::InertiaTensor;

    type V = BodyVector<f64>;

    fn params(theta: f64, sigma: f64, dt: f64) -> SimParams<f64> {
        SimParams::new(
            InertiaTensor::new(1.0, 2.0, 3.0).unwrap(),
            NoiseModel::isotropic(sigma).unwrap(),
            theta,
            dt,
            1000.0,
            0,
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = params(0.5, 0.5, 1e-2);
        let o = LyapunovOptions::default();
        assert!(matches!(
            estimate_top(&p, V::zero(), 200.0, 0, &o),
            Err(Error::ZeroMomentum)
        ));
        assert!(estimate_top(&p, V::new(0., 0., 1.), 50.0, 0, &o).is_err());
    }

    #[test]
    fn estimate_shape() {
        let p = params(0.5, 0.5, 1e-2);
        let o = LyapunovOptions::default();
        let e = estimate_top(&p, V::new(0.6, 0.0, 0.8), 110.0, 4, &o).unwrap();
        assert_eq!(e.n_blocks, 20);
        assert!(e.stderr >= 0.0);
        assert!(e.trace.windows(2).all(|w| w[0].0 < w[1].0));
        let last = e.trace.last().unwrap();
        assert!((last.0 - 100.0).abs() < 1e-9);
        assert!((last.1 - e.lambda_top).abs() < 1e-12);
        assert_eq!(
            e,
            estimate_top(&p, V::new(0.6, 0.0, 0.8), 110.0, 4, &o).unwrap()
        );
    }

    #[test]
    fn stable_axis_has_zero_rate() {
        let p = params(0.0, 0.0, 1e-2);
        let e = estimate_top(
            &p,
            V::new(0., 0., 1.),
            200.0,
            1,
            &LyapunovOptions::default(),
        )
        .unwrap();
        assert!(e.lambda_top.abs() < 0.02, "{}", e.lambda_top);
    }

    #[test]
    fn single_point_sweep_matches_estimate() {
        let p = params(0.5, 0.5, 1e-2);
        let o = LyapunovOptions::default();
        let pi0 = V::new(0.6, 0.0, 0.8);
        let rows = sweep(&p, pi0, &[0.5], &[0.5], 100.0, &[3], &o).unwrap();
        let e = estimate_top(&p, pi0, 100.0, 3, &o).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].lambda, e.lambda_top);
        assert_eq!(rows[0].stderr, e.stderr);
        assert!(sweep(&p, pi0, &[], &[0.5], 100.0, &[3], &o).is_err());
    }

    #[test]
    fn radial_direction_is_neutral() {
        let p = params(0.0, 0.0, 1e-2);
        let pi0 = V::new(0.6, 0.0, 0.8);
        let rate = finite_time_rate(&p, pi0, pi0, 2000.0, 0, false).unwrap();
        assert!(rate.abs() < 0.02, "{rate}");
        assert!(finite_time_rate(&p, pi0, pi0, 10.0, 0, true).is_err());
    }
}
