//! Analytic quantities of the stochastic rigid body with double-bracket
//! dissipation,
//!
//! ```text
//! dPi = -Pi x Omega dt + theta Pi x (Pi x Omega) dt - sum_i Pi x sigma_i o dW_i,
//! ```
//!
//! with `Omega = I^{-1} Pi`. The dissipative term carries the sign that makes
//! the energy decay at rate `theta |Pi x Omega|^2`.

use crate::error::{Error, Result};
use crate::quadrature::integrate_sphere;
use crate::scalar::Scalar;
use crate::so3::BodyVector;

/// Diagonal moment of inertia `diag(I1, I2, I3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaTensor<T> {
    moments: [T; 3],
}

impl<T: Scalar> InertiaTensor<T> {
    pub fn new(i1: T, i2: T, i3: T) -> Result<Self> {
        let ok = |v: T| v > T::zero() && v.is_finite();
        if !(ok(i1) && ok(i2) && ok(i3)) {
            return Err(Error::InvalidInertia(
                i1.to_f64_lossy(),
                i2.to_f64_lossy(),
                i3.to_f64_lossy(),
            ));
        }
        Ok(Self {
            moments: [i1, i2, i3],
        })
    }

    #[inline]
    pub fn moments(&self) -> [T; 3] {
        self.moments
    }

    #[inline]
    pub fn get(&self, axis: usize) -> T {
        self.moments[axis]
    }

    pub fn min(&self) -> T {
        self.moments[0].min(self.moments[1]).min(self.moments[2])
    }

    pub fn max(&self) -> T {
        self.moments[0].max(self.moments[1]).max(self.moments[2])
    }

    /// `I^{-1} v`.
    #[inline]
    pub fn apply_inverse(&self, v: BodyVector<T>) -> BodyVector<T> {
        BodyVector::new(
            v.x / self.moments[0],
            v.y / self.moments[1],
            v.z / self.moments[2],
        )
    }

    /// Energy range `[c^2 / (2 max I), c^2 / (2 min I)]` on the sphere of radius `c`.
    pub fn energy_bounds(&self, c: T) -> (T, T) {
        let two = T::lit(2.0);
        (c * c / (two * self.max()), c * c / (two * self.min()))
    }
}

/// Stochastic forcing `Phi_i(Pi) = sigma_i . Pi`, `i = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub sigma: T,
    pub axes: [BodyVector<T>; 3],
    isotropic: bool,
}

impl<T: Scalar> NoiseModel<T> {
    /// `sigma_i = sigma e_i`.
    pub fn isotropic(sigma: T) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::param("sigma", "must be finite and >= 0"));
        }
        Ok(Self {
            sigma,
            axes: [0, 1, 2].map(|i| BodyVector::basis(i).scale(sigma)),
            isotropic: true,
        })
    }

    /// Arbitrary constant axes; they must span R^3. `sigma` is reported as
    /// the root-mean-square axis length.
    pub fn with_axes(axes: [BodyVector<T>; 3]) -> Result<Self> {
        if axes.iter().any(|a| !a.is_finite()) {
            return Err(Error::param("noise axes", "must be finite"));
        }
        let det = axes[0].dot(axes[1].cross(axes[2]));
        let scale = axes[0].norm() * axes[1].norm() * axes[2].norm();
        if !(det.abs() > T::lit(1e-12) * scale) || scale == T::zero() {
            return Err(Error::DegenerateNoiseAxes);
        }
        let ms = axes.iter().map(|a| a.norm_squared()).sum::<T>() / T::lit(3.0);
        Ok(Self {
            sigma: ms.sqrt(),
            axes,
            isotropic: false,
        })
    }

    /// True when the axes are `sigma e_i`.
    #[inline]
    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }
}

/// Full parameter set of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams<T> {
    pub inertia: InertiaTensor<T>,
    pub noise: NoiseModel<T>,
    /// Dissipation rate.
    pub theta: T,
    pub dt: T,
    pub t_end: T,
    pub seed: u64,
    pub snapshot_times: Vec<T>,
}

impl<T: Scalar> SimParams<T> {
    pub fn new(
        inertia: InertiaTensor<T>,
        noise: NoiseModel<T>,
        theta: T,
        dt: T,
        t_end: T,
        seed: u64,
    ) -> Result<Self> {
        let p = Self {
            inertia,
            noise,
            theta,
            dt,
            t_end,
            seed,
            snapshot_times: Vec::new(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_snapshot_times(mut self, times: Vec<T>) -> Result<Self> {
        self.snapshot_times = times;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta >= T::zero()) || !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite and >= 0"));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::param("dt", "must be finite and > 0"));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::param("t_end", "must be finite and > 0"));
        }
        if self.dt > self.t_end {
            return Err(Error::param("dt", "must not exceed t_end"));
        }
        let times = &self.snapshot_times;
        if times.iter().any(|&t| !(t >= T::zero() && t <= self.t_end)) {
            return Err(Error::param("snapshot_times", "must lie within [0, t_end]"));
        }
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::param("snapshot_times", "must be sorted"));
        }
        Ok(())
    }
}

/// Value, gradient and Hessian of a test function at a point.
#[derive(Debug, Clone, Copy)]
pub struct Jet<T> {
    pub value: T,
    pub grad: BodyVector<T>,
    pub hess: [[T; 3]; 3],
}

/// Angular velocity `Omega = I^{-1} Pi`.
#[inline]
pub fn omega<T: Scalar>(pi: BodyVector<T>, inertia: &InertiaTensor<T>) -> BodyVector<T> {
    inertia.apply_inverse(pi)
}

/// Kinetic energy `h = Pi . I^{-1} Pi / 2`.
#[inline]
pub fn energy<T: Scalar>(pi: BodyVector<T>, inertia: &InertiaTensor<T>) -> T {
    pi.dot(omega(pi, inertia)) / T::lit(2.0)
}

/// Casimir `|Pi|^2`.
#[inline]
pub fn casimir<T: Scalar>(pi: BodyVector<T>) -> T {
    pi.norm_squared()
}

/// Hamiltonian drift `-Pi x Omega`.
#[inline]
pub fn drift_deterministic<T: Scalar>(
    pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
) -> BodyVector<T> {
    -pi.cross(omega(pi, inertia))
}

/// Double-bracket drift `theta Pi x (Pi x Omega)`: tangent to the momentum
/// sphere and energy decreasing.
#[inline]
pub fn drift_dissipative<T: Scalar>(
    pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
) -> BodyVector<T> {
    pi.cross(pi.cross(omega(pi, inertia))).scale(theta)
}

/// Stratonovich-to-Ito drift `1/2 sum_i (Pi x sigma_i) x sigma_i`; equals
/// `-sigma^2 Pi` for isotropic noise.
pub fn ito_correction<T: Scalar>(pi: BodyVector<T>, noise: &NoiseModel<T>) -> BodyVector<T> {
    let mut acc = BodyVector::zero();
    for s in &noise.axes {
        acc += pi.cross(*s).cross(*s);
    }
    acc.scale(T::lit(0.5))
}

/// Noiseless energy rate `dh/dt = -theta |Pi x Omega|^2`.
#[inline]
pub fn energy_decay_rate<T: Scalar>(pi: BodyVector<T>, inertia: &InertiaTensor<T>, theta: T) -> T {
    -theta * pi.cross(omega(pi, inertia)).norm_squared()
}

/// Effective inverse temperature `2 theta / sigma^2`.
pub fn inverse_temperature<T: Scalar>(theta: T, sigma: T) -> Result<T> {
    if sigma == T::zero() {
        return Err(Error::SingularMeasure);
    }
    Ok(T::lit(2.0) * theta / (sigma * sigma))
}

/// Unnormalised log-density `-(2 theta / sigma^2) h(Pi)` of the stationary
/// measure on the momentum sphere.
pub fn gibbs_log_density<T: Scalar>(
    pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
    sigma: T,
) -> Result<T> {
    Ok(-inverse_temperature(theta, sigma)? * energy(pi, inertia))
}

/// Normalisation `Z = int_{|Pi| = c} exp(-2 theta h / sigma^2) dA`.
pub fn partition_function<T: Scalar>(
    inertia: &InertiaTensor<T>,
    theta: T,
    sigma: T,
    c: T,
    n_quad: usize,
) -> Result<T> {
    let beta = inverse_temperature(theta, sigma)?.to_f64_lossy();
    if !(c > T::zero()) {
        return Err(Error::param("c", "must be > 0"));
    }
    if n_quad < 8 {
        return Err(Error::param("n_quad", "must be >= 8"));
    }
    let inv = inertia.moments().map(|m| 1.0 / m.to_f64_lossy());
    let z = integrate_sphere(c.to_f64_lossy(), n_quad, |x, y, z| {
        let h = 0.5 * (x * x * inv[0] + y * y * inv[1] + z * z * inv[2]);
        (-beta * h).exp()
    });
    Ok(T::lit(z))
}

/// Ito generator `L f = b . grad f + 1/2 sum_i v_i^T (Hess f) v_i` with
/// `b` the total Ito drift and `v_i = Pi x sigma_i`.
pub fn generator_apply<T: Scalar>(jet: &Jet<T>, pi: BodyVector<T>, params: &SimParams<T>) -> T {
    let b = drift_deterministic(pi, &params.inertia)
        + drift_dissipative(pi, &params.inertia, params.theta)
        + ito_correction(pi, &params.noise);
    let mut second = T::zero();
    for s in &params.noise.axes {
        let v = pi.cross(*s).to_array();
        for r in 0..3 {
            for c in 0..3 {
                second = second + v[r] * jet.hess[r][c] * v[c];
            }
        }
    }
    b.dot(jet.grad) + second / T::lit(2.0)
}
