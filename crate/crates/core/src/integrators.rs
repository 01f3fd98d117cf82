//! Time stepping for the dissipative stochastic rigid body.
//!
//! [`step_split`] is the Casimir-preserving Strang splitting
//!
//! ```text
//! free(dt/2) -> dissipate(dt) -> noise(dt) -> free(dt/2)
//! ```
//!
//! where the free flow is itself split into the exact flows of
//! `Pi_i^2 / (2 I_i)` (rotations about `e_i`, forward order on the first
//! half step and reverse order on the second), the noise flow is a
//! composition of exact rotations about the noise axes, and the dissipative
//! flow is an explicit midpoint step rescaled back to the sphere.
//! [`step_euler_maruyama`] is the Ito reference scheme. Brownian increments
//! are always supplied by the caller.

use crate::dynamics::{
    drift_deterministic, drift_dissipative, ito_correction, omega, InertiaTensor, NoiseModel,
    SimParams,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::so3::{rotate, rotate_about_basis, BodyVector};

/// Point on a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<T> {
    pub pi: BodyVector<T>,
    pub t: T,
}

impl<T: Scalar> State<T> {
    pub fn new(pi: BodyVector<T>, t: T) -> Self {
        Self { pi, t }
    }
}

/// Unit tangent perturbation plus the accumulated log of the growth factors
/// removed by renormalisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState<T> {
    pub delta: BodyVector<T>,
    pub log_norm_sum: T,
}

impl<T: Scalar> TangentState<T> {
    /// Projects `delta` onto the tangent plane at `pi` and normalises it.
    pub fn new(delta: BodyVector<T>, pi: BodyVector<T>) -> Result<Self> {
        let tangent = delta.reject_from(pi);
        let n = tangent.norm();
        let floor = T::lit(1e-12) * delta.norm().max(T::min_positive_value());
        if !(n > floor) || !n.is_finite() {
            return Err(Error::DegenerateTangent);
        }
        Ok(Self {
            delta: tangent.scale(T::one() / n),
            log_norm_sum: T::zero(),
        })
    }
}

/// Exact flow of the free rigid body split along the principal axes.
/// `forward` applies axes 1, 2, 3; otherwise 3, 2, 1.
#[inline]
fn free_flow<T: Scalar>(
    mut pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    tau: T,
    forward: bool,
) -> BodyVector<T> {
    for k in 0..3 {
        let i = if forward { k } else { 2 - k };
        // dPi/dt = Omega_i e_i x Pi: rotation about e_i by Omega_i tau.
        pi = rotate_about_basis(pi, i, pi[i] * tau / inertia.get(i));
    }
    pi
}

fn free_flow_tangent<T: Scalar>(
    mut pi: BodyVector<T>,
    mut delta: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    tau: T,
    forward: bool,
) -> (BodyVector<T>, BodyVector<T>) {
    for k in 0..3 {
        let i = if forward { k } else { 2 - k };
        let rate = tau / inertia.get(i);
        let angle = pi[i] * rate;
        pi = rotate_about_basis(pi, i, angle);
        delta = rotate_about_basis(delta, i, angle)
            + BodyVector::basis(i).cross(pi).scale(delta[i] * rate);
    }
    (pi, delta)
}

#[inline]
fn dissipative_field<T: Scalar>(
    pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
) -> BodyVector<T> {
    drift_dissipative(pi, inertia, theta)
}

/// Jacobian of `theta Pi x (Pi x Omega)` applied to `delta`.
fn dissipative_jacobian<T: Scalar>(
    pi: BodyVector<T>,
    delta: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
) -> BodyVector<T> {
    let om = omega(pi, inertia);
    let a_delta = inertia.apply_inverse(delta);
    let two = T::lit(2.0);
    (pi.scale(two * om.dot(delta)) + delta.scale(pi.dot(om))
        - om.scale(two * pi.dot(delta))
        - a_delta.scale(pi.norm_squared()))
    .scale(theta)
}

fn dissipate<T: Scalar>(
    pi: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
    dt: T,
) -> BodyVector<T> {
    if theta == T::zero() {
        return pi;
    }
    let r0 = pi.norm();
    let half = dt / T::lit(2.0);
    let mid = pi + dissipative_field(pi, inertia, theta).scale(half);
    let next = pi + dissipative_field(mid, inertia, theta).scale(dt);
    let n = next.norm();
    if n == T::zero() {
        return pi;
    }
    next.scale(r0 / n)
}

fn dissipate_tangent<T: Scalar>(
    pi: BodyVector<T>,
    delta: BodyVector<T>,
    inertia: &InertiaTensor<T>,
    theta: T,
    dt: T,
) -> (BodyVector<T>, BodyVector<T>) {
    if theta == T::zero() {
        return (pi, delta);
    }
    let r0 = pi.norm();
    let half = dt / T::lit(2.0);
    let mid = pi + dissipative_field(pi, inertia, theta).scale(half);
    let d_mid = delta + dissipative_jacobian(pi, delta, inertia, theta).scale(half);
    let next = pi + dissipative_field(mid, inertia, theta).scale(dt);
    let d_next = delta + dissipative_jacobian(mid, d_mid, inertia, theta).scale(dt);
    let n = next.norm();
    if n == T::zero() || r0 == T::zero() {
        return (pi, delta);
    }
    let u = next.scale(T::one() / n);
    let radial = u.scale(pi.dot(delta) / r0);
    let tangential = (d_next - u.scale(u.dot(d_next))).scale(r0 / n);
    (u.scale(r0), radial + tangential)
}

/// Exact noise flow: `dPi = sigma_i x Pi dW_i` is a rotation about
/// `sigma_i` by `|sigma_i| dW_i`, applied for i = 1, 2, 3 in turn.
#[inline]
fn noise_flow<T: Scalar>(mut v: BodyVector<T>, noise: &NoiseModel<T>, dw: [T; 3]) -> BodyVector<T> {
    if noise.is_isotropic() {
        for (i, w) in dw.iter().enumerate() {
            v = rotate_about_basis(v, i, noise.sigma * *w);
        }
    } else {
        for (axis, w) in noise.axes.iter().zip(dw) {
            let len = axis.norm();
            if len > T::zero() {
                v = rotate(v, *axis, len * w).expect("nonzero axis");
            }
        }
    }
    v
}

/// One split step of length `dt` (which may be negative when `theta = 0`).
pub fn step_split_with_dt<T: Scalar>(
    state: &State<T>,
    params: &SimParams<T>,
    dt: T,
    dw: [T; 3],
) -> State<T> {
    let half = dt / T::lit(2.0);
    let inertia = &params.inertia;
    let mut pi = free_flow(state.pi, inertia, half, true);
    pi = dissipate(pi, inertia, params.theta, dt);
    pi = noise_flow(pi, &params.noise, dw);
    pi = free_flow(pi, inertia, half, false);
    State::new(pi, state.t + dt)
}

/// One split step of length `params.dt`.
#[inline]
pub fn step_split<T: Scalar>(state: &State<T>, params: &SimParams<T>, dw: [T; 3]) -> State<T> {
    step_split_with_dt(state, params, params.dt, dw)
}

/// One Euler-Maruyama step of the Ito form. Does not preserve `|Pi|`.
pub fn step_euler_maruyama<T: Scalar>(
    state: &State<T>,
    params: &SimParams<T>,
    dw: [T; 3],
) -> State<T> {
    let pi = state.pi;
    let dt = params.dt;
    let drift = drift_deterministic(pi, &params.inertia)
        + drift_dissipative(pi, &params.inertia, params.theta)
        + ito_correction(pi, &params.noise);
    let mut next = pi + drift.scale(dt);
    for (s, w) in params.noise.axes.iter().zip(dw) {
        next = next - pi.cross(*s).scale(w);
    }
    State::new(next, state.t + dt)
}

/// Advances base and tangent together through the split map; `delta` is
/// pushed forward by the exact differential of every sub-step. Returns the
/// new base state and the unnormalised tangent.
fn split_with_differential<T: Scalar>(
    state: &State<T>,
    delta: BodyVector<T>,
    params: &SimParams<T>,
    dt: T,
    dw: [T; 3],
) -> (State<T>, BodyVector<T>) {
    let half = dt / T::lit(2.0);
    let inertia = &params.inertia;
    let (pi, d) = free_flow_tangent(state.pi, delta, inertia, half, true);
    let (pi, d) = dissipate_tangent(pi, d, inertia, params.theta, dt);
    let pi_next = noise_flow(pi, &params.noise, dw);
    let d = noise_flow(d, &params.noise, dw);
    let (pi, d) = free_flow_tangent(pi_next, d, inertia, half, false);
    (State::new(pi, state.t + dt), d)
}

fn renormalise<T: Scalar>(tangent: &TangentState<T>, d: BodyVector<T>) -> TangentState<T> {
    let n = d.norm();
    TangentState {
        delta: d.scale(T::one() / n),
        log_norm_sum: tangent.log_norm_sum + n.ln(),
    }
}

/// Base step plus tangent step sharing one noise realisation. The tangent
/// is projected onto the tangent plane of the new base point, then
/// renormalised with its log-growth accumulated.
pub fn step_split_tangent<T: Scalar>(
    state: &State<T>,
    tangent: &TangentState<T>,
    params: &SimParams<T>,
    dw: [T; 3],
) -> (State<T>, TangentState<T>) {
    let start = tangent.delta.reject_from(state.pi);
    let (next, d) = split_with_differential(state, start, params, params.dt, dw);
    let d = d.reject_from(next.pi);
    (next, renormalise(tangent, d))
}

/// Like [`step_split_tangent`] but without any tangent-plane projection, so
/// radial perturbations are carried along.
pub fn step_split_tangent_unprojected<T: Scalar>(
    state: &State<T>,
    tangent: &TangentState<T>,
    params: &SimParams<T>,
    dw: [T; 3],
) -> (State<T>, TangentState<T>) {
    let (next, d) = split_with_differential(state, tangent.delta, params, params.dt, dw);
    (next, renormalise(tangent, d))
}

/// Tangent update along the step from `state` driven by `dw`.
pub fn step_tangent<T: Scalar>(
    state: &State<T>,
    tangent: &TangentState<T>,
    params: &SimParams<T>,
    dw: [T; 3],
) -> TangentState<T> {
    step_split_tangent(state, tangent, params, dw).1
}

/// Largest `dt` for which the explicit midpoint dissipation step stays in
/// its monotone regime on the sphere of radius `c`: `min I / (theta c^2)`.
pub fn dissipation_dt_limit<T: Scalar>(inertia: &InertiaTensor<T>, theta: T, c: T) -> T {
    if theta == T::zero() {
        return T::infinity();
    }
    inertia.min() / (theta * c * c)
}
