//! Structure-preserving simulation of the stochastic rigid body with
//! double-bracket dissipation on its momentum spheres.

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod histogram;
pub mod integrators;
pub(crate) mod io;
pub mod lyapunov;
pub mod quadrature;
pub mod rng;
pub mod scalar;
pub mod so3;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Momentum vector in `f64`.
pub type Vec3 = so3::BodyVector<f64>;
pub type Inertia = dynamics::InertiaTensor<f64>;
pub type Noise = dynamics::NoiseModel<f64>;
pub type Params = dynamics::SimParams<f64>;
pub type ParticleEnsemble = ensemble::Ensemble<f64>;
pub type Lyapunov = lyapunov::LyapunovEstimate<f64>;
