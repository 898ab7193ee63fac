//! Stability certificates and simulators for the damped Hill equation
//! `u'' + c·u' + (b + a(t))·u = 0` and its nonlinear relatives: the forced
//! Duffing oscillator and a 1-D semilinear damped wave equation.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below fix the common double-precision case.

pub mod duffing;
pub mod error;
pub mod evolution;
pub mod hill;
pub mod propagator;
pub mod resonance;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SystemParamsF64 = hill::SystemParams<f64>;
pub type SystemParamsF32 = hill::SystemParams<f32>;
pub type PhaseStateF64 = hill::PhaseState<f64>;
pub type CertificateF64 = hill::Certificate<f64>;
pub type QuadForm2F64 = hill::QuadForm2<f64>;
pub type CoefficientSignalF64 = propagator::CoefficientSignal<f64>;
pub type TrajectoryF64 = propagator::Trajectory<f64>;
pub type ResonantSystemF64 = resonance::ResonantSystem<f64>;
pub type DuffingParamsF64 = duffing::DuffingParams<f64>;
pub type EvolutionParamsF64 = evolution::EvolutionParams<f64>;
pub type ModalStateF64 = evolution::ModalState<f64>;
