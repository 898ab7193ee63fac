//! Second-order evolution equations `u'' + γu' + Bu + A(t)u = f` and the
//! semilinear damped wave equation on `(0, 1)`:
//!
//! ```text
//! u_tt − u_xx + k·u³ + c·u_t = f(t, x),    u(t, 0) = u(t, 1) = 0.
//! ```
//!
//! The threshold functions are closed forms; the wave solver is a
//! sine-Galerkin truncation with the cubic term evaluated on a collocation
//! grid.

mod modal;
mod wave;

pub use modal::{ModalState, SineGrid, WaveForcing};
pub use wave::{
    default_wave_step, simulate_wave, wave_sync_experiment, WaveParams, WaveRun, WaveSyncReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::Scalar;

/// Hypotheses of the abstract criterion: `γ` is coercive with constant `c`
/// and bounded by `Γ`, `⟨Bv, γv⟩ ≥ ρ|v|² + η‖v‖²`, `B ≥ b`, and `‖A(t)‖ ≤ A_norm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvolutionParams<T: Scalar> {
    pub c: T,
    #[serde(rename = "Gamma")]
    pub gamma: T,
    pub rho: T,
    pub eta: T,
    pub b: T,
    #[serde(rename = "A_norm")]
    pub a_norm: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvolutionCertificate<T: Scalar> {
    pub threshold: T,
    /// `threshold − A_norm`.
    pub margin: T,
    pub holds: bool,
}

impl<T: Scalar> EvolutionParams<T> {
    pub fn new(c: T, gamma: T, rho: T, eta: T, b: T, a_norm: T) -> Result<Self> {
        for (name, x) in [("c", c), ("Gamma", gamma), ("rho", rho), ("b", b)] {
            ensure(x.is_finite() && x > T::zero(), || {
                format!("{name} must be positive, got {x}")
            })?;
        }
        for (name, x) in [("eta", eta), ("A_norm", a_norm)] {
            ensure(x.is_finite() && x >= T::zero(), || {
                format!("{name} must be nonnegative, got {x}")
            })?;
        }
        ensure(c <= gamma, || {
            format!("coercivity c = {c} exceeds bound Gamma = {gamma}")
        })?;
        Ok(Self {
            c,
            gamma,
            rho,
            eta,
            b,
            a_norm,
        })
    }

    /// Scalar damping `γ = c` on an operator with spectral floor `b`:
    /// `ρ = c·b`, `Γ = c`, `η = 0`.
    pub fn scalar(b: T, c: T, a_norm: T) -> Result<Self> {
        Self::new(c, c, c * b, T::zero(), b, a_norm)
    }

    pub fn threshold(&self) -> T {
        stable_threshold(self.c, self.rho, self.gamma)
    }

    pub fn certify(&self) -> EvolutionCertificate<T> {
        let threshold = self.threshold();
        EvolutionCertificate {
            threshold,
            margin: threshold - self.a_norm,
            holds: self.a_norm < threshold,
        }
    }
}

fn stable_threshold<T: Scalar>(c: T, rho: T, gamma: T) -> T {
    // √(cρ + c²Γ²/4) − cΓ/2 without the cancellation
    let half = c * gamma * T::half();
    c * rho / ((c * rho + half * half).sqrt() + half)
}

/// `√(cρ + c²Γ²/4) − cΓ/2`.
pub fn abstract_threshold<T: Scalar>(c: T, rho: T, gamma: T) -> Result<T> {
    for (name, x) in [("c", c), ("rho", rho), ("Gamma", gamma)] {
        ensure(x.is_finite() && x > T::zero(), || {
            format!("{name} must be positive, got {x}")
        })?;
    }
    Ok(stable_threshold(c, rho, gamma))
}

/// `c·√(b + c²/4) − c²/2`.
pub fn scalar_threshold<T: Scalar>(b: T, c: T) -> Result<T> {
    for (name, x) in [("b", b), ("c", c)] {
        ensure(x.is_finite() && x > T::zero(), || {
            format!("{name} must be positive, got {x}")
        })?;
    }
    let half = c * T::half();
    Ok(c * b / ((b + half * half).sqrt() + half))
}

/// `(1/π² + 4/c²)·forcing_bound_sq`, a bound on `limsup ‖u_x‖²`.
pub fn wave_ultimate_bound<T: Scalar>(c: T, forcing_bound_sq: T) -> Result<T> {
    ensure(c.is_finite() && c > T::zero(), || {
        format!("c must be positive, got {c}")
    })?;
    ensure(forcing_bound_sq >= T::zero(), || {
        format!("forcing bound must be nonnegative, got {forcing_bound_sq}")
    })?;
    Ok(wave_bound_factor(c) * forcing_bound_sq)
}

fn wave_bound_factor<T: Scalar>(c: T) -> T {
    let pi = T::PI();
    T::one() / (pi * pi) + T::lit(4.0) / (c * c)
}

/// Largest `limsup |f|²_H` (exclusive) for which any two solutions of the
/// wave equation converge to each other in the energy space.
pub fn wave_sync_threshold<T: Scalar>(k: T, c: T) -> Result<T> {
    ensure(k.is_finite() && k > T::zero(), || {
        format!("k must be positive, got {k}")
    })?;
    let pi = T::PI();
    let margin = scalar_threshold(pi * pi, c)?;
    Ok(margin / (k * T::lit(3.0) / pi * wave_bound_factor(c)))
}
