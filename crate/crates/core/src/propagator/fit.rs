use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::propagator::Trajectory;
use crate::Scalar;

/// Trailing fraction of samples used by default.
pub const DEFAULT_FIT_WINDOW: f64 = 0.5;

/// Fitted envelope `value(t) ≈ M·value(t₀)·exp(−rate·(t − t₀))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ExpFit<T: Scalar> {
    /// Empirical transient constant `M`.
    pub prefactor: T,
    /// Empirical decay rate; negative for growth, `+∞` on underflow.
    pub rate: T,
    /// Some sample in the window was zero (or non-finite), so no log fit was made.
    pub underflow: bool,
    pub samples_used: usize,
}

/// Least-squares line through `ln(values)` over the trailing
/// `window_fraction` of the samples.
pub fn fit_log_linear<T: Scalar>(
    times: &[T],
    values: &[T],
    window_fraction: T,
) -> Result<ExpFit<T>> {
    ensure(times.len() == values.len(), || {
        "times and values differ in length".into()
    })?;
    ensure(times.len() >= 10, || {
        format!("need at least 10 samples, got {}", times.len())
    })?;
    ensure(
        window_fraction > T::zero() && window_fraction <= T::one(),
        || format!("window fraction must lie in (0, 1], got {window_fraction}"),
    )?;
    let n = times.len();
    let take = (T::from_usize(n).unwrap() * window_fraction)
        .ceil()
        .to_usize()
        .unwrap_or(n)
        .clamp(2, n);
    let (ts, vs) = (&times[n - take..], &values[n - take..]);

    let usable = |v: T| v.is_finite() && v > T::zero();
    if !vs.iter().all(|&v| usable(v)) || !usable(values[0]) {
        return Ok(ExpFit {
            prefactor: T::zero(),
            rate: T::infinity(),
            underflow: true,
            samples_used: take,
        });
    }
    let count = T::from_usize(take).unwrap();
    let t_mean = ts.iter().fold(T::zero(), |a, &t| a + t) / count;
    let logs: Vec<T> = vs.iter().map(|v| v.ln()).collect();
    let y_mean = logs.iter().fold(T::zero(), |a, &y| a + y) / count;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&t, &y) in ts.iter().zip(&logs) {
        let dt = t - t_mean;
        sxy = sxy + dt * (y - y_mean);
        sxx = sxx + dt * dt;
    }
    let slope = if sxx > T::zero() {
        sxy / sxx
    } else {
        T::zero()
    };
    let intercept_at_start = y_mean + slope * (times[0] - t_mean);
    Ok(ExpFit {
        prefactor: (intercept_at_start - values[0].ln()).exp(),
        rate: -slope,
        underflow: false,
        samples_used: take,
    })
}

/// Fits the energy `u² + u'²` of a trajectory.
pub fn fit_exponential<T: Scalar>(traj: &Trajectory<T>, window_fraction: T) -> Result<ExpFit<T>> {
    fit_log_linear(&traj.times(), &traj.energies(), window_fraction)
}
