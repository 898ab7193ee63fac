//! Time integration for the Hill equation and friends.
//!
//! For piecewise-constant coefficients the exact propagator chains the closed
//! form state-transition matrix across breakpoints, which makes it accurate to
//! rounding over arbitrarily long horizons. [`Rk4`] is the general-purpose
//! fixed-step integrator used by the nonlinear models and as an independent
//! check on the exact propagator.

mod exact;
mod fit;
mod rk4;
mod signal;
mod trajectory;

pub use exact::{step_constant, transition_matrix, CRITICAL_BAND};
pub use fit::{fit_exponential, fit_log_linear, ExpFit, DEFAULT_FIT_WINDOW};
pub use rk4::{integrate_rk4, Rk4, SampledPath, StageTime};
pub use signal::{CoefficientSignal, Piece};
pub use trajectory::{Method, Trajectory, TrajectoryMeta};

use crate::error::{ensure, Result};
use crate::hill::{PhaseState, SystemParams};
use crate::Scalar;

/// Samples per fastest oscillation period in the default RK4 step.
pub const STEPS_PER_OSCILLATION: f64 = 1000.0;

/// Step and output density for RK4-driven simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions<T> {
    /// Step size; each model supplies its own default when `None`.
    pub h: Option<T>,
    /// Upper bound on recorded samples (endpoints always kept).
    pub max_samples: usize,
}

impl<T> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            h: None,
            max_samples: 4000,
        }
    }
}

impl<T: Scalar> SimOptions<T> {
    pub fn with_step(h: T) -> Self {
        Self {
            h: Some(h),
            ..Self::default()
        }
    }

    /// Record stride that keeps roughly `max_samples` samples over `span`.
    pub fn stride(&self, span: T, h: T) -> usize {
        let steps = (span / h).ceil().to_usize().unwrap_or(usize::MAX);
        steps.div_ceil(self.max_samples.max(1)).max(1)
    }
}

fn check_piece<T: Scalar>(p: &SystemParams<T>, piece: &Piece<T>) -> Result<()> {
    let a = piece.value;
    ensure(p.b + a > T::zero(), || {
        format!(
            "b + a(t) = {} is not positive at t = {}",
            p.b + a,
            piece.start
        )
    })?;
    ensure(a >= T::zero() && a <= p.ceiling, || {
        format!(
            "a(t) = {a} at t = {} outside [0, C = {}]",
            piece.start, p.ceiling
        )
    })
}

fn pieces_checked<T: Scalar>(
    p: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    t0: T,
    t_end: T,
) -> Result<Vec<Piece<T>>> {
    ensure(t_end >= t0, || {
        format!("t_end = {t_end} precedes start time {t0}")
    })?;
    let pieces = signal.pieces(t0, t_end)?;
    for piece in &pieces {
        check_piece(p, piece)?;
    }
    Ok(pieces)
}

/// Exact solution sampled at every breakpoint of `signal` in
/// `[state0.t, t_end]`.
pub fn propagate<T: Scalar>(
    params: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    state0: &PhaseState<T>,
    t_end: T,
) -> Result<Trajectory<T>> {
    propagate_sampled(params, signal, state0, t_end, None)
}

/// Like [`propagate`], additionally splitting each piece into equal sub-steps
/// no longer than `max_dt`.
pub fn propagate_sampled<T: Scalar>(
    params: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    state0: &PhaseState<T>,
    t_end: T,
    max_dt: Option<T>,
) -> Result<Trajectory<T>> {
    ensure(state0.is_finite(), || "initial state must be finite".into())?;
    if let Some(d) = max_dt {
        ensure(d.is_finite() && d > T::zero(), || {
            format!("sample spacing must be positive, got {d}")
        })?;
    }
    let pieces = pieces_checked(params, signal, state0.t, t_end)?;
    let mut samples = vec![*state0];
    let mut state = *state0;
    for piece in pieces.iter().filter(|p| p.len() > T::zero()) {
        let q = params.b + piece.value;
        let n = max_dt
            .map(|d| (piece.len() / d).ceil().to_usize().unwrap_or(1).max(1))
            .unwrap_or(1);
        let dt = piece.len() / T::from_usize(n).unwrap();
        for i in 1..=n {
            let target = if i == n {
                piece.end
            } else {
                piece.start + T::from_usize(i).unwrap() * dt
            };
            state = step_constant(q, params.c, &state, target - state.t)?;
            state.t = target;
            samples.push(state);
        }
    }
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            params: *params,
            signal: Some(signal.clone()),
            method: Method::Exact,
            step: max_dt,
        },
    })
}

/// Exact states at the requested (nondecreasing) times, all `≥ state0.t`.
pub fn propagate_at<T: Scalar>(
    params: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    state0: &PhaseState<T>,
    times: &[T],
) -> Result<Vec<PhaseState<T>>> {
    ensure(times.windows(2).all(|w| w[0] <= w[1]), || {
        "times must be sorted".into()
    })?;
    let Some(&t_last) = times.last() else {
        return Ok(Vec::new());
    };
    ensure(times[0] >= state0.t, || {
        "requested time precedes the initial state".into()
    })?;
    let pieces = pieces_checked(params, signal, state0.t, t_last)?;
    let mut out = Vec::with_capacity(times.len());
    let mut state = *state0;
    let mut next = 0;
    for (k, piece) in pieces.iter().enumerate() {
        let q = params.b + piece.value;
        let last_piece = k + 1 == pieces.len();
        while next < times.len() && (times[next] < piece.end || last_piece) {
            state = step_constant(q, params.c, &state, times[next] - state.t)?;
            state.t = times[next];
            out.push(state);
            next += 1;
        }
        if !last_piece && state.t < piece.end {
            state = step_constant(q, params.c, &state, piece.end - state.t)?;
            state.t = piece.end;
        }
    }
    Ok(out)
}

/// `min(shortest piece, 2π / (1000·√(b + C)))` over `[t0, t_end]`.
pub fn default_step<T: Scalar>(
    params: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    t0: T,
    t_end: T,
) -> Result<T> {
    let osc =
        T::two() * T::PI() / (T::lit(STEPS_PER_OSCILLATION) * (params.b + params.ceiling).sqrt());
    let shortest = signal
        .pieces(t0, t_end)?
        .iter()
        .map(Piece::len)
        .filter(|&l| l > T::zero())
        .fold(T::infinity(), T::min);
    Ok(osc.min(shortest))
}

/// Integrates the Hill equation with [`Rk4`], aligning steps to breakpoints.
///
/// `h` defaults to [`default_step`].
pub fn simulate_hill_rk4<T: Scalar>(
    params: &SystemParams<T>,
    signal: &CoefficientSignal<T>,
    state0: &PhaseState<T>,
    t_end: T,
    h: Option<T>,
) -> Result<Trajectory<T>> {
    let pieces = pieces_checked(params, signal, state0.t, t_end)?;
    let h = match h {
        Some(h) => h,
        None => default_step(params, signal, state0.t, t_end)?,
    };
    let starts: Vec<T> = pieces.iter().map(|p| p.start).collect();
    let values: Vec<T> = pieces.iter().map(|p| p.value).collect();
    let (b, c) = (params.b, params.c);
    let path = Rk4::new(h)?.integrate(
        |st, y, dy| {
            let idx = starts.partition_point(|&s| s <= st.segment_start).max(1) - 1;
            dy[0] = y[1];
            dy[1] = -c * y[1] - (b + values[idx]) * y[0];
        },
        &[state0.u, state0.v],
        state0.t,
        t_end,
        &starts[1..],
    )?;
    let samples = path
        .times
        .iter()
        .zip(&path.states)
        .map(|(&t, y)| PhaseState::new(t, y[0], y[1]))
        .collect();
    Ok(Trajectory {
        samples,
        meta: TrajectoryMeta {
            params: *params,
            signal: Some(signal.clone()),
            method: Method::Rk4,
            step: Some(h),
        },
    })
}
