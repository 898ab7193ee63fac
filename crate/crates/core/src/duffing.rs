//! Forced dissipative Duffing oscillator
//!
//! ```text
//! u'' + c·u' + g(u) = f(t),    g(u) = b·u + a·|u|^p·u.
//! ```
//!
//! Every solution ends up inside `limsup |u| ≤ max{2/(c√b), 1/b}·limsup |f|`.
//! The difference of two solutions solves a Hill equation whose coefficient
//! is bounded by `A = sup_{|s| ≤ M} g'(s) − b`, so the Hill criterion
//! `A < c·max{c, 2√b}` makes all solutions converge to each other
//! exponentially.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::hill::{decay_rate, stability_threshold, PhaseState, SystemParams};
use crate::propagator::{
    fit_log_linear, CoefficientSignal, ExpFit, Rk4, SimOptions, StageTime, DEFAULT_FIT_WINDOW,
    STEPS_PER_OSCILLATION,
};
use crate::Scalar;

/// Relative tolerance on ultimate-bound checks.
pub const ULTIMATE_BOUND_RTOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DuffingParams<T: Scalar> {
    pub b: T,
    pub c: T,
    pub a_nl: T,
    pub p: T,
}

impl<T: Scalar> DuffingParams<T> {
    pub fn new(b: T, c: T, a_nl: T, p: T) -> Result<Self> {
        ensure(b.is_finite() && b > T::zero(), || {
            format!("b must be positive, got {b}")
        })?;
        ensure(c.is_finite() && c > T::zero(), || {
            format!("c must be positive, got {c}")
        })?;
        ensure(a_nl.is_finite() && a_nl >= T::zero(), || {
            format!("nonlinearity coefficient must be nonnegative, got {a_nl}")
        })?;
        ensure(p.is_finite() && p > T::zero(), || {
            format!("exponent must be positive, got {p}")
        })?;
        Ok(Self { b, c, a_nl, p })
    }

    /// `g(u) = b·u + a·|u|^p·u`.
    #[inline]
    pub fn restoring(&self, u: T) -> T {
        self.b * u + self.a_nl * u.abs().powf(self.p) * u
    }

    /// `g'(s) = b + (p + 1)·a·|s|^p`.
    #[inline]
    pub fn stiffness(&self, s: T) -> T {
        self.b + (self.p + T::one()) * self.a_nl * s.abs().powf(self.p)
    }

    /// `½v² + ½b·u² + a·|u|^{p+2}/(p + 2)`.
    pub fn energy(&self, u: T, v: T) -> T {
        let two = T::two();
        T::half() * (v * v + self.b * u * u)
            + self.a_nl * u.abs().powf(self.p + two) / (self.p + two)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum ForcingKind<T: Scalar> {
    Cosine {
        amplitude: T,
        frequency: T,
        phase: T,
    },
    Piecewise(CoefficientSignal<T>),
}

/// External forcing `f(t)` with its declared bound on `|f|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Forcing<T: Scalar> {
    pub kind: ForcingKind<T>,
    bound: T,
}

impl<T: Scalar> Forcing<T> {
    pub fn zero() -> Self {
        Self::cosine(T::zero(), T::zero(), T::zero())
    }

    /// `amplitude·cos(frequency·t + phase)`.
    pub fn cosine(amplitude: T, frequency: T, phase: T) -> Self {
        Self {
            kind: ForcingKind::Cosine {
                amplitude,
                frequency,
                phase,
            },
            bound: amplitude.abs(),
        }
    }

    pub fn piecewise(signal: CoefficientSignal<T>) -> Self {
        let bound = signal.max_value().abs().max(signal.min_value().abs());
        Self {
            kind: ForcingKind::Piecewise(signal),
            bound,
        }
    }

    /// Declares a larger bound than the signal's own maximum.
    pub fn with_bound(mut self, bound: T) -> Result<Self> {
        ensure(bound >= self.bound, || {
            format!("declared bound {bound} below actual maximum {}", self.bound)
        })?;
        self.bound = bound;
        Ok(self)
    }

    pub fn bound(&self) -> T {
        self.bound
    }

    #[inline]
    pub fn eval(&self, at: StageTime<T>) -> T {
        match &self.kind {
            ForcingKind::Cosine {
                amplitude,
                frequency,
                phase,
            } => *amplitude * (*frequency * at.t + *phase).cos(),
            ForcingKind::Piecewise(s) => s.value_at(at.segment_start).unwrap_or_else(|_| T::zero()),
        }
    }

    fn breakpoints(&self, t0: T, t1: T) -> Result<Vec<T>> {
        match &self.kind {
            ForcingKind::Cosine { .. } => Ok(Vec::new()),
            ForcingKind::Piecewise(s) => s.interior_breakpoints(t0, t1),
        }
    }
}

fn check_positive<T: Scalar>(b: T, c: T) -> Result<()> {
    ensure(b.is_finite() && b > T::zero(), || {
        format!("b must be positive, got {b}")
    })?;
    ensure(c.is_finite() && c > T::zero(), || {
        format!("c must be positive, got {c}")
    })
}

/// `max{2/(c√b), 1/b}·forcing_bound`.
pub fn ultimate_bound<T: Scalar>(b: T, c: T, forcing_bound: T) -> Result<T> {
    check_positive(b, c)?;
    ensure(forcing_bound >= T::zero(), || {
        format!("forcing bound must be nonnegative, got {forcing_bound}")
    })?;
    let factor = (T::two() / (c * b.sqrt())).max(T::one() / b);
    Ok(factor * forcing_bound)
}

/// `A = sup_{|s| ≤ M} g'(s) − b = (p + 1)·a·M^p`.
pub fn difference_ceiling<T: Scalar>(dp: &DuffingParams<T>, m: T) -> Result<T> {
    ensure(m >= T::zero(), || {
        format!("amplitude must be nonnegative, got {m}")
    })?;
    Ok((dp.p + T::one()) * dp.a_nl * m.powf(dp.p))
}

/// Largest `limsup |f|` (exclusive) for which all solutions converge to each
/// other; `+∞` for the linear equation.
pub fn convergence_threshold<T: Scalar>(dp: &DuffingParams<T>) -> T {
    if dp.a_nl <= T::zero() {
        return T::infinity();
    }
    let (b, c, p) = (dp.b, dp.c, dp.p);
    let inv_p = T::one() / p;
    let root = (dp.a_nl * (p + T::one())).powf(inv_p);
    let large_damping = b * c.powf(T::two() * inv_p) / root;
    let small_damping = c.powf((p + T::one()) * inv_p) * b.powf((p + T::one()) / (T::two() * p))
        / (T::two().powf((p - T::one()) * inv_p) * root);
    large_damping.min(small_damping)
}

/// Default RK4 step: 1000 steps per period of the stiffest linearization met
/// within the a-priori amplitude of the given initial states.
pub fn default_step<T: Scalar>(
    dp: &DuffingParams<T>,
    forcing: &Forcing<T>,
    states: &[(T, T)],
) -> Result<T> {
    let forced = ultimate_bound(dp.b, dp.c, forcing.bound())?;
    let amplitude = states
        .iter()
        .map(|&(u, v)| (T::two() * dp.energy(u, v) / dp.b).sqrt())
        .fold(T::two() * forced, T::max);
    let omega = dp.stiffness(amplitude).sqrt();
    Ok(T::two() * T::PI() / (T::lit(STEPS_PER_OSCILLATION) * omega))
}

fn integrate<T: Scalar>(
    dp: &DuffingParams<T>,
    forcing: &Forcing<T>,
    y0: &[T],
    t_end: T,
    h: T,
    stride: usize,
) -> Result<crate::propagator::SampledPath<T>> {
    let breakpoints = forcing.breakpoints(T::zero(), t_end)?;
    let dp = *dp;
    Rk4::new(h)?.record_every(stride).integrate(
        |at, y, dy| {
            let f = forcing.eval(at);
            for (state, d) in y.chunks_exact(2).zip(dy.chunks_exact_mut(2)) {
                d[0] = state[1];
                d[1] = f - dp.c * state[1] - dp.restoring(state[0]);
            }
        },
        y0,
        T::zero(),
        t_end,
        &breakpoints,
    )
}

/// Gap `|u − v| + |u' − v'|` between two solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GapSeries<T: Scalar> {
    pub times: Vec<T>,
    pub gaps: Vec<T>,
}

impl<T: Scalar> GapSeries<T> {
    /// Columns `t,gap,log_gap`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "gap", "log_gap"])?;
        for (t, g) in self.times.iter().zip(&self.gaps) {
            out.write_record([t.to_string(), g.to_string(), g.ln().to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PairRun<T: Scalar> {
    pub first: Vec<PhaseState<T>>,
    pub second: Vec<PhaseState<T>>,
    pub gap: GapSeries<T>,
    pub gap_fit: ExpFit<T>,
    pub step: T,
    /// Largest `|u|` of either solution over the trailing half.
    pub observed_amplitude: T,
    /// `A` at the observed amplitude.
    pub difference_ceiling: T,
    /// Hill decay rate for `(b, c, A)`; the gap decays at least at half of it.
    pub certified_rate: T,
}

/// Integrates two solutions of the Duffing equation from `t = 0` to `t_end`
/// with identical steps.
pub fn simulate_pair<T: Scalar>(
    dp: &DuffingParams<T>,
    forcing: &Forcing<T>,
    first: (T, T),
    second: (T, T),
    t_end: T,
    opts: SimOptions<T>,
) -> Result<PairRun<T>> {
    ensure(t_end > T::zero(), || {
        format!("t_end must be positive, got {t_end}")
    })?;
    let h = match opts.h {
        Some(h) => h,
        None => default_step(dp, forcing, &[first, second])?,
    };
    let path = integrate(
        dp,
        forcing,
        &[first.0, first.1, second.0, second.1],
        t_end,
        h,
        opts.stride(t_end, h),
    )?;
    let mut a = Vec::with_capacity(path.len());
    let mut b = Vec::with_capacity(path.len());
    let mut gaps = Vec::with_capacity(path.len());
    for (&t, y) in path.times.iter().zip(&path.states) {
        a.push(PhaseState::new(t, y[0], y[1]));
        b.push(PhaseState::new(t, y[2], y[3]));
        gaps.push((y[0] - y[2]).abs() + (y[1] - y[3]).abs());
    }
    let gap_fit = fit_log_linear(&path.times, &gaps, T::lit(DEFAULT_FIT_WINDOW))?;
    let tail = trailing_start(&path.times);
    let observed_amplitude = a[tail..]
        .iter()
        .chain(&b[tail..])
        .map(|s| s.u.abs())
        .fold(T::zero(), T::max);
    let ceiling = difference_ceiling(dp, observed_amplitude)?;
    let certified_rate = match stability_threshold(dp.b, dp.c) {
        Ok(th) if ceiling < th => decay_rate(&SystemParams::new(dp.b, dp.c, ceiling)?),
        _ => T::zero(),
    };
    Ok(PairRun {
        first: a,
        second: b,
        gap: GapSeries {
            times: path.times,
            gaps,
        },
        gap_fit,
        step: h,
        observed_amplitude,
        difference_ceiling: ceiling,
        certified_rate,
    })
}

fn trailing_start<T: Scalar>(times: &[T]) -> usize {
    let (t0, t1) = (times[0], *times.last().unwrap());
    let mid = t0 + (t1 - t0) * T::half();
    times.partition_point(|&t| t < mid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct UltimateBoundReport<T: Scalar> {
    pub bound: T,
    /// `max |u|` over the trailing half of the horizon, every step inspected.
    pub trailing_max: T,
    pub tolerance: T,
    pub holds: bool,
}

/// Measures `max |u|` over the trailing half of `[0, t_end]` against
/// [`ultimate_bound`] with relative tolerance [`ULTIMATE_BOUND_RTOL`].
pub fn verify_ultimate_bound<T: Scalar>(
    dp: &DuffingParams<T>,
    forcing: &Forcing<T>,
    state0: (T, T),
    t_end: T,
    h: Option<T>,
) -> Result<UltimateBoundReport<T>> {
    ensure(t_end > T::zero(), || {
        format!("t_end must be positive, got {t_end}")
    })?;
    let bound = ultimate_bound(dp.b, dp.c, forcing.bound())?;
    let h = match h {
        Some(h) => h,
        None => default_step(dp, forcing, &[state0])?,
    };
    let path = integrate(dp, forcing, &[state0.0, state0.1], t_end, h, 1)?;
    let tail = trailing_start(&path.times);
    let trailing_max = path.states[tail..]
        .iter()
        .map(|y| y[0].abs())
        .fold(T::zero(), T::max);
    let tolerance = T::lit(ULTIMATE_BOUND_RTOL) * bound;
    Ok(UltimateBoundReport {
        bound,
        trailing_max,
        tolerance,
        holds: trailing_max <= bound + tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> DuffingParams<f64> {
        DuffingParams::new(1.0, 2.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn ultimate_bound_examples() {
        assert_eq!(ultimate_bound(1.0, 2.0, 3.0).unwrap(), 3.0);
        assert_eq!(ultimate_bound(4.0, 1.0, 5.0).unwrap(), 5.0);
        assert_eq!(ultimate_bound(1.0, 2.0, 0.0).unwrap(), 0.0);
        assert!((ultimate_bound(25.0_f64, 1.0, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(ultimate_bound(0.0, 1.0, 1.0).is_err());
        assert!(ultimate_bound(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn difference_ceiling_examples() {
        assert_eq!(difference_ceiling(&cubic(), 0.0).unwrap(), 0.0);
        assert_eq!(difference_ceiling(&cubic(), 2.0).unwrap(), 12.0);
    }

    #[test]
    fn ceiling_at_ultimate_bound_reproduces_branch_formulas() {
        let (a, p, f) = (0.7_f64, 3.0_f64, 0.9_f64);
        // c ≥ 2√b: (p+1)·a·F^p / b^p
        let dp = DuffingParams::new(1.5, 4.0, a, p).unwrap();
        let m = ultimate_bound(dp.b, dp.c, f).unwrap();
        let expected = (p + 1.0) * a * f.powf(p) / dp.b.powf(p);
        assert!((difference_ceiling(&dp, m).unwrap() - expected).abs() < 1e-12);
        // c ≤ 2√b: (p+1)·a·2^p·F^p / (c^p·b^{p/2})
        let dp = DuffingParams::new(4.0, 1.0, a, p).unwrap();
        let m = ultimate_bound(dp.b, dp.c, f).unwrap();
        let expected =
            (p + 1.0) * a * 2.0_f64.powf(p) * f.powf(p) / (dp.c.powf(p) * dp.b.powf(p / 2.0));
        assert!((difference_ceiling(&dp, m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn convergence_threshold_examples() {
        // 2/√3 and 4/√3 (mpmath)
        assert!((convergence_threshold(&cubic()) - 1.154_700_538_379_251_5).abs() < 1e-14);
        let dp = DuffingParams::new(1.0_f64, 4.0, 1.0, 2.0).unwrap();
        assert!((convergence_threshold(&dp) - 2.309_401_076_758_503).abs() < 1e-14);
        let linear = DuffingParams::new(1.0, 1.0, 0.0, 2.0).unwrap();
        assert_eq!(convergence_threshold(&linear), f64::INFINITY);
    }

    #[test]
    fn threshold_forcing_puts_ceiling_on_hill_threshold() {
        // At F = threshold, A(ultimate bound) equals c·max{c, 2√b}.
        for (b, c) in [(1.0_f64, 3.0_f64), (2.0, 1.0), (0.5, 0.5)] {
            let dp = DuffingParams::new(b, c, 1.3, 2.0).unwrap();
            let f = convergence_threshold(&dp);
            let m = ultimate_bound(b, c, f).unwrap();
            let a = difference_ceiling(&dp, m).unwrap();
            let th = stability_threshold(b, c).unwrap();
            assert!((a - th).abs() < 1e-10 * th, "b={b} c={c}: {a} vs {th}");
        }
    }

    #[test]
    fn params_validation() {
        assert!(DuffingParams::new(0.0, 1.0, 1.0, 2.0).is_err());
        assert!(DuffingParams::new(1.0, 0.0, 1.0, 2.0).is_err());
        assert!(DuffingParams::new(1.0, 1.0, -1.0, 2.0).is_err());
        assert!(DuffingParams::new(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn restoring_force_is_monotone_with_slope_at_least_b() {
        let dp = DuffingParams::new(0.5_f64, 1.0, 2.0, 1.5).unwrap();
        assert_eq!(dp.restoring(0.0), 0.0);
        let mut prev = dp.restoring(-3.0);
        for i in 1..=600 {
            let u = -3.0 + i as f64 * 0.01;
            let g = dp.restoring(u);
            assert!(g - prev >= 0.5 * 0.01 - 1e-12);
            prev = g;
        }
    }

    #[test]
    fn forcing_bound_rules() {
        let f = Forcing::cosine(-2.0, 1.0, 0.0);
        assert_eq!(f.bound(), 2.0);
        assert!(f.clone().with_bound(1.0).is_err());
        assert_eq!(f.with_bound(3.0).unwrap().bound(), 3.0);
        let s = CoefficientSignal::new(vec![0.0, 1.0], vec![0.5, -1.5], Some(2.0)).unwrap();
        assert_eq!(Forcing::piecewise(s).bound(), 1.5);
    }

    #[test]
    fn identical_states_have_zero_gap() {
        let run = simulate_pair(
            &cubic(),
            &Forcing::cosine(0.5, 1.0, 0.0),
            (0.3, 0.1),
            (0.3, 0.1),
            5.0,
            SimOptions::default(),
        )
        .unwrap();
        assert!(run.gap.gaps.iter().all(|&g| g == 0.0));
        assert!(run.gap_fit.underflow);
    }

    #[test]
    fn swapping_initial_states_gives_identical_gap() {
        let f = Forcing::cosine(0.8, 1.3, 0.2);
        let one = simulate_pair(
            &cubic(),
            &f,
            (1.0, -0.5),
            (-0.7, 0.2),
            10.0,
            SimOptions::default(),
        )
        .unwrap();
        let two = simulate_pair(
            &cubic(),
            &f,
            (-0.7, 0.2),
            (1.0, -0.5),
            10.0,
            SimOptions::default(),
        )
        .unwrap();
        assert_eq!(one.gap, two.gap);
    }

    #[test]
    fn unforced_pair_converges_to_rest() {
        let run = simulate_pair(
            &cubic(),
            &Forcing::zero(),
            (1.5, 0.0),
            (-1.0, 1.0),
            30.0,
            SimOptions::default(),
        )
        .unwrap();
        let last = run.first.last().unwrap();
        assert!(last.u.abs() < 1e-9 && run.second.last().unwrap().u.abs() < 1e-9);
        assert!(*run.gap.gaps.last().unwrap() < 1e-9);
        assert!(run.gap_fit.rate > 0.0);
    }

    #[test]
    fn fitted_gap_rate_respects_certified_rate() {
        let f = Forcing::cosine(0.5, 1.0, 0.0);
        for (a, b) in [
            ((1.0, 0.0), (-1.0, 0.5)),
            ((2.0, -1.0), (0.0, 1.5)),
            ((0.1, 0.1), (-0.3, 0.0)),
        ] {
            let run = simulate_pair(&cubic(), &f, a, b, 25.0, SimOptions::default()).unwrap();
            assert!(run.difference_ceiling < stability_threshold(1.0, 2.0).unwrap());
            assert!(run.certified_rate > 0.0);
            assert!(
                run.gap_fit.rate >= 0.5 * run.certified_rate,
                "{} vs {}",
                run.gap_fit.rate,
                run.certified_rate
            );
        }
    }

    #[test]
    fn piecewise_forcing_is_applied_per_segment() {
        // u'' + 2u' + u = 1 on [0, 1), 0 afterwards, with a linear restoring force.
        let dp = DuffingParams::new(1.0_f64, 2.0, 0.0, 2.0).unwrap();
        let s = CoefficientSignal::new(vec![0.0, 1.0], vec![1.0, 0.0], None).unwrap();
        let run = simulate_pair(
            &dp,
            &Forcing::piecewise(s),
            (0.0, 0.0),
            (0.0, 0.0),
            2.0,
            SimOptions::with_step(1e-3),
        )
        .unwrap();
        let at_one = run
            .first
            .iter()
            .find(|p| p.t == 1.0)
            .expect("breakpoint sampled");
        // particular solution 1 − (1 + t)e^{−t}
        let exact = 1.0 - 2.0 * (-1.0_f64).exp();
        assert!((at_one.u - exact).abs() < 1e-12);
    }

    #[test]
    fn ultimate_bound_holds_for_moderate_forcing() {
        let rep = verify_ultimate_bound(
            &cubic(),
            &Forcing::cosine(1.0, 1.0, 0.0),
            (2.0, -1.0),
            60.0,
            None,
        )
        .unwrap();
        assert!(rep.holds, "{rep:?}");
        let stiff = DuffingParams::new(25.0_f64, 1.0, 1.0, 2.0).unwrap();
        let rep = verify_ultimate_bound(
            &stiff,
            &Forcing::cosine(2.0, 5.0, 0.0),
            (0.5, 0.0),
            40.0,
            None,
        )
        .unwrap();
        assert!((rep.bound - 0.8).abs() < 1e-15);
        assert!(rep.holds, "{rep:?}");
    }

    #[test]
    fn gap_csv_layout() {
        let g = GapSeries {
            times: vec![0.0, 1.0],
            gaps: vec![1.0, 0.5],
        };
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,gap,log_gap\n0,1,0\n1,0.5,-0.69314718"));
    }
}
