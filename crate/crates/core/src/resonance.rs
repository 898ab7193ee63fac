//! Explicit parametric-resonance counterexample.
//!
//! For `ω > 1` the coefficient `α(t)` equals `ω²` on `[0, π/2ω)` and `1` on
//! `[π/2ω, T)`, `T = π/2ω + π/2`, repeated `T`-periodically. The equation
//! `v'' + α(t)v = 0` then has the closed-form solution
//!
//! ```text
//! v(t + kT) = (−ω)^k cos ωt               on [0, π/2ω]
//!           = (−ω)^{k+1} sin(t − π/2ω)     on [π/2ω, T]
//! ```
//!
//! and `u = e^{−ct/2}·v` solves `u'' + c·u' + (1 + c²/4 + α(t) − 1)·u = 0`,
//! which grows by `ω·e^{−cT/2}` per period. It is unbounded for `c < c₀`
//! with `c₀ = 4ω·ln ω / (π(1 + ω))`.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::hill::{certify, PhaseState, SystemParams};
use crate::propagator::{propagate_at, CoefficientSignal};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ResonantSystem<T: Scalar> {
    pub omega: T,
    pub period: T,
    /// `α(t) ∈ {ω², 1}`.
    pub signal: CoefficientSignal<T>,
    /// Largest damping for which the solution is unbounded (exclusive).
    pub c0: T,
    /// `C = ω² − 1`.
    pub ceiling: T,
}

/// Builds the counterexample for frequency `omega > 1`.
pub fn build<T: Scalar>(omega: T) -> Result<ResonantSystem<T>> {
    ResonantSystem::new(omega)
}

fn critical_damping<T: Scalar>(omega: T) -> T {
    // ln ω via ln_1p keeps accuracy as ω → 1⁺
    let ln_w = (omega - T::one()).ln_1p();
    T::lit(4.0) * omega * ln_w / (T::PI() * (T::one() + omega))
}

impl<T: Scalar> ResonantSystem<T> {
    pub fn new(omega: T) -> Result<Self> {
        ensure(omega.is_finite() && omega > T::one(), || {
            format!("omega must exceed 1, got {omega}")
        })?;
        let switch = T::FRAC_PI_2() / omega;
        let period = switch + T::FRAC_PI_2();
        let signal = CoefficientSignal::new(
            vec![T::zero(), switch],
            vec![omega * omega, T::one()],
            Some(period),
        )?;
        let h = omega - T::one();
        Ok(Self {
            omega,
            period,
            signal,
            c0: critical_damping(omega),
            ceiling: h * (T::two() + h),
        })
    }

    /// End of the `ω²` piece, `π/2ω`.
    pub fn switch_time(&self) -> T {
        T::FRAC_PI_2() / self.omega
    }

    /// `(b, c, C) = (1 + c²/4, c, ω² − 1)`.
    pub fn params(&self, c: T) -> Result<SystemParams<T>> {
        SystemParams::new(T::one() + c * c / T::lit(4.0), c, self.ceiling)
    }

    /// `a(t) = α(t) − 1 ∈ {0, C}`.
    pub fn coefficient_signal(&self) -> CoefficientSignal<T> {
        self.signal.shifted(-T::one())
    }

    /// `(v(t), v'(t))` for `t ≥ 0`.
    pub fn exact_v(&self, t: T) -> Result<(T, T)> {
        ensure(t.is_finite() && t >= T::zero(), || {
            format!("t must be nonnegative, got {t}")
        })?;
        let w = self.omega;
        let k = (t / self.period).floor();
        let mut tau = t - k * self.period;
        let mut k = k.to_i32().unwrap_or(i32::MAX);
        if tau >= self.period {
            tau = tau - self.period;
            k += 1;
        }
        let switch = self.switch_time();
        Ok(if tau < switch {
            let amp = (-w).powi(k);
            let (s, c) = (w * tau).sin_cos();
            (amp * c, -amp * w * s)
        } else {
            let amp = (-w).powi(k + 1);
            let (s, c) = (tau - switch).sin_cos();
            (amp * s, amp * c)
        })
    }

    /// `(u, u')` with `u = e^{−ct/2}·v`.
    pub fn damped_solution(&self, c: T, t: T) -> Result<(T, T)> {
        ensure(c >= T::zero(), || format!("c must be nonnegative, got {c}"))?;
        let (v, dv) = self.exact_v(t)?;
        let e = (-c * t * T::half()).exp();
        Ok((e * v, e * (dv - c * T::half() * v)))
    }

    /// `ω·e^{−cT/2}`: growth of the damped solution over one period.
    pub fn growth_factor(&self, c: T) -> T {
        self.omega * (-c * self.period * T::half()).exp()
    }

    /// Propagates the damped system exactly across `n_periods` from the
    /// closed-form initial state `(1, −c/2)` and compares per-period growth
    /// with [`growth_factor`](Self::growth_factor).
    pub fn verify_unbounded(&self, c: T, n_periods: usize) -> Result<GrowthReport<T>> {
        ensure(c.is_finite() && c >= T::zero(), || {
            format!("c must be nonnegative, got {c}")
        })?;
        ensure(n_periods >= 1, || "need at least one period".into())?;
        let params = self.params(c)?;
        let signal = self.coefficient_signal();
        let start = PhaseState::origin(T::one(), -c * T::half());
        let times: Vec<T> = (0..=n_periods)
            .map(|k| T::from_usize(k).unwrap() * self.period)
            .collect();
        let states = propagate_at(&params, &signal, &start, &times)?;
        let predicted = self.growth_factor(c);
        let factors: Vec<T> = states
            .windows(2)
            .map(|w| (w[1].norm_sq() / w[0].norm_sq()).sqrt())
            .collect();
        let max_factor_error = factors
            .iter()
            .map(|&f| (f - predicted).abs())
            .fold(T::zero(), T::max);
        let mut max_closed_form_error = T::zero();
        for s in &states {
            let (u, du) = self.damped_solution(c, s.t)?;
            let scale = u.abs().max(du.abs()).max(T::min_positive_value());
            let err = (s.u - u).abs().max((s.v - du).abs()) / scale;
            max_closed_form_error = max_closed_form_error.max(err);
        }
        let initial_norm = states[0].norm_sq().sqrt();
        let final_norm = states[n_periods].norm_sq().sqrt();
        Ok(GrowthReport {
            omega: self.omega,
            c,
            c0: self.c0,
            predicted_factor: predicted,
            factors,
            max_factor_error,
            max_closed_form_error,
            initial_norm,
            final_norm,
            certified_stable: certify(&params).holds_main,
            states,
        })
    }
}

/// Outcome of [`ResonantSystem::verify_unbounded`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GrowthReport<T: Scalar> {
    pub omega: T,
    pub c: T,
    pub c0: T,
    pub predicted_factor: T,
    /// `|x((k+1)T)| / |x(kT)|` for each period.
    pub factors: Vec<T>,
    pub max_factor_error: T,
    /// Largest relative deviation of the propagated states from `e^{−ct/2}v`.
    pub max_closed_form_error: T,
    pub initial_norm: T,
    pub final_norm: T,
    /// Whether the stability criterion (wrongly) certifies these parameters.
    pub certified_stable: bool,
    /// States at `t = kT`.
    pub states: Vec<PhaseState<T>>,
}

impl<T: Scalar> GrowthReport<T> {
    pub fn grows(&self) -> bool {
        self.final_norm > self.initial_norm
    }

    /// Columns `k,t,u,v,factor` (factor empty on the first row).
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "t", "u", "v", "factor"])?;
        for (k, s) in self.states.iter().enumerate() {
            let factor = if k == 0 {
                String::new()
            } else {
                self.factors[k - 1].to_string()
            };
            out.write_record([
                k.to_string(),
                s.t.to_string(),
                s.u.to_string(),
                s.v.to_string(),
                factor,
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// `C / (c₀√b)` at `ω = 1 + h`, `b = 1 + c₀²/4`; tends to `π` as `h → 0⁺`.
pub fn sharpness_ratio<T: Scalar>(h: T) -> Result<T> {
    SweepRow::at(h).map(|row| row.ratio)
}

/// One row of a sharpness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepRow<T: Scalar> {
    pub h: T,
    pub omega: T,
    pub c0: T,
    #[serde(rename = "C")]
    pub ceiling: T,
    pub ratio: T,
}

impl<T: Scalar> SweepRow<T> {
    pub fn at(h: T) -> Result<Self> {
        ensure(h.is_finite() && h > T::zero(), || {
            format!("h must be positive, got {h}")
        })?;
        let sys = ResonantSystem::new(T::one() + h)?;
        let b = T::one() + sys.c0 * sys.c0 / T::lit(4.0);
        Ok(Self {
            h,
            omega: sys.omega,
            c0: sys.c0,
            ceiling: sys.ceiling,
            ratio: sys.ceiling / (sys.c0 * b.sqrt()),
        })
    }
}

pub fn sharpness_sweep<T: Scalar>(hs: &[T]) -> Result<Vec<SweepRow<T>>> {
    hs.iter().map(|&h| SweepRow::at(h)).collect()
}

/// Columns `h,omega,c0,C,ratio`.
pub fn write_sweep_csv<T: Scalar, W: io::Write>(rows: &[SweepRow<T>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["h", "omega", "c0", "C", "ratio"])?;
    for r in rows {
        out.write_record([
            r.h.to_string(),
            r.omega.to_string(),
            r.c0.to_string(),
            r.ceiling.to_string(),
            r.ratio.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    #[test]
    fn build_examples() {
        let sys = build(2.0_f64).unwrap();
        assert!((sys.period - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!((sys.ceiling - 3.0).abs() < 1e-15);
        // mpmath: 4·2·ln 2 / (3π)
        assert!((sys.c0 - 0.588_361_600_407_070_9).abs() < 1e-15);
        let sys = build(E).unwrap();
        assert!((sys.c0 - 0.930_812_691_829_602_5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_limit() {
        let sys = build(1.0 + 1e-9_f64).unwrap();
        assert!(sys.ceiling < 3e-9 && sys.c0 < 1e-9);
        assert!(build(1.0_f64).is_err());
        assert!(build(0.5_f64).is_err());
    }

    #[test]
    fn exact_v_initial_and_switch_values() {
        let sys = build(2.0_f64).unwrap();
        assert_eq!(sys.exact_v(0.0).unwrap(), (1.0, 0.0));
        let ts = sys.switch_time();
        let (v, dv) = sys.exact_v(ts).unwrap();
        assert!(v.abs() < 1e-15 && (dv + 2.0).abs() < 1e-15);
        let (v, dv) = sys.exact_v(ts * (1.0 - 1e-15)).unwrap();
        assert!(v.abs() < 1e-14 && (dv + 2.0).abs() < 1e-14);
    }

    #[test]
    fn exact_v_grows_by_omega_per_period() {
        let sys = build(1.5_f64).unwrap();
        for k in 0..=10 {
            let (v, _) = sys.exact_v(k as f64 * sys.period).unwrap();
            assert!(
                (v.abs() - 1.5_f64.powi(k)).abs() < 1e-12 * 1.5_f64.powi(k),
                "k = {k}"
            );
        }
    }

    #[test]
    fn damped_solution_examples() {
        let sys = build(2.0_f64).unwrap();
        for t in [0.0, 0.3, 1.7, 9.2] {
            let (u, _) = sys.damped_solution(0.0, t).unwrap();
            assert_eq!(u, sys.exact_v(t).unwrap().0);
        }
        // mpmath: 2·exp(−0.25·3π/4)
        assert!((sys.growth_factor(0.5) - 1.109_709_820_319_706_8).abs() < 1e-14);
        assert!((sys.growth_factor(sys.c0) - 1.0).abs() < 1e-14);
        assert!(sys.damped_solution(-0.1, 1.0).is_err());
    }

    #[test]
    fn sharpness_ratio_examples() {
        // mpmath values
        assert!((sharpness_ratio(0.1_f64).unwrap() - 3.302_001_425_277_870).abs() < 1e-12);
        assert!((sharpness_ratio(0.01_f64).unwrap() - 3.157_336_722_669_740).abs() < 1e-12);
        assert!((sharpness_ratio(0.001_f64).unwrap() - 3.143_163_814_019_326).abs() < 1e-12);
        assert!(sharpness_ratio(0.0_f64).is_err());
    }

    #[test]
    fn verify_unbounded_examples() {
        let sys = build(2.0_f64).unwrap();
        let rep = sys.verify_unbounded(0.5, 20).unwrap();
        assert!(rep.max_factor_error < 1e-9, "{}", rep.max_factor_error);
        assert!(rep.grows() && !rep.certified_stable);
        assert!(rep.max_closed_form_error < 1e-12);

        let rep = sys.verify_unbounded(0.7, 20).unwrap();
        assert!(!rep.grows());
        assert!((rep.predicted_factor - 0.876_760_958_526_820_1).abs() < 1e-14);

        let rep = sys.verify_unbounded(0.0, 10).unwrap();
        assert!(rep.factors.iter().all(|f| (f - 2.0).abs() < 1e-12));
    }

    #[test]
    fn sweep_csv_layout() {
        let rows = sharpness_sweep(&[0.1_f64, 0.01]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,omega,c0,C,ratio\n0.1,1.1,"));
        assert_eq!(text.lines().count(), 3);
    }
}
