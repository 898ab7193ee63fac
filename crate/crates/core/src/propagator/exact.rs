use crate::error::{ensure, Result};
use crate::hill::PhaseState;
use crate::Scalar;

/// Relative discriminant band treated as critical damping.
pub const CRITICAL_BAND: f64 = 1e-9;

/// Row-major state-transition matrix of `u'' + c·u' + q·u = 0` over `dt`.
///
/// With `σ = c/2` and `s = q − σ²` the solution is
/// `u(t) = e^{−σt}[u₀·C(t) + (v₀ + σu₀)·S(t)]` where `C, S` are `cos ωt,
/// sin(ωt)/ω` (`s = ω² > 0`), `cosh κt, sinh(κt)/κ` (`s = −κ² < 0`) or their
/// common limit `1, t` at critical damping.
pub fn transition_matrix<T: Scalar>(q: T, c: T, dt: T) -> Result<[[T; 2]; 2]> {
    ensure(dt.is_finite() && dt >= T::zero(), || {
        format!("time step must be nonnegative, got {dt}")
    })?;
    ensure(q.is_finite() && c.is_finite(), || {
        "coefficients must be finite".into()
    })?;
    let sigma = c * T::half();
    let s = q - sigma * sigma;
    let disc = c * c - T::lit(4.0) * q;
    let scale = (c * c).max(T::lit(4.0) * q.abs());
    let critical = disc.abs() < T::lit(CRITICAL_BAND) * scale;

    let x = s * dt * dt;
    let (decay, cc, ss) = if critical && x.abs() < T::lit(1e-3) {
        // Series in s·t² around the polynomial-exponential critical solution.
        let x2 = x * x;
        let cc = T::one() - x / T::two() + x2 / T::lit(24.0) - x2 * x / T::lit(720.0);
        let ss = dt * (T::one() - x / T::lit(6.0) + x2 / T::lit(120.0) - x2 * x / T::lit(5040.0));
        ((-sigma * dt).exp(), cc, ss)
    } else if s > T::zero() {
        let w = s.sqrt();
        let (sn, cs) = (w * dt).sin_cos();
        ((-sigma * dt).exp(), cs, sn / w)
    } else {
        let k = (-s).sqrt();
        let kt = k * dt;
        if kt <= T::one() {
            (
                (-sigma * dt).exp(),
                kt.cosh(),
                if k > T::zero() { kt.sinh() / k } else { dt },
            )
        } else {
            // e^{−σt}cosh κt and e^{−σt}sinh(κt)/κ without overflowing either factor.
            let slow = ((k - sigma) * dt).exp();
            let fast = (-(k + sigma) * dt).exp();
            let ch = (slow + fast) * T::half();
            let sh = (slow - fast) * T::half() / k;
            let m = [[ch + sigma * sh, sh], [-q * sh, ch - sigma * sh]];
            return Ok(m);
        }
    };
    Ok([
        [decay * (cc + sigma * ss), decay * ss],
        [-decay * q * ss, decay * (cc - sigma * ss)],
    ])
}

/// Advances `state` by `dt` along `u'' + c·u' + q·u = 0` exactly.
pub fn step_constant<T: Scalar>(q: T, c: T, state: &PhaseState<T>, dt: T) -> Result<PhaseState<T>> {
    let m = transition_matrix(q, c, dt)?;
    Ok(PhaseState::new(
        state.t + dt,
        m[0][0] * state.u + m[0][1] * state.v,
        m[1][0] * state.u + m[1][1] * state.v,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn harmonic_quarter_period() {
        let s = step_constant(1.0, 0.0, &PhaseState::origin(1.0, 0.0), PI / 2.0).unwrap();
        assert!(close(s.u, 0.0, 1e-15) && close(s.v, -1.0, 1e-15));
        assert!(close(s.t, PI / 2.0, 0.0));
    }

    #[test]
    fn critically_damped_closed_form() {
        let s = step_constant(1.0, 2.0, &PhaseState::origin(1.0, 0.0), 1.0).unwrap();
        // u = (1 + t)e^{−t}, u' = −t·e^{−t}
        assert!(close(s.u, 0.735_758_882_342_884_6, 1e-15));
        assert!(close(s.v, -0.367_879_441_171_442_3, 1e-15));
    }

    #[test]
    fn undamped_frequency_omega() {
        let w = 3.0_f64;
        let s = step_constant(w * w, 0.0, &PhaseState::origin(1.0, 0.0), PI / (2.0 * w)).unwrap();
        assert!(close(s.u, 0.0, 1e-15) && close(s.v, -w, 1e-14));
    }

    #[test]
    fn overdamped_matches_exponential_modes() {
        // roots −1 and −3: u = (3e^{−t} − e^{−3t})/2 for (1, 0)
        let (q, c) = (3.0, 4.0);
        for t in [0.1_f64, 1.0, 5.0, 40.0] {
            let s = step_constant(q, c, &PhaseState::origin(1.0, 0.0), t).unwrap();
            let u = (3.0 * (-t).exp() - (-3.0 * t).exp()) / 2.0;
            let v = (-3.0 * (-t).exp() + 3.0 * (-3.0 * t).exp()) / 2.0;
            assert!(close(s.u, u, 1e-14 * u.abs().max(1e-300)), "t = {t}");
            assert!(close(s.v, v, 1e-14 * v.abs().max(1e-300)), "t = {t}");
        }
    }

    #[test]
    fn strongly_overdamped_long_step_stays_finite() {
        let s = step_constant(1e-4, 10.0, &PhaseState::origin(1.0, 1.0), 1e4).unwrap();
        assert!(s.is_finite());
        assert!(s.u > 0.0 && s.u < 1.0);
    }

    #[test]
    fn near_critical_is_continuous_across_branch() {
        let state = PhaseState::origin(0.3, -0.7);
        let exact = step_constant(1.0, 2.0, &state, 2.5).unwrap();
        for eps in [1e-12, 1e-10, 1e-8, 1e-6] {
            for sign in [-1.0, 1.0] {
                let s = step_constant(1.0 + sign * eps, 2.0, &state, 2.5).unwrap();
                assert!(close(s.u, exact.u, 10.0 * eps), "eps {eps}");
                assert!(close(s.v, exact.v, 10.0 * eps), "eps {eps}");
            }
        }
    }

    #[test]
    fn zero_step_is_identity_and_negative_step_fails() {
        let st = PhaseState::origin(0.4, 0.9);
        let s = step_constant(2.0, 0.3, &st, 0.0).unwrap();
        assert_eq!((s.u, s.v), (st.u, st.v));
        assert!(step_constant(2.0, 0.3, &st, -1e-3).is_err());
    }

    #[test]
    fn determinant_is_damping_factor() {
        // Liouville: det Φ(t) = e^{−ct}
        for (q, c) in [(2.0, 0.5), (1.0, 2.0), (0.5, 3.0)] {
            let m = transition_matrix(q, c, 1.7).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            assert!(close(det, (-c * 1.7_f64).exp(), 1e-14));
        }
    }
}
