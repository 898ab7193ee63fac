use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::evolution::{
    scalar_threshold, wave_sync_threshold, wave_ultimate_bound, ModalState, SineGrid, WaveForcing,
};
use crate::propagator::{
    fit_log_linear, ExpFit, Rk4, SimOptions, DEFAULT_FIT_WINDOW, STEPS_PER_OSCILLATION,
};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WaveParams<T: Scalar> {
    pub n_modes: usize,
    pub k: T,
    pub c: T,
    /// Evaluate the cubic term on the padded `3N + 2` grid instead of `2N + 1`.
    #[serde(default)]
    pub dealias: bool,
}

impl<T: Scalar> WaveParams<T> {
    pub fn new(n_modes: usize, k: T, c: T) -> Result<Self> {
        ensure(n_modes >= 1, || "need at least one mode".into())?;
        ensure(k.is_finite() && k >= T::zero(), || {
            format!("k must be nonnegative, got {k}")
        })?;
        ensure(c.is_finite() && c >= T::zero(), || {
            format!("c must be nonnegative, got {c}")
        })?;
        Ok(Self {
            n_modes,
            k,
            c,
            dealias: false,
        })
    }

    pub fn dealiased(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn grid(&self) -> Result<SineGrid<T>> {
        if self.dealias {
            SineGrid::padded(self.n_modes)
        } else {
            SineGrid::standard(self.n_modes)
        }
    }
}

/// 1000 steps per period of the fastest linearized mode, `√((Nπ)² + 3k·max u²)`,
/// with `max u² ≤ ‖u_x‖²/π` estimated from the initial energies and the
/// ultimate bound.
pub fn default_wave_step<T: Scalar>(
    params: &WaveParams<T>,
    forcing: &WaveForcing<T>,
    states: &[&ModalState<T>],
) -> Result<T> {
    let grid = params.grid()?;
    let mut v_sq = states
        .iter()
        .map(|s| T::two() * s.energy(params.k, &grid))
        .fold(T::zero(), T::max);
    if params.c > T::zero() {
        v_sq = v_sq.max(wave_ultimate_bound(params.c, forcing.bound_sq())?);
    }
    let top = T::PI() * T::from_usize(params.n_modes).unwrap();
    let omega = (top * top + T::lit(3.0) * params.k * v_sq / T::PI()).sqrt();
    Ok(T::two() * T::PI() / (T::lit(STEPS_PER_OSCILLATION) * omega))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WaveRun<T: Scalar> {
    pub samples: Vec<ModalState<T>>,
    pub energies: Vec<T>,
    /// Accumulated `∫(⟨f, u_t⟩ − c|u_t|²) dt`.
    pub work: Vec<T>,
    /// `max |E(t) − E(t₀) − work(t)|` per unit time.
    pub energy_residual: T,
    pub step: T,
    pub grid_points: usize,
}

impl<T: Scalar> WaveRun<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &ModalState<T> {
        self.samples
            .last()
            .expect("runs record at least two samples")
    }

    /// Columns `t,energy`, then `q1..qN` when `with_modes`.
    pub fn write_csv<W: io::Write>(&self, w: W, with_modes: bool) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "energy".to_string()];
        let n = self.samples.first().map_or(0, ModalState::n_modes);
        if with_modes {
            header.extend((1..=n).map(|i| format!("q{i}")));
        }
        out.write_record(&header)?;
        for (s, e) in self.samples.iter().zip(&self.energies) {
            let mut row = vec![s.t.to_string(), e.to_string()];
            if with_modes {
                row.extend(s.q.iter().map(|x| x.to_string()));
            }
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Integrates the Galerkin truncation of the damped wave equation with RK4
/// from `state0.t` to `t_end`.
pub fn simulate_wave<T: Scalar>(
    params: &WaveParams<T>,
    forcing: &WaveForcing<T>,
    state0: &ModalState<T>,
    t_end: T,
    opts: SimOptions<T>,
) -> Result<WaveRun<T>> {
    let n = params.n_modes;
    ensure(state0.n_modes() == n, || {
        format!("initial state has {} modes, expected {n}", state0.n_modes())
    })?;
    ensure(state0.is_finite(), || "initial state must be finite".into())?;
    ensure(t_end > state0.t, || {
        format!("t_end = {t_end} must exceed start time {}", state0.t)
    })?;
    let grid = params.grid()?;
    let h = match opts.h {
        Some(h) => h,
        None => default_wave_step(params, forcing, &[state0])?,
    };
    let span = t_end - state0.t;
    let (k, c) = (params.k, params.c);
    let stiffness: Vec<T> = (1..=n)
        .map(|i| {
            let w = T::PI() * T::from_usize(i).unwrap();
            w * w
        })
        .collect();

    let mut y0 = Vec::with_capacity(2 * n + 1);
    y0.extend_from_slice(&state0.q);
    y0.extend_from_slice(&state0.qdot);
    y0.push(T::zero());

    let mut u = vec![T::zero(); grid.points()];
    let mut nl = vec![T::zero(); n];
    let mut f = vec![T::zero(); n];
    let path = Rk4::new(h)?.record_every(opts.stride(span, h)).integrate(
        |at, y, dy| {
            let (q, rest) = y.split_at(n);
            let qdot = &rest[..n];
            if k != T::zero() {
                grid.synthesize(q, &mut u);
                for x in u.iter_mut() {
                    *x = k * *x * *x * *x;
                }
                grid.analyze(&u, &mut nl);
            }
            forcing.coefficients(at.t, &mut f);
            let mut power = T::zero();
            for i in 0..n {
                dy[i] = qdot[i];
                dy[n + i] = f[i] - c * qdot[i] - stiffness[i] * q[i] - nl[i];
                power = power + (f[i] - c * qdot[i]) * qdot[i];
            }
            dy[2 * n] = power;
        },
        &y0,
        state0.t,
        t_end,
        &[],
    )?;

    let mut samples = Vec::with_capacity(path.len());
    let mut energies = Vec::with_capacity(path.len());
    let mut work = Vec::with_capacity(path.len());
    let mut residual = T::zero();
    let mut e0 = None;
    for (&t, y) in path.times.iter().zip(&path.states) {
        let s = ModalState {
            t,
            q: y[..n].to_vec(),
            qdot: y[n..2 * n].to_vec(),
        };
        let e = s.energy(k, &grid);
        let e0 = *e0.get_or_insert(e);
        residual = residual.max((e - e0 - y[2 * n]).abs());
        samples.push(s);
        energies.push(e);
        work.push(y[2 * n]);
    }
    Ok(WaveRun {
        samples,
        energies,
        work,
        energy_residual: residual / span,
        step: h,
        grid_points: grid.points(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WaveSyncReport<T: Scalar> {
    pub times: Vec<T>,
    /// Energy of the first solution.
    pub energies: Vec<T>,
    /// `‖(u − v)_x‖² + |u_t − v_t|²`.
    pub gaps: Vec<T>,
    /// `Φ` of the difference with `γ = c`.
    pub phi_gaps: Vec<T>,
    pub gap_fit: ExpFit<T>,
    /// Worse of the two energy-identity residuals.
    pub energy_residual: T,
    pub forcing_bound_sq: T,
    pub sync_threshold: T,
    /// `(1/π² + 4/c²)·sup|f|²`.
    pub ultimate_bound: T,
    /// `max{‖u_x‖², ‖v_x‖²}` over the trailing half.
    pub trailing_v_norm_sq: T,
    /// `k·(3/π)·trailing_v_norm_sq`, the measured bound on `k(u² + uv + v²)`.
    pub lipschitz_coefficient: T,
    /// `c√(π² + c²/4) − c²/2`.
    pub lipschitz_threshold: T,
    pub step: T,
}

impl<T: Scalar> WaveSyncReport<T> {
    pub fn below_sync_threshold(&self) -> bool {
        self.forcing_bound_sq < self.sync_threshold
    }

    pub fn lipschitz_within_threshold(&self) -> bool {
        self.lipschitz_coefficient < self.lipschitz_threshold
    }

    /// Whether `series` is nonincreasing on samples with `t ≥ after`.
    pub fn monotone_after(&self, series: &[T], after: T) -> bool {
        let start = self.times.partition_point(|&t| t < after);
        series[start..].windows(2).all(|w| w[1] <= w[0])
    }

    /// Columns `t,energy,gap,phi_gap`.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "energy", "gap", "phi_gap"])?;
        for i in 0..self.times.len() {
            out.write_record([
                self.times[i].to_string(),
                self.energies[i].to_string(),
                self.gaps[i].to_string(),
                self.phi_gaps[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Runs two solutions with identical steps and reports their energy-norm gap.
pub fn wave_sync_experiment<T: Scalar>(
    params: &WaveParams<T>,
    forcing: &WaveForcing<T>,
    init_u: &ModalState<T>,
    init_v: &ModalState<T>,
    t_end: T,
    opts: SimOptions<T>,
) -> Result<WaveSyncReport<T>> {
    ensure(params.c > T::zero(), || {
        format!("c must be positive, got {}", params.c)
    })?;
    ensure(init_u.t == init_v.t, || {
        "initial states must share a start time".into()
    })?;
    let h = match opts.h {
        Some(h) => h,
        None => default_wave_step(params, forcing, &[init_u, init_v])?,
    };
    let opts = SimOptions { h: Some(h), ..opts };
    let first = simulate_wave(params, forcing, init_u, t_end, opts)?;
    let second = simulate_wave(params, forcing, init_v, t_end, opts)?;

    let mut gaps = Vec::with_capacity(first.samples.len());
    let mut phi_gaps = Vec::with_capacity(first.samples.len());
    for (a, b) in first.samples.iter().zip(&second.samples) {
        let d = a.difference(b);
        gaps.push(d.energy_norm_sq());
        phi_gaps.push(d.phi(params.c));
    }
    let times = first.times();
    let gap_fit = fit_log_linear(&times, &gaps, T::lit(DEFAULT_FIT_WINDOW))?;
    let mid = times[0] + (t_end - times[0]) * T::half();
    let tail = times.partition_point(|&t| t < mid);
    let trailing_v_norm_sq = first.samples[tail..]
        .iter()
        .chain(&second.samples[tail..])
        .map(ModalState::v_norm_sq)
        .fold(T::zero(), T::max);
    let pi = T::PI();
    let sync_threshold = if params.k > T::zero() {
        wave_sync_threshold(params.k, params.c)?
    } else {
        T::infinity()
    };
    Ok(WaveSyncReport {
        energies: first.energies,
        gaps,
        phi_gaps,
        gap_fit,
        energy_residual: first.energy_residual.max(second.energy_residual),
        forcing_bound_sq: forcing.bound_sq(),
        sync_threshold,
        ultimate_bound: wave_ultimate_bound(params.c, forcing.bound_sq())?,
        trailing_v_norm_sq,
        lipschitz_coefficient: params.k * T::lit(3.0) / pi * trailing_v_norm_sq,
        lipschitz_threshold: scalar_threshold(pi * pi, params.c)?,
        step: h,
        times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hill::PhaseState;
    use crate::propagator::step_constant;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn single_linear_mode_keeps_frequency_pi() {
        // u = cos(πt)·φ₁ returns to its start every 2 time units
        let p = WaveParams::new(1, 0.0, 0.0).unwrap();
        let s0 = ModalState::new(0.0, vec![1.0], vec![0.0]).unwrap();
        let run =
            simulate_wave(&p, &WaveForcing::zero(), &s0, 10.0, SimOptions::default()).unwrap();
        for s in &run.samples {
            assert!(
                (s.q[0] - (PI * s.t).cos()).abs() < 1e-8 * (1.0 + s.t / 2.0),
                "t = {}",
                s.t
            );
        }
        let end = run.last();
        assert!((end.q[0] - 1.0).abs() < 1e-8 && end.qdot[0].abs() < 1e-8);
    }

    #[test]
    fn damped_linear_modes_match_closed_form() {
        let n = 6;
        let c = 1.3;
        let p = WaveParams::new(n, 0.0, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s0 = ModalState::random_smooth(&mut rng, n, 1.0, 1.0);
        let run = simulate_wave(&p, &WaveForcing::zero(), &s0, 3.0, SimOptions::default()).unwrap();
        let end = run.last();
        for i in 0..n {
            let w = PI * (i + 1) as f64;
            let exact =
                step_constant(w * w, c, &PhaseState::origin(s0.q[i], s0.qdot[i]), end.t).unwrap();
            assert!((end.q[i] - exact.u).abs() < 1e-10, "mode {}", i + 1);
            assert!((end.qdot[i] - exact.v).abs() < 1e-9, "mode {}", i + 1);
        }
    }

    #[test]
    fn conservative_energy_error_is_fourth_order() {
        let p = WaveParams::new(4, 1.0_f64, 0.0).unwrap();
        let s0 =
            ModalState::new(0.0, vec![1.0, 0.3, -0.2, 0.1], vec![0.0, 0.5, 0.0, -0.4]).unwrap();
        let drift = |h: f64| {
            let run = simulate_wave(&p, &WaveForcing::zero(), &s0, 2.0, SimOptions::with_step(h))
                .unwrap();
            run.energies
                .iter()
                .map(|e| (e - run.energies[0]).abs())
                .fold(0.0, f64::max)
        };
        // at least fourth order; RK4 energy error on oscillatory problems is
        // one order better still
        let ratio = drift(0.02) / drift(0.01);
        assert!(ratio > 14.0 && ratio < 34.0, "ratio {ratio}");
    }

    #[test]
    fn energy_identity_with_forcing_and_damping() {
        let p = WaveParams::new(8, 1.0, 0.7).unwrap();
        let f = WaveForcing::new(vec![1.0, 0.0, 0.5], 2.0, 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s0 = ModalState::random_smooth(&mut rng, 8, 1.0, 1.0);
        let run = simulate_wave(&p, &f, &s0, 4.0, SimOptions::default()).unwrap();
        assert!(run.energy_residual < 1e-10, "{}", run.energy_residual);
    }

    #[test]
    fn dealiased_grid_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s0 = ModalState::random_smooth(&mut rng, 6, 2.0, 1.0);
        let p = WaveParams::new(6, 1.0_f64, 1.0).unwrap();
        let f = WaveForcing::mode(1, 1.0, 2.0).unwrap();
        let opts = SimOptions::with_step(1e-3);
        let a = simulate_wave(&p, &f, &s0, 1.0, opts).unwrap();
        let b = simulate_wave(&p.dealiased(true), &f, &s0, 1.0, opts).unwrap();
        assert_eq!(b.grid_points, 20);
        for (x, y) in a.last().q.iter().zip(&b.last().q) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn galerkin_truncation_converges() {
        let s0 = ModalState::new(0.0_f64, vec![0.8, 0.0, 0.3], vec![0.0, 0.5, 0.0]).unwrap();
        let f = WaveForcing::mode(1, 1.0, 1.0).unwrap();
        let trailing = |n: usize| {
            let p = WaveParams::new(n, 1.0, 1.0).unwrap();
            let run =
                simulate_wave(&p, &f, &s0.resized(n), 2.0, SimOptions::with_step(2e-4)).unwrap();
            *run.energies.last().unwrap()
        };
        let (coarse, fine) = (trailing(16), trailing(32));
        assert!((coarse - fine).abs() < 1e-6, "{coarse} vs {fine}");
    }

    #[test]
    fn identical_data_has_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s0 = ModalState::random_smooth(&mut rng, 4, 1.0, 1.0);
        let p = WaveParams::new(4, 1.0, 2.0 * PI).unwrap();
        let f = WaveForcing::mode(1, 2.0, 1.0).unwrap();
        let rep = wave_sync_experiment(&p, &f, &s0, &s0, 1.0, SimOptions::default()).unwrap();
        assert!(rep.gaps.iter().all(|&g| g == 0.0));
        assert!(rep.gap_fit.underflow);
    }

    #[test]
    fn mismatched_modes_rejected() {
        let p = WaveParams::new(4, 1.0, 1.0).unwrap();
        let s0 = ModalState::<f64>::zeros(3);
        assert!(simulate_wave(&p, &WaveForcing::zero(), &s0, 1.0, SimOptions::default()).is_err());
        assert!(WaveParams::new(0, 1.0, 1.0).is_err());
        assert!(WaveParams::new(1, -1.0, 1.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = WaveParams::new(2, 0.0, 1.0).unwrap();
        let s0 = ModalState::new(0.0, vec![1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let run = simulate_wave(
            &p,
            &WaveForcing::zero(),
            &s0,
            0.1,
            SimOptions::with_step(0.01),
        )
        .unwrap();
        let mut buf = Vec::new();
        run.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,energy,q1,q2"));
        assert!(lines.next().unwrap().starts_with("0,"));
        assert_eq!(text.lines().count(), 12);
    }
}
