use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::Scalar;

/// Collocation grid `x_j = j/(M + 1)`, `j = 1..=M`, for the orthonormal sine
/// basis `√2·sin(nπx)`, `n = 1..=N`.
///
/// With `M ≥ 2N + 1` the discrete projection of `u³` onto the first `N`
/// modes is alias-free and the grid sum `Σ u_j⁴/(M + 1)` equals `∫u⁴`
/// exactly for `u` in the span.
#[derive(Debug, Clone)]
pub struct SineGrid<T> {
    n_modes: usize,
    points: usize,
    /// `S[j][n] = √2·sin((n+1)π x_j)`, row-major `points × n_modes`.
    synth: Vec<T>,
    /// `S[j][n]/(M + 1)`, row-major `n_modes × points`.
    analysis: Vec<T>,
}

impl<T: Scalar> SineGrid<T> {
    pub fn new(n_modes: usize, points: usize) -> Result<Self> {
        ensure(n_modes >= 1, || "need at least one mode".into())?;
        ensure(points > 2 * n_modes, || {
            format!(
                "grid of {points} points too coarse for {n_modes} modes (need ≥ {})",
                2 * n_modes + 1
            )
        })?;
        let period = 2 * (points + 1);
        let denom = T::from_usize(points + 1).unwrap();
        let sqrt2 = T::SQRT_2();
        let mut synth = vec![T::zero(); points * n_modes];
        let mut analysis = vec![T::zero(); points * n_modes];
        for j in 0..points {
            for n in 0..n_modes {
                // reduce the angle exactly before taking the sine
                let r = ((n + 1) * (j + 1)) % period;
                let s = sqrt2 * (T::PI() * T::from_usize(r).unwrap() / denom).sin();
                synth[j * n_modes + n] = s;
                analysis[n * points + j] = s / denom;
            }
        }
        Ok(Self {
            n_modes,
            points,
            synth,
            analysis,
        })
    }

    /// `2N + 1` points.
    pub fn standard(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, 2 * n_modes + 1)
    }

    /// Padded `3N + 2` points.
    pub fn padded(n_modes: usize) -> Result<Self> {
        Self::new(n_modes, 3 * n_modes + 2)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn x(&self, j: usize) -> T {
        T::from_usize(j + 1).unwrap() / T::from_usize(self.points + 1).unwrap()
    }

    /// Grid values `u_j` of the series with coefficients `q`.
    pub fn synthesize(&self, q: &[T], u: &mut [T]) {
        debug_assert!(q.len() == self.n_modes && u.len() == self.points);
        for (row, uj) in self.synth.chunks_exact(self.n_modes).zip(u.iter_mut()) {
            *uj = row
                .iter()
                .zip(q)
                .fold(T::zero(), |acc, (&s, &c)| acc + s * c);
        }
    }

    /// Discrete projection of grid values onto the modes.
    pub fn analyze(&self, g: &[T], q: &mut [T]) {
        debug_assert!(g.len() == self.points && q.len() == self.n_modes);
        for (row, qn) in self.analysis.chunks_exact(self.points).zip(q.iter_mut()) {
            *qn = row
                .iter()
                .zip(g)
                .fold(T::zero(), |acc, (&s, &v)| acc + s * v);
        }
    }

    /// `∫₀¹ u⁴ dx` from grid values.
    pub fn quartic_integral(&self, u: &[T]) -> T {
        u.iter().fold(T::zero(), |acc, &x| {
            let x2 = x * x;
            acc + x2 * x2
        }) / T::from_usize(self.points + 1).unwrap()
    }
}

/// Truncated sine-series state: `u = Σ qₙ·√2·sin(nπx)`, `u_t = Σ q̇ₙ·√2·sin(nπx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModalState<T: Scalar> {
    pub t: T,
    pub q: Vec<T>,
    pub qdot: Vec<T>,
}

#[inline]
fn wavenumber<T: Scalar>(index: usize) -> T {
    T::PI() * T::from_usize(index + 1).unwrap()
}

impl<T: Scalar> ModalState<T> {
    pub fn new(t: T, q: Vec<T>, qdot: Vec<T>) -> Result<Self> {
        ensure(!q.is_empty(), || "need at least one mode".into())?;
        ensure(q.len() == qdot.len(), || {
            format!(
                "{} position but {} velocity coefficients",
                q.len(),
                qdot.len()
            )
        })?;
        let s = Self { t, q, qdot };
        ensure(s.is_finite(), || "coefficients must be finite".into())?;
        Ok(s)
    }

    pub fn zeros(n_modes: usize) -> Self {
        Self {
            t: T::zero(),
            q: vec![T::zero(); n_modes],
            qdot: vec![T::zero(); n_modes],
        }
    }

    /// Smooth random data: `qₙ = r·ξₙ/n³`, `q̇ₙ = s·ζₙ/n²` with `ξ, ζ` uniform
    /// on `[−1, 1]`.
    pub fn random_smooth<R: Rng + ?Sized>(rng: &mut R, n_modes: usize, r: T, s: T) -> Self {
        let mut st = Self::zeros(n_modes);
        for i in 0..n_modes {
            let n = T::from_usize(i + 1).unwrap();
            st.q[i] = r * T::lit(rng.gen_range(-1.0..=1.0)) / (n * n * n);
            st.qdot[i] = s * T::lit(rng.gen_range(-1.0..=1.0)) / (n * n);
        }
        st
    }

    pub fn n_modes(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.qdot).all(|x| x.is_finite())
    }

    /// Same state on `n_modes` modes, truncating or zero-padding.
    pub fn resized(&self, n_modes: usize) -> Self {
        let mut q = self.q.clone();
        let mut qdot = self.qdot.clone();
        q.resize(n_modes, T::zero());
        qdot.resize(n_modes, T::zero());
        Self { t: self.t, q, qdot }
    }

    pub fn difference(&self, other: &Self) -> Self {
        let sub = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x - y).collect();
        Self {
            t: self.t,
            q: sub(&self.q, &other.q),
            qdot: sub(&self.qdot, &other.qdot),
        }
    }

    /// `|u|²_H = Σ qₙ²`.
    pub fn h_norm_sq(&self) -> T {
        self.q.iter().fold(T::zero(), |a, &x| a + x * x)
    }

    /// `‖u‖²_V = ‖u_x‖² = Σ (nπ)² qₙ²`.
    pub fn v_norm_sq(&self) -> T {
        self.q.iter().enumerate().fold(T::zero(), |a, (i, &x)| {
            let w = wavenumber::<T>(i);
            a + w * w * x * x
        })
    }

    /// `|u_t|²_H`.
    pub fn velocity_norm_sq(&self) -> T {
        self.qdot.iter().fold(T::zero(), |a, &x| a + x * x)
    }

    /// `‖u_x‖² + |u_t|²`.
    pub fn energy_norm_sq(&self) -> T {
        self.v_norm_sq() + self.velocity_norm_sq()
    }

    /// `½(|u_t|² + ‖u_x‖²) + (k/4)∫u⁴`.
    pub fn energy(&self, k: T, grid: &SineGrid<T>) -> T {
        let quadratic = T::half() * self.energy_norm_sq();
        if k == T::zero() {
            return quadratic;
        }
        let mut u = vec![T::zero(); grid.points()];
        grid.synthesize(&self.q, &mut u);
        quadratic + k * T::lit(0.25) * grid.quartic_integral(&u)
    }

    /// `¼|u_t|² + ½‖u_x‖² + ¼|u_t + c·u|²`.
    pub fn phi(&self, c: T) -> T {
        let quarter = T::lit(0.25);
        let mixed = self
            .q
            .iter()
            .zip(&self.qdot)
            .fold(T::zero(), |a, (&q, &p)| a + (p + c * q) * (p + c * q));
        quarter * self.velocity_norm_sq() + T::half() * self.v_norm_sq() + quarter * mixed
    }

    /// `max_j u(x_j)²` on the grid.
    pub fn grid_max_sq(&self, grid: &SineGrid<T>) -> T {
        let mut u = vec![T::zero(); grid.points()];
        grid.synthesize(&self.q, &mut u);
        u.iter().fold(T::zero(), |m, &x| m.max(x * x))
    }
}

/// Forcing `f(t, x) = amplitude·cos(frequency·t)·φ(x)` with a unit-H-norm
/// profile `φ` given by its sine coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct WaveForcing<T: Scalar> {
    profile: Vec<T>,
    pub amplitude: T,
    pub frequency: T,
}

impl<T: Scalar> WaveForcing<T> {
    pub fn new(profile: Vec<T>, amplitude: T, frequency: T) -> Result<Self> {
        ensure(profile.iter().all(|x| x.is_finite()), || {
            "profile must be finite".into()
        })?;
        let norm = profile.iter().fold(T::zero(), |a, &x| a + x * x).sqrt();
        ensure(norm > T::zero(), || "profile must be nonzero".into())?;
        ensure(amplitude.is_finite() && frequency.is_finite(), || {
            "amplitude and frequency must be finite".into()
        })?;
        Ok(Self {
            profile: profile.into_iter().map(|x| x / norm).collect(),
            amplitude,
            frequency,
        })
    }

    pub fn zero() -> Self {
        Self {
            profile: vec![T::one()],
            amplitude: T::zero(),
            frequency: T::zero(),
        }
    }

    /// Single sine mode `n ≥ 1`.
    pub fn mode(n: usize, amplitude: T, frequency: T) -> Result<Self> {
        ensure(n >= 1, || "mode index starts at 1".into())?;
        let mut profile = vec![T::zero(); n];
        profile[n - 1] = T::one();
        Self::new(profile, amplitude, frequency)
    }

    pub fn profile(&self) -> &[T] {
        &self.profile
    }

    /// `sup_t |f(t)|²_H`.
    pub fn bound_sq(&self) -> T {
        self.amplitude * self.amplitude
    }

    /// Modal coefficients of `f(t)` on the first `out.len()` modes.
    pub fn coefficients(&self, t: T, out: &mut [T]) {
        let s = self.amplitude * (self.frequency * t).cos();
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.profile.get(i).map_or(T::zero(), |&p| s * p);
        }
    }
}
