use serde::{Deserialize, Serialize};

use crate::hill::PhaseState;
use crate::Scalar;

/// Symmetric quadratic form on the phase plane,
/// `q_uu·u² + 2·q_uv·u·v + q_vv·v²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct QuadForm2<T: Scalar> {
    pub q_uu: T,
    pub q_uv: T,
    pub q_vv: T,
}

impl<T: Scalar> QuadForm2<T> {
    pub fn new(q_uu: T, q_uv: T, q_vv: T) -> Self {
        Self { q_uu, q_uv, q_vv }
    }

    /// The Euclidean form `u² + v²`.
    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    #[inline]
    pub fn eval(&self, u: T, v: T) -> T {
        self.q_uu * u * u + T::two() * self.q_uv * u * v + self.q_vv * v * v
    }

    #[inline]
    pub fn value(&self, s: &PhaseState<T>) -> T {
        self.eval(s.u, s.v)
    }

    pub fn determinant(&self) -> T {
        self.q_uu * self.q_vv - self.q_uv * self.q_uv
    }

    pub fn trace(&self) -> T {
        self.q_uu + self.q_vv
    }

    /// Sylvester's criterion.
    pub fn is_positive_definite(&self) -> bool {
        self.q_uu > T::zero() && self.determinant() > T::zero()
    }

    /// Eigenvalues of the coefficient matrix, ascending.
    pub fn eigenvalues(&self) -> (T, T) {
        let mean = self.trace() * T::half();
        let half_diff = (self.q_uu - self.q_vv) * T::half();
        let radius = half_diff.hypot(self.q_uv);
        (mean - radius, mean + radius)
    }

    /// Roots of `det(self − λ·metric) = 0`, ascending.
    ///
    /// `metric` must be positive definite. The smaller root is the largest `λ`
    /// with `self ≥ λ·metric`.
    pub fn generalized_eigenvalues(&self, metric: &Self) -> (T, T) {
        let a = metric.determinant();
        let b =
            self.q_uu * metric.q_vv + self.q_vv * metric.q_uu - T::two() * self.q_uv * metric.q_uv;
        let c = self.determinant();
        // The discriminant is nonnegative for a definite metric; clamp rounding.
        let disc = (b * b - T::lit(4.0) * a * c).max(T::zero());
        let sq = disc.sqrt();
        // Stable quadratic formula: pair the large root with c/(a·root).
        if b >= T::zero() {
            let big = (b + sq) / (T::two() * a);
            let small = if big == T::zero() {
                T::zero()
            } else {
                c / (a * big)
            };
            (small, big)
        } else {
            let small = (b - sq) / (T::two() * a);
            let big = if small == T::zero() {
                T::zero()
            } else {
                c / (a * small)
            };
            (small, big)
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.q_uu + other.q_uu,
            self.q_uv + other.q_uv,
            self.q_vv + other.q_vv,
        )
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.q_uu * k, self.q_uv * k, self.q_vv * k)
    }
}
