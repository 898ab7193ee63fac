//! Stability thresholds and Liapunov certificates for the damped Hill equation
//!
//! ```text
//! u'' + c·u' + (b + a(t))·u = 0,    0 ≤ a(t) ≤ C.
//! ```
//!
//! Two quadratic Liapunov functions are available. `F` decreases whenever
//! `C < c²`; `G` (built on the centred stiffness `b + C/2`) decreases whenever
//! `C < 2c√b`. Together they certify exponential stability under
//! `C < c·max{c, 2√b}`.

mod quad;

pub use quad::QuadForm2;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::Scalar;

/// The triple `(b, c, C)`: stiffness floor, damping and coefficient ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SystemParams<T: Scalar> {
    pub b: T,
    pub c: T,
    #[serde(rename = "C")]
    pub ceiling: T,
}

impl<T: Scalar> SystemParams<T> {
    /// Requires `b > 0`, `c ≥ 0` and `C ≥ 0`.
    ///
    /// Zero damping is accepted so undamped systems can be simulated; no
    /// criterion certifies them.
    pub fn new(b: T, c: T, ceiling: T) -> Result<Self> {
        ensure(b.is_finite() && b > T::zero(), || {
            format!("b must be positive, got {b}")
        })?;
        ensure(c.is_finite() && c >= T::zero(), || {
            format!("c must be nonnegative, got {c}")
        })?;
        ensure(ceiling.is_finite() && ceiling >= T::zero(), || {
            format!("C must be nonnegative, got {ceiling}")
        })?;
        Ok(Self { b, c, ceiling })
    }
}

/// A point `(u, u')` of the phase plane at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PhaseState<T: Scalar> {
    pub t: T,
    pub u: T,
    pub v: T,
}

impl<T: Scalar> PhaseState<T> {
    pub fn new(t: T, u: T, v: T) -> Self {
        Self { t, u, v }
    }

    /// `(u, v)` at `t = 0`.
    pub fn origin(u: T, v: T) -> Self {
        Self::new(T::zero(), u, v)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.u.is_finite() && self.v.is_finite()
    }

    /// `u² + u'²`.
    pub fn norm_sq(&self) -> T {
        self.u * self.u + self.v * self.v
    }
}

/// Which Liapunov function a certificate relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LiapunovForm {
    F,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Certificate<T: Scalar> {
    /// `C < c·max{c, 2√b}`.
    pub holds_main: bool,
    /// `C < c√b`.
    pub holds_fh2_strong: bool,
    /// `C ≤ c²/4 + c√(b + c²/16)`.
    pub holds_fh2_weak: bool,
    /// `c·max{c, 2√b} − C`.
    pub margin: T,
    /// Guaranteed exponential rate of the chosen form; zero when uncertified.
    pub delta: T,
    pub chosen_form: Option<LiapunovForm>,
}

fn check_positive<T: Scalar>(b: T, c: T) -> Result<()> {
    ensure(b.is_finite() && b > T::zero(), || {
        format!("b must be positive, got {b}")
    })?;
    ensure(c.is_finite() && c > T::zero(), || {
        format!("c must be positive, got {c}")
    })
}

/// `c·max{c, 2√b}`: the largest admissible coefficient ceiling (exclusive).
pub fn stability_threshold<T: Scalar>(b: T, c: T) -> Result<T> {
    check_positive(b, c)?;
    Ok(c * c.max(T::two() * b.sqrt()))
}

/// The two earlier sufficient conditions: `(c√b, c²/4 + c√(b + c²/16))`.
pub fn legacy_thresholds<T: Scalar>(b: T, c: T) -> Result<(T, T)> {
    check_positive(b, c)?;
    let strong = c * b.sqrt();
    let weak = c * c / T::lit(4.0) + c * (b + c * c / T::lit(16.0)).sqrt();
    Ok((strong, weak))
}

/// Matrix of `F = ½v² + (b/2)u² + (c/2)uv + (c²/4)u²`.
pub fn form_f<T: Scalar>(p: &SystemParams<T>) -> QuadForm2<T> {
    QuadForm2::new(
        p.b * T::half() + p.c * p.c / T::lit(4.0),
        p.c / T::lit(4.0),
        T::half(),
    )
}

/// Matrix of `G = ½v² + ½(b + C/2)u² + (c/2)uv + (c²/4)u²`, i.e. `F` on the
/// centred stiffness `b + C/2`.
pub fn form_g<T: Scalar>(p: &SystemParams<T>) -> QuadForm2<T> {
    let centred = p.b + p.ceiling * T::half();
    QuadForm2::new(
        centred * T::half() + p.c * p.c / T::lit(4.0),
        p.c / T::lit(4.0),
        T::half(),
    )
}

pub fn form<T: Scalar>(p: &SystemParams<T>, which: LiapunovForm) -> QuadForm2<T> {
    match which {
        LiapunovForm::F => form_f(p),
        LiapunovForm::G => form_g(p),
    }
}

pub fn lyapunov_f<T: Scalar>(p: &SystemParams<T>, s: &PhaseState<T>) -> T {
    let (u, v) = (s.u, s.v);
    T::half() * v * v
        + p.b * T::half() * u * u
        + p.c * T::half() * u * v
        + p.c * p.c / T::lit(4.0) * u * u
}

pub fn lyapunov_g<T: Scalar>(p: &SystemParams<T>, s: &PhaseState<T>) -> T {
    form_g(p).value(s)
}

/// Dissipation bounds `(Φ, Ψ)` at coefficient value `a`, with `F' ≤ −Φ` and
/// `G' ≤ −Ψ` along solutions while `a(t) = a`.
///
/// `Φ = (c/2 − a/2c)v² + (cb/2)u²`, `Ψ = (c/2)v² + (cb/2)u² + (a − C/2)uv`.
pub fn dissipation_forms<T: Scalar>(
    p: &SystemParams<T>,
    a: T,
) -> Result<(QuadForm2<T>, QuadForm2<T>)> {
    check_positive(p.b, p.c)?;
    ensure(a >= T::zero() && a <= p.ceiling, || {
        format!("coefficient value {a} outside [0, {}]", p.ceiling)
    })?;
    let half_c = p.c * T::half();
    let u_coef = p.c * p.b * T::half();
    let phi = QuadForm2::new(u_coef, T::zero(), half_c - a / (T::two() * p.c));
    let alpha = a - p.ceiling * T::half();
    let psi = QuadForm2::new(u_coef, alpha * T::half(), half_c);
    Ok((phi, psi))
}

/// Guaranteed decay rate of one form: the worst case over `a ∈ [0, C]` of the
/// smallest generalized eigenvalue of (dissipation, form).
///
/// The Rayleigh quotient is affine in `a`, so its minimum over the interval is
/// concave in `a` and the infimum sits at an endpoint.
pub fn form_decay_rate<T: Scalar>(p: &SystemParams<T>, which: LiapunovForm) -> Result<T> {
    let metric = form(p, which);
    let mut worst = T::infinity();
    for a in [T::zero(), p.ceiling] {
        let (phi, psi) = dissipation_forms(p, a)?;
        let diss = match which {
            LiapunovForm::F => phi,
            LiapunovForm::G => psi,
        };
        worst = worst.min(diss.generalized_eigenvalues(&metric).0);
    }
    Ok(worst)
}

/// Whether the given form certifies decay for these parameters.
pub fn form_applies<T: Scalar>(p: &SystemParams<T>, which: LiapunovForm) -> bool {
    if p.c <= T::zero() {
        return false;
    }
    match which {
        LiapunovForm::F => p.ceiling < p.c * p.c,
        LiapunovForm::G => p.ceiling < T::two() * p.c * p.b.sqrt(),
    }
}

fn best_rate<T: Scalar>(p: &SystemParams<T>) -> (T, Option<LiapunovForm>) {
    let mut best = (T::zero(), None);
    for which in [LiapunovForm::F, LiapunovForm::G] {
        if !form_applies(p, which) {
            continue;
        }
        if let Ok(rate) = form_decay_rate(p, which) {
            if rate > best.0 {
                best = (rate, Some(which));
            }
        }
    }
    best
}

/// Rate `δ` with `L(t) ≤ L(s)·exp(−δ(t − s))` for the best applicable form
/// `L`; zero when neither form applies.
pub fn decay_rate<T: Scalar>(p: &SystemParams<T>) -> T {
    best_rate(p).0
}

/// `(m, M)` with `m(u² + v²) ≤ L ≤ M(u² + v²)`.
pub fn equivalence_constants<T: Scalar>(p: &SystemParams<T>, which: LiapunovForm) -> (T, T) {
    form(p, which).eigenvalues()
}

/// Certified transient constant `M/m` of the form, so that
/// `u² + u'² ≤ (M/m)·exp(−δ(t − s))·(u² + u'²)(s)`.
pub fn equivalence_ratio<T: Scalar>(p: &SystemParams<T>, which: LiapunovForm) -> T {
    let (lo, hi) = equivalence_constants(p, which);
    hi / lo
}

pub fn certify<T: Scalar>(p: &SystemParams<T>) -> Certificate<T> {
    if p.c <= T::zero() {
        return Certificate {
            holds_main: false,
            holds_fh2_strong: false,
            holds_fh2_weak: false,
            margin: -p.ceiling,
            delta: T::zero(),
            chosen_form: None,
        };
    }
    // Validated params satisfy the preconditions of both threshold functions.
    let threshold = p.c * p.c.max(T::two() * p.b.sqrt());
    let (strong, weak) = legacy_thresholds(p.b, p.c).expect("validated params");
    let (delta, chosen_form) = best_rate(p);
    Certificate {
        holds_main: p.ceiling < threshold,
        holds_fh2_strong: p.ceiling < strong,
        holds_fh2_weak: p.ceiling <= weak,
        margin: threshold - p.ceiling,
        delta,
        chosen_form,
    }
}
