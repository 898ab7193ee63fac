use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, ensure, Result};
use crate::Scalar;

/// Piecewise-constant, right-continuous signal.
///
/// `values[i]` holds on `[breakpoints[i], breakpoints[i + 1])`. Without a
/// period the last value holds forever; with one, the pattern on
/// `[breakpoints[0], breakpoints[0] + period)` repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CoefficientSignal<T: Scalar> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    period: Option<T>,
}

/// A maximal interval `[start, end)` on which the signal equals `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece<T> {
    pub start: T,
    pub end: T,
    pub value: T,
}

impl<T: Scalar> Piece<T> {
    pub fn len(&self) -> T {
        self.end - self.start
    }
}

impl<T: Scalar> CoefficientSignal<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, period: Option<T>) -> Result<Self> {
        ensure(!breakpoints.is_empty(), || {
            "signal needs at least one piece".into()
        })?;
        ensure(breakpoints.len() == values.len(), || {
            format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )
        })?;
        ensure(
            breakpoints.iter().chain(&values).all(|x| x.is_finite()),
            || "signal entries must be finite".into(),
        )?;
        ensure(breakpoints.windows(2).all(|w| w[0] < w[1]), || {
            "breakpoints must be strictly increasing".into()
        })?;
        if let Some(p) = period {
            ensure(p.is_finite() && p > T::zero(), || {
                format!("period must be positive, got {p}")
            })?;
            let last = *breakpoints.last().unwrap();
            ensure(last < breakpoints[0] + p, || {
                "all breakpoints must lie within one period".into()
            })?;
        }
        Ok(Self {
            breakpoints,
            values,
            period,
        })
    }

    /// The signal equal to `value` for all `t ≥ 0`.
    pub fn constant(value: T) -> Self {
        Self {
            breakpoints: vec![T::zero()],
            values: vec![value],
            period: None,
        }
    }

    /// `n_pieces` pieces with random breakpoints in `(0, horizon)` and values
    /// uniform in `[lo, hi]`; starts at 0, not periodic.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n_pieces: usize, horizon: T, lo: T, hi: T) -> Self {
        let n = n_pieces.max(1);
        let h = horizon.to_f64().unwrap_or(1.0);
        let mut cuts: Vec<f64> = (1..n).map(|_| rng.gen_range(0.0..h)).collect();
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup();
        let mut breakpoints = vec![T::zero()];
        breakpoints.extend(cuts.into_iter().filter(|&x| x > 0.0).map(T::lit));
        let (lo64, hi64) = (lo.to_f64().unwrap_or(0.0), hi.to_f64().unwrap_or(0.0));
        let values = breakpoints
            .iter()
            .map(|_| {
                if hi64 > lo64 {
                    T::lit(rng.gen_range(lo64..=hi64))
                } else {
                    lo
                }
            })
            .collect();
        Self {
            breakpoints,
            values,
            period: None,
        }
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn period(&self) -> Option<T> {
        self.period
    }

    pub fn origin(&self) -> T {
        self.breakpoints[0]
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// The same signal with `offset` added to every value.
    pub fn shifted(&self, offset: T) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|&v| v + offset).collect(),
            period: self.period,
        }
    }

    /// Value at `t`, taking the right-hand piece at a breakpoint.
    pub fn value_at(&self, t: T) -> Result<T> {
        let pieces = self.pieces(t, t)?;
        Ok(pieces[0].value)
    }

    /// Pieces covering `[t0, t1]`, clipped to it, in time order.
    ///
    /// For `t0 == t1` a single degenerate piece carrying the value at `t0` is
    /// returned.
    pub fn pieces(&self, t0: T, t1: T) -> Result<Vec<Piece<T>>> {
        ensure(t0.is_finite() && t1.is_finite() && t0 <= t1, || {
            format!("invalid interval [{t0}, {t1}]")
        })?;
        ensure(t0 >= self.origin(), || {
            format!("signal undefined before t = {}", self.origin())
        })?;
        let n = self.breakpoints.len();
        let mut out = Vec::new();
        // Walks raw pieces in order; returns false once [t0, t1] is covered.
        let mut push = |start: T, end: T, value: T| -> bool {
            if end <= t0 {
                return true;
            }
            out.push(Piece {
                start: start.max(t0),
                end: end.min(t1),
                value,
            });
            end < t1
        };
        match self.period {
            None => {
                for i in 0..n {
                    let end = if i + 1 < n {
                        self.breakpoints[i + 1]
                    } else {
                        T::infinity()
                    };
                    if !push(self.breakpoints[i], end, self.values[i]) {
                        break;
                    }
                }
            }
            Some(p) => {
                let origin = self.origin();
                let offsets: Vec<T> = self.breakpoints.iter().map(|&b| b - origin).collect();
                // Start one period early so rounding in the floor never skips a piece.
                let first = ((t0 - origin) / p).floor().to_i64().unwrap_or(0).max(1) - 1;
                let mut k = first;
                'outer: loop {
                    let base = T::from_i64(k).ok_or_else(|| domain("period index overflow"))?;
                    for i in 0..n {
                        let start = origin + base * p + offsets[i];
                        let end = if i + 1 < n {
                            origin + base * p + offsets[i + 1]
                        } else {
                            origin + (base + T::one()) * p
                        };
                        if !push(start, end, self.values[i]) {
                            break 'outer;
                        }
                    }
                    k += 1;
                }
            }
        }
        if out.is_empty() {
            return Err(domain(format!("signal has no piece at t = {t0}")));
        }
        Ok(out)
    }

    /// Breakpoints strictly inside `(t0, t1)`.
    pub fn interior_breakpoints(&self, t0: T, t1: T) -> Result<Vec<T>> {
        Ok(self
            .pieces(t0, t1)?
            .iter()
            .skip(1)
            .map(|p| p.start)
            .collect())
    }
}
