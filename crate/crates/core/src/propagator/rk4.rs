use crate::error::{ensure, Error, Result};
use crate::Scalar;

/// Time at which the right-hand side is evaluated, together with the start
/// of the step's segment.
///
/// A stage at the right end of a segment still belongs to that segment;
/// piecewise-defined fields should look themselves up at `segment_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageTime<T> {
    pub t: T,
    pub segment_start: T,
}

/// Recorded samples of an integration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
}

impl<T: Scalar> SampledPath<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(&T, &[T])> {
        Some((self.times.last()?, self.states.last()?.as_slice()))
    }
}

/// Classical fixed-step fourth-order Runge–Kutta.
#[derive(Debug, Clone, Copy)]
pub struct Rk4<T> {
    h: T,
    record_every: usize,
}

/// Number of equal steps of size at most `h` covering `len`, snapping ratios
/// within rounding of an integer.
fn step_count<T: Scalar>(len: T, h: T) -> usize {
    let ratio = len / h;
    let nearest = ratio.round();
    let n = if (ratio - nearest).abs() <= T::lit(1e-9) * nearest.max(T::one()) {
        nearest
    } else {
        ratio.ceil()
    };
    n.to_usize().unwrap_or(usize::MAX).max(1)
}

impl<T: Scalar> Rk4<T> {
    pub fn new(h: T) -> Result<Self> {
        ensure(h.is_finite() && h > T::zero(), || {
            format!("step must be positive, got {h}")
        })?;
        Ok(Self { h, record_every: 1 })
    }

    /// Record every `n`-th step (the first and last states are always kept).
    pub fn record_every(mut self, n: usize) -> Self {
        self.record_every = n.max(1);
        self
    }

    pub fn step_size(&self) -> T {
        self.h
    }

    /// Integrates `y' = rhs(t, y)` over `[t0, t1]`.
    ///
    /// Every breakpoint inside `(t0, t1)` is made a step boundary; each segment
    /// between breakpoints is divided into equal steps no longer than `h`.
    /// Returns [`Error::Divergence`] as soon as a non-finite state appears.
    pub fn integrate<F>(
        &self,
        mut rhs: F,
        y0: &[T],
        t0: T,
        t1: T,
        breakpoints: &[T],
    ) -> Result<SampledPath<T>>
    where
        F: FnMut(StageTime<T>, &[T], &mut [T]),
    {
        ensure(t0.is_finite() && t1.is_finite() && t0 <= t1, || {
            format!("invalid time span [{t0}, {t1}]")
        })?;
        ensure(y0.iter().all(|x| x.is_finite()), || {
            "initial state must be finite".into()
        })?;

        let mut edges = vec![t0];
        let mut inner: Vec<T> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > t0 && b < t1)
            .collect();
        inner.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        inner.dedup();
        edges.extend(inner);
        edges.push(t1);

        let n = y0.len();
        let mut y = y0.to_vec();
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
            vec![T::zero(); n],
            vec![T::zero(); n],
            vec![T::zero(); n],
            vec![T::zero(); n],
            vec![T::zero(); n],
        );
        let sixth = T::one() / T::lit(6.0);

        let mut path = SampledPath {
            times: vec![t0],
            states: vec![y.clone()],
        };
        let mut step_index = 0usize;
        let mut t = t0;
        for seg in edges.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            let steps = step_count(b - a, self.h);
            let h = (b - a) / T::from_usize(steps).expect("step count fits scalar");
            let half = h * T::half();
            for i in 0..steps {
                let ts = a + T::from_usize(i).unwrap() * h;
                let te = if i + 1 == steps { b } else { ts + h };
                let at = |t| StageTime {
                    t,
                    segment_start: a,
                };
                rhs(at(ts), &y, &mut k1);
                for j in 0..n {
                    tmp[j] = y[j] + half * k1[j];
                }
                rhs(at(ts + half), &tmp, &mut k2);
                for j in 0..n {
                    tmp[j] = y[j] + half * k2[j];
                }
                rhs(at(ts + half), &tmp, &mut k3);
                for j in 0..n {
                    tmp[j] = y[j] + h * k3[j];
                }
                rhs(at(te), &tmp, &mut k4);
                for j in 0..n {
                    y[j] = y[j] + h * sixth * (k1[j] + T::two() * (k2[j] + k3[j]) + k4[j]);
                }
                if y.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Divergence {
                        last_valid_time: t.to_f64().unwrap_or(f64::NAN),
                    });
                }
                t = te;
                step_index += 1;
                if step_index.is_multiple_of(self.record_every) {
                    path.times.push(t);
                    path.states.push(y.clone());
                }
            }
        }
        if *path.times.last().unwrap() != t {
            path.times.push(t);
            path.states.push(y);
        }
        Ok(path)
    }
}

/// Integrates a smooth field over `t_span` with step `h`, recording every step.
pub fn integrate_rk4<T, F>(mut rhs: F, y0: &[T], t_span: (T, T), h: T) -> Result<SampledPath<T>>
where
    T: Scalar,
    F: FnMut(T, &[T], &mut [T]),
{
    Rk4::new(h)?.integrate(|st, y, dy| rhs(st.t, y, dy), y0, t_span.0, t_span.1, &[])
}
