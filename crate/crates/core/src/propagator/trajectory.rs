use std::io;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hill::{lyapunov_f, lyapunov_g, LiapunovForm, PhaseState, SystemParams};
use crate::propagator::CoefficientSignal;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrajectoryMeta<T: Scalar> {
    pub params: SystemParams<T>,
    pub signal: Option<CoefficientSignal<T>>,
    pub method: Method,
    /// Nominal step for RK4, maximal sample spacing for the exact propagator.
    pub step: Option<T>,
}

/// Time-ordered phase samples of one solution of the Hill equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Trajectory<T: Scalar> {
    pub samples: Vec<PhaseState<T>>,
    pub meta: TrajectoryMeta<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&PhaseState<T>> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&PhaseState<T>> {
        self.samples.last()
    }

    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// `u² + u'²` per sample.
    pub fn energies(&self) -> Vec<T> {
        self.samples.iter().map(PhaseState::norm_sq).collect()
    }

    pub fn form_values(&self, which: LiapunovForm) -> Vec<T> {
        let p = &self.meta.params;
        self.samples
            .iter()
            .map(|s| match which {
                LiapunovForm::F => lyapunov_f(p, s),
                LiapunovForm::G => lyapunov_g(p, s),
            })
            .collect()
    }

    /// Strictly increasing times and finite states.
    pub fn is_well_formed(&self) -> bool {
        self.samples.iter().all(PhaseState::is_finite)
            && self.samples.windows(2).all(|w| w[0].t < w[1].t)
    }

    /// Columns `t,u,v,F,G`, shortest round-trip decimal formatting.
    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "u", "v", "F", "G"])?;
        let p = &self.meta.params;
        for s in &self.samples {
            out.write_record([
                s.t.to_string(),
                s.u.to_string(),
                s.v.to_string(),
                lyapunov_f(p, s).to_string(),
                lyapunov_g(p, s).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
