//! Model-agnostic approximate simulation of sufficient statistics.

use alloc::vec::Vec;

use crate::ergm::ErgmSampler;
use crate::ising::IsingSampler;
use crate::model::ModelSpec;
use crate::{RandomStream, Result};

/// How auxiliary realizations are generated.
///
/// The first draw follows `sweeps` sweeps from the model's default start;
/// each further draw follows `thin` more sweeps of the same chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AuxSchedule {
    pub sweeps: usize,
    pub thin: usize,
}

impl AuxSchedule {
    pub fn new(sweeps: usize, thin: usize) -> Result<Self> {
        if sweeps == 0 || thin == 0 {
            return Err(crate::Error::InvalidConfig(
                "auxiliary sweeps and thinning must be at least 1".into(),
            ));
        }
        Ok(Self { sweeps, thin })
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Simulator {
    Ising(IsingSampler),
    Ergm(ErgmSampler),
}

impl Simulator {
    pub fn for_spec(spec: &ModelSpec) -> Result<Self> {
        if spec.family().is_lattice() {
            Ok(Self::Ising(IsingSampler::for_spec(spec)?))
        } else {
            Ok(Self::Ergm(ErgmSampler::for_spec(spec)?))
        }
    }

    pub fn statistic_count(&self) -> usize {
        match self {
            Self::Ising(s) => s.order().statistic_count(),
            Self::Ergm(s) => s.statistic_count(),
        }
    }

    /// Appends `draws` statistic vectors, each `statistic_count()` long.
    pub fn draw_stats(
        &mut self,
        theta: &[f64],
        schedule: AuxSchedule,
        draws: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        match self {
            Self::Ising(s) => s.draw_stats(theta, schedule.sweeps, draws, schedule.thin, rng, out),
            Self::Ergm(s) => s.draw_stats(theta, schedule.sweeps, draws, schedule.thin, rng, out),
        }
    }

    /// Continues the chain of the last `draw_stats` call for `draws` more draws.
    pub fn extend_stats(
        &mut self,
        schedule: AuxSchedule,
        draws: usize,
        rng: &mut RandomStream,
        out: &mut Vec<f64>,
    ) {
        match self {
            Self::Ising(s) => s.extend_stats(draws, schedule.thin, rng, out),
            Self::Ergm(s) => s.extend_stats(draws, schedule.thin, rng, out),
        }
    }

    /// Statistics of a single approximate draw.
    pub fn draw_one(
        &mut self,
        theta: &[f64],
        sweeps: usize,
        rng: &mut RandomStream,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(2);
        self.draw_stats(theta, AuxSchedule::new(sweeps, 1)?, 1, rng, &mut out)?;
        Ok(out)
    }
}
