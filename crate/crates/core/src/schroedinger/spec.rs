use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Result};
use crate::feynman_kac::{Potential, StrangPropagator};
use crate::kernels::{CauchyPropagator, Propagator, StepPropagator};
use crate::numerics::Grid1D;

/// Default truncation tolerance of the step-kernel Poisson series.
pub const TOL_SERIES: f64 = 1e-12;

/// Free kernel underlying a perturbed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseKernel {
    ExactCauchy,
    TruncatedStep { epsilon: f64 },
}

/// The transition kernel in force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    ExactCauchy,
    TruncatedStep {
        epsilon: f64,
    },
    /// Feynman–Kac perturbation of `base` by `potential`, Strang-split with step `dt`.
    Perturbed {
        potential: Potential,
        base: BaseKernel,
        dt: f64,
    },
}

impl From<BaseKernel> for KernelSpec {
    fn from(b: BaseKernel) -> Self {
        match b {
            BaseKernel::ExactCauchy => KernelSpec::ExactCauchy,
            BaseKernel::TruncatedStep { epsilon } => KernelSpec::TruncatedStep { epsilon },
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::ExactCauchy => Ok(()),
            KernelSpec::TruncatedStep { epsilon } => require_positive("epsilon", *epsilon),
            KernelSpec::Perturbed { potential, base, dt } => {
                potential.validate()?;
                require_positive("dt", *dt)?;
                KernelSpec::from(base.clone()).validate()
            }
        }
    }

    /// The step cutoff, if the kernel is (built on) a step kernel.
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            KernelSpec::TruncatedStep { epsilon }
            | KernelSpec::Perturbed {
                base: BaseKernel::TruncatedStep { epsilon },
                ..
            } => Some(*epsilon),
            _ => None,
        }
    }

    /// Builds the windowed propagator for this kernel.
    pub fn propagator(&self, grid: Grid1D, tol_series: f64) -> Result<Arc<dyn Propagator>> {
        self.validate()?;
        Ok(match self {
            KernelSpec::ExactCauchy => Arc::new(CauchyPropagator::new(grid)),
            KernelSpec::TruncatedStep { epsilon } => Arc::new(StepPropagator::new(grid, *epsilon, tol_series)?),
            KernelSpec::Perturbed { potential, base, dt } => {
                let (free, rate): (Arc<dyn Propagator>, f64) = match base {
                    BaseKernel::ExactCauchy => (Arc::new(CauchyPropagator::new(grid)), 0.0),
                    BaseKernel::TruncatedStep { epsilon } => (
                        Arc::new(StepPropagator::new(grid, *epsilon, tol_series)?),
                        2.0 / (PI * epsilon),
                    ),
                };
                Arc::new(StrangPropagator::new(free, rate, potential.clone(), *dt)?)
            }
        })
    }
}
