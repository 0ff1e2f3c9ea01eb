use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::GridSpec;
use crate::schroedinger::solver::SchroedingerSolution;
use crate::schroedinger::spec::KernelSpec;

pub const SOLUTION_SCHEMA_VERSION: u32 = 1;

/// Serialized form of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub grid: GridSpec,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub kernel: KernelSpec,
    pub residual: f64,
    pub iterations: usize,
    pub version: u32,
}

impl SolutionDocument {
    pub fn from_solution(s: &SchroedingerSolution) -> Self {
        SolutionDocument {
            grid: GridSpec::from(s.grid()),
            f: s.f.values.clone(),
            g: s.g.values.clone(),
            kernel: s.kernel.clone(),
            residual: s.residual,
            iterations: s.iterations,
            version: SOLUTION_SCHEMA_VERSION,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
