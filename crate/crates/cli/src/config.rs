use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use levy_bridge::feynman_kac::Potential;
use levy_bridge::numerics::{CauchyComponent, CauchyMixture, Grid1D, GridSpec};
use levy_bridge::schroedinger::{BoundaryData, SolveOptions};
use serde::{Deserialize, Serialize};

/// Boundary densities by preset name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    /// `Cauchy(0,1)` to its free evolution.
    Free,
    /// `Cauchy(0,1)` to `½Cauchy(−3,½) + ½Cauchy(3,½)`.
    Bimodal,
    /// Narrow spikes at `y0` and `z_t`.
    Pinned { y0: f64, z_t: f64, spike: f64 },
    /// Arbitrary Cauchy mixtures.
    Mixture {
        rho0: Vec<CauchyComponent>,
        rho_t: Vec<CauchyComponent>,
    },
}

impl BoundaryConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BoundaryConfig::Free => "free",
            BoundaryConfig::Bimodal => "bimodal",
            BoundaryConfig::Pinned { .. } => "pinned",
            BoundaryConfig::Mixture { .. } => "mixture",
        }
    }

    pub fn build(&self, grid: Grid1D, horizon: f64) -> levy_bridge::Result<BoundaryData> {
        match self {
            BoundaryConfig::Free => BoundaryData::free(grid, horizon),
            BoundaryConfig::Bimodal => BoundaryData::bimodal(grid, horizon),
            BoundaryConfig::Pinned { y0, z_t, spike } => BoundaryData::pinned(grid, *y0, *z_t, horizon, *spike),
            BoundaryConfig::Mixture { rho0, rho_t } => BoundaryData::from_mixtures(
                grid,
                CauchyMixture::new(rho0.clone())?,
                CauchyMixture::new(rho_t.clone())?,
                horizon,
            ),
        }
    }
}

/// A potential either as a preset string (`"box:-1,1,1"`) or in full form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialConfig {
    Preset(String),
    Full(Potential),
}

impl PotentialConfig {
    pub fn resolve(&self) -> levy_bridge::Result<Potential> {
        let v = match self {
            PotentialConfig::Preset(s) => s.parse()?,
            PotentialConfig::Full(v) => v.clone(),
        };
        v.validate()?;
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_paths: 100_000,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_mass: f64,
    pub tol_fit: f64,
    pub tol_series: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_mass: 1e-4,
            tol_fit: 1e-8,
            tol_series: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    #[serde(rename = "horizon_T")]
    pub horizon: f64,
    pub epsilon_list: Vec<f64>,
    pub boundary: BoundaryConfig,
    pub potential: Option<PotentialConfig>,
    pub mc: McConfig,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid: GridSpec {
                x_min: -40.0,
                x_max: 40.0,
                n: 1601,
            },
            horizon: 1.0,
            epsilon_list: vec![1.0, 0.3, 0.1, 0.03],
            boundary: BoundaryConfig::Bimodal,
            potential: None,
            mc: McConfig::default(),
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            max_iter: 500,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("{path}: {}", e.into_inner())
        })?;
        Ok(cfg)
    }

    /// Re-checks every numeric constraint; all violations are reported, each
    /// prefixed with its field path.
    pub fn validate(&self) -> anyhow::Result<()> {
        let mut errs = Vec::new();
        let grid = Grid1D::try_from(self.grid);
        if let Err(e) = &grid {
            errs.push(format!("grid: {e}"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            errs.push(format!("horizon_T: must be finite and > 0, got {}", self.horizon));
        }
        if self.epsilon_list.is_empty() {
            errs.push("epsilon_list: must not be empty".into());
        }
        for (i, e) in self.epsilon_list.iter().enumerate() {
            if !(e.is_finite() && *e > 0.0) {
                errs.push(format!("epsilon_list[{i}]: must be finite and > 0, got {e}"));
            }
        }
        if let (Ok(g), true) = (grid, self.horizon > 0.0) {
            if let Err(e) = self.boundary.build(g, self.horizon) {
                errs.push(format!("boundary: {e}"));
            }
        }
        if let Some(p) = &self.potential {
            if let Err(e) = p.resolve() {
                errs.push(format!("potential: {e}"));
            }
        }
        if self.mc.n_paths == 0 {
            errs.push("mc.n_paths: must be at least 1".into());
        }
        for (name, v) in [
            ("tol_mass", self.tolerances.tol_mass),
            ("tol_fit", self.tolerances.tol_fit),
            ("tol_series", self.tolerances.tol_series),
        ] {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("tolerances.{name}: must be finite and > 0, got {v}"));
            }
        }
        if self.max_iter == 0 {
            errs.push("max_iter: must be at least 1".into());
        }
        if !errs.is_empty() {
            bail!("invalid config:\n  {}", errs.join("\n  "));
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::try_from(self.grid).expect("validated grid")
    }

    pub fn boundary_data(&self) -> levy_bridge::Result<BoundaryData> {
        self.boundary.build(self.grid(), self.horizon)
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol_fit: self.tolerances.tol_fit,
            max_iter: self.max_iter,
            tol_series: self.tolerances.tol_series,
        }
    }
}
