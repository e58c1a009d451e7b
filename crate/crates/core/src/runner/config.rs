//! Experiment configuration, read from TOML with one table per module.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cascade::CascadeParams;
use crate::doubling::DoublingParams;
use crate::error::{Error, Result};
use crate::geometry::ManifoldId;
use crate::nodal::{LocalParams, NodalOptions};
use crate::wavescale::WavescaleParams;

/// Environment variable that overrides `seed`.
pub const SEED_ENV: &str = "NODAL_LAB_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    /// Gaussian random eigenfunctions, one per seed.
    Random,
    /// `sin(nx)·sin(my)` for every `n, m ≥ 1` with `n² + m² = λ` (Torus2).
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolutionPolicy {
    /// Fixed cells per axis; `0` derives it from `λ`.
    pub fixed: usize,
    /// Multiplier on the minimum admissible resolution.
    pub factor: f64,
    /// Lower bound on derived resolutions.
    pub floor: usize,
}

impl Default for ResolutionPolicy {
    fn default() -> Self {
        ResolutionPolicy { fixed: 0, factor: 1.0, floor: 64 }
    }
}

impl ResolutionPolicy {
    pub fn resolve(&self, minimum: usize) -> usize {
        if self.fixed > 0 {
            self.fixed
        } else {
            ((minimum as f64 * self.factor).ceil() as usize).max(self.floor)
        }
    }
}

/// Settings of the Donnelly–Fefferman doubling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DfParams {
    /// Half side of the fixed product cube `Q̃ ⊂ M × ℝ`.
    pub half_side: f64,
    /// Subcubes per axis of `Q̃`.
    pub partition: usize,
}

impl Default for DfParams {
    fn default() -> Self {
        DfParams { half_side: 0.19, partition: 2 }
    }
}

/// Settings of the two pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineParams {
    /// Half side of the square partitioned by the 2D pipeline.
    pub square_half_side: f64,
    /// Dilation of the squares whose `Ñ` bounds the length.
    pub square_dilation: f64,
    /// Subdivision per axis between cascade levels of the 2D pipeline.
    pub square_split: usize,
    /// Cells per axis of each wavelength cube in the 3D pipeline.
    pub cube_cells: usize,
    /// Wavelength cubes have side `cube_wavelengths·2π/√λ`.
    pub cube_wavelengths: f64,
    /// Good-cube threshold in units of `λ^{1/2−2δ}`; infinite counts all cubes.
    pub threshold_scale: f64,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            square_half_side: std::f64::consts::FRAC_PI_2,
            square_dilation: 100.0,
            square_split: 2,
            cube_cells: 8,
            cube_wavelengths: 1.0,
            threshold_scale: crate::calibration::C_GOOD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifold: ManifoldId,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// Geometrically spaced targets, snapped to eigenvalues; `0` takes every
    /// eigenvalue in range.
    pub eigenvalue_count: usize,
    pub ensemble: Ensemble,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Worker threads; `0` uses all cores.
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub resolution: ResolutionPolicy,
    pub nodal: NodalOptions,
    pub doubling: DoublingParams,
    pub cascade: CascadeParams,
    pub wavescale: WavescaleParams,
    pub local: LocalParams,
    pub df: DfParams,
    /// Half side of the product cube the cascade starts from.
    pub cascade_half_side: f64,
    pub pipeline: PipelineParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifold: ManifoldId::Torus2,
            lambda_min: 100.0,
            lambda_max: 10_000.0,
            eigenvalue_count: 20,
            ensemble: Ensemble::Random,
            ensemble_size: 5,
            seed: 0,
            jobs: 0,
            out_dir: PathBuf::from("out"),
            resolution: ResolutionPolicy::default(),
            nodal: NodalOptions::default(),
            doubling: DoublingParams::default(),
            cascade: CascadeParams::default(),
            wavescale: WavescaleParams::default(),
            local: LocalParams::default(),
            df: DfParams::default(),
            cascade_half_side: 0.16,
            pipeline: PipelineParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and applies the `NODAL_LAB_SEED` override.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.apply_env()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v.trim().parse().map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an integer")))?;
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min >= 1.0) || !(self.lambda_max >= self.lambda_min) {
            return Err(Error::Config(format!(
                "need 1 ≤ lambda_min ≤ lambda_max, got {} and {}",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.ensemble_size == 0 {
            return Err(Error::Config("ensemble_size must be at least 1".into()));
        }
        if self.ensemble == Ensemble::Product && self.manifold != ManifoldId::Torus2 {
            return Err(Error::Config("the product ensemble exists on Torus2 only".into()));
        }
        self.doubling.validate(self.manifold.dim())?;
        self.cascade.validate()?;
        self.wavescale.validate()?;
        Ok(())
    }

    /// The eigenvalues this configuration sweeps, ascending.
    pub fn eigenvalues(&self) -> Vec<u64> {
        if self.eigenvalue_count == 0 {
            return crate::eigen::eigenvalue_list(self.manifold, self.lambda_max)
                .into_iter()
                .map(|(l, _)| l)
                .filter(|&l| l as f64 >= self.lambda_min)
                .collect();
        }
        crate::wavescale::geometric_eigenvalues(self.manifold, self.lambda_min, self.lambda_max, self.eigenvalue_count)
            .into_iter()
            .filter(|&l| l as f64 >= self.lambda_min && l as f64 <= self.lambda_max)
            .collect()
    }
}
