//! Scenario configuration, built-in presets and the analytic evaluators
//! bound to a resolved scenario.

use nalgebra::SMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    predict_density, salient_transform_density, steady_state_covariance, Matrix6, MotionModel, RadarNoise,
    SalientOffset, StateVector,
};
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;
use crate::geometry::HostRectangle;
use crate::intensity::{total_intensity, Method, RateSample};
use crate::probability::{
    adaptive_sample, deterministic_ttc_seeds, spatial_overlap_probability, AdaptiveOutcome, AdaptiveParams, RateCurve,
};

/// Jerk noise PSD of both presets, m²/s⁵.
pub const PRESET_NOISE_PSD: f64 = 0.0101;

/// How the initial covariance is obtained.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCov {
    /// Steady-state radar filter covariance for the configured model.
    #[default]
    Riccati,
    /// Row-major 6x6 matrix.
    Explicit { matrix: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Front,
    FrontRight,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Front, Preset::FrontRight];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Front => "front",
            Preset::FrontRight => "front-right",
        }
    }

    pub fn config(self) -> ScenarioConfig {
        let (initial_mean, b1, b2) = match self {
            Preset::Front => (StateVector::new(10.0, 0.0, -2.0, 0.4, -0.2, 0.0), -0.2, -0.3),
            Preset::FrontRight => (StateVector::new(10.0, 10.0, -2.0, -1.6, -0.001, -0.01), -0.4, -0.5),
        };
        ScenarioConfig {
            initial_mean,
            initial_cov: InitialCov::Riccati,
            model: MotionModel { qx: PRESET_NOISE_PSD, qy: PRESET_NOISE_PSD, b1, b2, omega: 0.5, input_enabled: true },
            radar: RadarNoise::default(),
            rect: HostRectangle::default(),
            horizon: default_horizon(),
            sim_step: default_sim_step(),
            bin_width: default_bin_width(),
            n_traj: default_n_traj(),
            seed: None,
            terminate_on_entry: false,
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::config("preset", format!("unknown preset `{s}` (expected front or front-right)")))
    }
}

fn default_horizon() -> f64 {
    8.0
}
fn default_sim_step() -> f64 {
    0.01
}
fn default_bin_width() -> f64 {
    0.05
}
fn default_n_traj() -> u64 {
    100_000
}

/// Everything a run needs. Units are SI throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial_mean: StateVector,
    #[serde(default)]
    pub initial_cov: InitialCov,
    pub model: MotionModel,
    #[serde(default)]
    pub radar: RadarNoise,
    #[serde(default)]
    pub rect: HostRectangle,
    /// Prediction horizon, s.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Monte-Carlo integration step, s.
    #[serde(default = "default_sim_step")]
    pub sim_step: f64,
    /// Histogram bin width, s.
    #[serde(default = "default_bin_width")]
    pub bin_width: f64,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Stop each trajectory at its first entry into the host rectangle.
    #[serde(default)]
    pub terminate_on_entry: bool,
}

impl ScenarioConfig {
    /// Parses a TOML document. A top-level `preset = "front"` or
    /// `"front-right"` supplies every field the document leaves out; nested
    /// tables are merged key by key.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| Error::config("<document>", e.message().to_string()))?;
        if let Some(preset) = table.remove("preset") {
            let name = preset.as_str().ok_or_else(|| Error::config("preset", "expected a string"))?;
            let base = name.parse::<Preset>()?.config();
            let mut merged = toml::Table::try_from(&base).map_err(|e| Error::config("preset", e.to_string()))?;
            merge_tables(&mut merged, table);
            table = merged;
        }
        let config: ScenarioConfig = serde_path_to_error::deserialize(table).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().message().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<document>", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !self.initial_mean.is_finite() {
            return Err(Error::config("initial_mean", "all components must be finite"));
        }
        if let InitialCov::Explicit { matrix } = &self.initial_cov {
            if matrix.len() != 6 || matrix.iter().any(|r| r.len() != 6) {
                return Err(Error::config("initial_cov.matrix", "expected 6 rows of 6 values"));
            }
        }
        self.model.validate()?;
        self.radar.validate()?;
        self.rect.validate().map_err(|e| Error::config("rect", e.to_string()))?;
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("horizon", "must be finite and > 0"));
        }
        if !(self.sim_step > 0.0) {
            return Err(Error::config("sim_step", "must be > 0"));
        }
        if !(self.bin_width > 0.0 && self.bin_width.is_finite()) {
            return Err(Error::config("bin_width", "must be finite and > 0"));
        }
        if self.sim_step > self.bin_width {
            return Err(Error::config("sim_step", "must not exceed bin_width"));
        }
        if self.n_traj == 0 {
            return Err(Error::config("n_traj", "must be >= 1"));
        }
        Ok(())
    }
}

fn merge_tables(base: &mut toml::Table, over: toml::Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

/// A validated configuration with its initial density resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    initial: GaussianDensity,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let cov = match &config.initial_cov {
            InitialCov::Riccati => steady_state_covariance(&config.initial_mean, &config.model, &config.radar)
                .map_err(|e| Error::config("initial_cov", e.to_string()))?,
            InitialCov::Explicit { matrix } => {
                let flat: Vec<f64> = matrix.iter().flatten().copied().collect();
                SMatrix::<f64, 6, 6>::from_row_slice(&flat)
            }
        };
        let initial = GaussianDensity::new(
            nalgebra::DVector::from_column_slice(&config.initial_mean.to_array()),
            crate::dynamics::to_dmatrix(&cov),
        )
        .map_err(|e| Error::config("initial_cov", e.to_string()))?;
        Ok(Scenario { config, initial })
    }

    pub fn preset(p: Preset) -> Result<Self> {
        Scenario::new(p.config())
    }

    pub fn initial_density(&self) -> &GaussianDensity {
        &self.initial
    }

    pub fn initial_covariance(&self) -> Matrix6 {
        Matrix6::from_column_slice(self.initial.cov().as_slice())
    }

    pub fn rect(&self) -> &HostRectangle {
        &self.config.rect
    }

    pub fn predicted_density(&self, t: f64) -> Result<GaussianDensity> {
        predict_density(&self.initial, t, &self.config.model)
    }

    /// Entry intensity of the reference point at time `t`.
    pub fn intensity_at(&self, t: f64, method: Method) -> Result<RateSample> {
        total_intensity(&self.predicted_density(t)?, &self.config.rect, t, method)
    }

    /// Entry intensity of a body-fixed salient point at time `t`.
    pub fn salient_intensity_at(&self, t: f64, offset: &SalientOffset, method: Method) -> Result<RateSample> {
        let g = self.predicted_density(t)?;
        let g = salient_transform_density(&g, offset, self.config.model.input_jerk(t))?;
        total_intensity(&g, &self.config.rect, t, method)
    }

    pub fn spatial_overlap_at(&self, t: f64) -> Result<f64> {
        spatial_overlap_probability(&self.predicted_density(t)?, &self.config.rect)
    }

    /// Intensity on the uniform grid `0, dt, 2dt, …` up to the horizon.
    pub fn dense_curve(&self, method: Method, dt: f64) -> Result<RateCurve> {
        self.dense_curve_with(dt, |t| self.intensity_at(t, method))
    }

    pub fn dense_curve_with<F>(&self, dt: f64, eval: F) -> Result<RateCurve>
    where
        F: Fn(f64) -> Result<RateSample> + Sync,
    {
        let times = uniform_grid(self.config.horizon, dt)?;
        let samples = times.par_iter().map(|&t| eval(t)).collect::<Result<Vec<_>>>()?;
        RateCurve::new(samples, 0.0, self.config.horizon)
    }

    /// Sparse sampling seeded with the deterministic crossing times of the
    /// initial mean.
    pub fn adaptive_curve(&self, method: Method, params: AdaptiveParams) -> Result<AdaptiveOutcome> {
        let seeds: Vec<f64> =
            deterministic_ttc_seeds(&self.config.initial_mean, &self.config.rect).into_iter().map(|s| s.time).collect();
        adaptive_sample(|t| self.intensity_at(t, method), &seeds, params, (0.0, self.config.horizon))
    }
}

/// `0, dt, …` up to and including `horizon` (within rounding).
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Argument(format!("grid step must be > 0, got {dt}")));
    }
    let n = (horizon / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}
