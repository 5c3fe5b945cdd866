//! Example target dynamics: a white-noise-jerk kinematic model in host
//! coordinates with an optional sinusoidal jerk input, the matching
//! discrete process noise, a radar measurement model and steady-state
//! filter covariance.
//!
//! State ordering is `(x, y, ẋ, ẏ, ẍ, ÿ)`.

mod measurement;
mod riccati;
mod salient;

pub use measurement::{measurement_function, measurement_jacobian, RadarMeasurement};
pub use riccati::{riccati_step, steady_state_covariance, steady_state_covariance_with, RiccatiOptions};
pub use salient::{salient_jacobian, salient_transform_density, salient_transform_state, SalientOffset, MIN_SPEED};

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

pub const STATE_DIM: usize = 6;
pub type Matrix6 = SMatrix<f64, 6, 6>;
pub type Vector6 = SVector<f64, 6>;

pub const IX: usize = 0;
pub const IY: usize = 1;
pub const IVX: usize = 2;
pub const IVY: usize = 3;
pub const IAX: usize = 4;
pub const IAY: usize = 5;

/// Target kinematic state relative to the host, in the host frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVector {
    pub x: f64,
    pub y: f64,
    pub xdot: f64,
    pub ydot: f64,
    pub xddot: f64,
    pub yddot: f64,
}

impl StateVector {
    pub const fn new(x: f64, y: f64, xdot: f64, ydot: f64, xddot: f64, yddot: f64) -> Self {
        StateVector { x, y, xdot, ydot, xddot, yddot }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.x, self.y, self.xdot, self.ydot, self.xddot, self.yddot]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        StateVector::new(a[0], a[1], a[2], a[3], a[4], a[5])
    }

    pub fn to_vector(self) -> Vector6 {
        Vector6::from(self.to_array())
    }

    pub fn from_vector(v: &Vector6) -> Self {
        StateVector::new(v[0], v[1], v[2], v[3], v[4], v[5])
    }

    pub fn from_slice(s: &[f64]) -> Result<Self> {
        let a: [f64; 6] =
            s.try_into().map_err(|_| Error::Argument(format!("state needs 6 components, got {}", s.len())))?;
        Ok(Self::from_array(a))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Continuous white-noise-jerk model with sinusoidal jerk input
/// `u(t) = (b1 sin ωt, b2 sin ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionModel {
    /// Jerk power spectral density along x, m²/s⁵.
    pub qx: f64,
    /// Jerk power spectral density along y, m²/s⁵.
    pub qy: f64,
    /// Input gain along x, m/s³.
    pub b1: f64,
    /// Input gain along y, m/s³.
    pub b2: f64,
    /// Input angular frequency, 1/s.
    pub omega: f64,
    pub input_enabled: bool,
}

impl MotionModel {
    /// Constant-acceleration model with isotropic jerk noise and no input.
    pub fn constant_acceleration(q: f64) -> Self {
        MotionModel { qx: q, qy: q, b1: 0.0, b2: 0.0, omega: 1.0, input_enabled: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.qx >= 0.0 && self.qy >= 0.0) || !self.qx.is_finite() || !self.qy.is_finite() {
            return Err(Error::config("model.qx/qy", "jerk PSD must be finite and >= 0"));
        }
        if self.input_enabled && !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::config("model.omega", "omega must be > 0 when the input is enabled"));
        }
        if !(self.b1.is_finite() && self.b2.is_finite()) {
            return Err(Error::config("model.b1/b2", "input gains must be finite"));
        }
        Ok(())
    }

    pub fn without_input(mut self) -> Self {
        self.input_enabled = false;
        self
    }

    pub fn with_noise(mut self, q: f64) -> Self {
        self.qx = q;
        self.qy = q;
        self
    }

    /// Deterministic jerk `B u(t)`; zero when the input is disabled.
    pub fn input_jerk(&self, t: f64) -> [f64; 2] {
        if !self.input_enabled {
            return [0.0, 0.0];
        }
        let s = (self.omega * t).sin();
        [self.b1 * s, self.b2 * s]
    }
}

/// Radar measurement noise and filter cycle time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarNoise {
    /// Range standard deviation, m.
    pub sigma_r: f64,
    /// Azimuth standard deviation, rad.
    pub sigma_phi: f64,
    /// Range-rate standard deviation, m/s.
    pub sigma_rdot: f64,
    /// Filter cycle time, s.
    pub cycle_time: f64,
}

impl Default for RadarNoise {
    fn default() -> Self {
        RadarNoise { sigma_r: 0.5, sigma_phi: 0.00873, sigma_rdot: 0.25, cycle_time: 0.05 }
    }
}

impl RadarNoise {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.sigma_r) && ok(self.sigma_phi) && ok(self.sigma_rdot) && ok(self.cycle_time)) {
            return Err(Error::config("radar", "all radar noise parameters must be finite and > 0"));
        }
        Ok(())
    }

    pub fn covariance(&self) -> SMatrix<f64, 3, 3> {
        SMatrix::<f64, 3, 3>::from_diagonal(&SVector::<f64, 3>::new(
            self.sigma_r.powi(2),
            self.sigma_phi.powi(2),
            self.sigma_rdot.powi(2),
        ))
    }
}

/// Homogeneous transition matrix over `dt`; position picks up `dt` and
/// `dt²/2` from velocity and acceleration.
pub fn transition_matrix(dt: f64) -> Matrix6 {
    let mut f = Matrix6::identity();
    let half = 0.5 * dt * dt;
    for axis in 0..2 {
        f[(IX + axis, IVX + axis)] = dt;
        f[(IX + axis, IAX + axis)] = half;
        f[(IVX + axis, IAX + axis)] = dt;
    }
    f
}

/// Discrete process noise covariance `Q(dt)` of the white-noise-jerk model.
pub fn process_noise_cov(dt: f64, model: &MotionModel) -> Matrix6 {
    let mut q = Matrix6::zeros();
    let (d2, d3, d4, d5) = (dt * dt, dt.powi(3), dt.powi(4), dt.powi(5));
    for (axis, psd) in [model.qx, model.qy].into_iter().enumerate() {
        let (p, v, a) = (IX + axis, IVX + axis, IAX + axis);
        q[(p, p)] = d5 / 20.0 * psd;
        q[(p, v)] = d4 / 8.0 * psd;
        q[(p, a)] = d3 / 6.0 * psd;
        q[(v, v)] = d3 / 3.0 * psd;
        q[(v, a)] = d2 / 2.0 * psd;
        q[(a, a)] = dt * psd;
        q[(v, p)] = q[(p, v)];
        q[(a, p)] = q[(p, a)];
        q[(a, v)] = q[(v, a)];
    }
    q
}

/// State increment contributed by the sinusoidal input between `t0` and
/// `t0 + dt` (the particular solution with zero initial state).
pub fn input_increment(model: &MotionModel, t0: f64, dt: f64) -> Vector6 {
    let mut inc = Vector6::zeros();
    if !model.input_enabled || dt == 0.0 {
        return inc;
    }
    let w = model.omega;
    let (s0, c0) = (w * t0).sin_cos();
    let (s1, c1) = (w * (t0 + dt)).sin_cos();
    for (axis, b) in [model.b1, model.b2].into_iter().enumerate() {
        let acc = b * (c0 - c1) / w;
        let vel = b * (dt * c0 / w - (s1 - s0) / (w * w));
        let pos = b * (dt * dt * c0 / (2.0 * w) + dt * s0 / (w * w) + (c1 - c0) / (w * w * w));
        inc[IX + axis] = pos;
        inc[IVX + axis] = vel;
        inc[IAX + axis] = acc;
    }
    inc
}

/// Mean prediction from `t0` to `t0 + dt`.
pub fn predict_mean_from(s: &StateVector, t0: f64, dt: f64, model: &MotionModel) -> StateVector {
    let v = transition_matrix(dt) * s.to_vector() + input_increment(model, t0, dt);
    StateVector::from_vector(&v)
}

/// Mean prediction from `t = 0` over `dt`.
pub fn predict_mean(s: &StateVector, dt: f64, model: &MotionModel) -> StateVector {
    predict_mean_from(s, 0.0, dt, model)
}

fn require_state_dim(g: &GaussianDensity) -> Result<()> {
    if g.dim() != STATE_DIM {
        return Err(Error::Argument(format!("expected a 6-dim state density, got dim {}", g.dim())));
    }
    Ok(())
}

/// Density prediction from `t0` to `t0 + dt`.
pub fn predict_density_from(g: &GaussianDensity, t0: f64, dt: f64, model: &MotionModel) -> Result<GaussianDensity> {
    require_state_dim(g)?;
    if dt < 0.0 {
        return Err(Error::Argument(format!("negative prediction step {dt}")));
    }
    let phi = transition_matrix(dt);
    let mean0 = Vector6::from_column_slice(g.mean().as_slice());
    let cov0 = Matrix6::from_column_slice(g.cov().as_slice());
    let mean = phi * mean0 + input_increment(model, t0, dt);
    let cov = phi * cov0 * phi.transpose() + process_noise_cov(dt, model);
    GaussianDensity::from_symmetrized(
        DVector::from_column_slice(mean.as_slice()),
        DMatrix::from_column_slice(6, 6, cov.as_slice()),
    )
}

/// Density prediction from `t = 0` over `dt`.
pub fn predict_density(g: &GaussianDensity, dt: f64, model: &MotionModel) -> Result<GaussianDensity> {
    predict_density_from(g, 0.0, dt, model)
}

/// Converts a fixed-size 6x6 matrix to a dynamically sized one.
pub fn to_dmatrix(m: &Matrix6) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

/// Gaussian over the state with the given mean and covariance.
pub fn state_density(mean: &StateVector, cov: &Matrix6) -> Result<GaussianDensity> {
    GaussianDensity::from_symmetrized(DVector::from_column_slice(&mean.to_array()), to_dmatrix(cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_on() -> MotionModel {
        MotionModel { qx: 0.0, qy: 0.0, b1: -0.2, b2: -0.3, omega: 0.5, input_enabled: true }
    }

    #[test]
    fn transition_identity_and_unit_step() {
        assert_eq!(transition_matrix(0.0), Matrix6::identity());
        let f = transition_matrix(1.0);
        let row: Vec<f64> = (0..6).map(|c| f[(0, c)]).collect();
        assert_eq!(row, vec![1.0, 0.0, 1.0, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn transition_semigroup() {
        let d = transition_matrix(0.3) * transition_matrix(0.7) - transition_matrix(1.0);
        assert!(d.amax() < 1e-15);
    }

    #[test]
    fn process_noise_unit_step_entries() {
        let q = process_noise_cov(1.0, &MotionModel::constant_acceleration(1.0));
        assert!((q[(0, 0)] - 0.05).abs() < 1e-15);
        assert!((q[(0, 2)] - 0.125).abs() < 1e-15);
        assert!((q[(0, 4)] - 1.0 / 6.0).abs() < 1e-15);
        assert!((q[(2, 2)] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(q[(4, 4)], 1.0);
        assert_eq!(q[(0, 1)], 0.0);
        assert_eq!(process_noise_cov(0.0, &MotionModel::constant_acceleration(3.0)), Matrix6::zeros());
    }

    #[test]
    fn polynomial_propagation_without_input() {
        let s = StateVector::new(10.0, 0.0, -2.0, 0.4, -0.2, 0.0);
        let p = predict_mean(&s, 1.0, &MotionModel::constant_acceleration(0.0));
        let expect = [7.9, 0.4, -2.2, 0.4, -0.2, 0.0];
        for (a, b) in p.to_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(predict_mean(&s, 0.0, &model_on()), s);
    }

    #[test]
    fn input_increments_compose() {
        let m = model_on();
        let s = StateVector::new(10.0, 0.0, -2.0, 0.4, -0.2, 0.0);
        let direct = predict_mean(&s, 2.3, &m);
        let mid = predict_mean_from(&s, 0.0, 1.1, &m);
        let chained = predict_mean_from(&mid, 1.1, 1.2, &m);
        for (a, b) in direct.to_array().iter().zip(chained.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn input_jerk_zero_when_disabled() {
        assert_eq!(model_on().without_input().input_jerk(1.0), [0.0, 0.0]);
        let j = model_on().input_jerk(std::f64::consts::PI);
        assert!((j[0] - -0.2).abs() < 1e-15 && (j[1] - -0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_density_stays_degenerate() {
        let g = state_density(&StateVector::new(1.0, 2.0, 3.0, 4.0, 0.5, 0.1), &Matrix6::zeros()).unwrap();
        let p = predict_density(&g, 2.0, &MotionModel::constant_acceleration(0.0)).unwrap();
        assert_eq!(p.cov().amax(), 0.0);
    }

    #[test]
    fn density_prediction_rejects_wrong_dim() {
        let g = GaussianDensity::from_slices(&[0.0], &[1.0]).unwrap();
        assert!(predict_density(&g, 1.0, &model_on()).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(MotionModel { qx: -1.0, ..model_on() }.validate().is_err());
        assert!(MotionModel { omega: 0.0, ..model_on() }.validate().is_err());
        assert!(MotionModel { omega: 0.0, ..model_on().without_input() }.validate().is_ok());
        assert!(RadarNoise { cycle_time: 0.0, ..RadarNoise::default() }.validate().is_err());
    }
}
