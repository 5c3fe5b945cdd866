use nalgebra::SMatrix;

use super::{
    measurement_jacobian, process_noise_cov, transition_matrix, Matrix6, MotionModel, RadarNoise, StateVector,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiOptions {
    pub max_iterations: usize,
    /// Convergence threshold on the largest absolute element change.
    pub tolerance: f64,
}

impl Default for RiccatiOptions {
    fn default() -> Self {
        RiccatiOptions { max_iterations: 10_000, tolerance: 1e-9 }
    }
}

/// One predict/update cycle of the covariance recursion, starting from a
/// posterior covariance and returning the next posterior (Joseph form).
pub fn riccati_step(
    posterior: &Matrix6,
    phi: &Matrix6,
    q: &Matrix6,
    h: &SMatrix<f64, 3, 6>,
    r: &SMatrix<f64, 3, 3>,
) -> Result<Matrix6> {
    let prior = phi * posterior * phi.transpose() + q;
    let s = h * prior * h.transpose() + r;
    let s_inv =
        s.cholesky().ok_or_else(|| Error::Numerical("innovation covariance not positive definite".into()))?.inverse();
    let gain = prior * h.transpose() * s_inv;
    let i_kh = Matrix6::identity() - gain * h;
    let next = i_kh * prior * i_kh.transpose() + gain * r * gain.transpose();
    Ok((next + next.transpose()) * 0.5)
}

/// Steady-state posterior covariance of the radar filter for the motion
/// model, with the measurement linearized once at `mean`.
pub fn steady_state_covariance(mean: &StateVector, model: &MotionModel, noise: &RadarNoise) -> Result<Matrix6> {
    steady_state_covariance_with(mean, model, noise, RiccatiOptions::default())
}

pub fn steady_state_covariance_with(
    mean: &StateVector,
    model: &MotionModel,
    noise: &RadarNoise,
    opts: RiccatiOptions,
) -> Result<Matrix6> {
    let dt = noise.cycle_time;
    let phi = transition_matrix(dt);
    let q = process_noise_cov(dt, model);
    let h = measurement_jacobian(mean)?;
    let r = noise.covariance();

    let mut p = Matrix6::from_diagonal(&nalgebra::SVector::<f64, 6>::new(100.0, 100.0, 25.0, 25.0, 4.0, 4.0));
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let next = riccati_step(&p, &phi, &q, &h, &r)?;
        last_change = (next - p).amax();
        p = next;
        if last_change < opts.tolerance {
            return Ok(p);
        }
    }
    Err(Error::Convergence { iterations: opts.max_iterations, last_change })
}
