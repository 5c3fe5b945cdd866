//! Transformation of the reference-point state to a salient point of the
//! target's body (a corner, say). The body orientation is the heading of
//! the velocity vector, so the map is nonlinear in the velocity and
//! acceleration components.

use nalgebra::{DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::{to_dmatrix, Matrix6, StateVector, IAX, IAY, IVX, IVY, STATE_DIM};
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

/// Speeds below this (m/s) leave the heading undefined.
pub const MIN_SPEED: f64 = 1e-3;

/// Translation of the salient point in the target's body frame, m.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SalientOffset {
    pub dx_body: f64,
    pub dy_body: f64,
}

impl SalientOffset {
    pub const fn new(dx_body: f64, dy_body: f64) -> Self {
        SalientOffset { dx_body, dy_body }
    }

    fn vector(&self) -> Vector2<f64> {
        Vector2::new(self.dx_body, self.dy_body)
    }
}

fn rotation(alpha: f64) -> Matrix2<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn rotation_derivative(alpha: f64) -> Matrix2<f64> {
    let (s, c) = alpha.sin_cos();
    Matrix2::new(-s, -c, c, -s)
}

/// Heading, turn rate and turn acceleration with their partial derivatives
/// with respect to `(ẋ, ẏ, ẍ, ÿ)`.
struct Heading {
    alpha: f64,
    rate: f64,
    accel: f64,
    d_alpha: [f64; 4],
    d_rate: [f64; 4],
    d_accel: [f64; 4],
}

fn heading(s: &StateVector, jerk: [f64; 2]) -> Result<Heading> {
    let (vx, vy, ax, ay) = (s.xdot, s.ydot, s.xddot, s.yddot);
    let (jx, jy) = (jerk[0], jerk[1]);
    let sq = vx * vx + vy * vy;
    if sq.sqrt() <= MIN_SPEED {
        return Err(Error::Domain(format!("heading undefined at speed {:e} m/s (threshold {MIN_SPEED:e})", sq.sqrt())));
    }
    let d_sq = [2.0 * vx, 2.0 * vy, 0.0, 0.0];

    let alpha = vy.atan2(vx);
    let d_alpha = [-vy / sq, vx / sq, 0.0, 0.0];

    let cross = vx * ay - vy * ax;
    let d_cross = [ay, -ax, -vy, vx];
    let rate = cross / sq;
    let d_rate: [f64; 4] = std::array::from_fn(|k| (d_cross[k] * sq - cross * d_sq[k]) / (sq * sq));

    let d = vx * vy * (ax * ax - ay * ay) - ax * ay * (vx * vx - vy * vy);
    let d_d = [
        vy * (ax * ax - ay * ay) - 2.0 * ax * ay * vx,
        vx * (ax * ax - ay * ay) + 2.0 * ax * ay * vy,
        2.0 * vx * vy * ax - ay * (vx * vx - vy * vy),
        -2.0 * vx * vy * ay - ax * (vx * vx - vy * vy),
    ];
    let e = vx * jy - vy * jx;
    let d_e = [jy, -jx, 0.0, 0.0];
    let accel = 2.0 * d / (sq * sq) + e / sq;
    let d_accel: [f64; 4] = std::array::from_fn(|k| {
        2.0 * d_d[k] / (sq * sq) - 4.0 * d * d_sq[k] / (sq * sq * sq) + d_e[k] / sq - e * d_sq[k] / (sq * sq)
    });

    Ok(Heading { alpha, rate, accel, d_alpha, d_rate, d_accel })
}

/// Salient-point state. `jerk` is the deterministic jerk entering the turn
/// acceleration (zero for a constant-acceleration model).
pub fn salient_transform_state(s: &StateVector, off: &SalientOffset, jerk: [f64; 2]) -> Result<StateVector> {
    if off.dx_body == 0.0 && off.dy_body == 0.0 {
        return Ok(*s);
    }
    let h = heading(s, jerk)?;
    let d = off.vector();
    let rd = rotation(h.alpha) * d;
    let rpd = rotation_derivative(h.alpha) * d;
    let pos = Vector2::new(s.x, s.y) + rd;
    let vel = Vector2::new(s.xdot, s.ydot) + h.rate * rpd;
    let acc = Vector2::new(s.xddot, s.yddot) - h.rate * h.rate * rd + h.accel * rpd;
    Ok(StateVector::new(pos[0], pos[1], vel[0], vel[1], acc[0], acc[1]))
}

/// Analytic Jacobian of [`salient_transform_state`] with respect to the
/// reference state.
pub fn salient_jacobian(s: &StateVector, off: &SalientOffset, jerk: [f64; 2]) -> Result<Matrix6> {
    let mut j = Matrix6::identity();
    if off.dx_body == 0.0 && off.dy_body == 0.0 {
        return Ok(j);
    }
    let h = heading(s, jerk)?;
    let d = off.vector();
    let rd = rotation(h.alpha) * d;
    let rpd = rotation_derivative(h.alpha) * d;
    // columns ẋ, ẏ, ẍ, ÿ
    let cols = [IVX, IVY, IAX, IAY];
    for (k, &col) in cols.iter().enumerate() {
        let da = h.d_alpha[k];
        let dpos = rpd * da;
        // d(R'Δ)/dα = -RΔ
        let dvel = h.d_rate[k] * rpd - h.rate * da * rd;
        let dacc =
            -2.0 * h.rate * h.d_rate[k] * rd - h.rate * h.rate * da * rpd + h.d_accel[k] * rpd - h.accel * da * rd;
        for axis in 0..2 {
            j[(axis, col)] += dpos[axis];
            j[(IVX + axis, col)] += dvel[axis];
            j[(IAX + axis, col)] += dacc[axis];
        }
    }
    Ok(j)
}

/// Gaussian approximation of the salient-point density: nonlinear mean,
/// Jacobian-propagated covariance.
pub fn salient_transform_density(g: &GaussianDensity, off: &SalientOffset, jerk: [f64; 2]) -> Result<GaussianDensity> {
    if g.dim() != STATE_DIM {
        return Err(Error::Argument(format!("expected a 6-dim state density, got dim {}", g.dim())));
    }
    let s = StateVector::from_slice(g.mean().as_slice())?;
    let mean = salient_transform_state(&s, off, jerk)?;
    let jac = to_dmatrix(&salient_jacobian(&s, off, jerk)?);
    let cov = &jac * g.cov() * jac.transpose();
    GaussianDensity::from_symmetrized(DVector::from_column_slice(&mean.to_array()), cov)
}
