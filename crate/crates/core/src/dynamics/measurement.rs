use nalgebra::SMatrix;

use super::StateVector;
use crate::error::{Error, Result};

/// Radar observables: range, azimuth and range rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarMeasurement {
    pub r: f64,
    pub phi: f64,
    pub rdot: f64,
}

fn range(s: &StateVector) -> Result<f64> {
    let r = s.x.hypot(s.y);
    if r <= 0.0 {
        return Err(Error::Domain("radar measurement undefined at zero range".into()));
    }
    Ok(r)
}

pub fn measurement_function(s: &StateVector) -> Result<RadarMeasurement> {
    let r = range(s)?;
    Ok(RadarMeasurement { r, phi: s.y.atan2(s.x), rdot: (s.x * s.xdot + s.y * s.ydot) / r })
}

/// Jacobian of [`measurement_function`] with respect to the state.
pub fn measurement_jacobian(s: &StateVector) -> Result<SMatrix<f64, 3, 6>> {
    let r = range(s)?;
    let r2 = r * r;
    let rdot = (s.x * s.xdot + s.y * s.ydot) / r;
    let mut h = SMatrix::<f64, 3, 6>::zeros();
    h[(0, 0)] = s.x / r;
    h[(0, 1)] = s.y / r;
    h[(1, 0)] = -s.y / r2;
    h[(1, 1)] = s.x / r2;
    h[(2, 0)] = (s.xdot - rdot * s.x / r) / r;
    h[(2, 1)] = (s.ydot - rdot * s.y / r) / r;
    h[(2, 2)] = s.x / r;
    h[(2, 3)] = s.y / r;
    Ok(h)
}
