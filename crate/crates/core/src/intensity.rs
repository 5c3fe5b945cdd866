//! Boundary entry intensity `μ⁺` of a Gaussian target density.
//!
//! For a segment mapped to its canonical frame (boundary on `x' = 0`,
//! outside at `x' > 0`) the entry intensity is
//!
//! ```text
//! μ⁺ = −p(x'=0) ∫_{ẋ'≤0} ∫_{y'∈I} ẋ' p(ẋ', y' | x'=0) dy' dẋ'
//! ```
//!
//! which upper-bounds the collision probability rate through that segment.
//! The conditional density is bivariate normal. The double integral is
//! evaluated either by nested adaptive quadrature or in closed form after a
//! first-order expansion of the density in the off-diagonal element of the
//! covariance (or of its inverse).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::gaussian::{normal_cdf, normal_pdf, GaussianDensity};
use crate::geometry::{BoundarySegment, HostRectangle, SegmentId};
use crate::quadrature::{integrate_2d, Tolerance};

/// Half-width of the truncated integration domain in standard deviations.
pub const TRUNCATION_SIGMAS: f64 = 8.0;

/// How the bivariate integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    /// Zeroth order, inverse-covariance diagonal widths.
    Taylor0,
    /// First order in the off-diagonal inverse-covariance element.
    Taylor1Inv,
    /// First order in the off-diagonal covariance element.
    Taylor1Cov,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Quadrature, Method::Taylor0, Method::Taylor1Inv, Method::Taylor1Cov];

    pub fn name(self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Taylor0 => "taylor0",
            Method::Taylor1Inv => "taylor1_inv",
            Method::Taylor1Cov => "taylor1_cov",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            Error::Argument(format!("unknown method `{s}` (expected quadrature, taylor0, taylor1_inv or taylor1_cov)"))
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Total and per-segment entry intensity at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub t: f64,
    pub mu_plus: f64,
    /// Indexed by [`SegmentId::index`].
    pub per_segment: [f64; 4],
    pub method: Method,
    /// Segments whose closed-form value was negative and clamped to zero.
    pub clamped: u32,
}

impl RateSample {
    pub fn segment(&self, id: SegmentId) -> f64 {
        self.per_segment[id.index()]
    }
}

/// Intensity through one segment, before and after clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentIntensity {
    pub value: f64,
    pub raw: f64,
}

impl SegmentIntensity {
    fn from_raw(raw: f64) -> Self {
        SegmentIntensity { value: raw.max(0.0), raw }
    }

    pub fn clamped(&self) -> bool {
        self.raw < 0.0
    }
}

/// The one-dimensional boundary density and the conditional bivariate
/// normal over `(ẋ', y')` at the boundary, in segment coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryConditional {
    /// `p(x' = 0)`, 1/m.
    pub boundary_density: f64,
    /// Conditional mean of `(ẋ', y')`.
    pub mean: [f64; 2],
    /// Conditional covariance of `(ẋ', y')`.
    pub cov: [[f64; 2]; 2],
    /// Segment interval in `y'`.
    pub interval: (f64, f64),
}

impl BoundaryConditional {
    /// Conditions a density over `(x, y, ẋ, ẏ)` on the boundary line of `seg`.
    pub fn new(g4: &GaussianDensity, seg: &BoundarySegment) -> Result<Self> {
        let local = seg.to_segment_frame(g4)?;
        let var_x = local.cov()[(0, 0)];
        if !(var_x > 0.0) {
            return Err(Error::Numerical(format!(
                "{} segment: normal-coordinate variance {var_x:e} is not positive",
                seg.id
            )));
        }
        let boundary_density = normal_pdf(0.0, local.mean()[0], var_x.sqrt());
        // (x', ẋ', y') with ẏ' marginalized out
        let cond = local.marginalize(&[0, 2, 1])?.condition(&[0], &[0.0])?;
        let c = cond.cov();
        Ok(BoundaryConditional {
            boundary_density,
            mean: [cond.mean()[0], cond.mean()[1]],
            cov: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
            interval: seg.interval,
        })
    }

    pub fn determinant(&self) -> f64 {
        self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0]
    }

    fn require_nondegenerate(&self) -> Result<f64> {
        let det = self.determinant();
        if !(det > 0.0) || !(self.cov[0][0] > 0.0) || !(self.cov[1][1] > 0.0) {
            return Err(Error::Numerical(format!(
                "conditional velocity/tangent covariance is degenerate (determinant {det:e})"
            )));
        }
        Ok(det)
    }

    /// `∫_{ẋ≤0} ∫_{y∈I} ẋ p(ẋ, y) dy dẋ` by nested adaptive quadrature.
    pub fn flux_integral_quadrature(&self) -> Result<f64> {
        let det = self.require_nondegenerate()?;
        let [m1, m2] = self.mean;
        let [[s11, s12], [_, s22]] = self.cov;
        let sd1 = s11.sqrt();
        let lo = m1 - TRUNCATION_SIGMAS * sd1;
        let hi = (m1 + TRUNCATION_SIGMAS * sd1).min(0.0);
        if !(lo < hi) {
            return Ok(0.0);
        }
        let (i11, i12, i22) = (s22 / det, -s12 / det, s11 / det);
        let norm = 1.0 / (2.0 * PI * det.sqrt());
        let slope = s12 / s11;
        let cond_sd = (s22 - s12 * s12 / s11).max(0.0).sqrt();
        let (y_lo, y_hi) = self.interval;
        let inner_limits = |xd: f64| {
            let m = m2 + slope * (xd - m1);
            let w = TRUNCATION_SIGMAS * cond_sd;
            (y_lo.max(m - w), y_hi.min(m + w))
        };
        let integrand = |xd: f64, y: f64| {
            let (a, b) = (xd - m1, y - m2);
            xd * norm * (-0.5 * (i11 * a * a + 2.0 * i12 * a * b + i22 * b * b)).exp()
        };
        let outer = Tolerance { rel: 1e-8, initial_panels: 8, ..Tolerance::default() };
        let inner = Tolerance { rel: 1e-10, initial_panels: 2, ..Tolerance::default() };
        Ok(integrate_2d(integrand, lo, hi, inner_limits, outer, inner)?.value)
    }

    /// Zeroth-order closed form with the inverse-covariance diagonal widths.
    pub fn flux_integral_taylor0(&self) -> Result<f64> {
        let det = self.require_nondegenerate()?;
        let [m1, m2] = self.mean;
        let sd1 = (det / self.cov[1][1]).sqrt();
        let sd2 = (det / self.cov[0][0]).sqrt();
        Ok(weighted_half_line(m1, sd1) * interval_mass(self.interval, m2, sd2))
    }

    /// [`flux_integral_taylor0`](Self::flux_integral_taylor0) plus the term
    /// linear in the off-diagonal element of the inverse covariance.
    pub fn flux_integral_taylor1_inv(&self) -> Result<f64> {
        let det = self.require_nondegenerate()?;
        Ok(self.flux_integral_taylor0()? + self.inverse_correction(det))
    }

    /// First-order correction in the inverse-covariance off-diagonal.
    pub fn inverse_correction(&self, det: f64) -> f64 {
        let [m1, m2] = self.mean;
        let var1 = det / self.cov[1][1];
        let var2 = det / self.cov[0][0];
        let (sd1, sd2) = (var1.sqrt(), var2.sqrt());
        let inv12 = -self.cov[0][1] / det;
        let (y_lo, y_hi) = self.interval;
        // [x σ̃² N(x) − σ̃²/2 erf((x−μ)/(√2σ̃))] from −∞ to 0
        let b1 = -var1 * normal_cdf(-m1 / sd1);
        // [σ̃² N(y)] from y_lo to y_hi
        let b2 = var2 * (normal_pdf(y_hi, m2, sd2) - normal_pdf(y_lo, m2, sd2));
        -inv12 * b1 * b2
    }

    /// Closed form to first order in the off-diagonal covariance element.
    pub fn flux_integral_taylor1_cov(&self) -> Result<f64> {
        self.require_nondegenerate()?;
        let [m1, m2] = self.mean;
        let [[s11, s12], [_, s22]] = self.cov;
        let (sd1, sd2) = (s11.sqrt(), s22.sqrt());
        let (y_lo, y_hi) = self.interval;
        let zeroth = weighted_half_line(m1, sd1) * interval_mass(self.interval, m2, sd2);
        // [Φ((x−μ)/σ) − x N(x)] from −∞ to 0 times [−N(y)] from y_lo to y_hi
        let first = s12 * normal_cdf(-m1 / sd1) * (normal_pdf(y_lo, m2, sd2) - normal_pdf(y_hi, m2, sd2));
        Ok(zeroth + first)
    }

    pub fn flux_integral(&self, method: Method) -> Result<f64> {
        match method {
            Method::Quadrature => self.flux_integral_quadrature(),
            Method::Taylor0 => self.flux_integral_taylor0(),
            Method::Taylor1Inv => self.flux_integral_taylor1_inv(),
            Method::Taylor1Cov => self.flux_integral_taylor1_cov(),
        }
    }

    pub fn intensity(&self, method: Method) -> Result<SegmentIntensity> {
        if self.boundary_density == 0.0 {
            return Ok(SegmentIntensity::from_raw(0.0));
        }
        let flux = self.flux_integral(method)?;
        Ok(SegmentIntensity::from_raw(-self.boundary_density * flux))
    }
}

/// `∫_{−∞}^{0} x N(x; μ, σ) dx = μ Φ(−μ/σ) − σ² N(0; μ, σ)`.
fn weighted_half_line(mean: f64, sd: f64) -> f64 {
    mean * normal_cdf(-mean / sd) - sd * sd * normal_pdf(0.0, mean, sd)
}

fn interval_mass((lo, hi): (f64, f64), mean: f64, sd: f64) -> f64 {
    normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd)
}

/// Entry intensity through one segment for a density over `(x, y, ẋ, ẏ)`.
pub fn segment_intensity(g4: &GaussianDensity, seg: &BoundarySegment, method: Method) -> Result<SegmentIntensity> {
    BoundaryConditional::new(g4, seg)?.intensity(method)
}

pub fn segment_intensity_quadrature(g4: &GaussianDensity, seg: &BoundarySegment) -> Result<f64> {
    Ok(segment_intensity(g4, seg, Method::Quadrature)?.value)
}

pub fn segment_intensity_taylor0(g4: &GaussianDensity, seg: &BoundarySegment) -> Result<f64> {
    Ok(segment_intensity(g4, seg, Method::Taylor0)?.value)
}

pub fn segment_intensity_taylor1_inv(g4: &GaussianDensity, seg: &BoundarySegment) -> Result<f64> {
    Ok(segment_intensity(g4, seg, Method::Taylor1Inv)?.value)
}

pub fn segment_intensity_taylor1_cov(g4: &GaussianDensity, seg: &BoundarySegment) -> Result<f64> {
    Ok(segment_intensity(g4, seg, Method::Taylor1Cov)?.value)
}

/// Total entry intensity over the four host sides for a predicted state
/// density at time `t`. Only `(x, y, ẋ, ẏ)` are used.
pub fn total_intensity(g: &GaussianDensity, rect: &HostRectangle, t: f64, method: Method) -> Result<RateSample> {
    if g.dim() < 4 {
        return Err(Error::Argument(format!("state density needs at least (x, y, ẋ, ẏ), got dim {}", g.dim())));
    }
    let g4 = g.marginalize(&[0, 1, 2, 3])?;
    let mut per_segment = [0.0; 4];
    let mut clamped = 0;
    for seg in rect.segments()? {
        let s = segment_intensity(&g4, &seg, method)?;
        per_segment[seg.id.index()] = s.value;
        clamped += u32::from(s.clamped());
    }
    Ok(RateSample { t, mu_plus: per_segment.iter().sum(), per_segment, method, clamped })
}

/// `∫ (−ẋ)⁺ N(ẋ) dẋ` over the half line, used by tests as a 1D reference.
pub fn expected_inflow_speed(mean: f64, sd: f64) -> f64 {
    -weighted_half_line(mean, sd)
}
