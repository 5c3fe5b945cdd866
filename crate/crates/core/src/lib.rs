//! Collision probability rates for a rectangular host vehicle and a
//! Gaussian target prediction.
//!
//! The central quantity is the boundary entry intensity `μ⁺(t)`: the rate at
//! which probability mass of the target's position flows into the host
//! rectangle. Integrating it over a time window gives an upper bound of the
//! collision probability in that window. A Monte-Carlo simulator provides
//! reference entry histograms.

// `!(a < b)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod intensity;
pub mod monte_carlo;
pub mod probability;
pub mod quadrature;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
pub use gaussian::GaussianDensity;
pub use geometry::{HostRectangle, SegmentId};
pub use intensity::{total_intensity, Method, RateSample};
pub use monte_carlo::{run_campaign, ttc_monte_carlo, CampaignResult, Simulator};
pub use probability::{adaptive_sample, integrate_intensity, ProbabilityBound, RateCurve};
pub use scenario::{Preset, Scenario, ScenarioConfig};
