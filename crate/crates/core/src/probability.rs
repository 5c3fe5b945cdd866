//! From intensity curves to collision probability bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::StateVector;
use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;
use crate::geometry::{HostRectangle, SegmentId};
use crate::intensity::{RateSample, TRUNCATION_SIGMAS};
use crate::quadrature::{integrate_2d, Tolerance};

/// Intensity samples over a time window, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub samples: Vec<RateSample>,
    pub t_start: f64,
    pub t_end: f64,
}

impl RateCurve {
    pub fn new(samples: Vec<RateSample>, t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_start <= t_end) {
            return Err(Error::Argument(format!("curve window [{t_start}, {t_end}] is empty")));
        }
        for w in samples.windows(2) {
            if !(w[0].t < w[1].t) {
                return Err(Error::Argument(format!("sample times not increasing at {} -> {}", w[0].t, w[1].t)));
            }
        }
        if let (Some(first), Some(last)) = (samples.first(), samples.last()) {
            if first.t < t_start || last.t > t_end {
                return Err(Error::Argument(format!(
                    "samples span [{}, {}] outside window [{t_start}, {t_end}]",
                    first.t, last.t
                )));
            }
        }
        Ok(RateCurve { samples, t_start, t_end })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Sample with the largest total intensity (earliest on ties).
    pub fn peak(&self) -> Option<&RateSample> {
        self.samples.iter().fold(None, |best: Option<&RateSample>, s| match best {
            Some(b) if b.mu_plus >= s.mu_plus => Some(b),
            _ => Some(s),
        })
    }

    /// Area under the piecewise-linear interpolant of `value` over
    /// `[a, b]`; zero outside the sampled span.
    fn area<F: Fn(&RateSample) -> f64>(&self, a: f64, b: f64, value: F) -> f64 {
        let mut total = 0.0;
        for w in self.samples.windows(2) {
            let (t0, t1) = (w[0].t, w[1].t);
            let lo = a.max(t0);
            let hi = b.min(t1);
            if lo >= hi {
                continue;
            }
            let (v0, v1) = (value(&w[0]), value(&w[1]));
            let slope = (v1 - v0) / (t1 - t0);
            let at = |t: f64| v0 + slope * (t - t0);
            total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
        }
        total
    }
}

/// Upper bound of the collision probability over `[t1, t2]`: the expected
/// number of boundary entries, which may exceed one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityBound {
    pub t1: f64,
    pub t2: f64,
    pub p_upper: f64,
    /// `min(p_upper, 1)`.
    pub p_upper_capped: f64,
    /// Per-segment contributions, indexed by [`SegmentId::index`].
    pub per_segment: [f64; 4],
    pub evaluations_used: usize,
}

/// Trapezoidal time integral of the intensity curve over `[t1, t2]`.
pub fn integrate_intensity(curve: &RateCurve, t1: f64, t2: f64) -> Result<ProbabilityBound> {
    if curve.samples.len() < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, curve has {}", curve.samples.len())));
    }
    if !(t1 <= t2) {
        return Err(Error::Argument(format!("interval [{t1}, {t2}] is reversed or NaN")));
    }
    if t1 < curve.t_start || t2 > curve.t_end {
        return Err(Error::Argument(format!(
            "interval [{t1}, {t2}] outside curve window [{}, {}]",
            curve.t_start, curve.t_end
        )));
    }
    let p = curve.area(t1, t2, |s| s.mu_plus);
    let per_segment = SegmentId::ALL.map(|id| curve.area(t1, t2, |s| s.segment(id)));
    Ok(ProbabilityBound {
        t1,
        t2,
        p_upper: p,
        p_upper_capped: p.min(1.0),
        per_segment,
        evaluations_used: curve.samples.len(),
    })
}

/// Positive real roots of `c0 + c1 t + c2 t²`, ascending.
pub fn positive_roots(c0: f64, c1: f64, c2: f64) -> Vec<f64> {
    let mut roots = Vec::with_capacity(2);
    if c2 == 0.0 {
        if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
    } else {
        let disc = c1 * c1 - 4.0 * c2 * c0;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair
            let q = -0.5 * (c1 + c1.signum() * sq);
            if q != 0.0 {
                roots.push(q / c2);
                roots.push(c0 / q);
            } else {
                roots.push(0.0);
            }
        }
    }
    roots.retain(|t| *t > 0.0 && t.is_finite());
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

/// A deterministic boundary-line crossing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TtcSeed {
    pub segment: SegmentId,
    pub time: f64,
}

/// Constant-acceleration crossing times of the front, right and left
/// boundary lines (rear excluded). Roots are not filtered by segment
/// extent; they only seed the adaptive sampler.
pub fn deterministic_ttc_seeds(mean: &StateVector, rect: &HostRectangle) -> Vec<TtcSeed> {
    let lines = [
        (SegmentId::Front, mean.x - rect.x_front, mean.xdot, mean.xddot),
        (SegmentId::Right, mean.y - rect.y_right, mean.ydot, mean.yddot),
        (SegmentId::Left, mean.y - rect.y_left, mean.ydot, mean.yddot),
    ];
    let mut seeds: Vec<TtcSeed> = lines
        .into_iter()
        .flat_map(|(segment, d, v, a)| {
            positive_roots(d, v, 0.5 * a).into_iter().map(move |time| TtcSeed { segment, time })
        })
        .collect();
    seeds.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.segment.cmp(&b.segment)));
    seeds
}

/// Parameters of the adaptive sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    /// Coarse marching step, s.
    pub dt1: f64,
    /// Refinement step around slope sign changes, s.
    pub dt2: f64,
    /// Marching stops once the intensity drops below this, 1/s.
    pub rate_floor: f64,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams { dt1: 0.5, dt2: 0.2, rate_floor: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStatus {
    Ok,
    /// No seed carried signal and the fallback grid was used.
    FallbackGrid,
    /// Nothing above zero was found anywhere.
    NoSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveOutcome {
    pub curve: RateCurve,
    pub evaluations: usize,
    pub status: SamplingStatus,
}

/// Points of the coarse grid used when no seed is usable.
pub const FALLBACK_GRID_POINTS: usize = 8;

const SAME_TIME: f64 = 1e-9;

struct SampleCache<'a, F> {
    eval: &'a F,
    horizon: (f64, f64),
    samples: Vec<RateSample>,
}

impl<'a, F> SampleCache<'a, F>
where
    F: Fn(f64) -> Result<RateSample> + Sync,
{
    fn find(&self, t: f64) -> Option<&RateSample> {
        self.samples.iter().find(|s| (s.t - t).abs() < SAME_TIME)
    }

    /// Evaluates a batch of times (concurrently), skipping cached ones and
    /// times outside the horizon. Returns the samples in request order.
    fn batch(&mut self, times: &[f64]) -> Result<Vec<RateSample>> {
        let mut fresh: Vec<f64> = Vec::new();
        for &t in times {
            if t < self.horizon.0 - SAME_TIME || t > self.horizon.1 + SAME_TIME {
                continue;
            }
            if self.find(t).is_none() && !fresh.iter().any(|f| (f - t).abs() < SAME_TIME) {
                fresh.push(t);
            }
        }
        let eval = self.eval;
        let results: Vec<Result<RateSample>> = fresh.par_iter().map(|&t| eval(t)).collect();
        for r in results {
            self.samples.push(r?);
        }
        Ok(times.iter().filter_map(|&t| self.find(t).copied()).collect())
    }

    fn one(&mut self, t: f64) -> Result<Option<RateSample>> {
        Ok(self.batch(&[t])?.into_iter().next())
    }
}

/// Samples the intensity sparsely: start at the seed with the largest
/// intensity, march outward by `dt1` until the intensity falls below the
/// floor (or the horizon ends), then refine with `dt2` inside
/// `(t − dt1, t + dt1)` around every marched sample where the discrete slope
/// changes sign.
pub fn adaptive_sample<F>(
    evaluator: F,
    seeds: &[f64],
    params: AdaptiveParams,
    horizon: (f64, f64),
) -> Result<AdaptiveOutcome>
where
    F: Fn(f64) -> Result<RateSample> + Sync,
{
    let AdaptiveParams { dt1, dt2, rate_floor } = params;
    if !(dt2 > 0.0 && dt2 < dt1) {
        return Err(Error::Argument(format!("need 0 < dt2 < dt1, got dt1={dt1}, dt2={dt2}")));
    }
    if !(rate_floor > 0.0) {
        return Err(Error::Argument(format!("rate floor must be > 0, got {rate_floor}")));
    }
    let (h0, h1) = horizon;
    if !(h0 < h1) {
        return Err(Error::Argument(format!("empty horizon [{h0}, {h1}]")));
    }

    let mut cache = SampleCache { eval: &evaluator, horizon, samples: Vec::new() };
    let mut seed_times: Vec<f64> = seeds.iter().copied().filter(|t| *t >= h0 && *t <= h1).collect();
    seed_times.sort_by(f64::total_cmp);
    let seeded = cache.batch(&seed_times)?;
    let mut start = argmax_earliest(&seeded);
    let mut status = SamplingStatus::Ok;

    if start.is_none_or(|s| s.mu_plus < rate_floor) {
        let n = FALLBACK_GRID_POINTS;
        let grid: Vec<f64> = (0..n).map(|k| h0 + (h1 - h0) * k as f64 / (n - 1) as f64).collect();
        cache.batch(&grid)?;
        let mut all = cache.samples.clone();
        all.sort_by(|a, b| a.t.total_cmp(&b.t));
        start = argmax_earliest(&all);
        status = SamplingStatus::FallbackGrid;
        if start.is_none_or(|s| s.mu_plus <= 0.0) {
            let evaluations = cache.samples.len();
            return Ok(AdaptiveOutcome {
                curve: RateCurve::new(Vec::new(), h0, h1)?,
                evaluations,
                status: SamplingStatus::NoSignal,
            });
        }
    }
    let start = start.expect("start sample exists");

    let mut marched = vec![start];
    for dir in [-1.0, 1.0] {
        let mut k = 1.0;
        loop {
            let t = start.t + dir * k * dt1;
            let edge = if dir < 0.0 { t < h0 } else { t > h1 };
            let target = if edge {
                if dir < 0.0 {
                    h0
                } else {
                    h1
                }
            } else {
                t
            };
            if (target - start.t).abs() < SAME_TIME {
                break;
            }
            let s = cache.one(target)?.expect("target inside horizon");
            marched.push(s);
            if edge || s.mu_plus < rate_floor {
                break;
            }
            k += 1.0;
        }
    }
    marched.sort_by(|a, b| a.t.total_cmp(&b.t));
    marched.dedup_by(|a, b| (a.t - b.t).abs() < SAME_TIME);

    let mut refine: Vec<f64> = Vec::new();
    for w in marched.windows(3) {
        let before = w[1].mu_plus - w[0].mu_plus;
        let after = w[2].mu_plus - w[1].mu_plus;
        if before * after < 0.0 {
            let tc = w[1].t;
            let mut m = 1.0;
            while m * dt2 < dt1 - SAME_TIME {
                refine.push(tc - m * dt2);
                refine.push(tc + m * dt2);
                m += 1.0;
            }
        }
    }
    refine.sort_by(f64::total_cmp);
    cache.batch(&refine)?;

    let mut samples = cache.samples;
    samples.sort_by(|a, b| a.t.total_cmp(&b.t));
    let evaluations = samples.len();
    Ok(AdaptiveOutcome { curve: RateCurve::new(samples, h0, h1)?, evaluations, status })
}

fn argmax_earliest(samples: &[RateSample]) -> Option<RateSample> {
    let mut best: Option<RateSample> = None;
    for s in samples {
        match best {
            Some(b) if b.mu_plus > s.mu_plus || (b.mu_plus == s.mu_plus && b.t <= s.t) => {}
            _ => best = Some(*s),
        }
    }
    best
}

/// Probability that the target position lies inside the host rectangle at
/// the time of `g` (instantaneous spatial overlap, orientation ignored).
pub fn spatial_overlap_probability(g: &GaussianDensity, rect: &HostRectangle) -> Result<f64> {
    rect.validate()?;
    if g.dim() < 2 {
        return Err(Error::Argument("spatial overlap needs a density over at least (x, y)".into()));
    }
    let pos = g.marginalize(&[0, 1])?;
    let (mx, my) = (pos.mean()[0], pos.mean()[1]);
    let c = pos.cov();
    let (sxx, sxy, syy) = (c[(0, 0)], c[(0, 1)], c[(1, 1)]);
    let det = sxx * syy - sxy * sxy;
    if !(sxx > 0.0 && syy > 0.0 && det > 0.0) {
        return Err(Error::Numerical(format!("positional covariance is degenerate (determinant {det:e})")));
    }
    let sdx = sxx.sqrt();
    let lo = rect.x_rear.max(mx - TRUNCATION_SIGMAS * sdx);
    let hi = rect.x_front.min(mx + TRUNCATION_SIGMAS * sdx);
    if !(lo < hi) {
        return Ok(0.0);
    }
    let slope = sxy / sxx;
    let cond_sd = (syy - sxy * sxy / sxx).sqrt();
    let (ixx, ixy, iyy) = (syy / det, -sxy / det, sxx / det);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let e = integrate_2d(
        |x, y| {
            let (a, b) = (x - mx, y - my);
            norm * (-0.5 * (ixx * a * a + 2.0 * ixy * a * b + iyy * b * b)).exp()
        },
        lo,
        hi,
        |x| {
            let m = my + slope * (x - mx);
            let w = TRUNCATION_SIGMAS * cond_sd;
            (rect.y_left.max(m - w), rect.y_right.min(m + w))
        },
        Tolerance { rel: 1e-8, initial_panels: 8, ..Tolerance::default() },
        Tolerance { rel: 1e-10, initial_panels: 2, ..Tolerance::default() },
    )?;
    Ok(e.value.clamp(0.0, 1.0))
}
