mod common;

use std::sync::Mutex;

use crossrate::dynamics::StateVector;
use crossrate::gaussian::GaussianDensity;
use crossrate::geometry::{HostRectangle, SegmentId};
use crossrate::intensity::{Method, RateSample};
use crossrate::probability::*;
use crossrate::scenario::{uniform_grid, Preset, Scenario};
use crossrate::Result;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn sample(t: f64, v: f64) -> RateSample {
    RateSample { t, mu_plus: v, per_segment: [v, 0.0, 0.0, 0.0], method: Method::Quadrature, clamped: 0 }
}

fn bump(t: f64) -> f64 {
    0.8 * (-(t - 4.2f64).powi(2) / (2.0 * 0.46f64.powi(2))).exp()
}

fn dense_bump_integral() -> f64 {
    let samples = uniform_grid(8.0, 0.05).unwrap().into_iter().map(|t| sample(t, bump(t))).collect();
    integrate_intensity(&RateCurve::new(samples, 0.0, 8.0).unwrap(), 0.0, 8.0).unwrap().p_upper
}

#[test]
fn constant_rate_integrates_exactly() {
    let curve = RateCurve::new(vec![sample(0.0, 0.1), sample(0.7, 0.1), sample(2.0, 0.1)], 0.0, 2.0).unwrap();
    let b = integrate_intensity(&curve, 0.0, 2.0).unwrap();
    assert!((b.p_upper - 0.2).abs() < 1e-15);
    assert_eq!(b.per_segment[SegmentId::Front.index()], b.p_upper);
    assert_eq!(integrate_intensity(&curve, 1.3, 1.3).unwrap().p_upper, 0.0);
    assert!(integrate_intensity(&curve, 1.5, 1.0).is_err());
    assert!(integrate_intensity(&curve, 0.0, 2.5).is_err());
}

#[test]
fn bound_is_reported_raw_and_capped() {
    let curve = RateCurve::new(vec![sample(0.0, 1.0), sample(3.0, 1.0)], 0.0, 3.0).unwrap();
    let b = integrate_intensity(&curve, 0.0, 3.0).unwrap();
    assert!((b.p_upper - 3.0).abs() < 1e-15);
    assert_eq!(b.p_upper_capped, 1.0);
}

#[test]
fn seed_for_decelerating_approach() {
    let mean = StateVector::new(10.0, 0.0, -2.0, 0.0, -0.2, 0.0);
    let seeds = deterministic_ttc_seeds(&mean, &HostRectangle::default());
    let front: Vec<f64> = seeds.iter().filter(|s| s.segment == SegmentId::Front).map(|s| s.time).collect();
    assert_eq!(front.len(), 1);
    let t = front[0];
    assert!((t - 10.0 * (2f64.sqrt() - 1.0)).abs() < 1e-12);
    let residual = 10.0 - 2.0 * t - 0.1 * t * t;
    assert!(residual.abs() < 1e-9);
}

#[test]
fn seeds_for_straight_and_receding_motion() {
    let rect = HostRectangle::default();
    let seeds = deterministic_ttc_seeds(&StateVector::new(10.0, 0.0, -2.0, 0.0, 0.0, 0.0), &rect);
    assert_eq!(seeds, vec![TtcSeed { segment: SegmentId::Front, time: 5.0 }]);
    let away = deterministic_ttc_seeds(&StateVector::new(10.0, 0.0, 2.0, 0.0, 0.0, 0.0), &rect);
    assert!(away.iter().all(|s| s.segment != SegmentId::Front));
}

#[test]
fn stable_roots_for_tiny_curvature() {
    // 1 − 1e8 t + t² has roots near 1e-8 and 1e8
    let r = positive_roots(1.0, -1e8, 1.0);
    assert_eq!(r.len(), 2);
    assert!((r[0] - 1e-8).abs() < 1e-20);
    assert!((r[1] - 1e8).abs() < 1e-4);
}

#[test]
fn adaptive_sampler_stays_inside_horizon_without_repeats() {
    let calls = Mutex::new(Vec::new());
    let eval = |t: f64| -> Result<RateSample> {
        calls.lock().unwrap().push(t);
        Ok(sample(t, bump(t)))
    };
    let params = AdaptiveParams::default();
    for seeds in [vec![4.1], vec![0.2, 7.9], vec![-1.0, 9.0, 4.0, 4.0], vec![]] {
        calls.lock().unwrap().clear();
        let out = adaptive_sample(eval, &seeds, params, (0.0, 8.0)).unwrap();
        let mut seen = calls.lock().unwrap().clone();
        assert_eq!(seen.len(), out.evaluations);
        assert!(seen.iter().all(|t| (0.0..=8.0).contains(t)), "{seen:?}");
        seen.sort_by(f64::total_cmp);
        assert!(seen.windows(2).all(|w| w[1] - w[0] > 1e-9), "{seen:?}");
    }
}

#[test]
fn adaptive_bump_matches_dense_grid() {
    let eval = |t: f64| -> Result<RateSample> { Ok(sample(t, bump(t))) };
    let out = adaptive_sample(eval, &[4.0], AdaptiveParams::default(), (0.0, 8.0)).unwrap();
    assert_eq!(out.status, SamplingStatus::Ok);
    let adaptive = integrate_intensity(&out.curve, 0.0, 8.0).unwrap().p_upper;
    let dense = dense_bump_integral();
    assert!(((adaptive - dense) / dense).abs() < 0.05, "{adaptive} vs {dense}");
}

#[test]
fn adaptive_bumps_at_every_phase() {
    // widths from the front preset's intensity spread upwards, centres across one coarse step
    for sd in [0.46, 0.6, 0.8, 1.0] {
        for k in 0..10 {
            let c = 3.5 + 0.05 * k as f64;
            let f = |t: f64| 0.8 * (-(t - c).powi(2) / (2.0 * sd * sd)).exp();
            let eval = |t: f64| -> Result<RateSample> { Ok(sample(t, f(t))) };
            let out = adaptive_sample(eval, &[c - 0.3], AdaptiveParams::default(), (0.0, 8.0)).unwrap();
            let adaptive = integrate_intensity(&out.curve, 0.0, 8.0).unwrap().p_upper;
            let samples = uniform_grid(8.0, 0.05).unwrap().into_iter().map(|t| sample(t, f(t))).collect();
            let dense = integrate_intensity(&RateCurve::new(samples, 0.0, 8.0).unwrap(), 0.0, 8.0).unwrap().p_upper;
            assert!(((adaptive - dense) / dense).abs() < 0.05, "sd {sd} centre {c}: {adaptive} vs {dense}");
        }
    }
}

#[test]
fn silent_evaluator_gives_empty_curve() {
    let eval = |t: f64| -> Result<RateSample> { Ok(sample(t, 0.0)) };
    let out = adaptive_sample(eval, &[], AdaptiveParams::default(), (0.0, 8.0)).unwrap();
    assert_eq!(out.status, SamplingStatus::NoSignal);
    assert!(out.curve.is_empty());
    assert_eq!(out.evaluations, FALLBACK_GRID_POINTS);
}

#[test]
fn sampler_rejects_bad_steps() {
    let eval = |t: f64| -> Result<RateSample> { Ok(sample(t, 1.0)) };
    let p = AdaptiveParams { dt1: 0.2, dt2: 0.5, rate_floor: 0.01 };
    assert!(adaptive_sample(eval, &[1.0], p, (0.0, 8.0)).is_err());
}

#[test]
fn presets_adaptive_vs_dense() {
    for (p, budget) in [(Preset::Front, 15), (Preset::FrontRight, 14)] {
        let s = Scenario::preset(p).unwrap();
        let a = s.adaptive_curve(Method::Quadrature, AdaptiveParams::default()).unwrap();
        assert_eq!(a.status, SamplingStatus::Ok);
        assert!(a.evaluations <= budget, "{}: {} evaluations", p.name(), a.evaluations);
        let adaptive = integrate_intensity(&a.curve, 0.0, 8.0).unwrap().p_upper;
        let dense = integrate_intensity(&s.dense_curve(Method::Quadrature, 0.05).unwrap(), 0.0, 8.0).unwrap().p_upper;
        assert!(adaptive >= 0.0);
        assert!(((adaptive - dense) / dense).abs() < 0.05, "{}: {adaptive} vs {dense}", p.name());
    }
}

#[test]
fn front_bound_exceeds_sixty_percent_by_six_seconds() {
    let s = Scenario::preset(Preset::Front).unwrap();
    let curve = s.dense_curve(Method::Quadrature, 0.05).unwrap();
    let b = integrate_intensity(&curve, 0.0, 6.0).unwrap();
    assert!(b.p_upper > 0.6, "{}", b.p_upper);
}

#[test]
fn overlap_limits() {
    let rect = HostRectangle::default();
    let tight = |x: f64, y: f64, sd: f64| {
        let mut mean = DVector::zeros(6);
        mean[0] = x;
        mean[1] = y;
        GaussianDensity::new(mean, DMatrix::identity(6, 6) * sd * sd).unwrap()
    };
    assert!((spatial_overlap_probability(&tight(-2.5, 0.0, 0.01), &rect).unwrap() - 1.0).abs() < 1e-9);
    assert!(spatial_overlap_probability(&tight(100.0, 0.0, 1.0), &rect).unwrap() < 1e-12);
}

#[test]
fn overlap_peaks_after_front_crossing() {
    let s = Scenario::preset(Preset::Front).unwrap();
    let times = uniform_grid(8.0, 0.05).unwrap();
    let overlap: Vec<f64> = times.iter().map(|&t| s.spatial_overlap_at(t).unwrap()).collect();
    let i = (0..times.len()).max_by(|&a, &b| overlap[a].total_cmp(&overlap[b])).unwrap();
    let front_ttc = deterministic_ttc_seeds(&s.config.initial_mean, s.rect())
        .into_iter()
        .find(|seed| seed.segment == SegmentId::Front)
        .unwrap()
        .time;
    assert!(times[i] > front_ttc, "overlap peak {} vs front crossing {front_ttc}", times[i]);
}

proptest! {
    #[test]
    fn integral_is_additive_and_monotone(
        values in prop::collection::vec(0.0..2.0f64, 5..30),
        a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64,
    ) {
        let n = values.len();
        let samples = values.iter().enumerate().map(|(i, &v)| sample(8.0 * i as f64 / (n - 1) as f64, v)).collect();
        let curve = RateCurve::new(samples, 0.0, 8.0).unwrap();
        let mut t = [a * 8.0, b * 8.0, c * 8.0];
        t.sort_by(f64::total_cmp);
        let i01 = integrate_intensity(&curve, t[0], t[1]).unwrap().p_upper;
        let i12 = integrate_intensity(&curve, t[1], t[2]).unwrap().p_upper;
        let i02 = integrate_intensity(&curve, t[0], t[2]).unwrap().p_upper;
        prop_assert!((i01 + i12 - i02).abs() <= 1e-12 * (1.0 + i02));
        prop_assert!(i02 >= i01 - 1e-15);
        prop_assert!(i01 >= 0.0);
    }
}
