mod common;

use crossrate::dynamics::{MotionModel, StateVector};
use crossrate::geometry::SegmentId;
use crossrate::monte_carlo::*;
use crossrate::scenario::{InitialCov, Preset, Scenario, ScenarioConfig};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;

fn small(p: Preset, n_traj: u64) -> Scenario {
    Scenario::new(ScenarioConfig { n_traj, ..p.config() }).unwrap()
}

#[test]
fn initial_draws_match_configured_moments() {
    let s = small(Preset::FrontRight, 1);
    let sim = Simulator::new(&s, 7).unwrap();
    let n = 1_000_000u64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut sum = DVector::<f64>::zeros(6);
    let mut outer = DMatrix::<f64>::zeros(6, 6);
    for _ in 0..n {
        let x = DVector::from_row_slice(&sim.sample_initial(&mut rng).to_array());
        outer += &x * x.transpose();
        sum += x;
    }
    let mean = &sum / n as f64;
    let cov = &outer / n as f64 - &mean * mean.transpose();
    let want = s.initial_density();
    for i in 0..6 {
        let bound = 4.0 * want.std_dev(i) / (n as f64).sqrt();
        assert!((mean[i] - want.mean()[i]).abs() < bound, "component {i}");
    }
    let rel = (&cov - want.cov()).norm() / want.cov().norm();
    assert!(rel < 0.05, "{rel}");
}

#[test]
fn single_trajectory_campaign_equals_simulation() {
    let s = small(Preset::Front, 1);
    let sim = Simulator::new(&s, 99).unwrap();
    let rec = sim.simulate(0);
    let c = run_campaign(&s, 99).unwrap();
    assert_eq!(c.statistics.count(rec.n_entries_host as usize), 1);
    for id in SegmentId::ALL {
        let want = rec.first_segment_entry(id).map(|e| e.time);
        let got = c.histogram.first_segment_entry[id.index()].iter().position(|&n| n == 1);
        assert_eq!(got, want.map(|t| ((t / s.config.bin_width).floor() as usize).min(c.histogram.n_bins - 1)));
    }
}

#[test]
fn campaign_is_identical_across_thread_counts() {
    let s = small(Preset::FrontRight, 3000);
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (run_campaign(&s, 5).unwrap(), ttc_monte_carlo(&s, 5).unwrap()))
    };
    let (a, ta) = run(1);
    let (b, tb) = run(3);
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    assert_eq!(run_campaign(&s, 5).unwrap(), a);
    assert_ne!(run_campaign(&s, 6).unwrap(), a);
}

#[test]
fn first_entries_bounded_by_all_entries() {
    let c = run_campaign(&small(Preset::FrontRight, 20_000), 3).unwrap();
    let h = &c.histogram;
    for k in 0..4 {
        for i in 0..h.n_bins {
            assert!(h.first_segment_entry[k][i] <= h.all_entry[k][i]);
            assert!(h.first_entry[k][i] <= h.first_segment_entry[k][i]);
        }
    }
    let whole: u64 = (0..h.n_bins).map(|i| h.first_entry_total(i)).sum();
    let by_segment: u64 = h.first_segment_entry.iter().flatten().sum();
    assert!(by_segment >= whole);
    assert_eq!(whole, c.statistics.n_traj - c.statistics.count(0));
    let p = h.integrated_probability();
    assert!(p.windows(2).all(|w| w[1] >= w[0]));
    assert!((p.last().unwrap() - c.statistics.probability_any()).abs() < 1e-12);
}

fn pointlike(mean: StateVector) -> Scenario {
    Scenario::new(ScenarioConfig {
        initial_mean: mean,
        initial_cov: InitialCov::Explicit { matrix: vec![vec![0.0; 6]; 6] },
        model: MotionModel::constant_acceleration(0.0),
        n_traj: 1,
        ..Preset::Front.config()
    })
    .unwrap()
}

#[test]
fn off_segment_front_root_becomes_a_right_hit() {
    // the front-line root lands at y = 1.25, beyond the right edge
    let mean = StateVector::new(5.0, 2.5, -1.0, -0.25, 0.0, 0.0);
    let s = pointlike(mean);
    let ttc = ttc_of_state(&mean, s.rect());
    assert_eq!(ttc[SegmentId::Front.index()], None);
    let right = ttc[SegmentId::Right.index()].unwrap();
    assert!((right - 6.0).abs() < 1e-12);
    let rec = Simulator::new(&s, 0).unwrap().simulate(0);
    let first = rec.first_entry().unwrap();
    assert_eq!(first.segment, SegmentId::Right);
    assert!((first.time - right).abs() < 1e-9);
}

#[test]
fn deterministic_entry_time_matches_kinematics() {
    let mean = StateVector::new(10.0, 0.0, -2.0, 0.0, -0.2, 0.0);
    let rec = Simulator::new(&pointlike(mean), 0).unwrap().simulate(0);
    let t = rec.first_entry().unwrap().time;
    assert!((t - 10.0 * (2f64.sqrt() - 1.0)).abs() < 0.01);
    assert_eq!(rec.first_entry().unwrap().segment, SegmentId::Front);
}

#[test]
fn ttc_histogram_counts_each_segment_once() {
    let s = small(Preset::FrontRight, 5000);
    let h = ttc_monte_carlo(&s, 11).unwrap();
    let sim = Simulator::new(&s, 11).unwrap();
    let mut want = [0u64; 4];
    for id in 0..5000 {
        let x0 = sim.sample_initial(&mut trajectory_rng(11, id));
        for (k, t) in ttc_of_state(&x0, s.rect()).iter().enumerate() {
            want[k] += u64::from(t.is_some_and(|t| t <= s.config.horizon));
        }
    }
    for (counts, want) in h.per_segment.iter().zip(want) {
        assert_eq!(counts.iter().sum::<u64>(), want);
    }
}
