//! Monte-Carlo reference: sampled initial conditions propagated through the
//! stochastic dynamics, boundary crossings captured on every step chord.
//!
//! Every trajectory draws from its own ChaCha stream (campaign seed, stream
//! = trajectory id), and histograms are integer counts merged by addition,
//! so results do not depend on scheduling or thread count.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{input_increment, StateVector, IAX, IVX, IX};
use crate::error::{Error, Result};
use crate::geometry::{detect_crossings, CrossingEvent, CrossingKind, HostRectangle, SegmentId};
use crate::probability::positive_roots;
use crate::scenario::Scenario;

/// Time offset used to check that a constant-acceleration root enters from
/// outside, s.
pub const TTC_EPSILON: f64 = 1e-6;

/// Random stream for one trajectory of a campaign.
pub fn trajectory_rng(seed: u64, traj_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(traj_id);
    rng
}

/// Lower factor `L` with `L Lᵀ = cov`; falls back to an eigen factor for
/// semidefinite matrices.
fn factor6(cov: &Matrix6<f64>) -> Result<Matrix6<f64>> {
    if let Some(ch) = cov.cholesky() {
        return Ok(ch.l());
    }
    let eig = SymmetricEigen::new(*cov);
    let floor = -1e-10 * cov.trace().abs().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&l| l < floor) {
        return Err(Error::Numerical("initial covariance is not positive semidefinite".into()));
    }
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * Matrix6::from_diagonal(&sqrt))
}

/// Unit-PSD noise factor of one axis `(p, v, a)` over `dt`.
fn axis_noise_factor(dt: f64) -> Matrix3<f64> {
    let (d2, d3, d4, d5) = (dt * dt, dt.powi(3), dt.powi(4), dt.powi(5));
    let q = Matrix3::new(
        d5 / 20.0,
        d4 / 8.0,
        d3 / 6.0, //
        d4 / 8.0,
        d3 / 3.0,
        d2 / 2.0, //
        d3 / 6.0,
        d2 / 2.0,
        dt,
    );
    q.cholesky().expect("white-noise-jerk covariance is positive definite for dt > 0").l()
}

/// Entry and exit events of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub traj_id: u64,
    pub events: Vec<CrossingEvent>,
    /// Number of entries into the whole rectangle.
    pub n_entries_host: u32,
    /// Entries through each segment, indexed by [`SegmentId::index`].
    pub per_segment_entries: [u32; 4],
}

impl CollisionRecord {
    fn new(traj_id: u64) -> Self {
        CollisionRecord { traj_id, events: Vec::new(), n_entries_host: 0, per_segment_entries: [0; 4] }
    }

    fn push(&mut self, e: CrossingEvent) {
        if e.kind == CrossingKind::Entry {
            self.n_entries_host += 1;
            self.per_segment_entries[e.segment.index()] += 1;
        }
        self.events.push(e);
    }

    /// First entry into the whole rectangle.
    pub fn first_entry(&self) -> Option<&CrossingEvent> {
        self.events.iter().find(|e| e.kind == CrossingKind::Entry)
    }

    /// First entry through segment `id`.
    pub fn first_segment_entry(&self, id: SegmentId) -> Option<&CrossingEvent> {
        self.events.iter().find(|e| e.kind == CrossingKind::Entry && e.segment == id)
    }

    fn entries(&self) -> impl Iterator<Item = &CrossingEvent> {
        self.events.iter().filter(|e| e.kind == CrossingKind::Entry)
    }
}

/// Builds the crossing record of a polyline of positions sampled at `times`.
pub fn record_from_path(
    traj_id: u64,
    points: &[[f64; 2]],
    times: &[f64],
    rect: &HostRectangle,
) -> Result<CollisionRecord> {
    if points.len() != times.len() {
        return Err(Error::Argument(format!("{} points but {} times", points.len(), times.len())));
    }
    let mut rec = CollisionRecord::new(traj_id);
    for k in 1..points.len() {
        record_chord(&mut rec, points[k - 1], points[k], times[k - 1], times[k] - times[k - 1], rect);
    }
    Ok(rec)
}

fn record_chord(rec: &mut CollisionRecord, p0: [f64; 2], p1: [f64; 2], t0: f64, dt: f64, rect: &HostRectangle) {
    let clear = (p0[0] > rect.x_front && p1[0] > rect.x_front)
        || (p0[0] < rect.x_rear && p1[0] < rect.x_rear)
        || (p0[1] < rect.y_left && p1[1] < rect.y_left)
        || (p0[1] > rect.y_right && p1[1] > rect.y_right);
    if clear {
        return;
    }
    for c in detect_crossings(p0, p1, rect) {
        rec.push(CrossingEvent { time: t0 + c.fraction * dt, segment: c.segment, point: c.point, kind: c.kind });
    }
}

/// Precomputed propagation for one scenario.
#[derive(Debug, Clone)]
pub struct Simulator {
    mean: Vector6<f64>,
    init_factor: Matrix6<f64>,
    dt: f64,
    n_steps: usize,
    horizon: f64,
    /// Per-axis noise factors already scaled by the axis PSD.
    noise: [Option<Matrix3<f64>>; 2],
    /// Deterministic input increment of each step.
    drift: Vec<Vector6<f64>>,
    rect: HostRectangle,
    seed: u64,
    terminate_on_entry: bool,
}

impl Simulator {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        let c = &scenario.config;
        let dt = c.sim_step;
        let n_steps = (c.horizon / dt - 1e-9).ceil().max(1.0) as usize;
        let unit = axis_noise_factor(dt);
        let noise = [c.model.qx, c.model.qy].map(|q| (q > 0.0).then(|| unit * q.sqrt()));
        let drift = (0..n_steps).map(|k| input_increment(&c.model, k as f64 * dt, dt)).collect();
        Ok(Simulator {
            mean: Vector6::from(c.initial_mean.to_array()),
            init_factor: factor6(&scenario.initial_covariance())?,
            dt,
            n_steps,
            horizon: c.horizon,
            noise,
            drift,
            rect: c.rect,
            seed,
            terminate_on_entry: c.terminate_on_entry,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVector {
        let z = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        StateVector::from_vector(&(self.mean + self.init_factor * z))
    }

    /// Trajectory `traj_id` of the campaign: initial draw and noise both come
    /// from the trajectory's own stream.
    pub fn simulate(&self, traj_id: u64) -> CollisionRecord {
        let mut rng = trajectory_rng(self.seed, traj_id);
        let x0 = self.sample_initial(&mut rng);
        self.simulate_from(traj_id, &x0, &mut rng)
    }

    /// Propagates `x0` to the horizon and records every crossing.
    pub fn simulate_from<R: Rng + ?Sized>(&self, traj_id: u64, x0: &StateVector, rng: &mut R) -> CollisionRecord {
        let mut rec = CollisionRecord::new(traj_id);
        let dt = self.dt;
        let half = 0.5 * dt * dt;
        let mut s = x0.to_array();
        for k in 0..self.n_steps {
            let t0 = k as f64 * dt;
            let p0 = [s[IX], s[IX + 1]];
            let d = &self.drift[k];
            for axis in 0..2 {
                let (p, v, a) = (IX + axis, IVX + axis, IAX + axis);
                let mut next =
                    Vector3::new(s[p] + dt * s[v] + half * s[a] + d[p], s[v] + dt * s[a] + d[v], s[a] + d[a]);
                if let Some(l) = &self.noise[axis] {
                    let z = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                    next += l * z;
                }
                s[p] = next[0];
                s[v] = next[1];
                s[a] = next[2];
            }
            let before = rec.events.len();
            record_chord(&mut rec, p0, [s[IX], s[IX + 1]], t0, dt, &self.rect);
            if rec.events.len() > before {
                // a final partial step may overshoot the horizon
                if rec.events.last().is_some_and(|e| e.time > self.horizon) {
                    rec.events.retain(|e| e.time <= self.horizon);
                    rec.n_entries_host = rec.entries().count() as u32;
                    rec.per_segment_entries =
                        SegmentId::ALL.map(|id| rec.entries().filter(|e| e.segment == id).count() as u32);
                    break;
                }
                if self.terminate_on_entry && rec.n_entries_host > 0 {
                    break;
                }
            }
        }
        rec
    }
}

/// Binned entry times of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateHistogram {
    pub n_traj: u64,
    pub bin_width: f64,
    pub n_bins: usize,
    /// First entry into the whole rectangle, split by the segment crossed.
    pub first_entry: [Vec<u64>; 4],
    /// First entry through each individual segment.
    pub first_segment_entry: [Vec<u64>; 4],
    /// Every entry through each segment.
    pub all_entry: [Vec<u64>; 4],
}

impl RateHistogram {
    pub fn new(n_traj: u64, bin_width: f64, horizon: f64) -> Self {
        let n_bins = (horizon / bin_width - 1e-9).ceil().max(1.0) as usize;
        let zeros = || std::array::from_fn(|_| vec![0u64; n_bins]);
        RateHistogram {
            n_traj,
            bin_width,
            n_bins,
            first_entry: zeros(),
            first_segment_entry: zeros(),
            all_entry: zeros(),
        }
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_width
    }

    pub fn bin_mid(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn bin_edges(&self) -> Vec<f64> {
        (0..=self.n_bins).map(|i| self.bin_start(i)).collect()
    }

    fn bin_of(&self, t: f64) -> Option<usize> {
        if !(t >= 0.0) {
            return None;
        }
        let i = (t / self.bin_width).floor() as usize;
        Some(i.min(self.n_bins - 1))
    }

    /// Count in bin `i` converted to a rate, 1/s.
    pub fn rate(&self, count: u64) -> f64 {
        count as f64 / (self.n_traj as f64 * self.bin_width)
    }

    pub fn first_entry_total(&self, i: usize) -> u64 {
        self.first_entry.iter().map(|c| c[i]).sum()
    }

    pub fn first_entry_rate_total(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.rate(self.first_entry_total(i))).collect()
    }

    /// Fraction of trajectories that entered at least once by the end of
    /// each bin.
    pub fn integrated_probability(&self) -> Vec<f64> {
        let mut acc = 0u64;
        (0..self.n_bins)
            .map(|i| {
                acc += self.first_entry_total(i);
                acc as f64 / self.n_traj as f64
            })
            .collect()
    }

    fn add(&mut self, rec: &CollisionRecord) {
        if let Some(e) = rec.first_entry() {
            if let Some(i) = self.bin_of(e.time) {
                self.first_entry[e.segment.index()][i] += 1;
            }
        }
        for id in SegmentId::ALL {
            if let Some(e) = rec.first_segment_entry(id) {
                if let Some(i) = self.bin_of(e.time) {
                    self.first_segment_entry[id.index()][i] += 1;
                }
            }
        }
        for e in rec.entries() {
            if let Some(i) = self.bin_of(e.time) {
                self.all_entry[e.segment.index()][i] += 1;
            }
        }
    }

    fn merge(&mut self, other: &RateHistogram) {
        let pairs = [
            (&mut self.first_entry, &other.first_entry),
            (&mut self.first_segment_entry, &other.first_segment_entry),
            (&mut self.all_entry, &other.all_entry),
        ];
        for (mine, theirs) in pairs {
            for (m, t) in mine.iter_mut().zip(theirs) {
                for (a, b) in m.iter_mut().zip(t) {
                    *a += b;
                }
            }
        }
    }
}

/// Entry multiplicity and per-boundary totals of a campaign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryStatistics {
    pub n_traj: u64,
    /// `multiplicity[k]` trajectories entered the rectangle exactly `k` times.
    pub multiplicity: Vec<u64>,
    /// Trajectories whose first entry went through each segment.
    pub first_entry_by_segment: [u64; 4],
}

impl EntryStatistics {
    fn new(n_traj: u64) -> Self {
        EntryStatistics { n_traj, multiplicity: vec![0], first_entry_by_segment: [0; 4] }
    }

    fn add(&mut self, rec: &CollisionRecord) {
        let k = rec.n_entries_host as usize;
        if self.multiplicity.len() <= k {
            self.multiplicity.resize(k + 1, 0);
        }
        self.multiplicity[k] += 1;
        if let Some(e) = rec.first_entry() {
            self.first_entry_by_segment[e.segment.index()] += 1;
        }
    }

    fn merge(&mut self, other: &EntryStatistics) {
        if self.multiplicity.len() < other.multiplicity.len() {
            self.multiplicity.resize(other.multiplicity.len(), 0);
        }
        for (a, b) in self.multiplicity.iter_mut().zip(&other.multiplicity) {
            *a += b;
        }
        for (a, b) in self.first_entry_by_segment.iter_mut().zip(other.first_entry_by_segment) {
            *a += b;
        }
    }

    /// `H(N⁺ = k)`.
    pub fn count(&self, k: usize) -> u64 {
        self.multiplicity.get(k).copied().unwrap_or(0)
    }

    /// `P(N⁺ = k)`.
    pub fn probability(&self, k: usize) -> f64 {
        self.count(k) as f64 / self.n_traj as f64
    }

    /// `P(N⁺ ≥ 1)`.
    pub fn probability_any(&self) -> f64 {
        (self.n_traj - self.count(0)) as f64 / self.n_traj as f64
    }

    /// Mean number of entries per trajectory.
    pub fn expected_entries(&self) -> f64 {
        let total: u64 = self.multiplicity.iter().enumerate().map(|(k, h)| k as u64 * h).sum();
        total as f64 / self.n_traj as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub seed: u64,
    pub histogram: RateHistogram,
    pub statistics: EntryStatistics,
}

/// Simulates `n_traj` trajectories on the current rayon pool.
pub fn run_campaign(scenario: &Scenario, seed: u64) -> Result<CampaignResult> {
    let sim = Simulator::new(scenario, seed)?;
    let c = &scenario.config;
    let n = c.n_traj;
    let empty = || (RateHistogram::new(n, c.bin_width, c.horizon), EntryStatistics::new(n));
    let (histogram, statistics) = (0..n)
        .into_par_iter()
        .fold(empty, |(mut h, mut s), id| {
            let rec = sim.simulate(id);
            h.add(&rec);
            s.add(&rec);
            (h, s)
        })
        .reduce(empty, |(mut h1, mut s1), (h2, s2)| {
            h1.merge(&h2);
            s1.merge(&s2);
            (h1, s1)
        });
    Ok(CampaignResult { seed, histogram, statistics })
}

/// Earliest valid constant-acceleration crossing time of each segment
/// (`None` when there is none). A root is valid when it is positive, the
/// crossing point lies on the segment and the target is outside just
/// before it.
pub fn ttc_of_state(s: &StateVector, rect: &HostRectangle) -> [Option<f64>; 4] {
    let pos = |t: f64| [s.x + s.xdot * t + 0.5 * s.xddot * t * t, s.y + s.ydot * t + 0.5 * s.yddot * t * t];
    SegmentId::ALL.map(|id| {
        let seg = rect.segment(id);
        let n = seg.inward_normal;
        // outward distance d(t) = c0 + c1 t + c2 t²
        let c0 = seg.outward_distance([s.x, s.y]);
        let c1 = -(n[0] * s.xdot + n[1] * s.ydot);
        let c2 = -0.5 * (n[0] * s.xddot + n[1] * s.yddot);
        positive_roots(c0, c1, c2).into_iter().find(|&t| {
            let y = seg.to_frame(pos(t))[1];
            let on_segment = y >= seg.interval.0 && y <= seg.interval.1;
            on_segment && seg.outward_distance(pos(t - TTC_EPSILON)) > 0.0
        })
    })
}

/// Histograms of initial-condition TTCs (input off, no process noise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtcHistogram {
    pub n_draws: u64,
    pub bin_width: f64,
    pub n_bins: usize,
    /// Earliest valid TTC per segment.
    pub per_segment: [Vec<u64>; 4],
}

impl TtcHistogram {
    fn new(n_draws: u64, bin_width: f64, horizon: f64) -> Self {
        let n_bins = (horizon / bin_width - 1e-9).ceil().max(1.0) as usize;
        TtcHistogram { n_draws, bin_width, n_bins, per_segment: std::array::from_fn(|_| vec![0; n_bins]) }
    }

    pub fn bin_mid(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn rate(&self, count: u64) -> f64 {
        count as f64 / (self.n_draws as f64 * self.bin_width)
    }

    pub fn total(&self, i: usize) -> u64 {
        self.per_segment.iter().map(|c| c[i]).sum()
    }

    pub fn total_rate(&self) -> Vec<f64> {
        (0..self.n_bins).map(|i| self.rate(self.total(i))).collect()
    }

    fn add(&mut self, ttc: &[Option<f64>; 4], horizon: f64) {
        for (k, t) in ttc.iter().enumerate() {
            if let Some(t) = *t {
                if t <= horizon {
                    let i = ((t / self.bin_width).floor() as usize).min(self.n_bins - 1);
                    self.per_segment[k][i] += 1;
                }
            }
        }
    }

    fn merge(&mut self, other: &TtcHistogram) {
        for (m, t) in self.per_segment.iter_mut().zip(&other.per_segment) {
            for (a, b) in m.iter_mut().zip(t) {
                *a += b;
            }
        }
    }
}

/// Draws `n_traj` initial conditions and bins their constant-acceleration
/// crossing times.
pub fn ttc_monte_carlo(scenario: &Scenario, seed: u64) -> Result<TtcHistogram> {
    let sim = Simulator::new(scenario, seed)?;
    let c = &scenario.config;
    let empty = || TtcHistogram::new(c.n_traj, c.bin_width, c.horizon);
    Ok((0..c.n_traj)
        .into_par_iter()
        .fold(empty, |mut h, id| {
            let x0 = sim.sample_initial(&mut trajectory_rng(seed, id));
            h.add(&ttc_of_state(&x0, &c.rect), c.horizon);
            h
        })
        .reduce(empty, |mut a, b| {
            a.merge(&b);
            a
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::MotionModel;
    use crate::scenario::{InitialCov, Preset, ScenarioConfig};

    fn deterministic(mean: StateVector) -> Scenario {
        let config = ScenarioConfig {
            initial_mean: mean,
            initial_cov: InitialCov::Explicit { matrix: vec![vec![0.0; 6]; 6] },
            model: MotionModel::constant_acceleration(0.0),
            n_traj: 3,
            ..Preset::Front.config()
        };
        Scenario::new(config).unwrap()
    }

    #[test]
    fn zero_covariance_samples_the_mean() {
        let mean = StateVector::new(10.0, 0.0, -2.0, 0.0, 0.0, 0.0);
        let sim = Simulator::new(&deterministic(mean), 1).unwrap();
        assert_eq!(sim.sample_initial(&mut trajectory_rng(1, 5)), mean);
    }

    #[test]
    fn straight_inbound_line_enters_once() {
        let sim = Simulator::new(&deterministic(StateVector::new(10.0, 0.0, -2.0, 0.0, 0.0, 0.0)), 1).unwrap();
        let rec = sim.simulate(0);
        assert_eq!(rec.n_entries_host, 1);
        let e = rec.first_entry().unwrap();
        assert_eq!(e.segment, SegmentId::Front);
        assert!((e.time - 5.0).abs() < 0.01);
    }

    #[test]
    fn distant_target_has_no_events() {
        let sim = Simulator::new(&deterministic(StateVector::new(50.0, 30.0, 1.0, 0.0, 0.0, 0.0)), 1).unwrap();
        assert!(sim.simulate(0).events.is_empty());
    }

    #[test]
    fn enter_exit_reenter_path() {
        let rect = HostRectangle::default();
        let pts = [[1.0, 0.0], [-0.5, 0.5], [-1.0, 2.0], [-2.0, 0.5]];
        let rec = record_from_path(0, &pts, &[0.0, 1.0, 2.0, 3.0], &rect).unwrap();
        assert_eq!(rec.n_entries_host, 2);
        assert_eq!(rec.first_entry().unwrap().segment, SegmentId::Front);
        assert_eq!(rec.per_segment_entries[SegmentId::Right.index()], 1);
        let kinds: Vec<_> = rec.events.iter().map(|e| e.kind).collect();
        assert_eq!(kinds, [CrossingKind::Entry, CrossingKind::Exit, CrossingKind::Entry]);
    }

    #[test]
    fn ttc_of_centered_head_on_draw() {
        let ttc = ttc_of_state(&StateVector::new(10.0, 0.0, -2.0, 0.0, 0.0, 0.0), &HostRectangle::default());
        assert_eq!(ttc, [Some(5.0), None, None, None]);
    }

    #[test]
    fn ttc_rejects_root_off_the_segment() {
        // front line reached at y = 1.25, right side crossed at x = -2
        let s = StateVector::new(10.0, 2.5, -2.0, -0.25, 0.0, 0.0);
        let ttc = ttc_of_state(&s, &HostRectangle::default());
        assert_eq!(ttc[SegmentId::Front.index()], None);
        let tr = ttc[SegmentId::Right.index()].unwrap();
        assert!((tr - 6.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_rates_match_counts() {
        let mut h = RateHistogram::new(10, 0.5, 2.0);
        assert_eq!(h.n_bins, 4);
        h.first_entry[0][1] = 5;
        assert_eq!(h.rate(5), 1.0);
        assert_eq!(h.first_entry_rate_total()[1], 1.0);
        assert_eq!(h.integrated_probability(), vec![0.0, 0.5, 0.5, 0.5]);
    }
}
