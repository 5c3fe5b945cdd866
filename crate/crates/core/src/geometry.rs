//! Host-vehicle rectangle, its four boundary segments and the crossings of
//! straight chords with that boundary.
//!
//! Every segment carries a rigid map into a canonical frame where the
//! segment lies on `x' = 0`, the outside is `x' > 0` and the tangent
//! coordinate `y'` spans the segment interval. In that frame an entering
//! target has `ẋ' < 0`, which is the configuration the front-boundary
//! intensity formulas are written for.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::GaussianDensity;

/// Boundary side. The discriminant order is the corner tie-break priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentId {
    Front = 0,
    Right = 1,
    Left = 2,
    Rear = 3,
}

impl SegmentId {
    pub const ALL: [SegmentId; 4] = [SegmentId::Front, SegmentId::Right, SegmentId::Left, SegmentId::Rear];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SegmentId::Front => "front",
            SegmentId::Right => "right",
            SegmentId::Left => "left",
            SegmentId::Rear => "rear",
        }
    }
}

impl std::fmt::Display for SegmentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned host footprint. The front line is `x = x_front`; the right
/// side is `y = y_right` (positive `y` points to the host's right).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostRectangle {
    pub x_front: f64,
    pub x_rear: f64,
    pub y_left: f64,
    pub y_right: f64,
}

impl Default for HostRectangle {
    /// 2 m wide, 5 m long, origin at the middle of the front boundary.
    fn default() -> Self {
        HostRectangle { x_front: 0.0, x_rear: -5.0, y_left: -1.0, y_right: 1.0 }
    }
}

impl HostRectangle {
    pub fn new(x_front: f64, x_rear: f64, y_left: f64, y_right: f64) -> Result<Self> {
        let r = HostRectangle { x_front, x_rear, y_left, y_right };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.x_front, self.x_rear, self.y_left, self.y_right].iter().all(|v| v.is_finite());
        if !all_finite || !(self.x_rear < self.x_front) || !(self.y_left < self.y_right) {
            return Err(Error::Argument(format!(
                "degenerate host rectangle: x in [{}, {}], y in [{}, {}]",
                self.x_rear, self.x_front, self.y_left, self.y_right
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_front - self.x_rear
    }

    pub fn width(&self) -> f64 {
        self.y_right - self.y_left
    }

    /// Closed-set membership.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_rear && p[0] <= self.x_front && p[1] >= self.y_left && p[1] <= self.y_right
    }

    pub fn segment(&self, id: SegmentId) -> BoundarySegment {
        let (a, b, normal) = match id {
            SegmentId::Front => ([self.x_front, self.y_left], [self.x_front, self.y_right], [-1.0, 0.0]),
            SegmentId::Right => ([self.x_rear, self.y_right], [self.x_front, self.y_right], [0.0, -1.0]),
            SegmentId::Left => ([self.x_rear, self.y_left], [self.x_front, self.y_left], [0.0, 1.0]),
            SegmentId::Rear => ([self.x_rear, self.y_left], [self.x_rear, self.y_right], [1.0, 0.0]),
        };
        BoundarySegment::new(id, a, b, normal)
    }

    /// The four sides in priority order.
    pub fn segments(&self) -> Result<[BoundarySegment; 4]> {
        self.validate()?;
        Ok(SegmentId::ALL.map(|id| self.segment(id)))
    }
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// One straight side of the host rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub id: SegmentId,
    pub start: [f64; 2],
    pub end: [f64; 2],
    /// Unit normal pointing into the rectangle.
    pub inward_normal: [f64; 2],
    /// Unit tangent completing `(−n, t)` to a right-handed frame.
    pub tangent: [f64; 2],
    /// Segment extent in the tangent coordinate, `lo < hi`.
    pub interval: (f64, f64),
    // outward distance of the supporting line from the origin
    line_offset: f64,
}

impl BoundarySegment {
    fn new(id: SegmentId, start: [f64; 2], end: [f64; 2], inward_normal: [f64; 2]) -> Self {
        let out = [-inward_normal[0], -inward_normal[1]];
        let tangent = [-out[1], out[0]];
        let (u, v) = (dot(tangent, start), dot(tangent, end));
        BoundarySegment {
            id,
            start,
            end,
            inward_normal,
            tangent,
            interval: (u.min(v), u.max(v)),
            line_offset: dot(out, start),
        }
    }

    pub fn length(&self) -> f64 {
        self.interval.1 - self.interval.0
    }

    /// Signed distance outside the supporting line (positive outside).
    pub fn outward_distance(&self, p: [f64; 2]) -> f64 {
        -dot(self.inward_normal, p) - self.line_offset
    }

    /// Position in the canonical segment frame.
    pub fn to_frame(&self, p: [f64; 2]) -> [f64; 2] {
        [self.outward_distance(p), dot(self.tangent, p)]
    }

    /// Inverse of [`to_frame`](Self::to_frame).
    pub fn from_frame(&self, q: [f64; 2]) -> [f64; 2] {
        let out = [-self.inward_normal[0], -self.inward_normal[1]];
        let d = q[0] + self.line_offset;
        [out[0] * d + self.tangent[0] * q[1], out[1] * d + self.tangent[1] * q[1]]
    }

    fn rotation(&self) -> DMatrix<f64> {
        let n = self.inward_normal;
        let t = self.tangent;
        DMatrix::from_row_slice(2, 2, &[-n[0], -n[1], t[0], t[1]])
    }

    fn frame_map(&self) -> (DMatrix<f64>, DVector<f64>) {
        let r = self.rotation();
        let mut a = DMatrix::zeros(4, 4);
        a.view_mut((0, 0), (2, 2)).copy_from(&r);
        a.view_mut((2, 2), (2, 2)).copy_from(&r);
        let b = DVector::from_column_slice(&[-self.line_offset, 0.0, 0.0, 0.0]);
        (a, b)
    }

    /// Maps a density over `(x, y, ẋ, ẏ)` into the segment frame.
    pub fn to_segment_frame(&self, g: &GaussianDensity) -> Result<GaussianDensity> {
        if g.dim() != 4 {
            return Err(Error::Argument(format!("expected density over (x, y, ẋ, ẏ), got dim {}", g.dim())));
        }
        let (a, b) = self.frame_map();
        g.affine(&a, &b)
    }

    /// Inverse of [`to_segment_frame`](Self::to_segment_frame).
    pub fn from_segment_frame(&self, g: &GaussianDensity) -> Result<GaussianDensity> {
        if g.dim() != 4 {
            return Err(Error::Argument(format!("expected 4-dim density, got dim {}", g.dim())));
        }
        let (a, b) = self.frame_map();
        let a_inv = a.transpose();
        let shift = -(&a_inv * b);
        g.affine(&a_inv, &shift)
    }
}

/// Maps a density over `(x, y, ẋ, ẏ)` into the frame of `seg`.
pub fn to_segment_frame(g: &GaussianDensity, seg: &BoundarySegment) -> Result<GaussianDensity> {
    seg.to_segment_frame(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingKind {
    Entry,
    Exit,
}

/// A boundary crossing located by its fraction along a chord.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChordCrossing {
    pub fraction: f64,
    pub segment: SegmentId,
    pub point: [f64; 2],
    pub kind: CrossingKind,
}

/// A time-stamped boundary crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingEvent {
    pub time: f64,
    pub segment: SegmentId,
    pub point: [f64; 2],
    pub kind: CrossingKind,
}

const TIE_EPS: f64 = 1e-12;

/// Crossings of the chord `p0 → p1` with the rectangle boundary, ordered by
/// fraction. The rectangle is convex, so a chord yields at most one entry
/// followed by at most one exit. A chord touching the boundary from outside
/// reports an entry and an exit at the same fraction. Corner hits resolve
/// to the lowest-numbered side.
pub fn detect_crossings(p0: [f64; 2], p1: [f64; 2], rect: &HostRectangle) -> Vec<ChordCrossing> {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    if d == [0.0, 0.0] {
        return Vec::new();
    }
    let mut s_in = 0.0;
    let mut s_out = 1.0;
    let mut seg_in: Option<SegmentId> = None;
    let mut seg_out: Option<SegmentId> = None;
    let mut best_in = f64::NEG_INFINITY;
    let mut best_out = f64::INFINITY;

    for id in SegmentId::ALL {
        let seg = rect.segment(id);
        let g0 = -seg.outward_distance(p0);
        let rate = dot(seg.inward_normal, d);
        if rate == 0.0 {
            if g0 < 0.0 {
                return Vec::new();
            }
            continue;
        }
        let s = -g0 / rate;
        if rate > 0.0 {
            if s > best_in + TIE_EPS {
                best_in = s;
                seg_in = Some(id);
            }
        } else if s < best_out - TIE_EPS {
            best_out = s;
            seg_out = Some(id);
        }
    }
    if best_in > s_in {
        s_in = best_in;
    }
    if best_out < s_out {
        s_out = best_out;
    }
    if s_in > s_out {
        return Vec::new();
    }

    let mut events = Vec::with_capacity(2);
    let start_inside = rect.contains(p0);
    let end_inside = rect.contains(p1);
    if !start_inside {
        if let Some(id) = seg_in {
            events.push(crossing_at(p0, d, s_in, rect.segment(id), CrossingKind::Entry));
        }
    }
    if !end_inside {
        if let Some(id) = seg_out {
            events.push(crossing_at(p0, d, s_out, rect.segment(id), CrossingKind::Exit));
        }
    }
    events
}

fn crossing_at(p0: [f64; 2], d: [f64; 2], s: f64, seg: BoundarySegment, kind: CrossingKind) -> ChordCrossing {
    let p = [p0[0] + s * d[0], p0[1] + s * d[1]];
    let q = seg.to_frame(p);
    let y = q[1].clamp(seg.interval.0, seg.interval.1);
    let point = seg.from_frame([0.0, y]);
    ChordCrossing { fraction: s, segment: seg.id, point, kind }
}
