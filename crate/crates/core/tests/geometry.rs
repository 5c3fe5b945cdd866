mod common;

use common::rng;
use crossrate::geometry::*;
use crossrate::monte_carlo::record_from_path;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn crossing_parity_matches_point_membership() {
    let rect = HostRectangle::default();
    let mut r = rng(41);
    for _ in 0..10_000 {
        let n = r.random_range(2..12);
        let pts: Vec<[f64; 2]> = (0..n).map(|_| [r.random_range(-8.0..3.0), r.random_range(-4.0..4.0)]).collect();
        let times: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let rec = record_from_path(0, &pts, &times, &rect).unwrap();
        let entries = rec.events.iter().filter(|e| e.kind == CrossingKind::Entry).count() as i64;
        let exits = rec.events.len() as i64 - entries;
        let inside = |p: [f64; 2]| i64::from(rect.contains(p));
        assert_eq!(inside(pts[0]) + entries - exits, inside(pts[n - 1]), "{pts:?}");
        // entries and exits alternate
        let mut state = inside(pts[0]);
        for e in &rec.events {
            state += if e.kind == CrossingKind::Entry { 1 } else { -1 };
            assert!(state == 0 || state == 1);
        }
    }
}

#[test]
fn crossings_match_fine_chord_sampling() {
    let rect = HostRectangle::default();
    let mut r = rng(42);
    for _ in 0..2000 {
        let p0 = [r.random_range(-8.0..3.0), r.random_range(-4.0..4.0)];
        let p1 = [r.random_range(-8.0..3.0), r.random_range(-4.0..4.0)];
        let at = |s: f64| [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])];
        let n = 20_000;
        let mut brute = Vec::new();
        for k in 0..n {
            let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
            if rect.contains(at(a)) != rect.contains(at(b)) {
                brute.push((a, rect.contains(at(b))));
            }
        }
        let found = detect_crossings(p0, p1, &rect);
        let proper: Vec<&ChordCrossing> = found.iter().filter(|c| c.fraction > 0.0 && c.fraction < 1.0).collect();
        assert_eq!(proper.len(), brute.len(), "{p0:?} {p1:?} {found:?}");
        for (c, (a, entering)) in proper.iter().zip(&brute) {
            assert!(c.fraction >= a - 1e-9 && c.fraction <= a + 1.0 / n as f64 + 1e-9);
            assert_eq!(c.kind == CrossingKind::Entry, *entering);
            let on = rect.segment(c.segment);
            assert!(on.outward_distance(c.point).abs() < 1e-9);
        }
    }
}

#[test]
fn right_side_frame_convention() {
    let rect = HostRectangle::default();
    let right = rect.segment(SegmentId::Right);
    assert_eq!(right.inward_normal, [0.0, -1.0]);
    // a point two metres to the right of the host is outside by one metre
    assert!((right.outward_distance([-2.0, 2.0]) - 1.0).abs() < 1e-15);
    assert!((right.to_frame([-2.0, 2.0])[0] - 1.0).abs() < 1e-15);
    let y = right.to_frame([-2.0, 1.0])[1];
    assert!(y > right.interval.0 && y < right.interval.1);
    for seg in rect.segments().unwrap() {
        assert!((seg.interval.1 - seg.interval.0 - seg.length()).abs() < 1e-12);
        let mid = [(seg.start[0] + seg.end[0]) / 2.0, (seg.start[1] + seg.end[1]) / 2.0];
        let q = seg.to_frame(mid);
        assert!(q[0].abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn frame_maps_invert(x in -20.0..20.0f64, y in -20.0..20.0f64, side in 0usize..4) {
        let rect = HostRectangle::new(0.5, -4.0, -1.2, 0.9).unwrap();
        let seg = rect.segment(SegmentId::ALL[side]);
        let q = seg.to_frame([x, y]);
        let p = seg.from_frame(q);
        prop_assert!((p[0] - x).abs() < 1e-12 && (p[1] - y).abs() < 1e-12);
        prop_assert!((q[0] - seg.outward_distance([x, y])).abs() < 1e-12);
    }

    #[test]
    fn chord_reversal_swaps_kinds(a in -8.0..3.0f64, b in -4.0..4.0f64, c in -8.0..3.0f64, d in -4.0..4.0f64) {
        let rect = HostRectangle::default();
        let fwd = detect_crossings([a, b], [c, d], &rect);
        let back = detect_crossings([c, d], [a, b], &rect);
        prop_assert_eq!(fwd.len(), back.len());
        if fwd.len() == 2 && fwd[0].fraction < fwd[1].fraction {
            prop_assert!((fwd[0].fraction - (1.0 - back[1].fraction)).abs() < 1e-9);
            prop_assert_eq!(fwd[0].kind, CrossingKind::Entry);
            prop_assert_eq!(back[0].kind, CrossingKind::Entry);
        }
    }
}
