//! Axis-aligned ray traversal.
//!
//! A fractional integral along `x` at a target point runs over the horizontal
//! line through the target, from the lower bounding-box edge (left-sided) or
//! up to the upper edge (right-sided). The line is cut into per-element
//! segments by walking element to element through the neighbour table.
//!
//! When the line passes through a vertex or runs along an edge the fixed
//! coordinate is nudged by `1e-12 · extent` for the traversal only; callers
//! still evaluate fields on the unperturbed line. The nudge goes towards the
//! interior of the hint element so that a target on a horizontal edge picks
//! up the traces of the requested side.

use super::{Axis, Mesh, Point, Side, GEOM_TOL};
use crate::error::{Error, Result};

/// Portion of the ray inside one element, `start < end` along the axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySegment {
    pub element: usize,
    pub start: f64,
    pub end: f64,
}

impl RaySegment {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

enum LineHit {
    Miss,
    /// A vertex lies on the line.
    Touch,
    Cross {
        lo: f64,
        hi: f64,
        lo_face: usize,
        hi_face: usize,
    },
}

enum WalkFailure {
    Degenerate,
    Lost,
}

const VERTEX_TOL: f64 = 1e-13;
const NUDGE: f64 = 1e-12;
const START_TOL: f64 = 1e-8;

impl Mesh {
    fn line_hit(&self, e: usize, axis: Axis, t: f64, vtol: f64) -> LineHit {
        let p = self.element_points(e);
        let d = p.map(|q| q.across(axis) - t);
        if d.iter().all(|&v| v > vtol) || d.iter().all(|&v| v < -vtol) {
            return LineHit::Miss;
        }
        if d.iter().any(|v| v.abs() <= vtol) {
            return LineHit::Touch;
        }
        let mut hits = [(0.0, 0usize); 2];
        let mut n = 0;
        for f in 0..3 {
            let (da, db) = (d[f], d[(f + 1) % 3]);
            if (da < 0.0) != (db < 0.0) {
                let (sa, sb) = (p[f].along(axis), p[(f + 1) % 3].along(axis));
                if n < 2 {
                    hits[n] = (sa + da / (da - db) * (sb - sa), f);
                }
                n += 1;
            }
        }
        if n != 2 {
            return LineHit::Miss;
        }
        let (a, b) = if hits[0].0 <= hits[1].0 { (hits[0], hits[1]) } else { (hits[1], hits[0]) };
        LineHit::Cross { lo: a.0, hi: b.0, lo_face: a.1, hi_face: b.1 }
    }

    /// Interval of the line inside element `e`, tolerant of vertices on the line.
    fn clip_interval(&self, e: usize, axis: Axis, t: f64, vtol: f64) -> Option<(f64, f64)> {
        let p = self.element_points(e);
        let d = p.map(|q| q.across(axis) - t);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for f in 0..3 {
            if d[f].abs() <= vtol {
                lo = lo.min(p[f].along(axis));
                hi = hi.max(p[f].along(axis));
            }
            let (da, db) = (d[f], d[(f + 1) % 3]);
            if da.abs() > vtol && db.abs() > vtol && (da < 0.0) != (db < 0.0) {
                let (sa, sb) = (p[f].along(axis), p[(f + 1) % 3].along(axis));
                let s = sa + da / (da - db) * (sb - sa);
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (hi > lo).then_some((lo, hi))
    }

    /// Splits the integration path of a fractional integral at `target` into
    /// per-element segments ordered by increasing abscissa.
    ///
    /// `hint` names the element the target should be considered part of; it
    /// is required to pick a side when the target lies on an edge.
    pub fn trace_axis_ray(
        &self,
        target: Point,
        axis: Axis,
        side: Side,
        hint: Option<usize>,
    ) -> Result<Vec<RaySegment>> {
        let start = match hint {
            Some(h) if h < self.num_elements() => h,
            Some(h) => return Err(Error::InvalidArgument(format!("element {h} does not exist"))),
            None => self.locate(target).ok_or(Error::OutsideMesh(target.x, target.y))?,
        };
        let ext = self.bbox().extent();
        let t0 = target.across(axis);
        let dir = if self.centroid(start).across(axis) >= t0 { 1.0 } else { -1.0 };
        let eps = NUDGE * ext;
        for k in [0.0, 1.0, -1.0, 3.0, -3.0, 7.0, -7.0] {
            match self.walk(start, target, axis, side, t0 + dir * k * eps) {
                Ok(segs) => return Ok(segs),
                Err(WalkFailure::Degenerate) => continue,
                Err(WalkFailure::Lost) => break,
            }
        }
        Ok(self.brute_force_ray(target, axis, side, t0 + dir * eps))
    }

    fn walk(
        &self,
        start: usize,
        target: Point,
        axis: Axis,
        side: Side,
        t: f64,
    ) -> std::result::Result<Vec<RaySegment>, WalkFailure> {
        let ext = self.bbox().extent();
        let vtol = VERTEX_TOL * ext;
        let gtol = GEOM_TOL * ext;
        let s0 = target.along(axis);
        let (s_lo, s_hi) = (self.bbox().lower(axis), self.bbox().upper(axis));
        let mut segs = Vec::new();
        let mut e = start;
        let mut s_cur = s0;
        let max_steps = 4 * self.num_elements() + 16;
        for step in 0..max_steps {
            let (lo, hi, lo_face, hi_face) = match self.line_hit(e, axis, t, vtol) {
                LineHit::Touch => return Err(WalkFailure::Degenerate),
                LineHit::Miss if step == 0 => return Err(WalkFailure::Degenerate),
                LineHit::Miss => return Err(WalkFailure::Lost),
                LineHit::Cross { lo, hi, lo_face, hi_face } => (lo, hi, lo_face, hi_face),
            };
            if step == 0 && (lo > s0 + START_TOL * ext || hi < s0 - START_TOL * ext) {
                return Err(WalkFailure::Lost);
            }
            let (exit_face, done) = match side {
                Side::Left => {
                    if lo < s_cur {
                        segs.push(RaySegment { element: e, start: lo, end: s_cur });
                        s_cur = lo;
                    }
                    (lo_face, s_cur <= s_lo + gtol)
                }
                Side::Right => {
                    if hi > s_cur {
                        segs.push(RaySegment { element: e, start: s_cur, end: hi });
                        s_cur = hi;
                    }
                    (hi_face, s_cur >= s_hi - gtol)
                }
            };
            if done {
                break;
            }
            match self.neighbors(e)[exit_face] {
                Some(n) => e = n,
                None => match self.reentry(axis, side, t, s_cur) {
                    // The path leaves the mesh and continues through a
                    // zero-extended gap.
                    Some((n, s)) => {
                        e = n;
                        s_cur = s;
                    }
                    None => break,
                },
            }
            if step + 1 == max_steps {
                return Err(WalkFailure::Lost);
            }
        }
        match side {
            Side::Left => {
                segs.reverse();
                if let Some(first) = segs.first_mut() {
                    if first.start <= s_lo + gtol {
                        first.start = s_lo;
                    }
                }
            }
            Side::Right => {
                if let Some(last) = segs.last_mut() {
                    if last.end >= s_hi - gtol {
                        last.end = s_hi;
                    }
                }
            }
        }
        segs.retain(|s| s.end > s.start);
        Ok(segs)
    }

    /// Nearest element further along the path after the walk fell off the
    /// mesh at `s_cur`, with the abscissa where the path re-enters it.
    fn reentry(&self, axis: Axis, side: Side, t: f64, s_cur: f64) -> Option<(usize, f64)> {
        let ext = self.bbox().extent();
        let gtol = GEOM_TOL * ext;
        let vtol = VERTEX_TOL * ext;
        let mut best: Option<(usize, f64)> = None;
        for e in 0..self.num_elements() {
            let Some((lo, hi)) = self.clip_interval(e, axis, t, vtol) else { continue };
            match side {
                Side::Left if hi <= s_cur + gtol && lo < s_cur - gtol => {
                    if best.is_none_or(|(_, b)| hi > b) {
                        best = Some((e, hi.min(s_cur)));
                    }
                }
                Side::Right if lo >= s_cur - gtol && hi > s_cur + gtol => {
                    if best.is_none_or(|(_, b)| lo < b) {
                        best = Some((e, lo.max(s_cur)));
                    }
                }
                _ => {}
            }
        }
        best
    }

    /// O(K) fallback: intersect the line with every element.
    fn brute_force_ray(&self, target: Point, axis: Axis, side: Side, t: f64) -> Vec<RaySegment> {
        let ext = self.bbox().extent();
        let gtol = GEOM_TOL * ext;
        let s0 = target.along(axis);
        let mut spans: Vec<(usize, f64, f64)> = (0..self.num_elements())
            .filter_map(|e| self.clip_interval(e, axis, t, VERTEX_TOL * ext).map(|(lo, hi)| (e, lo, hi)))
            .collect();
        let mut segs = Vec::new();
        match side {
            Side::Left => {
                spans.retain(|&(_, lo, _)| lo < s0);
                spans.sort_by(|a, b| b.2.total_cmp(&a.2));
                let mut s_cur = s0;
                for (e, lo, hi) in spans {
                    if hi < s_cur - gtol {
                        s_cur = hi;
                    }
                    if lo < s_cur {
                        segs.push(RaySegment { element: e, start: lo, end: s_cur });
                        s_cur = lo;
                    }
                }
                segs.reverse();
                if let Some(first) = segs.first_mut() {
                    if first.start <= self.bbox().lower(axis) + gtol {
                        first.start = self.bbox().lower(axis);
                    }
                }
            }
            Side::Right => {
                spans.retain(|&(_, _, hi)| hi > s0);
                spans.sort_by(|a, b| a.1.total_cmp(&b.1));
                let mut s_cur = s0;
                for (e, lo, hi) in spans {
                    if lo > s_cur + gtol {
                        s_cur = lo;
                    }
                    if hi > s_cur {
                        segs.push(RaySegment { element: e, start: s_cur, end: hi });
                        s_cur = hi;
                    }
                }
                if let Some(last) = segs.last_mut() {
                    if last.end >= self.bbox().upper(axis) - gtol {
                        last.end = self.bbox().upper(axis);
                    }
                }
            }
        }
        segs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{jittered, l_shape, structured, BoundingBox};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sq() -> BoundingBox {
        BoundingBox::square(-1.0, 1.0).unwrap()
    }

    #[test]
    fn m2_example_breakpoints() {
        let m = structured(2, sq()).unwrap();
        let segs = m.trace_axis_ray(Point::new(0.5, -0.5), Axis::X, Side::Left, None).unwrap();
        let bps: Vec<f64> = std::iter::once(segs[0].start).chain(segs.iter().map(|s| s.end)).collect();
        assert_eq!(segs.len(), 3, "{segs:?}");
        for (a, b) in bps.iter().zip([-1.0, -0.5, 0.0, 0.5]) {
            assert!((a - b).abs() < 1e-14, "{bps:?}");
        }
    }

    #[test]
    fn left_boundary_element_gives_one_segment() {
        let m = structured(4, sq()).unwrap();
        // Upper triangle of the first cell, which owns the left edge.
        let segs = m.trace_axis_ray(Point::new(-0.9, -0.6), Axis::X, Side::Left, None).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].start, -1.0);
        assert_eq!(segs[0].end, -0.9);
    }

    #[test]
    fn right_side_ends_at_upper_edge() {
        let m = structured(4, sq()).unwrap();
        let segs = m.trace_axis_ray(Point::new(-0.3, 0.2), Axis::Y, Side::Right, None).unwrap();
        assert_eq!(segs.first().unwrap().start, 0.2);
        assert_eq!(segs.last().unwrap().end, 1.0);
    }

    #[test]
    fn horizontal_edge_target_uses_hint_side() {
        let m = structured(2, sq()).unwrap();
        // (−0.25, 0) lies on the horizontal edge between the row-0 upper
        // triangle and the row-1 lower triangle of the first column.
        let p = Point::new(-0.25, 0.0);
        let below = m.locate(Point::new(-0.4, -0.1)).unwrap();
        let above = m.locate(Point::new(-0.25, 0.1)).unwrap();
        let sb = m.trace_axis_ray(p, Axis::X, Side::Left, Some(below)).unwrap();
        let sa = m.trace_axis_ray(p, Axis::X, Side::Left, Some(above)).unwrap();
        assert_eq!(sb.iter().map(|s| s.element).collect::<Vec<_>>(), vec![below]);
        assert_eq!(sa.last().unwrap().element, above);
        assert!((sa.iter().map(|s| s.length()).sum::<f64>() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn l_shape_right_ray_stops_at_reentrant_edge() {
        let m = l_shape(4, 0.0, 0).unwrap();
        let segs = m.trace_axis_ray(Point::new(-0.7, 0.6), Axis::X, Side::Right, None).unwrap();
        assert!((segs.last().unwrap().end - 0.0).abs() < 1e-14);
        let segs = m.trace_axis_ray(Point::new(0.6, -0.7), Axis::Y, Side::Right, None).unwrap();
        assert!((segs.last().unwrap().end - 0.0).abs() < 1e-14);
    }

    #[test]
    fn outside_target_errors() {
        let m = l_shape(4, 0.0, 0).unwrap();
        assert!(matches!(
            m.trace_axis_ray(Point::new(0.5, 0.5), Axis::X, Side::Left, None),
            Err(Error::OutsideMesh(..))
        ));
    }

    #[test]
    fn random_targets_telescope_and_abut() {
        let meshes = [structured(5, sq()).unwrap(), jittered(7, sq(), 0.2, 11).unwrap()];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in &meshes {
            for _ in 0..500 {
                let p = Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                for axis in Axis::BOTH {
                    for side in [Side::Left, Side::Right] {
                        let segs = m.trace_axis_ray(p, axis, side, None).unwrap();
                        let total: f64 = segs.iter().map(|s| s.length()).sum();
                        let want = match side {
                            Side::Left => p.along(axis) + 1.0,
                            Side::Right => 1.0 - p.along(axis),
                        };
                        assert!((total - want).abs() <= 1e-12 * want.max(1e-300), "{total} vs {want}");
                        for w in segs.windows(2) {
                            assert_eq!(w[0].end, w[1].start);
                        }
                    }
                }
            }
        }
    }
}
