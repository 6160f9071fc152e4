//! Points, unit disks, unit-circle arcs and pseudo-trapezoids.
//!
//! Every structure in this crate works in units where the query radius is
//! exactly 1. Pair structures additionally work in a *local frame*
//! ([`CellPairFrame`]) in which the point-side cell is the square
//! `[0, s] x [0, s]` (with `s = 1/sqrt(2)`) and the query-side cell lies below
//! the line `y = 0`. In such a frame the boundary of any unit disk centered
//! in the query cell meets the enlarged point cell in at most one upper arc,
//! so all cell boundaries are horizontal segments or upper unit arcs.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

/// Side length of every grid cell, in rescaled units.
pub const CELL_SIDE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Widths below this are treated as empty when splitting x-ranges.
const X_EPS: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("radius must be finite and positive, got {0}")]
    InvalidRadius(f64),
    #[error("point ({0}, {1}) lies outside the query-side cell")]
    OutsideCell(f64, f64),
    #[error("arcs share a center and overlap")]
    DegenerateOverlap,
    #[error("cells are identical or not axis-separated")]
    CellsNotSeparated,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Rejects NaN and infinities.
    pub fn checked(x: f64, y: f64) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(GeomError::NonFinite)
        }
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn scaled(&self, f: f64) -> Point {
        Point::new(self.x * f, self.y * f)
    }

    /// Mirror image across the x-axis.
    #[inline]
    pub fn reflect(&self) -> Point {
        Point::new(self.x, -self.y)
    }
}

/// The single global query radius. Fixed for the lifetime of an index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Radius(f64);

impl Radius {
    pub fn new(r: f64) -> Result<Self, GeomError> {
        if r.is_finite() && r > 0.0 {
            Ok(Radius(r))
        } else {
            Err(GeomError::InvalidRadius(r))
        }
    }

    #[inline]
    pub fn get(&self) -> f64 {
        self.0
    }

    /// Maps a world point into unit-radius coordinates.
    #[inline]
    pub fn rescale(&self, p: Point) -> Point {
        Point::new(p.x / self.0, p.y / self.0)
    }
}

impl Default for Radius {
    fn default() -> Self {
        Radius(1.0)
    }
}

/// Closed unit-disk membership: `|p - c| <= 1`.
#[inline]
pub fn point_in_disk(p: Point, c: Point) -> bool {
    p.dist2(&c) <= 1.0
}

/// [`point_in_disk`] with the finiteness check applied.
pub fn try_point_in_disk(p: Point, c: Point) -> Result<bool, GeomError> {
    if !p.is_finite() || !c.is_finite() {
        return Err(GeomError::NonFinite);
    }
    Ok(point_in_disk(p, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArcKind {
    Upper,
    Lower,
}

/// Height of the upper (or lower) unit half-circle about `c` at abscissa `x`.
/// Outside `[c.x - 1, c.x + 1]` the value is clamped to the center height.
#[inline]
pub fn half_circle_y(c: Point, kind: ArcKind, x: f64) -> f64 {
    let dx = x - c.x;
    let h = (1.0 - dx * dx).max(0.0).sqrt();
    match kind {
        ArcKind::Upper => c.y + h,
        ArcKind::Lower => c.y - h,
    }
}

/// An x-monotone piece of a unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub center: Point,
    pub kind: ArcKind,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Arc {
    pub fn y_at(&self, x: f64) -> f64 {
        half_circle_y(self.center, self.kind, x)
    }

    pub fn left(&self) -> Point {
        Point::new(self.x_lo, self.y_at(self.x_lo))
    }

    pub fn right(&self) -> Point {
        Point::new(self.x_hi, self.y_at(self.x_hi))
    }
}

/// Top or bottom edge of a pseudo-trapezoid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    Horizontal(f64),
    UnitArc { center: Point, kind: ArcKind },
}

impl Boundary {
    #[inline]
    pub fn upper(center: Point) -> Self {
        Boundary::UnitArc {
            center,
            kind: ArcKind::Upper,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Boundary::Horizontal(y) => y,
            Boundary::UnitArc { center, kind } => half_circle_y(center, kind, x),
        }
    }

    /// Extreme values over `[lo, hi]` as `(min, max)`.
    fn range(&self, lo: f64, hi: f64) -> (f64, f64) {
        match *self {
            Boundary::Horizontal(y) => (y, y),
            Boundary::UnitArc { center, kind } => {
                let a = self.eval(lo);
                let b = self.eval(hi);
                let apex = half_circle_y(center, kind, center.x.clamp(lo, hi));
                match kind {
                    ArcKind::Upper => (a.min(b), apex),
                    ArcKind::Lower => (apex, a.max(b)),
                }
            }
        }
    }

    fn reflect(&self) -> Boundary {
        match *self {
            Boundary::Horizontal(y) => Boundary::Horizontal(-y),
            Boundary::UnitArc { center, kind } => Boundary::UnitArc {
                center: center.reflect(),
                kind: match kind {
                    ArcKind::Upper => ArcKind::Lower,
                    ArcKind::Lower => ArcKind::Upper,
                },
            },
        }
    }

    fn center(&self) -> Option<Point> {
        match *self {
            Boundary::Horizontal(_) => None,
            Boundary::UnitArc { center, .. } => Some(center),
        }
    }
}

/// Region between two vertical sides and two arc-or-segment boundaries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoTrapezoid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub top: Boundary,
    pub bottom: Boundary,
}

/// How a unit disk relates to a pseudo-trapezoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellRelation {
    /// The disk boundary meets the interior of the cell.
    Crosses,
    /// The closed disk contains the whole cell.
    Contains,
    /// The disk misses the interior of the cell.
    Disjoint,
}

/// Position of a point relative to an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcSide {
    Below,
    On,
    Above,
    OutsideSpan,
}

/// Ordered, disjoint open x-intervals.
pub type Intervals = SmallVec<[(f64, f64); 2]>;

impl PseudoTrapezoid {
    #[inline]
    pub fn top_at(&self, x: f64) -> f64 {
        self.top.eval(x)
    }

    #[inline]
    pub fn bottom_at(&self, x: f64) -> f64 {
        self.bottom.eval(x)
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    /// Closed containment.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_lo
            && p.x <= self.x_hi
            && p.y >= self.bottom_at(p.x)
            && p.y <= self.top_at(p.x)
    }

    /// How far `p` is from satisfying [`Self::contains`]; zero when inside.
    pub fn violation(&self, p: Point) -> f64 {
        let x = p.x.clamp(self.x_lo, self.x_hi);
        let dx = (p.x - x).abs();
        let dy = (self.bottom_at(x) - p.y).max(p.y - self.top_at(x)).max(0.0);
        dx + dy
    }

    /// A point strictly inside the cell (for non-degenerate cells).
    pub fn interior_point(&self) -> Point {
        let x = 0.5 * (self.x_lo + self.x_hi);
        Point::new(x, 0.5 * (self.bottom_at(x) + self.top_at(x)))
    }

    /// The four corners: bottom-left, top-left, bottom-right, top-right.
    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x_lo, self.bottom_at(self.x_lo)),
            Point::new(self.x_lo, self.top_at(self.x_lo)),
            Point::new(self.x_hi, self.bottom_at(self.x_hi)),
            Point::new(self.x_hi, self.top_at(self.x_hi)),
        ]
    }

    /// Axis-aligned bounding box `(x_lo, y_lo, x_hi, y_hi)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        let (ylo, _) = self.bottom.range(self.x_lo, self.x_hi);
        let (_, yhi) = self.top.range(self.x_lo, self.x_hi);
        (self.x_lo, ylo, self.x_hi, yhi)
    }

    /// Mirror image across the x-axis (top and bottom swap roles).
    pub fn reflect(&self) -> PseudoTrapezoid {
        PseudoTrapezoid {
            x_lo: self.x_lo,
            x_hi: self.x_hi,
            top: self.bottom.reflect(),
            bottom: self.top.reflect(),
        }
    }

    /// Approximate area by Simpson's rule; used by tests and diagnostics.
    pub fn area(&self) -> f64 {
        let n = 64;
        let h = self.width() / n as f64;
        if h <= 0.0 {
            return 0.0;
        }
        let g = |x: f64| (self.top_at(x) - self.bottom_at(x)).max(0.0);
        let mut s = g(self.x_lo) + g(self.x_hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(self.x_lo + i as f64 * h);
        }
        s * h / 3.0
    }
}

/// Intersection points of the unit circles about `c` and `d`.
pub fn circle_intersections(c: Point, d: Point) -> Option<[Point; 2]> {
    let dx = d.x - c.x;
    let dy = d.y - c.y;
    let dist2 = dx * dx + dy * dy;
    if dist2 == 0.0 || dist2 > 4.0 {
        return None;
    }
    let dist = dist2.sqrt();
    let h = (1.0 - dist2 / 4.0).max(0.0).sqrt();
    let mx = 0.5 * (c.x + d.x);
    let my = 0.5 * (c.y + d.y);
    let ux = -dy / dist * h;
    let uy = dx / dist * h;
    Some([Point::new(mx + ux, my + uy), Point::new(mx - ux, my - uy)])
}

/// Abscissae where the upper half-circle about `c` meets `b`.
fn boundary_hits(c: Point, b: &Boundary, out: &mut SmallVec<[f64; 8]>) {
    match *b {
        Boundary::Horizontal(y) => {
            let dy = y - c.y;
            if (0.0..=1.0).contains(&dy) {
                let dx = (1.0 - dy * dy).max(0.0).sqrt();
                out.push(c.x - dx);
                out.push(c.x + dx);
            }
        }
        Boundary::UnitArc { center, .. } => {
            if let Some(ps) = circle_intersections(c, center) {
                out.push(ps[0].x);
                out.push(ps[1].x);
            }
        }
    }
}

/// Open x-intervals on which the upper unit half-circle about `c` lies
/// strictly inside `t`. Empty exactly when the circle misses the interior
/// of `t`, assuming `t` lies on or above the line `y = c.y`.
pub fn crossing_intervals(c: Point, t: &PseudoTrapezoid) -> Intervals {
    let mut out = Intervals::new();
    let a = t.x_lo.max(c.x - 1.0);
    let b = t.x_hi.min(c.x + 1.0);
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(b - a > X_EPS) {
        return out;
    }
    let mut xs: SmallVec<[f64; 8]> = SmallVec::new();
    xs.push(a);
    xs.push(b);
    let same_top = t.top.center() == Some(c);
    let same_bottom = t.bottom.center() == Some(c);
    if same_top || same_bottom {
        // the circle is one of the cell's own edges
        return out;
    }
    boundary_hits(c, &t.top, &mut xs);
    boundary_hits(c, &t.bottom, &mut xs);
    xs.retain(|x| *x >= a && *x <= b);
    xs.sort_by(|p, q| p.total_cmp(q));
    for w in xs.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        if x1 - x0 <= X_EPS {
            continue;
        }
        let xm = 0.5 * (x0 + x1);
        let f = half_circle_y(c, ArcKind::Upper, xm);
        if t.bottom_at(xm) < f && f < t.top_at(xm) {
            match out.last_mut() {
                Some(last) if last.1 >= x0 => last.1 = x1,
                _ => out.push((x0, x1)),
            }
        }
    }
    out
}

/// Relation between the closed unit disk about `c` and the cell `t`.
///
/// `t` must lie on or above the horizontal line through `c`, which holds
/// for every cell of a local frame and every center in the query cell.
pub fn classify_disk(c: Point, t: &PseudoTrapezoid) -> CellRelation {
    let (x0, y0, x1, y1) = t.bbox();
    // nearest and farthest points of the bounding box
    let nx = c.x.clamp(x0, x1) - c.x;
    let ny = c.y.clamp(y0, y1) - c.y;
    if nx * nx + ny * ny > 1.0 {
        return CellRelation::Disjoint;
    }
    let fx = (c.x - x0).abs().max((c.x - x1).abs());
    let fy = (c.y - y0).abs().max((c.y - y1).abs());
    if fx * fx + fy * fy <= 1.0 {
        return CellRelation::Contains;
    }
    if !crossing_intervals(c, t).is_empty() {
        return CellRelation::Crosses;
    }
    if point_in_disk(t.interior_point(), c) {
        CellRelation::Contains
    } else {
        CellRelation::Disjoint
    }
}

/// Classifies an arc's underlying disk against a cell. Lower arcs are
/// handled by reflecting both across the x-axis.
pub fn classify_arc_vs_trapezoid(a: &Arc, t: &PseudoTrapezoid) -> CellRelation {
    match a.kind {
        ArcKind::Upper => classify_disk(a.center, t),
        ArcKind::Lower => classify_disk(a.center.reflect(), &t.reflect()),
    }
}

/// The unique intersection point of two same-kind arcs within both
/// x-ranges, if any.
pub fn arcs_intersect(a: &Arc, b: &Arc) -> Result<Option<Point>, GeomError> {
    let lo = a.x_lo.max(b.x_lo);
    let hi = a.x_hi.min(b.x_hi);
    if a.center == b.center && a.kind == b.kind {
        if lo <= hi {
            return Err(GeomError::DegenerateOverlap);
        }
        return Ok(None);
    }
    if lo > hi || a.kind != b.kind {
        return Ok(None);
    }
    let Some(ps) = circle_intersections(a.center, b.center) else {
        return Ok(None);
    };
    let on_half = |p: &Point, c: Point| match a.kind {
        ArcKind::Upper => p.y >= c.y,
        ArcKind::Lower => p.y <= c.y,
    };
    Ok(ps.into_iter().find(|p| {
        p.x >= lo && p.x <= hi && on_half(p, a.center) && on_half(p, b.center)
    }))
}

/// Compares `p` against `a` at `p.x`. For an upper arc, `Below` means `p`
/// lies inside the underlying disk.
pub fn point_vs_arc(p: Point, a: &Arc) -> ArcSide {
    if p.x < a.x_lo || p.x > a.x_hi {
        return ArcSide::OutsideSpan;
    }
    let y = a.y_at(p.x);
    let d = p.y - y;
    if d.abs() <= 1e-12 {
        ArcSide::On
    } else if d < 0.0 {
        ArcSide::Below
    } else {
        ArcSide::Above
    }
}

/// Axis-aligned square given by its lower-left corner and side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub x_lo: f64,
    pub y_lo: f64,
    pub side: f64,
}

impl Square {
    pub fn x_hi(&self) -> f64 {
        self.x_lo + self.side
    }

    pub fn y_hi(&self) -> f64 {
        self.y_lo + self.side
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        p.x >= self.x_lo - tol
            && p.x <= self.x_hi() + tol
            && p.y >= self.y_lo - tol
            && p.y <= self.y_hi() + tol
    }

    pub fn center(&self) -> Point {
        Point::new(self.x_lo + 0.5 * self.side, self.y_lo + 0.5 * self.side)
    }
}

/// Height of the center of the arc `h(a, b)` below the top edge of a cell.
fn bulge_center_drop() -> f64 {
    (1.0 - 0.25 * CELL_SIDE * CELL_SIDE).sqrt()
}

/// Local coordinate system for a pair of grid cells.
///
/// `target` (C') holds data points, `source` (C) holds query centers. The
/// frame rotates the plane by a multiple of 90 degrees so that the source
/// lies below the target, then translates the target to `[0, s]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellPairFrame {
    pub source: Square,
    pub target: Square,
    /// Quarter turns applied before translating.
    pub rotation: u8,
    origin: Point,
}

fn rotate(p: Point, quarter_turns: u8) -> Point {
    match quarter_turns & 3 {
        0 => p,
        1 => Point::new(-p.y, p.x),
        2 => Point::new(-p.x, -p.y),
        _ => Point::new(p.y, -p.x),
    }
}

impl CellPairFrame {
    /// Builds the frame for queries centered in `source` against points in
    /// `target`. The cells must be distinct grid cells of equal side.
    pub fn new(source: Square, target: Square) -> Result<Self, GeomError> {
        let s = target.side;
        let dcol = ((source.x_lo - target.x_lo) / s).round();
        let drow = ((source.y_lo - target.y_lo) / s).round();
        if dcol == 0.0 && drow == 0.0 {
            return Err(GeomError::CellsNotSeparated);
        }
        let rotation = if drow.abs() >= dcol.abs() {
            if drow < 0.0 {
                0
            } else {
                2
            }
        } else if dcol < 0.0 {
            1
        } else {
            3
        };
        // rotated target's lower-left corner becomes the origin
        let corners = [
            Point::new(target.x_lo, target.y_lo),
            Point::new(target.x_hi(), target.y_lo),
            Point::new(target.x_lo, target.y_hi()),
            Point::new(target.x_hi(), target.y_hi()),
        ];
        let mut ox = f64::INFINITY;
        let mut oy = f64::INFINITY;
        for c in corners {
            let r = rotate(c, rotation);
            ox = ox.min(r.x);
            oy = oy.min(r.y);
        }
        Ok(CellPairFrame {
            source,
            target,
            rotation,
            origin: Point::new(ox, oy),
        })
    }

    /// The frame with the roles of the two cells exchanged.
    pub fn dual(&self) -> CellPairFrame {
        CellPairFrame::new(self.target, self.source).expect("distinct cells")
    }

    #[inline]
    pub fn side(&self) -> f64 {
        self.target.side
    }

    #[inline]
    pub fn to_local(&self, p: Point) -> Point {
        let r = rotate(p, self.rotation);
        Point::new(r.x - self.origin.x, r.y - self.origin.y)
    }

    #[inline]
    pub fn to_world(&self, p: Point) -> Point {
        let r = Point::new(p.x + self.origin.x, p.y + self.origin.y);
        rotate(r, (4 - (self.rotation & 3)) & 3)
    }

    /// The source cell in local coordinates (it lies in `y <= 0`).
    pub fn source_local(&self) -> Square {
        let a = self.to_local(Point::new(self.source.x_lo, self.source.y_lo));
        let b = self.to_local(Point::new(self.source.x_hi(), self.source.y_hi()));
        Square {
            x_lo: a.x.min(b.x),
            y_lo: a.y.min(b.y),
            side: self.source.side,
        }
    }

    /// The target cell in local coordinates, `[0, s]^2`.
    pub fn target_local(&self) -> Square {
        Square {
            x_lo: 0.0,
            y_lo: 0.0,
            side: self.side(),
        }
    }

    /// The enlarged target cell: the target with its top edge replaced by
    /// the unit arc through the two top corners whose center lies below.
    pub fn enlarged_target(&self) -> PseudoTrapezoid {
        let s = self.side();
        PseudoTrapezoid {
            x_lo: 0.0,
            x_hi: s,
            top: Boundary::upper(Point::new(0.5 * s, s - bulge_center_drop())),
            bottom: Boundary::Horizontal(0.0),
        }
    }

    /// The enlarged source cell in this frame's coordinates: the source with
    /// its bottom edge replaced by a lower unit arc.
    pub fn enlarged_source(&self) -> PseudoTrapezoid {
        let sq = self.source_local();
        let s = sq.side;
        PseudoTrapezoid {
            x_lo: sq.x_lo,
            x_hi: sq.x_hi(),
            top: Boundary::Horizontal(sq.y_hi()),
            bottom: Boundary::UnitArc {
                center: Point::new(sq.x_lo + 0.5 * s, sq.y_lo + bulge_center_drop()),
                kind: ArcKind::Lower,
            },
        }
    }

    /// The upper arc of the disk about `c` (local coordinates, inside the
    /// source cell) that lies in the enlarged target cell.
    pub fn clip_disk_boundary(&self, c: Point) -> Result<Option<Arc>, GeomError> {
        if !c.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !self.source_local().contains(c, 1e-9) {
            return Err(GeomError::OutsideCell(c.x, c.y));
        }
        Ok(clip_upper(c, &self.enlarged_target()))
    }

    /// The lower arc of the disk about `p` (local coordinates, inside the
    /// target cell) that lies in the enlarged source cell.
    pub fn clip_disk_boundary_lower(&self, p: Point) -> Result<Option<Arc>, GeomError> {
        if !p.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !self.target_local().contains(p, 1e-9) {
            return Err(GeomError::OutsideCell(p.x, p.y));
        }
        let region = self.enlarged_source().reflect();
        Ok(clip_upper(p.reflect(), &region).map(|a| Arc {
            center: p,
            kind: ArcKind::Lower,
            ..a
        }))
    }
}

fn clip_upper(c: Point, region: &PseudoTrapezoid) -> Option<Arc> {
    let iv = crossing_intervals(c, region);
    let (lo, hi) = (iv.first()?.0, iv.last()?.1);
    Some(Arc {
        center: c,
        kind: ArcKind::Upper,
        x_lo: lo,
        x_hi: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn above_frame() -> CellPairFrame {
        let s = CELL_SIDE;
        CellPairFrame::new(
            Square { x_lo: 0.0, y_lo: -s, side: s },
            Square { x_lo: 0.0, y_lo: 0.0, side: s },
        )
        .unwrap()
    }

    #[test]
    fn disk_membership_examples() {
        assert!(point_in_disk(Point::new(0.0, 0.0), Point::new(0.0, 0.0)));
        assert!(point_in_disk(Point::new(1.0, 0.0), Point::new(0.0, 0.0)));
        // squared distance 0.01 + 1.21 = 1.22
        assert!(!point_in_disk(Point::new(0.3, 0.6), Point::new(0.2, -0.5)));
        assert_eq!(
            try_point_in_disk(Point::new(f64::NAN, 0.0), Point::new(0.0, 0.0)),
            Err(GeomError::NonFinite)
        );
    }

    #[test]
    fn radius_rejects_nonpositive() {
        assert!(Radius::new(0.0).is_err());
        assert!(Radius::new(-1.0).is_err());
        assert!(Radius::new(f64::INFINITY).is_err());
        assert_eq!(Radius::new(2.0).unwrap().rescale(Point::new(4.0, 2.0)), Point::new(2.0, 1.0));
    }

    #[test]
    fn frame_round_trips_and_orients() {
        let s = CELL_SIDE;
        let t = Square { x_lo: 3.0, y_lo: 5.0, side: s };
        for (dc, dr) in [(0i32, -1i32), (0, 2), (-2, 1), (2, -1), (1, 1), (-2, -2)] {
            let src = Square {
                x_lo: 3.0 + dc as f64 * s,
                y_lo: 5.0 + dr as f64 * s,
                side: s,
            };
            let f = CellPairFrame::new(src, t).unwrap();
            let p = Point::new(3.1, 5.2);
            let q = f.to_world(f.to_local(p));
            assert!((p.x - q.x).abs() < 1e-12 && (p.y - q.y).abs() < 1e-12);
            let tl = f.to_local(t.center());
            assert!((tl.x - 0.5 * s).abs() < 1e-12 && (tl.y - 0.5 * s).abs() < 1e-12);
            let sl = f.source_local();
            assert!(sl.y_hi() <= 1e-12, "source must lie below: {sl:?}");
            let d = f.dual();
            assert!(d.source_local().y_hi() <= 1e-12);
        }
        assert_eq!(CellPairFrame::new(t, t), Err(GeomError::CellsNotSeparated));
    }

    #[test]
    fn point_vs_arc_examples() {
        let a = Arc {
            center: Point::new(0.5, 0.0),
            kind: ArcKind::Upper,
            x_lo: 0.0,
            x_hi: 1.0,
        };
        assert_eq!(point_vs_arc(a.center, &a), ArcSide::Below);
        assert_eq!(point_vs_arc(Point::new(0.5, 1.0), &a), ArcSide::On);
        assert_eq!(point_vs_arc(Point::new(0.5, 0.9), &a), ArcSide::Below);
        assert_eq!(point_vs_arc(Point::new(0.5, 1.1), &a), ArcSide::Above);
        assert_eq!(point_vs_arc(Point::new(1.5, 0.0), &a), ArcSide::OutsideSpan);
    }

    #[test]
    fn arcs_intersect_examples() {
        let f = above_frame();
        let a = f.clip_disk_boundary(Point::new(0.0, -0.5)).unwrap().unwrap();
        let b = f.clip_disk_boundary(Point::new(0.2, -0.5)).unwrap().unwrap();
        // equal heights: circles meet on x = 0.1, upper point at y = -0.5 + sqrt(0.99)
        let p = arcs_intersect(&a, &b).unwrap().unwrap();
        assert!((p.x - 0.1).abs() < 1e-12);
        assert!((p.y - (-0.5 + 0.99f64.sqrt())).abs() < 1e-12);
        assert_eq!(arcs_intersect(&a, &a), Err(GeomError::DegenerateOverlap));
        let mut c = b;
        c.x_lo = 0.6;
        c.x_hi = 0.7;
        let mut d = a;
        d.x_hi = 0.05;
        assert_eq!(arcs_intersect(&c, &d), Ok(None));
    }

    #[test]
    fn clip_rejects_outside_centers() {
        let f = above_frame();
        assert!(matches!(
            f.clip_disk_boundary(Point::new(0.3, 0.3)),
            Err(GeomError::OutsideCell(..))
        ));
        // source cell two rows down: boundary of a far disk misses the cell
        let s = CELL_SIDE;
        let far = CellPairFrame::new(
            Square { x_lo: 2.0 * s, y_lo: -3.0 * s, side: s },
            Square { x_lo: 0.0, y_lo: 0.0, side: s },
        )
        .unwrap();
        let c = far.to_local(Point::new(3.0 * s, -3.0 * s));
        assert_eq!(far.clip_disk_boundary(c).unwrap(), None);
    }

    /// Signed distance of `(x, y)` to the unit circle about `c`.
    fn sd(c: Point, p: Point) -> f64 {
        p.dist2(&c) - 1.0
    }

    fn boundary_samples(t: &PseudoTrapezoid, n: usize) -> Vec<Point> {
        let mut v = Vec::with_capacity(4 * n);
        let lerp = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / n as f64;
        for i in 0..n {
            let x = lerp(t.x_lo, t.x_hi, i);
            v.push(Point::new(x, t.bottom_at(x)));
        }
        for i in 0..n {
            let y = lerp(t.bottom_at(t.x_hi), t.top_at(t.x_hi), i);
            v.push(Point::new(t.x_hi, y));
        }
        for i in 0..n {
            let x = lerp(t.x_hi, t.x_lo, i);
            v.push(Point::new(x, t.top_at(x)));
        }
        for i in 0..n {
            let y = lerp(t.top_at(t.x_lo), t.bottom_at(t.x_lo), i);
            v.push(Point::new(t.x_lo, y));
        }
        v
    }

    #[test]
    fn clipped_arcs_meet_boundary_twice() {
        let f = above_frame();
        let region = f.enlarged_target();
        let src = f.source_local();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = boundary_samples(&region, 400);
        for _ in 0..10_000 {
            let c = Point::new(
                rng.gen_range(src.x_lo..src.x_hi()),
                rng.gen_range(src.y_lo..src.y_hi()),
            );
            let arc = f.clip_disk_boundary(c).unwrap();
            let mut changes = 0;
            for i in 0..samples.len() {
                let a = sd(c, samples[i]);
                let b = sd(c, samples[(i + 1) % samples.len()]);
                if (a < 0.0) != (b < 0.0) {
                    changes += 1;
                }
            }
            match arc {
                Some(a) => {
                    if changes > 0 {
                        assert_eq!(changes, 2, "center {c:?}");
                    }
                    for end in [a.left(), a.right()] {
                        assert!(region.violation(end) < 1e-9);
                        let on_side = (end.x - region.x_lo).abs() < 1e-9
                            || (end.x - region.x_hi).abs() < 1e-9
                            || end.y.abs() < 1e-9
                            || (end.y - region.top_at(end.x)).abs() < 1e-9;
                        assert!(on_side, "endpoint {end:?} not on the boundary");
                    }
                }
                None => assert_eq!(changes, 0, "center {c:?}"),
            }
        }
    }

    #[test]
    fn observation_one_holds_for_random_pairs() {
        let f = above_frame();
        let region = f.enlarged_target();
        let src = f.source_local();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = 0;
        for _ in 0..100_000 {
            let mut draw = || {
                Point::new(
                    rng.gen_range(src.x_lo..src.x_hi()),
                    rng.gen_range(src.y_lo..src.y_hi()),
                )
            };
            let (c, d) = (draw(), draw());
            let (Some(a), Some(b)) = (
                f.clip_disk_boundary(c).unwrap(),
                f.clip_disk_boundary(d).unwrap(),
            ) else {
                continue;
            };
            let hits = circle_intersections(c, d)
                .map(|ps| ps.iter().filter(|p| region.contains(**p)).count())
                .unwrap_or(0);
            assert!(hits <= 1);
            if arcs_intersect(&a, &b).unwrap().is_some() {
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn observation_one_dense_sampling() {
        let f = above_frame();
        let src = f.source_local();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let mut draw = || {
                Point::new(
                    rng.gen_range(src.x_lo..src.x_hi()),
                    rng.gen_range(src.y_lo..src.y_hi()),
                )
            };
            let (c, d) = (draw(), draw());
            let (Some(a), Some(b)) = (
                f.clip_disk_boundary(c).unwrap(),
                f.clip_disk_boundary(d).unwrap(),
            ) else {
                continue;
            };
            let lo = a.x_lo.max(b.x_lo);
            let hi = a.x_hi.min(b.x_hi);
            if lo >= hi {
                continue;
            }
            let n = 2000;
            let mut changes = 0;
            let mut prev = a.y_at(lo) - b.y_at(lo);
            for i in 1..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                let cur = a.y_at(x) - b.y_at(x);
                if (cur < 0.0) != (prev < 0.0) {
                    changes += 1;
                }
                prev = cur;
            }
            assert!(changes <= 1);
        }
    }

    #[test]
    fn classification_examples() {
        let f = above_frame();
        let t = f.enlarged_target();
        // a disk centered just below the cell contains it entirely
        assert_eq!(classify_disk(Point::new(0.35, -0.05), &t), CellRelation::Contains);
        // far to the side: disjoint
        let s = CELL_SIDE;
        let small = PseudoTrapezoid {
            x_lo: 0.0,
            x_hi: 0.1,
            top: Boundary::Horizontal(0.1),
            bottom: Boundary::Horizontal(0.0),
        };
        assert_eq!(classify_disk(Point::new(1.5, -0.5), &small), CellRelation::Disjoint);
        // exactly one corner inside: must cross
        let c = Point::new(-0.7, -0.7);
        let inside: Vec<_> = small.corners().iter().map(|p| point_in_disk(*p, c)).collect();
        assert_eq!(inside.iter().filter(|b| **b).count(), 1, "{inside:?}");
        assert_eq!(classify_disk(c, &small), CellRelation::Crosses);
        let _ = s;
    }

    #[test]
    fn classification_matches_dense_sampling() {
        let f = above_frame();
        let region = f.enlarged_target();
        let src = f.source_local();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            // random sub-trapezoid bounded by two random arcs or segments
            let x0 = rng.gen_range(0.0..0.6);
            let x1 = rng.gen_range(x0 + 0.02..CELL_SIDE);
            let c1 = Point::new(rng.gen_range(src.x_lo..src.x_hi()), rng.gen_range(src.y_lo..src.y_hi()));
            let top = if rng.gen_bool(0.5) {
                region.top
            } else {
                Boundary::upper(c1)
            };
            let t = PseudoTrapezoid { x_lo: x0, x_hi: x1, top, bottom: Boundary::Horizontal(0.0) };
            if (0..=20).any(|i| {
                let x = x0 + (x1 - x0) * i as f64 / 20.0;
                t.top_at(x) <= 0.01 || t.top_at(x) > region.top_at(x) + 1e-12
            }) {
                continue;
            }
            let c = Point::new(rng.gen_range(src.x_lo..src.x_hi()), rng.gen_range(src.y_lo..src.y_hi()));
            let rel = classify_disk(c, &t);
            let (mut ins, mut outs) = (false, false);
            for i in 1..80 {
                let x = x0 + (x1 - x0) * i as f64 / 80.0;
                let (lo, hi) = (t.bottom_at(x), t.top_at(x));
                for j in 1..80 {
                    let y = lo + (hi - lo) * j as f64 / 80.0;
                    let d = Point::new(x, y).dist2(&c);
                    if d < 1.0 - 1e-9 {
                        ins = true;
                    } else if d > 1.0 + 1e-9 {
                        outs = true;
                    }
                }
            }
            match rel {
                CellRelation::Crosses => {}
                CellRelation::Contains => assert!(!outs, "{c:?} {t:?}"),
                CellRelation::Disjoint => assert!(!ins, "{c:?} {t:?}"),
            }
            if ins && outs {
                assert_eq!(rel, CellRelation::Crosses);
            }
        }
    }

    #[test]
    fn lower_arcs_reflect_consistently() {
        let f = above_frame();
        let p = Point::new(0.3, 0.4);
        let arc = f.clip_disk_boundary_lower(p).unwrap().unwrap();
        assert_eq!(arc.kind, ArcKind::Lower);
        let region = f.enlarged_source();
        assert!(region.violation(arc.left()) < 1e-9);
        assert!(region.violation(arc.right()) < 1e-9);
        let probe = region.interior_point();
        let rel = classify_arc_vs_trapezoid(
            &arc,
            &PseudoTrapezoid { x_lo: probe.x - 1e-3, x_hi: probe.x + 1e-3, ..region },
        );
        assert_ne!(rel, CellRelation::Disjoint);
    }
}
