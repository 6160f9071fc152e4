//! Global reduction to pairs of neighbouring grid cells.
//!
//! Points are grouped into vertical strips and, inside each strip, into
//! rectangles, such that consecutive groups are more than 3 apart. Each
//! rectangle is padded by 1 on every side and gridded into squares of side
//! `1/sqrt(2)`. The stored cells are the 5x5 neighbourhoods of all non-empty
//! cells; for each stored cell `C`, `N(C)` lists the non-empty cells of its
//! neighbourhood. A unit disk centered in `C` only reaches points in `N(C)`,
//! and a disk whose center lies in no stored cell is empty.

use serde::{Deserialize, Serialize};

use crate::geom::{CellPairFrame, GeomError, Point, Radius, Square, CELL_SIDE};

/// Consecutive points farther apart than this start a new strip/rectangle.
const GAP: f64 = 3.0;
/// Neighbourhood half-width in cells.
const REACH: i64 = 2;

pub type CellId = u32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Strip {
    x_lo: f64,
    x_hi: f64,
    ncols: u32,
    rects: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Rect {
    y_lo: f64,
    y_hi: f64,
    nrows: u32,
    cells: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub strip: u32,
    pub rect: u32,
    pub row: u32,
    pub col: u32,
    points: (u32, u32),
    neighbors: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridIndex {
    radius: Radius,
    strips: Vec<Strip>,
    rects: Vec<Rect>,
    cells: Vec<Cell>,
    /// Rescaled points grouped by cell.
    points: Vec<Point>,
    /// Input index of each entry of `points`.
    ids: Vec<u32>,
    neighbor_list: Vec<CellId>,
}

/// Number of cells of side `CELL_SIDE` needed to cover `[lo, hi]` with
/// padding 1 on both sides.
fn span_cells(lo: f64, hi: f64) -> u32 {
    (((hi + 1.0) - (lo - 1.0)) / CELL_SIDE).ceil().max(1.0) as u32
}

fn split_runs(sorted: &[f64]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > GAP {
            runs.push((start, i));
            start = i;
        }
    }
    runs
}

#[inline]
fn cell_index(v: f64, lo: f64, n: u32) -> u32 {
    let k = ((v - lo) / CELL_SIDE).floor();
    if k < 0.0 {
        0
    } else {
        (k as u32).min(n - 1)
    }
}

impl GridIndex {
    /// Builds the grid for `pts` (world coordinates) at query radius `radius`.
    pub fn build(pts: &[Point], radius: Radius) -> Result<Self, GeomError> {
        if pts.iter().any(|p| !p.is_finite()) {
            return Err(GeomError::NonFinite);
        }
        let scaled: Vec<Point> = pts.iter().map(|p| radius.rescale(*p)).collect();
        let mut order: Vec<u32> = (0..pts.len() as u32).collect();
        order.sort_by(|&a, &b| {
            let (p, q) = (scaled[a as usize], scaled[b as usize]);
            p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(a.cmp(&b))
        });

        let xs: Vec<f64> = order.iter().map(|&i| scaled[i as usize].x).collect();
        let mut strips = Vec::new();
        let mut rects = Vec::new();
        let mut cells = Vec::new();
        // (cell id, input index) for every point
        let mut assignment: Vec<(u32, u32)> = Vec::with_capacity(pts.len());

        for (a, b) in split_runs(&xs) {
            let ncols = span_cells(xs[a], xs[b - 1]);
            let x_lo = xs[a] - 1.0;
            let x_hi = (ncols as f64).mul_add(CELL_SIDE, x_lo);
            let strip_id = strips.len() as u32;
            let rect_start = rects.len() as u32;

            let mut members: Vec<u32> = order[a..b].to_vec();
            members.sort_by(|&i, &j| {
                let (p, q) = (scaled[i as usize], scaled[j as usize]);
                p.y.total_cmp(&q.y).then(p.x.total_cmp(&q.x)).then(i.cmp(&j))
            });
            let ys: Vec<f64> = members.iter().map(|&i| scaled[i as usize].y).collect();
            for (c, d) in split_runs(&ys) {
                let nrows = span_cells(ys[c], ys[d - 1]);
                let y_lo = ys[c] - 1.0;
                let y_hi = (nrows as f64).mul_add(CELL_SIDE, y_lo);
                let rect_id = rects.len() as u32;

                let mut occupied: Vec<(u32, u32, u32)> = members[c..d]
                    .iter()
                    .map(|&i| {
                        let p = scaled[i as usize];
                        (cell_index(p.y, y_lo, nrows), cell_index(p.x, x_lo, ncols), i)
                    })
                    .collect();
                occupied.sort_unstable();

                let mut keys: Vec<(u32, u32)> = Vec::new();
                let mut last = None;
                for &(r, col, _) in &occupied {
                    if last == Some((r, col)) {
                        continue;
                    }
                    last = Some((r, col));
                    for dr in -REACH..=REACH {
                        for dc in -REACH..=REACH {
                            let rr = r as i64 + dr;
                            let cc = col as i64 + dc;
                            if rr >= 0 && cc >= 0 && rr < nrows as i64 && cc < ncols as i64 {
                                keys.push((rr as u32, cc as u32));
                            }
                        }
                    }
                }
                keys.sort_unstable();
                keys.dedup();

                let first = cells.len() as u32;
                for &(row, col) in &keys {
                    cells.push(Cell {
                        strip: strip_id,
                        rect: rect_id,
                        row,
                        col,
                        points: (0, 0),
                        neighbors: (0, 0),
                    });
                }
                for &(r, col, i) in &occupied {
                    let k = keys.binary_search(&(r, col)).expect("occupied cell is stored");
                    assignment.push((first + k as u32, i));
                }
                rects.push(Rect {
                    y_lo,
                    y_hi,
                    nrows,
                    cells: (first, cells.len() as u32),
                });
            }
            strips.push(Strip {
                x_lo,
                x_hi,
                ncols,
                rects: (rect_start, rects.len() as u32),
            });
        }

        // assignment is already grouped by cell within each rectangle, and
        // rectangles are visited in cell-id order
        debug_assert!(assignment.windows(2).all(|w| w[0].0 <= w[1].0));
        let mut points = Vec::with_capacity(pts.len());
        let mut ids = Vec::with_capacity(pts.len());
        let mut k = 0;
        for (cid, cell) in cells.iter_mut().enumerate() {
            let start = k;
            while k < assignment.len() && assignment[k].0 == cid as u32 {
                let i = assignment[k].1;
                points.push(scaled[i as usize]);
                ids.push(i);
                k += 1;
            }
            cell.points = (start as u32, k as u32);
        }

        let mut g = GridIndex {
            radius,
            strips,
            rects,
            cells,
            points,
            ids,
            neighbor_list: Vec::new(),
        };
        g.link_neighbors();
        Ok(g)
    }

    fn link_neighbors(&mut self) {
        let mut list = Vec::new();
        for id in 0..self.cells.len() {
            let c = &self.cells[id];
            let rect = &self.rects[c.rect as usize];
            let start = list.len() as u32;
            let row_lo = c.row.saturating_sub(REACH as u32);
            let row_hi = (c.row + REACH as u32).min(rect.nrows - 1);
            let col_lo = c.col.saturating_sub(REACH as u32);
            let col_hi = c.col + REACH as u32;
            let span = &self.cells[rect.cells.0 as usize..rect.cells.1 as usize];
            for row in row_lo..=row_hi {
                let from = span.partition_point(|d| (d.row, d.col) < (row, col_lo));
                for (off, d) in span[from..].iter().enumerate() {
                    if d.row != row || d.col > col_hi {
                        break;
                    }
                    if d.points.1 > d.points.0 {
                        list.push(rect.cells.0 + (from + off) as u32);
                    }
                }
            }
            self.cells[id].neighbors = (start, list.len() as u32);
        }
        self.neighbor_list = list;
    }

    pub fn radius(&self) -> Radius {
        self.radius
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_points(&self) -> usize {
        self.points.len()
    }

    pub fn num_strips(&self) -> usize {
        self.strips.len()
    }

    pub fn num_rects(&self) -> usize {
        self.rects.len()
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id as usize]
    }

    /// Rescaled points of cell `id`.
    pub fn cell_points(&self, id: CellId) -> &[Point] {
        let (a, b) = self.cells[id as usize].points;
        &self.points[a as usize..b as usize]
    }

    /// Input indices of the points of cell `id`, parallel to [`Self::cell_points`].
    pub fn cell_ids(&self, id: CellId) -> &[u32] {
        let (a, b) = self.cells[id as usize].points;
        &self.ids[a as usize..b as usize]
    }

    pub fn cell_len(&self, id: CellId) -> usize {
        let (a, b) = self.cells[id as usize].points;
        (b - a) as usize
    }

    /// `N(C)`: the non-empty cells within the 5x5 block around `id`.
    pub fn neighbors(&self, id: CellId) -> &[CellId] {
        let (a, b) = self.cells[id as usize].neighbors;
        &self.neighbor_list[a as usize..b as usize]
    }

    /// Offset of `id`'s neighbour list in the flat neighbour array; per-pair
    /// structures use it as a dense index.
    pub fn neighbor_offset(&self, id: CellId) -> usize {
        self.cells[id as usize].neighbors.0 as usize
    }

    pub fn total_neighbor_entries(&self) -> usize {
        self.neighbor_list.len()
    }

    /// The cell's square in rescaled coordinates.
    pub fn cell_square(&self, id: CellId) -> Square {
        let c = &self.cells[id as usize];
        let s = &self.strips[c.strip as usize];
        let r = &self.rects[c.rect as usize];
        Square {
            x_lo: (c.col as f64).mul_add(CELL_SIDE, s.x_lo),
            y_lo: (c.row as f64).mul_add(CELL_SIDE, r.y_lo),
            side: CELL_SIDE,
        }
    }

    /// Frame for queries centered in `source` against points of `target`.
    pub fn frame(&self, source: CellId, target: CellId) -> Result<CellPairFrame, GeomError> {
        CellPairFrame::new(self.cell_square(source), self.cell_square(target))
    }

    /// Locates a rescaled point. `None` means the unit disk about `q`
    /// contains no input point.
    pub fn locate_scaled(&self, q: Point) -> Option<CellId> {
        if !q.is_finite() {
            return None;
        }
        let si = self.strips.partition_point(|s| s.x_lo <= q.x).checked_sub(1)?;
        let strip = &self.strips[si];
        if q.x > strip.x_hi {
            return None;
        }
        let rects = &self.rects[strip.rects.0 as usize..strip.rects.1 as usize];
        let ri = rects.partition_point(|r| r.y_lo <= q.y).checked_sub(1)?;
        let rect = &rects[ri];
        if q.y > rect.y_hi {
            return None;
        }
        let row = cell_index(q.y, rect.y_lo, rect.nrows);
        let col = cell_index(q.x, strip.x_lo, strip.ncols);
        let span = &self.cells[rect.cells.0 as usize..rect.cells.1 as usize];
        span.binary_search_by(|c| (c.row, c.col).cmp(&(row, col)))
            .ok()
            .map(|k| rect.cells.0 + k as u32)
    }

    /// Locates a point given in world coordinates.
    pub fn locate(&self, q: Point) -> Option<CellId> {
        self.locate_scaled(self.radius.rescale(q))
    }

    /// Ids of all non-empty cells.
    pub fn cells_with_points(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len() as u32).filter(|&c| self.cell_len(c) > 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_count(p: &[Point], q: Point) -> usize {
        p.iter().filter(|a| a.dist2(&q) <= 1.0).count()
    }

    #[test]
    fn empty_input_gives_empty_grid() {
        let g = GridIndex::build(&[], Radius::default()).unwrap();
        assert_eq!(g.num_cells(), 0);
        assert_eq!(g.locate(Point::new(0.0, 0.0)), None);
    }

    #[test]
    fn single_point() {
        let g = GridIndex::build(&[Point::new(0.0, 0.0)], Radius::default()).unwrap();
        assert_eq!(g.num_strips(), 1);
        assert_eq!(g.num_rects(), 1);
        assert_eq!(g.cells_with_points().count(), 1);
        assert!(g.num_cells() <= 25);
        let home = g.locate(Point::new(0.0, 0.0)).unwrap();
        for c in 0..g.num_cells() as u32 {
            assert_eq!(g.neighbors(c), &[home]);
        }
    }

    #[test]
    fn far_points_get_separate_strips() {
        let g = GridIndex::build(
            &[Point::new(0.0, 0.0), Point::new(100.0, 0.0)],
            Radius::default(),
        )
        .unwrap();
        assert_eq!(g.num_strips(), 2);
        let a = g.locate(Point::new(0.0, 0.0)).unwrap();
        let b = g.locate(Point::new(100.0, 0.0)).unwrap();
        assert_ne!(g.cell(a).strip, g.cell(b).strip);
        assert_eq!(g.locate(Point::new(50.0, 0.0)), None);
    }

    #[test]
    fn assignment_matches_cell_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Point> = (0..1000)
            .map(|_| Point::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        let g = GridIndex::build(&pts, Radius::default()).unwrap();
        let total: usize = (0..g.num_cells() as u32).map(|c| g.cell_len(c)).sum();
        assert_eq!(total, 1000);
        let mut seen = vec![0u32; 1000];
        for c in 0..g.num_cells() as u32 {
            let sq = g.cell_square(c);
            for (p, &i) in g.cell_points(c).iter().zip(g.cell_ids(c)) {
                seen[i as usize] += 1;
                // recompute the cell from the square's own coordinates
                assert!(p.x >= sq.x_lo && p.x < sq.x_hi());
                assert!(p.y >= sq.y_lo && p.y < sq.y_hi());
                assert_eq!(g.locate(*p), Some(c));
            }
        }
        assert!(seen.iter().all(|&k| k == 1));
    }

    #[test]
    fn locate_covers_every_disk() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts: Vec<Point> = (0..400)
            .map(|_| Point::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0)))
            .collect();
        pts.extend((0..50).map(|_| Point::new(rng.gen_range(20.0..22.0), rng.gen_range(-5.0..0.0))));
        let g = GridIndex::build(&pts, Radius::default()).unwrap();
        let mut some = 0;
        for _ in 0..10_000 {
            let q = Point::new(rng.gen_range(-3.0..25.0), rng.gen_range(-8.0..11.0));
            match g.locate(q) {
                None => assert_eq!(brute_count(&pts, q), 0),
                Some(c) => {
                    some += 1;
                    let n = g.neighbors(c);
                    assert!(n.len() <= 25);
                    let covered: usize = n
                        .iter()
                        .map(|&d| g.cell_points(d).iter().filter(|p| p.dist2(&q) <= 1.0).count())
                        .sum();
                    assert_eq!(covered, brute_count(&pts, q));
                }
            }
        }
        assert!(some > 1000);
        let total: usize = (0..g.num_cells() as u32).map(|c| g.neighbors(c).len()).sum();
        assert!(total <= 25 * g.num_cells());
    }

    #[test]
    fn radius_rescales() {
        let pts = [Point::new(0.0, 0.0), Point::new(5.0, 0.0)];
        let g = GridIndex::build(&pts, Radius::new(5.0).unwrap()).unwrap();
        let c = g.locate(Point::new(2.5, 0.0)).unwrap();
        assert_eq!(g.neighbors(c).len(), 2);
    }

    #[test]
    fn rejects_non_finite() {
        assert_eq!(
            GridIndex::build(&[Point::new(f64::NAN, 0.0)], Radius::default()),
            Err(GeomError::NonFinite)
        );
    }
}
