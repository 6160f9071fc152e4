//! Seeded point generators and the general-position margin used by tests
//! and the command line.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geom::{GeomError, Point, Radius};
use crate::grid::GridIndex;

/// Smallest allowed gap between a squared rescaled distance and 1.
pub const MARGIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, String> {
        if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) || x1 <= x0 || y1 <= y0 {
            return Err(format!("invalid bounding box {x0},{y0},{x1},{y1}"));
        }
        Ok(BBox { x0, y0, x1, y1 })
    }

    pub fn square(side: f64) -> Self {
        BBox {
            x0: 0.0,
            y0: 0.0,
            x1: side,
            y1: side,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(rng.gen_range(self.x0..self.x1), rng.gen_range(self.y0..self.y1))
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }
}

impl FromStr for BBox {
    type Err = String;

    /// `x0,y0,x1,y1`.
    fn from_str(s: &str) -> Result<Self, String> {
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad bbox `{s}`: {e}")))
            .collect::<Result<_, _>>()?;
        match v[..] {
            [x0, y0, x1, y1] => BBox::new(x0, y0, x1, y1),
            _ => Err(format!("bbox needs four numbers, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dist {
    Uniform,
    /// Gaussian blobs around uniform centers.
    Clustered,
    /// A slightly jittered square lattice.
    Grid,
    /// Vertical lines 4 apart. Upper arcs about centers on one line are
    /// nested, so cell pairs have almost no arc crossings.
    Columnar,
}

impl FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "uniform" => Ok(Dist::Uniform),
            "clustered" => Ok(Dist::Clustered),
            "grid" => Ok(Dist::Grid),
            "columnar" => Ok(Dist::Columnar),
            _ => Err(format!("unknown distribution `{s}`")),
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Dist::Uniform => "uniform",
            Dist::Clustered => "clustered",
            Dist::Grid => "grid",
            Dist::Columnar => "columnar",
        })
    }
}

/// `n` points of the given distribution inside `bbox`.
pub fn generate<R: Rng + ?Sized>(dist: Dist, n: usize, bbox: BBox, rng: &mut R) -> Vec<Point> {
    match dist {
        Dist::Uniform => (0..n).map(|_| bbox.sample(rng)).collect(),
        Dist::Clustered => clustered(n, bbox, rng),
        Dist::Grid => lattice(n, bbox, rng),
        Dist::Columnar => {
            let lines = ((bbox.width() / 4.0).floor() as usize + 1).max(1);
            (0..n)
                .map(|_| {
                    let x = bbox.x0 + 4.0 * rng.gen_range(0..lines) as f64;
                    Point::new(x, rng.gen_range(bbox.y0..bbox.y1))
                })
                .collect()
        }
    }
}

fn clustered<R: Rng + ?Sized>(n: usize, bbox: BBox, rng: &mut R) -> Vec<Point> {
    let k = ((n as f64).sqrt() / 4.0).ceil().max(1.0) as usize;
    let centers: Vec<Point> = (0..k).map(|_| bbox.sample(rng)).collect();
    let sigma = 0.05 * bbox.width().min(bbox.height());
    let normal = Normal::new(0.0, sigma).expect("positive deviation");
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let c = centers[rng.gen_range(0..k)];
        let p = Point::new(c.x + normal.sample(rng), c.y + normal.sample(rng));
        if bbox.contains(p) {
            out.push(p);
        }
    }
    out
}

fn lattice<R: Rng + ?Sized>(n: usize, bbox: BBox, rng: &mut R) -> Vec<Point> {
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    let dx = bbox.width() / side as f64;
    let dy = bbox.height() / side as f64;
    (0..n)
        .map(|i| {
            let (a, b) = ((i % side) as f64, (i / side) as f64);
            let jx = rng.gen_range(0.0..1e-3) * dx;
            let jy = rng.gen_range(0.0..1e-3) * dy;
            Point::new(bbox.x0 + (a + 0.5) * dx + jx, bbox.y0 + (b + 0.5) * dy + jy)
        })
        .collect()
}

/// Indices of centers `q` having a point of `p` whose squared rescaled
/// distance to them lies within `margin` of 1.
pub fn margin_violations(p: &[Point], q: &[Point], radius: Radius, margin: f64) -> Result<Vec<usize>, GeomError> {
    let wide = Radius::new(radius.get() * (1.0 + margin).sqrt() * (1.0 + 1e-12))?;
    let grid = GridIndex::build(p, wide)?;
    let mut bad = Vec::new();
    for (j, c) in q.iter().enumerate() {
        let Some(cell) = grid.locate(*c) else { continue };
        let cs = radius.rescale(*c);
        let hit = grid.neighbors(cell).iter().any(|&d| {
            grid.cell_ids(d).iter().any(|&i| {
                let d2 = radius.rescale(p[i as usize]).dist2(&cs);
                (d2 - 1.0).abs() < margin
            })
        });
        if hit {
            bad.push(j);
        }
    }
    Ok(bad)
}

/// Redraws every center of `q` that violates the margin against `p` until
/// none does.
pub fn enforce_margin<R, F>(p: &[Point], q: &mut [Point], radius: Radius, mut redraw: F, rng: &mut R) -> Result<(), GeomError>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Point,
{
    for _ in 0..64 {
        let bad = margin_violations(p, q, radius, MARGIN)?;
        if bad.is_empty() {
            return Ok(());
        }
        for j in bad {
            q[j] = redraw(rng);
        }
    }
    Err(GeomError::InvalidRadius(radius.get()))
}

/// Points of the given distribution with no pair at distance within
/// `MARGIN` of `radius` (a point set serving as its own centers).
pub fn generate_with_margin<R: Rng + ?Sized>(dist: Dist, n: usize, bbox: BBox, radius: Radius, rng: &mut R) -> Vec<Point> {
    let mut pts = generate(dist, n, bbox, rng);
    for _ in 0..64 {
        let bad = margin_violations(&pts, &pts, radius, MARGIN).expect("finite input");
        if bad.is_empty() {
            break;
        }
        for j in bad {
            pts[j] = generate(dist, 1, bbox, rng)[0];
        }
    }
    pts
}

/// Adds `count` points at distance 1 (up to rounding) from random existing
/// points.
pub fn plant_unit_pairs<R: Rng + ?Sized>(pts: &mut Vec<Point>, count: usize, rng: &mut R) {
    if pts.is_empty() {
        return;
    }
    for _ in 0..count {
        let a = pts[rng.gen_range(0..pts.len())];
        let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        pts.push(Point::new(a.x + t.cos(), a.y + t.sin()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_stay_in_box_and_are_seeded() {
        let b = BBox::new(-1.0, 2.0, 5.0, 4.0).unwrap();
        for d in [Dist::Uniform, Dist::Clustered, Dist::Grid, Dist::Columnar] {
            let a = generate(d, 500, b, &mut ChaCha8Rng::seed_from_u64(1));
            let c = generate(d, 500, b, &mut ChaCha8Rng::seed_from_u64(1));
            assert_eq!(a, c);
            assert_eq!(a.len(), 500);
            assert!(a.iter().all(|p| b.contains(*p)), "{d}");
            assert_eq!(d.to_string().parse::<Dist>().unwrap(), d);
        }
        assert_eq!("0,0,2,3".parse::<BBox>().unwrap(), BBox::new(0.0, 0.0, 2.0, 3.0).unwrap());
        assert!("0,0,2".parse::<BBox>().is_err());
        assert!("0,0,-2,3".parse::<BBox>().is_err());
    }

    #[test]
    fn margin_is_enforced() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = vec![Point::new(0.0, 0.0)];
        let mut q = vec![Point::new(1.0, 0.0), Point::new(0.5, 0.0), Point::new(0.0, 1.0 + 1e-12)];
        assert_eq!(margin_violations(&p, &q, Radius::default(), MARGIN).unwrap(), vec![0, 2]);
        let b = BBox::square(2.0);
        enforce_margin(&p, &mut q, Radius::default(), |r| b.sample(r), &mut rng).unwrap();
        assert!(margin_violations(&p, &q, Radius::default(), MARGIN).unwrap().is_empty());
        let mut pts = generate_with_margin(Dist::Uniform, 300, b, Radius::default(), &mut rng);
        assert!(margin_violations(&pts, &pts, Radius::default(), MARGIN).unwrap().is_empty());
        plant_unit_pairs(&mut pts, 3, &mut rng);
        assert!(margin_violations(&pts, &pts, Radius::default(), MARGIN).unwrap().len() >= 2);
    }
}
