//! Self-checks of every structure against the brute-force references,
//! grouped into suites.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::batched::{batched_count, count_circle_intersections, unit_distance_detect, Algo, BatchConfig, UNIT_DISTANCE_TOL};
use crate::cutting::{crossing_subset, hierarchical_cutting, CuttingConfig};
use crate::distsel::{count_pairs_within, decide, select_distance};
use crate::gen::{generate, generate_with_margin, plant_unit_pairs, BBox, Dist};
use crate::geom::{CellPairFrame, Point, Radius, Square, CELL_SIDE};
use crate::grid::GridIndex;
use crate::io::{decode_index, encode_index};
use crate::oracle;
use crate::ops::Ops;
use crate::par::Parallelism;
use crate::partition::{build_partition, build_test_set, GlobalIndex, IndexKind, Mode, PartitionConfig, TradeoffIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Grid,
    Cutting,
    Partition,
    Query,
    Tradeoff,
    Batched,
    Distsel,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::Grid,
        Suite::Cutting,
        Suite::Partition,
        Suite::Query,
        Suite::Tradeoff,
        Suite::Batched,
        Suite::Distsel,
    ];
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "grid" => Suite::Grid,
            "cutting" => Suite::Cutting,
            "partition" => Suite::Partition,
            "query" => Suite::Query,
            "tradeoff" => Suite::Tradeoff,
            "batched" => Suite::Batched,
            "distsel" => Suite::Distsel,
            "all" => Suite::All,
            _ => return Err(format!("unknown suite `{s}`")),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Suite::Grid => "grid",
            Suite::Cutting => "cutting",
            Suite::Partition => "partition",
            Suite::Query => "query",
            Suite::Tradeoff => "tradeoff",
            Suite::Batched => "batched",
            Suite::Distsel => "distsel",
            Suite::All => "all",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub suite: Suite,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

struct Checks {
    suite: Suite,
    out: Vec<Check>,
}

impl Checks {
    fn add(&mut self, name: &str, pass: bool, detail: String) {
        self.out.push(Check {
            suite: self.suite,
            name: name.to_string(),
            pass,
            detail,
        });
    }

    fn fail(&mut self, name: &str, err: impl fmt::Display) {
        self.add(name, false, format!("error: {err}"));
    }
}

/// Runs `suite` (all suites for [`Suite::All`]) at size `n`.
pub fn run(suite: Suite, n: usize, seed: u64) -> Vec<Check> {
    if suite == Suite::All {
        return Suite::EACH.iter().flat_map(|&s| run(s, n, seed)).collect();
    }
    let mut c = Checks { suite, out: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (suite as u64).wrapping_mul(0x9E37_79B9));
    let n = n.max(16);
    match suite {
        Suite::Grid => grid_suite(&mut c, n, &mut rng),
        Suite::Cutting => cutting_suite(&mut c, &mut rng),
        Suite::Partition => partition_suite(&mut c, n, &mut rng),
        Suite::Query => query_suite(&mut c, n, &mut rng),
        Suite::Tradeoff => tradeoff_suite(&mut c, n, &mut rng),
        Suite::Batched => batched_suite(&mut c, n, &mut rng),
        Suite::Distsel => distsel_suite(&mut c, n, &mut rng),
        Suite::All => unreachable!(),
    }
    c.out
}

fn spread_box(n: usize) -> BBox {
    BBox::square(((n as f64) / 64.0).sqrt().max(2.0))
}

fn grid_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let pts = generate(Dist::Uniform, n, spread_box(n), rng);
    let grid = match GridIndex::build(&pts, Radius::default()) {
        Ok(g) => g,
        Err(e) => return c.fail("build", e),
    };
    let mut ok = grid.num_points() == n;
    for id in grid.cells_with_points() {
        let sq = grid.cell_square(id);
        ok &= grid.cell_points(id).iter().all(|p| sq.contains(*p, 1e-12));
        ok &= sq.side <= CELL_SIDE + 1e-12;
    }
    c.add("points lie in their cells", ok, format!("{} cells", grid.num_cells()));
    let b = spread_box(n);
    let mut missed = 0;
    for _ in 0..1000 {
        let q = Point::new(rng.gen_range(b.x0 - 1.0..b.x1 + 1.0), rng.gen_range(b.y0 - 1.0..b.y1 + 1.0));
        let want = oracle::brute_count(&pts, q, Radius::default(), Mode::Inside);
        let got: u64 = match grid.locate(q) {
            None => 0,
            Some(cell) => grid
                .neighbors(cell)
                .iter()
                .flat_map(|&d| grid.cell_points(d))
                .filter(|p| p.dist2(&q) <= 1.0)
                .count() as u64,
        };
        missed += u64::from(got != want);
    }
    c.add("neighbour cells cover every disk", missed == 0, format!("{missed} of 1000 queries differ"));
}

fn pair_frame() -> CellPairFrame {
    let s = CELL_SIDE;
    CellPairFrame::new(Square { x_lo: 0.0, y_lo: -s, side: s }, Square { x_lo: 0.0, y_lo: 0.0, side: s }).expect("adjacent cells")
}

fn source_centers(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    let src = pair_frame().source_local();
    (0..n)
        .map(|_| Point::new(rng.gen_range(src.x_lo..src.x_hi()), rng.gen_range(src.y_lo..src.y_hi())))
        .collect()
}

fn target_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n).map(|_| Point::new(rng.gen_range(0.0..CELL_SIDE), rng.gen_range(0.0..CELL_SIDE))).collect()
}

fn cutting_suite(c: &mut Checks, rng: &mut ChaCha8Rng) {
    let arcs = source_centers(rng, 512);
    let region = pair_frame().enlarged_target();
    let all: Vec<u32> = (0..arcs.len() as u32).collect();
    for r in [4.0, 16.0] {
        let cut = match hierarchical_cutting(&region, &arcs, None, r, &CuttingConfig::default(), rng, &mut Ops::new()) {
            Ok(cut) => cut,
            Err(e) => return c.fail(&format!("build r={r}"), e),
        };
        let mut bound_ok = true;
        let mut recount_ok = true;
        for (i, level) in cut.levels.iter().enumerate() {
            for cell in level {
                bound_ok &= cell.crossing.len() as f64 <= cut.bound(i) + 1e-9;
                recount_ok &= crossing_subset(&cell.trap, &arcs, &all, &mut Ops::new()).is_ok_and(|v| v == cell.crossing);
            }
        }
        c.add(&format!("crossing bound per level, r={r}"), bound_ok, format!("{} levels, {} cells", cut.levels.len(), cut.num_cells()));
        c.add(&format!("crossing lists match recount, r={r}"), recount_ok, String::new());
        let mut cover_ok = 0;
        for _ in 0..10_000 {
            let x = rng.gen_range(0.0..CELL_SIDE);
            let p = Point::new(x, rng.gen_range(0.0..region.top_at(x)));
            cover_ok += u32::from(cut.levels.iter().all(|l| l.iter().filter(|k| k.trap.contains(p)).count() == 1));
        }
        c.add(&format!("cells cover each level once, r={r}"), cover_ok == 10_000, format!("{cover_ok} of 10000 samples"));
        let mut nest_ok = true;
        for lvl in 1..cut.levels.len() {
            for cell in &cut.levels[lvl] {
                let parent = &cut.levels[lvl - 1][cell.parent as usize];
                nest_ok &= cell.trap.corners().iter().all(|p| parent.trap.violation(*p) < 1e-9);
            }
        }
        c.add(&format!("children inside parents, r={r}"), nest_ok, String::new());
    }
}

fn partition_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let np = n.min(4096);
    let pts = target_points(rng, np);
    let frame = pair_frame();
    for s in [16usize, 64] {
        if 2 * s > np {
            continue;
        }
        let part = match build_partition(&pts, &frame, s, &PartitionConfig::default(), rng) {
            Ok(p) => p,
            Err(e) => return c.fail(&format!("build s={s}"), e),
        };
        let sizes_ok = part.classes.iter().all(|k| k.members.len() >= s && k.members.len() < 2 * s);
        c.add(&format!("class sizes in [s, 2s), s={s}"), sizes_ok, format!("{} classes", part.classes.len()));
        let mut seen = vec![0u32; np];
        let mut inside = true;
        for k in &part.classes {
            for &m in &k.members {
                seen[m as usize] += 1;
                inside &= k.trap.violation(pts[m as usize]) < 1e-9;
            }
        }
        c.add(&format!("classes partition the points, s={s}"), seen.iter().all(|&v| v == 1) && inside, String::new());
        let (test, _) = match build_test_set(&pts, &frame, np / s, &CuttingConfig::default(), rng) {
            Ok(t) => t,
            Err(e) => return c.fail("test set", e),
        };
        let mut probes = test.centers.clone();
        probes.extend(source_centers(rng, 1000));
        let cross = part.crossing_number(&probes);
        let bound = 8.0 * ((np / s) as f64).sqrt();
        c.add(&format!("crossing number within 8 sqrt(n/s), s={s}"), cross as f64 <= bound, format!("{cross} <= {bound:.1}"));
    }
}

fn compare_queries(c: &mut Checks, name: &str, idx: &GlobalIndex, pts: &[Point], b: BBox, rng: &mut ChaCha8Rng) {
    let mut bad = 0;
    for _ in 0..1000 {
        let q = Point::new(rng.gen_range(b.x0 - 1.0..b.x1 + 1.0), rng.gen_range(b.y0 - 1.0..b.y1 + 1.0));
        for mode in [Mode::Inside, Mode::Outside] {
            let want = oracle::brute_count(pts, q, idx.radius(), mode);
            bad += u32::from(idx.query(q, mode).ok() != Some(want));
        }
    }
    c.add(name, bad == 0, format!("{bad} of 2000 answers differ"));
}

fn query_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let b = spread_box(n);
    for dist in [Dist::Uniform, Dist::Clustered] {
        let pts = generate(dist, n, b, rng);
        let idx = match GlobalIndex::build(&pts, Radius::default(), IndexKind::PartitionTree, &PartitionConfig::default(), rng.gen(), Parallelism::Parallel) {
            Ok(i) => i,
            Err(e) => return c.fail("build", e),
        };
        compare_queries(c, &format!("partition-tree index equals brute force, {dist}"), &idx, &pts, b, rng);
        let back = encode_index(&idx).map_err(|e| e.to_string()).and_then(|v| decode_index(&v).map_err(|e| e.to_string()));
        match back {
            Ok(back) => {
                let same = (0..1000).all(|_| {
                    let q = b.sample(rng);
                    back.counts(q) == idx.counts(q)
                });
                c.add(&format!("index file round trip, {dist}"), same && back == idx, String::new());
            }
            Err(e) => c.fail("index file round trip", e),
        }
    }
    let radius = Radius::new(1.7).expect("positive");
    let pts = generate(Dist::Uniform, n, b, rng);
    match GlobalIndex::build(&pts, radius, IndexKind::PartitionTree, &PartitionConfig::default(), rng.gen(), Parallelism::Parallel) {
        Ok(idx) => compare_queries(c, "radius 1.7 equals brute force", &idx, &pts, b, rng),
        Err(e) => c.fail("build radius 1.7", e),
    }
}

fn tradeoff_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let b = spread_box(n);
    let pts = generate(Dist::Uniform, n, b, rng);
    for r in [1.0, 4.0, 16.0] {
        match GlobalIndex::build(&pts, Radius::default(), IndexKind::Tradeoff { r }, &PartitionConfig::default(), rng.gen(), Parallelism::Parallel) {
            Ok(idx) => compare_queries(c, &format!("trade-off index r={r} equals brute force"), &idx, &pts, b, rng),
            Err(e) => c.fail(&format!("build r={r}"), e),
        }
    }
    let local = target_points(rng, n.min(1024));
    match TradeoffIndex::build(&local, pair_frame(), 8.0, &PartitionConfig::default(), rng) {
        Ok(t) => c.add("canonical counts match recount", t.verify_canonical(&local), String::new()),
        Err(e) => c.fail("single pair build", e),
    }
}

fn batched_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let b = BBox::square(2.0);
    let cfg = BatchConfig::default();
    for (np, nq) in [(n, n), (n, (n / 8).max(1)), ((n / 8).max(1), n)] {
        let p = generate(Dist::Uniform, np, b, rng);
        let q = generate(Dist::Uniform, nq, b, rng);
        let want = oracle::brute_batched(&p, &q, Radius::default());
        for algo in [Algo::PrimalDual, Algo::Chi] {
            match batched_count(&p, &q, Radius::default(), algo, &cfg, rng.gen(), Parallelism::Parallel) {
                Ok(rep) => c.add(&format!("{algo:?} n={np} m={nq} equals brute force"), rep.counts == want, format!("{} ops", rep.stats.ops)),
                Err(e) => c.fail(&format!("{algo:?} n={np} m={nq}"), e),
            }
        }
    }
    let centers = generate(Dist::Clustered, n, BBox::square(8.0), rng);
    match count_circle_intersections(&centers, 0.5, rng.gen(), Parallelism::Parallel) {
        Ok(chi) => {
            let want = oracle::brute_circle_pairs(&centers, 0.5);
            c.add("circle intersections equal brute force", chi == want, format!("{chi} vs {want}"));
        }
        Err(e) => c.fail("circle intersections", e),
    }
    let mut bad = 0;
    for t in 0..20 {
        let mut pts = generate_with_margin(Dist::Uniform, 200, BBox::square(4.0), Radius::default(), rng);
        if t % 2 == 0 {
            plant_unit_pairs(&mut pts, 1 + t % 3, rng);
        }
        let want = oracle::brute_unit_distance(&pts, UNIT_DISTANCE_TOL);
        bad += u32::from(unit_distance_detect(&pts, rng.gen(), Parallelism::Parallel).map(|u| u.exists) != Ok(want));
    }
    c.add("unit distance detection equals brute force", bad == 0, format!("{bad} of 20 instances differ"));
}

fn distsel_suite(c: &mut Checks, n: usize, rng: &mut ChaCha8Rng) {
    let np = n.min(300);
    let pts = generate(Dist::Uniform, np, BBox::square(3.0), rng);
    let sorted = oracle::brute_distances(&pts);
    let total = sorted.len() as u64;
    let mut bad = 0;
    for _ in 0..10 {
        let k = rng.gen_range(1..=total);
        bad += u32::from(select_distance(&pts, k, rng).ok().map(f64::to_bits) != Some(sorted[(k - 1) as usize].to_bits()));
    }
    c.add("selected distance equals sorted pairs", bad == 0, format!("{bad} of 10 ranks differ"));
    let mut ok = true;
    for q in [0.25, 0.5, 0.75] {
        let lambda = sorted[((total as f64 * q) as usize).min(sorted.len() - 1)] * (1.0 + 1e-7);
        ok &= count_pairs_within(&pts, lambda, rng.gen(), Parallelism::Parallel).ok() == Some(oracle::brute_pairs_within(&pts, lambda));
    }
    c.add("pair counts equal brute force at quartiles", ok, String::new());
    let k = total / 3;
    let mut last = false;
    let mut monotone = true;
    for i in 0..=20 {
        let lambda = sorted[sorted.len() - 1] * i as f64 / 20.0 + 1e-9;
        let d = decide(&pts, lambda, k, rng.gen(), Parallelism::Parallel).unwrap_or(false);
        monotone &= !last || d;
        last = d;
    }
    c.add("decision monotone in lambda", monotone && last, String::new());
}
