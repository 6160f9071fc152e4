use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use udrs_core::batched::{batched_count, count_circle_intersections, unit_distance_detect, Algo, BatchConfig};
use udrs_core::distsel::select_distance;
use udrs_core::gen::{generate, BBox, Dist};
use udrs_core::geom::{Point, Radius};
use udrs_core::io::{format_points, load_index, parse_points, save_index};
use udrs_core::par::Parallelism;
use udrs_core::partition::{GlobalIndex, IndexKind, Mode, PartitionConfig};
use udrs_core::verify::{self, Suite};

/// Unit-disk range counting.
#[derive(Parser)]
#[command(name = "udrs", version)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a point file.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "uniform")]
        dist: DistArg,
        #[arg(long, default_value = "0,0,1,1")]
        bbox: BBox,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an index over a point file.
    Build {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value = "partition-tree")]
        structure: StructureArg,
        /// Cutting parameter of the trade-off structure.
        #[arg(long, default_value_t = 4.0)]
        r: f64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count points of an index inside or outside a disk.
    Query {
        #[arg(long)]
        index: PathBuf,
        /// Disk center as `x,y`.
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value = "inside")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// For every center, count the points in the disk about it.
    Batch {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        centers: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value = "primal-dual")]
        algo: AlgoArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print operation counters to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Count intersecting pairs of circles of the given radius.
    Circles {
        #[arg(long)]
        centers: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// The k-th smallest pairwise distance.
    Select {
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Whether some pair of points is at distance 1.
    UnitDistance {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Check the structures against brute force.
    Verify {
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 2048)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Measure batched counting over a range of sizes.
    Bench {
        #[arg(long, default_value = "batched")]
        suite: BenchSuite,
        #[arg(long, value_delimiter = ',', default_value = "1024,2048,4096,8192,16384")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "primal-dual")]
        algo: AlgoArg,
        /// Side of the square the points are drawn from.
        #[arg(long, default_value_t = 2.0)]
        side: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fill the wall_ms column.
        #[arg(long)]
        timing: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Clustered,
    Grid,
    Columnar,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureArg {
    PartitionTree,
    Tradeoff,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Inside,
    Outside,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    PrimalDual,
    Chi,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchSuite {
    Batched,
}

impl From<AlgoArg> for Algo {
    fn from(a: AlgoArg) -> Algo {
        match a {
            AlgoArg::PrimalDual => Algo::PrimalDual,
            AlgoArg::Chi => Algo::Chi,
            AlgoArg::Brute => Algo::Brute,
        }
    }
}

enum Failure {
    Usage(String),
    Parse(String),
    Index(String),
    Verify(usize),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Index(_) => 4,
            Failure::Verify(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Parse(m) | Failure::Index(m) | Failure::Other(m) => m.clone(),
            Failure::Verify(k) => format!("{k} checks failed"),
        }
    }
}

fn other(e: impl std::fmt::Display) -> Failure {
    Failure::Other(e.to_string())
}

fn read_points(path: &Path) -> Result<Vec<Point>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Other(format!("{}: {e}", path.display())))?;
    parse_points(&text).map_err(|e| Failure::Parse(format!("{}:{}:{}: {}", path.display(), e.line, e.col, e.msg)))
}

fn radius(r: f64) -> Result<Radius, Failure> {
    Radius::new(r).map_err(|e| Failure::Usage(e.to_string()))
}

fn parse_center(s: &str) -> Result<Point, Failure> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::Parse(format!("center `{s}`: expected `x,y`")));
    }
    let mut xy = [0.0; 2];
    let mut col = 1;
    for (k, part) in parts.iter().enumerate() {
        match part.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => xy[k] = v,
            _ => return Err(Failure::Parse(format!("center `{s}`, column {col}: `{part}` is not a finite number"))),
        }
        col += part.chars().count() + 1;
    }
    Ok(Point::new(xy[0], xy[1]))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Other(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(other),
    }
}

/// Least-squares slope of `ln y` against `ln x` over positive pairs.
fn log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, y)| **x > 0.0 && **y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let par = if cli.sequential { Parallelism::Sequential } else { Parallelism::Parallel };
    match cli.cmd {
        Cmd::Gen { n, dist, bbox, seed, out } => {
            let dist = match dist {
                DistArg::Uniform => Dist::Uniform,
                DistArg::Clustered => Dist::Clustered,
                DistArg::Grid => Dist::Grid,
                DistArg::Columnar => Dist::Columnar,
            };
            let pts = generate(dist, n, bbox, &mut ChaCha8Rng::seed_from_u64(seed));
            emit(&out, &format_points(&pts))
        }
        Cmd::Build { points, structure, r, radius: rad, seed, out } => {
            let pts = read_points(&points)?;
            let kind = match structure {
                StructureArg::PartitionTree => IndexKind::PartitionTree,
                StructureArg::Tradeoff if r.is_finite() && r >= 1.0 => IndexKind::Tradeoff { r },
                StructureArg::Tradeoff => return Err(Failure::Usage(format!("--r must be at least 1, got {r}"))),
            };
            let idx = GlobalIndex::build(&pts, radius(rad)?, kind, &PartitionConfig::default(), seed, par).map_err(other)?;
            save_index(&idx, &out).map_err(other)
        }
        Cmd::Query { index, center, mode, json } => {
            let q = parse_center(&center)?;
            let idx = load_index(&index).map_err(|e| match e {
                udrs_core::io::IndexError::Io(e) => Failure::Other(format!("{}: {e}", index.display())),
                e => Failure::Index(format!("{}: {e}", index.display())),
            })?;
            let (mode, name) = match mode {
                ModeArg::Inside => (Mode::Inside, "inside"),
                ModeArg::Outside => (Mode::Outside, "outside"),
            };
            let count = idx.query(q, mode).map_err(other)?;
            if json {
                let v = serde_json::json!({"count": count, "mode": name, "center": [q.x, q.y], "radius": idx.radius().get()});
                println!("{v}");
            } else {
                println!("{count}");
            }
            Ok(())
        }
        Cmd::Batch { points, centers, radius: rad, algo, seed, out, stats } => {
            let p = read_points(&points)?;
            let q = read_points(&centers)?;
            let rep = batched_count(&p, &q, radius(rad)?, algo.into(), &BatchConfig::default(), seed, par).map_err(other)?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["center_x", "center_y", "count"]).map_err(other)?;
            for (c, k) in q.iter().zip(&rep.counts) {
                w.write_record([c.x.to_string(), c.y.to_string(), k.to_string()]).map_err(other)?;
            }
            let bytes = w.into_inner().map_err(other)?;
            if stats {
                eprintln!("{}", serde_json::to_string(&rep.stats).map_err(other)?);
            }
            emit(&out, &String::from_utf8(bytes).map_err(other)?)
        }
        Cmd::Circles { centers, radius: rad, seed } => {
            let c = read_points(&centers)?;
            radius(rad)?;
            println!("{}", count_circle_intersections(&c, rad, seed, par).map_err(other)?);
            Ok(())
        }
        Cmd::Select { points, k, seed } => {
            let p = read_points(&points)?;
            let v = select_distance(&p, k, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(|e| Failure::Usage(e.to_string()))?;
            println!("{v}");
            Ok(())
        }
        Cmd::UnitDistance { points, seed, json } => {
            let p = read_points(&points)?;
            let u = unit_distance_detect(&p, seed, par).map_err(other)?;
            if json {
                println!("{}", serde_json::to_string(&u).map_err(other)?);
            } else {
                println!("{}", u.exists);
            }
            Ok(())
        }
        Cmd::Verify { suite, n, seed } => {
            let checks = verify::run(suite, n, seed);
            let failed = checks.iter().filter(|c| !c.pass).count();
            for c in &checks {
                println!("{:<10} {:<4} {}{}", c.suite, if c.pass { "PASS" } else { "FAIL" }, c.name, if c.detail.is_empty() { String::new() } else { format!(" ({})", c.detail) });
            }
            println!("{} passed, {failed} failed", checks.len() - failed);
            if failed > 0 {
                return Err(Failure::Verify(failed));
            }
            Ok(())
        }
        Cmd::Bench { suite: BenchSuite::Batched, sizes, algo, side, seed, timing, out } => {
            if !(side.is_finite() && side > 0.0) {
                return Err(Failure::Usage(format!("--side must be positive, got {side}")));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["n", "m", "wall_ms", "cells", "depth", "ops"]).map_err(other)?;
            let (mut ns, mut walls, mut cells, mut ops) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for &n in &sizes {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
                let p = generate(Dist::Uniform, n, BBox::square(side), &mut rng);
                let q = generate(Dist::Uniform, n, BBox::square(side), &mut rng);
                let t = Instant::now();
                let rep = batched_count(&p, &q, Radius::default(), algo.into(), &BatchConfig::default(), seed, par).map_err(other)?;
                let ms = t.elapsed().as_secs_f64() * 1e3;
                let wall = if timing { format!("{ms:.3}") } else { String::new() };
                w.write_record([n.to_string(), n.to_string(), wall, rep.stats.cells.to_string(), rep.stats.depth.to_string(), rep.stats.ops.to_string()]).map_err(other)?;
                ns.push(n as f64);
                walls.push(ms);
                cells.push(rep.stats.cells as f64);
                ops.push(rep.stats.ops as f64);
            }
            let fmt = |s: Option<f64>| s.map_or(String::new(), |v| format!("{v:.3}"));
            let wall = if timing { fmt(log_slope(&ns, &walls)) } else { String::new() };
            w.write_record(["slope".to_string(), String::new(), wall, fmt(log_slope(&ns, &cells)), String::new(), fmt(log_slope(&ns, &ops))]).map_err(other)?;
            emit(&out, &String::from_utf8(w.into_inner().map_err(other)?).map_err(other)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("udrs: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
