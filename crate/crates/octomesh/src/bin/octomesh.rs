//! Command-line front end: generate meshes, benchmark backends, inspect keys.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use octomesh::export;
use octomesh::geometry::GeometryPoints;
use octomesh::morton::{self, DomainBox, FaceDirection, MeshConfig, MortonKey, Sign};
use octomesh::pipeline::{self, BenchConfig, GenerateConfig, GeometrySource};
use octomesh::{Backend, MeshError};

#[derive(Parser)]
#[command(name = "octomesh", version, about = "2:1-balanced Cartesian octree mesh generator", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a balanced mesh around an immersed geometry.
    Generate(GenerateArgs),
    /// Benchmark backends over a list of maximum levels.
    Bench(BenchArgs),
    /// Decode a single Morton key: level, centroid, siblings, boundaries.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct GeometryArgs {
    /// STL geometry file (binary or ASCII), 3-D only.
    #[arg(long, conflicts_with = "points")]
    stl: Option<PathBuf>,
    /// Plain-text 2-D point list: one "x y" per line, '#' comments.
    #[arg(long)]
    points: Option<PathBuf>,
}

impl GeometryArgs {
    fn source(&self) -> Result<GeometrySource, clap::Error> {
        match (&self.stl, &self.points) {
            (Some(p), None) => Ok(GeometrySource::StlPath(p.clone())),
            (None, Some(p)) => Ok(GeometrySource::PointsPath(p.clone())),
            _ => Err(clap::Error::raw(
                clap::error::ErrorKind::MissingRequiredArgument,
                "exactly one of --stl or --points is required\n",
            )),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Spatial dimension.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=3))]
    dim: u32,
    /// Target (finest) refinement level.
    #[arg(long)]
    max_level: u32,
    /// Key width in bits.
    #[arg(long, default_value_t = 128)]
    key_bits: u32,
    /// Leaf store backend.
    #[arg(long, default_value = "ordered")]
    backend: Backend,
    /// Explicit domain "cx,cy,cz,lx,ly,lz" (4 numbers in 2-D); fitted
    /// around the geometry when omitted.
    #[arg(long)]
    domain: Option<String>,
    /// Pad factor for the auto-fitted domain.
    #[arg(long, default_value_t = 1.5)]
    padding: f64,
    /// Geometry points fed to the encoder: "centroids" or "all".
    #[arg(long, default_value = "centroids")]
    geometry_points: GeometryPoints,
    /// Build a coarse voxel index at this level and report its size.
    #[arg(long)]
    voxel_level: Option<u32>,
    /// VTK output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON output path.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Deduplicate shared cell corners in the VTK output.
    #[arg(long)]
    merge_points: bool,
    /// Z-order key dump path (ordered backend only).
    #[arg(long)]
    zorder: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..=3))]
    dim: u32,
    /// Comma-separated maximum levels, e.g. "4,5,6".
    #[arg(long)]
    levels: String,
    /// Comma-separated backends.
    #[arg(long, default_value = "ordered,hashed")]
    backends: String,
    /// Repetitions per cell; medians are reported.
    #[arg(long, default_value_t = 3)]
    repeat: usize,
    #[arg(long, default_value_t = 128)]
    key_bits: u32,
    #[arg(long, default_value_t = 1.5)]
    padding: f64,
    /// Report JSON output path (stdout when omitted).
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=3))]
    dim: u32,
    /// Comma-grouped key, e.g. "001,000,101".
    #[arg(long)]
    key: String,
    /// Domain "cx,cy,cz,lx,ly,lz" (4 numbers in 2-D).
    #[arg(long)]
    domain: String,
    /// Neighbor query axis (0-based); requires --sign.
    #[arg(long, requires = "sign")]
    axis: Option<u32>,
    /// Neighbor query direction: "+" or "-".
    #[arg(long, requires = "axis")]
    sign: Option<String>,
}

fn parse_domain(text: &str, dim: u32) -> octomesh::Result<DomainBox> {
    let nums: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshError::InvalidConfig(format!("cannot parse domain '{text}'")))?;
    let d = dim as usize;
    if nums.len() != 2 * d {
        return Err(MeshError::InvalidConfig(format!(
            "domain needs {} comma-separated numbers in {dim}-D",
            2 * d
        )));
    }
    DomainBox::new(&nums[..d], &nums[d..])
}

fn run_generate(args: GenerateArgs) -> octomesh::Result<()> {
    let source = args.geometry.source().map_err(usage_to_mesh)?;
    let domain = args
        .domain
        .as_deref()
        .map(|t| parse_domain(t, args.dim))
        .transpose()?;
    let config = GenerateConfig {
        source,
        dim: args.dim,
        key_bits: args.key_bits,
        max_level: args.max_level,
        backend: args.backend,
        domain,
        pad_factor: args.padding,
        point_mode: args.geometry_points,
        voxel_level: args.voxel_level,
        membership: octomesh::QueueMembership::Hashed,
    };
    let (tree, mut stats) = pipeline::generate(&config)?;

    let t = std::time::Instant::now();
    if let Some(path) = &args.out {
        export::write_vtk(&tree, path, args.merge_points)?;
    }
    if let Some(path) = &args.zorder {
        export::dump_zorder(&tree, path)?;
    }
    stats.phases.export_ms = t.elapsed().as_secs_f64() * 1000.0;
    if let Some(path) = &args.stats {
        export::write_stats_json(&stats, path)?;
    }

    eprintln!(
        "generated {} leaves ({} backend, {} passes) in {:.1} ms",
        stats.total_leaves,
        stats.backend,
        stats.passes,
        stats.phases.total_ms()
    );
    Ok(())
}

fn run_bench(args: BenchArgs) -> octomesh::Result<()> {
    let source = args.geometry.source().map_err(usage_to_mesh)?;
    let levels: Vec<u32> = args
        .levels
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshError::InvalidConfig(format!("cannot parse levels '{}'", args.levels)))?;
    let backends: Vec<Backend> = args
        .backends
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<octomesh::Result<_>>()?;
    let max = *levels.iter().max().ok_or_else(|| {
        MeshError::InvalidConfig("at least one level required".into())
    })?;
    let mut base = GenerateConfig::new(source, args.dim, max);
    base.key_bits = args.key_bits;
    base.pad_factor = args.padding;
    let report = pipeline::bench(&BenchConfig { base, levels, backends, repeat: args.repeat })?;
    match &args.stats {
        Some(path) => export::write_bench_json(&report, path)?,
        None => {
            let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?;
            println!("{text}");
        }
    }
    for cell in &report.cells {
        eprintln!(
            "level {:2}  {:7}  median {:9.2} ms  {:8} leaves  ~{} bytes",
            cell.max_level, cell.backend, cell.median_ms, cell.total_leaves, cell.estimated_bytes
        );
    }
    for m in &report.membership {
        eprintln!(
            "level {:2}  queue membership: hashed {:9.2} ms, linear scan {:9.2} ms, sets equal: {}",
            m.max_level, m.hashed_ms, m.linear_scan_ms, m.sets_equal
        );
    }
    Ok(())
}

fn run_inspect(args: InspectArgs) -> octomesh::Result<()> {
    let (key, level) = MortonKey::parse_grouped(&args.key, args.dim)?;
    let domain = parse_domain(&args.domain, args.dim)?;
    let config = MeshConfig::new(args.dim, level.max(1))?;
    let centroid = morton::centroid(key, level, &domain, &config)?;
    let h = morton::edge_length(level, &domain, &config)?;
    let d = args.dim as usize;

    println!("key      {}", key.to_grouped_string(args.dim, level));
    println!("level    {level}");
    println!("centroid {:?}", &centroid[..d]);
    println!("edge     {:?}", &h[..d]);

    println!("siblings:");
    for axis in 0..d {
        let sib = morton::sibling_key(key, level, axis, &config)?;
        println!("  axis {axis}: {}", sib.to_grouped_string(args.dim, level));
    }
    println!("boundary faces:");
    for dir in FaceDirection::all(d) {
        let boundary = morton::is_boundary(key, level, dir, &config);
        println!("  {dir}: {}", if boundary { "domain boundary" } else { "interior" });
    }

    if let (Some(axis), Some(sign)) = (args.axis, &args.sign) {
        let sign = match sign.as_str() {
            "+" | "plus" => Sign::Plus,
            "-" | "minus" => Sign::Minus,
            other => {
                return Err(MeshError::InvalidConfig(format!("sign must be + or -, got '{other}'")))
            }
        };
        if axis >= args.dim {
            return Err(MeshError::InvalidConfig(format!("axis {axis} out of range")));
        }
        let dir = FaceDirection { axis: axis as usize, sign };
        match morton::same_level_neighbor_key(key, level, dir, &config) {
            Some(n) => println!("neighbor {dir}: {}", n.to_grouped_string(args.dim, level)),
            None => println!("neighbor {dir}: domain boundary"),
        }
    }
    Ok(())
}

fn usage_to_mesh(e: clap::Error) -> MeshError {
    MeshError::InvalidConfig(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Bench(args) => run_bench(args),
        Command::Inspect(args) => run_inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // Bad flag combinations surface as config errors: usage exit code.
        Err(MeshError::InvalidConfig(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
