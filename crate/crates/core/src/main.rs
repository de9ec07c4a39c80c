use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use georva::attribmask::{read_cells_csv, read_polygons};
use georva::ensemble::DEFAULT_DENSE_BUDGET_BYTES;
use georva::geogrid::{GlobalGrid, DEFAULT_HEIGHT, DEFAULT_WIDTH, MEAN_EARTH_RADIUS_KM};
use georva::gridio::Kernel;
use georva::pipeline::{self, DensifyOptions, EvalOptions, MemberSpec, PrepareOptions, RunSpec};
use georva::{Error, Result};

#[derive(Parser)]
#[command(name = "georva", version, about = "Common-grid ensembling and recall-vs-area evaluation")]
struct Cli {
    /// TOML file with [grid], [prepare] and [eval] tables; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct GridArgs {
    /// Grid rows [default: 5400]
    #[arg(long)]
    height: Option<usize>,
    /// Grid columns [default: 10800]
    #[arg(long)]
    width: Option<usize>,
    /// Earth radius in km [default: 6371.0088]
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build bucket and land-cover masks on the common grid.
    Prepare {
        #[command(flatten)]
        grid: GridArgs,
        /// Population density raster (f32 GRV1)
        #[arg(long)]
        density: Option<PathBuf>,
        /// Number of log-density buckets [default: 4]
        #[arg(long)]
        buckets: Option<usize>,
        /// Density nodata sentinel [default: -1]
        #[arg(long, allow_hyphen_values = true)]
        density_nodata: Option<f32>,
        /// Land-cover code raster (u8/u16 GRV1)
        #[arg(long)]
        landcover: Option<PathBuf>,
        /// `src_code,dst_class` CSV; default is the seven-class ESA merge
        #[arg(long)]
        merge: Option<PathBuf>,
        /// mode or nearest [default: mode]
        #[arg(long)]
        kernel: Option<Kernel>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble predictors per image and write recall tables and curves.
    Eval(EvalArgs),
    /// Print dimensions and a value summary of a GRV1 raster.
    Info {
        path: PathBuf,
        #[arg(long, default_value_t = MEAN_EARTH_RADIUS_KM)]
        radius: f64,
    },
    /// Draw a bucket-balanced subset of a manifest.
    Rebalance {
        #[arg(long)]
        manifest: PathBuf,
        /// Bucket label raster
        #[arg(long)]
        buckets: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rasterize classifier cells into a label grid.
    RasterizeCells {
        #[command(flatten)]
        grid: GridArgs,
        /// `id,lat_min,lat_max,lon_min,lon_max` CSV
        #[arg(long, conflicts_with = "polygons", required_unless_present = "polygons")]
        cells: Option<PathBuf>,
        /// One polygon per line: `id;lon lat,lon lat,...`
        #[arg(long)]
        polygons: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Resample a raster onto a coarser grid.
    Downsample {
        input: PathBuf,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = "mode")]
        kernel: Kernel,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write one image's ensembled map as an f32 raster.
    Densify {
        #[command(flatten)]
        grid: GridArgs,
        /// `name=labels.grv:scores.csv`, repeatable
        #[arg(long = "member", required = true)]
        members: Vec<String>,
        /// Use this member's urban indicator instead of its scores
        #[arg(long)]
        urban_prior: Vec<String>,
        #[arg(long, default_value_t = 2)]
        urban_top: usize,
        #[arg(long)]
        image_id: String,
        #[arg(long, default_value = "mode")]
        kernel: Kernel,
        /// Refuse maps larger than this many bytes
        #[arg(long, default_value_t = DEFAULT_DENSE_BUDGET_BYTES)]
        budget_bytes: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// `name=labels.grv:scores.csv`, repeatable
    #[arg(long = "member")]
    members: Vec<String>,
    /// `name=member,member,urban:member`, repeatable
    #[arg(long = "run")]
    runs: Vec<String>,
    /// In the default run, replace this member by its urban indicator
    #[arg(long)]
    urban_prior: Option<String>,
    /// Classes kept by the urban indicator [default: 2]
    #[arg(long)]
    urban_top: Option<usize>,
    /// Bucket label raster for breakdowns and balancing
    #[arg(long)]
    buckets: Option<PathBuf>,
    #[arg(long)]
    balanced: bool,
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for all cores [default: 0]
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    kernel: Option<Kernel>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    grid: GridConfig,
    #[serde(default)]
    prepare: PrepareConfig,
    #[serde(default)]
    eval: EvalConfig,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct GridConfig {
    height: Option<usize>,
    width: Option<usize>,
    radius: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PrepareConfig {
    density: Option<PathBuf>,
    buckets: Option<usize>,
    density_nodata: Option<f32>,
    landcover: Option<PathBuf>,
    merge: Option<PathBuf>,
    kernel: Option<String>,
    out: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct EvalConfig {
    manifest: Option<PathBuf>,
    #[serde(default)]
    members: Vec<String>,
    #[serde(default)]
    runs: Vec<String>,
    urban_prior: Option<String>,
    urban_top: Option<usize>,
    buckets: Option<PathBuf>,
    balanced: Option<bool>,
    seed: Option<u64>,
    threads: Option<usize>,
    kernel: Option<String>,
    out: Option<PathBuf>,
}

/// Relative paths in the file are taken relative to the file's directory.
fn load_config(path: Option<&Path>) -> Result<(ConfigFile, PathBuf)> {
    let Some(path) = path else {
        return Ok((ConfigFile::default(), PathBuf::new()));
    };
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg: ConfigFile = toml::from_str(&text).map_err(|e| Error::Format {
        offset: e.span().map_or(0, |s| s.start as u64),
        msg: format!("{}: {}", path.display(), e.message()),
    })?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let p = &mut cfg.prepare;
    for field in [&mut p.density, &mut p.landcover, &mut p.merge, &mut p.out] {
        rebase(field, &base);
    }
    let e = &mut cfg.eval;
    for field in [&mut e.manifest, &mut e.buckets, &mut e.out] {
        rebase(field, &base);
    }
    Ok((cfg, base))
}

fn rebase(path: &mut Option<PathBuf>, base: &Path) {
    if let Some(p) = path {
        *p = base.join(&*p);
    }
}

fn resolve_grid(args: &GridArgs, cfg: &GridConfig) -> Result<GlobalGrid> {
    GlobalGrid::with_radius(
        args.height.or(cfg.height).unwrap_or(DEFAULT_HEIGHT),
        args.width.or(cfg.width).unwrap_or(DEFAULT_WIDTH),
        args.radius.or(cfg.radius).unwrap_or(MEAN_EARTH_RADIUS_KM),
    )
}

fn resolve_kernel(flag: Option<Kernel>, cfg: Option<&str>) -> Result<Kernel> {
    match (flag, cfg) {
        (Some(k), _) => Ok(k),
        (None, Some(s)) => s.parse(),
        (None, None) => Ok(Kernel::default()),
    }
}

/// Usage problems exit 1; library errors carry their own exit code.
enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn required<T>(v: Option<T>, what: &str) -> std::result::Result<T, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("missing {what} (flag or config)")))
}

fn parse_all<T: std::str::FromStr<Err = Error>>(flags: &[String], cfg: &[String]) -> Result<Vec<T>> {
    let src = if flags.is_empty() { cfg } else { flags };
    src.iter().map(|s| s.parse()).collect()
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let (cfg, base) = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Prepare {
            grid,
            density,
            buckets,
            density_nodata,
            landcover,
            merge,
            kernel,
            out,
        } => {
            let p = cfg.prepare;
            let opts = PrepareOptions {
                grid: resolve_grid(&grid, &cfg.grid)?,
                density: density.or(p.density),
                n_buckets: buckets.or(p.buckets).unwrap_or(4),
                density_nodata: density_nodata.or(p.density_nodata).unwrap_or(-1.0),
                landcover: landcover.or(p.landcover),
                merge: merge.or(p.merge),
                kernel: resolve_kernel(kernel, p.kernel.as_deref())?,
                out_dir: required(out.or(p.out), "--out")?,
            };
            for path in pipeline::prepare(&opts)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Eval(a) => {
            let e = cfg.eval;
            let mut members: Vec<MemberSpec> = parse_all(&a.members, &e.members)?;
            if a.members.is_empty() {
                for m in &mut members {
                    m.labels = base.join(&m.labels);
                    m.scores = base.join(&m.scores);
                }
            }
            if members.is_empty() {
                return Err(Failure::Usage("eval needs at least one --member".into()));
            }
            let opts = EvalOptions {
                grid: resolve_grid(&a.grid, &cfg.grid)?,
                manifest: required(a.manifest.or(e.manifest), "--manifest")?,
                members,
                runs: parse_all::<RunSpec>(&a.runs, &e.runs)?,
                urban_prior: a.urban_prior.or(e.urban_prior),
                urban_top: a.urban_top.or(e.urban_top).unwrap_or(2),
                buckets: a.buckets.or(e.buckets),
                balanced: a.balanced || e.balanced.unwrap_or(false),
                seed: a.seed.or(e.seed).unwrap_or(0),
                threads: a.threads.or(e.threads).unwrap_or(0),
                kernel: resolve_kernel(a.kernel, e.kernel.as_deref())?,
                out_dir: required(a.out.or(e.out), "--out")?,
            };
            let summary = pipeline::eval(&opts)?;
            println!(
                "evaluated {} images, skipped {}",
                summary.evaluated,
                summary.skipped.len()
            );
            for row in &summary.table {
                let rva: Vec<String> = row.rva.iter().map(|v| format!("{:.2}", v * 100.0)).collect();
                println!("{}: rva% {}", row.method, rva.join(" "));
            }
        }
        Command::Info { path, radius } => print!("{}", pipeline::info(&path, radius)?),
        Command::Rebalance {
            manifest,
            buckets,
            seed,
            out,
        } => {
            let subset = pipeline::rebalance_manifest(&manifest, &buckets, seed, &out)?;
            println!("wrote {} images to {}", subset.len(), out.display());
        }
        Command::RasterizeCells {
            grid,
            cells,
            polygons,
            out,
        } => {
            let grid = resolve_grid(&grid, &cfg.grid)?;
            let list = match (cells, polygons) {
                (Some(c), _) => read_cells_csv(c)?,
                (None, Some(p)) => read_polygons(p)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let masks = pipeline::rasterize_cells_to(&list, grid, &out)?;
            println!("wrote {} with {} classes", out.display(), masks.class_count());
        }
        Command::Downsample {
            input,
            grid,
            kernel,
            out,
        } => {
            let grid = resolve_grid(&grid, &cfg.grid)?;
            pipeline::downsample_file(&input, &grid, kernel, &out)?;
        }
        Command::Densify {
            grid,
            members,
            urban_prior,
            urban_top,
            image_id,
            kernel,
            budget_bytes,
            out,
        } => {
            let opts = DensifyOptions {
                grid: resolve_grid(&grid, &cfg.grid)?,
                members: parse_all(&members, &[])?,
                urban: urban_prior,
                urban_top,
                image_id,
                kernel,
                budget_bytes,
                out,
            };
            pipeline::densify_image(&opts)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
