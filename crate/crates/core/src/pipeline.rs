//! End-to-end commands: mask preparation, evaluation, and the small
//! raster utilities exposed by the CLI. Every output is a deterministic
//! function of the inputs and the seed.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use crate::attribmask::{
    apply_buckets, apply_merge, build_buckets, rasterize_cells, read_merge_csv, BucketSpec, Cell,
    ClassMaskSet, MergeMap,
};
use crate::ensemble::{assemble, densify, urban_prior, Factor, FactorizedMap, ScoreVector};
use crate::error::{Error, Result};
use crate::evalrva::{
    bucket_deltas, cap_area_thresholds, evaluate_image, gcd_recall, per_bucket_breakdown,
    rebalance_indices, rva_curve, write_curve_csv, write_eval_csv, write_table_csv, EvalRecord,
    TableRow, Thresholds, GCD_THRESHOLDS_KM,
};
use crate::geogrid::{GlobalGrid, PixelAreaMap};
use crate::gridio::{
    downsample_float, downsample_labels, label_images, read_manifest, read_raster, read_scores,
    write_manifest, write_raster, FloatGrid, Grid, ImageManifest, Kernel, LabelGrid, Raster,
    ScoreTable, NODATA, NODATA_U8,
};

/// Stores labels as u8 when they fit (nodata as 255), u16 otherwise.
pub fn labels_to_raster(labels: &LabelGrid) -> Raster {
    let fits = labels
        .as_slice()
        .iter()
        .all(|&l| l == NODATA || l < NODATA_U8 as u16);
    if fits {
        Raster::U8(labels.map(|l| if l == NODATA { NODATA_U8 } else { l as u8 }))
    } else {
        Raster::U16(labels.clone())
    }
}

pub fn write_areas_csv(path: &Path, masks: &ClassMaskSet) -> Result<()> {
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record(["class", "pixels", "area_km2"]).map_err(e)?;
    let counts = masks.pixel_counts();
    for (c, &area) in masks.class_areas().iter().enumerate() {
        w.write_record([c.to_string(), counts[c].to_string(), area.to_string()])
            .map_err(e)?;
    }
    w.write_record([
        "nodata".to_string(),
        counts[masks.class_count()].to_string(),
        masks.nodata_area().to_string(),
    ])
    .map_err(e)?;
    w.flush().map_err(|err| Error::io(path, err))
}

fn write_bucket_csv(path: &Path, spec: &BucketSpec) -> Result<()> {
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record(["bucket", "log10_lo", "log10_hi"]).map_err(e)?;
    for (b, edge) in spec.edges().windows(2).enumerate() {
        w.write_record([b.to_string(), edge[0].to_string(), edge[1].to_string()])
            .map_err(e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Label grid on the common grid, downsampling if the raster is finer.
pub fn load_labels_on_grid(path: &Path, grid: &GlobalGrid, kernel: Kernel) -> Result<LabelGrid> {
    let labels = read_raster(path)?.into_labels()?;
    if grid.same_shape(labels.height(), labels.width()) {
        Ok(labels)
    } else {
        downsample_labels(&labels, grid, kernel)
    }
}

fn load_density_on_grid(path: &Path, grid: &GlobalGrid, kernel: Kernel, nodata: f32) -> Result<FloatGrid> {
    let density = read_raster(path)?.into_float();
    if grid.same_shape(density.height(), density.width()) {
        Ok(density)
    } else {
        downsample_float(&density, grid, kernel, |v| {
            v.is_finite() && v >= 0.0 && v != nodata
        })
    }
}

#[derive(Debug, Clone)]
pub struct PrepareOptions {
    pub grid: GlobalGrid,
    pub density: Option<PathBuf>,
    pub n_buckets: usize,
    pub density_nodata: f32,
    pub landcover: Option<PathBuf>,
    /// Defaults to the seven-class ESA merge.
    pub merge: Option<PathBuf>,
    pub kernel: Kernel,
    pub out_dir: PathBuf,
}

/// Writes `ls_labels.grv`, `ls_buckets.csv`, `ls_areas.csv` and/or
/// `lc_labels.grv`, `lc_areas.csv`. Returns the files written.
pub fn prepare(opts: &PrepareOptions) -> Result<Vec<PathBuf>> {
    if opts.density.is_none() && opts.landcover.is_none() {
        return Err(Error::Input(
            "nothing to prepare: give a density and/or land-cover raster".into(),
        ));
    }
    create_dir(&opts.out_dir)?;
    let areas = PixelAreaMap::new(opts.grid);
    let mut written = Vec::new();

    if let Some(path) = &opts.density {
        let density = load_density_on_grid(path, &opts.grid, opts.kernel, opts.density_nodata)?;
        let spec = build_buckets(&density, opts.n_buckets, opts.density_nodata)?;
        let labels = apply_buckets(&density, &spec);
        let masks = ClassMaskSet::new(labels, &areas, Some(spec.n_buckets()))?;
        let out = opts.out_dir.join("ls_labels.grv");
        write_raster(&out, &labels_to_raster(masks.labels()))?;
        written.push(out);
        let out = opts.out_dir.join("ls_buckets.csv");
        write_bucket_csv(&out, &spec)?;
        written.push(out);
        let out = opts.out_dir.join("ls_areas.csv");
        write_areas_csv(&out, &masks)?;
        written.push(out);
    }

    if let Some(path) = &opts.landcover {
        let merge = match &opts.merge {
            Some(p) => read_merge_csv(p)?,
            None => MergeMap::esa_default(),
        };
        let codes = load_labels_on_grid(path, &opts.grid, opts.kernel)?;
        let merged = apply_merge(&codes, &merge)?;
        let masks = ClassMaskSet::new(merged, &areas, Some(merge.class_count()))?;
        let out = opts.out_dir.join("lc_labels.grv");
        write_raster(&out, &labels_to_raster(masks.labels()))?;
        written.push(out);
        let out = opts.out_dir.join("lc_areas.csv");
        write_areas_csv(&out, &masks)?;
        written.push(out);
    }
    Ok(written)
}

/// Rasterizes cells and writes the label grid plus `<stem>_areas.csv`.
pub fn rasterize_cells_to(cells: &[Cell], grid: GlobalGrid, out: &Path) -> Result<ClassMaskSet> {
    let masks = rasterize_cells(cells, &PixelAreaMap::new(grid))?;
    write_raster(out, &labels_to_raster(masks.labels()))?;
    write_areas_csv(&out.with_extension("areas.csv"), &masks)?;
    Ok(masks)
}

/// One predictor: its masks and per-image scores.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberSpec {
    pub name: String,
    pub labels: PathBuf,
    pub scores: PathBuf,
}

impl std::str::FromStr for MemberSpec {
    type Err = Error;

    /// `name=labels.grv:scores.csv`
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("member {s:?}: expected name=labels.grv:scores.csv"));
        let (name, rest) = s.split_once('=').ok_or_else(bad)?;
        let (labels, scores) = rest.rsplit_once(':').ok_or_else(bad)?;
        if name.is_empty() || labels.is_empty() || scores.is_empty() {
            return Err(bad());
        }
        Ok(Self {
            name: name.to_string(),
            labels: labels.into(),
            scores: scores.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunMember {
    Scores(String),
    /// Indicator over the member's top classes instead of its scores.
    Urban(String),
}

impl RunMember {
    pub fn member(&self) -> &str {
        match self {
            RunMember::Scores(m) | RunMember::Urban(m) => m,
        }
    }
}

/// A named ensemble: one row of the threshold table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub members: Vec<RunMember>,
}

impl std::str::FromStr for RunSpec {
    type Err = Error;

    /// `name=member,member,urban:member`
    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("run {s:?}: expected name=member,...")))?;
        let members = rest
            .split(',')
            .map(str::trim)
            .filter(|m| !m.is_empty())
            .map(|m| match m.strip_prefix("urban:") {
                Some(u) => RunMember::Urban(u.to_string()),
                None => RunMember::Scores(m.to_string()),
            })
            .collect();
        RunSpec::new(name, members)
    }
}

impl RunSpec {
    pub fn new(name: &str, members: Vec<RunMember>) -> Result<Self> {
        let ok = !name.is_empty()
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'));
        if !ok {
            return Err(Error::Input(format!(
                "run name {name:?} must be non-empty and use only [A-Za-z0-9_.-]"
            )));
        }
        if members.is_empty() {
            return Err(Error::Input(format!("run {name:?} has no members")));
        }
        Ok(Self {
            name: name.to_string(),
            members,
        })
    }
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub grid: GlobalGrid,
    pub manifest: PathBuf,
    pub members: Vec<MemberSpec>,
    /// Empty: one run named `ensemble` over all members.
    pub runs: Vec<RunSpec>,
    /// In the default run, replace this member by its urban indicator.
    pub urban_prior: Option<String>,
    /// How many of the highest classes the urban indicator keeps.
    pub urban_top: usize,
    /// Label raster giving each image's bucket (e.g. `ls_labels.grv`).
    pub buckets: Option<PathBuf>,
    pub balanced: bool,
    pub seed: u64,
    /// Worker threads; 0 means available parallelism.
    pub threads: usize,
    pub kernel: Kernel,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Default)]
pub struct EvalSummary {
    pub evaluated: usize,
    pub skipped: Vec<(String, String)>,
    pub table: Vec<TableRow>,
    pub balanced_table: Vec<TableRow>,
}

struct LoadedMember {
    masks: ClassMaskSet,
    scores: ScoreTable,
    urban: Option<Factor>,
}

fn load_member(spec: &MemberSpec, areas: &PixelAreaMap, kernel: Kernel) -> Result<LoadedMember> {
    let labels = load_labels_on_grid(&spec.labels, areas.grid(), kernel)?;
    let scores = read_scores(&spec.scores)?;
    let masks = ClassMaskSet::new(Arc::new(labels), areas, None)?;
    Ok(LoadedMember {
        masks,
        scores,
        urban: None,
    })
}

fn resolve_runs(opts: &EvalOptions) -> Result<Vec<RunSpec>> {
    if !opts.runs.is_empty() {
        if opts.urban_prior.is_some() {
            return Err(Error::Input(
                "--urban-prior applies to the default run; use urban:<member> in --run".into(),
            ));
        }
        let mut names = BTreeSet::new();
        for r in &opts.runs {
            if !names.insert(&r.name) {
                return Err(Error::Input(format!("run {:?} given twice", r.name)));
            }
        }
        return Ok(opts.runs.clone());
    }
    let members = opts
        .members
        .iter()
        .map(|m| match &opts.urban_prior {
            Some(u) if *u == m.name => RunMember::Urban(m.name.clone()),
            _ => RunMember::Scores(m.name.clone()),
        })
        .collect();
    if let Some(u) = &opts.urban_prior {
        if !opts.members.iter().any(|m| &m.name == u) {
            return Err(Error::Input(format!("--urban-prior names unknown member {u:?}")));
        }
    }
    Ok(vec![RunSpec::new("ensemble", members)?])
}

fn build_map(
    run: &RunSpec,
    members: &HashMap<&str, LoadedMember>,
    image_id: &str,
    grid: &GlobalGrid,
) -> std::result::Result<FactorizedMap, String> {
    let mut map = FactorizedMap::new(grid.height(), grid.width());
    for rm in &run.members {
        let m = &members[rm.member()];
        let factor = match rm {
            RunMember::Urban(_) => m.urban.clone().expect("urban factor prepared"),
            RunMember::Scores(name) => {
                let pairs = m
                    .scores
                    .get(image_id)
                    .ok_or_else(|| format!("no scores from {name}"))?;
                let n = m
                    .masks
                    .class_count()
                    .max(pairs.last().map_or(0, |&(id, _)| id + 1));
                let sv = ScoreVector::from_sparse(pairs, n).map_err(|e| format!("{name}: {e}"))?;
                assemble(&sv, &m.masks).map_err(|e| format!("{name}: {e}"))?
            }
        };
        map.push(factor).map_err(|e| e.to_string())?;
    }
    Ok(map)
}

fn table_row(method: &str, records: &[EvalRecord], caps: &[f64]) -> Result<TableRow> {
    let total = f64::INFINITY;
    let curve = rva_curve(records, &Thresholds::Explicit(caps.to_vec()), total)?;
    let errors: Vec<f64> = records
        .iter()
        .map(|r| r.gcd_km.unwrap_or(f64::INFINITY))
        .collect();
    Ok(TableRow {
        method: method.to_string(),
        images: records.len(),
        rva: caps.iter().map(|&a| curve.recall_at(a)).collect(),
        gcd: gcd_recall(&errors, &GCD_THRESHOLDS_KM)?,
    })
}

fn write_curves(
    out_dir: &Path,
    stem: &str,
    records: &[EvalRecord],
    buckets: Option<&HashMap<String, u16>>,
    total_area: f64,
) -> Result<()> {
    let curve = rva_curve(records, &Thresholds::Auto, total_area)?;
    write_curve_csv(out_dir.join(format!("curve_{stem}.csv")), &curve)?;
    if let Some(b) = buckets {
        for (bucket, c) in per_bucket_breakdown(records, b, &Thresholds::Auto, total_area)? {
            write_curve_csv(out_dir.join(format!("curve_{stem}_bucket{bucket}.csv")), &c)?;
        }
    }
    Ok(())
}

fn write_deltas(
    path: &Path,
    base: &[EvalRecord],
    other: &[EvalRecord],
    buckets: &HashMap<String, u16>,
    total_area: f64,
) -> Result<()> {
    let deltas = bucket_deltas(base, other, buckets, total_area)?;
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record(["bucket", "area_km2", "delta_recall"]).map_err(e)?;
    for (b, points) in deltas {
        for (a, d) in points {
            w.write_record([b.to_string(), a.to_string(), d.to_string()])
                .map_err(e)?;
        }
    }
    w.flush().map_err(|err| Error::io(path, err))
}

fn write_skipped(path: &Path, skipped: &[(String, String)]) -> Result<()> {
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record(["image_id", "reason"]).map_err(e)?;
    for (id, reason) in skipped {
        w.write_record([id, reason]).map_err(e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}

/// Evaluates every run on every image and writes, under `out_dir`:
/// `eval_<run>.csv`, `curve_<run>[_bucket<b>].csv`, `table.csv`,
/// `skipped.csv`, and with buckets `delta_<run>.csv` against the first run.
/// With `balanced`, also `balanced_manifest.csv`, `table_balanced.csv` and
/// `curve_<run>_balanced[_bucket<b>].csv`.
pub fn eval(opts: &EvalOptions) -> Result<EvalSummary> {
    let areas = PixelAreaMap::new(opts.grid);
    let grid = opts.grid;
    let manifest = read_manifest(&opts.manifest)?;
    let runs = resolve_runs(opts)?;

    let mut members: HashMap<&str, LoadedMember> = HashMap::new();
    for spec in &opts.members {
        if members.contains_key(spec.name.as_str()) {
            return Err(Error::Input(format!("member {:?} given twice", spec.name)));
        }
        members.insert(spec.name.as_str(), load_member(spec, &areas, opts.kernel)?);
    }
    for run in &runs {
        for rm in &run.members {
            let m = members.get_mut(rm.member()).ok_or_else(|| {
                Error::Input(format!("run {:?} uses unknown member {:?}", run.name, rm.member()))
            })?;
            if let RunMember::Urban(_) = rm {
                if m.urban.is_none() {
                    let n = m.masks.class_count();
                    let top: Vec<usize> = (n.saturating_sub(opts.urban_top)..n).collect();
                    m.urban = Some(urban_prior(&m.masks, &top)?);
                }
            }
        }
    }
    let used: BTreeSet<&str> = runs
        .iter()
        .flat_map(|r| &r.members)
        .filter_map(|rm| match rm {
            RunMember::Scores(m) => Some(m.as_str()),
            RunMember::Urban(_) => None,
        })
        .collect();

    let bucket_labels: Option<Vec<Option<u16>>> = match &opts.buckets {
        Some(path) => {
            let labels = load_labels_on_grid(path, &grid, opts.kernel)?;
            let lab = label_images(&manifest, &labels)?;
            Some(
                lab.labels
                    .into_iter()
                    .map(|l| l.filter(|&v| v != NODATA))
                    .collect(),
            )
        }
        None => None,
    };
    let n_buckets = match &opts.buckets {
        Some(path) => read_raster(path)?.into_labels()?.label_bound(),
        None => 0,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
    let per_image: Vec<std::result::Result<Vec<EvalRecord>, String>> = pool.install(|| {
        manifest
            .entries()
            .par_iter()
            .enumerate()
            .map(|(k, entry)| {
                let gt = entry.point().map_err(|e| e.to_string())?;
                for name in &used {
                    if members[name].scores.get(&entry.image_id).is_none() {
                        return Err(format!("no scores from {name}"));
                    }
                }
                let bucket = bucket_labels.as_ref().and_then(|b| b[k]);
                runs.iter()
                    .map(|run| {
                        let map = build_map(run, &members, &entry.image_id, &grid)?;
                        let mut rec = evaluate_image(&entry.image_id, &map, gt, &areas)
                            .map_err(|e| e.to_string())?;
                        rec.bucket = bucket;
                        Ok(rec)
                    })
                    .collect()
            })
            .collect()
    });

    let mut summary = EvalSummary::default();
    let mut by_run: Vec<Vec<EvalRecord>> = vec![Vec::new(); runs.len()];
    let mut kept_rows = Vec::new();
    for (k, result) in per_image.into_iter().enumerate() {
        match result {
            Ok(recs) => {
                kept_rows.push(k);
                for (i, r) in recs.into_iter().enumerate() {
                    by_run[i].push(r);
                }
            }
            Err(reason) => summary
                .skipped
                .push((manifest.entries()[k].image_id.clone(), reason)),
        }
    }
    create_dir(&opts.out_dir)?;
    write_skipped(&opts.out_dir.join("skipped.csv"), &summary.skipped)?;
    if kept_rows.is_empty() {
        return Err(Error::Input("no image in the manifest could be evaluated".into()));
    }
    summary.evaluated = kept_rows.len();

    let total_area = areas.total();
    let caps = cap_area_thresholds(grid.earth_radius());
    let bucket_map: Option<HashMap<String, u16>> = bucket_labels.as_ref().map(|_| {
        by_run[0]
            .iter()
            .filter_map(|r| r.bucket.map(|b| (r.image_id.clone(), b)))
            .collect()
    });
    // Breakdowns only cover images that fall in a bucket.
    let bucketed = |recs: &[EvalRecord]| -> Vec<EvalRecord> {
        recs.iter().filter(|r| r.bucket.is_some()).cloned().collect()
    };

    for (run, recs) in runs.iter().zip(&by_run) {
        write_eval_csv(opts.out_dir.join(format!("eval_{}.csv", run.name)), recs)?;
        write_curves(&opts.out_dir, &run.name, recs, None, total_area)?;
        if let Some(b) = &bucket_map {
            let br = bucketed(recs);
            if !br.is_empty() {
                for (bucket, c) in per_bucket_breakdown(&br, b, &Thresholds::Auto, total_area)? {
                    write_curve_csv(
                        opts.out_dir.join(format!("curve_{}_bucket{bucket}.csv", run.name)),
                        &c,
                    )?;
                }
            }
        }
        summary.table.push(table_row(&run.name, recs, &caps)?);
    }
    write_table_csv(opts.out_dir.join("table.csv"), &summary.table)?;

    if let Some(b) = &bucket_map {
        let base = bucketed(&by_run[0]);
        if !base.is_empty() {
            for (run, recs) in runs.iter().zip(&by_run).skip(1) {
                let path = opts.out_dir.join(format!("delta_{}.csv", run.name));
                write_deltas(&path, &base, &bucketed(recs), b, total_area)?;
            }
        }
    }

    if opts.balanced {
        let labels = bucket_labels
            .as_ref()
            .ok_or_else(|| Error::Input("--balanced needs a bucket raster".into()))?;
        let kept_labels: Vec<Option<u16>> = kept_rows.iter().map(|&k| labels[k]).collect();
        let pick = rebalance_indices(&kept_labels, n_buckets, opts.seed)?;
        let rows: Vec<usize> = pick.iter().map(|&i| kept_rows[i]).collect();
        write_manifest(
            opts.out_dir.join("balanced_manifest.csv"),
            &manifest.subset(&rows),
        )?;
        let b = bucket_map.as_ref().expect("bucket labels present");
        for (run, recs) in runs.iter().zip(&by_run) {
            let subset: Vec<EvalRecord> = pick.iter().map(|&i| recs[i].clone()).collect();
            write_curves(
                &opts.out_dir,
                &format!("{}_balanced", run.name),
                &subset,
                Some(b),
                total_area,
            )?;
            summary.balanced_table.push(table_row(&run.name, &subset, &caps)?);
        }
        write_table_csv(opts.out_dir.join("table_balanced.csv"), &summary.balanced_table)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct DensifyOptions {
    pub grid: GlobalGrid,
    pub members: Vec<MemberSpec>,
    /// Members replaced by their urban indicator.
    pub urban: Vec<String>,
    pub urban_top: usize,
    pub image_id: String,
    pub kernel: Kernel,
    pub budget_bytes: usize,
    pub out: PathBuf,
}

/// Materializes one image's ensembled map as a GRV1 f32 raster.
pub fn densify_image(opts: &DensifyOptions) -> Result<()> {
    let areas = PixelAreaMap::new(opts.grid);
    let mut map = FactorizedMap::new(opts.grid.height(), opts.grid.width());
    for spec in &opts.members {
        let m = load_member(spec, &areas, opts.kernel)?;
        let factor = if opts.urban.contains(&spec.name) {
            let n = m.masks.class_count();
            let top: Vec<usize> = (n.saturating_sub(opts.urban_top)..n).collect();
            urban_prior(&m.masks, &top)?
        } else {
            let pairs = m.scores.get(&opts.image_id).ok_or_else(|| {
                Error::Join(format!("{}: no scores for image {:?}", spec.name, opts.image_id))
            })?;
            let n = m
                .masks
                .class_count()
                .max(pairs.last().map_or(0, |&(id, _)| id + 1));
            assemble(&ScoreVector::from_sparse(pairs, n)?, &m.masks)?
        };
        map.push(factor)?;
    }
    let dense = densify(&map, opts.budget_bytes)?;
    let f32s: Grid<f32> = dense.map(|v| v as f32);
    write_raster(&opts.out, &Raster::F32(f32s))
}

/// Balanced subset of a manifest by the bucket raster.
pub fn rebalance_manifest(
    manifest_path: &Path,
    buckets: &Path,
    seed: u64,
    out: &Path,
) -> Result<ImageManifest> {
    let manifest = read_manifest(manifest_path)?;
    let labels = read_raster(buckets)?.into_labels()?;
    let lab = label_images(&manifest, &labels)?;
    let per_image: Vec<Option<u16>> = lab
        .labels
        .into_iter()
        .map(|l| l.filter(|&v| v != NODATA))
        .collect();
    let pick = rebalance_indices(&per_image, labels.label_bound(), seed)?;
    let subset = manifest.subset(&pick);
    write_manifest(out, &subset)?;
    Ok(subset)
}

/// Downsamples any raster onto a `height x width` grid.
pub fn downsample_file(input: &Path, grid: &GlobalGrid, kernel: Kernel, out: &Path) -> Result<()> {
    let raster = match read_raster(input)? {
        Raster::F32(g) => Raster::F32(downsample_float(&g, grid, kernel, f32::is_finite)?),
        other => {
            let dtype = other.dtype();
            let labels = downsample_labels(&other.into_labels()?, grid, kernel)?;
            match dtype {
                crate::gridio::DType::U8 => {
                    Raster::U8(labels.map(|l| if l == NODATA { NODATA_U8 } else { l as u8 }))
                }
                _ => Raster::U16(labels),
            }
        }
    };
    write_raster(out, &raster)
}

/// Human-readable summary of a GRV1 file. The first line is
/// `height=<h> width=<w> dtype=<t>`.
pub fn info(path: &Path, earth_radius: f64) -> Result<String> {
    let raster = read_raster(path)?;
    let (h, w) = (raster.height(), raster.width());
    let mut s = format!("height={h} width={w} dtype={}\n", raster.dtype().name());
    match raster {
        Raster::F32(g) => {
            let finite: Vec<f32> = g.as_slice().iter().copied().filter(|v| v.is_finite()).collect();
            let nonfinite = g.len() - finite.len();
            if finite.is_empty() {
                writeln!(s, "no finite values ({nonfinite} non-finite)").unwrap();
                return Ok(s);
            }
            let lo = finite.iter().copied().fold(f32::INFINITY, f32::min);
            let hi = finite.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let mean = finite.iter().map(|&v| v as f64).sum::<f64>() / finite.len() as f64;
            writeln!(s, "min={lo} max={hi} mean={mean} nonfinite={nonfinite}").unwrap();
            let bins = 10usize;
            let mut hist = vec![0usize; bins];
            for &v in &finite {
                let k = if hi > lo {
                    (((v - lo) / (hi - lo)) * bins as f32) as usize
                } else {
                    0
                };
                hist[k.min(bins - 1)] += 1;
            }
            writeln!(s, "histogram ({bins} equal bins over [min, max]):").unwrap();
            for (k, n) in hist.iter().enumerate() {
                let a = lo as f64 + (hi - lo) as f64 * k as f64 / bins as f64;
                let b = lo as f64 + (hi - lo) as f64 * (k + 1) as f64 / bins as f64;
                writeln!(s, "  [{a}, {b}] {n}").unwrap();
            }
        }
        other => {
            let labels = other.into_labels()?;
            let grid = GlobalGrid::with_radius(h, w, earth_radius)?;
            let masks = ClassMaskSet::new(Arc::new(labels), &PixelAreaMap::new(grid), None)?;
            let counts = masks.pixel_counts();
            writeln!(s, "class pixels area_km2").unwrap();
            for (c, &a) in masks.class_areas().iter().enumerate() {
                if counts[c] > 0 {
                    writeln!(s, "{c} {} {a}", counts[c]).unwrap();
                }
            }
            writeln!(
                s,
                "nodata {} {}",
                counts[masks.class_count()],
                masks.nodata_area()
            )
            .unwrap();
        }
    }
    Ok(s)
}
