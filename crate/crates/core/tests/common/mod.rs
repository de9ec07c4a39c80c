//! Shared helpers: the toy fixture pipeline and its oracle replay.
#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use georva::attribmask::{read_cells_csv, read_polygons};
use georva::geogrid::{great_circle_distance, GlobalGrid, PixelAreaMap};
use georva::gridio::{read_manifest, read_raster, read_scores, Kernel, LabelGrid};
use georva::oracle::{oracle_argmax, oracle_dense_ensemble, oracle_min_area, OracleFactor};
use georva::pipeline::{
    eval, prepare, rasterize_cells_to, EvalOptions, EvalSummary, MemberSpec, PrepareOptions,
    RunMember, RunSpec,
};

pub const TOY_H: usize = 36;
pub const TOY_W: usize = 72;
pub const TOY_SEED: u64 = 7;

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

pub fn toy_grid() -> GlobalGrid {
    GlobalGrid::new(TOY_H, TOY_W).unwrap()
}

pub const TOY_RUNS: &[&str] = &[
    "a=a",
    "b=b",
    "a_ls=a,ls",
    "a_lc=a,lc",
    "a_ls_lc=a,ls,lc",
    "a_urban=a,urban:ls",
    "b_ls_lc=b,ls,lc",
];

pub fn toy_members(out: &Path) -> Vec<MemberSpec> {
    let src = toy_dir();
    [
        ("a", "cells_a.grv", "scores_a.csv"),
        ("b", "cells_b.grv", "scores_b.csv"),
        ("ls", "ls_labels.grv", "scores_ls.csv"),
        ("lc", "lc_labels.grv", "scores_lc.csv"),
    ]
    .iter()
    .map(|&(name, labels, scores)| MemberSpec {
        name: name.into(),
        labels: out.join(labels),
        scores: src.join(scores),
    })
    .collect()
}

/// Prepares masks, rasterizes both cell layouts and evaluates every run.
pub fn run_toy(out: &Path, threads: usize) -> georva::Result<EvalSummary> {
    let src = toy_dir();
    prepare(&PrepareOptions {
        grid: toy_grid(),
        density: Some(src.join("density.grv")),
        n_buckets: 4,
        density_nodata: -1.0,
        landcover: Some(src.join("landcover.grv")),
        merge: None,
        kernel: Kernel::Mode,
        out_dir: out.to_path_buf(),
    })?;
    rasterize_cells_to(&read_cells_csv(src.join("cells_a.csv"))?, toy_grid(), &out.join("cells_a.grv"))?;
    rasterize_cells_to(&read_polygons(src.join("cells_b.txt"))?, toy_grid(), &out.join("cells_b.grv"))?;
    eval(&EvalOptions {
        grid: toy_grid(),
        manifest: src.join("manifest.csv"),
        members: toy_members(out),
        runs: TOY_RUNS.iter().map(|r| r.parse().unwrap()).collect(),
        urban_prior: None,
        urban_top: 2,
        buckets: Some(out.join("ls_labels.grv")),
        balanced: true,
        seed: TOY_SEED,
        threads,
        kernel: Kernel::Mode,
        out_dir: out.to_path_buf(),
    })
}

/// Sorted file names and contents of a directory.
pub fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

/// Compares a fresh toy run with the checked-in outputs. With
/// `GEORVA_BLESS=1` the checked-in outputs are replaced instead.
pub fn compare_with_golden(out: &Path) -> Result<usize, String> {
    let golden = toy_dir().join("expected");
    let fresh = dir_contents(out);
    if std::env::var_os("GEORVA_BLESS").is_some() {
        let _ = fs::remove_dir_all(&golden);
        fs::create_dir_all(&golden).unwrap();
        for (name, bytes) in &fresh {
            fs::write(golden.join(name), bytes).unwrap();
        }
    }
    let expected = dir_contents(&golden);
    let names = |v: &[(String, Vec<u8>)]| v.iter().map(|f| f.0.clone()).collect::<Vec<_>>();
    if names(&fresh) != names(&expected) {
        return Err(format!(
            "file sets differ: fresh {:?} vs golden {:?}",
            names(&fresh),
            names(&expected)
        ));
    }
    for ((name, a), (_, b)) in fresh.iter().zip(&expected) {
        if a != b {
            return Err(format!("{name} differs from the golden copy"));
        }
    }
    Ok(fresh.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub image_id: String,
    pub min_area: f64,
    pub p_star: f64,
    pub top1: Option<(f64, f64)>,
    pub gcd_km: Option<f64>,
}

pub fn read_eval_csv(path: &Path) -> Vec<CsvRecord> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let opt = |s: &str| (!s.is_empty()).then(|| s.parse::<f64>().unwrap());
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            CsvRecord {
                image_id: r[0].to_string(),
                min_area: r[1].parse().unwrap(),
                p_star: r[2].parse().unwrap(),
                top1: opt(&r[3]).zip(opt(&r[4])),
                gcd_km: opt(&r[5]),
            }
        })
        .collect()
}

fn load_labels(path: &Path) -> LabelGrid {
    read_raster(path).unwrap().into_labels().unwrap()
}

/// Replays every run of a finished toy evaluation with the dense oracles
/// and checks the written records. Returns the number of records checked.
pub fn check_toy_against_oracle(out: &Path) -> Result<usize, String> {
    let src = toy_dir();
    let grid = toy_grid();
    let areas = PixelAreaMap::new(grid);
    let manifest = read_manifest(src.join("manifest.csv")).unwrap();
    let members: HashMap<String, (LabelGrid, georva::gridio::ScoreTable)> = toy_members(out)
        .into_iter()
        .map(|m| (m.name.clone(), (load_labels(&m.labels), read_scores(&m.scores).unwrap())))
        .collect();
    let urban_classes = [2usize, 3];
    let mut checked = 0;
    for run in TOY_RUNS {
        let spec: RunSpec = run.parse().unwrap();
        let written = read_eval_csv(&out.join(format!("eval_{}.csv", spec.name)));
        let by_id: HashMap<&str, &CsvRecord> =
            written.iter().map(|r| (r.image_id.as_str(), r)).collect();
        for entry in manifest.entries() {
            let mut probs_store = Vec::new();
            let mut complete = true;
            for rm in &spec.members {
                if let RunMember::Scores(m) = rm {
                    let (labels, table) = &members[m];
                    match table.get(&entry.image_id) {
                        Some(pairs) => {
                            let n = labels
                                .label_bound()
                                .max(pairs.last().map_or(0, |p| p.0 + 1));
                            let mut p = vec![0.0; n];
                            for &(j, v) in pairs {
                                p[j] = v;
                            }
                            probs_store.push(p);
                        }
                        None => complete = false,
                    }
                } else {
                    probs_store.push(Vec::new());
                }
            }
            // Images missing any member's scores are skipped in every run.
            let all_present = members
                .values()
                .all(|(_, t)| t.get(&entry.image_id).is_some());
            if !complete || !all_present {
                if by_id.contains_key(entry.image_id.as_str()) {
                    return Err(format!("{} should have been skipped", entry.image_id));
                }
                continue;
            }
            let factors: Vec<OracleFactor> = spec
                .members
                .iter()
                .zip(&probs_store)
                .map(|(rm, p)| match rm {
                    RunMember::Scores(m) => OracleFactor::Scores {
                        probs: p,
                        labels: &members[m].0,
                    },
                    RunMember::Urban(m) => OracleFactor::Indicator {
                        classes: &urban_classes,
                        labels: &members[m].0,
                    },
                })
                .collect();
            let dense = oracle_dense_ensemble(&factors, &areas).map_err(|e| e.to_string())?;
            let gt = entry.point().unwrap();
            let want_area = oracle_min_area(&dense, gt, &areas).unwrap();
            let (gr, gc) = grid.latlon_to_index(gt);
            let want_top = oracle_argmax(&dense).map(|(r, c)| grid.index_to_center(r, c).unwrap());
            let got = by_id
                .get(entry.image_id.as_str())
                .ok_or_else(|| format!("{}: missing from eval_{}.csv", entry.image_id, spec.name))?;
            let ok = got.min_area == want_area
                && got.p_star == dense.get(gr, gc)
                && got.top1 == want_top.map(|t| (t.lat(), t.lon()))
                && got.gcd_km
                    == want_top.map(|t| great_circle_distance(t, gt, grid.earth_radius()));
            if !ok {
                return Err(format!(
                    "{} in run {}: wrote {:?}, oracle area {want_area} top {want_top:?}",
                    entry.image_id, spec.name, got
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
