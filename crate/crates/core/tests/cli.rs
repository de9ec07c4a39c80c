mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use georva::geogrid::PixelAreaMap;
use georva::gridio::{read_raster, write_raster, Grid, LabelGrid, Raster};
use georva::oracle::{oracle_dense_ensemble, OracleFactor};

fn georva(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_georva"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Copy of the toy inputs (no golden outputs) in a scratch directory.
fn toy_copy() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in fs::read_dir(common::toy_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.is_file() {
            fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn prepare_toy(dir: &Path) {
    ok(georva(&["--config", "config.toml", "prepare"], dir));
    for (flag, src, out) in [
        ("--cells", "cells_a.csv", "out/cells_a.grv"),
        ("--polygons", "cells_b.txt", "out/cells_b.grv"),
    ] {
        ok(georva(
            &["rasterize-cells", "--height", "36", "--width", "72", flag, src, "--out", out],
            dir,
        ));
    }
}

#[test]
fn toy_config_run_matches_golden_outputs() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    let stdout = ok(georva(&["--config", "config.toml", "eval"], dir.path()));
    assert!(stdout.contains("evaluated 20 images, skipped 1"), "{stdout}");
    let fresh = common::dir_contents(&dir.path().join("out"));
    let golden = common::dir_contents(&common::toy_dir().join("expected"));
    assert_eq!(
        fresh.iter().map(|f| &f.0).collect::<Vec<_>>(),
        golden.iter().map(|f| &f.0).collect::<Vec<_>>()
    );
    for ((name, a), (_, b)) in fresh.iter().zip(&golden) {
        assert!(a == b, "{name} differs from the golden copy");
    }
}

#[test]
fn prepare_is_idempotent() {
    let dir = toy_copy();
    ok(georva(&["--config", "config.toml", "prepare"], dir.path()));
    let first = common::dir_contents(&dir.path().join("out"));
    ok(georva(&["--config", "config.toml", "prepare"], dir.path()));
    assert_eq!(first, common::dir_contents(&dir.path().join("out")));
    let names: Vec<&str> = first.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(
        names,
        ["lc_areas.csv", "lc_labels.grv", "ls_areas.csv", "ls_buckets.csv", "ls_labels.grv"]
    );
    // Seven merged land-cover classes plus the nodata row.
    let lc = fs::read_to_string(dir.path().join("out/lc_areas.csv")).unwrap();
    assert_eq!(lc.lines().count(), 1 + 7 + 1);
    assert!(lc.lines().nth(7).unwrap().starts_with("6,"));
}

#[test]
fn flags_override_config() {
    let dir = toy_copy();
    ok(georva(
        &["--config", "config.toml", "prepare", "--buckets", "3", "--out", "other"],
        dir.path(),
    ));
    let edges = fs::read_to_string(dir.path().join("other/ls_buckets.csv")).unwrap();
    assert_eq!(edges.lines().count(), 1 + 3);
    assert!(!dir.path().join("out").exists());
}

#[test]
fn urban_prior_flag_replaces_density_scores() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    ok(georva(
        &[
            "eval",
            "--height", "36", "--width", "72",
            "--manifest", "manifest.csv",
            "--member", "a=out/cells_a.grv:scores_a.csv",
            "--member", "ls=out/ls_labels.grv:scores_ls.csv",
            "--urban-prior", "ls",
            "--buckets", "out/ls_labels.grv",
            "--out", "urban",
        ],
        dir.path(),
    ));
    // Only model a needs scores, so the image lacking b's scores is kept.
    let got = common::read_eval_csv(&dir.path().join("urban/eval_ensemble.csv"));
    assert_eq!(got.len(), 21);
    let want = common::read_eval_csv(&common::toy_dir().join("expected/eval_a_urban.csv"));
    for w in &want {
        assert!(got.contains(w), "{} differs", w.image_id);
    }
}

#[test]
fn balanced_runs_repeat_exactly() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    let run = |out: &str, seed: &str| {
        ok(georva(
            &["--config", "config.toml", "eval", "--seed", seed, "--threads", "2", "--out", out],
            dir.path(),
        ));
        common::dir_contents(&dir.path().join(out))
    };
    let a = run("r1", "7");
    let b = run("r2", "7");
    assert_eq!(a, b);
    let c = run("r3", "8");
    let manifest = |v: &[(String, Vec<u8>)]| {
        v.iter().find(|f| f.0 == "balanced_manifest.csv").unwrap().1.clone()
    };
    assert_ne!(manifest(&a), manifest(&c));
}

#[test]
fn all_images_missing_is_a_data_error() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    fs::write(dir.path().join("other.csv"), "image_id,lat,lon\nnope,1,2\n").unwrap();
    let out = georva(
        &["--config", "config.toml", "eval", "--manifest", "other.csv", "--out", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let skipped = fs::read_to_string(dir.path().join("x/skipped.csv")).unwrap();
    assert_eq!(skipped, "image_id,reason\nnope,no scores from a\n");
}

#[test]
fn info_reports_header_and_classes() {
    let dir = tempfile::tempdir().unwrap();
    let labels = LabelGrid::from_vec(2, 4, vec![0, 0, 1, 1, 0, 0, 255, 255]).unwrap();
    write_raster(dir.path().join("l.grv"), &Raster::U8(labels.map(|v| v as u8))).unwrap();
    let text = ok(georva(&["info", "l.grv"], dir.path()));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("height=2 width=4 dtype=u8"));
    assert!(text.contains("\n0 4 "), "{text}");
    assert!(text.contains("\n1 2 "), "{text}");
    assert!(text.contains("\nnodata 2 "), "{text}");

    let f = Grid::from_vec(1, 3, vec![0.0f32, 1.0, f32::NAN]).unwrap();
    write_raster(dir.path().join("f.grv"), &Raster::F32(f)).unwrap();
    let text = ok(georva(&["info", "f.grv"], dir.path()));
    assert!(text.starts_with("height=1 width=3 dtype=f32\nmin=0 max=1"), "{text}");

    let mut bytes = fs::read(dir.path().join("l.grv")).unwrap();
    bytes[0] = b'X';
    fs::write(dir.path().join("bad.grv"), bytes).unwrap();
    let out = georva(&["info", "bad.grv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("byte 0"));
}

#[test]
fn usage_and_missing_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(georva(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(georva(&["info"], dir.path()).status.code(), Some(1));
    // Required settings may come from the config file, so clap cannot
    // enforce them, but a missing one is still a usage error.
    assert_eq!(georva(&["eval", "--out", "x"], dir.path()).status.code(), Some(1));
    assert_eq!(
        georva(&["eval", "--member", "a=x.grv:s.csv", "--out", "x"], dir.path()).status.code(),
        Some(1)
    );
    // A named file that does not exist is an I/O error.
    assert_eq!(
        georva(&["eval", "--member", "a=x.grv:s.csv", "--manifest", "m.csv", "--out", "x"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(georva(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn overlapping_cells_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.csv"),
        "cell_id,lat_min,lat_max,lon_min,lon_max\n0,-90,90,-180,0\n1,-90,90,-10,180\n",
    )
    .unwrap();
    let out = georva(
        &["rasterize-cells", "--height", "18", "--width", "36", "--cells", "c.csv", "--out", "c.grv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("both claim pixel"));
}

#[test]
fn rebalance_and_downsample_commands() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    let stdout = ok(georva(
        &["rebalance", "--manifest", "manifest.csv", "--buckets", "out/ls_labels.grv",
          "--seed", "7", "--out", "bal.csv"],
        dir.path(),
    ));
    assert!(stdout.starts_with("wrote 12 images"), "{stdout}");
    let bal = fs::read_to_string(dir.path().join("bal.csv")).unwrap();
    assert_eq!(bal.lines().count(), 13);

    ok(georva(
        &["downsample", "landcover.grv", "--height", "36", "--width", "72", "--out", "lc36.grv"],
        dir.path(),
    ));
    let lc = read_raster(dir.path().join("lc36.grv")).unwrap();
    assert_eq!((lc.height(), lc.width()), (36, 72));
    let out = georva(
        &["downsample", "landcover.grv", "--height", "35", "--width", "72", "--out", "x.grv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn densify_matches_oracle() {
    let dir = toy_copy();
    prepare_toy(dir.path());
    ok(georva(
        &[
            "densify", "--height", "36", "--width", "72",
            "--member", "a=out/cells_a.grv:scores_a.csv",
            "--member", "lc=out/lc_labels.grv:scores_lc.csv",
            "--image-id", "img04",
            "--out", "d.grv",
        ],
        dir.path(),
    ));
    let got = read_raster(dir.path().join("d.grv")).unwrap().into_float();
    let labels = |p: &str| read_raster(dir.path().join(p)).unwrap().into_labels().unwrap();
    let (la, llc) = (labels("out/cells_a.grv"), labels("out/lc_labels.grv"));
    let probs = |file: &str, n: usize| {
        let t = georva::gridio::read_scores(dir.path().join(file)).unwrap();
        let mut p = vec![0.0; n];
        for &(j, v) in t.get("img04").unwrap() {
            p[j] = v;
        }
        p
    };
    let (pa, plc) = (probs("scores_a.csv", 72), probs("scores_lc.csv", 7));
    let dense = oracle_dense_ensemble(
        &[
            OracleFactor::Scores { probs: &pa, labels: &la },
            OracleFactor::Scores { probs: &plc, labels: &llc },
        ],
        &PixelAreaMap::new(common::toy_grid()),
    )
    .unwrap();
    let want: Vec<f32> = dense.as_slice().iter().map(|&v| v as f32).collect();
    assert_eq!(got.as_slice(), &want[..]);
}
