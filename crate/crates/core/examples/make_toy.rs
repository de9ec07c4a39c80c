//! Writes the toy end-to-end fixture: synthetic density and land-cover
//! rasters, two cell layouts, a 21-image manifest and four score tables.
//!
//! cargo run -p georva --example make_toy -- crates/core/tests/fixtures/toy

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use georva::attribmask::{read_cells_csv, read_polygons, rasterize_cells, ClassMaskSet};
use georva::evalrva::SplitMix64;
use georva::geogrid::{great_circle_distance, GeoPoint, GlobalGrid, PixelAreaMap};
use georva::gridio::{read_raster, write_raster, FloatGrid, Grid, Kernel, LabelGrid, Raster, NODATA};
use georva::pipeline::{prepare, PrepareOptions};

const H: usize = 36;
const W: usize = 72;
const R: f64 = georva::geogrid::MEAN_EARTH_RADIUS_KM;

struct Rng {
    s: SplitMix64,
    i: u64,
}

impl Rng {
    fn new(stream: u64) -> Self {
        Self {
            s: SplitMix64::new(2024, stream),
            i: 0,
        }
    }
    fn next(&mut self) -> u64 {
        self.i += 1;
        self.s.draw(self.i)
    }
    fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
    fn below(&mut self, n: usize) -> usize {
        ((self.next() as u128 * n as u128) >> 64) as usize
    }
}

fn land(lat: f64, lon: f64) -> bool {
    let (y, x) = (lat.to_radians(), lon.to_radians());
    (1.3 * x).sin() * (2.0 * y).cos() + 0.6 * (2.0 * x + 1.0).cos() * (3.0 * y).sin() > -0.2
        && lat > -80.0
}

fn density_raster() -> FloatGrid {
    let (h, w) = (H * 2, W * 2);
    let g = GlobalGrid::new(h, w).unwrap();
    let cities = [(40.0, -75.0), (35.0, 139.0), (51.0, 0.0), (-23.0, -46.0), (28.0, 77.0)];
    let mut out = Grid::filled(h, w, -1.0f32);
    for r in 0..h {
        for c in 0..w {
            let p = GeoPoint::new(g.center_lat(r), g.center_lon(c)).unwrap();
            if !land(p.lat(), p.lon()) {
                continue;
            }
            let mut x = 0.8 + 1.2 * (p.lat().to_radians() * 2.0).cos().max(0.0);
            for &(la, lo) in &cities {
                let d = great_circle_distance(p, GeoPoint::new(la, lo).unwrap(), R);
                x += 3.0 * (-d / 900.0).exp();
            }
            let v = if p.lat().abs() > 70.0 { 0.0 } else { 10f64.powf(x) };
            out.set(r, c, v as f32);
        }
    }
    out
}

fn landcover_raster(density: &FloatGrid) -> LabelGrid {
    let (h, w) = (H * 3, W * 3);
    let g = GlobalGrid::new(h, w).unwrap();
    let dg = GlobalGrid::new(density.height(), density.width()).unwrap();
    let mut rng = Rng::new(1);
    let mut out = LabelGrid::filled(h, w, 210);
    for r in 0..h {
        for c in 0..w {
            let p = GeoPoint::new(g.center_lat(r), g.center_lon(c)).unwrap();
            let (dr, dc) = dg.latlon_to_index(p);
            let d = density.get(dr, dc);
            let lat = p.lat().abs();
            let code: u16 = if d < 0.0 {
                210
            } else if lat > 66.0 {
                220
            } else if d > 1000.0 {
                190
            } else if (15.0..32.0).contains(&lat) {
                [200, 201, 202][rng.below(3)]
            } else if lat < 12.0 {
                [50, 60, 160, 170][rng.below(4)]
            } else if lat < 45.0 {
                [10, 11, 20, 30, 40, 110, 130][rng.below(7)]
            } else {
                [70, 80, 90, 100, 120, 140, 150, 180][rng.below(8)]
            };
            out.set(r, c, code);
        }
    }
    // A patch without data.
    for r in 10..14 {
        for c in 100..110 {
            out.set(r, c, 0);
        }
    }
    out
}

fn rect_cells() -> String {
    let mut s = String::from("cell_id,lat_min,lat_max,lon_min,lon_max\n");
    let mut id = 0;
    for i in 0..6 {
        for j in 0..12 {
            let lat_max = 90.0 - 30.0 * i as f64;
            let lon_min = -180.0 + 30.0 * j as f64;
            writeln!(s, "{id},{},{lat_max},{lon_min},{}", lat_max - 30.0, lon_min + 30.0).unwrap();
            id += 1;
        }
    }
    s
}

fn polygon_cells() -> String {
    let mut s = String::from("# four latitude bands, alternate bands shifted by 30 degrees\n");
    let bands = [(90.0, 45.0), (45.0, 0.0), (0.0, -45.0), (-45.0, -90.0)];
    let mut id = 0;
    for (b, &(top, bottom)) in bands.iter().enumerate() {
        let mut edges: Vec<f64> = if b % 2 == 0 {
            (0..=6).map(|k| -180.0 + 60.0 * k as f64).collect()
        } else {
            let mut e = vec![-180.0];
            e.extend((0..6).map(|k| -150.0 + 60.0 * k as f64));
            e.push(180.0);
            e
        };
        edges.dedup();
        for pair in edges.windows(2) {
            let (w0, e0) = (pair[0], pair[1]);
            writeln!(s, "{id};{w0} {bottom},{e0} {bottom},{e0} {top},{w0} {top}").unwrap();
            id += 1;
        }
    }
    s
}

fn center(masks: &ClassMaskSet, class: usize) -> GeoPoint {
    let g = GlobalGrid::new(H, W).unwrap();
    let (mut n, mut sx, mut sy, mut sz) = (0.0, 0.0, 0.0, 0.0);
    for r in 0..H {
        for c in 0..W {
            if masks.labels().get(r, c) as usize == class {
                let (la, lo) = (g.center_lat(r).to_radians(), g.center_lon(c).to_radians());
                sx += la.cos() * lo.cos();
                sy += la.cos() * lo.sin();
                sz += la.sin();
                n += 1.0;
            }
        }
    }
    assert!(n > 0.0);
    let lat = sz.atan2((sx * sx + sy * sy).sqrt()).to_degrees();
    GeoPoint::new(lat, sy.atan2(sx).to_degrees()).unwrap()
}

/// Scores over cells by distance from a noisy guess; only the `keep`
/// best cells are listed.
fn cell_scores(
    rng: &mut Rng,
    centers: &[GeoPoint],
    guess: GeoPoint,
    keep: usize,
    scale_km: f64,
) -> Vec<(usize, f64)> {
    let mut w: Vec<(usize, f64)> = centers
        .iter()
        .enumerate()
        .map(|(j, &c)| (j, (-great_circle_distance(c, guess, R) / scale_km).exp() * (0.5 + rng.unit())))
        .collect();
    w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    w.truncate(keep);
    normalize(w)
}

fn normalize(mut w: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let s: f64 = w.iter().map(|p| p.1).sum();
    for p in &mut w {
        p.1 = (p.1 / s * 1e6).round() / 1e6;
    }
    w.sort_by_key(|p| p.0);
    w
}

fn class_scores(rng: &mut Rng, n: usize, truth: usize, boost: f64, zero: Option<usize>) -> Vec<(usize, f64)> {
    let w = (0..n)
        .map(|j| {
            let base = rng.unit() + if j == truth { boost } else { 0.0 };
            (j, if Some(j) == zero { 0.0 } else { base })
        })
        .collect();
    normalize(w)
}

fn write_scores(path: &Path, rows: &[(String, Vec<(usize, f64)>)]) {
    let mut s = String::from("image_id,id,prob\n");
    for (id, scores) in rows {
        for (j, p) in scores {
            writeln!(s, "{id},{j},{p}").unwrap();
        }
    }
    fs::write(path, s).unwrap();
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).expect("usage: make_toy <dir>"));
    fs::create_dir_all(&dir).unwrap();
    let grid = GlobalGrid::new(H, W).unwrap();
    let areas = PixelAreaMap::new(grid);

    let density = density_raster();
    write_raster(dir.join("density.grv"), &Raster::F32(density.clone())).unwrap();
    let lc = landcover_raster(&density);
    write_raster(dir.join("landcover.grv"), &Raster::U8(lc.map(|v| v as u8))).unwrap();
    fs::write(dir.join("cells_a.csv"), rect_cells()).unwrap();
    fs::write(dir.join("cells_b.txt"), polygon_cells()).unwrap();

    let tmp = std::env::temp_dir().join("georva_make_toy");
    prepare(&PrepareOptions {
        grid,
        density: Some(dir.join("density.grv")),
        n_buckets: 4,
        density_nodata: -1.0,
        landcover: Some(dir.join("landcover.grv")),
        merge: None,
        kernel: Kernel::Mode,
        out_dir: tmp.clone(),
    })
    .unwrap();
    let ls = read_raster(tmp.join("ls_labels.grv")).unwrap().into_labels().unwrap();
    let lc = read_raster(tmp.join("lc_labels.grv")).unwrap().into_labels().unwrap();
    let ma = rasterize_cells(&read_cells_csv(dir.join("cells_a.csv")).unwrap(), &areas).unwrap();
    let mb = rasterize_cells(&read_polygons(dir.join("cells_b.txt")).unwrap(), &areas).unwrap();
    let ls_masks = ClassMaskSet::new(ls.clone(), &areas, Some(4)).unwrap();
    let lc_masks = ClassMaskSet::new(lc.clone(), &areas, Some(7)).unwrap();
    for (name, m) in [("ls", &ls_masks), ("lc", &lc_masks)] {
        let empty: Vec<usize> = (0..m.class_count()).filter(|&c| !m.is_usable(c)).collect();
        assert!(empty.is_empty(), "{name} classes without area: {empty:?}");
    }
    let ca: Vec<GeoPoint> = (0..ma.class_count()).map(|j| center(&ma, j)).collect();
    let cb: Vec<GeoPoint> = (0..mb.class_count()).map(|j| center(&mb, j)).collect();

    let mut rng = Rng::new(2);
    let plan: [u16; 20] = [0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 3, 0, 1, 2, 0, 2, 0, 2, 0];
    let mut manifest = String::from("image_id,lat,lon\n");
    let (mut sa, mut sb, mut sls, mut slc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (k, &bucket) in plan.iter().enumerate() {
        let id = format!("img{k:02}");
        let (r, c) = loop {
            let (r, c) = (rng.below(H), rng.below(W));
            if ls.get(r, c) == bucket && lc.get(r, c) != NODATA {
                break (r, c);
            }
        };
        let lat = grid.center_lat(r) + (rng.unit() - 0.5) * 4.0;
        let lon = grid.center_lon(c) + (rng.unit() - 0.5) * 4.0;
        let (lat, lon) = ((lat * 1e4).round() / 1e4, (lon * 1e4).round() / 1e4);
        writeln!(manifest, "{id},{lat},{lon}").unwrap();
        let gt = GeoPoint::new(lat, lon).unwrap();
        let guess = GeoPoint::new(
            (lat + (rng.unit() - 0.5) * 30.0).clamp(-89.0, 89.0),
            lon + (rng.unit() - 0.5) * 40.0,
        )
        .unwrap();
        let far = GeoPoint::new(-lat, lon + 180.0).unwrap();
        let a = match k {
            // Confidently wrong: the true cell gets no mass.
            3 => cell_scores(&mut rng, &ca, far, 3, 800.0),
            // Two equal-area cells tied for the top score.
            5 => {
                let (gr, gc) = grid.latlon_to_index(gt);
                let j = ma.labels().get(gr, gc) as usize;
                let other = if j % 12 == 11 { j - 1 } else { j + 1 };
                normalize(vec![(j, 0.4), (other, 0.4), ((j + 12) % 72, 0.2)])
            }
            _ => cell_scores(&mut rng, &ca, guess, 8, 1500.0),
        };
        sa.push((id.clone(), a));
        sb.push((id.clone(), cell_scores(&mut rng, &cb, guess, 6, 2500.0)));
        let zero = (k % 4 == 1).then_some((bucket as usize + 2) % 4);
        sls.push((id.clone(), class_scores(&mut rng, 4, bucket as usize, 0.8, zero)));
        let lc_true = lc.get(grid.latlon_to_index(gt).0, grid.latlon_to_index(gt).1) as usize;
        slc.push((id.clone(), class_scores(&mut rng, 7, lc_true, 1.0, None)));
    }
    // Listed in the manifest but absent from model b's scores.
    writeln!(manifest, "img_missing,10.5,20.5").unwrap();
    sa.push(("img_missing".into(), normalize(vec![(0, 1.0)])));
    sls.push(("img_missing".into(), normalize(vec![(0, 1.0)])));
    slc.push(("img_missing".into(), normalize(vec![(0, 1.0)])));

    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    write_scores(&dir.join("scores_a.csv"), &sa);
    write_scores(&dir.join("scores_b.csv"), &sb);
    write_scores(&dir.join("scores_ls.csv"), &sls);
    write_scores(&dir.join("scores_lc.csv"), &slc);
    fs::remove_dir_all(tmp).ok();
    println!("wrote toy fixture to {}", dir.display());
}
