//! Block downsampling of attribute rasters onto the common grid, and
//! per-image label lookup.

use super::grid::{FloatGrid, Grid, LabelGrid};
use super::tables::ImageManifest;
use crate::error::{Error, Result};
use crate::geogrid::GlobalGrid;

/// How a block of source pixels collapses into one target pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Kernel {
    /// Majority label (labels) or mean of valid values (continuous rasters).
    #[default]
    Mode,
    /// The source pixel holding the target pixel's center.
    Nearest,
}

impl std::str::FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mode" => Ok(Kernel::Mode),
            "nearest" => Ok(Kernel::Nearest),
            other => Err(Error::Input(format!(
                "unknown kernel {other:?} (expected mode or nearest)"
            ))),
        }
    }
}

fn block_shape<T>(src: &Grid<T>, target: &GlobalGrid) -> Result<(usize, usize)>
where
    T: Copy,
{
    let (sh, sw) = (src.height(), src.width());
    let (th, tw) = (target.height(), target.width());
    if sh < th || sw < tw || sh % th != 0 || sw % tw != 0 {
        return Err(Error::Dimension(format!(
            "{sh}x{sw} raster is not an integer multiple of the {th}x{tw} grid"
        )));
    }
    Ok((sh / th, sw / tw))
}

fn downsample_with<T: Copy, U: Copy>(
    src: &Grid<T>,
    target: &GlobalGrid,
    mut reduce: impl FnMut(&mut dyn Iterator<Item = T>) -> U,
) -> Result<Grid<U>> {
    let (kh, kw) = block_shape(src, target)?;
    let (th, tw) = (target.height(), target.width());
    let mut out = Vec::with_capacity(th * tw);
    for i in 0..th {
        for j in 0..tw {
            let mut block = (i * kh..(i + 1) * kh)
                .flat_map(|r| src.row(r)[j * kw..(j + 1) * kw].iter().copied());
            out.push(reduce(&mut block));
        }
    }
    Grid::from_vec(th, tw, out)
}

/// Majority label of each block; ties go to the smallest label.
pub fn downsample_mode(src: &LabelGrid, target: &GlobalGrid) -> Result<LabelGrid> {
    let mut buf = Vec::new();
    downsample_with(src, target, |block| {
        buf.clear();
        buf.extend(block);
        buf.sort_unstable();
        let (mut best, mut best_n) = (buf[0], 0usize);
        let mut k = 0;
        while k < buf.len() {
            let v = buf[k];
            let run = buf[k..].iter().take_while(|&&x| x == v).count();
            // Ascending scan: strict > keeps the smallest label on ties.
            if run > best_n {
                best = v;
                best_n = run;
            }
            k += run;
        }
        best
    })
}

pub fn downsample_nearest<T: Copy>(src: &Grid<T>, target: &GlobalGrid) -> Result<Grid<T>> {
    let (kh, kw) = block_shape(src, target)?;
    let (th, tw) = (target.height(), target.width());
    let mut out = Vec::with_capacity(th * tw);
    // The target center sits at block offset (kh/2, kw/2) in source pixels;
    // for even blocks that is a pixel corner, owned by the south-east pixel.
    for i in 0..th {
        let row = src.row(i * kh + kh / 2);
        out.extend((0..tw).map(|j| row[j * kw + kw / 2]));
    }
    Grid::from_vec(th, tw, out)
}

pub fn downsample_labels(src: &LabelGrid, target: &GlobalGrid, kernel: Kernel) -> Result<LabelGrid> {
    match kernel {
        Kernel::Mode => downsample_mode(src, target),
        Kernel::Nearest => downsample_nearest(src, target),
    }
}

/// Continuous rasters: `Mode` averages the valid values of each block
/// (NaN when none are valid), `Nearest` picks the center pixel.
pub fn downsample_float(
    src: &FloatGrid,
    target: &GlobalGrid,
    kernel: Kernel,
    is_valid: impl Fn(f32) -> bool,
) -> Result<FloatGrid> {
    match kernel {
        Kernel::Nearest => downsample_nearest(src, target),
        Kernel::Mode => downsample_with(src, target, |block| {
            let (mut sum, mut n) = (0.0f64, 0usize);
            for v in block.filter(|&v| is_valid(v)) {
                sum += v as f64;
                n += 1;
            }
            if n == 0 {
                f32::NAN
            } else {
                (sum / n as f64) as f32
            }
        }),
    }
}

/// Per-image labels read at each ground-truth location.
#[derive(Debug, Clone, Default)]
pub struct ImageLabels {
    /// `None` where the row could not be labeled.
    pub labels: Vec<Option<u16>>,
    /// (manifest row, reason) for each failure.
    pub errors: Vec<(usize, String)>,
}

pub fn label_images(manifest: &ImageManifest, labels: &LabelGrid) -> Result<ImageLabels> {
    let grid = GlobalGrid::new(labels.height(), labels.width())?;
    let mut out = ImageLabels::default();
    for (k, entry) in manifest.entries().iter().enumerate() {
        match entry.point() {
            Ok(p) => {
                let (r, c) = grid.latlon_to_index(p);
                out.labels.push(Some(labels.get(r, c)));
            }
            Err(e) => {
                out.labels.push(None);
                out.errors.push((k, format!("{}: {e}", entry.image_id)));
            }
        }
    }
    Ok(out)
}
