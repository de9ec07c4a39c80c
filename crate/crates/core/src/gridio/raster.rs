//! The GRV1 raster container.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GRV1"
//! 4       4     height, u32 LE
//! 8       4     width, u32 LE
//! 12      1     dtype: 0 = f32, 1 = u8, 2 = u16
//! 13      3     reserved, zero
//! 16      ...   height*width values, LE, row-major, row 0 northmost
//! ```
//!
//! Registration is implicit: the raster spans the whole globe with edges at
//! ±90° and ±180°. In uint8 files, 255 is the nodata label.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::grid::{FloatGrid, Grid, LabelGrid, NODATA};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"GRV1";
pub const HEADER_LEN: usize = 16;

/// uint8 nodata sentinel.
pub const NODATA_U8: u8 = u8::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    U8 = 1,
    U16 = 2,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U8 => 1,
            DType::U16 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::F32 => "f32",
            DType::U8 => "u8",
            DType::U16 => "u16",
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DType::F32),
            1 => Some(DType::U8),
            2 => Some(DType::U16),
            _ => None,
        }
    }
}

/// A raster as stored on disk, keeping its declared dtype.
#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    F32(Grid<f32>),
    U8(Grid<u8>),
    U16(Grid<u16>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub height: usize,
    pub width: usize,
    pub dtype: DType,
}

impl Raster {
    pub fn dtype(&self) -> DType {
        match self {
            Raster::F32(_) => DType::F32,
            Raster::U8(_) => DType::U8,
            Raster::U16(_) => DType::U16,
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Raster::F32(g) => g.height(),
            Raster::U8(g) => g.height(),
            Raster::U16(g) => g.height(),
        }
    }

    pub fn width(&self) -> usize {
        match self {
            Raster::F32(g) => g.width(),
            Raster::U8(g) => g.width(),
            Raster::U16(g) => g.width(),
        }
    }

    /// Integer rasters as labels. u8 255 becomes [`NODATA`].
    pub fn into_labels(self) -> Result<LabelGrid> {
        match self {
            Raster::U16(g) => Ok(g),
            Raster::U8(g) => Ok(g.map(|v| if v == NODATA_U8 { NODATA } else { v as u16 })),
            Raster::F32(_) => Err(Error::Input(
                "expected an integer label raster, got f32".into(),
            )),
        }
    }

    /// Any raster as floats. Integer nodata sentinels become NaN.
    pub fn into_float(self) -> FloatGrid {
        match self {
            Raster::F32(g) => g,
            Raster::U8(g) => g.map(|v| if v == NODATA_U8 { f32::NAN } else { v as f32 }),
            Raster::U16(g) => g.map(|v| if v == NODATA { f32::NAN } else { v as f32 }),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let (h, w) = (self.height(), self.width());
        let mut out = Vec::with_capacity(HEADER_LEN + h * w * self.dtype().size());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(h as u32).to_le_bytes());
        out.extend_from_slice(&(w as u32).to_le_bytes());
        out.push(self.dtype() as u8);
        out.extend_from_slice(&[0, 0, 0]);
        match self {
            Raster::F32(g) => g
                .as_slice()
                .iter()
                .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            Raster::U8(g) => out.extend_from_slice(g.as_slice()),
            Raster::U16(g) => g
                .as_slice()
                .iter()
                .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let header = parse_header(bytes)?;
        let payload = &bytes[HEADER_LEN..];
        let expected = header.height * header.width * header.dtype.size();
        if payload.len() < expected {
            return Err(Error::format(
                bytes.len() as u64,
                format!(
                    "truncated payload: header declares {} bytes, found {}",
                    expected,
                    payload.len()
                ),
            ));
        }
        if payload.len() > expected {
            return Err(Error::format(
                (HEADER_LEN + expected) as u64,
                format!("{} trailing bytes after payload", payload.len() - expected),
            ));
        }
        let (h, w) = (header.height, header.width);
        Ok(match header.dtype {
            DType::F32 => Raster::F32(Grid::from_vec(
                h,
                w,
                payload
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                    .collect(),
            )?),
            DType::U8 => Raster::U8(Grid::from_vec(h, w, payload.to_vec())?),
            DType::U16 => Raster::U16(Grid::from_vec(
                h,
                w,
                payload
                    .chunks_exact(2)
                    .map(|c| u16::from_le_bytes([c[0], c[1]]))
                    .collect(),
            )?),
        })
    }
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"GRV1\""));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            "truncated header, need 16 bytes",
        ));
    }
    let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let height = u32_at(4) as usize;
    let width = u32_at(8) as usize;
    if height == 0 || width == 0 {
        return Err(Error::format(4, format!("empty raster {height}x{width}")));
    }
    let dtype = DType::from_code(bytes[12])
        .ok_or_else(|| Error::format(12, format!("unknown dtype code {}", bytes[12])))?;
    if bytes[13..16] != [0, 0, 0] {
        return Err(Error::format(13, "reserved bytes must be zero"));
    }
    Ok(Header {
        height,
        width,
        dtype,
    })
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Raster::decode(&bytes)
}

/// Reads only the 16-byte header.
pub fn read_header(path: impl AsRef<Path>) -> Result<Header> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::with_capacity(HEADER_LEN);
    (&mut file)
        .take(HEADER_LEN as u64)
        .read_to_end(&mut buf)
        .map_err(|e| Error::io(path, e))?;
    parse_header(&buf)
}

pub fn write_raster(path: impl AsRef<Path>, raster: &Raster) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&raster.encode())
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
