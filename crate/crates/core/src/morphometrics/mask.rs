use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAVAMASK_MAGIC: &[u8; 4] = b"LMSK";

/// Binary vessel raster, row-major, one bit per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VesselMap {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl VesselMap {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::MalformedFile(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(VesselMap {
            width,
            height,
            words: vec![0; (width * height).div_ceil(64)],
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut map = VesselMap::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    map.set(x, y, true);
                }
            }
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        let i = y * self.width + x;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        let i = y * self.width + x;
        if on {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Coordinates of every vessel pixel, row-major.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let i = wi * 64 + b;
                Some((i % self.width, i / self.width))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskFormat {
    Pgm,
    Lavamask,
}

impl MaskFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "pgm" => Some(MaskFormat::Pgm),
            "lmsk" | "lavamask" => Some(MaskFormat::Lavamask),
            _ => None,
        }
    }
}

pub fn load_vessel_map(path: &Path, format: MaskFormat) -> Result<VesselMap> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        MaskFormat::Pgm => parse_pgm(&bytes),
        MaskFormat::Lavamask => parse_lavamask(&bytes),
    }
}

pub fn save_lavamask(map: &VesselMap, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_lavamask(map))
        .map_err(|e| Error::io(path, e))
}

/// `LMSK`, little-endian `u32` width and height, then the pixels packed
/// row-major, eight per byte, least significant bit first.
pub fn encode_lavamask(map: &VesselMap) -> Vec<u8> {
    let nbytes = map.area().div_ceil(8);
    let mut out = Vec::with_capacity(12 + nbytes);
    out.extend_from_slice(LAVAMASK_MAGIC);
    out.extend_from_slice(&(map.width as u32).to_le_bytes());
    out.extend_from_slice(&(map.height as u32).to_le_bytes());
    out.extend(map.words.iter().flat_map(|w| w.to_le_bytes()).take(nbytes));
    out
}

pub fn parse_lavamask(bytes: &[u8]) -> Result<VesselMap> {
    if bytes.len() < 12 || &bytes[..4] != LAVAMASK_MAGIC {
        return Err(Error::MalformedFile("missing LMSK header".into()));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let height = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body = &bytes[12..];
    // checked before allocating so a corrupt header cannot request huge maps
    let nbytes = (width * height).div_ceil(8);
    if body.len() != nbytes {
        return Err(Error::MalformedFile(format!(
            "expected {nbytes} bytes of pixels, found {}",
            body.len()
        )));
    }
    let mut map = VesselMap::new(width, height)?;
    for (wi, chunk) in body.chunks(8).enumerate() {
        let mut buf = [0u8; 8];
        buf[..chunk.len()].copy_from_slice(chunk);
        map.words[wi] = u64::from_le_bytes(buf);
    }
    // padding bits past the last pixel must be clear
    let tail = map.area() % 64;
    if tail != 0 {
        let last = map.words.len() - 1;
        if map.words[last] >> tail != 0 {
            return Err(Error::MalformedFile("non-zero padding bits".into()));
        }
    }
    Ok(map)
}

struct PgmHeader<'a> {
    binary: bool,
    width: usize,
    height: usize,
    maxval: usize,
    body: &'a [u8],
}

fn pgm_header(bytes: &[u8]) -> Result<PgmHeader<'_>> {
    let binary = match bytes.get(..2) {
        Some(b"P5") => true,
        Some(b"P2") => false,
        Some(m) if m.first() == Some(&b'P') => {
            return Err(Error::UnsupportedFormat(format!(
                "netpbm variant {}",
                String::from_utf8_lossy(m)
            )))
        }
        _ => return Err(Error::MalformedFile("not a PGM file".into())),
    };
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::MalformedFile("truncated PGM header".into())),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedFile("bad PGM header field".into()))?;
    }
    // exactly one whitespace byte separates the header from binary data
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::MalformedFile(
            "missing whitespace after PGM header".into(),
        ));
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedFile(format!("bad maxval {maxval}")));
    }
    Ok(PgmHeader {
        binary,
        width,
        height,
        maxval,
        body: &bytes[pos + 1..],
    })
}

/// Pixels brighter than half of `maxval` become vessel, so 128 and up for
/// 8-bit rasters.
pub fn parse_pgm(bytes: &[u8]) -> Result<VesselMap> {
    let h = pgm_header(bytes)?;
    let area = h
        .width
        .checked_mul(h.height)
        .ok_or_else(|| Error::MalformedFile("PGM dimensions overflow".into()))?;
    // every sample takes at least one byte, so this bounds the allocation
    if area > h.body.len() {
        return Err(Error::MalformedFile("truncated PGM raster".into()));
    }
    let mut map = VesselMap::new(h.width, h.height)?;
    let values: Vec<usize> = if h.binary {
        let bpp = if h.maxval > 255 { 2 } else { 1 };
        if h.body.len() < area * bpp {
            return Err(Error::MalformedFile("truncated PGM raster".into()));
        }
        h.body[..area * bpp]
            .chunks(bpp)
            .map(|c| {
                if bpp == 1 {
                    c[0] as usize
                } else {
                    (c[0] as usize) << 8 | c[1] as usize
                }
            })
            .collect()
    } else {
        let text = std::str::from_utf8(h.body)
            .map_err(|_| Error::MalformedFile("non-ASCII PGM raster".into()))?;
        let mut v = Vec::with_capacity(area);
        for tok in text.split_ascii_whitespace().take(area) {
            v.push(
                tok.parse()
                    .map_err(|_| Error::MalformedFile(format!("bad PGM sample {tok:?}")))?,
            );
        }
        if v.len() < area {
            return Err(Error::MalformedFile("truncated PGM raster".into()));
        }
        v
    };
    for (i, &v) in values.iter().enumerate() {
        if v > h.maxval {
            return Err(Error::MalformedFile(format!("sample {v} exceeds maxval")));
        }
        if 2 * v > h.maxval {
            map.set(i % h.width, i / h.width, true);
        }
    }
    Ok(map)
}
