use std::io::{Read, Write};
use std::path::Path;

use crate::{ImgError, Raster, Result};

/// PGM flavor: `P2` is ASCII, `P5` is binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgmFormat {
    Ascii,
    Binary,
}

/// Reads an 8-bit PGM (P2 or P5). Byte `b` maps exactly to `b / 255`.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Raster> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_pgm(&bytes)
}

fn parse_pgm(bytes: &[u8]) -> Result<Raster> {
    let mut pos = 0usize;

    // Reads the next whitespace-separated token, skipping '#' comments.
    let next_token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(ImgError::Format("unexpected end of PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    let magic = next_token(&mut pos)?;
    if magic != "P2" && magic != "P5" {
        return Err(ImgError::Format(format!("not a PGM file (magic {magic})")));
    }
    let width: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| ImgError::Format("bad width".into()))?;
    let height: usize = next_token(&mut pos)?
        .parse()
        .map_err(|_| ImgError::Format("bad height".into()))?;
    let maxval: u32 = next_token(&mut pos)?
        .parse()
        .map_err(|_| ImgError::Format("bad maxval".into()))?;
    if maxval != 255 {
        return Err(ImgError::Format(format!(
            "only 8-bit PGM supported, maxval {maxval}"
        )));
    }

    let n = width * height;
    let mut data = Vec::with_capacity(n);
    if magic == "P5" {
        // Exactly one whitespace byte separates header and raster.
        pos += 1;
        if bytes.len() < pos + n {
            return Err(ImgError::Format("truncated P5 raster".into()));
        }
        for &b in &bytes[pos..pos + n] {
            data.push(b as f64 / 255.0);
        }
    } else {
        for _ in 0..n {
            let v: u32 = next_token(&mut pos)?
                .parse()
                .map_err(|_| ImgError::Format("bad P2 sample".into()))?;
            if v > 255 {
                return Err(ImgError::Format(format!("P2 sample {v} > 255")));
            }
            data.push(v as f64 / 255.0);
        }
    }
    Raster::new(width, height, data)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes an 8-bit PGM. Values are clamped to `[0, 1]` and rounded.
pub fn write_pgm(path: impl AsRef<Path>, img: &Raster, format: PgmFormat) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    match format {
        PgmFormat::Binary => {
            write!(f, "P5\n{} {}\n255\n", img.width(), img.height())?;
            let bytes: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
            f.write_all(&bytes)?;
        }
        PgmFormat::Ascii => {
            write!(f, "P2\n{} {}\n255\n", img.width(), img.height())?;
            for y in 0..img.height() {
                let row: Vec<String> = (0..img.width())
                    .map(|x| quantize(img.get(x, y)).to_string())
                    .collect();
                writeln!(f, "{}", row.join(" "))?;
            }
        }
    }
    Ok(())
}

/// Writes a 16-bit binary PGM from raw labels (used for region label maps).
pub fn write_pgm16(path: impl AsRef<Path>, width: usize, height: usize, labels: &[u16]) -> Result<()> {
    if labels.len() != width * height {
        return Err(ImgError::DimensionMismatch(format!(
            "label map needs {} entries",
            width * height
        )));
    }
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n65535\n")?;
    let mut bytes = Vec::with_capacity(labels.len() * 2);
    for &l in labels {
        bytes.extend_from_slice(&l.to_be_bytes());
    }
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads an 8-bit grayscale PNG; byte `b` maps exactly to `b / 255`.
pub fn read_png(path: impl AsRef<Path>) -> Result<Raster> {
    let img = image::open(path.as_ref())
        .map_err(|e| ImgError::Format(format!("png read: {e}")))?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().iter().map(|&b| b as f64 / 255.0).collect();
    Raster::new(w, h, data)
}

/// Writes an 8-bit grayscale PNG.
pub fn write_png(path: impl AsRef<Path>, img: &Raster) -> Result<()> {
    let buf: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let out = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, buf)
        .ok_or_else(|| ImgError::Format("png buffer size mismatch".into()))?;
    out.save(path.as_ref())
        .map_err(|e| ImgError::Format(format!("png write: {e}")))
}

/// Dispatches on extension: `.pgm` or `.png`.
pub fn read_image(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => read_pgm(path),
        Some("png") => read_png(path),
        other => Err(ImgError::Format(format!(
            "unsupported image extension {other:?}"
        ))),
    }
}
