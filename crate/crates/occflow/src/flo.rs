use std::io::{Read, Write};
use std::path::Path;

use imgcore::VectorField;

use crate::{FlowError, Result};

const FLO_TAG: f32 = 202021.25;

/// Writes a flow field in the `.flo` layout: float32 tag 202021.25, int32
/// width, int32 height, then row-major interleaved (u, v) float32 pairs,
/// all little-endian.
pub fn write_flo(path: impl AsRef<Path>, flow: &VectorField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&FLO_TAG.to_le_bytes())?;
    f.write_all(&(flow.width() as i32).to_le_bytes())?;
    f.write_all(&(flow.height() as i32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(flow.width() * flow.height() * 8);
    for y in 0..flow.height() {
        for x in 0..flow.width() {
            let (u, v) = flow.get(x, y);
            buf.extend_from_slice(&(u as f32).to_le_bytes());
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    f.write_all(&buf)?;
    Ok(())
}

/// Reads a `.flo` flow field.
pub fn read_flo(path: impl AsRef<Path>) -> Result<VectorField> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 12 {
        return Err(FlowError::Format("truncated header".into()));
    }
    let tag = f32::from_le_bytes(bytes[0..4].try_into().unwrap());
    if tag != FLO_TAG {
        return Err(FlowError::Format(format!("bad tag {tag}")));
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if w <= 0 || h <= 0 {
        return Err(FlowError::Format(format!("bad dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let need = 12 + 8 * w * h;
    if bytes.len() < need {
        return Err(FlowError::Format(format!(
            "raster truncated: {} bytes, need {need}",
            bytes.len()
        )));
    }
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    let mut at = 12;
    for _ in 0..w * h {
        u.push(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64);
        v.push(f32::from_le_bytes(bytes[at + 4..at + 8].try_into().unwrap()) as f64);
        at += 8;
    }
    Ok(VectorField::new(w, h, u, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.flo");
        let mut f = VectorField::zeros(3, 2);
        f.set(0, 0, 1.5, -2.0);
        f.set(2, 1, 0.25, 4.0);
        write_flo(&p, &f).unwrap();

        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 12 + 8 * 6);
        assert_eq!(f32::from_le_bytes(bytes[0..4].try_into().unwrap()), 202021.25);
        assert_eq!(i32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(i32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        // First pixel pair is (1.5, -2.0).
        assert_eq!(f32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1.5);
        assert_eq!(f32::from_le_bytes(bytes[16..20].try_into().unwrap()), -2.0);

        let back = read_flo(&p).unwrap();
        assert_eq!(back.get(0, 0), (1.5, -2.0));
        assert_eq!(back.get(2, 1), (0.25, 4.0));
    }
}
