//! Binary field dumps and CSV export.
//!
//! Field files carry a 64-byte header — magic `KMLF`, format version,
//! grid counts and extents — followed by the samples as little-endian
//! 64-bit floats in `(x-node, v-node)` order (x-major).

use crate::field::PhaseField;
use crate::grid::{GridError, SpatialGrid, VelocityGrid};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"KMLF";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 64;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic (not a KMLF field dump)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    BadVersion(u32),
    #[error("header grid parameters invalid: {0}")]
    BadGrid(#[from] GridError),
    #[error("payload length does not match header")]
    TruncatedPayload,
}

/// Writes a field dump. The payload is re-ordered from the internal layout
/// to x-major file order.
pub fn write_field(path: &Path, field: &PhaseField) -> Result<(), IoError> {
    let sg = field.spatial_grid();
    let vg = field.velocity_grid();
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(&MAGIC);
    header[4..8].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
    header[8..12].copy_from_slice(&(sg.points_per_axis() as u32).to_le_bytes());
    header[12..16].copy_from_slice(&(vg.points_per_axis() as u32).to_le_bytes());
    header[16..24].copy_from_slice(&sg.half_extent().to_le_bytes());
    header[24..32].copy_from_slice(&vg.half_extent().to_le_bytes());
    w.write_all(&header)?;
    for x_idx in 0..sg.len() {
        for v_idx in 0..vg.len() {
            w.write_all(&field.get(x_idx, v_idx).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a field dump written by [`write_field`].
pub fn read_field(path: &Path) -> Result<PhaseField, IoError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[0..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(IoError::BadVersion(version));
    }
    let n_x = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let n_v = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let x_ext = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let v_ext = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let sg = SpatialGrid::new(x_ext, n_x)?;
    let vg = VelocityGrid::new(v_ext, n_v)?;

    let nx3 = sg.len();
    let nv3 = vg.len();
    let mut payload = vec![0u8; nx3 * nv3 * 8];
    r.read_exact(&mut payload)
        .map_err(|_| IoError::TruncatedPayload)?;
    let mut data = vec![0.0f64; nx3 * nv3];
    for x_idx in 0..nx3 {
        for v_idx in 0..nv3 {
            let off = (x_idx * nv3 + v_idx) * 8;
            let bytes: [u8; 8] = payload[off..off + 8].try_into().unwrap();
            data[v_idx * nx3 + x_idx] = f64::from_le_bytes(bytes);
        }
    }
    Ok(PhaseField::from_data(sg, vg, data))
}

/// Writes a `(t, norm_name, value)` CSV of norm histories.
pub fn write_norm_history_csv(
    path: &Path,
    series: &[(String, Vec<(f64, f64)>)],
) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,norm_name,value")?;
    for (name, points) in series {
        for (t, value) in points {
            writeln!(w, "{t},{name},{value}")?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_bump;

    #[test]
    fn field_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.bin");
        let sg = SpatialGrid::new(4.0, 2).unwrap();
        let vg = VelocityGrid::new(6.0, 4).unwrap();
        let f = PhaseField::sample(sg, vg, gaussian_bump(0.7, 1.3)).unwrap();
        write_field(&path, &f).unwrap();
        let g = read_field(&path).unwrap();
        assert_eq!(f.data(), g.data());
        assert_eq!(f.spatial_grid(), g.spatial_grid());
        assert_eq!(f.velocity_grid(), g.velocity_grid());

        // header sanity
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"KMLF");
        assert_eq!(bytes.len(), 64 + 8 * f.len());
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, vec![0u8; 128]).unwrap();
        assert!(matches!(read_field(&path), Err(IoError::BadMagic)));
    }
}
