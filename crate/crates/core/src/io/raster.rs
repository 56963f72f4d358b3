use std::path::Path;

use crate::error::{ChemError, Result};
use crate::image::Image;

pub const RASTER_MAGIC: &[u8; 4] = b"CHEM";
pub const RASTER_VERSION: u16 = 1;
const HEADER: usize = 4 + 2 + 4 + 4;

/// `CHEM` magic, u16 version, u32 height, u32 width, then little-endian f64
/// samples in row-major order.
pub fn encode_raster(img: &Image) -> Result<Vec<u8>> {
    let h = u32::try_from(img.height()).map_err(|_| ChemError::Format("height exceeds u32".into()))?;
    let w = u32::try_from(img.width()).map_err(|_| ChemError::Format("width exceeds u32".into()))?;
    let mut out = Vec::with_capacity(HEADER + 8 * img.len());
    out.extend_from_slice(RASTER_MAGIC);
    out.extend_from_slice(&RASTER_VERSION.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    for v in img.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_raster(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < HEADER || &bytes[..4] != RASTER_MAGIC {
        return Err(ChemError::Format("not a CHEM raster".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != RASTER_VERSION {
        return Err(ChemError::Format(format!("unsupported raster version {version}")));
    }
    let h = u32::from_le_bytes(bytes[6..10].try_into().expect("4 bytes")) as usize;
    let w = u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")) as usize;
    let payload = &bytes[HEADER..];
    let expect = h
        .checked_mul(w)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| ChemError::Format("raster size overflows".into()))?;
    if payload.len() != expect {
        return Err(ChemError::Format(format!(
            "raster payload has {} bytes, expected {expect}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Image::new(h, w, data).map_err(|e| ChemError::Format(format!("bad raster contents: {e}")))
}

pub fn write_raster(path: &Path, img: &Image) -> Result<()> {
    std::fs::write(path, encode_raster(img)?)?;
    Ok(())
}

pub fn read_raster(path: &Path) -> Result<Image> {
    decode_raster(&std::fs::read(path)?)
}

/// Min-max scaled binary 16-bit PGM (big-endian samples). Returns the
/// `(min, max)` used for scaling.
pub fn encode_pgm16(img: &Image) -> (Vec<u8>, f64, f64) {
    let (lo, hi) = (img.min(), img.max());
    let span = hi - lo;
    let mut out = format!("P5\n{} {}\n65535\n", img.width(), img.height()).into_bytes();
    for &v in img.data() {
        let q = if span > 0.0 {
            ((v - lo) / span * 65535.0).round() as u16
        } else {
            0
        };
        out.extend_from_slice(&q.to_be_bytes());
    }
    (out, lo, hi)
}

pub fn write_pgm16(path: &Path, img: &Image) -> Result<(f64, f64)> {
    let (bytes, lo, hi) = encode_pgm16(img);
    std::fs::write(path, bytes)?;
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let img = Image::from_fn(2, 3, |r, c| (r * 3 + c) as f64 - 0.5);
        let bytes = encode_raster(&img).unwrap();
        assert_eq!(&bytes[..4], b"CHEM");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[2, 0, 0, 0]);
        assert_eq!(&bytes[10..14], &[3, 0, 0, 0]);
        assert_eq!(bytes.len(), 14 + 6 * 8);
        assert_eq!(&bytes[14..22], &(-0.5f64).to_le_bytes());
    }

    #[test]
    fn rejects_corrupt_rasters() {
        let img = Image::zeros(2, 2);
        let good = encode_raster(&img).unwrap();
        assert!(decode_raster(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_raster(&bad).is_err());
        let mut bad = good.clone();
        bad[4] = 2;
        assert!(decode_raster(&bad).is_err());
        let mut bad = good;
        bad[14..22].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode_raster(&bad).is_err());
    }

    #[test]
    fn pgm_scaling() {
        let img = Image::from_rows(&[vec![-1.0, 0.0], vec![0.5, 1.0]]).unwrap();
        let (bytes, lo, hi) = encode_pgm16(&img);
        assert_eq!((lo, hi), (-1.0, 1.0));
        let header = b"P5\n2 2\n65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let px: Vec<u16> = bytes[header.len()..].chunks(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect();
        assert_eq!(px, vec![0, 32768, 49151, 65535]);
    }

    proptest! {
        #[test]
        fn raster_round_trip_is_bit_exact(h in 1usize..9, w in 1usize..9, seed in any::<u64>()) {
            let mut s = seed;
            let img = Image::from_fn(h, w, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((s >> 2) & 0x7FEF_FFFF_FFFF_FFFF) * if s & 1 == 1 { -1.0 } else { 1.0 }
            });
            let back = decode_raster(&encode_raster(&img).unwrap()).unwrap();
            prop_assert!(back.data().iter().zip(img.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
            prop_assert_eq!(back.shape(), img.shape());
        }
    }
}
