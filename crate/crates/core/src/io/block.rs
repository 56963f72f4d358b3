use std::path::Path;

use crate::error::{ChemError, Result};

pub const BLOCK_VERSION: u16 = 1;

/// Little-endian f64 matrix: 4-byte magic, u16 version, u64 rows, u64 cols, payload.
pub fn encode_block(magic: &[u8; 4], rows: usize, cols: usize, data: &[f64]) -> Result<Vec<u8>> {
    if rows * cols != data.len() {
        return Err(ChemError::Dimension(format!("{rows}x{cols} block given {} values", data.len())));
    }
    let mut out = Vec::with_capacity(22 + 8 * data.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&BLOCK_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Returns `(rows, cols, data)`.
pub fn decode_block(magic: &[u8; 4], bytes: &[u8]) -> Result<(usize, usize, Vec<f64>)> {
    if bytes.len() < 22 || &bytes[..4] != magic {
        return Err(ChemError::Format(format!(
            "expected a {} block",
            String::from_utf8_lossy(magic)
        )));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != BLOCK_VERSION {
        return Err(ChemError::Format(format!("unsupported block version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(bytes[14..22].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[22..];
    if rows.checked_mul(cols).and_then(|n| n.checked_mul(8)) != Some(payload.len()) {
        return Err(ChemError::Format("block payload length does not match its shape".into()));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((rows, cols, data))
}

pub fn write_block(path: &Path, magic: &[u8; 4], rows: usize, cols: usize, data: &[f64]) -> Result<()> {
    std::fs::write(path, encode_block(magic, rows, cols, data)?)?;
    Ok(())
}

pub fn read_block(path: &Path, magic: &[u8; 4]) -> Result<(usize, usize, Vec<f64>)> {
    decode_block(magic, &std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let data = [1.0, -2.5, 3.25, 0.0, 1e-300, f64::MAX];
        let bytes = encode_block(b"TEST", 2, 3, &data).unwrap();
        assert_eq!(decode_block(b"TEST", &bytes).unwrap(), (2, 3, data.to_vec()));
        assert!(decode_block(b"ELSE", &bytes).is_err());
        assert!(decode_block(b"TEST", &bytes[..bytes.len() - 8]).is_err());
        assert!(encode_block(b"TEST", 2, 2, &data).is_err());
    }
}
