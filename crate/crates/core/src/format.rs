//! Binary container shared by model files and matrix files.
//!
//! ```text
//! "RNMM" | version: u32 | kind: u8 | payload ... | crc32: u32
//! ```
//!
//! Integers and reals are little-endian; matrices are `rows: u64, cols: u64`
//! followed by `rows·cols` IEEE-754 doubles in row-major order. The CRC-32
//! covers every byte before it.

use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"RNMM";
pub const VERSION: u32 = 1;
/// Kind byte of a bare matrix file.
pub const KIND_MATRIX: u8 = 0xFF;

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: u8) -> Self {
        let mut buf = Vec::with_capacity(1024);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind);
        Writer { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
    pub fn matrix(&mut self, m: &Matrix) {
        self.u64(m.nrows() as u64);
        self.u64(m.ncols() as u64);
        // iter() walks logical row-major order regardless of memory layout
        for v in m.iter() {
            self.f64(*v);
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        let crc = crc32fast::hash(&self.buf);
        self.buf.extend_from_slice(&crc.to_le_bytes());
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates magic, version, and checksum; returns the reader positioned
    /// after the kind byte, plus the kind.
    pub fn open(bytes: &'a [u8]) -> Result<(Self, u8)> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic bytes".into()));
        }
        if bytes.len() < 4 + 4 + 1 + 4 {
            return Err(Error::Format("truncated header".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::VersionMismatch {
                found: version,
                expected: VERSION,
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let kind = body[8];
        Ok((Reader { data: body, pos: 9 }, kind))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::Format(format!(
                "truncated payload at byte {}",
                self.pos
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count overflows usize".into()))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn str(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| Error::Format("string is not UTF-8".into()))
    }
    pub fn matrix(&mut self) -> Result<Matrix> {
        let rows = self.usize()?;
        let cols = self.usize()?;
        let count = rows
            .checked_mul(cols)
            .filter(|c| c.checked_mul(8).is_some_and(|b| b <= self.data.len() - self.pos))
            .ok_or_else(|| Error::Format(format!("matrix {rows}x{cols} exceeds payload")))?;
        let raw = self.take(count * 8)?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Matrix::from_shape_vec((rows, cols), values).expect("shape checked"))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut w = Writer::new(KIND_MATRIX);
    w.matrix(m);
    w.finish()
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    let (mut r, kind) = Reader::open(bytes)?;
    if kind != KIND_MATRIX {
        return Err(Error::Format(format!("kind {kind:#04x} is not a matrix")));
    }
    let m = r.matrix()?;
    r.finish()?;
    Ok(m)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_matrix(m)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_little_endian_row_major() {
        let m = ndarray::array![[1.0, 2.0], [3.0, 4.0]];
        let bytes = encode_matrix(&m);
        assert_eq!(&bytes[..4], b"RNMM");
        assert_eq!(&bytes[4..8], &1u32.to_le_bytes());
        assert_eq!(bytes[8], KIND_MATRIX);
        assert_eq!(&bytes[9..17], &2u64.to_le_bytes());
        assert_eq!(&bytes[25..33], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[33..41], &2.0f64.to_le_bytes());
        assert_eq!(bytes.len(), 9 + 16 + 32 + 4);
        // column-major storage serializes identically
        let f = m.t().as_standard_layout().t().to_owned();
        assert_eq!(encode_matrix(&f), bytes);
    }

    #[test]
    fn rejects_corruption() {
        let bytes = encode_matrix(&ndarray::array![[1.0]]);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_matrix(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[20] ^= 1;
        assert!(matches!(decode_matrix(&bad), Err(Error::Checksum { .. })));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_matrix(&bad), Err(Error::VersionMismatch { found: 9, .. })));
        assert!(decode_matrix(&bytes[..bytes.len() - 9]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_bit_exact(rows in 0usize..6, cols in 0usize..6, seed in any::<u64>()) {
            let m = Matrix::from_shape_fn((rows, cols), |(i, j)| {
                f64::from_bits(seed.rotate_left((i * 7 + j) as u32) & 0x7fef_ffff_ffff_ffff)
            });
            let back = decode_matrix(&encode_matrix(&m)).unwrap();
            prop_assert_eq!(back.dim(), m.dim());
            for (a, b) in back.iter().zip(m.iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }
    }
}
