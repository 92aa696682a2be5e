//! XML-aware transforms layered over a built-in backend codec.
//!
//! Both archive kinds share one container layout:
//!
//! ```text
//! magic     4 bytes   "XMIL" or "XZIP"
//! version   1 byte    currently 1
//! backend   1 byte    0 = ari, 1 = bwt, 2 = store
//! parts     u32 LE    number of parts
//! directory parts x (offset u32 LE, stored u32 LE, raw u32 LE)
//! data      concatenated stored parts; offsets are relative to this area
//! ```
//!
//! `raw` is the part length before backend coding. Parts of raw length zero
//! are stored as zero bytes. Parts marked plain (the XML-ZIP tree and
//! mapping) are stored verbatim regardless of the backend.

mod xmill;
mod xmlzip;

use thiserror::Error;

pub use xmill::{
    xmill_compress, xmill_decompress, xmill_join, xmill_split, Container, ContainerSpec, Pattern, Rule,
    SubCompressor, XmillParts,
};
pub use xmlzip::{
    fragment_count, xmlzip_compress, xmlzip_decompress, xmlzip_join, xmlzip_split, XmlzipParts,
};

use crate::codec::{Backend, CodecError};
use crate::xml::XmlError;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("invalid container rule `{rule}`: {message}")]
    Spec { rule: String, message: String },
    #[error("document contains comments; remove them before this transform")]
    Comments,
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("corrupt archive: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("backend failed on part {part}: {source}")]
    Backend {
        part: usize,
        #[source]
        source: Box<CodecError>,
    },
}

fn corrupt(msg: impl Into<String>) -> TransformError {
    TransformError::Corrupt(msg.into())
}

pub(crate) const ARCHIVE_VERSION: u8 = 1;

fn backend_code(b: Backend) -> u8 {
    match b {
        Backend::Ari => 0,
        Backend::Bwt => 1,
        Backend::Store => 2,
    }
}

pub(crate) struct Part {
    pub data: Vec<u8>,
    /// Stored verbatim instead of backend-coded.
    pub plain: bool,
}

pub(crate) fn write_archive(magic: &[u8; 4], backend: Backend, parts: &[Part]) -> Result<Vec<u8>, TransformError> {
    let pipeline = backend.pipeline();
    let mut stored: Vec<Vec<u8>> = Vec::with_capacity(parts.len());
    for p in parts {
        stored.push(if p.plain || p.data.is_empty() {
            p.data.clone()
        } else {
            pipeline.encode_raw(&p.data)
        });
    }
    let u32_of = |n: usize| {
        u32::try_from(n).map_err(|_| TransformError::Param("archive parts are limited to 4 GiB".into()))
    };
    let mut out = Vec::new();
    out.extend_from_slice(magic);
    out.push(ARCHIVE_VERSION);
    out.push(backend_code(backend));
    out.extend_from_slice(&u32_of(parts.len())?.to_le_bytes());
    let mut offset = 0usize;
    for (p, s) in parts.iter().zip(&stored) {
        out.extend_from_slice(&u32_of(offset)?.to_le_bytes());
        out.extend_from_slice(&u32_of(s.len())?.to_le_bytes());
        out.extend_from_slice(&u32_of(p.data.len())?.to_le_bytes());
        offset += s.len();
    }
    for s in stored {
        out.extend_from_slice(&s);
    }
    Ok(out)
}

/// Splits an archive into its decoded parts. `plain(i)` tells which parts
/// were stored verbatim.
pub(crate) fn read_archive(
    magic: &[u8; 4],
    backend: Backend,
    bytes: &[u8],
    plain: impl Fn(usize) -> bool,
) -> Result<Vec<Vec<u8>>, TransformError> {
    if bytes.len() < 10 || &bytes[..4] != magic {
        return Err(corrupt("bad magic"));
    }
    if bytes[4] != ARCHIVE_VERSION {
        return Err(corrupt(format!("unsupported archive version {}", bytes[4])));
    }
    if bytes[5] != backend_code(backend) {
        return Err(corrupt("archive was written with a different backend"));
    }
    let count = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let dir_end = count
        .checked_mul(12)
        .and_then(|d| d.checked_add(10))
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| corrupt("truncated part directory"))?;
    let data = &bytes[dir_end..];
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
    let pipeline = backend.pipeline();
    let mut parts = Vec::with_capacity(count);
    let mut expected_offset = 0usize;
    for i in 0..count {
        let at = 10 + 12 * i;
        let (offset, stored, raw) = (word(at), word(at + 4), word(at + 8));
        if offset != expected_offset || offset + stored > data.len() {
            return Err(corrupt(format!("part {i} lies outside the archive")));
        }
        expected_offset += stored;
        let body = &data[offset..offset + stored];
        let decoded = if plain(i) || raw == 0 {
            if body.len() != raw {
                return Err(corrupt(format!("part {i} has {} bytes, expected {raw}", body.len())));
            }
            body.to_vec()
        } else {
            pipeline.decode_raw(body, raw).map_err(|e| TransformError::Backend {
                part: i,
                source: Box::new(e),
            })?
        };
        parts.push(decoded);
    }
    if expected_offset != data.len() {
        return Err(corrupt("trailing bytes after the last part"));
    }
    Ok(parts)
}

pub(crate) fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

pub(crate) fn put_str(out: &mut Vec<u8>, s: &str) {
    put_varint(out, s.len() as u64);
    out.extend_from_slice(s.as_bytes());
}

pub(crate) struct Reader<'a> {
    pub data: &'a [u8],
    pub pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.pos == self.data.len()
    }

    pub fn byte(&mut self) -> Result<u8, TransformError> {
        let b = *self.data.get(self.pos).ok_or_else(|| corrupt("unexpected end of stream"))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn varint(&mut self) -> Result<u64, TransformError> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.byte()?;
            v |= ((b & 0x7f) as u64) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(corrupt("varint too long"))
    }

    pub fn usize(&mut self) -> Result<usize, TransformError> {
        usize::try_from(self.varint()?).map_err(|_| corrupt("length out of range"))
    }

    pub fn string(&mut self) -> Result<String, TransformError> {
        let n = self.usize()?;
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.data.len())
            .ok_or_else(|| corrupt("string runs past the end of the stream"))?;
        let s = std::str::from_utf8(&self.data[self.pos..end]).map_err(|_| corrupt("string is not UTF-8"))?;
        self.pos = end;
        Ok(s.to_string())
    }

    pub fn opt_string(&mut self) -> Result<Option<String>, TransformError> {
        match self.byte()? {
            0 => Ok(None),
            1 => Ok(Some(self.string()?)),
            b => Err(corrupt(format!("bad option tag {b}"))),
        }
    }
}

pub(crate) fn put_opt_str(out: &mut Vec<u8>, s: Option<&str>) {
    match s {
        None => out.push(0),
        Some(s) => {
            out.push(1);
            put_str(out, s);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn varint_roundtrip() {
        for v in [0u64, 1, 127, 128, 300, u32::MAX as u64, u64::MAX] {
            let mut out = Vec::new();
            put_varint(&mut out, v);
            let mut r = Reader::new(&out);
            assert_eq!(r.varint().unwrap(), v);
            assert!(r.at_end());
        }
        assert!(Reader::new(&[0x80]).varint().is_err());
    }

    #[test]
    fn archive_roundtrip_and_faults() {
        let parts = vec![
            Part {
                data: b"plain text".to_vec(),
                plain: true,
            },
            Part {
                data: b"abcabcabcabc".to_vec(),
                plain: false,
            },
            Part {
                data: Vec::new(),
                plain: false,
            },
        ];
        for backend in [Backend::Ari, Backend::Bwt, Backend::Store] {
            let bytes = write_archive(b"TEST", backend, &parts).unwrap();
            let back = read_archive(b"TEST", backend, &bytes, |i| i == 0).unwrap();
            assert_eq!(back.len(), 3);
            for (p, b) in parts.iter().zip(&back) {
                assert_eq!(&p.data, b);
            }
            assert!(read_archive(b"XXXX", backend, &bytes, |i| i == 0).is_err());
            assert!(read_archive(b"TEST", backend, &bytes[..bytes.len() - 1], |i| i == 0).is_err());
        }
        let bytes = write_archive(b"TEST", Backend::Ari, &parts).unwrap();
        assert!(read_archive(b"TEST", Backend::Bwt, &bytes, |i| i == 0).is_err());
    }
}
