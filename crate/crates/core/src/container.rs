//! Versioned binary container shared by checkpoints and datasets.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    4 bytes  b"AIPC"
//! version  u16
//! kind     u8       1 = network, 2 = dataset
//! header   u64 length + UTF-8 JSON
//! sections repeated: u8 tag (1 = f64 array, 2 = byte array), u64 count, payload
//! ```

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AIPC";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Network = 1,
    Dataset = 2,
}

const TAG_F64: u8 = 1;
const TAG_BYTES: u8 = 2;

pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(kind: Kind, header: &str) -> Self {
        let mut buf = Vec::with_capacity(64 + header.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.push(kind as u8);
        buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
        buf.extend_from_slice(header.as_bytes());
        Self { buf }
    }

    pub fn f64s(&mut self, values: &[f64]) {
        self.buf.push(TAG_F64);
        self.buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn bytes(&mut self, values: &[u8]) {
        self.buf.push(TAG_BYTES);
        self.buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
        self.buf.extend_from_slice(values);
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    /// Validates the preamble and returns the reader positioned after the header,
    /// together with the header text.
    pub fn open(buf: &'a [u8], kind: Kind) -> Result<(Self, String)> {
        let mut r = Reader { buf, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != MAGIC {
            return Err(r.err_at(0, "bad magic; not a container file"));
        }
        let version = u16::from_le_bytes(r.take(2, "version")?.try_into().unwrap());
        if version != VERSION {
            return Err(Error::UnsupportedVersion { found: version, expected: VERSION });
        }
        let kind_at = r.pos;
        let found = r.take(1, "kind")?[0];
        if found != kind as u8 {
            return Err(r.err_at(kind_at, format!("container holds kind {found}, expected {}", kind as u8)));
        }
        let len = r.u64("header length")?;
        let header = r.take(len, "header")?;
        let header = std::str::from_utf8(header)
            .map_err(|e| r.err_at(r.pos - len as usize, format!("header is not UTF-8: {e}")))?
            .to_string();
        Ok((r, header))
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn err_at(&self, pos: usize, message: impl Into<String>) -> Error {
        Error::Format { offset: pos as u64, message: message.into() }
    }

    fn take(&mut self, n: u64, what: &str) -> Result<&'a [u8]> {
        let remaining = (self.buf.len() - self.pos) as u64;
        if n > remaining {
            return Err(
                self.err_at(self.pos, format!("truncated while reading {what}: need {n} bytes, {remaining} remain"))
            );
        }
        let s = &self.buf[self.pos..self.pos + n as usize];
        self.pos += n as usize;
        Ok(s)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn section(&mut self, tag: u8, what: &str) -> Result<u64> {
        let at = self.pos;
        let found = self.take(1, what)?[0];
        if found != tag {
            return Err(self.err_at(at, format!("expected section tag {tag} for {what}, found {found}")));
        }
        self.u64(what)
    }

    pub fn f64s(&mut self, what: &str, expected: usize) -> Result<Vec<f64>> {
        let at = self.pos;
        let count = self.section(TAG_F64, what)?;
        if count != expected as u64 {
            return Err(self.err_at(at, format!("{what}: expected {expected} values, header says {count}")));
        }
        let start = self.pos;
        let raw = self.take(count.saturating_mul(8), what)?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(self.err_at(start + 8 * i, format!("{what}: value {i} is not finite")));
        }
        Ok(values)
    }

    pub fn bytes(&mut self, what: &str, expected: usize) -> Result<Vec<u8>> {
        let at = self.pos;
        let count = self.section(TAG_BYTES, what)?;
        if count != expected as u64 {
            return Err(self.err_at(at, format!("{what}: expected {expected} bytes, header says {count}")));
        }
        Ok(self.take(count, what)?.to_vec())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.err_at(self.pos, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }

    pub fn format_error(&self, message: impl Into<String>) -> Error {
        self.err_at(self.pos, message)
    }
}
