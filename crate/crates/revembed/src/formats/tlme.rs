//! Per-token embedding tensors: `TLME`, u32 version, u32 n_docs, u32
//! n_tokens, u32 dim, n_docs u32 real lengths, then the f32 payload
//! (document, token, component order). Everything is little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{eof_as, io_at, FormatError};
use revembed_core::tlmagg::{TlmError, TokenTensor};

pub const TLME_MAGIC: &[u8; 4] = b"TLME";
pub const TLME_VERSION: u32 = 1;
const HEADER_BYTES: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TlmeHeader {
    pub n_docs: u32,
    pub n_tokens: u32,
    pub dim: u32,
}

impl TlmeHeader {
    /// Values per document.
    pub fn block(&self) -> usize {
        self.n_tokens as usize * self.dim as usize
    }

    /// Total file size implied by the header.
    pub fn file_len(&self) -> Option<u64> {
        let values = (self.n_docs as u64)
            .checked_mul(self.n_tokens as u64)?
            .checked_mul(self.dim as u64)?;
        HEADER_BYTES
            .checked_add(4 * self.n_docs as u64)?
            .checked_add(values.checked_mul(4)?)
    }
}

fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32, FormatError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(eof_as(what))?;
    Ok(u32::from_le_bytes(b))
}

/// Streams documents one at a time after validating the header.
pub struct TlmeReader<R: Read> {
    input: R,
    header: TlmeHeader,
    real_lengths: Vec<u32>,
    next: usize,
    bytes: Vec<u8>,
}

impl<R: Read> TlmeReader<R> {
    pub fn new(mut input: R) -> Result<Self, FormatError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(eof_as("header"))?;
        if &magic != TLME_MAGIC {
            return Err(FormatError::BadMagic {
                expected: "TLME",
                found: String::from_utf8_lossy(&magic).into_owned(),
            });
        }
        let version = read_u32(&mut input, "header")?;
        if version != TLME_VERSION {
            return Err(FormatError::Version {
                found: version,
                supported: TLME_VERSION,
            });
        }
        let header = TlmeHeader {
            n_docs: read_u32(&mut input, "header")?,
            n_tokens: read_u32(&mut input, "header")?,
            dim: read_u32(&mut input, "header")?,
        };
        if header.n_tokens == 0 || header.dim == 0 {
            return Err(TlmError::EmptyShape.into());
        }
        if header.file_len().is_none() || header.block() > isize::MAX as usize / 4 {
            return Err(FormatError::Oversized(format!(
                "{}x{}x{}",
                header.n_docs, header.n_tokens, header.dim
            )));
        }
        let mut raw = vec![0u8; 4 * header.n_docs as usize];
        input.read_exact(&mut raw).map_err(eof_as("real lengths"))?;
        let real_lengths: Vec<u32> = raw
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        for (doc, &len) in real_lengths.iter().enumerate() {
            if len == 0 || len > header.n_tokens {
                return Err(TlmError::RealLength {
                    doc,
                    len: len as usize,
                    n_tokens: header.n_tokens as usize,
                }
                .into());
            }
        }
        Ok(TlmeReader {
            input,
            header,
            real_lengths,
            next: 0,
            bytes: vec![0u8; 4 * header.block()],
        })
    }

    pub fn header(&self) -> TlmeHeader {
        self.header
    }

    pub fn real_lengths(&self) -> &[u32] {
        &self.real_lengths
    }

    /// The next document's `n_tokens x dim` values, pads included.
    pub fn next_document(&mut self) -> Result<Option<Vec<f32>>, FormatError> {
        if self.next == self.header.n_docs as usize {
            return Ok(None);
        }
        self.input.read_exact(&mut self.bytes).map_err(eof_as("payload"))?;
        let values: Vec<f32> = self
            .bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let real = self.real_lengths[self.next] as usize * self.header.dim as usize;
        if values[..real].iter().any(|x| !x.is_finite()) {
            return Err(TlmError::NonFinite { doc: self.next }.into());
        }
        self.next += 1;
        Ok(Some(values))
    }

    /// Fails if bytes remain after the last document.
    pub fn finish(mut self) -> Result<(), FormatError> {
        let mut rest = Vec::new();
        let extra = self.input.read_to_end(&mut rest)?;
        if extra > 0 {
            return Err(FormatError::TrailingData(extra as u64));
        }
        Ok(())
    }
}

/// Reads and fully validates a token-tensor file.
pub fn read_token_tensor(path: &Path) -> Result<TokenTensor, FormatError> {
    let file = File::open(path).map_err(io_at(path))?;
    let actual = file.metadata().map_err(io_at(path))?.len();
    let mut reader = TlmeReader::new(BufReader::new(file))?;
    let expected = reader.header().file_len().unwrap_or(u64::MAX);
    if actual < expected {
        return Err(FormatError::Truncated("payload"));
    }
    if actual > expected {
        return Err(FormatError::TrailingData(actual - expected));
    }
    let h = reader.header();
    let mut payload = Vec::with_capacity(h.n_docs as usize * h.block());
    while let Some(doc) = reader.next_document()? {
        payload.extend_from_slice(&doc);
    }
    let real_lengths = reader.real_lengths().to_vec();
    reader.finish()?;
    Ok(TokenTensor::new(
        h.n_tokens as usize,
        h.dim as usize,
        real_lengths,
        payload,
    )?)
}

pub fn write_token_tensor<W: Write>(output: W, tensor: &TokenTensor) -> Result<(), FormatError> {
    let mut w = BufWriter::new(output);
    let to_u32 = |v: usize| u32::try_from(v).map_err(|_| FormatError::Oversized(v.to_string()));
    w.write_all(TLME_MAGIC)?;
    for v in [
        TLME_VERSION,
        to_u32(tensor.n_docs())?,
        to_u32(tensor.n_tokens())?,
        to_u32(tensor.dim())?,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for len in tensor.real_lengths() {
        w.write_all(&len.to_le_bytes())?;
    }
    for x in tensor.payload() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TokenTensor {
        let payload: Vec<f32> = (0..2 * 3 * 2).map(|i| i as f32 * 0.5 - 1.0).collect();
        TokenTensor::new(3, 2, vec![3, 1], payload).unwrap()
    }

    fn bytes(t: &TokenTensor) -> Vec<u8> {
        let mut out = Vec::new();
        write_token_tensor(&mut out, t).unwrap();
        out
    }

    #[test]
    fn layout_is_exact() {
        let b = bytes(&sample());
        assert_eq!(&b[..4], b"TLME");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(&b[20..24], &3u32.to_le_bytes());
        assert_eq!(&b[28..32], &(-1.0f32).to_le_bytes());
        assert_eq!(b.len(), 20 + 8 + 12 * 4);
    }

    #[test]
    fn bad_magic_and_version() {
        let mut b = bytes(&sample());
        b[..4].copy_from_slice(b"XXXX");
        let err = TlmeReader::new(&b[..]).err().unwrap();
        assert!(err.to_string().starts_with("bad magic"), "{err}");
        let mut b = bytes(&sample());
        b[4] = 2;
        assert!(matches!(
            TlmeReader::new(&b[..]),
            Err(FormatError::Version { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn truncated_stream() {
        let b = bytes(&sample());
        let mut r = TlmeReader::new(&b[..b.len() - 1]).unwrap();
        r.next_document().unwrap();
        assert!(matches!(r.next_document(), Err(FormatError::Truncated("payload"))));
    }

    #[test]
    fn real_length_range() {
        let mut b = bytes(&sample());
        b[20..24].copy_from_slice(&4u32.to_le_bytes());
        assert!(matches!(
            TlmeReader::new(&b[..]),
            Err(FormatError::Tensor(TlmError::RealLength { doc: 0, .. }))
        ));
        b[20..24].copy_from_slice(&0u32.to_le_bytes());
        assert!(TlmeReader::new(&b[..]).is_err());
    }
}
