//! Binary stego container.
//!
//! Layout (multi-byte integers little-endian unless noted):
//!
//! | offset | size        | field                                         |
//! |--------|-------------|-----------------------------------------------|
//! | 0      | 4           | magic `MRDH`                                  |
//! | 4      | 2           | version (1)                                   |
//! | 6      | 1           | precision `p`                                 |
//! | 7      | 1           | bits per coordinate `l`                       |
//! | 8      | 1           | partition strategy (0 topology, 1 parity)     |
//! | 9      | 1           | reserved, zero                                |
//! | 10     | 4           | vertex count `n`                              |
//! | 14     | 4           | face count `m`                                |
//! | 18     | 12          | cipher nonce                                  |
//! | 30     | 8           | normalization scale (`f64`, 1.0 when unused)  |
//! | 38     | 4           | auxiliary information length `a`              |
//! | 42     | `a`         | auxiliary information (big-endian record)     |
//! | ...    | `3n * l/8`  | coordinate words, vertex order, x, y, z       |
//! | ...    | `12m`       | faces, three 1-based `u32` indices each       |

use thiserror::Error;

use crate::cipher::{EncryptedMesh, Nonce, NONCE_LEN};
use crate::locmap_codec::{AuxInfo, CodecError};
use crate::quantizer::{bit_length, word_mask};
use crate::topology::Strategy;

pub use crate::mesh_io::Normalization;

pub const MAGIC: [u8; 4] = *b"MRDH";
pub const CONTAINER_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 42;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContainerError {
    #[error("not a container: bad magic bytes")]
    BadMagic,
    #[error("unsupported container version {0} (expected {CONTAINER_VERSION})")]
    VersionMismatch(u16),
    #[error("container truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} unexpected bytes after container end")]
    TrailingBytes(usize),
    #[error("invalid container field: {0}")]
    Invalid(String),
    #[error("corrupt auxiliary information: {0}")]
    Aux(#[from] CodecError),
}

/// Encrypted (and possibly marked) mesh with everything a receiver needs.
#[derive(Debug, Clone, PartialEq)]
pub struct StegoContainer {
    pub precision: u32,
    pub bits: u32,
    pub strategy: Strategy,
    pub nonce: Nonce,
    pub normalization: Normalization,
    pub aux: AuxInfo,
    /// `3n` words of `bits` bits.
    pub words: Vec<u64>,
    /// Cleartext, 1-based.
    pub faces: Vec<[u32; 3]>,
}

impl StegoContainer {
    /// Wrap an encrypted mesh with its auxiliary information.
    pub fn new(
        enc: EncryptedMesh,
        strategy: Strategy,
        aux: AuxInfo,
        normalization: Normalization,
    ) -> Self {
        Self {
            precision: enc.precision,
            bits: enc.bits,
            strategy,
            nonce: enc.nonce,
            normalization,
            aux,
            words: enc.words,
            faces: enc.faces,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.words.len() / 3
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Coordinate section size in bits, `3n * l`.
    pub fn coord_payload_bits(&self) -> usize {
        self.words.len() * self.bits as usize
    }

    pub fn encrypted_mesh(&self) -> EncryptedMesh {
        EncryptedMesh {
            precision: self.precision,
            bits: self.bits,
            nonce: self.nonce,
            words: self.words.clone(),
            faces: self.faces.clone(),
        }
    }

    fn validate(&self) -> Result<(), ContainerError> {
        let expected =
            bit_length(self.precision).map_err(|e| ContainerError::Invalid(e.to_string()))?;
        if expected != self.bits {
            return Err(ContainerError::Invalid(format!(
                "bit length {} does not match precision {} (expected {expected})",
                self.bits, self.precision
            )));
        }
        if !self.words.len().is_multiple_of(3) {
            return Err(ContainerError::Invalid(format!(
                "{} coordinate words is not a multiple of 3",
                self.words.len()
            )));
        }
        let mask = word_mask(self.bits);
        if self.words.iter().any(|&w| w & !mask != 0) {
            return Err(ContainerError::Invalid(format!(
                "coordinate word wider than {} bits",
                self.bits
            )));
        }
        let n = self.vertex_count();
        if let Some(face) = self.faces.iter().find(|f| {
            f.iter().any(|&i| i == 0 || i as usize > n)
                || f[0] == f[1]
                || f[1] == f[2]
                || f[0] == f[2]
        }) {
            return Err(ContainerError::Invalid(format!(
                "face {face:?} invalid for {n} vertices"
            )));
        }
        if !(self.normalization.scale.is_finite() && self.normalization.scale > 0.0) {
            return Err(ContainerError::Invalid("normalization scale".into()));
        }
        Ok(())
    }
}

/// Serialize a container.
pub fn write_container(c: &StegoContainer) -> Vec<u8> {
    let width = c.bits as usize / 8;
    let aux = c.aux.to_bytes();
    let mut out =
        Vec::with_capacity(HEADER_LEN + aux.len() + c.words.len() * width + 12 * c.faces.len());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.push(c.precision as u8);
    out.push(c.bits as u8);
    out.push(c.strategy.code());
    out.push(0);
    out.extend_from_slice(&(c.vertex_count() as u32).to_le_bytes());
    out.extend_from_slice(&(c.faces.len() as u32).to_le_bytes());
    out.extend_from_slice(&c.nonce);
    out.extend_from_slice(&c.normalization.scale.to_le_bytes());
    out.extend_from_slice(&(aux.len() as u32).to_le_bytes());
    out.extend_from_slice(&aux);
    for w in &c.words {
        out.extend_from_slice(&w.to_le_bytes()[..width]);
    }
    for face in &c.faces {
        for i in face {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], ContainerError> {
        let end = self.pos.checked_add(len).ok_or(ContainerError::Truncated {
            needed: usize::MAX,
            available: self.bytes.len(),
        })?;
        let slice = self
            .bytes
            .get(self.pos..end)
            .ok_or(ContainerError::Truncated {
                needed: end,
                available: self.bytes.len(),
            })?;
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, ContainerError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ContainerError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}

/// Parse a container, checking magic, version and every declared length.
pub fn read_container(bytes: &[u8]) -> Result<StegoContainer, ContainerError> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    r.take(4)?;
    let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
    if version != CONTAINER_VERSION {
        return Err(ContainerError::VersionMismatch(version));
    }
    let precision = u32::from(r.u8()?);
    let bits = u32::from(r.u8()?);
    let strategy_code = r.u8()?;
    let strategy = Strategy::from_code(strategy_code)
        .ok_or_else(|| ContainerError::Invalid(format!("strategy code {strategy_code}")))?;
    if r.u8()? != 0 {
        return Err(ContainerError::Invalid("reserved byte is not zero".into()));
    }
    let n = r.u32()? as usize;
    let m = r.u32()? as usize;
    let nonce: Nonce = r.take(NONCE_LEN)?.try_into().expect("nonce length");
    let scale = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
    let aux_len = r.u32()? as usize;
    match bit_length(precision) {
        Ok(expected) if expected == bits => {}
        _ => {
            return Err(ContainerError::Invalid(format!(
                "bit length {bits} does not match precision {precision}"
            )))
        }
    }
    let width = bits as usize / 8;
    let needed = HEADER_LEN as u128 + aux_len as u128 + (3 * n * width) as u128 + 12 * m as u128;
    if needed > bytes.len() as u128 {
        return Err(ContainerError::Truncated {
            needed: usize::try_from(needed).unwrap_or(usize::MAX),
            available: bytes.len(),
        });
    }
    let aux = AuxInfo::from_bytes(r.take(aux_len)?)?;
    let words = r
        .take(3 * n * width)?
        .chunks_exact(width)
        .map(|chunk| {
            let mut buf = [0u8; 8];
            buf[..width].copy_from_slice(chunk);
            u64::from_le_bytes(buf)
        })
        .collect();
    let faces = r
        .take(12 * m)?
        .chunks_exact(12)
        .map(|c| {
            [0, 1, 2].map(|k| u32::from_le_bytes(c[4 * k..4 * k + 4].try_into().expect("4 bytes")))
        })
        .collect();
    if r.pos != bytes.len() {
        return Err(ContainerError::TrailingBytes(bytes.len() - r.pos));
    }
    let container = StegoContainer {
        precision,
        bits,
        strategy,
        nonce,
        normalization: Normalization { scale },
        aux,
        words,
        faces,
    };
    container.validate()?;
    Ok(container)
}
