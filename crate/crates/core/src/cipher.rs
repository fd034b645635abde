//! Stream-cipher encryption of coordinate bit patterns and payload bytes.
//!
//! The keystream is ChaCha20 (96-bit nonce) output read as a bit stream, least
//! significant bit of each byte first. Coordinate words consume it in vertex
//! order, then x, y, z, with `l` bits per word starting at bit `k = 0`; since
//! `l` is a multiple of 8 that is the same as XOR-ing each word with the next
//! `l / 8` keystream bytes read little-endian.

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use thiserror::Error;

use crate::quantizer::QuantizedMesh;

pub const KEY_LEN: usize = 32;
pub const NONCE_LEN: usize = 12;

pub type Nonce = [u8; NONCE_LEN];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("expected {expected} hex characters, got {found}")]
    Length { expected: usize, found: usize },
    #[error("invalid hex string: {0}")]
    Hex(String),
}

/// A 256-bit stream-cipher key.
#[derive(Clone, PartialEq, Eq)]
pub struct SecretKey([u8; KEY_LEN]);

impl SecretKey {
    pub fn from_bytes(bytes: [u8; KEY_LEN]) -> Self {
        Self(bytes)
    }

    /// Parse 64 hex characters.
    pub fn from_hex(text: &str) -> Result<Self, KeyError> {
        parse_hex::<KEY_LEN>(text).map(Self)
    }

    pub fn as_bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }
}

impl std::fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

/// Parse `2 * N` hex characters into bytes.
pub fn parse_hex<const N: usize>(text: &str) -> Result<[u8; N], KeyError> {
    let text = text.trim();
    if text.len() != 2 * N {
        return Err(KeyError::Length {
            expected: 2 * N,
            found: text.len(),
        });
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(text, &mut out).map_err(|e| KeyError::Hex(e.to_string()))?;
    Ok(out)
}

/// Model key, data key and the per-mesh nonce.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub model_key: SecretKey,
    pub data_key: SecretKey,
    pub nonce: Nonce,
}

fn keystream_bytes(key: &SecretKey, nonce: &Nonce, len: usize) -> Vec<u8> {
    let mut buf = vec![0u8; len];
    let mut cipher = ChaCha20::new(key.as_bytes().into(), nonce.into());
    cipher.apply_keystream(&mut buf);
    buf
}

/// The first `bit_count` keystream bits, least significant bit of each byte
/// first.
pub fn keystream(key: &SecretKey, nonce: &Nonce, bit_count: usize) -> Vec<bool> {
    keystream_bytes(key, nonce, bit_count.div_ceil(8))
        .iter()
        .flat_map(|&b| (0..8).map(move |k| (b >> k) & 1 == 1))
        .take(bit_count)
        .collect()
}

/// XOR `words` (each `l` bits) with successive `l / 8`-byte little-endian
/// chunks of `stream`.
pub fn apply_keystream(words: &mut [u64], l: u32, stream: &[u8]) {
    let width = l as usize / 8;
    assert!(stream.len() >= words.len() * width, "keystream too short");
    for (word, chunk) in words.iter_mut().zip(stream.chunks_exact(width)) {
        let mut bytes = [0u8; 8];
        bytes[..width].copy_from_slice(chunk);
        *word ^= u64::from_le_bytes(bytes);
    }
}

/// Encrypted coordinates plus the public mesh data that travels with them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedMesh {
    pub precision: u32,
    pub bits: u32,
    pub nonce: Nonce,
    /// `3n` words of `bits` bits, vertex order, x then y then z.
    pub words: Vec<u64>,
    pub faces: Vec<[u32; 3]>,
}

impl EncryptedMesh {
    pub fn vertex_count(&self) -> usize {
        self.words.len() / 3
    }
}

fn xor_words(words: &mut [u64], l: u32, key: &SecretKey, nonce: &Nonce) {
    let stream = keystream_bytes(key, nonce, words.len() * l as usize / 8);
    apply_keystream(words, l, &stream);
}

/// `e = b XOR c` on every coordinate bit.
pub fn encrypt_mesh(q: &QuantizedMesh, model_key: &SecretKey, nonce: &Nonce) -> EncryptedMesh {
    let mut words = q.to_words();
    xor_words(&mut words, q.bits(), model_key, nonce);
    EncryptedMesh {
        precision: q.precision(),
        bits: q.bits(),
        nonce: *nonce,
        words,
        faces: q.faces().to_vec(),
    }
}

/// XOR-decrypt every coordinate word. Applied to a marked container this
/// yields plaintext everywhere except the payload-carrying planes.
pub fn decrypt_words(words: &[u64], l: u32, model_key: &SecretKey, nonce: &Nonce) -> Vec<u64> {
    let mut words = words.to_vec();
    xor_words(&mut words, l, model_key, nonce);
    words
}

/// Inverse of [`encrypt_mesh`].
pub fn decrypt_mesh(enc: &EncryptedMesh, model_key: &SecretKey) -> QuantizedMesh {
    let words = decrypt_words(&enc.words, enc.bits, model_key, &enc.nonce);
    QuantizedMesh::from_words(enc.precision, &words, enc.faces.clone())
        .expect("encrypted mesh carries a valid precision")
}

/// XOR payload bytes with the data-key keystream. Involutive.
pub fn encrypt_payload(data: &[u8], data_key: &SecretKey, nonce: &Nonce) -> Vec<u8> {
    let mut out = data.to_vec();
    let mut cipher = ChaCha20::new(data_key.as_bytes().into(), nonce.into());
    cipher.apply_keystream(&mut out);
    out
}
