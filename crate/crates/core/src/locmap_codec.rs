//! Location-map compression and the auxiliary-information record.
//!
//! Labels are coded with an adaptive order-0 model over `{0..=l}` feeding a
//! 32-bit range coder (LZMA-style carry propagation through a cached byte).
//! Every symbol count starts at 1 and grows by 1 per occurrence; counts are
//! halved once the total passes [`MAX_TOTAL`]. A terminator symbol with a
//! fixed count of 1 closes the stream so a wrong label count is always
//! detected instead of silently decoding garbage.
//!
//! Auxiliary information layout (all big-endian):
//!
//! | bytes | field                                   |
//! |-------|-----------------------------------------|
//! | 4     | embedding-set size                      |
//! | 8     | embedded payload length in bits         |
//! | 4     | compressed map length in bytes          |
//! | ...   | compressed map                          |

use thiserror::Error;

use crate::predictor::LabelMap;

/// Model total above which all counts are halved.
pub const MAX_TOTAL: u32 = 1 << 16;

const TOP: u32 = 1 << 24;

/// Fixed header size of a serialized [`AuxInfo`], in bytes.
pub const AUX_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("label {label} exceeds bit length {bits}")]
    LabelOutOfRange { label: u8, bits: u32 },
    #[error("compressed map ended prematurely")]
    PrematureEnd,
    #[error("compressed map is corrupt (decoded value out of range)")]
    SymbolOutOfRange,
    #[error("compressed map does not hold exactly {expected} labels")]
    CountMismatch { expected: usize },
    #[error("{0} unused bytes after compressed map")]
    TrailingBytes(usize),
    #[error("auxiliary information truncated: need {needed} bytes, have {available}")]
    AuxTruncated { needed: usize, available: usize },
}

/// Adaptive frequency table over `{0..=l}` plus a terminator.
struct Model {
    freq: Vec<u32>,
    total: u32,
}

impl Model {
    fn new(bits: u32) -> Self {
        let symbols = bits as usize + 2;
        Self {
            freq: vec![1; symbols],
            total: symbols as u32,
        }
    }

    fn terminator(&self) -> usize {
        self.freq.len() - 1
    }

    fn cumulative(&self, symbol: usize) -> u32 {
        self.freq[..symbol].iter().sum()
    }

    fn find(&self, target: u32) -> (usize, u32) {
        let mut cum = 0;
        for (s, &f) in self.freq.iter().enumerate() {
            if target < cum + f {
                return (s, cum);
            }
            cum += f;
        }
        unreachable!("target below total")
    }

    fn update(&mut self, symbol: usize) {
        if symbol == self.terminator() {
            return;
        }
        self.freq[symbol] += 1;
        self.total += 1;
        if self.total > MAX_TOTAL {
            let term = self.terminator();
            self.total = 0;
            for (s, f) in self.freq.iter_mut().enumerate() {
                if s != term {
                    *f = f.div_ceil(2);
                }
                self.total += *f;
            }
        }
    }
}

struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        let r = self.range / total;
        self.low += u64::from(r) * u64::from(cum);
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low > 0xFFFF_FFFF {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    input: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    fn new(input: &'a [u8]) -> Result<Self, CodecError> {
        if input.len() < 5 {
            return Err(CodecError::PrematureEnd);
        }
        // the encoder's first byte is its initial (empty) cache
        if input[0] != 0 {
            return Err(CodecError::SymbolOutOfRange);
        }
        let code = u32::from_be_bytes([input[1], input[2], input[3], input[4]]);
        Ok(Self {
            input,
            pos: 5,
            code,
            range: u32::MAX,
        })
    }

    fn target(&self, total: u32) -> Result<(u32, u32), CodecError> {
        let r = self.range / total;
        let v = self.code / r;
        if v >= total {
            return Err(CodecError::SymbolOutOfRange);
        }
        Ok((v, r))
    }

    fn consume(&mut self, r: u32, cum: u32, freq: u32) -> Result<(), CodecError> {
        self.code -= r * cum;
        self.range = r * freq;
        while self.range < TOP {
            let byte = *self.input.get(self.pos).ok_or(CodecError::PrematureEnd)?;
            self.pos += 1;
            self.code = (self.code << 8) | u32::from(byte);
            self.range <<= 8;
        }
        Ok(())
    }
}

/// Compress labels, each in `0..=bits`.
pub fn encode_labels(labels: &[u8], bits: u32) -> Result<Vec<u8>, CodecError> {
    let mut model = Model::new(bits);
    let mut enc = RangeEncoder::new();
    for &label in labels {
        if u32::from(label) > bits {
            return Err(CodecError::LabelOutOfRange { label, bits });
        }
        let s = label as usize;
        enc.encode(model.cumulative(s), model.freq[s], model.total);
        model.update(s);
    }
    let term = model.terminator();
    enc.encode(model.cumulative(term), model.freq[term], model.total);
    Ok(enc.finish())
}

/// Inverse of [`encode_labels`]; fails unless the stream holds exactly
/// `count` labels and nothing else.
pub fn decode_labels(bytes: &[u8], count: usize, bits: u32) -> Result<Vec<u8>, CodecError> {
    let mut model = Model::new(bits);
    let mut dec = RangeDecoder::new(bytes)?;
    let mut labels = Vec::with_capacity(count);
    let term = model.terminator();
    loop {
        let (target, r) = dec.target(model.total)?;
        let (s, cum) = model.find(target);
        dec.consume(r, cum, model.freq[s])?;
        if s == term {
            break;
        }
        if labels.len() == count {
            return Err(CodecError::CountMismatch { expected: count });
        }
        labels.push(s as u8);
        model.update(s);
    }
    if labels.len() != count {
        return Err(CodecError::CountMismatch { expected: count });
    }
    if dec.pos != bytes.len() {
        return Err(CodecError::TrailingBytes(bytes.len() - dec.pos));
    }
    Ok(labels)
}

/// Side information every receiver needs: embedding-set size, payload length
/// and the compressed label map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxInfo {
    pub embed_count: u32,
    pub payload_bits: u64,
    pub compressed_map: Vec<u8>,
}

impl AuxInfo {
    /// Compress a label map into a record with a zero payload length.
    pub fn from_labels(map: &LabelMap) -> Result<Self, CodecError> {
        Ok(Self {
            embed_count: map.len() as u32,
            payload_bits: 0,
            compressed_map: encode_labels(map.labels(), map.bits())?,
        })
    }

    /// Decompress the label map for coordinates of `bits` bits.
    pub fn labels(&self, bits: u32) -> Result<LabelMap, CodecError> {
        let labels = decode_labels(&self.compressed_map, self.embed_count as usize, bits)?;
        Ok(LabelMap::new(labels, bits).expect("decoder only emits labels within 0..=bits"))
    }

    /// Serialized size in bytes.
    pub fn byte_len(&self) -> usize {
        AUX_HEADER_LEN + self.compressed_map.len()
    }

    /// `l_ai`: serialized size in bits, deducted from capacity.
    pub fn bit_len(&self) -> u64 {
        8 * self.byte_len() as u64
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&self.embed_count.to_be_bytes());
        out.extend_from_slice(&self.payload_bits.to_be_bytes());
        out.extend_from_slice(&(self.compressed_map.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.compressed_map);
        out
    }

    /// Parse a record occupying exactly `bytes`.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < AUX_HEADER_LEN {
            return Err(CodecError::AuxTruncated {
                needed: AUX_HEADER_LEN,
                available: bytes.len(),
            });
        }
        let embed_count = u32::from_be_bytes(bytes[0..4].try_into().expect("4 bytes"));
        let payload_bits = u64::from_be_bytes(bytes[4..12].try_into().expect("8 bytes"));
        let map_len = u32::from_be_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let needed = AUX_HEADER_LEN + map_len;
        if bytes.len() < needed {
            return Err(CodecError::AuxTruncated {
                needed,
                available: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(CodecError::TrailingBytes(bytes.len() - needed));
        }
        Ok(Self {
            embed_count,
            payload_bits,
            compressed_map: bytes[AUX_HEADER_LEN..].to_vec(),
        })
    }
}
