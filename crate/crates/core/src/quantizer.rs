//! Fixed-point mapping between float coordinates and `l`-bit integers.
//!
//! A coordinate `v` at precision `p` becomes `floor(v * 10^p)`. Integers are
//! stored as offset-binary words (`v' + 2^(l-1)`), so comparing bit prefixes
//! from the most significant plane downwards is monotone in the signed value.
//! Bit `k = 0` is the least significant bit.

use num_bigint::BigInt;
use thiserror::Error;

use crate::mesh_io::Mesh;

pub const MIN_PRECISION: u32 = 1;
pub const MAX_PRECISION: u32 = 33;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantizeError {
    #[error("precision {0} outside 1..=33")]
    PrecisionOutOfRange(u32),
    #[error("bit length {0} is not one of 8, 16, 32, 64")]
    BadBitLength(u32),
    #[error(
        "coordinate {axis} of vertex {vertex} does not fit in {bits} bits at precision {precision}"
    )]
    Overflow {
        vertex: usize,
        axis: usize,
        bits: u32,
        precision: u32,
    },
    #[error("value {value} outside the {bits}-bit offset range")]
    ValueOutOfRange { value: i128, bits: u32 },
    #[error("expected {expected} coordinates, found {found}")]
    CoordinateCount { expected: usize, found: usize },
}

/// Bits per coordinate for precision `p`.
///
/// `p = 9` maps to 64 bits because
/// `10^9` already exceeds the 32-bit offset range.
pub fn bit_length(p: u32) -> Result<u32, QuantizeError> {
    match p {
        1..=2 => Ok(8),
        3..=4 => Ok(16),
        5..=8 => Ok(32),
        9..=33 => Ok(64),
        _ => Err(QuantizeError::PrecisionOutOfRange(p)),
    }
}

fn check_bits(l: u32) -> Result<(), QuantizeError> {
    match l {
        8 | 16 | 32 | 64 => Ok(()),
        _ => Err(QuantizeError::BadBitLength(l)),
    }
}

/// Mask covering the low `l` bits.
pub fn word_mask(l: u32) -> u64 {
    if l >= 64 {
        u64::MAX
    } else {
        (1u64 << l) - 1
    }
}

/// Encode a signed value as an `l`-bit offset-binary word.
pub fn encode_offset(value: i64, l: u32) -> Result<u64, QuantizeError> {
    check_bits(l)?;
    let bias = 1i128 << (l - 1);
    let shifted = value as i128 + bias;
    if shifted < 0 || shifted >= bias * 2 {
        return Err(QuantizeError::ValueOutOfRange {
            value: value as i128,
            bits: l,
        });
    }
    Ok(shifted as u64)
}

/// Inverse of [`encode_offset`]. Bits above `l` are ignored.
pub fn decode_offset(word: u64, l: u32) -> i64 {
    let word = word & word_mask(l);
    (word as i128 - (1i128 << (l - 1))) as i64
}

/// An `l`-bit offset-binary pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitPattern {
    word: u64,
    len: u32,
}

impl BitPattern {
    pub fn from_word(word: u64, len: u32) -> Result<Self, QuantizeError> {
        check_bits(len)?;
        Ok(Self {
            word: word & word_mask(len),
            len,
        })
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `k`, with `k = 0` the least significant plane.
    pub fn bit(&self, k: u32) -> bool {
        (self.word >> k) & 1 == 1
    }

    /// Bits `b_0 .. b_{l-1}`, least significant first.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.len).map(|k| self.bit(k)).collect()
    }
}

/// Offset-binary bit pattern of a signed value.
pub fn to_bits(value: i64, l: u32) -> Result<BitPattern, QuantizeError> {
    Ok(BitPattern {
        word: encode_offset(value, l)?,
        len: l,
    })
}

/// Signed value of an offset-binary pattern: `sum(b_k * 2^k) - 2^(l-1)`.
pub fn from_bits(bits: &BitPattern) -> i64 {
    decode_offset(bits.word, bits.len)
}

/// Quantized mesh: `3n` signed integers in units of `10^-p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedMesh {
    precision: u32,
    bits: u32,
    coords: Vec<[i64; 3]>,
    faces: Vec<[u32; 3]>,
}

impl QuantizedMesh {
    /// Build from raw parts, checking that every value fits the bit length
    /// implied by `precision`.
    pub fn new(
        precision: u32,
        coords: Vec<[i64; 3]>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, QuantizeError> {
        let bits = bit_length(precision)?;
        for (i, c) in coords.iter().enumerate() {
            for (axis, &v) in c.iter().enumerate() {
                if encode_offset(v, bits).is_err() {
                    return Err(QuantizeError::Overflow {
                        vertex: i + 1,
                        axis,
                        bits,
                        precision,
                    });
                }
            }
        }
        Ok(Self {
            precision,
            bits,
            coords,
            faces,
        })
    }

    /// Rebuild from offset-binary words laid out vertex by vertex, x, y, z.
    pub fn from_words(
        precision: u32,
        words: &[u64],
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, QuantizeError> {
        let bits = bit_length(precision)?;
        if !words.len().is_multiple_of(3) {
            return Err(QuantizeError::CoordinateCount {
                expected: words.len() / 3 * 3 + 3,
                found: words.len(),
            });
        }
        let coords = words
            .chunks_exact(3)
            .map(|w| [0, 1, 2].map(|a| decode_offset(w[a], bits)))
            .collect();
        Ok(Self {
            precision,
            bits,
            coords,
            faces,
        })
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Bits per coordinate, `l`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn coords(&self) -> &[[i64; 3]] {
        &self.coords
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    /// Offset-binary words, vertex order then x, y, z.
    pub fn to_words(&self) -> Vec<u64> {
        self.coords
            .iter()
            .flat_map(|c| {
                c.iter()
                    .map(|&v| encode_offset(v, self.bits).expect("validated"))
            })
            .collect()
    }

    /// Offset-binary word of vertex `vertex` (1-based), axis 0..3.
    pub fn word(&self, vertex: u32, axis: usize) -> u64 {
        encode_offset(self.coords[vertex as usize - 1][axis], self.bits).expect("validated")
    }
}

/// Exact `floor(v * 10^p)` for a finite `f64`.
fn floor_scaled(v: f64, p: u32) -> BigInt {
    if v == 0.0 {
        return BigInt::from(0);
    }
    // v = mantissa * 2^exp exactly
    let bits = v.to_bits();
    let negative = bits >> 63 == 1;
    let raw_exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if raw_exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), raw_exp - 1075)
    };
    let mut scaled = BigInt::from(mantissa) * BigInt::from(10u32).pow(p);
    if negative {
        scaled = -scaled;
    }
    if exp >= 0 {
        scaled << exp as usize
    } else {
        // arithmetic shift right on BigInt rounds toward negative infinity
        scaled >> (-exp) as usize
    }
}

fn unscale(v: i64, precision: u32, scale: f64) -> f64 {
    let mut d = v as f64 / scale;
    let target = BigInt::from(v);
    while floor_scaled(d, precision) < target {
        d = d.next_up();
    }
    d
}

/// Map every coordinate to `floor(v * 10^p)`.
pub fn quantize(mesh: &Mesh, precision: u32) -> Result<QuantizedMesh, QuantizeError> {
    let bits = bit_length(precision)?;
    let bias = BigInt::from(1u64) << (bits - 1) as usize;
    let coords = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut out = [0i64; 3];
            for axis in 0..3 {
                let q = floor_scaled(v[axis], precision);
                if q < -bias.clone() || q >= bias {
                    return Err(QuantizeError::Overflow {
                        vertex: i + 1,
                        axis,
                        bits,
                        precision,
                    });
                }
                out[axis] = i64::try_from(q).expect("range checked");
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QuantizedMesh {
        precision,
        bits,
        coords,
        faces: mesh.faces().to_vec(),
    })
}

/// `v'' = v' / 10^p`, rounded to the nearest double whose exact product with
/// `10^p` does not fall below `v'`. That keeps `quantize(dequantize(q)) == q`
/// while staying within one ulp of the plain quotient.
pub fn dequantize(q: &QuantizedMesh) -> Mesh {
    let scale = 10f64.powi(q.precision as i32);
    let vertices = q
        .coords
        .iter()
        .map(|c| c.map(|v| unscale(v, q.precision, scale)))
        .collect();
    Mesh::new(vertices, q.faces.clone()).expect("quantized mesh carries valid faces")
}
