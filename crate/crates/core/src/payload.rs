//! Payload embedding by MSB substitution, and the three receiver cases.
//!
//! Slot order is normative: embedding vertices ascending, then axis x, y, z,
//! then bit planes from `l - 1` down to `l - t`. Payload bytes are consumed
//! most significant bit first.

use std::fmt;

use thiserror::Error;

use crate::cipher::{decrypt_words, encrypt_payload, SecretKey};
use crate::container::StegoContainer;
use crate::locmap_codec::{AuxInfo, CodecError};
use crate::predictor::{predict_vertex, LabelMap};
use crate::quantizer::{word_mask, QuantizedMesh};
use crate::topology::{build_adjacency, divide_vertices, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PayloadError {
    #[error("payload of {requested} bytes exceeds capacity of {max_bytes} bytes")]
    Capacity { requested: usize, max_bytes: u64 },
    #[error("label map holds {found} labels but the embedding set has {expected} vertices")]
    LabelCount { expected: usize, found: usize },
    #[error("declared payload length {declared} bits exceeds the {available} embeddable bits")]
    DeclaredLength { declared: u64, available: u64 },
    #[error(transparent)]
    Aux(#[from] CodecError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

/// The top `planes` bit planes of one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub vertex: u32,
    pub axis: Axis,
    pub planes: u32,
}

impl Slot {
    /// Index of the coordinate word in vertex-major, x-y-z order.
    pub fn word_index(&self) -> usize {
        3 * (self.vertex as usize - 1) + self.axis.index()
    }
}

/// Ordered embedding slots derived from a partition and its labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingPlan {
    bits: u32,
    slots: Vec<Slot>,
}

impl EmbeddingPlan {
    pub fn new(partition: &Partition, labels: &LabelMap) -> Result<Self, PayloadError> {
        let embed = partition.embed_set();
        if embed.len() != labels.len() {
            return Err(PayloadError::LabelCount {
                expected: embed.len(),
                found: labels.len(),
            });
        }
        let slots = embed
            .iter()
            .zip(labels.labels())
            .filter(|(_, &t)| t > 0)
            .flat_map(|(&vertex, &t)| {
                Axis::ALL.map(|axis| Slot {
                    vertex,
                    axis,
                    planes: u32::from(t),
                })
            })
            .collect();
        Ok(Self {
            bits: labels.bits(),
            slots,
        })
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// `l_p`, the total number of substitutable bits.
    pub fn total_bits(&self) -> u64 {
        self.slots.iter().map(|s| u64::from(s.planes)).sum()
    }

    /// `(word index, bit plane)` for every slot bit, in embedding order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        let l = self.bits;
        self.slots.iter().flat_map(move |s| {
            let word = s.word_index();
            (0..s.planes).map(move |i| (word, l - 1 - i))
        })
    }
}

/// Capacity accounting: `ER = (l_p - l_ai) / n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capacity {
    /// `l_p`.
    pub embed_bits: u64,
    /// `l_ai`.
    pub aux_bits: u64,
    pub vertex_count: usize,
}

impl Capacity {
    pub fn new(labels: &LabelMap, aux: &AuxInfo, vertex_count: usize) -> Self {
        Self {
            embed_bits: labels.total_capacity(),
            aux_bits: aux.bit_len(),
            vertex_count,
        }
    }

    /// `l_p - l_ai`, negative when the side information outweighs the room.
    pub fn net_bits(&self) -> i64 {
        self.embed_bits as i64 - self.aux_bits as i64
    }

    /// Usable payload bits, never negative.
    pub fn usable_bits(&self) -> u64 {
        self.net_bits().max(0) as u64
    }

    pub fn max_payload_bytes(&self) -> u64 {
        self.usable_bits() / 8
    }

    /// Embedding rate in bits per vertex.
    pub fn er(&self) -> f64 {
        self.net_bits() as f64 / self.vertex_count as f64
    }
}

/// Partition, labels and slot plan as any receiver rebuilds them from a
/// container, without keys.
#[derive(Debug, Clone)]
pub struct PublicLayout {
    pub partition: Partition,
    pub labels: LabelMap,
    pub plan: EmbeddingPlan,
}

impl PublicLayout {
    pub fn from_container(c: &StegoContainer) -> Result<Self, PayloadError> {
        let adjacency = build_adjacency(&c.faces, c.vertex_count());
        let partition = divide_vertices(&adjacency, c.strategy);
        let labels = c.aux.labels(c.bits)?;
        let plan = EmbeddingPlan::new(&partition, &labels)?;
        Ok(Self {
            partition,
            labels,
            plan,
        })
    }

    pub fn capacity(&self, aux: &AuxInfo) -> Capacity {
        Capacity::new(&self.labels, aux, self.partition.vertex_count())
    }
}

/// Substitute already-encrypted payload bytes into the reserved planes.
///
/// Non-slot bits, faces and every header field other than the recorded
/// payload length are left untouched.
pub fn embed(c: &StegoContainer, cipher_data: &[u8]) -> Result<StegoContainer, PayloadError> {
    let layout = PublicLayout::from_container(c)?;
    let capacity = layout.capacity(&c.aux);
    let bit_len = cipher_data.len() as u64 * 8;
    if bit_len > capacity.usable_bits() {
        return Err(PayloadError::Capacity {
            requested: cipher_data.len(),
            max_bytes: capacity.max_payload_bytes(),
        });
    }
    let mut out = c.clone();
    out.aux.payload_bits = bit_len;
    let data_bits = cipher_data
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |k| (b >> k) & 1 == 1));
    for ((word, plane), bit) in layout.plan.positions().zip(data_bits) {
        if bit {
            out.words[word] |= 1 << plane;
        } else {
            out.words[word] &= !(1 << plane);
        }
    }
    Ok(out)
}

/// Case 1: read the payload with the data key only.
pub fn extract(c: &StegoContainer, data_key: &SecretKey) -> Result<Vec<u8>, PayloadError> {
    let layout = PublicLayout::from_container(c)?;
    let declared = c.aux.payload_bits;
    let available = layout.plan.total_bits();
    if declared > available {
        return Err(PayloadError::DeclaredLength {
            declared,
            available,
        });
    }
    let mut data = vec![0u8; declared.div_ceil(8) as usize];
    for (i, (word, plane)) in layout.plan.positions().take(declared as usize).enumerate() {
        if (c.words[word] >> plane) & 1 == 1 {
            data[i / 8] |= 0x80 >> (i % 8);
        }
    }
    Ok(encrypt_payload(&data, data_key, &c.nonce))
}

/// Mask of the top `t` planes of an `l`-bit word.
fn top_planes(l: u32, t: u32) -> u64 {
    let mask = word_mask(l);
    mask ^ mask.checked_shr(t).unwrap_or(0)
}

/// Case 2: decrypt with the model key only and restore every embedding
/// vertex's top planes from its prediction-set neighbours.
pub fn recover(c: &StegoContainer, model_key: &SecretKey) -> Result<QuantizedMesh, PayloadError> {
    let layout = PublicLayout::from_container(c)?;
    let l = c.bits;
    let mut words = decrypt_words(&c.words, l, model_key, &c.nonce);
    // predictors are prediction-set vertices only, which embedding never
    // touches, so restoring in any order reads plaintext predictors
    for ((vertex, predictors), &t) in layout.partition.iter().zip(layout.labels.labels()) {
        if t == 0 {
            continue;
        }
        let predicted = predict_vertex(&words, l, predictors);
        let mask = top_planes(l, u32::from(t));
        for (axis, p) in predicted.iter().enumerate() {
            let w = &mut words[3 * (vertex as usize - 1) + axis];
            *w = (*w & !mask) | (p & mask);
        }
    }
    Ok(
        QuantizedMesh::from_words(c.precision, &words, c.faces.clone())
            .expect("container precision validated on read"),
    )
}

/// Case 3: extract, then recover.
pub fn extract_and_recover(
    c: &StegoContainer,
    data_key: &SecretKey,
    model_key: &SecretKey,
) -> Result<(Vec<u8>, QuantizedMesh), PayloadError> {
    let data = extract(c, data_key)?;
    let mesh = recover(c, model_key)?;
    Ok((data, mesh))
}
