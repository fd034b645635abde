//! Bit-plane majority prediction and per-vertex embeddable lengths.

use rayon::prelude::*;

use crate::quantizer::{word_mask, QuantizedMesh};
use crate::topology::Partition;

/// Per-embedding-vertex embeddable length `t` in `0..=l`, in embed-set order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    labels: Vec<u8>,
    bits: u32,
}

impl LabelMap {
    /// Wrap raw labels. Returns `None` if any label exceeds `bits`.
    pub fn new(labels: Vec<u8>, bits: u32) -> Option<Self> {
        labels
            .iter()
            .all(|&t| u32::from(t) <= bits)
            .then_some(Self { labels, bits })
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Total embeddable bits `l_p = 3 * sum(t)`.
    pub fn total_capacity(&self) -> u64 {
        3 * self.labels.iter().map(|&t| u64::from(t)).sum::<u64>()
    }
}

/// Per-plane majority of the predictor words; ties resolve to 1.
///
/// An empty predictor list yields all ones, but callers treat a vertex with
/// no predictors as having label 0, so the value is never used.
pub fn predict_bits(predictors: &[u64], l: u32) -> u64 {
    let total = predictors.len();
    let mut out = 0u64;
    for k in 0..l {
        let ones = predictors.iter().filter(|&&w| (w >> k) & 1 == 1).count();
        if 2 * ones >= total {
            out |= 1 << k;
        }
    }
    out & word_mask(l)
}

/// Number of leading planes, from the MSB down, where `target` and
/// `predicted` agree.
pub fn axis_label(target: u64, predicted: u64, l: u32) -> u32 {
    let diff = (target ^ predicted) & word_mask(l);
    if diff == 0 {
        l
    } else {
        l - (64 - diff.leading_zeros())
    }
}

/// Minimum over the three axes of the prefix-match length, or 0 without
/// predictors.
pub fn vertex_label(q: &QuantizedMesh, vertex: u32, predictors: &[u32]) -> u32 {
    if predictors.is_empty() {
        return 0;
    }
    let l = q.bits();
    (0..3)
        .map(|axis| {
            let words: Vec<u64> = predictors.iter().map(|&p| q.word(p, axis)).collect();
            axis_label(q.word(vertex, axis), predict_bits(&words, l), l)
        })
        .min()
        .expect("three axes")
}

/// Predicted words `[x, y, z]` for a vertex from its predictors' words.
pub(crate) fn predict_vertex(words: &[u64], l: u32, predictors: &[u32]) -> [u64; 3] {
    [0, 1, 2].map(|axis| {
        let column: Vec<u64> = predictors
            .iter()
            .map(|&p| words[3 * (p as usize - 1) + axis])
            .collect();
        predict_bits(&column, l)
    })
}

/// Labels for every embedding vertex, in embed-set order.
pub fn build_label_map(q: &QuantizedMesh, partition: &Partition) -> LabelMap {
    let embed = partition.embed_set();
    let labels = (0..embed.len())
        .into_par_iter()
        .map(|i| vertex_label(q, embed[i], partition.predictors(i)) as u8)
        .collect();
    LabelMap {
        labels,
        bits: q.bits(),
    }
}
