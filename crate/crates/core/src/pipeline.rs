//! Content-owner side: quantize, partition, label, compress and encrypt.

use rand::RngCore;

use crate::cipher::{encrypt_mesh, Nonce, SecretKey, NONCE_LEN};
use crate::container::{Normalization, StegoContainer};
use crate::locmap_codec::AuxInfo;
use crate::mesh_io::Mesh;
use crate::payload::Capacity;
use crate::predictor::{build_label_map, LabelMap};
use crate::quantizer::{quantize, QuantizedMesh};
use crate::topology::{build_adjacency, divide_vertices, Partition, Strategy};
use crate::Result;

/// Everything the owner computes before encryption.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub strategy: Strategy,
    pub quantized: QuantizedMesh,
    pub partition: Partition,
    pub labels: LabelMap,
    pub aux: AuxInfo,
}

impl Prepared {
    pub fn capacity(&self) -> Capacity {
        Capacity::new(&self.labels, &self.aux, self.quantized.vertex_count())
    }

    /// Encrypt the coordinates and package them with the auxiliary
    /// information. The result carries no payload yet.
    pub fn encrypt(
        &self,
        model_key: &SecretKey,
        nonce: &Nonce,
        normalization: Normalization,
    ) -> StegoContainer {
        let enc = encrypt_mesh(&self.quantized, model_key, nonce);
        StegoContainer::new(enc, self.strategy, self.aux.clone(), normalization)
    }
}

/// Quantize at `precision`, split vertices and measure embeddable lengths.
pub fn prepare(mesh: &Mesh, precision: u32, strategy: Strategy) -> Result<Prepared> {
    let quantized = quantize(mesh, precision)?;
    let adjacency = build_adjacency(mesh.faces(), mesh.vertex_count());
    let partition = divide_vertices(&adjacency, strategy);
    let labels = build_label_map(&quantized, &partition);
    let aux = AuxInfo::from_labels(&labels)?;
    Ok(Prepared {
        strategy,
        quantized,
        partition,
        labels,
        aux,
    })
}

/// A fresh nonce from the operating system's generator.
pub fn random_nonce() -> Nonce {
    let mut nonce = [0u8; NONCE_LEN];
    rand::rng().fill_bytes(&mut nonce);
    nonce
}
