//! # meshrdh-core
//!
//! Reversible data hiding for encrypted triangular meshes. The owner of a mesh
//! reserves room in the most significant bit planes of selected vertices,
//! encrypts the coordinates with a stream cipher and hands the result to a data
//! hider, who substitutes encrypted payload bits into the reserved planes.
//! A receiver holding the data key extracts the payload, a receiver holding the
//! model key restores the mesh bit-exactly, and either can work without the
//! other key.
//!
//! Pipeline, owner side:
//!
//! 1. [`quantizer::quantize`] maps float coordinates to fixed-width integers.
//! 2. [`topology::divide_vertices`] splits vertices into an embedding set and a
//!    prediction set using only face data.
//! 3. [`predictor::build_label_map`] measures how many leading bit planes of
//!    each embedding vertex its neighbours predict correctly.
//! 4. [`locmap_codec`] compresses the labels; [`cipher::encrypt_mesh`] encrypts.
//!
//! Hider and receiver side lives in [`payload`]; [`metrics`] measures
//! fidelity and capacity.

pub mod cipher;
pub mod container;
pub mod locmap_codec;
pub mod mesh_io;
pub mod metrics;
pub mod payload;
pub mod pipeline;
pub mod predictor;
pub mod quantizer;
pub mod synthetic;
pub mod topology;

mod error;

pub use cipher::{EncryptedMesh, KeyMaterial, SecretKey, KEY_LEN, NONCE_LEN};
pub use container::{Normalization, StegoContainer, CONTAINER_VERSION, MAGIC};
pub use error::Error;
pub use locmap_codec::AuxInfo;
pub use mesh_io::{Mesh, MeshFormat};
pub use metrics::{EvalReport, Snr};
pub use payload::{Axis, Capacity, EmbeddingPlan, Slot};
pub use predictor::LabelMap;
pub use quantizer::{BitPattern, QuantizedMesh};
pub use topology::{Adjacency, Partition, Strategy};

/// The result type used throughout this crate.
pub type Result<T> = std::result::Result<T, Error>;
