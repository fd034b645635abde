use thiserror::Error;

use crate::cipher::KeyError;
use crate::container::ContainerError;
use crate::locmap_codec::CodecError;
use crate::mesh_io::{LoadError, MeshError, ParseError};
use crate::metrics::MetricsError;
use crate::payload::PayloadError;
use crate::quantizer::QuantizeError;

/// Any failure from this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Payload(#[from] PayloadError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}
