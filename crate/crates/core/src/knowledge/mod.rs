//! Unimodal knowledge sources and their fusion into network inputs.

mod fusion;
mod graph;
mod perceptual;
mod store;

pub use fusion::{fuse, Modality, ModalityMask};
pub use graph::{
    concept_store, parse_graph, ppmi, ppmi_from_cooccurrence, svd_embed, symmetric_embedding,
    ConceptEdge, ConceptGraph, PpmiMatrix,
};
pub use perceptual::{
    aggregate_perceptual, parse_image_vectors, perceptual_store, ImageVectors, ProjectionMatrix,
};
pub use store::{DecadeKey, EmbeddingStore};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{token}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("{token}: non-finite value")]
    NonFinite { token: String },
    #[error("no vectors to aggregate")]
    EmptyAggregate,
    #[error("concept graph has no edges")]
    EmptyGraph,
    #[error("modality mask is empty")]
    EmptyMask,
    #[error("every modality selected by the mask is missing")]
    AllMissing,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn parse_err(line: usize, message: impl Into<String>) -> KnowledgeError {
    KnowledgeError::Parse {
        line,
        message: message.into(),
    }
}
