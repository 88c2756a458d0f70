//! Predicting which new syntactic frames a noun will appear in, using
//! exemplar and prototype chaining over learned multimodal representations.
//!
//! Everything numerical is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the aliases below fix the precision for callers that don't care.

pub mod chaining;
pub mod corpus;
pub mod eval;
pub mod knowledge;
pub mod linalg;
pub mod neuralnet;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod training;

pub use chaining::{Distance, ModelKind};
pub use corpus::{Decade, Frame, FrameTable};
pub use knowledge::{Modality, ModalityMask};
pub use scalar::Scalar;

pub type ChainingModel = chaining::ChainingModel<f64>;
pub type ChainingModel32 = chaining::ChainingModel<f32>;
pub type IntegrationNetwork = neuralnet::IntegrationNetwork<f64>;
pub type IntegrationNetwork32 = neuralnet::IntegrationNetwork<f32>;
pub type EmbeddingStore = knowledge::EmbeddingStore<f64>;
pub type EmbeddingStore32 = knowledge::EmbeddingStore<f32>;
