//! Grid encoder, triplet training, centroid store and retrieval.

mod encoder;
mod scalar;
mod store;
mod tensor;
mod train;

pub use encoder::{param_blocks, EncoderParams, Embedding, Forward, EMBED_DIM, PARAM_COUNT};
pub use scalar::Scalar;
pub use store::{build_store, embedding_distance, encode_all, mean_embedding, MemoryStore};
pub use tensor::{GridTensor, GRID_SIDE};
pub use train::{
    batch_loss, batch_loss_grad, grad_check, sample_triplet, train, triplet_loss, GradCheck, TrainHyper,
    TrainOutcome, Triplet,
};

use crate::geom::GeomError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MemoryError {
    #[error("grid must be 64x64, got {0}x{1}")]
    Shape(usize, usize),
    #[error("training needs at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("{0} clusters but {1} plans")]
    Mismatch(usize, usize),
    #[error("k = {0} outside 1..={1}")]
    BadK(usize, usize),
    #[error("invalid training hyperparameters")]
    InvalidHyper,
    #[error("training diverged in epoch {0}")]
    Diverged(usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}
