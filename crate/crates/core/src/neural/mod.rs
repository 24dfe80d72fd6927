//! Reverse-mode autodiff over row-major matrices, and the classifiers
//! built on it: a logistic-regression head, a convolutional text
//! classifier and a bidirectional LSTM.

mod graph;
mod models;
mod tensor;
mod train;

pub use graph::{Graph, Var};
pub use models::{
    dropout, family_name, lstm_cell, Cnn, CnnConfig, Features, LogisticRegression, Lstm, LstmConfig, Model, Pooling,
};
pub use tensor::{ParamSet, Tensor};
pub use train::{
    grid_points, grid_search, logistic_loss, logistic_loss_grad, predict, select_best, train, Adam, GridOutcome,
    GridPoint, TrainConfig, TrainReport, PROBABILITY_CLAMP,
};

use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("loss must be a scalar, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NanLoss { epoch: usize, batch: usize, detail: String },
    #[error("row {row} has no real positions")]
    EmptyMask { row: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("no input examples")]
    EmptyInput,
    #[error("a batch mixes dense and sparse features")]
    MixedFeatures,
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
}
