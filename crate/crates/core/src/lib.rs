//! Interval reachability of neural-network controlled systems via
//! mixed-monotone embeddings and CROWN-style linear bounds.

// `!(a < b)` is how NaN inputs get rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod controllers;
pub mod embedding;
pub mod error;
pub mod interval;
pub mod network;
pub mod parallel;
pub mod reach;
pub mod systems;

pub use embedding::{ClosedLoop, EmbeddingRhs, Strategy};
pub use error::{ReachError, Result};
pub use interval::{EmbeddingState, IntervalBox};
pub use network::{Activation, FeedForwardNetwork, Layer};
