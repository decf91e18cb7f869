//! Block-based video smoke detection.
//!
//! The engine decides, per video frame, which image blocks contain smoke.
//! Five stages run in order, each pruning the candidate set of the previous
//! one:
//!
//! 1. candidate extraction: frame differencing plus a smoke-color rule
//! 2. motion filtering: accumulated block motion must drift upward
//! 3. texture classification: histogram-of-pattern descriptor + kernel SVM
//! 4. space-time classification: inter-frame block statistics + kernel SVM
//! 5. temporal debouncing: a per-block history image suppresses flicker
//!
//! Everything downstream of decoding works on grayscale block views; the
//! SVM and its training loop are self-contained (no BLAS, no bindings).

pub mod candidate;
pub mod classify;
pub mod error;
pub mod ingest;
pub mod motion;
pub mod pipeline;
pub mod shi;
pub mod spacetime;
pub mod synth;
pub mod texture;

pub use error::{Error, Result};
pub use ingest::{BlockGrid, BlockRef, Frame, GrayFrame, GrayView};
