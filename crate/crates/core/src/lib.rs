//! Numeric core for a high-resolution mask-proposal segmentation pipeline.
//!
//! The crate is `no_std` (with `alloc`) and has no IO: tensors are plain
//! in-memory buffers with a byte-level codec, and every stage is a pure
//! function of its inputs and seeds. File handling, manifests, and the CLI
//! live in the companion `hrmask-cli` crate.
//!
//! Pipeline stages, in dataflow order:
//!
//! * [`grid`] — global/local view geometry and the token-region map
//! * [`encoder`] — feature grids, either synthetic or externally supplied
//! * [`perception`] — region attention, feature fusion, mask pooling
//! * [`enhance`] — stacked cross-attention blocks over mask features
//! * [`selection`] — embedding projector, fusion heads, scoring, strategies
//! * [`metrics`] / [`losses`] / [`train`] — evaluation and head training
//! * [`synth`] — deterministic over-segmented proposal/ground-truth generator

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod enhance;
pub mod encoder;
pub mod error;
pub mod grid;
pub mod losses;
pub mod metrics;
pub mod perception;
pub mod rng;
pub mod selection;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;
