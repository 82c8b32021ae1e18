//! Pipelined teamwork activity recognition.
//!
//! Stages: sliding-window motion detection, connected-component
//! segmentation, SVM classification, mean-shift tracking, feature
//! discretization, ID3 role assignment and discrete-HMM activity
//! recognition. Every data-parallel stage runs on a [`Backend`]; results are
//! identical on all backends.

// NaN-rejecting `!(x > 0.0)` checks and index loops over matrices are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod discretize;
pub mod error;
pub mod frame_io;
pub mod harness;
pub mod hmm;
pub mod motion;
pub mod roles;
pub mod runtime;
pub mod segmentation;
pub mod svm;
pub mod tracking;
mod util;

pub use error::{Error, Result};
pub use runtime::Backend;
