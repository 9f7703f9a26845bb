//! QP-conditioned CNN in-loop filtering at desk scale.
//!
//! The crate bundles a small reverse-mode autodiff engine ([`autograd`]),
//! the QPALF network ([`net`]), a block-DCT intra codec that produces
//! QP-dependent artifacts ([`codec`]), patch dataset tooling ([`dataset`]),
//! training loops and losses ([`train`]) and evaluation metrics
//! ([`eval`]).

pub mod autograd;
pub mod codec;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod net;
pub mod par;
pub mod pipeline;
pub mod train;

pub use error::{Error, Result};
