//! The QP-variable in-loop filter network.

mod config;
mod domain;
mod io;
mod model;
mod weights;

pub use config::{NetworkConfig, Variant, BLOCKS_PER_RFA};
pub use domain::{QpDomain, QpEncoding};
pub use io::{decode_weights, encode_weights, load_weights, load_weights_any, save_weights, WEIGHT_MAGIC, WEIGHT_VERSION};
pub use model::{
    prepare_input, qp_map_plane, qpalf_forward, qpam_forward, residual_block_forward, rfa_forward, BlockVars,
    ConvVars, NetVars, QpBatch, RfaVars,
};
pub use weights::{count_params, param_specs, ParamSpec, QpalfWeights, IDENTITY_ATTENTION_LOGIT, INITIAL_PRELU_SLOPE};
