//! Losses, learning-rate schedules and training protocols.

mod loss;
mod schedule;
mod trainer;

pub use loss::{
    default_alphas, focal_mse_value, loss_graph, loss_mse, per_sample_mse, psnr_gain_rate, LossConfig, LossMode,
};
pub use schedule::{Schedule, TrainProtocol};
pub use trainer::{
    evaluate_samples, finetune, fit, gain_by_qp, train, EpochRecord, SampleEval, TrainHistory, TrainOptions,
    TrainedModel, HISTORY_HEADER,
};
