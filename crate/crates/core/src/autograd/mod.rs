//! Minimal tensor algebra with reverse-mode differentiation.

mod adam;
pub mod gradcheck;
mod graph;
pub mod kernels;
mod param;
mod tensor;

pub use adam::AdamState;
pub use gradcheck::{finite_diff_check, finite_diff_check_with_margin, GradCheckReport, KINK_MARGIN};
pub use graph::{Gradients, Graph, Var};
pub use param::{ParamStore, Parameter};
pub use tensor::{Real, Tensor};

