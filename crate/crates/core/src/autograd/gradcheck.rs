//! Central finite-difference gradient checking in double precision.

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// max over coordinates of |analytic − numeric| / max(|analytic|, 1e-8)
    pub max_rel_error: f64,
    pub worst_input: usize,
    pub worst_index: usize,
    pub checked: usize,
}

/// Coordinates closer than this to a PReLU kink are not sampled.
pub const KINK_MARGIN: f64 = 1e-3;

/// Compares the analytic gradient of the scalar `f` against central
/// differences with step `h`, over every coordinate of every input.
///
/// `f` builds the graph from leaf variables bound to `inputs`. Returns an
/// evaluation error when the base point lies within [`KINK_MARGIN`] of a
/// PReLU kink, so callers can resample.
pub fn finite_diff_check<F>(f: F, inputs: &[Tensor<f64>], h: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    finite_diff_check_with_margin(f, inputs, h, KINK_MARGIN)
}

/// [`finite_diff_check`] with an explicit kink margin. Large graphs need a
/// margin tied to how far one step of `h` can move a PReLU input.
pub fn finite_diff_check_with_margin<F>(f: F, inputs: &[Tensor<f64>], h: f64, kink_margin: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let eval = |vals: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = vals.iter().map(|t| g.leaf(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        Ok(g.value(out).item())
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| g.leaf(t.clone().with_grad()))
        .collect();
    let out = f(&mut g, &vars)?;
    if let Some(m) = g.prelu_kink_margin() {
        if m < kink_margin {
            return Err(Error::Evaluation(format!(
                "base point within {m:e} of a PReLU kink"
            )));
        }
    }
    let grads = g.gradients(out)?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_input: 0,
        worst_index: 0,
        checked: 0,
    };
    let mut probe: Vec<Tensor<f64>> = inputs.to_vec();
    for (i, var) in vars.iter().enumerate() {
        let zeros;
        let analytic = match grads.of(*var) {
            Some(a) => a,
            None => {
                zeros = vec![0.0; inputs[i].numel()];
                &zeros
            }
        };
        for j in 0..inputs[i].numel() {
            let base = inputs[i].data()[j];
            probe[i].data_mut()[j] = base + h;
            let up = eval(&probe)?;
            probe[i].data_mut()[j] = base - h;
            let down = eval(&probe)?;
            probe[i].data_mut()[j] = base;
            let numeric = (up - down) / (2.0 * h);
            let rel = (analytic[j] - numeric).abs() / analytic[j].abs().max(1e-8);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_input = i;
                report.worst_index = j;
            }
        }
    }
    Ok(report)
}
