use super::{Graph, Tensor, Var};
use crate::error::{shape_err, Result};

/// Entries with both gradients below this magnitude are compared in absolute
/// terms.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose finite-difference step flipped a leaky-ReLU input.
    pub skipped: usize,
}

/// Compares every analytic input gradient of a scalar-valued `build` against
/// central finite differences with step `fd_step`.
///
/// Relative error is `|a − n| / max(|a|, |n|, GRAD_CHECK_FLOOR)`. Steps that
/// move a leaky-ReLU input across zero measure the kink rather than the
/// derivative and are skipped.
pub fn grad_check<F>(build: F, inputs: &[Tensor], fd_step: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let eval = |ins: &[Tensor]| -> Result<(f64, Vec<bool>)> {
        let mut g = Graph::new();
        let vars: Vec<Var> = ins.iter().map(|t| g.param(t.clone())).collect();
        let out = build(&mut g, &vars)?;
        Ok((g.value(out).item(), g.relu_pattern()))
    };

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.param(t.clone())).collect();
    let out = build(&mut g, &vars)?;
    if g.value(out).len() != 1 {
        return Err(shape_err!("grad_check needs a scalar output"));
    }
    let base_pattern = g.relu_pattern();
    g.backward(out)?;
    let analytic: Vec<Tensor> = vars.iter().map(|&v| g.grad(v)).collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    let mut probe = inputs.to_vec();
    for (ti, t) in inputs.iter().enumerate() {
        for j in 0..t.len() {
            let orig = t.data()[j];
            probe[ti].data_mut()[j] = orig + fd_step;
            let (fp, pp) = eval(&probe)?;
            probe[ti].data_mut()[j] = orig - fd_step;
            let (fm, pm) = eval(&probe)?;
            probe[ti].data_mut()[j] = orig;
            if pp != base_pattern || pm != base_pattern {
                report.skipped += 1;
                continue;
            }
            let numeric = (fp - fm) / (2.0 * fd_step);
            let a = analytic[ti].data()[j];
            let denom = a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
            report.max_rel_error = report.max_rel_error.max((a - numeric).abs() / denom);
            report.checked += 1;
        }
    }
    Ok(report)
}
