use super::params::ParamSet;

/// Worst central-difference discrepancy found in one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGradError {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorGradError>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors
            .iter()
            .map(|t| t.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares the analytic gradients already stored in `params` against
/// central differences `(f(θ+ε) − f(θ−ε)) / 2ε` of `loss`.
///
/// Frozen parameters are skipped. Parameter values are restored exactly.
pub fn grad_check<F>(
    params: &mut ParamSet,
    eps: f64,
    tolerance: f64,
    mut loss: F,
) -> GradCheckReport
where
    F: FnMut(&ParamSet) -> f64,
{
    let mut tensors = Vec::new();
    for idx in 0..params.len() {
        if params.param(idx).frozen {
            continue;
        }
        let analytic = params.param(idx).grad.data().to_vec();
        let mut worst = TensorGradError {
            name: params.param(idx).name.clone(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (i, &a) in analytic.iter().enumerate() {
            let orig = params.param(idx).value.data()[i];
            params.param_mut(idx).value.data_mut()[i] = orig + eps;
            let up = loss(params);
            params.param_mut(idx).value.data_mut()[i] = orig - eps;
            let down = loss(params);
            params.param_mut(idx).value.data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let err = relative_error(a, numeric);
            if err > worst.max_rel_error || i == 0 {
                worst.max_rel_error = err;
                worst.worst_index = i;
                worst.analytic = a;
                worst.numeric = numeric;
            }
        }
        tensors.push(worst);
    }
    GradCheckReport { tensors, tolerance }
}
