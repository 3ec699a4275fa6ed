//! Central finite-difference oracles for gradient verification.
//!
//! These helpers never consult an analytic backward pass, so they stay a
//! fully independent check on the hand-written gradients. The test suites
//! use [`fd_grad`] for input gradients of single operations and
//! [`check_model`] to sweep every scalar parameter of a whole model.

use super::params::{ParamMut, Tensors};

/// Central finite differences of `f` with respect to every entry of `x`.
pub fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        let orig = probe[k];
        probe[k] = orig + eps;
        let plus = f(&probe);
        probe[k] = orig - eps;
        let minus = f(&probe);
        probe[k] = orig;
        out.push((plus - minus) / (2.0 * eps));
    }
    out
}

/// Relative error between a numeric and an analytic derivative, with a small
/// floor so that near-zero gradient pairs do not explode the ratio.
pub fn rel_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-6)
}

/// Result of a whole-model gradient sweep.
#[derive(Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<(String, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn assert_below(&self, tol: f64) {
        if self.max_rel_error >= tol {
            let (name, k, num, ana) = self.worst.clone().expect("worst entry");
            panic!(
                "gradient check failed: {}[{}] numeric={:.10e} analytic={:.10e} rel={:.3e} (tol {:.1e}, {} scalars checked)",
                name, k, num, ana, self.max_rel_error, tol, self.checked
            );
        }
    }
}

fn nth_param<M: Tensors + ?Sized>(model: &mut M, target: usize, apply: &mut dyn FnMut(&mut f64)) {
    let mut at = 0usize;
    let mut done = false;
    model.visit_params("", &mut |p: ParamMut<'_>| {
        if done {
            return;
        }
        if target < at + p.value.len() {
            apply(&mut p.value[target - at]);
            done = true;
        }
        at += p.value.len();
    });
    assert!(done, "parameter index {target} out of range");
}

/// Compare analytic gradients against central differences for every scalar
/// parameter of `model`.
///
/// `loss_and_backward` must zero the gradient accumulators, run a forward
/// and backward pass, and return the loss; `loss_only` must compute the same
/// loss without touching gradients. Both must be deterministic (freeze any
/// dropout masks before calling).
pub fn check_model<M: Tensors + ?Sized>(
    model: &mut M,
    mut loss_and_backward: impl FnMut(&mut M) -> f64,
    mut loss_only: impl FnMut(&mut M) -> f64,
    eps: f64,
) -> GradCheckReport {
    let _ = loss_and_backward(model);
    let mut analytic = Vec::new();
    let mut names = Vec::new();
    model.visit_params("", &mut |p: ParamMut<'_>| {
        for (k, &g) in p.grad.iter().enumerate() {
            analytic.push(g);
            names.push((p.name.clone(), k));
        }
    });

    let mut report = GradCheckReport {
        checked: analytic.len(),
        max_rel_error: 0.0,
        worst: None,
    };
    for (idx, &ana) in analytic.iter().enumerate() {
        nth_param(model, idx, &mut |v| *v += eps);
        let plus = loss_only(model);
        nth_param(model, idx, &mut |v| *v -= 2.0 * eps);
        let minus = loss_only(model);
        nth_param(model, idx, &mut |v| *v += eps);
        let numeric = (plus - minus) / (2.0 * eps);
        let err = rel_error(numeric, ana);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            let (name, k) = names[idx].clone();
            report.worst = Some((name, k, numeric, ana));
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fd_grad_matches_analytic_polynomial() {
        // f(x, y) = x^2 y + 3y
        let f = |v: &[f64]| v[0] * v[0] * v[1] + 3.0 * v[1];
        let x = [1.5, -0.7];
        let g = fd_grad(f, &x, 1e-5);
        let expect = [2.0 * 1.5 * -0.7, 1.5 * 1.5 + 3.0];
        for k in 0..2 {
            assert!(rel_error(g[k], expect[k]) < 1e-8);
        }
    }
}
