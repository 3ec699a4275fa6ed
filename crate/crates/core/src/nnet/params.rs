//! Parameter storage shared by all layers.
//!
//! Every trainable tensor is a value array paired with a gradient
//! accumulator of the same shape. Layers expose their tensors through
//! [`Tensors::visit_params`], which gives the optimizer, the checkpoint
//! writer, the parameter counter, and the finite-difference harness one
//! uniform way to walk a model. Visit order is fixed by the code, so
//! anything keyed by visit index (Adam moments, flat snapshots) is stable.

use ndarray::{Array1, Array2};

/// A mutable view of one named parameter tensor and its gradient.
pub struct ParamMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a mut [f64],
    pub grad: &'a mut [f64],
}

/// A named non-trainable state buffer (e.g. batch-norm running statistics).
pub struct BufferMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub value: &'a mut [f64],
}

/// Anything that owns trainable parameters.
pub trait Tensors {
    /// Walk every parameter in a fixed, deterministic order.
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>));

    /// Walk non-trainable state buffers. Default: none.
    fn visit_buffers(&mut self, _prefix: &str, _f: &mut dyn FnMut(BufferMut<'_>)) {}
}

/// A matrix parameter with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct P2 {
    pub v: Array2<f64>,
    pub g: Array2<f64>,
}

impl P2 {
    pub fn new(v: Array2<f64>) -> Self {
        let g = Array2::zeros(v.raw_dim());
        Self { v, g }
    }

    pub fn visit(&mut self, name: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        let shape = self.v.shape().to_vec();
        f(ParamMut {
            name: name.to_string(),
            shape,
            value: self.v.as_slice_mut().expect("contiguous"),
            grad: self.g.as_slice_mut().expect("contiguous"),
        });
    }
}

/// A vector parameter with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct P1 {
    pub v: Array1<f64>,
    pub g: Array1<f64>,
}

impl P1 {
    pub fn new(v: Array1<f64>) -> Self {
        let g = Array1::zeros(v.raw_dim());
        Self { v, g }
    }

    pub fn visit(&mut self, name: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        let shape = vec![self.v.len()];
        f(ParamMut {
            name: name.to_string(),
            shape,
            value: self.v.as_slice_mut().expect("contiguous"),
            grad: self.g.as_slice_mut().expect("contiguous"),
        });
    }
}

/// Reset all gradient accumulators to zero.
pub fn zero_grads<M: Tensors + ?Sized>(model: &mut M) {
    model.visit_params("", &mut |p: ParamMut<'_>| {
        p.grad.fill(0.0);
    });
}

/// Total number of scalar parameters.
pub fn param_count<M: Tensors + ?Sized>(model: &mut M) -> usize {
    let mut n = 0;
    model.visit_params("", &mut |p: ParamMut<'_>| n += p.value.len());
    n
}

/// Number of scalar parameters whose name satisfies `keep`.
pub fn param_count_filtered<M: Tensors + ?Sized>(
    model: &mut M,
    keep: impl Fn(&str) -> bool,
) -> usize {
    let mut n = 0;
    model.visit_params("", &mut |p: ParamMut<'_>| {
        if keep(&p.name) {
            n += p.value.len();
        }
    });
    n
}

/// Flat copy of all parameter values and state buffers, in visit order.
pub fn snapshot<M: Tensors + ?Sized>(model: &mut M) -> Vec<f64> {
    let mut out = Vec::new();
    model.visit_params("", &mut |p: ParamMut<'_>| out.extend_from_slice(p.value));
    model.visit_buffers("", &mut |b: BufferMut<'_>| out.extend_from_slice(b.value));
    out
}

/// Restore a snapshot taken by [`snapshot`] on an identically shaped model.
pub fn restore<M: Tensors + ?Sized>(model: &mut M, snap: &[f64]) {
    let mut at = 0;
    model.visit_params("", &mut |p: ParamMut<'_>| {
        p.value.copy_from_slice(&snap[at..at + p.value.len()]);
        at += p.value.len();
    });
    model.visit_buffers("", &mut |b: BufferMut<'_>| {
        b.value.copy_from_slice(&snap[at..at + b.value.len()]);
        at += b.value.len();
    });
    assert_eq!(at, snap.len(), "snapshot length mismatch");
}

/// Copy parameter values from `src` into `dst` for every tensor whose name
/// satisfies `keep`. Source and destination must agree on the shapes of the
/// copied tensors. Returns the number of tensors copied.
pub fn copy_params_by_name<A, B>(dst: &mut A, src: &mut B, keep: impl Fn(&str) -> bool) -> usize
where
    A: Tensors + ?Sized,
    B: Tensors + ?Sized,
{
    let mut values: std::collections::HashMap<String, Vec<f64>> = std::collections::HashMap::new();
    src.visit_params("", &mut |p: ParamMut<'_>| {
        if keep(&p.name) {
            values.insert(p.name.clone(), p.value.to_vec());
        }
    });
    let mut copied = 0;
    dst.visit_params("", &mut |p: ParamMut<'_>| {
        if let Some(v) = values.get(&p.name) {
            assert_eq!(v.len(), p.value.len(), "shape mismatch copying {}", p.name);
            p.value.copy_from_slice(v);
            copied += 1;
        }
    });
    copied
}

/// Join a visit prefix with a local tensor name.
pub fn scoped(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}
