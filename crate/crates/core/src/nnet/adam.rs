//! Adam with bias correction and coupled L2 weight decay (the decay term is
//! added to the gradient before the moment updates).

use super::params::{ParamMut, Tensors};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Coupled L2 coefficient; gradient becomes g + l2 * param.
    pub l2: f64,
}

impl AdamConfig {
    pub fn with_lr(lr: f64, l2: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            l2,
        }
    }
}

struct Slot {
    m: Vec<f64>,
    v: Vec<f64>,
    /// Per-tensor step count for bias correction; a tensor that sits out a
    /// step (no gradient) keeps its count, matching optimizers that skip
    /// absent-gradient parameters.
    t: u64,
}

/// Optimizer state: first/second moment accumulators and step counts per
/// parameter tensor, keyed by visit order.
pub struct Adam {
    pub cfg: AdamConfig,
    step: u64,
    slots: Vec<Slot>,
}

impl Adam {
    pub fn new(cfg: AdamConfig) -> Self {
        Self {
            cfg,
            step: 0,
            slots: Vec::new(),
        }
    }

    /// Total number of step invocations.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update using the gradients currently accumulated in the
    /// model. Gradients are not cleared.
    pub fn step<M: Tensors + ?Sized>(&mut self, model: &mut M) {
        self.step_filtered(model, |_| true);
    }

    /// Like [`Adam::step`], but only tensors whose name satisfies `keep`
    /// participate; the others keep their values, moments, and step counts.
    /// Tensors are still visited in full order, so moment slots stay
    /// aligned across differently filtered steps.
    pub fn step_filtered<M: Tensors + ?Sized>(
        &mut self,
        model: &mut M,
        keep: impl Fn(&str) -> bool,
    ) {
        self.step += 1;
        let cfg = self.cfg.clone();
        let slots = &mut self.slots;
        let mut idx = 0usize;
        model.visit_params("", &mut |p: ParamMut<'_>| {
            if slots.len() == idx {
                slots.push(Slot {
                    m: vec![0.0; p.value.len()],
                    v: vec![0.0; p.value.len()],
                    t: 0,
                });
            }
            let slot = &mut slots[idx];
            idx += 1;
            if !keep(&p.name) {
                return;
            }
            assert_eq!(slot.m.len(), p.value.len(), "parameter {} resized", p.name);
            slot.t += 1;
            let c1 = 1.0 - cfg.beta1.powi(slot.t as i32);
            let c2 = 1.0 - cfg.beta2.powi(slot.t as i32);
            for k in 0..p.value.len() {
                let g = p.grad[k] + cfg.l2 * p.value[k];
                slot.m[k] = cfg.beta1 * slot.m[k] + (1.0 - cfg.beta1) * g;
                slot.v[k] = cfg.beta2 * slot.v[k] + (1.0 - cfg.beta2) * g * g;
                let m_hat = slot.m[k] / c1;
                let v_hat = slot.v[k] / c2;
                p.value[k] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
        });
    }
}
