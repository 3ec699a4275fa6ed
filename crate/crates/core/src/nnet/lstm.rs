//! LSTM and bidirectional LSTM with exact backpropagation through time.
//!
//! Gate layout is stacked in the order (input, forget, output, candidate),
//! so `w` is (4h, d_in), `u` is (4h, h) and `b` is (4h). Masked (padding)
//! positions carry the recurrent state through unchanged and emit zero
//! output vectors, which makes a padded batched sequence equivalent to the
//! same sequence processed at its true length.

use ndarray::{s, Array1, Array2, ArrayView1};
use rand_chacha::ChaCha8Rng;

use super::init::xavier_uniform;
use super::params::{scoped, ParamMut, Tensors, P1, P2};
use super::{NnetError, Result};

/// One direction's gate parameters.
#[derive(Debug, Clone)]
pub struct LstmParams {
    /// Input weights, (4h, d_in).
    pub w: P2,
    /// Recurrent weights, (4h, h).
    pub u: P2,
    /// Bias, (4h). Forget-gate slice initialized to 1.
    pub b: P1,
    hidden: usize,
    input: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmParams {
    pub fn new(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = P2::new(xavier_uniform(4 * hidden, input, rng));
        let u = P2::new(xavier_uniform(4 * hidden, hidden, rng));
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        Self {
            w,
            u,
            b: P1::new(b),
            hidden,
            input,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    /// One gated recurrence step: returns (h, c).
    pub fn step(
        &self,
        x: &Array1<f64>,
        h_prev: &Array1<f64>,
        c_prev: &Array1<f64>,
    ) -> Result<(Array1<f64>, Array1<f64>)> {
        if x.len() != self.input || h_prev.len() != self.hidden || c_prev.len() != self.hidden {
            return Err(NnetError::ShapeMismatch {
                op: "lstm_step",
                detail: format!(
                    "x={} h={} c={} expected input={} hidden={}",
                    x.len(),
                    h_prev.len(),
                    c_prev.len(),
                    self.input,
                    self.hidden
                ),
            });
        }
        let gates = self.gates(&x.view(), h_prev, c_prev);
        Ok((gates.h, gates.c))
    }

    fn gates(&self, x: &ArrayView1<f64>, h_prev: &Array1<f64>, c_prev: &Array1<f64>) -> StepOut {
        let h = self.hidden;
        let mut a = self.w.v.dot(x) + self.u.v.dot(h_prev);
        a += &self.b.v;
        let mut i = Array1::zeros(h);
        let mut f = Array1::zeros(h);
        let mut o = Array1::zeros(h);
        let mut g = Array1::zeros(h);
        for j in 0..h {
            i[j] = sigmoid(a[j]);
            f[j] = sigmoid(a[h + j]);
            o[j] = sigmoid(a[2 * h + j]);
            g[j] = a[3 * h + j].tanh();
        }
        let c = &f * c_prev + &i * &g;
        let tanh_c = c.mapv(f64::tanh);
        let h_out = &o * &tanh_c;
        StepOut {
            i,
            f,
            o,
            g,
            c,
            tanh_c,
            h: h_out,
        }
    }
}

impl Tensors for LstmParams {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.w.visit(&scoped(prefix, "w"), f);
        self.u.visit(&scoped(prefix, "u"), f);
        self.b.visit(&scoped(prefix, "b"), f);
    }
}

struct StepOut {
    i: Array1<f64>,
    f: Array1<f64>,
    o: Array1<f64>,
    g: Array1<f64>,
    c: Array1<f64>,
    tanh_c: Array1<f64>,
    h: Array1<f64>,
}

/// Per-direction activation cache for backpropagation.
struct DirCache {
    i: Array2<f64>,
    f: Array2<f64>,
    o: Array2<f64>,
    g: Array2<f64>,
    tanh_c: Array2<f64>,
    /// Post-carry hidden state at every position.
    h_seq: Array2<f64>,
    /// Post-carry cell state at every position.
    c_seq: Array2<f64>,
}

/// Forward-pass cache for one BiLSTM invocation.
pub struct BiLstmCache {
    fwd: DirCache,
    bwd: DirCache,
    mask: Vec<bool>,
}

/// acc[i][j] += a[i] * b[j]
fn add_outer(acc: &mut Array2<f64>, a: &Array1<f64>, b: &[f64]) {
    let cols = acc.ncols();
    let acc_s = acc.as_slice_mut().expect("contiguous");
    for (idx, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        let row = &mut acc_s[idx * cols..(idx + 1) * cols];
        for (r, &bj) in row.iter_mut().zip(b) {
            *r += ai * bj;
        }
    }
}

/// A bidirectional LSTM: output[t] = concat(forward h_t, backward h_t).
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstm {
    pub fn new(input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            fwd: LstmParams::new(input, hidden, rng),
            bwd: LstmParams::new(input, hidden, rng),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.fwd.hidden_dim()
    }

    pub fn output_dim(&self) -> usize {
        2 * self.fwd.hidden_dim()
    }

    /// Run both directions over a (n, d_in) sequence. `mask[t]` is false at
    /// padding positions, which produce zero output vectors and leave the
    /// recurrent state untouched.
    pub fn forward(&self, seq: &Array2<f64>, mask: &[bool]) -> Result<(Array2<f64>, BiLstmCache)> {
        let n = seq.nrows();
        if mask.len() != n {
            return Err(NnetError::ShapeMismatch {
                op: "bilstm",
                detail: format!("mask length {} vs sequence length {}", mask.len(), n),
            });
        }
        if seq.ncols() != self.fwd.input_dim() {
            return Err(NnetError::ShapeMismatch {
                op: "bilstm",
                detail: format!("input dim {} vs expected {}", seq.ncols(), self.fwd.input_dim()),
            });
        }
        let h = self.fwd.hidden_dim();
        let (out_f, cache_f) = run_dir(&self.fwd, seq, mask, false);
        let (out_b, cache_b) = run_dir(&self.bwd, seq, mask, true);
        let mut out = Array2::zeros((n, 2 * h));
        out.slice_mut(s![.., 0..h]).assign(&out_f);
        out.slice_mut(s![.., h..2 * h]).assign(&out_b);
        Ok((
            out,
            BiLstmCache {
                fwd: cache_f,
                bwd: cache_b,
                mask: mask.to_vec(),
            },
        ))
    }

    /// Accumulate parameter gradients and return the input-sequence gradient.
    pub fn backward(
        &mut self,
        seq: &Array2<f64>,
        cache: &BiLstmCache,
        d_out: &Array2<f64>,
    ) -> Array2<f64> {
        let h = self.fwd.hidden_dim();
        let d_fwd = d_out.slice(s![.., 0..h]).to_owned();
        let d_bwd = d_out.slice(s![.., h..2 * h]).to_owned();
        let mut d_seq = backward_dir(&mut self.fwd, seq, &cache.fwd, &cache.mask, false, &d_fwd);
        d_seq += &backward_dir(&mut self.bwd, seq, &cache.bwd, &cache.mask, true, &d_bwd);
        d_seq
    }
}

impl Tensors for BiLstm {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.fwd.visit_params(&scoped(prefix, "fwd"), f);
        self.bwd.visit_params(&scoped(prefix, "bwd"), f);
    }
}

fn run_dir(
    params: &LstmParams,
    seq: &Array2<f64>,
    mask: &[bool],
    reverse: bool,
) -> (Array2<f64>, DirCache) {
    let n = seq.nrows();
    let h = params.hidden_dim();
    let mut cache = DirCache {
        i: Array2::zeros((n, h)),
        f: Array2::zeros((n, h)),
        o: Array2::zeros((n, h)),
        g: Array2::zeros((n, h)),
        tanh_c: Array2::zeros((n, h)),
        h_seq: Array2::zeros((n, h)),
        c_seq: Array2::zeros((n, h)),
    };
    let mut out = Array2::zeros((n, h));
    let order: Vec<usize> = if reverse {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let mut h_prev = Array1::zeros(h);
    let mut c_prev = Array1::zeros(h);
    for &t in &order {
        if mask[t] {
            let step = params.gates(&seq.row(t), &h_prev, &c_prev);
            cache.i.row_mut(t).assign(&step.i);
            cache.f.row_mut(t).assign(&step.f);
            cache.o.row_mut(t).assign(&step.o);
            cache.g.row_mut(t).assign(&step.g);
            cache.tanh_c.row_mut(t).assign(&step.tanh_c);
            out.row_mut(t).assign(&step.h);
            h_prev = step.h;
            c_prev = step.c;
        }
        cache.h_seq.row_mut(t).assign(&h_prev);
        cache.c_seq.row_mut(t).assign(&c_prev);
    }
    (out, cache)
}

fn backward_dir(
    params: &mut LstmParams,
    seq: &Array2<f64>,
    cache: &DirCache,
    mask: &[bool],
    reverse: bool,
    d_out: &Array2<f64>,
) -> Array2<f64> {
    let n = seq.nrows();
    let h = params.hidden_dim();
    let mut d_seq = Array2::zeros(seq.raw_dim());
    let order: Vec<usize> = if reverse {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let mut dh_next: Array1<f64> = Array1::zeros(h);
    let mut dc_next: Array1<f64> = Array1::zeros(h);
    let zeros = Array1::zeros(h);
    for k in (0..order.len()).rev() {
        let t = order[k];
        if !mask[t] {
            // carry-through position: state gradient passes straight through
            continue;
        }
        let (h_prev, c_prev) = if k > 0 {
            let p = order[k - 1];
            (cache.h_seq.row(p).to_owned(), cache.c_seq.row(p).to_owned())
        } else {
            (zeros.clone(), zeros.clone())
        };
        let i = cache.i.row(t);
        let f = cache.f.row(t);
        let o = cache.o.row(t);
        let g = cache.g.row(t);
        let tanh_c = cache.tanh_c.row(t);

        let dh = &d_out.row(t).to_owned() + &dh_next;
        let d_o = &dh * &tanh_c;
        let dc = &(&dh * &o) * &tanh_c.mapv(|v| 1.0 - v * v) + &dc_next;
        let d_i = &dc * &g;
        let d_g = &dc * &i;
        let d_f = &dc * &c_prev;

        let mut da = Array1::zeros(4 * h);
        for j in 0..h {
            da[j] = d_i[j] * i[j] * (1.0 - i[j]);
            da[h + j] = d_f[j] * f[j] * (1.0 - f[j]);
            da[2 * h + j] = d_o[j] * o[j] * (1.0 - o[j]);
            da[3 * h + j] = d_g[j] * g[j] * (1.0 - g[j] * g[j]);
        }

        add_outer(&mut params.w.g, &da, seq.row(t).as_slice().expect("contiguous"));
        add_outer(&mut params.u.g, &da, h_prev.as_slice().expect("contiguous"));
        params.b.g += &da;

        d_seq.row_mut(t).assign(&params.w.v.t().dot(&da));
        dh_next = params.u.v.t().dot(&da);
        dc_next = &dc * &f;
    }
    d_seq
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_params_give_zero_hidden_state() {
        let mut r = rng(0);
        let mut p = LstmParams::new(3, 4, &mut r);
        p.w.v.fill(0.0);
        p.u.v.fill(0.0);
        p.b.v.fill(0.0);
        let x = Array1::from(vec![1.0, -2.0, 3.0]);
        let (h, c) = p
            .step(&x, &Array1::zeros(4), &Array1::zeros(4))
            .unwrap();
        // o = sigmoid(0) = 0.5 but tanh(c) = tanh(0) = 0, so h = 0
        assert!(h.iter().all(|&v| v == 0.0));
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn step_matches_scalar_recurrence() {
        // h = 1: every gate is a scalar, so the recurrence can be done by hand.
        let mut r = rng(7);
        let mut p = LstmParams::new(1, 1, &mut r);
        p.w.v = Array2::from_shape_vec((4, 1), vec![0.3, -0.2, 0.5, 0.7]).unwrap();
        p.u.v = Array2::from_shape_vec((4, 1), vec![-0.4, 0.6, 0.1, -0.9]).unwrap();
        p.b.v = Array1::from(vec![0.05, -0.1, 0.2, 0.0]);
        let x = 0.8;
        let h_prev = -0.3;
        let c_prev = 0.4;

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let i = sig(0.3 * x - 0.4 * h_prev + 0.05);
        let f = sig(-0.2 * x + 0.6 * h_prev - 0.1);
        let o = sig(0.5 * x + 0.1 * h_prev + 0.2);
        let g = (0.7 * x - 0.9 * h_prev).tanh();
        let c = f * c_prev + i * g;
        let h = o * c.tanh();

        let (h_got, c_got) = p
            .step(
                &Array1::from(vec![x]),
                &Array1::from(vec![h_prev]),
                &Array1::from(vec![c_prev]),
            )
            .unwrap();
        assert!((h_got[0] - h).abs() < 1e-10);
        assert!((c_got[0] - c).abs() < 1e-10);
    }

    #[test]
    fn step_rejects_shape_mismatch() {
        let mut r = rng(1);
        let p = LstmParams::new(3, 4, &mut r);
        let err = p.step(&Array1::zeros(2), &Array1::zeros(4), &Array1::zeros(4));
        assert!(err.is_err());
    }

    #[test]
    fn length_one_sequence_is_one_step_per_direction() {
        let mut r = rng(3);
        let bi = BiLstm::new(3, 2, &mut r);
        let seq = Array2::from_shape_vec((1, 3), vec![0.1, -0.4, 0.9]).unwrap();
        let (out, _) = bi.forward(&seq, &[true]).unwrap();
        let x = seq.row(0).to_owned();
        let (hf, _) = bi.fwd.step(&x, &Array1::zeros(2), &Array1::zeros(2)).unwrap();
        let (hb, _) = bi.bwd.step(&x, &Array1::zeros(2), &Array1::zeros(2)).unwrap();
        for j in 0..2 {
            assert!((out[[0, j]] - hf[j]).abs() < 1e-12);
            assert!((out[[0, 2 + j]] - hb[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn reversing_input_swaps_directional_roles() {
        let mut r = rng(11);
        let mut bi = BiLstm::new(3, 2, &mut r);
        // make the two directions share parameters so the swap is exact
        bi.bwd = bi.fwd.clone();
        let n = 5;
        let seq = Array2::from_shape_fn((n, 3), |(i, j)| ((i * 3 + j) as f64 * 0.17).sin());
        let mask = vec![true; n];
        let (out, _) = bi.forward(&seq, &mask).unwrap();
        let mut rev = Array2::zeros(seq.raw_dim());
        for t in 0..n {
            rev.row_mut(t).assign(&seq.row(n - 1 - t));
        }
        let (out_rev, _) = bi.forward(&rev, &mask).unwrap();
        let h = 2;
        for t in 0..n {
            for j in 0..h {
                // forward half of reversed run equals backward half of original at mirrored t
                assert!((out_rev[[t, j]] - out[[n - 1 - t, h + j]]).abs() < 1e-12);
                assert!((out_rev[[t, h + j]] - out[[n - 1 - t, j]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trailing_padding_matches_unpadded_run() {
        let mut r = rng(5);
        let bi = BiLstm::new(4, 3, &mut r);
        let seq = Array2::from_shape_fn((3, 4), |(i, j)| ((i + 2 * j) as f64 * 0.23).cos());
        let mask = vec![true; 3];
        let (out, _) = bi.forward(&seq, &mask).unwrap();

        let mut padded = Array2::zeros((6, 4));
        padded.slice_mut(s![0..3, ..]).assign(&seq);
        padded.slice_mut(s![3..6, ..]).fill(7.3); // garbage that must not leak
        let pmask = vec![true, true, true, false, false, false];
        let (pout, _) = bi.forward(&padded, &pmask).unwrap();
        for t in 0..3 {
            for j in 0..6 {
                assert!((out[[t, j]] - pout[[t, j]]).abs() < 1e-8);
            }
        }
        for t in 3..6 {
            for j in 0..6 {
                assert_eq!(pout[[t, j]], 0.0);
            }
        }
    }
}
