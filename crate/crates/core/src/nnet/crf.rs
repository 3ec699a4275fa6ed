//! Linear-chain CRF: log-space forward algorithm, exact negative
//! log-likelihood gradients via forward-backward marginals, and Viterbi
//! decoding with a deterministic lowest-index tie break.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;

use super::init::{uniform_array1, uniform_array2};
use super::params::{scoped, ParamMut, Tensors, P1, P2};
use super::{logsumexp, NnetError, Result};

#[derive(Debug, Clone)]
pub struct CrfParams {
    /// trans[(a, b)] scores the transition a -> b.
    pub trans: P2,
    pub start: P1,
    pub stop: P1,
}

impl CrfParams {
    pub fn new(labels: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            trans: P2::new(uniform_array2(labels, labels, 0.1, rng)),
            start: P1::new(uniform_array1(labels, 0.1, rng)),
            stop: P1::new(uniform_array1(labels, 0.1, rng)),
        }
    }

    pub fn num_labels(&self) -> usize {
        self.start.v.len()
    }

    fn check(&self, emissions: &Array2<f64>, op: &'static str) -> Result<()> {
        if emissions.nrows() == 0 {
            return Err(NnetError::Usage {
                op,
                detail: "empty emission sequence".to_string(),
            });
        }
        if emissions.ncols() != self.num_labels() {
            return Err(NnetError::ShapeMismatch {
                op,
                detail: format!(
                    "{} emission labels vs {} CRF labels",
                    emissions.ncols(),
                    self.num_labels()
                ),
            });
        }
        Ok(())
    }

    /// Score of one label path: start + emissions + transitions + stop.
    pub fn score(&self, emissions: &Array2<f64>, path: &[usize]) -> Result<f64> {
        self.check(emissions, "crf_score")?;
        let labels = self.num_labels();
        if path.len() != emissions.nrows() {
            return Err(NnetError::ShapeMismatch {
                op: "crf_score",
                detail: format!("path length {} vs {} rows", path.len(), emissions.nrows()),
            });
        }
        if let Some(&bad) = path.iter().find(|&&y| y >= labels) {
            return Err(NnetError::Usage {
                op: "crf_score",
                detail: format!("label {bad} outside inventory of size {labels}"),
            });
        }
        let mut s = self.start.v[path[0]] + emissions[[0, path[0]]];
        for t in 1..path.len() {
            s += self.trans.v[[path[t - 1], path[t]]] + emissions[[t, path[t]]];
        }
        s += self.stop.v[path[path.len() - 1]];
        Ok(s)
    }

    /// log sum over all label paths of exp(score(path)).
    pub fn log_partition(&self, emissions: &Array2<f64>) -> Result<f64> {
        self.check(emissions, "crf_log_partition")?;
        let (alpha, logz) = self.forward_scores(emissions);
        let _ = alpha;
        Ok(logz)
    }

    fn forward_scores(&self, emissions: &Array2<f64>) -> (Array2<f64>, f64) {
        let n = emissions.nrows();
        let labels = self.num_labels();
        let mut alpha = Array2::zeros((n, labels));
        for b in 0..labels {
            alpha[[0, b]] = self.start.v[b] + emissions[[0, b]];
        }
        let mut scratch = vec![0.0; labels];
        for t in 1..n {
            for b in 0..labels {
                for (a, slot) in scratch.iter_mut().enumerate() {
                    *slot = alpha[[t - 1, a]] + self.trans.v[[a, b]];
                }
                alpha[[t, b]] = logsumexp(&scratch) + emissions[[t, b]];
            }
        }
        for (a, slot) in scratch.iter_mut().enumerate() {
            *slot = alpha[[n - 1, a]] + self.stop.v[a];
        }
        let logz = logsumexp(&scratch);
        (alpha, logz)
    }

    fn backward_scores(&self, emissions: &Array2<f64>) -> Array2<f64> {
        let n = emissions.nrows();
        let labels = self.num_labels();
        let mut beta = Array2::zeros((n, labels));
        for a in 0..labels {
            beta[[n - 1, a]] = self.stop.v[a];
        }
        let mut scratch = vec![0.0; labels];
        for t in (0..n - 1).rev() {
            for a in 0..labels {
                for (b, slot) in scratch.iter_mut().enumerate() {
                    *slot = self.trans.v[[a, b]] + emissions[[t + 1, b]] + beta[[t + 1, b]];
                }
                beta[[t, a]] = logsumexp(&scratch);
            }
        }
        beta
    }

    /// Negative log-likelihood of the gold path.
    pub fn nll(&self, emissions: &Array2<f64>, gold: &[usize]) -> Result<f64> {
        let logz = self.log_partition(emissions)?;
        let gold_score = self.score(emissions, gold)?;
        Ok(logz - gold_score)
    }

    /// NLL plus exact gradients: accumulates transition/start/stop gradients
    /// in place and returns (loss, d_emissions). The emission gradient is
    /// the unary marginal minus the gold indicator; transition gradients are
    /// expected pairwise counts minus gold counts.
    pub fn nll_backward(
        &mut self,
        emissions: &Array2<f64>,
        gold: &[usize],
        loss_scale: f64,
    ) -> Result<(f64, Array2<f64>)> {
        let logz = self.log_partition(emissions)?;
        let gold_score = self.score(emissions, gold)?;
        let loss = logz - gold_score;

        let n = emissions.nrows();
        let labels = self.num_labels();
        let (alpha, _) = self.forward_scores(emissions);
        let beta = self.backward_scores(emissions);

        let mut d_em = Array2::zeros((n, labels));
        for t in 0..n {
            for k in 0..labels {
                let marginal = (alpha[[t, k]] + beta[[t, k]] - logz).exp();
                d_em[[t, k]] = loss_scale * marginal;
            }
            d_em[[t, gold[t]]] -= loss_scale;
        }
        for t in 0..n - 1 {
            for a in 0..labels {
                for b in 0..labels {
                    let pair = (alpha[[t, a]]
                        + self.trans.v[[a, b]]
                        + emissions[[t + 1, b]]
                        + beta[[t + 1, b]]
                        - logz)
                        .exp();
                    self.trans.g[[a, b]] += loss_scale * pair;
                }
            }
            self.trans.g[[gold[t], gold[t + 1]]] -= loss_scale;
        }
        for k in 0..labels {
            self.start.g[k] += loss_scale * (alpha[[0, k]] + beta[[0, k]] - logz).exp();
            self.stop.g[k] += loss_scale * (alpha[[n - 1, k]] + beta[[n - 1, k]] - logz).exp();
        }
        self.start.g[gold[0]] -= loss_scale;
        self.stop.g[gold[n - 1]] -= loss_scale;

        Ok((loss, d_em))
    }

    /// Most probable label path. Ties break toward the lower label index at
    /// every backpointer decision, making decoding deterministic.
    pub fn viterbi(&self, emissions: &Array2<f64>) -> Result<Vec<usize>> {
        self.check(emissions, "viterbi")?;
        let n = emissions.nrows();
        let labels = self.num_labels();
        let mut delta = Array2::zeros((n, labels));
        let mut back = Array2::<usize>::zeros((n, labels));
        for b in 0..labels {
            delta[[0, b]] = self.start.v[b] + emissions[[0, b]];
        }
        for t in 1..n {
            for b in 0..labels {
                let mut best = f64::NEG_INFINITY;
                let mut best_a = 0;
                for a in 0..labels {
                    let s = delta[[t - 1, a]] + self.trans.v[[a, b]];
                    if s > best {
                        best = s;
                        best_a = a;
                    }
                }
                delta[[t, b]] = best + emissions[[t, b]];
                back[[t, b]] = best_a;
            }
        }
        let mut best = f64::NEG_INFINITY;
        let mut best_b = 0;
        for b in 0..labels {
            let s = delta[[n - 1, b]] + self.stop.v[b];
            if s > best {
                best = s;
                best_b = b;
            }
        }
        let mut path = vec![0; n];
        path[n - 1] = best_b;
        for t in (1..n).rev() {
            path[t - 1] = back[[t, path[t]]];
        }
        Ok(path)
    }
}

impl Tensors for CrfParams {
    fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamMut<'_>)) {
        self.trans.visit(&scoped(prefix, "trans"), f);
        self.start.visit(&scoped(prefix, "start"), f);
        self.stop.visit(&scoped(prefix, "stop"), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn zeroed(labels: usize) -> CrfParams {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut crf = CrfParams::new(labels, &mut rng);
        crf.trans.v.fill(0.0);
        crf.start.v.fill(0.0);
        crf.stop.v.fill(0.0);
        crf
    }

    #[test]
    fn single_token_partition_is_logsumexp_of_emissions() {
        let crf = zeroed(3);
        let em = Array2::from_shape_vec((1, 3), vec![0.2, -1.0, 0.5]).unwrap();
        let got = crf.log_partition(&em).unwrap();
        assert!((got - logsumexp(&[0.2, -1.0, 0.5])).abs() < 1e-12);
    }

    #[test]
    fn zero_scores_give_n_log_t() {
        let crf = zeroed(4);
        for n in 1..=5 {
            let em = Array2::zeros((n, 4));
            let got = crf.log_partition(&em).unwrap();
            assert!((got - n as f64 * 4f64.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_sequence_is_a_usage_error() {
        let crf = zeroed(3);
        assert!(crf.log_partition(&Array2::zeros((0, 3))).is_err());
    }

    #[test]
    fn nll_is_nonnegative_and_saturates_for_confident_emissions() {
        let crf = zeroed(4);
        let gold = vec![1, 0, 3];
        let mut em = Array2::zeros((3, 4));
        for (t, &y) in gold.iter().enumerate() {
            em[[t, y]] = 1000.0;
        }
        let loss = crf.nll(&em, &gold).unwrap();
        assert!(loss >= -1e-9);
        assert!(loss < 1e-9, "saturated loss was {loss}");
    }

    #[test]
    fn nll_rejects_labels_outside_inventory() {
        let crf = zeroed(3);
        let em = Array2::zeros((2, 3));
        assert!(crf.nll(&em, &[0, 3]).is_err());
    }

    #[test]
    fn single_label_viterbi_is_constant_path() {
        let crf = zeroed(1);
        let em = Array2::zeros((4, 1));
        assert_eq!(crf.viterbi(&em).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn all_equal_scores_decode_to_lowest_index_path() {
        let crf = zeroed(5);
        let em = Array2::zeros((6, 5));
        assert_eq!(crf.viterbi(&em).unwrap(), vec![0; 6]);
    }
}
