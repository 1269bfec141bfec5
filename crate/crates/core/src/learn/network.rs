use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agent::Transition;
use crate::error::{Error, Result};
use crate::math::sqrt;

/// Fully connected layer, weights stored row-major as `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: alloc::vec![0.0; inputs * outputs], bias: alloc::vec![0.0; outputs] }
    }

    /// Xavier-uniform weights, zero bias.
    pub fn xavier<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = sqrt(6.0 / (inputs + outputs) as f64);
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..=limit)).collect();
        Self { inputs, outputs, weights, bias: alloc::vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }

    /// Accumulates parameter gradients and writes the input gradient.
    fn back(&self, x: &[f64], dy: &[f64], grad: &mut Dense, dx: Option<&mut Vec<f64>>) {
        for o in 0..self.outputs {
            let g = dy[o];
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let row = &mut grad.weights[o * self.inputs..(o + 1) * self.inputs];
            for (w, v) in row.iter_mut().zip(x) {
                *w += g * v;
            }
        }
        if let Some(dx) = dx {
            dx.clear();
            dx.resize(self.inputs, 0.0);
            for o in 0..self.outputs {
                let g = dy[o];
                if g == 0.0 {
                    continue;
                }
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                for (d, w) in dx.iter_mut().zip(row) {
                    *d += g * w;
                }
            }
        }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Q-network with a dense ReLU trunk and dueling branch heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdqNetwork {
    pub trunk: Vec<Dense>,
    pub value: Dense,
    /// One output block of `actions_per_branch` values per branch.
    pub advantage: Dense,
    pub num_branches: usize,
    pub actions_per_branch: usize,
}

/// Parameter gradients, shaped like the network.
pub type Gradients = BdqNetwork;

struct Trace {
    /// Post-activation outputs, starting with the input.
    acts: Vec<Vec<f64>>,
    v: f64,
    adv: Vec<f64>,
}

impl BdqNetwork {
    /// `widths` lists the input width followed by every hidden width.
    pub fn new<R: Rng + ?Sized>(widths: &[usize], num_branches: usize, actions_per_branch: usize, rng: &mut R) -> Self {
        assert!(widths.len() >= 2, "need an input and at least one hidden layer");
        let trunk = widths.windows(2).map(|w| Dense::xavier(w[0], w[1], rng)).collect();
        let h = *widths.last().unwrap();
        let value = Dense::xavier(h, 1, rng);
        let advantage = Dense::xavier(h, num_branches * actions_per_branch, rng);
        Self { trunk, value, advantage, num_branches, actions_per_branch }
    }

    /// A network of the given shape with every parameter zero.
    pub fn zeros(widths: &[usize], num_branches: usize, actions_per_branch: usize) -> Self {
        assert!(widths.len() >= 2, "need an input and at least one hidden layer");
        let h = *widths.last().unwrap();
        Self {
            trunk: widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            value: Dense::zeros(h, 1),
            advantage: Dense::zeros(h, num_branches * actions_per_branch),
            num_branches,
            actions_per_branch,
        }
    }

    /// Same shape, every parameter zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            trunk: self.trunk.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
            value: Dense::zeros(self.value.inputs, 1),
            advantage: Dense::zeros(self.advantage.inputs, self.advantage.outputs),
            num_branches: self.num_branches,
            actions_per_branch: self.actions_per_branch,
        }
    }

    pub fn input_width(&self) -> usize {
        self.trunk[0].inputs
    }

    /// Input, hidden and head widths.
    pub fn widths(&self) -> Vec<usize> {
        let mut w: Vec<usize> = self.trunk.iter().map(|l| l.inputs).collect();
        w.push(self.value.inputs);
        w
    }

    fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.trunk.iter().chain([&self.value, &self.advantage])
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.trunk.iter_mut().chain([&mut self.value, &mut self.advantage])
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(Dense::param_count).sum()
    }

    /// All parameters, layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in self.layers() {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::ShapeMismatch { expected: self.param_count(), got: values.len() });
        }
        let mut at = 0;
        for l in self.layers_mut() {
            let n = l.weights.len();
            l.weights.copy_from_slice(&values[at..at + n]);
            at += n;
            let n = l.bias.len();
            l.bias.copy_from_slice(&values[at..at + n]);
            at += n;
        }
        Ok(())
    }

    fn trace(&self, state: &[f64]) -> Result<Trace> {
        if state.len() != self.input_width() {
            return Err(Error::ShapeMismatch { expected: self.input_width(), got: state.len() });
        }
        let mut acts = Vec::with_capacity(self.trunk.len() + 1);
        acts.push(state.to_vec());
        for layer in &self.trunk {
            let mut out = Vec::new();
            layer.apply(acts.last().unwrap(), &mut out);
            for v in &mut out {
                *v = v.max(0.0);
            }
            acts.push(out);
        }
        let h = acts.last().unwrap();
        let mut v = Vec::new();
        self.value.apply(h, &mut v);
        let mut adv = Vec::new();
        self.advantage.apply(h, &mut adv);
        Ok(Trace { acts, v: v[0], adv })
    }

    fn combine(&self, v: f64, adv: &[f64]) -> Vec<Vec<f64>> {
        adv.chunks(self.actions_per_branch)
            .map(|a| {
                let m = a.iter().sum::<f64>() / a.len() as f64;
                a.iter().map(|x| v + x - m).collect()
            })
            .collect()
    }

    /// Q-values, one vector per branch.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<Vec<f64>>> {
        let tr = self.trace(state)?;
        Ok(self.combine(tr.v, &tr.adv))
    }

    /// State value `V(s)`.
    pub fn value_of(&self, state: &[f64]) -> Result<f64> {
        Ok(self.trace(state)?.v)
    }

    /// Per-branch argmax, lowest index on ties.
    pub fn greedy(&self, state: &[f64]) -> Result<Vec<usize>> {
        Ok(self.forward(state)?.iter().map(|q| argmax(q)).collect())
    }

    /// TD targets `r + gamma * mean_d max_a Q_d(s', a)` from this network.
    pub fn targets(&self, batch: &[Transition], gamma: f64) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|tr| {
                if tr.terminal {
                    return Ok(tr.reward);
                }
                let q = self.forward(&tr.next_state)?;
                let m = q.iter().map(|b| b[argmax(b)]).sum::<f64>() / q.len() as f64;
                Ok(tr.reward + gamma * m)
            })
            .collect()
    }

    /// Loss and parameter gradients for fixed targets.
    ///
    /// The loss is the batch mean of the branch-mean squared error between
    /// `Q_d(s, a_d)` and the target.
    pub fn loss_and_gradients(&self, batch: &[Transition], targets: &[f64]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::EmptyInput);
        }
        if targets.len() != batch.len() {
            return Err(Error::LengthMismatch { left: targets.len(), right: batch.len() });
        }
        let d = self.num_branches;
        let n = self.actions_per_branch;
        let scale = 1.0 / (batch.len() * d) as f64;
        let mut grad = self.zeros_like();
        let mut loss = 0.0;
        let mut dh = Vec::new();
        let mut dx = Vec::new();
        for (tr, &y) in batch.iter().zip(targets) {
            if tr.action.len() != d {
                return Err(Error::ShapeMismatch { expected: d, got: tr.action.len() });
            }
            let trace = self.trace(&tr.state)?;
            let q = self.combine(trace.v, &trace.adv);
            let mut dv = 0.0;
            let mut dadv = alloc::vec![0.0; d * n];
            for (b, &a) in tr.action.iter().enumerate() {
                if a >= n {
                    return Err(Error::ShapeMismatch { expected: n, got: a + 1 });
                }
                let err = q[b][a] - y;
                loss += err * err * scale;
                let g = 2.0 * err * scale;
                dv += g;
                for j in 0..n {
                    dadv[b * n + j] -= g / n as f64;
                }
                dadv[b * n + a] += g;
            }
            let h = trace.acts.last().unwrap();
            self.value.back(h, &[dv], &mut grad.value, Some(&mut dh));
            self.advantage.back(h, &dadv, &mut grad.advantage, Some(&mut dx));
            for (a, b) in dh.iter_mut().zip(&dx) {
                *a += b;
            }
            for (li, layer) in self.trunk.iter().enumerate().rev() {
                let out = &trace.acts[li + 1];
                for (g, o) in dh.iter_mut().zip(out) {
                    if *o <= 0.0 {
                        *g = 0.0;
                    }
                }
                let want_dx = li > 0;
                layer.back(&trace.acts[li], &dh, &mut grad.trunk[li], if want_dx { Some(&mut dx) } else { None });
                if want_dx {
                    core::mem::swap(&mut dh, &mut dx);
                }
            }
        }
        Ok((loss, grad))
    }

    /// One plain gradient step against `target`; returns the loss before the
    /// step.
    pub fn backward(&mut self, batch: &[Transition], target: &BdqNetwork, gamma: f64, lr: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::Domain("gamma must lie in [0, 1)"));
        }
        let y = target.targets(batch, gamma)?;
        let (loss, grad) = self.loss_and_gradients(batch, &y)?;
        if lr != 0.0 {
            let g = grad.params();
            let mut p = self.params();
            for (p, g) in p.iter_mut().zip(&g) {
                *p -= lr * g;
            }
            self.set_params(&p)?;
        }
        Ok(loss)
    }
}

/// Index of the largest value, lowest index on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
