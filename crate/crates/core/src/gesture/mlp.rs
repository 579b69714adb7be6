//! Fully connected network: ReLU hidden layers, softmax output,
//! cross-entropy loss with hand-written backpropagation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.biases[o]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Gradient with the same shape as the network.
pub type Gradient = Mlp;

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Mlp {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Model(format!("invalid layer sizes {sizes:?}")));
        }
        Ok(Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// He-normal weights, zero biases.
    pub fn init<R: Rng>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(sizes)?;
        for l in &mut m.layers {
            let normal = Normal::new(0.0, (2.0 / l.inputs as f64).sqrt()).expect("positive std");
            for w in &mut l.weights {
                *w = normal.sample(rng);
            }
        }
        Ok(m)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Model("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.weights.len() != l.inputs * l.outputs || l.biases.len() != l.outputs {
                return Err(Error::Model(format!("layer {i} has inconsistent parameter counts")));
            }
            if i > 0 && self.layers[i - 1].outputs != l.inputs {
                return Err(Error::Model(format!("layer {i} input does not match previous output")));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(())
    }

    /// Pre-activations and activations of every layer for one input.
    fn trace(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut acts = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            l.apply(acts.last().unwrap(), &mut z);
            let a = if i == last {
                softmax(&z)
            } else {
                z.iter().map(|v| v.max(0.0)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        (pre, acts)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_size() {
            return Err(Error::Dimension {
                expected: self.input_size(),
                got: x.len(),
            });
        }
        Ok(self.trace(x).1.pop().unwrap())
    }

    /// Mean cross-entropy over the batch.
    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> Result<f64> {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let p = self.forward(x)?;
            total -= p[y].max(f64::MIN_POSITIVE).ln();
        }
        Ok(total / xs.len() as f64)
    }

    /// Mean cross-entropy and its gradient over the batch.
    #[allow(clippy::needless_range_loop)]
    pub fn loss_and_grad(&self, xs: &[&[f64]], ys: &[usize]) -> Result<(f64, Gradient)> {
        if xs.len() != ys.len() || xs.is_empty() {
            return Err(Error::Dimension {
                expected: xs.len().max(1),
                got: ys.len(),
            });
        }
        let c = self.output_size();
        let mut grad = Mlp::zeros(&self.sizes())?;
        let mut total = 0.0;
        let inv = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            if x.len() != self.input_size() {
                return Err(Error::Dimension {
                    expected: self.input_size(),
                    got: x.len(),
                });
            }
            if y >= c {
                return Err(Error::Model(format!("label index {y} out of range for {c} classes")));
            }
            let (pre, acts) = self.trace(x);
            let p = acts.last().unwrap();
            total -= p[y].max(f64::MIN_POSITIVE).ln();
            // dL/dz at the output: p - onehot
            let mut delta: Vec<f64> = p.iter().enumerate().map(|(k, v)| (v - f64::from(k == y)) * inv).collect();
            for li in (0..self.layers.len()).rev() {
                let layer = &self.layers[li];
                let input = &acts[li];
                let g = &mut grad.layers[li];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if li > 0 {
                    let mut back = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (b, w) in back.iter_mut().zip(row) {
                            *b += w * delta[o];
                        }
                    }
                    for (b, z) in back.iter_mut().zip(&pre[li - 1]) {
                        if *z <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        Ok((total * inv, grad))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if i < l.weights.len() {
                return (li, true, i);
            }
            i -= l.weights.len();
            if i < l.biases.len() {
                return (li, false, i);
            }
            i -= l.biases.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter by flat index: each layer's weights, then its biases.
    pub fn param(&self, i: usize) -> f64 {
        let (l, w, k) = self.locate(i);
        if w {
            self.layers[l].weights[k]
        } else {
            self.layers[l].biases[k]
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        let (l, w, k) = self.locate(i);
        if w {
            self.layers[l].weights[k] = v;
        } else {
            self.layers[l].biases[k] = v;
        }
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = Mlp::init(&[42, 64, 32, 8], &mut rng).unwrap();
        let x: Vec<f64> = (0..42).map(|i| (i as f64 * 0.37).sin()).collect();
        let p = m.forward(&x).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(m.forward(&x[..41]).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = Mlp::zeros(&[4, 3, 5]).unwrap();
        let p = m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert!(p.iter().all(|v| (v - 0.2).abs() < 1e-15));
    }

    #[allow(clippy::needless_range_loop)]
    fn reference_forward(m: &Mlp, x: &[f64]) -> Vec<f64> {
        // plain nested loops over explicit matrices
        let mut a = x.to_vec();
        for (i, l) in m.layers.iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            for r in 0..l.outputs {
                z[r] = l.biases[r];
                for c in 0..l.inputs {
                    z[r] += l.weights[r * l.inputs + c] * a[c];
                }
            }
            if i + 1 < m.layers.len() {
                a = z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect();
            } else {
                let mx = z.iter().cloned().fold(f64::MIN, f64::max);
                let s: f64 = z.iter().map(|v| (v - mx).exp()).sum();
                a = z.iter().map(|v| (v - mx).exp() / s).collect();
            }
        }
        a
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let m = Mlp::init(&[6, 9, 7, 4], &mut rng).unwrap();
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = m.forward(&x).unwrap();
            for (g, e) in got.iter().zip(reference_forward(&m, &x)) {
                assert!((g - e).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = Mlp::init(&[5, 8, 6, 3], &mut rng).unwrap();
        for b in m.layers.iter_mut().flat_map(|l| l.biases.iter_mut()) {
            *b = rng.random_range(-0.1..0.1);
        }
        let data: Vec<Vec<f64>> = (0..4).map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let xs: Vec<&[f64]> = data.iter().map(|v| v.as_slice()).collect();
        let ys = [0, 2, 1, 2];
        let (_, g) = m.loss_and_grad(&xs, &ys).unwrap();
        let h = 1e-6;
        for i in 0..m.param_count() {
            let orig = m.param(i);
            m.set_param(i, orig + h);
            let up = m.loss(&xs, &ys).unwrap();
            m.set_param(i, orig - h);
            let down = m.loss(&xs, &ys).unwrap();
            m.set_param(i, orig);
            let numeric = (up - down) / (2.0 * h);
            let analytic = g.param(i);
            let scale = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!((analytic - numeric).abs() / scale < 1e-5, "param {i}: {analytic} vs {numeric}");
        }
    }
}
