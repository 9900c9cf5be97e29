use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const N_CLASSES: usize = 10;

/// Fully connected layer from flattened features to class logits, followed
/// by softmax. `weights` is `in_features × n_classes`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHead {
    in_features: usize,
    n_classes: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// Loss and gradients of softmax cross-entropy for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGrad {
    pub loss: f64,
    pub probs: Vec<f64>,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_features: Vec<f64>,
}

impl DenseHead {
    pub fn zeros(in_features: usize, n_classes: usize) -> Self {
        DenseHead {
            in_features,
            n_classes,
            weights: vec![0.0; in_features * n_classes],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn from_parts(
        in_features: usize,
        n_classes: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != in_features * n_classes || bias.len() != n_classes {
            return Err(Error::Model(format!(
                "head {in_features}×{n_classes} got {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        Ok(DenseHead {
            in_features,
            n_classes,
            weights,
            bias,
        })
    }

    /// Glorot-uniform weights in `±sqrt(6 / (in + out))`, zero bias.
    pub fn glorot(in_features: usize, n_classes: usize, seed: u64) -> Self {
        let a = (6.0 / (in_features + n_classes) as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..in_features * n_classes)
            .map(|_| rng.random_range(-a..a))
            .collect();
        DenseHead {
            in_features,
            n_classes,
            weights,
            bias: vec![0.0; n_classes],
        }
    }

    pub fn in_features(&self) -> usize {
        self.in_features
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    fn check(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.in_features {
            return Err(Error::Model(format!(
                "head expects {} features, got {}",
                self.in_features,
                features.len()
            )));
        }
        Ok(())
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check(features)?;
        let mut z = self.bias.clone();
        for (f, row) in features.iter().zip(self.weights.chunks_exact(self.n_classes)) {
            if *f != 0.0 {
                for (zc, w) in z.iter_mut().zip(row) {
                    *zc += f * w;
                }
            }
        }
        Ok(z)
    }

    /// Class probabilities.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(features)?).0)
    }

    /// Cross-entropy `−ln p[label]` with analytic gradients for the weights,
    /// the bias and the input features.
    pub fn loss_and_grad(&self, features: &[f64], label: usize) -> Result<HeadGrad> {
        if label >= self.n_classes {
            return Err(Error::Data(format!(
                "label {label} outside 0..{}",
                self.n_classes
            )));
        }
        let z = self.logits(features)?;
        let (probs, lse) = softmax(&z);
        let loss = lse - z[label];
        let mut g = probs.clone();
        g[label] -= 1.0;

        let mut d_weights = vec![0.0; self.weights.len()];
        let mut d_features = vec![0.0; self.in_features];
        for (i, (f, row)) in features
            .iter()
            .zip(self.weights.chunks_exact(self.n_classes))
            .enumerate()
        {
            let dw = &mut d_weights[i * self.n_classes..(i + 1) * self.n_classes];
            let mut df = 0.0;
            for c in 0..self.n_classes {
                dw[c] = f * g[c];
                df += row[c] * g[c];
            }
            d_features[i] = df;
        }
        Ok(HeadGrad {
            loss,
            probs,
            d_weights,
            d_bias: g,
            d_features,
        })
    }

    /// Cross-entropy loss only.
    pub fn loss(&self, features: &[f64], label: usize) -> Result<f64> {
        if label >= self.n_classes {
            return Err(Error::Data(format!(
                "label {label} outside 0..{}",
                self.n_classes
            )));
        }
        let z = self.logits(features)?;
        Ok(softmax(&z).1 - z[label])
    }
}

/// Numerically stable softmax; also returns `log Σ exp z`.
pub fn softmax(z: &[f64]) -> (Vec<f64>, f64) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / sum).collect(), max + sum.ln())
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best })
        .0
}
