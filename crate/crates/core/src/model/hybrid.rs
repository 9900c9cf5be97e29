use crate::conv::{quantum_conv_with_jacobians, ConvGeometry, Image};
use crate::error::Result;
use crate::qfilter::{Executor, GradMethod, QuantumFilter};

use super::head::DenseHead;

/// Gradients of one sample's loss through the head and the quantum layer.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridGrad {
    pub loss: f64,
    pub probs: Vec<f64>,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
    pub d_theta: Vec<f64>,
}

/// Chains the head's feature gradient through every output cell's filter
/// Jacobian: `dL/dθ_k = Σ_cell Σ_c dL/df[cell, c] · J_cell[c, k]`.
///
/// Runs `o_w · o_h · (1 + gradient_cost)` circuits.
pub fn hybrid_grad(
    head: &DenseHead,
    filter: &QuantumFilter,
    image: &Image,
    geometry: &ConvGeometry,
    label: usize,
    executor: &Executor,
    method: GradMethod,
) -> Result<HybridGrad> {
    let (features, jacobians) =
        quantum_conv_with_jacobians(image, filter, geometry, executor, method)?;
    let hg = head.loss_and_grad(features.values(), label)?;
    let channels = features.channels();
    let mut d_theta = vec![0.0; filter.theta().len()];
    for (cell, jac) in jacobians.iter().enumerate() {
        let df = &hg.d_features[cell * channels..(cell + 1) * channels];
        for (k, dt) in d_theta.iter_mut().enumerate() {
            *dt += df
                .iter()
                .enumerate()
                .map(|(c, g)| g * jac.get(c, k))
                .sum::<f64>();
        }
    }
    Ok(HybridGrad {
        loss: hg.loss,
        probs: hg.probs,
        d_weights: hg.d_weights,
        d_bias: hg.d_bias,
        d_theta,
    })
}
