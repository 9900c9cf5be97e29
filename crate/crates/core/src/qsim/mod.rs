//! Exact state-vector simulation of few-qubit circuits.
//!
//! Gates are applied in place with strided kernels; no `2^n × 2^n` matrix is
//! ever built. Rotations follow `R_P(θ) = exp(−iθP/2)`, which makes the
//! two-term parameter-shift rule (shift `π/2`, factor `1/2`) exact for single
//! qubit rotations. Wire 0 is the most significant bit of a basis index.

mod gate;
mod state;

pub use gate::{Gate, GateKind, Observable};
pub use state::{StateVector, MAX_QUBITS};

use crate::error::{Error, Result};
use crate::qfilter::CircuitSpec;

/// Prepares `E(x)|0⟩`: optional Hadamards, then one `RY(input_i)` per
/// encoder slot.
pub fn encode(spec: &CircuitSpec, inputs: &[f64]) -> Result<StateVector> {
    if inputs.len() != spec.encoder().len() {
        return Err(Error::Circuit(format!(
            "circuit has {} encoder slots but {} inputs were given",
            spec.encoder().len(),
            inputs.len()
        )));
    }
    let mut state = StateVector::zero(spec.n_qubits())?;
    if spec.hadamard_encoder() {
        for &wire in spec.encoder() {
            state.hadamard(wire);
        }
    }
    for (&wire, &angle) in spec.encoder().iter().zip(inputs) {
        state.ry(wire, angle);
    }
    Ok(state)
}

/// Runs the encoder with `inputs` and then every layer gate with `params`,
/// in spec order.
pub fn run_circuit(spec: &CircuitSpec, params: &[f64], inputs: &[f64]) -> Result<StateVector> {
    if params.len() != spec.n_params() {
        return Err(Error::Circuit(format!(
            "circuit has {} parameters but {} were given",
            spec.n_params(),
            params.len()
        )));
    }
    let mut state = encode(spec, inputs)?;
    for gate in spec.gates() {
        let angle = gate.slot().map_or(0.0, |k| params[k]);
        state.apply_with_angle(gate, angle);
    }
    Ok(state)
}
