//! The quantum filter: RY angle encoding of a pixel patch, seeded random
//! parameterized layers, and a Pauli-Z readout on every qubit that yields
//! one output channel per qubit.

mod filter;
mod generate;
mod spec;

pub use filter::{
    encode_angles, gradient_cost, ChannelOutput, ExecutionCounter, Executor, GradMethod,
    Jacobian, QuantumFilter, Readout,
};
pub use generate::{
    generate_random_spec, generate_spec, Entangler, GeneratorConfig, ENTANGLER_PROBABILITY,
};
pub use spec::{CircuitSpec, SPEC_VERSION};
