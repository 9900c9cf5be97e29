//! Seeded random layer generation.
//!
//! The procedure is pinned so the same seed produces the same architecture
//! everywhere:
//!
//! - the stream is `ChaCha8Rng::seed_from_u64(seed)` read through `next_u64`;
//! - an integer in `0..n` is `(x · n) >> 64` of one 64-bit draw `x`;
//! - a unit float is `(x >> 11) · 2⁻⁵³`;
//! - for every layer and every parameter index within it: with probability
//!   0.3 emit an entangler on an ordered pair of distinct wires (control
//!   uniform, target uniform over the remaining wires), then emit a rotation
//!   with axis uniform over `RX, RY, RZ` on a uniform wire, bound to the next
//!   parameter slot.
//!
//! With the CRZ entangler the entangler also takes a slot, so `n_params`
//! exceeds `n_layers · params_per_layer` by the number of entanglers drawn.

use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::CircuitSpec;
use crate::error::{Error, Result};
use crate::qsim::{Gate, GateKind};

pub const ENTANGLER_PROBABILITY: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Entangler {
    #[default]
    Cnot,
    Crz,
}

impl FromStr for Entangler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnot" => Ok(Entangler::Cnot),
            "crz" => Ok(Entangler::Crz),
            other => Err(Error::Config(format!(
                "unknown entangler `{other}` (expected cnot or crz)"
            ))),
        }
    }
}

impl std::fmt::Display for Entangler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Entangler::Cnot => "cnot",
            Entangler::Crz => "crz",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub params_per_layer: usize,
    pub entangler: Entangler,
    pub hadamard_encoder: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_qubits: 4,
            n_layers: 2,
            params_per_layer: 4,
            entangler: Entangler::Cnot,
            hadamard_encoder: false,
        }
    }
}

struct PinnedStream(ChaCha8Rng);

impl PinnedStream {
    fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Random layers with the default CNOT entangler and an RY-only encoder.
pub fn generate_random_spec(
    seed: u64,
    n_qubits: usize,
    n_layers: usize,
    params_per_layer: usize,
) -> Result<CircuitSpec> {
    generate_spec(
        seed,
        &GeneratorConfig {
            n_qubits,
            n_layers,
            params_per_layer,
            ..GeneratorConfig::default()
        },
    )
}

pub fn generate_spec(seed: u64, cfg: &GeneratorConfig) -> Result<CircuitSpec> {
    let n = cfg.n_qubits;
    if n < 2 {
        return Err(Error::Config(format!(
            "random layers need at least 2 qubits, got {n}"
        )));
    }
    let mut rng = PinnedStream(ChaCha8Rng::seed_from_u64(seed));
    let mut slot = 0;
    let mut layers = Vec::with_capacity(cfg.n_layers);
    for _ in 0..cfg.n_layers {
        let mut layer = Vec::new();
        for _ in 0..cfg.params_per_layer {
            if rng.unit() < ENTANGLER_PROBABILITY {
                let control = rng.below(n);
                let mut target = rng.below(n - 1);
                if target >= control {
                    target += 1;
                }
                layer.push(match cfg.entangler {
                    Entangler::Cnot => Gate::cnot(control, target)?,
                    Entangler::Crz => {
                        slot += 1;
                        Gate::crz(control, target, slot - 1)?
                    }
                });
            }
            let axis = [GateKind::RX, GateKind::RY, GateKind::RZ][rng.below(3)];
            let wire = rng.below(n);
            layer.push(Gate::rotation(axis, wire, slot)?);
            slot += 1;
        }
        layers.push(layer);
    }
    CircuitSpec::new(seed, n, (0..n).collect(), cfg.hadamard_encoder, layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_give_eight_parameters() {
        let spec = generate_random_spec(42, 4, 2, 4).unwrap();
        assert_eq!(spec.n_params(), 8);
        assert_eq!(spec.layers().len(), 2);
        assert_eq!(spec.encoder(), &[0, 1, 2, 3]);
        assert!(spec.gates().all(|g| g.kind() != GateKind::CRZ));
    }

    #[test]
    fn same_seed_same_text() {
        let a = generate_random_spec(5, 4, 2, 4).unwrap().to_text();
        let b = generate_random_spec(5, 4, 2, 4).unwrap().to_text();
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn seeds_differ() {
        let a = generate_random_spec(1, 4, 2, 4).unwrap();
        let b = generate_random_spec(2, 4, 2, 4).unwrap();
        assert_ne!(a.layers(), b.layers());
    }

    #[test]
    fn crz_entangler_takes_slots() {
        let cfg = GeneratorConfig {
            entangler: Entangler::Crz,
            n_layers: 4,
            ..GeneratorConfig::default()
        };
        // scan seeds until the draw includes at least one entangler
        let spec = (0..50)
            .map(|s| generate_spec(s, &cfg).unwrap())
            .find(|s| s.entangler_count() > 0)
            .unwrap();
        assert_eq!(spec.n_params(), 16 + spec.entangler_count());
        assert!(spec.gates().any(|g| g.kind() == GateKind::CRZ));
    }

    #[test]
    fn rejects_single_qubit() {
        assert!(matches!(
            generate_random_spec(0, 1, 2, 4),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn entangler_names() {
        assert_eq!("CNOT".parse::<Entangler>().unwrap(), Entangler::Cnot);
        assert_eq!("crz".parse::<Entangler>().unwrap(), Entangler::Crz);
        assert!("swap".parse::<Entangler>().is_err());
    }
}
