use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Gate families understood by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    CNOT,
    CRZ,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::CNOT | GateKind::CRZ => 2,
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRZ
        )
    }

    pub fn is_entangler(self) -> bool {
        self.arity() == 2
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CNOT => "CNOT",
            GateKind::CRZ => "CRZ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(GateKind::H),
            "RX" => Ok(GateKind::RX),
            "RY" => Ok(GateKind::RY),
            "RZ" => Ok(GateKind::RZ),
            "CNOT" => Ok(GateKind::CNOT),
            "CRZ" => Ok(GateKind::CRZ),
            other => Err(Error::Circuit(format!("unknown gate kind `{other}`"))),
        }
    }
}

/// A gate placed on one or two wires, optionally bound to a slot of a
/// parameter vector.
///
/// For two-qubit gates `wires()[0]` is the control and `wires()[1]` the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Gate {
    kind: GateKind,
    wires: [usize; 2],
    slot: Option<usize>,
}

impl Gate {
    /// Builds a gate, checking arity and the slot/parametric pairing. Wire
    /// bounds are checked against a register later, see [`Gate::check_wires`].
    pub fn new(kind: GateKind, wires: &[usize], slot: Option<usize>) -> Result<Self> {
        if wires.len() != kind.arity() {
            return Err(Error::Circuit(format!(
                "{kind} takes {} wire(s), got {}",
                kind.arity(),
                wires.len()
            )));
        }
        if kind.is_parametric() != slot.is_some() {
            return Err(Error::Circuit(if slot.is_some() {
                format!("{kind} carries no parameter slot")
            } else {
                format!("{kind} needs a parameter slot")
            }));
        }
        if wires.len() == 2 && wires[0] == wires[1] {
            return Err(Error::Circuit(format!(
                "{kind} control and target must differ (both {})",
                wires[0]
            )));
        }
        let mut w = [0; 2];
        w[..wires.len()].copy_from_slice(wires);
        Ok(Gate {
            kind,
            wires: w,
            slot,
        })
    }

    pub fn h(wire: usize) -> Self {
        Gate {
            kind: GateKind::H,
            wires: [wire, 0],
            slot: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Result<Self> {
        Gate::new(GateKind::CNOT, &[control, target], None)
    }

    pub fn crz(control: usize, target: usize, slot: usize) -> Result<Self> {
        Gate::new(GateKind::CRZ, &[control, target], Some(slot))
    }

    /// A single-qubit rotation bound to `slot`.
    pub fn rotation(kind: GateKind, wire: usize, slot: usize) -> Result<Self> {
        if kind.arity() != 1 || !kind.is_parametric() {
            return Err(Error::Circuit(format!("{kind} is not a single-qubit rotation")));
        }
        Gate::new(kind, &[wire], Some(slot))
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn wires(&self) -> &[usize] {
        &self.wires[..self.kind.arity()]
    }

    pub fn slot(&self) -> Option<usize> {
        self.slot
    }

    pub fn check_wires(&self, n_qubits: usize) -> Result<()> {
        match self.wires().iter().find(|&&w| w >= n_qubits) {
            Some(w) => Err(Error::Circuit(format!(
                "{} acts on wire {w} but the register has {n_qubits} qubits",
                self.kind
            ))),
            None => Ok(()),
        }
    }
}

/// Single-wire Pauli-Z observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observable {
    wire: usize,
}

impl Observable {
    pub fn pauli_z(wire: usize, n_qubits: usize) -> Result<Self> {
        if wire >= n_qubits {
            return Err(Error::Circuit(format!(
                "observable wire {wire} out of range for {n_qubits} qubits"
            )));
        }
        Ok(Observable { wire })
    }

    pub fn wire(&self) -> usize {
        self.wire
    }
}
