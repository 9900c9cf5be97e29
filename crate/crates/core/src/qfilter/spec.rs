use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qsim::{Gate, GateKind, MAX_QUBITS};

pub const SPEC_VERSION: u32 = 1;
const MAGIC: &str = "qdcnn-circuit";

/// A seed-reproducible filter circuit: RY encoder slots followed by ordered
/// layers of gates, each parametric gate bound to its own parameter slot.
///
/// Text form, one gate per line after a header:
///
/// ```text
/// qdcnn-circuit 1
/// seed 42
/// n_qubits 4
/// n_params 8
/// n_layers 2
/// entanglers 3
/// encoder_hadamard false
/// encoder
/// RY 0 input=0
/// ...
/// layer 0
/// CNOT 2 0
/// RX 1 slot=0
/// ...
/// end
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    version: u32,
    seed: u64,
    n_qubits: usize,
    encoder: Vec<usize>,
    hadamard_encoder: bool,
    layers: Vec<Vec<Gate>>,
    n_params: usize,
}

impl CircuitSpec {
    /// `encoder[i]` is the wire that receives input `i`.
    pub fn new(
        seed: u64,
        n_qubits: usize,
        encoder: Vec<usize>,
        hadamard_encoder: bool,
        layers: Vec<Vec<Gate>>,
    ) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut seen = vec![false; n_qubits];
        for &w in &encoder {
            if w >= n_qubits {
                return Err(Error::Circuit(format!(
                    "encoder wire {w} out of range for {n_qubits} qubits"
                )));
            }
            if std::mem::replace(&mut seen[w], true) {
                return Err(Error::Circuit(format!("encoder uses wire {w} twice")));
            }
        }
        let mut slots = Vec::new();
        for gate in layers.iter().flatten() {
            gate.check_wires(n_qubits)?;
            slots.extend(gate.slot());
        }
        let n_params = slots.len();
        let mut used = vec![false; n_params];
        for k in slots {
            if k >= n_params || std::mem::replace(&mut used[k], true) {
                return Err(Error::Circuit(format!(
                    "parameter slots must be exactly 0..{n_params}, each used once (bad slot {k})"
                )));
            }
        }
        Ok(CircuitSpec {
            version: SPEC_VERSION,
            seed,
            n_qubits,
            encoder,
            hadamard_encoder,
            layers,
            n_params,
        })
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn encoder(&self) -> &[usize] {
        &self.encoder
    }

    pub fn hadamard_encoder(&self) -> bool {
        self.hadamard_encoder
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Layer gates in application order.
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn entangler_count(&self) -> usize {
        self.gates().filter(|g| g.kind().is_entangler()).count()
    }

    /// The parametric gate bound to each slot, indexed by slot.
    pub fn slot_kinds(&self) -> Vec<GateKind> {
        let mut kinds = vec![GateKind::RY; self.n_params];
        for g in self.gates() {
            if let Some(k) = g.slot() {
                kinds[k] = g.kind();
            }
        }
        kinds
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {}", self.version);
        let _ = writeln!(out, "seed {}", self.seed);
        let _ = writeln!(out, "n_qubits {}", self.n_qubits);
        let _ = writeln!(out, "n_params {}", self.n_params);
        let _ = writeln!(out, "n_layers {}", self.layers.len());
        let _ = writeln!(out, "entanglers {}", self.entangler_count());
        let _ = writeln!(out, "encoder_hadamard {}", self.hadamard_encoder);
        out.push_str("encoder\n");
        for (i, w) in self.encoder.iter().enumerate() {
            let _ = writeln!(out, "RY {w} input={i}");
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "layer {l}");
            for g in layer {
                out.push_str(g.kind().name());
                for w in g.wires() {
                    let _ = write!(out, " {w}");
                }
                if let Some(k) = g.slot() {
                    let _ = write!(out, " slot={k}");
                }
                out.push('\n');
            }
        }
        out.push_str("end\n");
        out
    }

    /// Hex SHA-256 of the text form; identifies the architecture.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        text.parse()
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next_content(&mut self) -> Option<&'a str> {
        for (i, raw) in self.inner.by_ref() {
            let l = raw.trim();
            if l.is_empty() || l.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            return Some(l);
        }
        None
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::SpecParse {
            line: self.line,
            message: message.into(),
        }
    }

    fn header<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let l = self
            .next_content()
            .ok_or_else(|| self.err(format!("missing `{key}`")))?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => v
                .trim()
                .parse()
                .map_err(|_| self.err(format!("bad value for `{key}`: {v}"))),
            _ => Err(self.err(format!("expected `{key} <value>`, got `{l}`"))),
        }
    }
}

fn parse_tagged(token: &str, tag: &str) -> Option<usize> {
    token.strip_prefix(tag)?.strip_prefix('=')?.parse().ok()
}

impl FromStr for CircuitSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            line: 0,
        };
        let version: u32 = lines.header(MAGIC)?;
        if version != SPEC_VERSION {
            return Err(lines.err(format!("unsupported spec version {version}")));
        }
        let seed: u64 = lines.header("seed")?;
        let n_qubits: usize = lines.header("n_qubits")?;
        let n_params: usize = lines.header("n_params")?;
        let n_layers: usize = lines.header("n_layers")?;
        let entanglers: usize = lines.header("entanglers")?;
        let hadamard_encoder: bool = lines.header("encoder_hadamard")?;
        if lines.next_content() != Some("encoder") {
            return Err(lines.err("expected `encoder`"));
        }

        let mut encoder = Vec::new();
        let mut layers: Vec<Vec<Gate>> = Vec::new();
        let mut finished = false;
        while let Some(l) = lines.next_content() {
            if l == "end" {
                finished = true;
                break;
            }
            if let Some(idx) = l.strip_prefix("layer ") {
                let idx: usize = idx
                    .trim()
                    .parse()
                    .map_err(|_| lines.err(format!("bad layer index `{idx}`")))?;
                if idx != layers.len() {
                    return Err(lines.err(format!("expected layer {}, got {idx}", layers.len())));
                }
                layers.push(Vec::new());
                continue;
            }
            let mut tokens = l.split_whitespace();
            let kind: GateKind = tokens
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e: Error| lines.err(e.to_string()))?;
            let rest: Vec<&str> = tokens.collect();
            match layers.last_mut() {
                None => {
                    let [wire, input] = rest[..] else {
                        return Err(lines.err("encoder lines read `RY <wire> input=<i>`"));
                    };
                    let wire: usize = wire.parse().map_err(|_| lines.err("bad wire"))?;
                    if kind != GateKind::RY || parse_tagged(input, "input") != Some(encoder.len()) {
                        return Err(lines.err(format!(
                            "encoder line must be `RY <wire> input={}`",
                            encoder.len()
                        )));
                    }
                    encoder.push(wire);
                }
                Some(layer) => {
                    let mut wires = Vec::new();
                    let mut slot = None;
                    for t in rest {
                        if let Some(k) = parse_tagged(t, "slot") {
                            slot = Some(k);
                        } else {
                            wires.push(
                                t.parse::<usize>()
                                    .map_err(|_| lines.err(format!("bad token `{t}`")))?,
                            );
                        }
                    }
                    let gate =
                        Gate::new(kind, &wires, slot).map_err(|e| lines.err(e.to_string()))?;
                    layer.push(gate);
                }
            }
        }
        if !finished {
            return Err(lines.err("missing `end`"));
        }

        let spec = CircuitSpec::new(seed, n_qubits, encoder, hadamard_encoder, layers)?;
        if spec.n_params != n_params
            || spec.layers.len() != n_layers
            || spec.entangler_count() != entanglers
        {
            return Err(Error::SpecParse {
                line: 0,
                message: "header counts disagree with the gate list".into(),
            });
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CircuitSpec {
        CircuitSpec::new(
            9,
            3,
            vec![0, 1, 2],
            true,
            vec![
                vec![
                    Gate::cnot(2, 0).unwrap(),
                    Gate::rotation(GateKind::RX, 1, 1).unwrap(),
                ],
                vec![
                    Gate::crz(0, 1, 0).unwrap(),
                    Gate::h(2),
                    Gate::rotation(GateKind::RZ, 0, 2).unwrap(),
                ],
            ],
        )
        .unwrap()
    }

    #[test]
    fn text_round_trip() {
        let spec = sample();
        let text = spec.to_text();
        let back: CircuitSpec = text.parse().unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_text(), text);
        assert_eq!(spec.entangler_count(), 2);
        assert_eq!(spec.n_params(), 3);
    }

    #[test]
    fn slots_must_be_dense() {
        let err = CircuitSpec::new(
            0,
            2,
            vec![0, 1],
            false,
            vec![vec![Gate::rotation(GateKind::RY, 0, 1).unwrap()]],
        );
        assert!(matches!(err, Err(Error::Circuit(_))));
        let dup = CircuitSpec::new(
            0,
            2,
            vec![0, 1],
            false,
            vec![vec![
                Gate::rotation(GateKind::RY, 0, 0).unwrap(),
                Gate::rotation(GateKind::RY, 1, 0).unwrap(),
            ]],
        );
        assert!(matches!(dup, Err(Error::Circuit(_))));
    }

    #[test]
    fn encoder_wires_are_checked() {
        assert!(CircuitSpec::new(0, 2, vec![0, 0], false, vec![]).is_err());
        assert!(CircuitSpec::new(0, 2, vec![0, 2], false, vec![]).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = sample().to_text().replace("CNOT 2 0", "CNOT 2 2");
        match text.parse::<CircuitSpec>() {
            Err(Error::SpecParse { line, .. }) => assert_eq!(line, 13),
            other => panic!("unexpected {other:?}"),
        }
        let text = sample().to_text().replace("n_params 3", "n_params 4");
        assert!(text.parse::<CircuitSpec>().is_err());
        let text = sample().to_text().replace("end\n", "");
        assert!(text.parse::<CircuitSpec>().is_err());
        assert!("qdcnn-circuit 2\n".parse::<CircuitSpec>().is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = format!("# golden\n\n{}", sample().to_text());
        assert_eq!(text.parse::<CircuitSpec>().unwrap(), sample());
    }
}
