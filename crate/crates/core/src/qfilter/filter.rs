use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::spec::CircuitSpec;
use crate::error::{Error, Result};
use crate::qsim::{self, Gate, GateKind, StateVector};

/// Maps pixels in `[0, 1]` to RY angles `π · x`, keeping row-major order.
pub fn encode_angles(patch: &[f64]) -> Result<Vec<f64>> {
    patch
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if (0.0..=1.0).contains(&x) {
                Ok(PI * x)
            } else {
                Err(Error::Data(format!(
                    "pixel {i} = {x} is outside [0, 1]; normalise before encoding"
                )))
            }
        })
        .collect()
}

/// `⟨Z⟩` of every qubit for one patch; each value lands in its own channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutput {
    values: Vec<f64>,
}

impl ChannelOutput {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Derivatives of every channel with respect to every filter parameter,
/// stored channel-major: `get(c, k) = ∂ channel_c / ∂ θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    n_channels: usize,
    n_params: usize,
    data: Vec<f64>,
}

impl Jacobian {
    pub fn zeros(n_channels: usize, n_params: usize) -> Self {
        Jacobian {
            n_channels,
            n_params,
            data: vec![0.0; n_channels * n_params],
        }
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn get(&self, channel: usize, param: usize) -> f64 {
        self.data[channel * self.n_params + param]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn add(&mut self, param: usize, coef: f64, values: &[f64]) {
        for (c, v) in values.iter().enumerate() {
            self.data[c * self.n_params + param] += coef * v;
        }
    }
}

/// A circuit together with its angles and whether training may move them.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumFilter {
    spec: CircuitSpec,
    theta: Vec<f64>,
    trainable: bool,
    ops: Vec<Gate>,
    slot_op: Vec<usize>,
}

impl QuantumFilter {
    pub fn new(spec: CircuitSpec, theta: Vec<f64>, trainable: bool) -> Result<Self> {
        if theta.len() != spec.n_params() {
            return Err(Error::Config(format!(
                "filter has {} parameters but theta has {} entries",
                spec.n_params(),
                theta.len()
            )));
        }
        let ops: Vec<Gate> = spec.gates().copied().collect();
        let mut slot_op = vec![0; spec.n_params()];
        for (i, g) in ops.iter().enumerate() {
            if let Some(k) = g.slot() {
                slot_op[k] = i;
            }
        }
        Ok(QuantumFilter {
            spec,
            theta,
            trainable,
            ops,
            slot_op,
        })
    }

    /// Angles drawn i.i.d. uniform in `[0, 2π)` from `seed`.
    pub fn with_random_theta(spec: CircuitSpec, seed: u64, trainable: bool) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = (0..spec.n_params())
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        QuantumFilter::new(spec, theta, trainable)
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn set_theta(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::Model(format!(
                "expected {} angles, got {}",
                self.theta.len(),
                theta.len()
            )));
        }
        self.theta.copy_from_slice(theta);
        Ok(())
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn n_channels(&self) -> usize {
        self.spec.n_qubits()
    }

    pub fn patch_len(&self) -> usize {
        self.spec.encoder().len()
    }

    fn require_trainable(&self) -> Result<()> {
        if self.trainable {
            Ok(())
        } else {
            Err(Error::Usage(
                "gradients requested for a non-trainable filter".into(),
            ))
        }
    }
}

/// How `⟨Z⟩` is read out of a simulated state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Exact expectation from the amplitudes.
    #[default]
    Analytic,
    /// Mean of `shots` sampled measurements. The sampler is seeded from
    /// `seed` and the circuit's inputs and angles, so results stay
    /// reproducible under any evaluation order.
    Shots { shots: u32, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GradMethod {
    /// Exact shift rule: two shifted circuits per rotation, four per CRZ.
    #[default]
    ParameterShift,
    /// Central differences `(f(θ+h) − f(θ−h)) / 2h`.
    FiniteDifference { step: f64 },
}

/// Shifted circuits needed to differentiate one parameter of `kind`.
fn shift_terms(kind: GateKind, method: GradMethod) -> &'static [(f64, f64)] {
    const TWO_TERM: [(f64, f64); 2] = [(FRAC_PI_2, 0.5), (-FRAC_PI_2, -0.5)];
    // c± = (√2 ± 1) / (4√2)
    const C_PLUS: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
    const C_MINUS: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);
    const FOUR_TERM: [(f64, f64); 4] = [
        (FRAC_PI_2, C_PLUS),
        (-FRAC_PI_2, -C_PLUS),
        (3.0 * FRAC_PI_2, -C_MINUS),
        (-3.0 * FRAC_PI_2, C_MINUS),
    ];
    match (method, kind) {
        (GradMethod::FiniteDifference { .. }, _) => &[(1.0, 1.0), (-1.0, -1.0)],
        (GradMethod::ParameterShift, GateKind::CRZ) => &FOUR_TERM,
        (GradMethod::ParameterShift, _) => &TWO_TERM,
    }
}

/// Circuit executions spent on one full Jacobian of `spec`. With only
/// single-qubit rotations this is `2p`.
pub fn gradient_cost(spec: &CircuitSpec, method: GradMethod) -> u64 {
    spec.slot_kinds()
        .into_iter()
        .map(|k| shift_terms(k, method).len() as u64)
        .sum()
}

/// Thread-safe running total of circuit executions.
#[derive(Debug, Default)]
pub struct ExecutionCounter(AtomicU64);

impl ExecutionCounter {
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn reset(&self) -> u64 {
        self.0.swap(0, Ordering::Relaxed)
    }
}

fn mix64(h: u64, x: u64) -> u64 {
    // splitmix64 finaliser over a running xor
    let mut z = (h ^ x).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Evaluates filters and counts every circuit it runs.
///
/// Shares freely across threads; the counter is atomic and evaluation is
/// otherwise pure.
#[derive(Debug, Default)]
pub struct Executor {
    readout: Readout,
    counter: ExecutionCounter,
}

impl Executor {
    pub fn new(readout: Readout) -> Self {
        Executor {
            readout,
            counter: ExecutionCounter::default(),
        }
    }

    pub fn analytic() -> Self {
        Executor::new(Readout::Analytic)
    }

    pub fn readout(&self) -> Readout {
        self.readout
    }

    pub fn counter(&self) -> &ExecutionCounter {
        &self.counter
    }

    pub fn executions(&self) -> u64 {
        self.counter.get()
    }

    fn read(&self, state: &StateVector, angles: &[f64], theta: &[f64], shifted: Option<(usize, f64)>) -> Vec<f64> {
        match self.readout {
            Readout::Analytic => state.expval_z_all(),
            Readout::Shots { shots, seed } => {
                let mut h = mix64(seed, shots as u64);
                for v in angles.iter().chain(theta) {
                    h = mix64(h, v.to_bits());
                }
                if let Some((k, shift)) = shifted {
                    h = mix64(mix64(h, k as u64), shift.to_bits());
                }
                state.sample_z_all(shots, &mut ChaCha8Rng::seed_from_u64(h))
            }
        }
    }

    fn prepare(&self, filter: &QuantumFilter, patch: &[f64]) -> Result<(Vec<f64>, StateVector)> {
        if patch.len() != filter.patch_len() {
            return Err(Error::Data(format!(
                "patch has {} pixels but the filter encodes {}",
                patch.len(),
                filter.patch_len()
            )));
        }
        let angles = encode_angles(patch)?;
        let state = qsim::encode(&filter.spec, &angles)?;
        Ok((angles, state))
    }

    /// Encode, evolve, and read `⟨Z⟩` on every qubit. One execution.
    pub fn apply_filter(&self, filter: &QuantumFilter, patch: &[f64]) -> Result<ChannelOutput> {
        let (angles, mut state) = self.prepare(filter, patch)?;
        for op in &filter.ops {
            state.apply_with_angle(op, op.slot().map_or(0.0, |k| filter.theta[k]));
        }
        self.counter.add(1);
        Ok(ChannelOutput {
            values: self.read(&state, &angles, &filter.theta, None),
        })
    }

    /// Parameter-shift Jacobian. Costs [`gradient_cost`] executions (`2p`
    /// for rotation-only circuits).
    pub fn param_shift_grad(&self, filter: &QuantumFilter, patch: &[f64]) -> Result<Jacobian> {
        filter.require_trainable()?;
        Ok(self.jacobian(filter, patch, GradMethod::ParameterShift, false)?.1)
    }

    /// Central finite-difference Jacobian with step `h`. Costs `2p` executions.
    pub fn finite_diff_grad(&self, filter: &QuantumFilter, patch: &[f64], h: f64) -> Result<Jacobian> {
        filter.require_trainable()?;
        Ok(self
            .jacobian(filter, patch, GradMethod::FiniteDifference { step: h }, false)?
            .1)
    }

    /// Channel values plus their Jacobian: `1 + gradient_cost` executions.
    pub fn forward_with_jacobian(
        &self,
        filter: &QuantumFilter,
        patch: &[f64],
        method: GradMethod,
    ) -> Result<(ChannelOutput, Jacobian)> {
        filter.require_trainable()?;
        let (fwd, jac) = self.jacobian(filter, patch, method, true)?;
        Ok((fwd.expect("forward requested"), jac))
    }

    fn jacobian(
        &self,
        filter: &QuantumFilter,
        patch: &[f64],
        method: GradMethod,
        with_forward: bool,
    ) -> Result<(Option<ChannelOutput>, Jacobian)> {
        let (angles, mut state) = self.prepare(filter, patch)?;
        let theta = &filter.theta;
        let ops = &filter.ops;

        // The state just before each parametric gate. A shifted circuit
        // shares every gate before its shifted one, so it resumes from there.
        let mut before = vec![state.clone(); theta.len()];
        for op in ops {
            if let Some(k) = op.slot() {
                before[k].copy_from(&state);
            }
            state.apply_with_angle(op, op.slot().map_or(0.0, |k| theta[k]));
        }
        let forward = with_forward.then(|| {
            self.counter.add(1);
            ChannelOutput {
                values: self.read(&state, &angles, theta, None),
            }
        });

        let mut jac = Jacobian::zeros(filter.n_channels(), theta.len());
        let mut scratch = state;
        let mut executed = 0;
        for (k, &op_idx) in filter.slot_op.iter().enumerate() {
            let op = &ops[op_idx];
            let (unit, norm) = match method {
                GradMethod::ParameterShift => (1.0, 1.0),
                GradMethod::FiniteDifference { step } => (step, 1.0 / (2.0 * step)),
            };
            for &(shift, coef) in shift_terms(op.kind(), method) {
                scratch.copy_from(&before[k]);
                scratch.apply_with_angle(op, theta[k] + shift * unit);
                for rest in &ops[op_idx + 1..] {
                    scratch.apply_with_angle(rest, rest.slot().map_or(0.0, |j| theta[j]));
                }
                let vals = self.read(&scratch, &angles, theta, Some((k, shift * unit)));
                jac.add(k, coef * norm, &vals);
                executed += 1;
            }
        }
        self.counter.add(executed);
        Ok((forward, jac))
    }
}
