use num_complex::Complex64;
use rand::Rng;

use super::gate::{Gate, GateKind, Observable};
use crate::error::{Error, Result};

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Pure state of an `n`-qubit register as `2^n` complex amplitudes.
///
/// Wire 0 is the most significant bit of the basis-state index, so on two
/// qubits `|10⟩` is index 2 and means wire 0 is set.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// The vacuum state `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(Error::Config(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = StateVector::zero(n_qubits)?;
        if index >= s.amps.len() {
            return Err(Error::Config(format!(
                "basis index {index} out of range for {n_qubits} qubits"
            )));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Wraps raw amplitudes. The length must be a power of two; the
    /// normalisation is the caller's responsibility.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() || len > 1 << MAX_QUBITS {
            return Err(Error::Config(format!(
                "amplitude count {len} is not 2^n for 1 <= n <= {MAX_QUBITS}"
            )));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Overwrites `self` with `other`'s amplitudes without reallocating.
    pub fn copy_from(&mut self, other: &StateVector) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps.copy_from_slice(&other.amps);
    }

    #[inline]
    fn mask(&self, wire: usize) -> usize {
        1 << (self.n_qubits - 1 - wire)
    }

    /// Applies `gate`, reading its angle (if any) from `params`.
    pub fn apply(&mut self, gate: &Gate, params: &[f64]) -> Result<()> {
        gate.check_wires(self.n_qubits)?;
        let angle = match gate.slot() {
            Some(slot) => *params.get(slot).ok_or_else(|| {
                Error::Circuit(format!(
                    "parameter slot {slot} out of range ({} parameters)",
                    params.len()
                ))
            })?,
            None => 0.0,
        };
        self.apply_with_angle(gate, angle);
        Ok(())
    }

    /// Applies `gate` with an explicit angle. Wires must already be valid
    /// for this register; the angle is ignored for `H` and `CNOT`.
    pub fn apply_with_angle(&mut self, gate: &Gate, angle: f64) {
        let w = gate.wires();
        match gate.kind() {
            GateKind::H => self.hadamard(w[0]),
            GateKind::RX => self.rx(w[0], angle),
            GateKind::RY => self.ry(w[0], angle),
            GateKind::RZ => self.rz(w[0], angle),
            GateKind::CNOT => self.cnot(w[0], w[1]),
            GateKind::CRZ => self.crz(w[0], w[1], angle),
        }
    }

    /// Visits every index pair `(i0, i1)` differing only in `mask`'s bit.
    #[inline]
    fn for_pairs(&mut self, mask: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let dim = self.amps.len();
        let mut hi = 0;
        while hi < dim {
            let (lo_half, hi_half) = self.amps[hi..hi + 2 * mask].split_at_mut(mask);
            for (a0, a1) in lo_half.iter_mut().zip(hi_half.iter_mut()) {
                f(a0, a1);
            }
            hi += 2 * mask;
        }
    }

    pub fn hadamard(&mut self, wire: usize) {
        let m = self.mask(wire);
        let k = std::f64::consts::FRAC_1_SQRT_2;
        self.for_pairs(m, |a0, a1| {
            let (x0, x1) = (*a0, *a1);
            *a0 = (x0 + x1) * k;
            *a1 = (x0 - x1) * k;
        });
    }

    /// `RY(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`.
    pub fn ry(&mut self, wire: usize, theta: f64) {
        let m = self.mask(wire);
        let (s, c) = (theta * 0.5).sin_cos();
        self.for_pairs(m, |a0, a1| {
            let (x0, x1) = (*a0, *a1);
            *a0 = x0 * c - x1 * s;
            *a1 = x0 * s + x1 * c;
        });
    }

    /// `RX(θ) = [[cos θ/2, −i sin θ/2], [−i sin θ/2, cos θ/2]]`.
    pub fn rx(&mut self, wire: usize, theta: f64) {
        let m = self.mask(wire);
        let (s, c) = (theta * 0.5).sin_cos();
        let mis = Complex64::new(0.0, -s);
        self.for_pairs(m, |a0, a1| {
            let (x0, x1) = (*a0, *a1);
            *a0 = x0 * c + x1 * mis;
            *a1 = x0 * mis + x1 * c;
        });
    }

    /// `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
    pub fn rz(&mut self, wire: usize, theta: f64) {
        let m = self.mask(wire);
        let (s, c) = (theta * 0.5).sin_cos();
        let p0 = Complex64::new(c, -s);
        let p1 = Complex64::new(c, s);
        self.for_pairs(m, |a0, a1| {
            *a0 *= p0;
            *a1 *= p1;
        });
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    /// `RZ(θ)` on `target` when `control` is set.
    pub fn crz(&mut self, control: usize, target: usize, theta: f64) {
        let cm = self.mask(control);
        let tm = self.mask(target);
        let (s, c) = (theta * 0.5).sin_cos();
        let p0 = Complex64::new(c, -s);
        let p1 = Complex64::new(c, s);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & cm != 0 {
                *a *= if i & tm == 0 { p0 } else { p1 };
            }
        }
    }

    /// `⟨Z⟩` on `wire`, computed from the amplitudes.
    pub fn expval_z(&self, wire: usize) -> Result<f64> {
        let obs = Observable::pauli_z(wire, self.n_qubits)?;
        Ok(self.expectation(&obs))
    }

    pub fn expectation(&self, obs: &Observable) -> f64 {
        let m = self.mask(obs.wire());
        let v: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & m == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        v.clamp(-1.0, 1.0)
    }

    /// `⟨Z⟩` on every wire in one pass over the amplitudes.
    pub fn expval_z_all(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut out = vec![0.0; n];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (w, o) in out.iter_mut().enumerate() {
                if i >> (n - 1 - w) & 1 == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        for o in &mut out {
            *o = o.clamp(-1.0, 1.0);
        }
        out
    }

    /// Estimates `⟨Z⟩` on every wire from `shots` computational-basis samples.
    pub fn sample_z_all<R: Rng + ?Sized>(&self, shots: u32, rng: &mut R) -> Vec<f64> {
        let n = self.n_qubits;
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut sums = vec![0i64; n];
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            for (w, s) in sums.iter_mut().enumerate() {
                *s += if idx >> (n - 1 - w) & 1 == 0 { 1 } else { -1 };
            }
        }
        sums.into_iter()
            .map(|s| if shots == 0 { 0.0 } else { s as f64 / shots as f64 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: &StateVector, b: &[Complex64], tol: f64) {
        assert_eq!(a.amplitudes().len(), b.len());
        for (x, y) in a.amplitudes().iter().zip(b) {
            assert!((x - y).norm() <= tol, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_state() {
        assert_close(&StateVector::zero(1).unwrap(), &[c(1., 0.), c(0., 0.)], 0.0);
        assert_close(
            &StateVector::zero(2).unwrap(),
            &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)],
            0.0,
        );
        let s = StateVector::zero(4).unwrap();
        assert_eq!(s.amplitudes().len(), 16);
        assert_eq!(s.amplitudes()[0], c(1., 0.));
        assert!(s.amplitudes()[1..].iter().all(|a| *a == c(0., 0.)));
    }

    #[test]
    fn register_size_limits() {
        assert!(matches!(StateVector::zero(0), Err(Error::Config(_))));
        assert!(matches!(StateVector::zero(25), Err(Error::Config(_))));
        assert!(StateVector::zero(MAX_QUBITS).is_ok());
    }

    #[test]
    fn ry_pi_flips() {
        let mut s = StateVector::zero(1).unwrap();
        s.ry(0, PI);
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hadamard_superposition() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&Gate::h(0), &[]).unwrap();
        assert_close(&s, &[c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)], 1e-15);
    }

    #[test]
    fn cnot_truth_table_pins_wire_order() {
        // |10⟩: wire 0 set, index 0b10
        let mut s = StateVector::basis(2, 0b10).unwrap();
        s.apply(&Gate::cnot(0, 1).unwrap(), &[]).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b11).unwrap());

        let mut s = StateVector::basis(2, 0b01).unwrap();
        s.apply(&Gate::cnot(0, 1).unwrap(), &[]).unwrap();
        assert_eq!(s, StateVector::basis(2, 0b01).unwrap());
    }

    #[test]
    fn crz_only_acts_under_control() {
        let theta = 0.7;
        let gate = Gate::crz(0, 1, 0).unwrap();
        let mut off = StateVector::basis(2, 0b01).unwrap();
        off.apply(&gate, &[theta]).unwrap();
        assert_eq!(off, StateVector::basis(2, 0b01).unwrap());

        let mut on = StateVector::basis(2, 0b11).unwrap();
        on.apply(&gate, &[theta]).unwrap();
        let expect = Complex64::from_polar(1.0, theta / 2.0);
        assert!((on.amplitudes()[3] - expect).norm() < 1e-15);
    }

    #[test]
    fn invalid_wires_and_slots() {
        let mut s = StateVector::zero(2).unwrap();
        let g = Gate::rotation(GateKind::RY, 2, 0).unwrap();
        assert!(matches!(s.apply(&g, &[0.1]), Err(Error::Circuit(_))));
        let g = Gate::rotation(GateKind::RY, 0, 5).unwrap();
        assert!(matches!(s.apply(&g, &[0.1]), Err(Error::Circuit(_))));
        assert!(matches!(s.expval_z(2), Err(Error::Circuit(_))));
    }

    #[test]
    fn expval_closed_forms() {
        let s = StateVector::zero(1).unwrap();
        assert_eq!(s.expval_z(0).unwrap(), 1.0);

        let mut s = StateVector::zero(1).unwrap();
        s.ry(0, FRAC_PI_2);
        assert!(s.expval_z(0).unwrap().abs() < 1e-12);

        for theta in [0.3, 1.2, 2.9] {
            let mut s = StateVector::zero(1).unwrap();
            s.ry(0, theta);
            assert!((s.expval_z(0).unwrap() - theta.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn all_wire_readout_matches_single_wire() {
        let mut s = StateVector::zero(3).unwrap();
        s.ry(0, 0.4);
        s.rx(1, 1.9);
        s.cnot(0, 2);
        s.hadamard(1);
        let all = s.expval_z_all();
        for (w, z) in all.iter().enumerate() {
            assert!((z - s.expval_z(w).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn shot_estimates_converge() {
        let mut s = StateVector::zero(2).unwrap();
        s.ry(0, 1.0);
        s.ry(1, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = s.sample_z_all(200_000, &mut rng);
        assert!((est[0] - 1.0f64.cos()).abs() < 0.01);
        assert!((est[1] - 2.0f64.cos()).abs() < 0.01);
    }
}
