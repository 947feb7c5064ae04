//! Dense statevector simulation.
//!
//! Conventions, used everywhere in this crate:
//! - qubit `q` is bit `q` of the basis-state index (qubit 0 = least
//!   significant bit);
//! - bitstrings are printed most-significant qubit first;
//! - two-qubit gate matrices index their local basis as
//!   `2 * (bit of first target) + (bit of second target)`.
//!
//! States are immutable once built; every operation returns a new state, so
//! values can be shared freely across threads. Sampling takes an explicit
//! seed, letting parallel callers run independent, reproducible streams.

use crate::error::{Error, Result};
use crate::gates::{Circuit, GateMatrix};
use crate::linalg::{Mat2, Mat4, C64, C_ONE, C_ZERO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hard cap on the register size; 2^24 amplitudes is the largest state this
/// desk-scale simulator will allocate.
pub const MAX_QUBITS: usize = 24;

/// Normalized complex amplitudes over the 2^n computational basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

/// Born-rule outcome probabilities; entry `x` is the probability of the
/// basis state whose index is `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeDistribution {
    n_qubits: usize,
    probs: Vec<f64>,
}

/// The all-zero input state |0...0>.
pub fn zero_state(n_qubits: usize) -> Result<StateVector> {
    if n_qubits < 1 || n_qubits > MAX_QUBITS {
        return Err(Error::size(format!(
            "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    let mut amps = vec![C_ZERO; 1 << n_qubits];
    amps[0] = C_ONE;
    Ok(StateVector { n_qubits, amps })
}

/// Run `circuit` with the given parameter vector on the all-zero state.
pub fn run_circuit(circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    if params.len() != circuit.param_count() {
        return Err(Error::validation(format!(
            "circuit expects {} parameters, got {}",
            circuit.param_count(),
            params.len()
        )));
    }
    let mut state = zero_state(circuit.n_qubits())?;
    for gate in circuit.gates() {
        state.apply_gate_inplace(&gate.matrix(params), gate.targets());
    }
    debug_assert!(state.norm_error() < 1e-9);
    Ok(state)
}

impl StateVector {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Build a state from raw amplitudes; rejects wrong lengths and vectors
    /// that are not normalized to within 1e-10.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        if n_qubits < 1 || n_qubits > MAX_QUBITS {
            return Err(Error::size(format!(
                "n_qubits must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::validation(format!(
                "expected {} amplitudes, got {}",
                1usize << n_qubits,
                amps.len()
            )));
        }
        let state = StateVector { n_qubits, amps };
        if state.norm_error() > 1e-10 {
            return Err(Error::validation(format!(
                "amplitudes are not normalized (|norm^2 - 1| = {:.3e})",
                state.norm_error()
            )));
        }
        Ok(state)
    }

    /// |sum of squared magnitudes - 1|.
    pub fn norm_error(&self) -> f64 {
        let norm2: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        (norm2 - 1.0).abs()
    }

    /// Apply a validated 2x2 or 4x4 unitary on the given target qubits.
    pub fn apply_unitary(&self, u: &GateMatrix, targets: &[usize]) -> Result<StateVector> {
        match (u, targets) {
            (GateMatrix::Single(m), [q]) => {
                self.check_targets(targets)?;
                if !crate::linalg::is_unitary2(m, 1e-10) {
                    return Err(Error::validation("matrix is not unitary within 1e-10"));
                }
                let mut out = self.clone();
                out.apply_single_inplace(m, *q);
                Ok(out)
            }
            (GateMatrix::Two(m), [q0, q1]) => {
                self.check_targets(targets)?;
                if !crate::linalg::is_unitary4(m, 1e-10) {
                    return Err(Error::validation("matrix is not unitary within 1e-10"));
                }
                let mut out = self.clone();
                out.apply_two_inplace(m, *q0, *q1);
                Ok(out)
            }
            _ => Err(Error::validation(format!(
                "matrix size does not match {} target(s)",
                targets.len()
            ))),
        }
    }

    fn check_targets(&self, targets: &[usize]) -> Result<()> {
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n_qubits {
                return Err(Error::index(format!(
                    "target qubit {t} out of range for {} qubits",
                    self.n_qubits
                )));
            }
            if targets[..i].contains(&t) {
                return Err(Error::index(format!("duplicate target qubit {t}")));
            }
        }
        Ok(())
    }

    /// Unchecked in-place application, used on hot paths where the circuit
    /// has already been validated.
    pub(crate) fn apply_gate_inplace(&mut self, u: &GateMatrix, targets: &[usize]) {
        match (u, targets) {
            (GateMatrix::Single(m), [q]) => self.apply_single_inplace(m, *q),
            (GateMatrix::Two(m), [q0, q1]) => self.apply_two_inplace(m, *q0, *q1),
            _ => unreachable!("gate arity mismatch"),
        }
    }

    pub(crate) fn apply_single_inplace(&mut self, u: &Mat2, target: usize) {
        let step = 1usize << target;
        let len = self.amps.len();
        let mut base = 0;
        while base < len {
            for offset in base..base + step {
                let j = offset;
                let k = offset | step;
                let a = self.amps[j];
                let b = self.amps[k];
                self.amps[j] = u[0][0] * a + u[0][1] * b;
                self.amps[k] = u[1][0] * a + u[1][1] * b;
            }
            base += 2 * step;
        }
    }

    pub(crate) fn apply_two_inplace(&mut self, u: &Mat4, t0: usize, t1: usize) {
        let m0 = 1usize << t0;
        let m1 = 1usize << t1;
        let pair = m0 | m1;
        for i in 0..self.amps.len() {
            if i & pair != 0 {
                continue;
            }
            let idx = [i, i | m1, i | m0, i | pair];
            let a = [
                self.amps[idx[0]],
                self.amps[idx[1]],
                self.amps[idx[2]],
                self.amps[idx[3]],
            ];
            for (g, &target_idx) in idx.iter().enumerate() {
                self.amps[target_idx] =
                    u[g][0] * a[0] + u[g][1] * a[1] + u[g][2] * a[2] + u[g][3] * a[3];
            }
        }
    }
}

/// Squared amplitude magnitudes of every basis state.
pub fn born_probabilities(state: &StateVector) -> OutcomeDistribution {
    OutcomeDistribution {
        n_qubits: state.n_qubits,
        probs: state.amps.iter().map(|a| a.norm_sqr()).collect(),
    }
}

/// Draw `shots` i.i.d. basis-state indices from the Born distribution of
/// `state`; identical `(state, shots, seed)` always yields the same list.
pub fn sample(state: &StateVector, shots: usize, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::validation("shots must be at least 1"));
    }
    let dist = born_probabilities(state);
    Ok(dist.sample(shots, seed))
}

impl OutcomeDistribution {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn from_probabilities(n_qubits: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != 1 << n_qubits {
            return Err(Error::validation(format!(
                "expected {} probabilities, got {}",
                1usize << n_qubits,
                probs.len()
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::validation("probabilities must be finite and >= 0"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(OutcomeDistribution { n_qubits, probs })
    }

    /// Seeded i.i.d. sampling via inverse transform on the cumulative sum.
    pub fn sample(&self, shots: usize, seed: u64) -> Vec<u64> {
        let mut cum = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0f64;
        for &p in &self.probs {
            acc += p;
            cum.push(acc);
        }
        let top = self.probs.len() - 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..shots)
            .map(|_| {
                let u: f64 = rng.gen();
                let idx = cum.partition_point(|&c| c <= u).min(top);
                idx as u64
            })
            .collect()
    }
}
