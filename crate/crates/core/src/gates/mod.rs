//! Parameterized gate matrices and the circuit container.
//!
//! Rotation sign convention: every rotation is `exp(-i * theta/2 * G)` for
//! its generator `G`. A `U2` gate is the ZYZ Euler product
//! `Rz(t2) * Ry(t1) * Rz(t0)` (global phase dropped), and an `SU4` gate is
//! the seven-factor product
//!
//! ```text
//! U2_i(t0..t2), U2_j(t3..t5), RXX(t6), RYY(t7), RZZ(t8),
//! U2_i(t9..t11), U2_j(t12..t14)
//! ```
//!
//! with the first-listed factors applied to the state first (`i` is the
//! first target, `j` the second).

mod kak;

pub use kak::{kak_decompose, KakDecomposition};

use crate::error::{Error, Result};
use crate::linalg::{kron2, mat2_id, mat2_mul, mat4_mul, Mat2, Mat4, C64, C_ZERO};

/// Gate families available to circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateKind {
    U2,
    Rxx,
    Ryy,
    Rzz,
    Su4,
}

/// Pauli tensor axes for the two-qubit rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliAxis {
    Xx,
    Yy,
    Zz,
}

/// A gate matrix ready for application: 2x2 or 4x4.
#[derive(Clone, Debug)]
pub enum GateMatrix {
    Single(Mat2),
    Two(Mat4),
}

impl GateKind {
    pub fn param_count(self) -> usize {
        match self {
            GateKind::U2 => 3,
            GateKind::Rxx | GateKind::Ryy | GateKind::Rzz => 1,
            GateKind::Su4 => 15,
        }
    }

    pub fn target_count(self) -> usize {
        match self {
            GateKind::U2 => 1,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::U2 => "U2",
            GateKind::Rxx => "RXX",
            GateKind::Ryy => "RYY",
            GateKind::Rzz => "RZZ",
            GateKind::Su4 => "SU4",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        match name {
            "U2" => Some(GateKind::U2),
            "RXX" => Some(GateKind::Rxx),
            "RYY" => Some(GateKind::Ryy),
            "RZZ" => Some(GateKind::Rzz),
            "SU4" => Some(GateKind::Su4),
            _ => None,
        }
    }
}

pub fn rz_matrix(theta: f64) -> Mat2 {
    let e = C64::from_polar(1.0, theta / 2.0);
    [[e.conj(), C_ZERO], [C_ZERO, e]]
}

pub fn ry_matrix(theta: f64) -> Mat2 {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let s = C64::new((theta / 2.0).sin(), 0.0);
    [[c, -s], [s, c]]
}

/// Three-parameter single-qubit rotation `Rz(t2) * Ry(t1) * Rz(t0)`.
pub fn u2_matrix(theta: &[f64; 3]) -> Mat2 {
    mat2_mul(
        &rz_matrix(theta[2]),
        &mat2_mul(&ry_matrix(theta[1]), &rz_matrix(theta[0])),
    )
}

/// `exp(-i * theta/2 * P (x) P)` for P in {X, Y, Z}.
pub fn pauli_rotation_matrix(axis: PauliAxis, theta: f64) -> Mat4 {
    let c = C64::new((theta / 2.0).cos(), 0.0);
    let is = C64::new(0.0, (theta / 2.0).sin());
    let mut m = [[C_ZERO; 4]; 4];
    match axis {
        PauliAxis::Xx => {
            // X(x)X flips both bits.
            for i in 0..4 {
                m[i][i] = c;
                m[i][3 - i] = -is;
            }
        }
        PauliAxis::Yy => {
            // Y(x)Y flips both bits with signs -1 on |00>,|11> and +1 on
            // |01>,|10>.
            for i in 0..4 {
                m[i][i] = c;
                let sign = if i == 0 || i == 3 { 1.0 } else { -1.0 };
                m[i][3 - i] = is * C64::new(sign, 0.0);
            }
        }
        PauliAxis::Zz => {
            let minus = C64::from_polar(1.0, -theta / 2.0);
            let plus = C64::from_polar(1.0, theta / 2.0);
            m[0][0] = minus;
            m[1][1] = plus;
            m[2][2] = plus;
            m[3][3] = minus;
        }
    }
    m
}

/// Full 15-parameter two-qubit gate; see the module docs for the factor
/// order. The first target is the high bit of the 4x4 index.
pub fn su4_matrix(theta: &[f64; 15]) -> Mat4 {
    let id = mat2_id();
    let first = |t: &[f64; 3]| kron2(&u2_matrix(t), &id);
    let second = |t: &[f64; 3]| kron2(&id, &u2_matrix(t));

    let pre = mat4_mul(
        &second(&[theta[3], theta[4], theta[5]]),
        &first(&[theta[0], theta[1], theta[2]]),
    );
    let core = mat4_mul(
        &pauli_rotation_matrix(PauliAxis::Zz, theta[8]),
        &mat4_mul(
            &pauli_rotation_matrix(PauliAxis::Yy, theta[7]),
            &pauli_rotation_matrix(PauliAxis::Xx, theta[6]),
        ),
    );
    let post = mat4_mul(
        &second(&[theta[12], theta[13], theta[14]]),
        &first(&[theta[9], theta[10], theta[11]]),
    );
    mat4_mul(&post, &mat4_mul(&core, &pre))
}

/// One parameterized gate application inside a circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSpec {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub param_offset: usize,
}

impl GateSpec {
    pub fn param_count(&self) -> usize {
        self.kind.param_count()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Parameter slice of this gate within the circuit's parameter vector.
    pub fn param_range(&self) -> std::ops::Range<usize> {
        self.param_offset..self.param_offset + self.param_count()
    }

    /// Build the gate matrix from the full circuit parameter vector.
    pub fn matrix(&self, params: &[f64]) -> GateMatrix {
        let p = &params[self.param_range()];
        match self.kind {
            GateKind::U2 => GateMatrix::Single(u2_matrix(p.try_into().expect("3 params"))),
            GateKind::Rxx => GateMatrix::Two(pauli_rotation_matrix(PauliAxis::Xx, p[0])),
            GateKind::Ryy => GateMatrix::Two(pauli_rotation_matrix(PauliAxis::Yy, p[0])),
            GateKind::Rzz => GateMatrix::Two(pauli_rotation_matrix(PauliAxis::Zz, p[0])),
            GateKind::Su4 => GateMatrix::Two(su4_matrix(p.try_into().expect("15 params"))),
        }
    }
}

/// An ordered list of parameterized gates plus a flat parameter vector.
///
/// Invariants, enforced at construction: gate parameter slices tile
/// `0..params.len()` contiguously in gate order, and every target is a
/// valid, distinct qubit index.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateSpec>,
    params: Vec<f64>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<GateSpec>, params: Vec<f64>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::validation("circuit needs at least one qubit"));
        }
        let mut offset = 0usize;
        for (i, gate) in gates.iter().enumerate() {
            if gate.targets.len() != gate.kind.target_count() {
                return Err(Error::validation(format!(
                    "gate {i} ({}) expects {} target(s), got {}",
                    gate.kind.name(),
                    gate.kind.target_count(),
                    gate.targets.len()
                )));
            }
            for (j, &t) in gate.targets.iter().enumerate() {
                if t >= n_qubits {
                    return Err(Error::index(format!(
                        "gate {i} targets qubit {t}, circuit has {n_qubits}"
                    )));
                }
                if gate.targets[..j].contains(&t) {
                    return Err(Error::index(format!("gate {i} repeats target qubit {t}")));
                }
            }
            if gate.param_offset != offset {
                return Err(Error::validation(format!(
                    "gate {i} has parameter offset {}, expected {offset}",
                    gate.param_offset
                )));
            }
            offset += gate.param_count();
        }
        if offset != params.len() {
            return Err(Error::validation(format!(
                "gates use {offset} parameters but the vector holds {}",
                params.len()
            )));
        }
        Ok(Circuit {
            n_qubits,
            gates,
            params,
        })
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Circuit::new(n_qubits, Vec::new(), Vec::new())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Same structure with a replacement parameter vector.
    pub fn with_params(&self, params: Vec<f64>) -> Result<Self> {
        Circuit::new(self.n_qubits, self.gates.clone(), params)
    }

    /// Serialize to the line-oriented text format:
    /// a `qubits N` header, one `KIND q_i [q_j] param_offset` line per gate,
    /// a `params N` separator, then one decimal real per line. Floats are
    /// printed in shortest round-trip form, so rewriting is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("qubits {}\n", self.n_qubits));
        for gate in &self.gates {
            let targets = gate
                .targets
                .iter()
                .map(|t| t.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!(
                "{} {} {}\n",
                gate.kind.name(),
                targets,
                gate.param_offset
            ));
        }
        out.push_str(&format!("params {}\n", self.params.len()));
        for p in &self.params {
            out.push_str(&format!("{p}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (lineno, header) = lines
            .next()
            .ok_or_else(|| Error::format(1, "empty circuit file"))?;
        let n_qubits = parse_header(lineno + 1, header, "qubits")?;

        let mut gates = Vec::new();
        let mut param_len = None;
        for (idx, line) in lines.by_ref() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("params ") {
                param_len = Some(rest.trim().parse::<usize>().map_err(|_| {
                    Error::format(lineno, format!("bad parameter count {rest:?}"))
                })?);
                break;
            }
            let mut parts = line.split_whitespace();
            let kind_name = parts.next().unwrap();
            let kind = GateKind::from_name(kind_name)
                .ok_or_else(|| Error::format(lineno, format!("unknown gate kind {kind_name:?}")))?;
            let fields: Vec<&str> = parts.collect();
            if fields.len() != kind.target_count() + 1 {
                return Err(Error::format(
                    lineno,
                    format!("expected {} fields after the kind", kind.target_count() + 1),
                ));
            }
            let mut targets = Vec::with_capacity(kind.target_count());
            for f in &fields[..kind.target_count()] {
                targets.push(
                    f.parse::<usize>()
                        .map_err(|_| Error::format(lineno, format!("bad target {f:?}")))?,
                );
            }
            let param_offset = fields[kind.target_count()]
                .parse::<usize>()
                .map_err(|_| Error::format(lineno, "bad parameter offset"))?;
            gates.push(GateSpec {
                kind,
                targets,
                param_offset,
            });
        }
        let param_len =
            param_len.ok_or_else(|| Error::format(text.lines().count(), "missing params block"))?;
        let mut params = Vec::with_capacity(param_len);
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            params.push(
                line.parse::<f64>()
                    .map_err(|_| Error::format(lineno, format!("bad parameter value {line:?}")))?,
            );
        }
        if params.len() != param_len {
            return Err(Error::format(
                text.lines().count(),
                format!("expected {param_len} parameters, found {}", params.len()),
            ));
        }
        Circuit::new(n_qubits, gates, params)
    }
}

fn parse_header(lineno: usize, line: &str, key: &str) -> Result<usize> {
    let rest = line
        .trim()
        .strip_prefix(key)
        .ok_or_else(|| Error::format(lineno, format!("expected {key:?} header")))?;
    rest.trim()
        .parse::<usize>()
        .map_err(|_| Error::format(lineno, format!("bad {key} value {rest:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary2, is_unitary4, mat4_det, mat4_id, mat4_max_abs_diff, C_ONE};
    use crate::statevector::{born_probabilities, run_circuit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_thetas<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
        std::array::from_fn(|_| rng.gen_range(-PI..PI))
    }

    #[test]
    fn u2_zero_is_identity() {
        let u = u2_matrix(&[0.0, 0.0, 0.0]);
        assert!((u[0][0] - C_ONE).norm() < 1e-15);
        assert!((u[1][1] - C_ONE).norm() < 1e-15);
        assert!(u[0][1].norm() < 1e-15 && u[1][0].norm() < 1e-15);
    }

    #[test]
    fn u2_pure_ry_matches_closed_form() {
        let u = u2_matrix(&[0.0, PI, 0.0]);
        let expect = [[C_ZERO, -C_ONE], [C_ONE, C_ZERO]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((u[i][j] - expect[i][j]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn u2_is_unitary_for_random_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let u = u2_matrix(&random_thetas(&mut rng));
            assert!(is_unitary2(&u, 1e-12));
        }
    }

    #[test]
    fn pauli_rotation_zero_is_identity() {
        for axis in [PauliAxis::Xx, PauliAxis::Yy, PauliAxis::Zz] {
            let m = pauli_rotation_matrix(axis, 0.0);
            assert!(mat4_max_abs_diff(&m, &mat4_id()) < 1e-15);
        }
    }

    #[test]
    fn rzz_is_the_expected_diagonal() {
        let theta = 0.7;
        let m = pauli_rotation_matrix(PauliAxis::Zz, theta);
        let minus = C64::from_polar(1.0, -theta / 2.0);
        let plus = C64::from_polar(1.0, theta / 2.0);
        for (i, want) in [minus, plus, plus, minus].into_iter().enumerate() {
            assert!((m[i][i] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn rxx_pi_is_minus_i_xx() {
        let m = pauli_rotation_matrix(PauliAxis::Xx, PI);
        let mi = C64::new(0.0, -1.0);
        for i in 0..4 {
            for j in 0..4 {
                let want = if j == 3 - i { mi } else { C_ZERO };
                assert!((m[i][j] - want).norm() < 1e-15, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn su4_zero_is_identity() {
        let m = su4_matrix(&[0.0; 15]);
        assert!(mat4_max_abs_diff(&m, &mat4_id()) < 1e-14);
    }

    #[test]
    fn su4_reduces_to_rzz_when_only_theta8_set() {
        let mut theta = [0.0; 15];
        theta[8] = 1.3;
        let m = su4_matrix(&theta);
        let want = pauli_rotation_matrix(PauliAxis::Zz, 1.3);
        assert!(mat4_max_abs_diff(&m, &want) < 1e-14);
    }

    #[test]
    fn su4_is_unitary_with_unit_determinant_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let m = su4_matrix(&random_thetas(&mut rng));
            assert!(is_unitary4(&m, 1e-12));
            assert!((mat4_det(&m).norm() - 1.0).abs() < 1e-12);
        }
    }

    /// Pins the factor order of the SU4 composition: building the same seven
    /// factors as individual circuit gates (first-listed applied first) must
    /// give the same state as the fused matrix.
    #[test]
    fn su4_factor_order_matches_gate_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let theta: [f64; 15] = random_thetas(&mut rng);
        let (qi, qj) = (1usize, 0usize);

        let fused = Circuit::new(
            2,
            vec![GateSpec {
                kind: GateKind::Su4,
                targets: vec![qi, qj],
                param_offset: 0,
            }],
            theta.to_vec(),
        )
        .unwrap();

        let mut gates = Vec::new();
        let mut params = Vec::new();
        let mut push = |kind: GateKind, targets: Vec<usize>, p: &[f64], params: &mut Vec<f64>| {
            gates.push(GateSpec {
                kind,
                targets,
                param_offset: params.len(),
            });
            params.extend_from_slice(p);
        };
        push(GateKind::U2, vec![qi], &theta[0..3], &mut params);
        push(GateKind::U2, vec![qj], &theta[3..6], &mut params);
        push(GateKind::Rxx, vec![qi, qj], &theta[6..7], &mut params);
        push(GateKind::Ryy, vec![qi, qj], &theta[7..8], &mut params);
        push(GateKind::Rzz, vec![qi, qj], &theta[8..9], &mut params);
        push(GateKind::U2, vec![qi], &theta[9..12], &mut params);
        push(GateKind::U2, vec![qj], &theta[12..15], &mut params);
        let expanded = Circuit::new(2, gates, params.clone()).unwrap();

        let a = run_circuit(&fused, fused.params()).unwrap();
        let b = run_circuit(&expanded, &params).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn empty_circuit_runs_to_zero_state() {
        let c = Circuit::empty(3).unwrap();
        let s = run_circuit(&c, &[]).unwrap();
        assert!((s.amplitudes()[0] - C_ONE).norm() < 1e-15);
    }

    #[test]
    fn zero_parameter_su4_circuit_is_identity() {
        let c = Circuit::new(
            4,
            vec![GateSpec {
                kind: GateKind::Su4,
                targets: vec![2, 3],
                param_offset: 0,
            }],
            vec![0.0; 15],
        )
        .unwrap();
        let s = run_circuit(&c, c.params()).unwrap();
        assert!((s.amplitudes()[0] - C_ONE).norm() < 1e-13);
    }

    #[test]
    fn hadamard_like_u2_gives_even_split() {
        // Ry(pi/2) on qubit 0 of a 2-qubit register.
        let c = Circuit::new(
            2,
            vec![GateSpec {
                kind: GateKind::U2,
                targets: vec![0],
                param_offset: 0,
            }],
            vec![0.0, PI / 2.0, 0.0],
        )
        .unwrap();
        let p = born_probabilities(&run_circuit(&c, c.params()).unwrap());
        assert!((p.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!((p.probabilities()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn run_circuit_rejects_wrong_parameter_count() {
        let c = Circuit::empty(2).unwrap();
        assert!(run_circuit(&c, &[0.1]).is_err());
    }

    #[test]
    fn circuit_validation_catches_bad_offsets_and_targets() {
        let bad_offset = Circuit::new(
            2,
            vec![GateSpec {
                kind: GateKind::Rzz,
                targets: vec![0, 1],
                param_offset: 1,
            }],
            vec![0.0],
        );
        assert!(bad_offset.is_err());
        let bad_target = Circuit::new(
            2,
            vec![GateSpec {
                kind: GateKind::Rzz,
                targets: vec![0, 2],
                param_offset: 0,
            }],
            vec![0.0],
        );
        assert!(bad_target.is_err());
        let dup_target = Circuit::new(
            2,
            vec![GateSpec {
                kind: GateKind::Rzz,
                targets: vec![1, 1],
                param_offset: 0,
            }],
            vec![0.0],
        );
        assert!(dup_target.is_err());
    }

    #[test]
    fn serialization_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut gates = Vec::new();
        let mut params: Vec<f64> = Vec::new();
        for k in 0..5usize {
            let kind = [
                GateKind::U2,
                GateKind::Su4,
                GateKind::Rxx,
                GateKind::Ryy,
                GateKind::Rzz,
            ][k];
            let targets = if kind.target_count() == 1 {
                vec![k % 3]
            } else {
                vec![k % 3, (k + 1) % 3]
            };
            gates.push(GateSpec {
                kind,
                targets,
                param_offset: params.len(),
            });
            for _ in 0..kind.param_count() {
                params.push(rng.gen_range(-10.0..10.0f64) / 3.0);
            }
        }
        let c = Circuit::new(3, gates, params).unwrap();
        let text = c.to_text();
        let back = Circuit::from_text(&text).unwrap();
        assert_eq!(c, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn from_text_reports_line_numbers() {
        let text = "qubits 2\nSU4 0 1 0\nparams 15\n0.0\nnot-a-number\n";
        match Circuit::from_text(text) {
            Err(Error::Format { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected format error, got {other:?}"),
        }
    }
}
