//! Analytic decomposition of a tensor chain into a linear-connectivity
//! two-qubit circuit.
//!
//! A chain with all bond dimensions <= 2 in right-canonical form is
//! prepared exactly by one staircase of n-1 neighboring two-qubit
//! unitaries: gate k maps the incoming bond state on qubit k (with qubit
//! k+1 fresh in |0>) to the site tensor's physical x bond output, and the
//! right-isometry condition makes those columns orthonormal, so they extend
//! to a unitary. Deeper circuits repeat the construction on the residual
//! state left after applying the previous layer's inverse.

use super::chain::TensorChain;
use super::Mps;
use crate::error::{Error, Result};
use crate::gates::{kak_decompose, Circuit, GateKind, GateSpec};
use crate::linalg::{mat4_dagger, Mat4, C64, C_ZERO};
use ndarray::Array2;

/// Decompose into `layers` staircases of SU4 gates on neighboring qubits;
/// gate parameters come from the KAK angles of each staircase unitary.
pub fn mps_to_circuit(mps: &Mps, layers: usize) -> Result<Circuit> {
    if layers < 1 {
        return Err(Error::validation("layers must be at least 1"));
    }
    let n = mps.n_sites();
    if n < 2 {
        return Err(Error::validation(
            "circuit decomposition needs at least 2 sites",
        ));
    }

    let mut residual = mps.chain.clone();
    residual.move_center(0);
    let mut staircases: Vec<Vec<Mat4>> = Vec::with_capacity(layers);
    for layer in 0..layers {
        let mut truncated = residual.clone();
        truncated.truncate(0.0, Some(2));
        truncated.move_center(0);
        let gates = staircase_gates(&truncated)?;
        if layer + 1 < layers {
            // Peel this layer off: residual <- L^dag residual, applying the
            // inverse staircase gate by gate from the top of the chain.
            for k in (0..n - 1).rev() {
                apply_two_site(&mut residual, k, &mat4_dagger(&gates[k]));
            }
            residual.move_center(0);
        }
        staircases.push(gates);
    }

    // The circuit applies the last-extracted staircase first.
    let mut specs = Vec::with_capacity(layers * (n - 1));
    let mut params = Vec::with_capacity(layers * (n - 1) * 15);
    for gates in staircases.iter().rev() {
        for (k, gate) in gates.iter().enumerate() {
            let kak = kak_decompose(gate)?;
            specs.push(GateSpec {
                kind: GateKind::Su4,
                targets: vec![k, k + 1],
                param_offset: params.len(),
            });
            params.extend_from_slice(&kak.theta);
        }
    }
    Circuit::new(n, specs, params)
}

/// Build the staircase preparing a right-canonical chain with bond
/// dimensions <= 2 from |0...0>. Gate k acts on qubits (k, k+1); its column
/// for input |a, 0> is the site-k tensor contracted on the incoming bond
/// value `a`, and the final gate also absorbs the last site.
fn staircase_gates(chain: &TensorChain<C64>) -> Result<Vec<Mat4>> {
    let n = chain.n();
    debug_assert_eq!(chain.center(), 0);
    if chain.max_bond_dim() > 2 {
        return Err(Error::validation(
            "staircase construction needs bond dimensions <= 2",
        ));
    }
    let mut gates = Vec::with_capacity(n - 1);
    for k in 0..n - 1 {
        let site = chain.site(k);
        let (chi_l, _, chi_r) = site.dim();
        let mut columns: Vec<Option<[C64; 4]>> = vec![None; 4];
        if k + 2 == n {
            // Last gate: contract sites n-2 and n-1 together.
            let tail = chain.site(k + 1);
            for a in 0..chi_l {
                let mut col = [C_ZERO; 4];
                for s in 0..2 {
                    for t in 0..2 {
                        let mut acc = C_ZERO;
                        for b in 0..chi_r {
                            acc += site[(a, s, b)] * tail[(b, t, 0)];
                        }
                        col[2 * s + t] = acc;
                    }
                }
                columns[2 * a] = Some(col);
            }
        } else {
            for a in 0..chi_l {
                let mut col = [C_ZERO; 4];
                for s in 0..2 {
                    for b in 0..chi_r {
                        col[2 * s + b] = site[(a, s, b)];
                    }
                }
                columns[2 * a] = Some(col);
            }
        }
        gates.push(complete_unitary(columns)?);
    }
    Ok(gates)
}

/// Fill the unspecified columns with a deterministic orthonormal
/// completion (Gram-Schmidt over the standard basis).
fn complete_unitary(mut columns: Vec<Option<[C64; 4]>>) -> Result<Mat4> {
    // The specified columns come from isometries; verify orthonormality.
    let filled: Vec<(usize, [C64; 4])> = columns
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .collect();
    for (i, (_, a)) in filled.iter().enumerate() {
        for (j, (_, b)) in filled.iter().enumerate() {
            let dot: C64 = (0..4).map(|r| a[r].conj() * b[r]).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            if (dot - C64::new(want, 0.0)).norm() > 1e-8 {
                return Err(Error::numerical(
                    "staircase columns are not orthonormal; chain is not canonical",
                ));
            }
        }
    }
    for slot in 0..4 {
        if columns[slot].is_some() {
            continue;
        }
        let mut chosen = None;
        for cand in 0..4 {
            let mut col = [C_ZERO; 4];
            col[cand] = C64::new(1.0, 0.0);
            for other in columns.iter().flatten() {
                let proj: C64 = (0..4).map(|r| other[r].conj() * col[r]).sum();
                for (r, c) in col.iter_mut().enumerate() {
                    *c -= proj * other[r];
                }
            }
            let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                for c in &mut col {
                    *c /= norm;
                }
                chosen = Some(col);
                break;
            }
        }
        columns[slot] =
            Some(chosen.ok_or_else(|| Error::numerical("unitary completion failed"))?);
    }
    let mut gate = [[C_ZERO; 4]; 4];
    for (j, col) in columns.iter().enumerate() {
        let col = col.expect("all columns filled");
        for i in 0..4 {
            gate[i][j] = col[i];
        }
    }
    debug_assert!(crate::linalg::is_unitary4(&gate, 1e-8));
    Ok(gate)
}

/// Apply a two-qubit gate to sites (k, k+1) of the chain, splitting back
/// with a numerically-zero cutoff so the state is preserved exactly.
pub(super) fn apply_two_site(chain: &mut TensorChain<C64>, k: usize, gate: &Mat4) {
    if chain.center() < k {
        chain.move_center(k);
    } else if chain.center() > k + 1 {
        chain.move_center(k + 1);
    }
    let merged = chain.merge_pair(k);
    let chi_r = merged.dim().1 / 2;
    let chi_l = merged.dim().0 / 2;
    let mut out = Array2::from_elem(merged.dim(), C_ZERO);
    for a in 0..chi_l {
        for b in 0..chi_r {
            for s_new in 0..2 {
                for t_new in 0..2 {
                    let mut acc = C_ZERO;
                    for s in 0..2 {
                        for t in 0..2 {
                            let g = gate[2 * s_new + t_new][2 * s + t];
                            if g != C_ZERO {
                                acc += g * merged[(a * 2 + s, t * chi_r + b)];
                            }
                        }
                    }
                    out[(a * 2 + s_new, t_new * chi_r + b)] = acc;
                }
            }
        }
    }
    chain.split_pair(k, &out, 1e-28, None, false);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_bas, invert_permutation, snake_order};
    use crate::mps::{train_mps, MpsTrainConfig};
    use crate::statevector::run_circuit;

    fn fidelity(circuit: &Circuit, mps: &Mps) -> f64 {
        let state = run_circuit(circuit, circuit.params()).unwrap();
        let dense = mps.chain.to_dense();
        let mut overlap = C64::new(0.0, 0.0);
        for (a, b) in state.amplitudes().iter().zip(&dense) {
            overlap += a.conj() * b;
        }
        overlap.norm_sqr()
    }

    #[test]
    fn chi_two_chain_is_prepared_exactly_by_one_layer() {
        for seed in 0..5u64 {
            let mps = Mps::random(6, 2, seed);
            let circuit = mps_to_circuit(&mps, 1).unwrap();
            assert_eq!(circuit.gates().len(), 5);
            assert_eq!(circuit.param_count(), 75);
            let f = fidelity(&circuit, &mps);
            assert!(f >= 1.0 - 1e-8, "fidelity {f} for seed {seed}");
        }
    }

    #[test]
    fn product_state_circuit_reproduces_the_product_distribution() {
        let mps = Mps::random(5, 1, 3);
        let circuit = mps_to_circuit(&mps, 1).unwrap();
        let state = run_circuit(&circuit, circuit.params()).unwrap();
        let dense = mps.chain.to_dense();
        for (a, b) in state.amplitudes().iter().zip(&dense) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-8);
        }
    }

    #[test]
    fn layers_never_reduce_fidelity_on_random_chains() {
        for seed in [11u64, 12, 13] {
            let mps = Mps::random(6, 4, seed);
            let mut prev = 0.0;
            for layers in 1..=3 {
                let circuit = mps_to_circuit(&mps, layers).unwrap();
                assert_eq!(circuit.gates().len(), layers * 5);
                let f = fidelity(&circuit, &mps);
                assert!(
                    f >= prev - 1e-9,
                    "fidelity dropped from {prev} to {f} at {layers} layers (seed {seed})"
                );
                prev = f;
            }
        }
    }

    #[test]
    fn trained_bas_model_decomposes_with_monotone_fidelity() {
        let ds = generate_bas(3, 3)
            .unwrap()
            .with_feature_order(invert_permutation(&snake_order(3, 3)).unwrap())
            .unwrap();
        let trained = train_mps(&ds, &MpsTrainConfig::default()).unwrap();
        let mut prev = 0.0;
        for layers in 1..=3 {
            let circuit = mps_to_circuit(&trained.mps, layers).unwrap();
            let f = fidelity(&circuit, &trained.mps);
            assert!(f >= prev - 1e-9, "fidelity {f} below {prev}");
            prev = f;
        }
        // The uniform-superposition target has a nearly flat entanglement
        // spectrum, so the staircase peels it off slowly; a single layer
        // lands near 0.57 and retraining closes the rest of the gap.
        assert!(prev > 0.55, "three layers reached only {prev}");
    }

    #[test]
    fn rejects_bad_arguments() {
        let mps = Mps::random(4, 2, 0);
        assert!(mps_to_circuit(&mps, 0).is_err());
        let tiny = Mps::random(1, 1, 0);
        assert!(mps_to_circuit(&tiny, 1).is_err());
    }
}
