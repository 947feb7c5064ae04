//! The QCBM training loop: parameter-shift gradients of the MMD loss with
//! ADAM updates.
//!
//! Every gate parameter sits in a rotation `exp(-i theta/2 G)` with an
//! involutory generator, so the +-pi/2 shift rule is exact:
//!
//! ```text
//! dL/dtheta_k = (E[k(q+, q)] - E[k(q-, q)]) - (E[k(q+, p)] - E[k(q-, p)])
//! ```
//!
//! with q+- sampled from the shifted circuits. Within one iteration all
//! parameters reuse the same base sample set q and the same mini-batch, and
//! every sampling step draws its seed from (master seed, iteration, k,
//! shift), so results are independent of evaluation order and can be
//! parallelized freely across seeds.

use super::{
    dense_kernel_vector, mmd_empirical, Adam, Empirical, EvalMode, IterationRecord, KernelConfig,
    TrainConfig, TrainLog,
};
use crate::bits::derive_seed;
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use crate::gates::Circuit;
use crate::statevector::{born_probabilities, run_circuit, sample, zero_state, StateVector};
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

const TAG_MODEL_SAMPLES: u64 = 1;
const TAG_MINIBATCH: u64 = 2;
const TAG_SHIFT: u64 = 3;

/// Train the circuit parameters against the train set, logging train/test
/// MMD each iteration. Fully deterministic given the config seed.
pub fn train_qcbm(
    circuit: &Circuit,
    train_set: &BinaryDataset,
    test_set: &BinaryDataset,
    kernel_cfg: &KernelConfig,
    cfg: &TrainConfig,
) -> Result<TrainLog> {
    cfg.validate()?;
    kernel_cfg.validate()?;
    let n = circuit.n_qubits();
    if train_set.n_features() != n || test_set.n_features() != n {
        return Err(Error::validation(format!(
            "dataset features ({}, {}) must match the {n}-qubit circuit",
            train_set.n_features(),
            test_set.n_features()
        )));
    }
    let train_samples = train_set.qubit_samples();
    if let Some(m) = cfg.minibatch {
        if m > train_samples.len() {
            return Err(Error::validation(format!(
                "minibatch {m} exceeds the {} train samples",
                train_samples.len()
            )));
        }
    }
    let train_emp = Empirical::from_samples(&train_samples)?;
    let test_emp = Empirical::from_dataset(test_set)?;
    let table = kernel_cfg.table();
    let v_train_full = dense_kernel_vector(&train_emp, n, &table);

    let mut params = circuit.params().to_vec();
    let mut adam = Adam::new(
        params.len(),
        cfg.learning_rate,
        cfg.beta1,
        cfg.beta2,
        cfg.epsilon,
    );
    let mut records = Vec::with_capacity(cfg.iterations);

    for t in 0..cfg.iterations {
        let started = std::time::Instant::now();
        let state = run_circuit(circuit, &params)?;

        // Model distribution for this iteration, shared by the loss value
        // and every parameter's gradient.
        let model_emp = match cfg.eval_mode {
            EvalMode::Shots => {
                let seed = derive_seed(cfg.seed, &[TAG_MODEL_SAMPLES, t as u64]);
                Empirical::from_samples(&sample(&state, cfg.shots, seed)?)?
            }
            EvalMode::Exact => Empirical::from_distribution(&born_probabilities(&state))?,
        };
        let mmd_train = mmd_empirical(&model_emp, &train_emp, &table);
        let mmd_test = mmd_empirical(&model_emp, &test_emp, &table);

        // Gradient mini-batch (the logged loss always uses the full set).
        let v_batch: Vec<f64> = match cfg.minibatch {
            Some(m) if m < train_samples.len() => {
                let seed = derive_seed(cfg.seed, &[TAG_MINIBATCH, t as u64]);
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                let idx = rand::seq::index::sample(&mut rng, train_samples.len(), m);
                let drawn: Vec<u64> = idx.iter().map(|i| train_samples[i]).collect();
                dense_kernel_vector(&Empirical::from_samples(&drawn)?, n, &table)
            }
            _ => v_train_full.clone(),
        };
        let v_model = dense_kernel_vector(&model_emp, n, &table);

        let grads = gradients(circuit, &params, &v_model, &v_batch, cfg, t as u64)?;
        adam.step(&mut params, &grads);

        records.push(IterationRecord {
            iteration: t,
            mmd_train,
            mmd_test,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(TrainLog {
        records,
        final_params: params,
    })
}

/// Run one training job per seed (in parallel); everything else about the
/// configuration is shared, so runs differ only in their sampling streams.
pub fn train_qcbm_seeds(
    circuit: &Circuit,
    train_set: &BinaryDataset,
    test_set: &BinaryDataset,
    kernel_cfg: &KernelConfig,
    cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<Vec<TrainLog>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let mut run_cfg = cfg.clone();
            run_cfg.seed = seed;
            train_qcbm(circuit, train_set, test_set, kernel_cfg, &run_cfg)
        })
        .collect()
}

/// All parameter gradients for one iteration, walking a prefix state down
/// the gate list so each shifted evaluation only re-applies the suffix.
fn gradients(
    circuit: &Circuit,
    params: &[f64],
    v_model: &[f64],
    v_batch: &[f64],
    cfg: &TrainConfig,
    iteration: u64,
) -> Result<Vec<f64>> {
    let mut grads = vec![0.0; params.len()];
    let mut scratch = params.to_vec();
    let mut prefix = zero_state(circuit.n_qubits())?;
    let gates = circuit.gates();
    for (gi, gate) in gates.iter().enumerate() {
        for k in gate.param_range() {
            let mut terms = [0.0f64; 4]; // [q+, q-, p+, p-]
            for (tag, shift) in [(0u64, FRAC_PI_2), (1u64, -FRAC_PI_2)] {
                scratch[k] = params[k] + shift;
                let mut state = prefix.clone();
                state.apply_gate_inplace(&gate.matrix(&scratch), gate.targets());
                for later in &gates[gi + 1..] {
                    state.apply_gate_inplace(&later.matrix(params), later.targets());
                }
                scratch[k] = params[k];
                let seed = derive_seed(cfg.seed, &[TAG_SHIFT, iteration, k as u64, tag]);
                let (eq, ep) = shifted_expectations(&state, v_model, v_batch, cfg, seed)?;
                terms[tag as usize] = eq;
                terms[2 + tag as usize] = ep;
            }
            grads[k] = (terms[0] - terms[1]) - (terms[2] - terms[3]);
        }
        prefix.apply_gate_inplace(&gate.matrix(params), gate.targets());
    }
    Ok(grads)
}

/// Expectations of the kernel-smoothed weights under one shifted circuit's
/// distribution: (against the model samples, against the data batch).
fn shifted_expectations(
    state: &StateVector,
    v_model: &[f64],
    v_batch: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(f64, f64)> {
    match cfg.eval_mode {
        EvalMode::Shots => {
            let draws = sample(state, cfg.shots, seed)?;
            let mut eq = 0.0;
            let mut ep = 0.0;
            for &x in &draws {
                eq += v_model[x as usize];
                ep += v_batch[x as usize];
            }
            let m = draws.len() as f64;
            Ok((eq / m, ep / m))
        }
        EvalMode::Exact => {
            let probs = born_probabilities(state);
            let mut eq = 0.0;
            let mut ep = 0.0;
            for (x, &p) in probs.probabilities().iter().enumerate() {
                eq += p * v_model[x];
                ep += p * v_batch[x];
            }
            Ok((eq, ep))
        }
    }
}

/// Gradient of the MMD loss with respect to parameter `k`, from scratch
/// (the training loop amortizes the kernel vectors across parameters; this
/// is the standalone single-parameter path).
pub fn mmd_gradient(
    circuit: &Circuit,
    params: &[f64],
    k: usize,
    train_batch: &Empirical,
    kernel_cfg: &KernelConfig,
    cfg: &TrainConfig,
) -> Result<f64> {
    if k >= params.len() {
        return Err(Error::index(format!(
            "parameter {k} out of range for {} parameters",
            params.len()
        )));
    }
    if params.len() != circuit.param_count() {
        return Err(Error::validation(format!(
            "circuit expects {} parameters, got {}",
            circuit.param_count(),
            params.len()
        )));
    }
    kernel_cfg.validate()?;
    let n = circuit.n_qubits();
    let table = kernel_cfg.table();

    let state = run_circuit(circuit, params)?;
    let model_emp = match cfg.eval_mode {
        EvalMode::Shots => {
            let seed = derive_seed(cfg.seed, &[TAG_MODEL_SAMPLES, 0]);
            Empirical::from_samples(&sample(&state, cfg.shots, seed)?)?
        }
        EvalMode::Exact => Empirical::from_distribution(&born_probabilities(&state))?,
    };
    let v_model = dense_kernel_vector(&model_emp, n, &table);
    let v_batch = dense_kernel_vector(train_batch, n, &table);

    let mut shifted = params.to_vec();
    let mut terms = [0.0f64; 4];
    for (tag, shift) in [(0u64, FRAC_PI_2), (1u64, -FRAC_PI_2)] {
        shifted[k] = params[k] + shift;
        let state = run_circuit(circuit, &shifted)?;
        let seed = derive_seed(cfg.seed, &[TAG_SHIFT, 0, k as u64, tag]);
        let (eq, ep) = shifted_expectations(&state, &v_model, &v_batch, cfg, seed)?;
        terms[tag as usize] = eq;
        terms[2 + tag as usize] = ep;
        shifted[k] = params[k];
    }
    Ok((terms[0] - terms[1]) - (terms[2] - terms[3]))
}
