//! Negative-log-likelihood training of a real-valued tensor chain with
//! DMRG-style two-site sweeps.
//!
//! One iteration is a full left-to-right plus right-to-left sweep. At each
//! bond the two neighboring tensors are merged, a single gradient-descent
//! step is taken on the dataset NLL with respect to the merged tensor, and
//! the result is re-split by a truncated SVD. Environments (the contraction
//! of all sites left/right of the working pair with a sample's bits) are
//! cached per sample and recomputed once per sweep direction.

use super::chain::TensorChain;
use super::{Mps, MpsTrainConfig};
use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use ndarray::Array3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A trained model plus per-iteration diagnostics.
#[derive(Clone, Debug)]
pub struct MpsTraining {
    pub mps: Mps,
    /// Dataset NLL in nats after each iteration.
    pub nll_history: Vec<f64>,
    /// Largest bond dimension of the trained state (training concludes
    /// with this; mid-sweep bonds can transiently run higher before the
    /// next truncation).
    pub max_bond_dim: usize,
}

struct Sample {
    bits: u64,
    weight: f64,
}

/// Train a matrix product state on the dataset's qubit-ordered samples.
pub fn train_mps(dataset: &BinaryDataset, config: &MpsTrainConfig) -> Result<MpsTraining> {
    config.validate()?;
    if dataset.n_samples() == 0 {
        return Err(Error::validation("cannot train an MPS on an empty dataset"));
    }
    let n = dataset.n_features();
    if n < 2 {
        return Err(Error::validation("MPS training needs at least 2 features"));
    }

    // Deduplicate samples; the NLL only depends on counts.
    let mut counts = std::collections::BTreeMap::new();
    for &s in dataset.qubit_samples().iter() {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    let total = dataset.n_samples() as f64;
    let samples: Vec<Sample> = counts
        .into_iter()
        .map(|(bits, c)| Sample {
            bits,
            weight: c as f64,
        })
        .collect();

    let mut chain = init_chain(n, config.seed)?;
    let mut nll_history = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        chain.move_center(0);
        sweep(&mut chain, &samples, total, config, Direction::Right);
        sweep(&mut chain, &samples, total, config, Direction::Left);
        nll_history.push(chain_nll(&chain, &samples, total));
    }

    chain.move_center(0);
    chain.normalize();
    let max_bond_dim = chain.max_bond_dim();
    Ok(MpsTraining {
        mps: Mps::from_real_chain(&chain),
        nll_history,
        max_bond_dim,
    })
}

/// NLL of the dataset under a normalized chain, with the probability
/// floored at 1e-300 before the logarithm.
fn chain_nll(chain: &TensorChain<f64>, samples: &[Sample], total: f64) -> f64 {
    let mut acc = 0.0;
    for s in samples {
        let amp = chain.amplitude(s.bits);
        let p = (amp * amp).max(1e-300);
        acc -= s.weight * p.ln();
    }
    acc / total
}

fn init_chain(n: usize, seed: u64) -> Result<TensorChain<f64>> {
    use rand_distr::StandardNormal;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<Array3<f64>> = (0..n)
        .map(|_| {
            Array3::from_shape_fn((1, 2, 1), |_| {
                0.01 * rng.sample::<f64, _>(StandardNormal)
            })
        })
        .collect();
    TensorChain::from_tensors(sites, 0)
}

#[derive(Clone, Copy, PartialEq)]
enum Direction {
    Right,
    Left,
}

fn sweep(
    chain: &mut TensorChain<f64>,
    samples: &[Sample],
    total: f64,
    config: &MpsTrainConfig,
    dir: Direction,
) {
    let n = chain.n();
    // Far-side environments per sample, fixed for the whole sweep: for a
    // right sweep fixed[i][j] spans sites j..n-1, for a left sweep 0..j-1.
    let fixed: Vec<Vec<Vec<f64>>> = samples
        .iter()
        .map(|s| match dir {
            Direction::Right => right_environments(chain, s.bits),
            Direction::Left => left_environments(chain, s.bits),
        })
        .collect();
    // Near-side environments grow incrementally as bonds complete.
    let mut near: Vec<Vec<f64>> = vec![vec![1.0]; samples.len()];

    let bonds: Vec<usize> = match dir {
        Direction::Right => (0..n - 1).collect(),
        Direction::Left => (0..n - 1).rev().collect(),
    };
    for k in bonds {
        let merged = chain.merge_pair(k);
        let chi_r = merged.dim().1 / 2;
        let z: f64 = merged.iter().map(|x| x * x).sum();

        let mut grad = merged.mapv(|x| 2.0 * x / z);
        for (i, s) in samples.iter().enumerate() {
            let bk = (s.bits >> k & 1) as usize;
            let bk1 = (s.bits >> (k + 1) & 1) as usize;
            let (lenv, renv): (&[f64], &[f64]) = match dir {
                Direction::Right => (&near[i], &fixed[i][k + 2]),
                Direction::Left => (&fixed[i][k], &near[i]),
            };
            let mut psi = 0.0;
            for (a, &la) in lenv.iter().enumerate() {
                if la == 0.0 {
                    continue;
                }
                let row = a * 2 + bk;
                for (b, &rb) in renv.iter().enumerate() {
                    psi += la * merged[(row, bk1 * chi_r + b)] * rb;
                }
            }
            if psi.abs() < 1e-290 {
                continue;
            }
            let coeff = 2.0 * s.weight / (total * psi);
            for (a, &la) in lenv.iter().enumerate() {
                if la == 0.0 {
                    continue;
                }
                let row = a * 2 + bk;
                for (b, &rb) in renv.iter().enumerate() {
                    grad[(row, bk1 * chi_r + b)] -= coeff * la * rb;
                }
            }
        }

        let mut updated = merged;
        updated.zip_mut_with(&grad, |m, &g| *m -= config.learning_rate * g);
        chain.split_pair(
            k,
            &updated,
            config.cutoff,
            config.max_bond,
            dir == Direction::Right,
        );

        // Absorb the freshly completed site into the near-side environment.
        match dir {
            Direction::Right => {
                let site = chain.site(k);
                let (l, _, r) = site.dim();
                for (i, s) in samples.iter().enumerate() {
                    let bk = (s.bits >> k & 1) as usize;
                    let mut v = vec![0.0; r];
                    for (b, vb) in v.iter_mut().enumerate() {
                        for a in 0..l {
                            *vb += near[i][a] * site[(a, bk, b)];
                        }
                    }
                    near[i] = v;
                }
            }
            Direction::Left => {
                let site = chain.site(k + 1);
                let (l, _, r) = site.dim();
                for (i, s) in samples.iter().enumerate() {
                    let b1 = (s.bits >> (k + 1) & 1) as usize;
                    let mut v = vec![0.0; l];
                    for (a, va) in v.iter_mut().enumerate() {
                        for b in 0..r {
                            *va += site[(a, b1, b)] * near[i][b];
                        }
                    }
                    near[i] = v;
                }
            }
        }
    }
}

/// right_env[j] = contraction of sites j..n-1 with the sample bits, a
/// vector of length chi_{j-1}; entry n is the scalar boundary.
fn right_environments(chain: &TensorChain<f64>, bits: u64) -> Vec<Vec<f64>> {
    let n = chain.n();
    let mut envs = vec![Vec::new(); n + 1];
    envs[n] = vec![1.0];
    for j in (0..n).rev() {
        let site = chain.site(j);
        let (l, _, r) = site.dim();
        let s = (bits >> j & 1) as usize;
        let mut v = vec![0.0; l];
        for (a, va) in v.iter_mut().enumerate() {
            for b in 0..r {
                *va += site[(a, s, b)] * envs[j + 1][b];
            }
        }
        envs[j] = v;
    }
    envs
}

/// left_env[j] = contraction of sites 0..j-1, a vector of length chi_{j-1};
/// entry 0 is the scalar boundary.
fn left_environments(chain: &TensorChain<f64>, bits: u64) -> Vec<Vec<f64>> {
    let n = chain.n();
    let mut envs = vec![Vec::new(); n + 1];
    envs[0] = vec![1.0];
    for j in 0..n {
        let site = chain.site(j);
        let (l, _, r) = site.dim();
        let s = (bits >> j & 1) as usize;
        let mut v = vec![0.0; r];
        for (b, vb) in v.iter_mut().enumerate() {
            for a in 0..l {
                *vb += envs[j][a] * site[(a, s, b)];
            }
        }
        envs[j + 1] = v;
    }
    envs
}
