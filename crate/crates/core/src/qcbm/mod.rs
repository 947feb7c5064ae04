//! Born-machine training: Gaussian-mixture-kernel MMD loss, parameter-shift
//! gradients, ADAM, and circuit extension.
//!
//! For bitstrings the squared Euclidean distance is the Hamming count, so
//! every kernel evaluation reduces to a table lookup indexed by the
//! popcount of an XOR. MMD estimates are biased V-statistics (self-pairs
//! included): identical multisets give exactly zero and single-sample sets
//! are well defined.

mod adam;
mod log;
mod train;

pub use adam::Adam;
pub use log::{write_aggregate_csv, IterationRecord, TrainLog};
pub use train::{mmd_gradient, train_qcbm, train_qcbm_seeds};

use crate::bits::hamming;
use crate::error::{Error, Result};
use crate::gates::{Circuit, GateKind, GateSpec};
use crate::similarity::SimilarityGraph;
use crate::statevector::OutcomeDistribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Bandwidths of the Gaussian mixture kernel
/// `kappa(x,y) = mean_i exp(-|x-y|^2 / (2 sigma_i))`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelConfig {
    pub bandwidths: Vec<f64>,
}

impl KernelConfig {
    pub fn new(bandwidths: Vec<f64>) -> Result<Self> {
        let cfg = KernelConfig { bandwidths };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn single(sigma: f64) -> Result<Self> {
        Self::new(vec![sigma])
    }

    pub fn validate(&self) -> Result<()> {
        if self.bandwidths.is_empty() {
            return Err(Error::validation("kernel needs at least one bandwidth"));
        }
        if self.bandwidths.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::validation("kernel bandwidths must be positive"));
        }
        Ok(())
    }

    /// Kernel value as a function of Hamming distance 0..=64.
    pub(crate) fn table(&self) -> Vec<f64> {
        (0..=64)
            .map(|d| {
                self.bandwidths
                    .iter()
                    .map(|s| (-(d as f64) / (2.0 * s)).exp())
                    .sum::<f64>()
                    / self.bandwidths.len() as f64
            })
            .collect()
    }
}

/// Gaussian mixture kernel between two bitstrings.
pub fn kernel(x: u64, y: u64, cfg: &KernelConfig) -> f64 {
    let d = hamming(x, y) as f64;
    cfg.bandwidths
        .iter()
        .map(|s| (-d / (2.0 * s)).exp())
        .sum::<f64>()
        / cfg.bandwidths.len() as f64
}

/// A probability distribution with sparse support (deduplicated samples or
/// dataset rows with uniform weights).
#[derive(Clone, Debug, PartialEq)]
pub struct Empirical {
    entries: Vec<(u64, f64)>,
}

impl Empirical {
    /// Deduplicate a multiset of draws into (value, frequency) pairs.
    pub fn from_samples(samples: &[u64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("empty sample set"));
        }
        let mut counts = std::collections::BTreeMap::new();
        for &s in samples {
            *counts.entry(s).or_insert(0usize) += 1;
        }
        let total = samples.len() as f64;
        Ok(Empirical {
            entries: counts
                .into_iter()
                .map(|(bits, c)| (bits, c as f64 / total))
                .collect(),
        })
    }

    /// Uniform distribution over the qubit-ordered rows of a dataset.
    pub fn from_dataset(dataset: &crate::data::BinaryDataset) -> Result<Self> {
        Self::from_samples(&dataset.qubit_samples())
    }

    /// Nonzero entries of a dense outcome distribution.
    pub fn from_distribution(dist: &OutcomeDistribution) -> Result<Self> {
        let entries: Vec<(u64, f64)> = dist
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, &p)| (x as u64, p))
            .collect();
        if entries.is_empty() {
            return Err(Error::validation("distribution has no support"));
        }
        Ok(Empirical { entries })
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }
}

/// `sum_{x,y} a(x) b(y) kappa(x,y)` over two sparse distributions.
pub(crate) fn pair_mean(a: &Empirical, b: &Empirical, table: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &(x, wx) in &a.entries {
        let mut inner = 0.0;
        for &(y, wy) in &b.entries {
            inner += wy * table[hamming(x, y) as usize];
        }
        acc += wx * inner;
    }
    acc
}

/// Kernel-smoothed weights of `emp` over the full 2^n outcome space:
/// `out[x] = sum_y kappa(x,y) emp(y)`. Precomputing this once makes each
/// expectation against `emp` a sparse dot product.
pub(crate) fn dense_kernel_vector(emp: &Empirical, n_bits: usize, table: &[f64]) -> Vec<f64> {
    let size = 1usize << n_bits;
    let mut out = vec![0.0; size];
    for (x, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for &(y, wy) in &emp.entries {
            acc += wy * table[hamming(x as u64, y) as usize];
        }
        *o = acc;
    }
    out
}

/// Biased V-statistic MMD between two sample multisets.
pub fn mmd(samples_q: &[u64], samples_p: &[u64], cfg: &KernelConfig) -> Result<f64> {
    cfg.validate()?;
    let q = Empirical::from_samples(samples_q)?;
    let p = Empirical::from_samples(samples_p)?;
    Ok(mmd_empirical(&q, &p, &cfg.table()))
}

pub(crate) fn mmd_empirical(q: &Empirical, p: &Empirical, table: &[f64]) -> f64 {
    pair_mean(q, q, table) + pair_mean(p, p, table) - 2.0 * pair_mean(q, p, table)
}

/// MMD with the model expectation taken exactly over a dense distribution.
pub fn mmd_exact(dist_q: &OutcomeDistribution, dist_p: &Empirical, cfg: &KernelConfig) -> f64 {
    let table = cfg.table();
    let q = Empirical::from_distribution(dist_q).expect("distribution sums to one");
    mmd_empirical(&q, dist_p, &table)
}

/// Append one near-identity SU4 gate per extension edge (edges beyond the
/// baseline, ordered by (min, max) index). Parameters are drawn i.i.d. from
/// a normal with the given standard deviation; base gates and parameters
/// are untouched.
pub fn extend_circuit(
    base: &Circuit,
    graph: &SimilarityGraph,
    init_std: f64,
    seed: u64,
) -> Result<Circuit> {
    if graph.n_vertices() != base.n_qubits() {
        return Err(Error::validation(format!(
            "graph has {} vertices, circuit has {} qubits",
            graph.n_vertices(),
            base.n_qubits()
        )));
    }
    if init_std < 0.0 {
        return Err(Error::validation("init_std must be non-negative"));
    }
    let mut gates = base.gates().to_vec();
    let mut params = base.params().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (i, j) in graph.extension_edges() {
        gates.push(GateSpec {
            kind: GateKind::Su4,
            targets: vec![i, j],
            param_offset: params.len(),
        });
        for _ in 0..15 {
            let draw: f64 = rng.sample(rand_distr::StandardNormal);
            params.push(init_std * draw);
        }
    }
    Circuit::new(base.n_qubits(), gates, params)
}

/// How model expectations are evaluated during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Finite-shot sampling (paper-style runs).
    Shots,
    /// Exact Born probabilities (noise-free diagnostics and oracles).
    Exact,
}

/// Hyperparameters for [`train_qcbm`].
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Shots per circuit evaluation (the base distribution and each
    /// parameter shift get this many draws).
    pub shots: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Gradient mini-batch size; the logged train MMD always uses the full
    /// training set.
    pub minibatch: Option<usize>,
    pub eval_mode: EvalMode,
    pub seed: u64,
    /// Standard deviation for near-identity extension initialization.
    pub init_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 1000,
            shots: 1000,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            minibatch: None,
            eval_mode: EvalMode::Shots,
            seed: 0,
            init_std: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::validation("iterations must be at least 1"));
        }
        if self.shots < 1 {
            return Err(Error::validation("shots must be at least 1"));
        }
        if let Some(m) = self.minibatch {
            if m < 1 {
                return Err(Error::validation("minibatch size must be at least 1"));
            }
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be positive"));
        }
        Ok(())
    }
}
