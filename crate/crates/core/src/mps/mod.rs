//! Matrix-product-state pretraining and circuit decomposition.
//!
//! Training runs on real-valued tensors (binary data needs no phases) and
//! produces a complex [`Mps`] for the decomposition stage. The chain is
//! kept in mixed-canonical form with unit norm throughout, so Born
//! probabilities are plain squared amplitudes.

mod chain;
mod decompose;
mod train;

pub use decompose::mps_to_circuit;
pub use train::{train_mps, MpsTraining};

use crate::bits::parse_bits;
use crate::error::{Error, Result};
use crate::linalg::C64;
use chain::TensorChain;
use ndarray::Array3;

/// A normalized matrix product state over n two-level sites.
#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    chain: TensorChain<C64>,
}

/// Hyperparameters for [`train_mps`].
#[derive(Clone, Debug, PartialEq)]
pub struct MpsTrainConfig {
    /// Full left-right plus right-left sweeps.
    pub iterations: usize,
    pub learning_rate: f64,
    /// Relative squared-weight threshold under which singular values are
    /// discarded when re-splitting.
    pub cutoff: f64,
    /// Optional hard cap on the bond dimension.
    pub max_bond: Option<usize>,
    pub seed: u64,
}

impl Default for MpsTrainConfig {
    fn default() -> Self {
        MpsTrainConfig {
            iterations: 10,
            learning_rate: 0.05,
            cutoff: 5e-5,
            max_bond: None,
            seed: 0,
        }
    }
}

impl MpsTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::validation("iterations must be at least 1"));
        }
        if !(self.cutoff > 0.0) {
            return Err(Error::validation("cutoff must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::validation("learning rate must be positive"));
        }
        Ok(())
    }
}

impl Mps {
    /// Build from raw tensors with shapes `(chi_{k-1}, 2, chi_k)`; the
    /// state is canonicalized to the given center and normalized.
    pub fn from_tensors(tensors: Vec<Array3<C64>>, center: usize) -> Result<Self> {
        Ok(Mps {
            chain: TensorChain::from_tensors(tensors, center)?,
        })
    }

    pub(crate) fn from_real_chain(chain: &TensorChain<f64>) -> Self {
        let sites = chain
            .sites()
            .iter()
            .map(|t| t.mapv(|x| C64::new(x, 0.0)))
            .collect();
        Mps {
            chain: TensorChain::from_canonical_parts(sites, chain.center())
                .expect("real chain is already canonical"),
        }
    }

    /// Seeded random state with bond dimensions capped at `max_bond`.
    pub fn random(n: usize, max_bond: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sites = Vec::with_capacity(n);
        let mut left = 1usize;
        for k in 0..n {
            let right = if k + 1 == n {
                1
            } else {
                max_bond
                    .max(1)
                    .min(left * 2)
                    .min(1 << (n - k - 1).min(20))
            };
            sites.push(Array3::from_shape_fn((left, 2, right), |_| {
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }));
            left = right;
        }
        Mps {
            chain: TensorChain::from_tensors(sites, 0).expect("valid random tensors"),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.chain.n()
    }

    pub fn canonical_center(&self) -> usize {
        self.chain.center()
    }

    /// Bond dimensions `chi_0..chi_n` including the trivial boundaries.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.chain.bond_dims()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.chain.max_bond_dim()
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        self.chain.sites()
    }

    /// Move the canonical center; the state itself is unchanged.
    pub fn canonicalize(&self, center: usize) -> Result<Mps> {
        if center >= self.n_sites() {
            return Err(Error::index(format!(
                "center {center} out of range for {} sites",
                self.n_sites()
            )));
        }
        let mut chain = self.chain.clone();
        chain.move_center(center);
        Ok(Mps { chain })
    }

    /// Discard singular values below the relative cutoff at every bond
    /// (optionally capping the bond dimension) and renormalize.
    pub fn truncate(&self, cutoff: f64, max_bond: Option<usize>) -> Mps {
        let mut chain = self.chain.clone();
        chain.truncate(cutoff, max_bond);
        Mps { chain }
    }

    /// Deviation from the canonical-form isometry conditions.
    pub fn canonical_error(&self) -> f64 {
        self.chain.canonical_error()
    }

    pub fn norm(&self) -> f64 {
        self.chain.norm()
    }

    /// Born probability of a basis state given as packed bits.
    pub fn probability(&self, bits: u64) -> f64 {
        self.chain.amplitude(bits).norm_sqr()
    }

    /// Dense amplitudes; only sensible at desk scale.
    pub fn to_statevector(&self) -> Result<crate::statevector::StateVector> {
        crate::statevector::StateVector::from_amplitudes(self.n_sites(), self.chain.to_dense())
    }

    /// Checkpoint format: `mps n` / `bonds ...` / `center c` headers, then
    /// per-site blocks of `re im` lines in row-major (left, physical,
    /// right) order. Floats print in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = format!("mps {}\n", self.n_sites());
        let bonds: Vec<String> = self.bond_dims().iter().map(|b| b.to_string()).collect();
        out.push_str(&format!("bonds {}\n", bonds.join(" ")));
        out.push_str(&format!("center {}\n", self.chain.center()));
        for (k, t) in self.chain.sites().iter().enumerate() {
            out.push_str(&format!("site {k}\n"));
            let (l, _, r) = t.dim();
            for a in 0..l {
                for s in 0..2 {
                    for b in 0..r {
                        let z = t[(a, s, b)];
                        out.push_str(&format!("{} {}\n", z.re, z.im));
                    }
                }
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        fn header_fields<'a>(
            lines: &mut impl Iterator<Item = (usize, &'a str)>,
            key: &str,
        ) -> Result<Vec<String>> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| Error::format(0, format!("missing {key} header")))?;
            let rest = line
                .trim()
                .strip_prefix(key)
                .ok_or_else(|| Error::format(idx + 1, format!("expected {key} header")))?;
            Ok(rest.split_whitespace().map(str::to_string).collect())
        }

        let mut lines = text.lines().enumerate();
        let n: usize = header_fields(&mut lines, "mps")?
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(1, "bad site count"))?;
        let bonds: Vec<usize> = header_fields(&mut lines, "bonds")?
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(2, "bad bond dimensions"))?;
        if bonds.len() != n + 1 {
            return Err(Error::format(2, "bond list must have n+1 entries"));
        }
        let center: usize = header_fields(&mut lines, "center")?
            .first()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::format(3, "bad center"))?;

        let mut sites = Vec::with_capacity(n);
        for k in 0..n {
            let header = header_fields(&mut lines, "site")?;
            if header.first().and_then(|t| t.parse::<usize>().ok()) != Some(k) {
                return Err(Error::format(0, format!("expected site {k} block")));
            }
            let (l, r) = (bonds[k], bonds[k + 1]);
            let mut t = Array3::from_elem((l, 2, r), C64::new(0.0, 0.0));
            for a in 0..l {
                for s in 0..2 {
                    for b in 0..r {
                        let (idx, line) = lines
                            .next()
                            .ok_or_else(|| Error::format(0, "truncated tensor block"))?;
                        let mut parts = line.split_whitespace();
                        let re = parts
                            .next()
                            .and_then(|v| v.parse::<f64>().ok())
                            .ok_or_else(|| Error::format(idx + 1, "bad tensor entry"))?;
                        let im = parts
                            .next()
                            .and_then(|v| v.parse::<f64>().ok())
                            .ok_or_else(|| Error::format(idx + 1, "bad tensor entry"))?;
                        t[(a, s, b)] = C64::new(re, im);
                    }
                }
            }
            sites.push(t);
        }
        Ok(Mps {
            chain: TensorChain::from_canonical_parts(sites, center)?,
        })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Born probability of a bitstring (most significant qubit first); the
/// string length must match the site count.
pub fn mps_probability(mps: &Mps, bitstring: &str) -> Result<f64> {
    let (bits, len) = parse_bits(bitstring)?;
    if len != mps.n_sites() {
        return Err(Error::validation(format!(
            "bitstring has {len} bits, state has {} sites",
            mps.n_sites()
        )));
    }
    Ok(mps.probability(bits))
}

/// Mean negative log-likelihood of the dataset in nats, with probabilities
/// floored at 1e-300 before the logarithm.
pub fn mps_nll(mps: &Mps, dataset: &crate::data::BinaryDataset) -> Result<f64> {
    if dataset.n_features() != mps.n_sites() {
        return Err(Error::validation(format!(
            "dataset has {} features, state has {} sites",
            dataset.n_features(),
            mps.n_sites()
        )));
    }
    if dataset.n_samples() == 0 {
        return Err(Error::validation("NLL of an empty dataset is undefined"));
    }
    let mut acc = 0.0;
    for &bits in dataset.qubit_samples().iter() {
        acc -= mps.probability(bits).max(1e-300).ln();
    }
    Ok(acc / dataset.n_samples() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_bas, invert_permutation, snake_order, split, BinaryDataset, SplitMode};

    #[test]
    fn probabilities_sum_to_one() {
        let mps = Mps::random(8, 6, 1);
        let total: f64 = (0..1u64 << 8).map(|b| mps.probability(b)).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn probability_matches_dense_statevector() {
        let mps = Mps::random(7, 5, 2);
        let sv = mps.to_statevector().unwrap();
        for bits in 0..1u64 << 7 {
            let dense = sv.amplitudes()[bits as usize].norm_sqr();
            assert!((mps.probability(bits) - dense).abs() < 1e-10);
        }
    }

    #[test]
    fn bitstring_probability_validates_length() {
        let mps = Mps::random(4, 2, 3);
        assert!(mps_probability(&mps, "0101").is_ok());
        assert!(mps_probability(&mps, "010").is_err());
    }

    #[test]
    fn canonicalize_preserves_probabilities() {
        let mps = Mps::random(6, 4, 4);
        let moved = mps.canonicalize(3).unwrap();
        assert_eq!(moved.canonical_center(), 3);
        assert!(moved.canonical_error() < 1e-10);
        for bits in [0u64, 7, 33, 63] {
            assert!((mps.probability(bits) - moved.probability(bits)).abs() < 1e-10);
        }
    }

    #[test]
    fn nll_of_uniform_product_state_is_n_ln2() {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let n = 5;
        let sites: Vec<Array3<C64>> = (0..n)
            .map(|_| Array3::from_shape_fn((1, 2, 1), |_| h))
            .collect();
        let mps = Mps::from_tensors(sites, 0).unwrap();
        let ds = BinaryDataset::new(vec![0, 3, 17, 31], n).unwrap();
        let nll = mps_nll(&mps, &ds).unwrap();
        assert!((nll - n as f64 * 2.0f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn nll_respects_the_entropy_floor() {
        let mps = Mps::random(5, 4, 5);
        let ds = BinaryDataset::new(vec![1, 1, 2, 30], 5).unwrap();
        // Empirical entropy of {1: 1/2, 2: 1/4, 30: 1/4}.
        let entropy = 0.5 * (2.0f64).ln() + 0.5 * (4.0f64).ln();
        assert!(mps_nll(&mps, &ds).unwrap() >= entropy - 1e-12);
    }

    #[test]
    fn training_a_point_mass_concentrates_probability() {
        let ds = BinaryDataset::new(vec![0b101; 100], 3).unwrap();
        let trained = train_mps(&ds, &MpsTrainConfig::default()).unwrap();
        let p = trained.mps.probability(0b101);
        assert!(p > 0.99, "point-mass probability {p}");
        let nll = mps_nll(&trained.mps, &ds).unwrap();
        assert!(nll < 0.02, "point-mass NLL {nll}");
    }

    #[test]
    fn training_all_three_bit_strings_reaches_the_uniform_floor() {
        let ds = BinaryDataset::new((0..8).collect(), 3).unwrap();
        let trained = train_mps(&ds, &MpsTrainConfig::default()).unwrap();
        let nll = trained.nll_history.last().copied().unwrap();
        let floor = 3.0 * 2.0f64.ln();
        assert!(
            (nll - floor).abs() < 0.05,
            "NLL {nll} should be within 0.05 of {floor}"
        );
    }

    #[test]
    fn bas_training_stays_within_the_observed_bond_budget() {
        let order = invert_permutation(&snake_order(3, 3)).unwrap();
        let ds = generate_bas(3, 3).unwrap().with_feature_order(order).unwrap();
        let trained = train_mps(&ds, &MpsTrainConfig::default()).unwrap();
        assert!(
            trained.max_bond_dim <= 8,
            "max bond {} exceeds 8",
            trained.max_bond_dim
        );
        // NLL is non-increasing across iterations up to a small tolerance.
        for w in trained.nll_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-3, "NLL rose from {} to {}", w[0], w[1]);
        }
    }

    #[test]
    fn bas_train_split_reaches_the_entropy_floor_loosely() {
        let order = invert_permutation(&snake_order(3, 3)).unwrap();
        let ds = generate_bas(3, 3).unwrap().with_feature_order(order).unwrap();
        let (train, _) = split(&ds, 0.8, 7, SplitMode::Random).unwrap();
        let trained = train_mps(&train, &MpsTrainConfig::default()).unwrap();
        let nll = mps_nll(&trained.mps, &train).unwrap();
        let floor = (train.n_samples() as f64).ln();
        assert!(
            nll - floor < 0.15,
            "NLL {nll} is more than 0.15 nats above ln(11) = {floor}"
        );
    }

    #[test]
    fn training_rejects_empty_datasets() {
        let ds = BinaryDataset::new(vec![], 3).unwrap();
        assert!(matches!(
            train_mps(&ds, &MpsTrainConfig::default()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let mps = Mps::random(5, 3, 9);
        let text = mps.to_text();
        let back = Mps::from_text(&text).unwrap();
        assert_eq!(mps, back);
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn trained_model_survives_checkpointing() {
        let ds = BinaryDataset::new(vec![0b11, 0b11, 0b00], 2).unwrap();
        let trained = train_mps(&ds, &MpsTrainConfig::default()).unwrap();
        let back = Mps::from_text(&trained.mps.to_text()).unwrap();
        for bits in 0..4u64 {
            assert!((back.probability(bits) - trained.mps.probability(bits)).abs() < 1e-12);
        }
    }
}
