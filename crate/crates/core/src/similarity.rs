//! Feature-similarity metrics and extension topologies.
//!
//! Distances are measured between binary feature columns: the Hamming
//! distance `(c01 + c10) / n` and the variation of information
//! `VI(X,Y) = H(X|Y) + H(Y|X)` (natural log), optionally normalized by the
//! joint entropy so it lands in [0,1]. Thresholding a distance matrix, or
//! one of the preset connectivities, yields a [`SimilarityGraph`] whose
//! edges beyond the pretrained baseline chain become extension gates.

use crate::data::BinaryDataset;
use crate::error::{Error, Result};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub type Edge = (usize, usize);

/// Symmetric pairwise feature distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    entries: Array2<f64>,
}

/// Undirected connectivity over qubit/feature indices. `baseline` marks the
/// pretrained linear chain and is always a subset of `edges`; the
/// difference is the set of extension edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityGraph {
    n_vertices: usize,
    edges: BTreeSet<Edge>,
    baseline: BTreeSet<Edge>,
}

/// Preset connectivities for the experiment variants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PresetKind {
    /// Chain along the given vertex order; becomes its own baseline.
    Linear { order: Vec<usize> },
    /// All 4-neighborhood edges of a rows-by-cols grid in row-major labels.
    GridNn { rows: usize, cols: usize },
    /// Complete graph.
    AllToAll,
    /// Baseline plus `count` uniformly drawn new edges.
    RandomExtension { count: usize, seed: u64 },
}

impl DistanceMatrix {
    pub fn size(&self) -> usize {
        self.entries.dim().0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Row-major CSV with 12 significant digits.
    pub fn to_csv(&self) -> String {
        let f = self.size();
        let mut out = String::new();
        for i in 0..f {
            let row: Vec<String> = (0..f)
                .map(|j| format!("{:.11e}", self.entries[(i, j)]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn normalized_edge(i: usize, j: usize) -> Edge {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl SimilarityGraph {
    pub fn new(n_vertices: usize, edges: BTreeSet<Edge>, baseline: BTreeSet<Edge>) -> Result<Self> {
        for &(i, j) in edges.iter().chain(baseline.iter()) {
            if i >= j {
                return Err(Error::validation(format!(
                    "edge ({i},{j}) must be ordered i < j with no self-loops"
                )));
            }
            if j >= n_vertices {
                return Err(Error::index(format!(
                    "edge ({i},{j}) exceeds {n_vertices} vertices"
                )));
            }
        }
        if !baseline.is_subset(&edges) {
            return Err(Error::validation("baseline edges must be a subset of edges"));
        }
        Ok(SimilarityGraph {
            n_vertices,
            edges,
            baseline,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn baseline_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.baseline.iter().copied()
    }

    /// Edges beyond the baseline, sorted by (min, max) index.
    pub fn extension_edges(&self) -> Vec<Edge> {
        self.edges.difference(&self.baseline).copied().collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Relabel vertices through a permutation (`map[v]` is the new label);
    /// used to carry a feature-label graph onto circuit qubits.
    pub fn relabel(&self, map: &[usize]) -> Result<SimilarityGraph> {
        if map.len() != self.n_vertices {
            return Err(Error::validation(format!(
                "relabel map has {} entries for {} vertices",
                map.len(),
                self.n_vertices
            )));
        }
        let remap = |set: &BTreeSet<Edge>| -> BTreeSet<Edge> {
            set.iter()
                .map(|&(i, j)| normalized_edge(map[i], map[j]))
                .collect()
        };
        SimilarityGraph::new(self.n_vertices, remap(&self.edges), remap(&self.baseline))
    }

    /// Edge-list text: one `i j baseline|ext` line per edge.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let tag = if self.baseline.contains(&(i, j)) {
                "baseline"
            } else {
                "ext"
            };
            out.push_str(&format!("{i} {j} {tag}\n"));
        }
        out
    }

    pub fn from_text(text: &str, n_vertices: usize) -> Result<Self> {
        let mut edges = BTreeSet::new();
        let mut baseline = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::format(idx + 1, "expected `i j baseline|ext`"));
            }
            let i = fields[0]
                .parse::<usize>()
                .map_err(|_| Error::format(idx + 1, "bad vertex index"))?;
            let j = fields[1]
                .parse::<usize>()
                .map_err(|_| Error::format(idx + 1, "bad vertex index"))?;
            let e = normalized_edge(i, j);
            match fields[2] {
                "baseline" => {
                    baseline.insert(e);
                    edges.insert(e);
                }
                "ext" => {
                    edges.insert(e);
                }
                other => {
                    return Err(Error::format(idx + 1, format!("unknown edge tag {other:?}")))
                }
            }
        }
        SimilarityGraph::new(n_vertices, edges, baseline)
    }
}

/// Pairwise Hamming distance between feature columns: the fraction of
/// samples where the two features differ.
pub fn hamming_matrix(dataset: &BinaryDataset) -> Result<DistanceMatrix> {
    if dataset.n_samples() == 0 {
        return Err(Error::validation("hamming_matrix needs at least one sample"));
    }
    let f = dataset.n_features();
    let s = dataset.n_samples() as f64;
    let mut entries = Array2::zeros((f, f));
    for i in 0..f {
        for j in i + 1..f {
            let differing = dataset
                .samples()
                .iter()
                .filter(|&&x| (x >> i ^ x >> j) & 1 == 1)
                .count();
            let d = differing as f64 / s;
            entries[(i, j)] = d;
            entries[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { entries })
}

fn entropy_from_counts(counts: &[f64], total: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum()
}

/// Variation of information between two binary columns, from empirical
/// joint counts; `VI = 2 H(X,Y) - H(X) - H(Y)` in nats. The normalized
/// variant divides by the joint entropy; a pair of constant columns gets 0
/// when identical and 1 otherwise.
fn vi_pair(col_i: &[u8], col_j: &[u8], normalized: bool) -> f64 {
    let mut joint = [0.0f64; 4];
    for (&a, &b) in col_i.iter().zip(col_j) {
        joint[(a * 2 + b) as usize] += 1.0;
    }
    let total: f64 = joint.iter().sum();
    let h_joint = entropy_from_counts(&joint, total);
    if h_joint <= 0.0 {
        // Both columns constant.
        let identical = joint[0] == total || joint[3] == total;
        return if identical {
            0.0
        } else if normalized {
            1.0
        } else {
            0.0
        };
    }
    let hx = entropy_from_counts(&[joint[0] + joint[1], joint[2] + joint[3]], total);
    let hy = entropy_from_counts(&[joint[0] + joint[2], joint[1] + joint[3]], total);
    let vi = (2.0 * h_joint - hx - hy).max(0.0);
    if normalized {
        vi / h_joint
    } else {
        vi
    }
}

/// Pairwise variation of information between feature columns.
pub fn vi_matrix(dataset: &BinaryDataset, normalized: bool) -> Result<DistanceMatrix> {
    if dataset.n_samples() == 0 {
        return Err(Error::validation("vi_matrix needs at least one sample"));
    }
    let f = dataset.n_features();
    let columns: Vec<Vec<u8>> = (0..f).map(|i| dataset.column(i)).collect();
    let mut entries = Array2::zeros((f, f));
    for i in 0..f {
        for j in i + 1..f {
            let d = vi_pair(&columns[i], &columns[j], normalized);
            entries[(i, j)] = d;
            entries[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix { entries })
}

/// Union of the baseline with every pair at distance <= threshold (ties at
/// the threshold are included).
pub fn threshold_graph(
    matrix: &DistanceMatrix,
    threshold: f64,
    baseline: &SimilarityGraph,
) -> Result<SimilarityGraph> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::validation(format!(
            "threshold must be in [0,1], got {threshold}"
        )));
    }
    if baseline.n_vertices() != matrix.size() {
        return Err(Error::validation(format!(
            "baseline has {} vertices, matrix has {}",
            baseline.n_vertices(),
            matrix.size()
        )));
    }
    let f = matrix.size();
    let mut edges: BTreeSet<Edge> = baseline.baseline_edges().collect();
    for i in 0..f {
        for j in i + 1..f {
            if matrix.get(i, j) <= threshold {
                edges.insert((i, j));
            }
        }
    }
    SimilarityGraph::new(f, edges, baseline.baseline_edges().collect())
}

/// Number of thresholded pairs (baseline not included) per threshold; the
/// counts are monotone non-decreasing along an ascending grid.
pub fn connections_vs_threshold(
    matrix: &DistanceMatrix,
    thresholds: &[f64],
) -> Result<Vec<(f64, usize)>> {
    if thresholds.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::validation("threshold grid must be sorted ascending"));
    }
    let f = matrix.size();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let count = (0..f)
                .flat_map(|i| (i + 1..f).map(move |j| (i, j)))
                .filter(|&(i, j)| matrix.get(i, j) <= t)
                .count();
            (t, count)
        })
        .collect())
}

/// Build one of the preset connectivities on `n` vertices over the given
/// baseline (`Linear` ignores the baseline and becomes its own).
pub fn preset_graph(
    kind: &PresetKind,
    n: usize,
    baseline: &SimilarityGraph,
) -> Result<SimilarityGraph> {
    match kind {
        PresetKind::Linear { order } => linear_graph(order),
        PresetKind::GridNn { rows, cols } => {
            if rows * cols != n {
                return Err(Error::validation(format!(
                    "{rows}x{cols} grid does not cover {n} vertices"
                )));
            }
            let mut edges: BTreeSet<Edge> = baseline.baseline_edges().collect();
            for r in 0..*rows {
                for c in 0..*cols {
                    let v = r * cols + c;
                    if c + 1 < *cols {
                        edges.insert(normalized_edge(v, v + 1));
                    }
                    if r + 1 < *rows {
                        edges.insert(normalized_edge(v, v + cols));
                    }
                }
            }
            SimilarityGraph::new(n, edges, baseline.baseline_edges().collect())
        }
        PresetKind::AllToAll => {
            let edges: BTreeSet<Edge> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .collect();
            SimilarityGraph::new(n, edges, baseline.baseline_edges().collect())
        }
        PresetKind::RandomExtension { count, seed } => {
            let base: BTreeSet<Edge> = baseline.baseline_edges().collect();
            let candidates: Vec<Edge> = (0..n)
                .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                .filter(|e| !base.contains(e))
                .collect();
            if *count > candidates.len() {
                return Err(Error::validation(format!(
                    "cannot draw {count} extension edges from {} candidates",
                    candidates.len()
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut picked = candidates;
            picked.shuffle(&mut rng);
            let mut edges = base.clone();
            edges.extend(picked.into_iter().take(*count));
            SimilarityGraph::new(n, edges, base)
        }
    }
}

/// Chain along the given vertex order; the result is its own baseline.
pub fn linear_graph(order: &[usize]) -> Result<SimilarityGraph> {
    let n = order.len();
    crate::data::invert_permutation(order)?;
    let edges: BTreeSet<Edge> = order
        .windows(2)
        .map(|w| normalized_edge(w[0], w[1]))
        .collect();
    SimilarityGraph::new(n, edges.clone(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_bas, snake_order, BinaryDataset};
    use rand::{Rng, SeedableRng};

    fn dataset_from_columns(cols: &[Vec<u8>]) -> BinaryDataset {
        let s = cols[0].len();
        let samples: Vec<u64> = (0..s)
            .map(|row| {
                cols.iter()
                    .enumerate()
                    .fold(0u64, |acc, (f, c)| acc | ((c[row] as u64) << f))
            })
            .collect();
        BinaryDataset::new(samples, cols.len()).unwrap()
    }

    #[test]
    fn hamming_identical_complementary_and_half() {
        let ds = dataset_from_columns(&[
            vec![0, 0, 1, 1],
            vec![0, 0, 1, 1],
            vec![1, 1, 0, 0],
            vec![0, 1, 1, 0],
        ]);
        let m = hamming_matrix(&ds).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(0, 3), 0.5);
        for i in 0..4 {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn vi_known_values() {
        let x = vec![0, 0, 1, 1];
        let not_x = vec![1, 1, 0, 0];
        let indep = vec![0, 1, 0, 1];
        let ds = dataset_from_columns(&[x, not_x, indep]);
        let raw = vi_matrix(&ds, false).unwrap();
        let norm = vi_matrix(&ds, true).unwrap();
        // X vs NOT X: a bijection, so zero conditional entropies.
        assert!(raw.get(0, 1).abs() < 1e-12);
        assert!(norm.get(0, 1).abs() < 1e-12);
        // Independent fair bits: VI = 2 ln 2, normalized 1.
        assert!((raw.get(0, 2) - 2.0 * 2.0f64.ln()).abs() < 1e-12);
        assert!((norm.get(0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vi_degenerate_constant_columns() {
        let ds = dataset_from_columns(&[vec![0, 0, 0], vec![0, 0, 0], vec![1, 1, 1]]);
        let norm = vi_matrix(&ds, true).unwrap();
        assert_eq!(norm.get(0, 1), 0.0); // identical constants
        assert_eq!(norm.get(0, 2), 1.0); // different constants
    }

    #[test]
    fn vi_is_bounded_and_symmetric_on_random_data() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let cols: Vec<Vec<u8>> = (0..5)
                .map(|_| (0..30).map(|_| rng.gen_range(0..2u8)).collect())
                .collect();
            let ds = dataset_from_columns(&cols);
            let m = vi_matrix(&ds, true).unwrap();
            for i in 0..5 {
                assert_eq!(m.get(i, i), 0.0);
                for j in 0..5 {
                    assert!((0.0..=1.0 + 1e-12).contains(&m.get(i, j)));
                    assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn vi_triangle_inequality_holds() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let cols: Vec<Vec<u8>> = (0..3)
                .map(|_| (0..12).map(|_| rng.gen_range(0..2u8)).collect())
                .collect();
            let ds = dataset_from_columns(&cols);
            let m = vi_matrix(&ds, false).unwrap();
            let (a, b, c) = (m.get(0, 1), m.get(1, 2), m.get(0, 2));
            assert!(c <= a + b + 1e-12, "triangle violated: {c} > {a} + {b}");
            assert!(a <= b + c + 1e-12);
            assert!(b <= a + c + 1e-12);
        }
    }

    #[test]
    fn bas_snake_baseline_has_8_grid_adjacent_edges() {
        let order = snake_order(3, 3);
        let g = linear_graph(&order).unwrap();
        assert_eq!(g.edge_count(), 8);
        assert_eq!(g.extension_edges().len(), 0);
        for (i, j) in g.edges() {
            let (ri, ci) = (i / 3, i % 3);
            let (rj, cj) = (j / 3, j % 3);
            let dist = ri.abs_diff(rj) + ci.abs_diff(cj);
            assert_eq!(dist, 1, "edge ({i},{j}) is not grid-adjacent");
        }
    }

    #[test]
    fn grid_nn_extension_is_the_known_four_edges() {
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let g = preset_graph(&PresetKind::GridNn { rows: 3, cols: 3 }, 9, &baseline).unwrap();
        assert_eq!(
            g.extension_edges(),
            vec![(0, 3), (1, 4), (4, 7), (5, 8)]
        );
    }

    #[test]
    fn all_to_all_extension_has_28_edges_on_9_vertices() {
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let g = preset_graph(&PresetKind::AllToAll, 9, &baseline).unwrap();
        assert_eq!(g.edge_count(), 36);
        assert_eq!(g.extension_edges().len(), 28);
    }

    #[test]
    fn random_extension_is_seeded_and_sized() {
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let kind = PresetKind::RandomExtension { count: 10, seed: 5 };
        let a = preset_graph(&kind, 9, &baseline).unwrap();
        let b = preset_graph(&kind, 9, &baseline).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.edge_count(), 18);
        assert_eq!(a.extension_edges().len(), 10);
        let c = preset_graph(&PresetKind::RandomExtension { count: 10, seed: 6 }, 9, &baseline)
            .unwrap();
        assert_ne!(a, c);
        // Requesting more edges than exist fails.
        assert!(preset_graph(
            &PresetKind::RandomExtension { count: 29, seed: 0 },
            9,
            &baseline
        )
        .is_err());
    }

    #[test]
    fn bas_full_dataset_hamming_at_half_gives_10_extension_edges() {
        // Brute-force oracle: count pairs of pixels differing in at most
        // half of the 14 images, then remove the 8 baseline edges.
        let ds = generate_bas(3, 3).unwrap();
        let m = hamming_matrix(&ds).unwrap();
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let g = threshold_graph(&m, 0.5, &baseline).unwrap();

        let mut oracle = 0usize;
        for i in 0..9 {
            for j in i + 1..9 {
                let differing = ds
                    .samples()
                    .iter()
                    .filter(|&&x| (x >> i ^ x >> j) & 1 == 1)
                    .count();
                if differing as f64 / 14.0 <= 0.5 {
                    oracle += 1;
                }
            }
        }
        assert_eq!(oracle, 18);
        assert_eq!(g.extension_edges().len(), 10);
        assert_eq!(g.edge_count(), 18);
    }

    #[test]
    fn threshold_edges_grow_monotonically() {
        let ds = generate_bas(3, 3).unwrap();
        let m = hamming_matrix(&ds).unwrap();
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let curve = connections_vs_threshold(&m, &grid).unwrap();
        for w in curve.windows(2) {
            assert!(w[0].1 <= w[1].1);
        }
        assert_eq!(curve.last().unwrap().1, 36); // hamming <= 1 always
        let mut prev: Option<SimilarityGraph> = None;
        for t in [0.0, 0.3, 0.5, 0.9, 1.0] {
            let g = threshold_graph(&m, t, &baseline).unwrap();
            if let Some(p) = prev {
                let prev_edges: BTreeSet<Edge> = p.edges().collect();
                let cur_edges: BTreeSet<Edge> = g.edges().collect();
                assert!(prev_edges.is_subset(&cur_edges));
            }
            prev = Some(g);
        }
    }

    #[test]
    fn constant_matrix_curve_steps_at_the_value() {
        let entries = Array2::from_shape_fn((4, 4), |(i, j)| if i == j { 0.0 } else { 0.3 });
        let m = DistanceMatrix { entries };
        let curve = connections_vs_threshold(&m, &[0.2, 0.4]).unwrap();
        assert_eq!(curve, vec![(0.2, 0), (0.4, 6)]);
    }

    #[test]
    fn threshold_below_everything_keeps_baseline_only() {
        let ds = generate_bas(3, 3).unwrap();
        let m = hamming_matrix(&ds).unwrap();
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let g = threshold_graph(&m, 0.01, &baseline).unwrap();
        assert!(g.extension_edges().is_empty());
        assert_eq!(g.edge_count(), 8);
    }

    #[test]
    fn relabel_moves_edges_through_the_permutation() {
        let baseline = linear_graph(&[0, 1, 2]).unwrap();
        let g = preset_graph(&PresetKind::AllToAll, 3, &baseline).unwrap();
        let r = g.relabel(&[2, 0, 1]).unwrap();
        assert_eq!(r.edge_count(), 3);
        let base: Vec<Edge> = r.baseline_edges().collect();
        assert_eq!(base, vec![(0, 1), (0, 2)]);
    }

    #[test]
    fn graph_text_roundtrip() {
        let baseline = linear_graph(&snake_order(3, 3)).unwrap();
        let g = preset_graph(&PresetKind::GridNn { rows: 3, cols: 3 }, 9, &baseline).unwrap();
        let text = g.to_text();
        let back = SimilarityGraph::from_text(&text, 9).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn matrix_csv_is_square_and_symmetric() {
        let ds = generate_bas(3, 3).unwrap();
        let m = hamming_matrix(&ds).unwrap();
        let csv = m.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert_eq!(row.split(',').count(), 9);
        }
    }
}
