//! Canonical tensor-chain storage shared by the real-valued training path
//! and the complex decomposition path.
//!
//! A chain of `n` rank-3 tensors with shapes `(chi_{k-1}, 2, chi_k)`,
//! `chi_0 = chi_n = 1`. Two invariants are maintained after every
//! operation: sites left of `center` are left-isometries, sites right of it
//! are right-isometries, and the global norm is 1 (the center carries it).

use crate::error::{Error, Result};
use crate::linalg::{svd, Scalar};
use ndarray::{Array2, Array3};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct TensorChain<T> {
    sites: Vec<Array3<T>>,
    center: usize,
}

fn matmul<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> Array2<T> {
    let (m, k) = a.dim();
    let (k2, n) = b.dim();
    debug_assert_eq!(k, k2);
    let mut out = Array2::from_elem((m, n), T::ZERO);
    for i in 0..m {
        for l in 0..k {
            let ail = a[(i, l)];
            if ail == T::ZERO {
                continue;
            }
            for j in 0..n {
                out[(i, j)] = out[(i, j)] + ail * b[(l, j)];
            }
        }
    }
    out
}

impl<T: Scalar> TensorChain<T> {
    /// Build a chain from raw tensors, canonicalize to the given center and
    /// normalize. Rejects inconsistent bond shapes.
    pub fn from_tensors(sites: Vec<Array3<T>>, center: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::validation("tensor chain needs at least one site"));
        }
        if center >= sites.len() {
            return Err(Error::index(format!(
                "center {center} out of range for {} sites",
                sites.len()
            )));
        }
        for (k, t) in sites.iter().enumerate() {
            let (l, p, r) = t.dim();
            if p != 2 {
                return Err(Error::validation(format!(
                    "site {k} has physical dimension {p}, expected 2"
                )));
            }
            if k == 0 && l != 1 {
                return Err(Error::validation("left boundary bond must be 1"));
            }
            if k + 1 == sites.len() && r != 1 {
                return Err(Error::validation("right boundary bond must be 1"));
            }
            if k > 0 && sites[k - 1].dim().2 != l {
                return Err(Error::validation(format!(
                    "bond mismatch between sites {} and {k}",
                    k - 1
                )));
            }
        }
        let mut chain = TensorChain { sites, center: 0 };
        chain.restore_canonical(center)?;
        Ok(chain)
    }

    /// Adopt tensors that are already in canonical form at `center` (e.g.
    /// from a checkpoint or a scalar-type conversion) without regauging, so
    /// the values survive bit-exactly. Shapes are validated; the isometry
    /// conditions are checked loosely.
    pub fn from_canonical_parts(sites: Vec<Array3<T>>, center: usize) -> Result<Self> {
        if sites.is_empty() || center >= sites.len() {
            return Err(Error::validation("bad site count or center"));
        }
        for (k, t) in sites.iter().enumerate() {
            let (l, p, r) = t.dim();
            if p != 2
                || (k == 0 && l != 1)
                || (k + 1 == sites.len() && r != 1)
                || (k > 0 && sites[k - 1].dim().2 != l)
            {
                return Err(Error::validation(format!("inconsistent shape at site {k}")));
            }
        }
        let chain = TensorChain { sites, center };
        if chain.canonical_error() > 1e-6 {
            return Err(Error::validation(
                "tensors are not in canonical form at the stated center",
            ));
        }
        Ok(chain)
    }

    pub fn n(&self) -> usize {
        self.sites.len()
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn site(&self, k: usize) -> &Array3<T> {
        &self.sites[k]
    }

    pub fn sites(&self) -> &[Array3<T>] {
        &self.sites
    }

    /// Bond dimensions `chi_0..chi_n` (length n+1, ones at the ends).
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = Vec::with_capacity(self.n() + 1);
        dims.push(1);
        for t in &self.sites {
            dims.push(t.dim().2);
        }
        dims
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn site_as_matrix_left(&self, k: usize) -> Array2<T> {
        // (chi_l * 2, chi_r)
        let (l, _, r) = self.sites[k].dim();
        Array2::from_shape_fn((l * 2, r), |(row, col)| {
            self.sites[k][(row / 2, row % 2, col)]
        })
    }

    fn site_as_matrix_right(&self, k: usize) -> Array2<T> {
        // (chi_l, 2 * chi_r)
        let (l, _, r) = self.sites[k].dim();
        Array2::from_shape_fn((l, 2 * r), |(row, col)| {
            self.sites[k][(row, col / r, col % r)]
        })
    }

    fn set_site_from_left(&mut self, k: usize, m: &Array2<T>) {
        let (rows, r) = m.dim();
        let l = rows / 2;
        self.sites[k] = Array3::from_shape_fn((l, 2, r), |(a, s, b)| m[(a * 2 + s, b)]);
    }

    fn set_site_from_right(&mut self, k: usize, m: &Array2<T>) {
        let (l, cols) = m.dim();
        let r = cols / 2;
        self.sites[k] = Array3::from_shape_fn((l, 2, r), |(a, s, b)| m[(a, s * r + b)]);
    }

    /// Left-orthonormalize site k, pushing the remainder into site k+1.
    fn push_right(&mut self, k: usize) {
        let f = svd(&self.site_as_matrix_left(k));
        let rank = f.s.len();
        self.set_site_from_left(k, &f.u);
        // (diag(s) * vt) contracted into site k+1.
        let mut sv = f.vt.clone();
        for (row, &sval) in f.s.iter().enumerate().take(rank) {
            for col in 0..sv.dim().1 {
                sv[(row, col)] = sv[(row, col)].scale(sval);
            }
        }
        let next = self.site_as_matrix_right(k + 1);
        let merged = matmul(&sv, &next);
        self.set_site_from_right(k + 1, &merged);
    }

    /// Right-orthonormalize site k, pushing the remainder into site k-1.
    fn push_left(&mut self, k: usize) {
        let f = svd(&self.site_as_matrix_right(k));
        self.set_site_from_right(k, &f.vt);
        let mut us = f.u.clone();
        for (col, &sval) in f.s.iter().enumerate() {
            for row in 0..us.dim().0 {
                us[(row, col)] = us[(row, col)].scale(sval);
            }
        }
        let prev = self.site_as_matrix_left(k - 1);
        let merged = matmul(&prev, &us);
        self.set_site_from_left(k - 1, &merged);
    }

    /// Establish the canonical form from scratch (no assumptions about the
    /// current gauge) and normalize.
    fn restore_canonical(&mut self, center: usize) -> Result<()> {
        for k in 0..self.n() - 1 {
            self.push_right(k);
        }
        self.center = self.n() - 1;
        self.move_center(center);
        self.normalize();
        Ok(())
    }

    /// Move the canonical center, preserving the state exactly.
    pub fn move_center(&mut self, target: usize) {
        while self.center < target {
            self.push_right(self.center);
            self.center += 1;
        }
        while self.center > target {
            self.push_left(self.center);
            self.center -= 1;
        }
    }

    /// Norm of the center tensor; equals the state norm in canonical form.
    pub fn norm(&self) -> f64 {
        self.sites[self.center]
            .iter()
            .map(|x| x.abs2())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.sites[self.center].mapv_inplace(|x| x.scale(inv));
        }
    }

    /// Merge sites k and k+1 into a (chi_l*2, 2*chi_r) matrix. The center
    /// must sit on one of the two sites.
    pub fn merge_pair(&self, k: usize) -> Array2<T> {
        debug_assert!(self.center == k || self.center == k + 1);
        let a = &self.sites[k];
        let b = &self.sites[k + 1];
        let (l, _, mid) = a.dim();
        let (_, _, r) = b.dim();
        let mut out = Array2::from_elem((l * 2, 2 * r), T::ZERO);
        for ai in 0..l {
            for s in 0..2 {
                for c in 0..mid {
                    let av = a[(ai, s, c)];
                    if av == T::ZERO {
                        continue;
                    }
                    for t in 0..2 {
                        for bi in 0..r {
                            out[(ai * 2 + s, t * r + bi)] =
                                out[(ai * 2 + s, t * r + bi)] + av * b[(c, t, bi)];
                        }
                    }
                }
            }
        }
        out
    }

    /// Split a merged two-site matrix back into sites k and k+1, truncating
    /// singular values whose squared relative weight falls below `cutoff`
    /// (and capping the bond at `max_bond`). The kept spectrum is rescaled
    /// to unit norm so the chain stays normalized; the discarded relative
    /// weight is returned. The center lands on k+1 when `move_right`, else
    /// on k.
    pub fn split_pair(
        &mut self,
        k: usize,
        merged: &Array2<T>,
        cutoff: f64,
        max_bond: Option<usize>,
        move_right: bool,
    ) -> f64 {
        let (rows, cols) = merged.dim();
        let l = rows / 2;
        let r = cols / 2;
        let f = svd(merged);
        let total: f64 = f.s.iter().map(|s| s * s).sum();
        let mut keep = 0usize;
        for (i, &s) in f.s.iter().enumerate() {
            let rel = if total > 0.0 { s * s / total } else { 0.0 };
            if i > 0 && rel < cutoff {
                break;
            }
            keep = i + 1;
        }
        if let Some(cap) = max_bond {
            keep = keep.min(cap.max(1));
        }
        keep = keep.max(1);
        let kept: f64 = f.s[..keep].iter().map(|s| s * s).sum();
        let discarded = if total > 0.0 { (total - kept) / total } else { 0.0 };
        let rescale = if kept > 0.0 { 1.0 / kept.sqrt() } else { 0.0 };

        let mut left = Array3::from_elem((l, 2, keep), T::ZERO);
        let mut right = Array3::from_elem((keep, 2, r), T::ZERO);
        for c in 0..keep {
            let sval = f.s[c];
            for a in 0..l {
                for s in 0..2 {
                    let u = f.u[(a * 2 + s, c)];
                    left[(a, s, c)] = if move_right { u } else { u.scale(sval * rescale) };
                }
            }
            for t in 0..2 {
                for b in 0..r {
                    let v = f.vt[(c, t * r + b)];
                    right[(c, t, b)] = if move_right { v.scale(sval * rescale) } else { v };
                }
            }
        }
        self.sites[k] = left;
        self.sites[k + 1] = right;
        self.center = if move_right { k + 1 } else { k };
        discarded
    }

    /// Truncate every bond by relative squared weight; returns the total
    /// discarded weight. The chain is renormalized.
    pub fn truncate(&mut self, cutoff: f64, max_bond: Option<usize>) -> f64 {
        self.move_center(0);
        let mut discarded = 0.0;
        for k in 0..self.n() - 1 {
            let merged = self.merge_pair(k);
            discarded += self.split_pair(k, &merged, cutoff, max_bond, true);
        }
        self.move_center(0);
        self.normalize();
        discarded
    }

    /// Amplitude of one computational basis state (bit q of `bits` is the
    /// physical index of site q).
    pub fn amplitude(&self, bits: u64) -> T {
        let mut v: Vec<T> = vec![T::ONE];
        for (k, site) in self.sites.iter().enumerate() {
            let s = (bits >> k & 1) as usize;
            let (l, _, r) = site.dim();
            let mut next = vec![T::ZERO; r];
            for (a, &va) in v.iter().enumerate().take(l) {
                if va == T::ZERO {
                    continue;
                }
                for (b, n) in next.iter_mut().enumerate() {
                    *n = *n + va * site[(a, s, b)];
                }
            }
            v = next;
        }
        v[0]
    }

    /// Dense amplitude vector over all 2^n basis states.
    pub fn to_dense(&self) -> Vec<T> {
        let mut amps: Vec<Vec<T>> = vec![vec![T::ONE]];
        for site in &self.sites {
            let (l, _, r) = site.dim();
            let mut next = Vec::with_capacity(amps.len() * 2);
            for s in 0..2 {
                for v in &amps {
                    let mut row = vec![T::ZERO; r];
                    for (a, &va) in v.iter().enumerate().take(l) {
                        if va == T::ZERO {
                            continue;
                        }
                        for (b, n) in row.iter_mut().enumerate() {
                            *n = *n + va * site[(a, s, b)];
                        }
                    }
                    next.push(row);
                }
            }
            amps = next;
        }
        amps.into_iter().map(|v| v[0]).collect()
    }

    /// Maximum deviation from the canonical isometry conditions; used by
    /// tests and debug assertions.
    pub fn canonical_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..self.n() {
            if k < self.center {
                let m = self.site_as_matrix_left(k);
                worst = worst.max(isometry_error_columns(&m));
            } else if k > self.center {
                let m = self.site_as_matrix_right(k);
                worst = worst.max(isometry_error_rows(&m));
            }
        }
        worst
    }
}

fn isometry_error_columns<T: Scalar>(m: &Array2<T>) -> f64 {
    let (rows, cols) = m.dim();
    let mut worst = 0.0f64;
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = T::ZERO;
            for k in 0..rows {
                acc = acc + m[(k, i)].conj() * m[(k, j)];
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc.to_c64() - crate::linalg::C64::new(want, 0.0)).norm());
        }
    }
    worst
}

fn isometry_error_rows<T: Scalar>(m: &Array2<T>) -> f64 {
    let (rows, cols) = m.dim();
    let mut worst = 0.0f64;
    for i in 0..rows {
        for j in 0..rows {
            let mut acc = T::ZERO;
            for k in 0..cols {
                acc = acc + m[(i, k)] * m[(j, k)].conj();
            }
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc.to_c64() - crate::linalg::C64::new(want, 0.0)).norm());
        }
    }
    worst
}
