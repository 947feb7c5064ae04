//! Small dense linear algebra used by the gate and tensor code.
//!
//! Gate matrices are fixed-size 2x2 / 4x4 complex arrays. The 4x4 index
//! convention is `2 * (bit of first target) + (bit of second target)`, so the
//! first target qubit is the high bit of the local basis index.
//!
//! The SVD is a one-sided Jacobi routine written once, generic over real and
//! complex scalars. It is deterministic for identical input (fixed sweep
//! order, no randomness) and fixes the sign gauge by rotating each left
//! singular vector so its largest-magnitude entry is positive real.

use ndarray::Array2;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];
pub type Mat4 = [[C64; 4]; 4];

pub const C_ZERO: C64 = C64::new(0.0, 0.0);
pub const C_ONE: C64 = C64::new(1.0, 0.0);

pub fn mat2_id() -> Mat2 {
    [[C_ONE, C_ZERO], [C_ZERO, C_ONE]]
}

pub fn mat4_id() -> Mat4 {
    let mut m = [[C_ZERO; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C_ONE;
    }
    m
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[C_ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[C_ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = C_ZERO;
            for (k, bk) in b.iter().enumerate() {
                acc += a[i][k] * bk[j];
            }
            c[i][j] = acc;
        }
    }
    c
}

pub fn mat4_dagger(a: &Mat4) -> Mat4 {
    let mut c = [[C_ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = a[j][i].conj();
        }
    }
    c
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

pub fn mat4_scale(a: &Mat4, z: C64) -> Mat4 {
    let mut c = *a;
    for row in &mut c {
        for e in row {
            *e *= z;
        }
    }
    c
}

/// Kronecker product with `a` on the high (first-target) bit.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut c = [[C_ZERO; 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    c[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    c
}

pub fn mat4_max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut m = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

pub fn is_unitary2(u: &Mat2, tol: f64) -> bool {
    let p = mat2_mul(&mat2_dagger(u), u);
    let mut m = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let want = if i == j { C_ONE } else { C_ZERO };
            m = m.max((p[i][j] - want).norm());
        }
    }
    m <= tol
}

pub fn is_unitary4(u: &Mat4, tol: f64) -> bool {
    let p = mat4_mul(&mat4_dagger(u), u);
    mat4_max_abs_diff(&p, &mat4_id()) <= tol
}

/// Determinant of a 4x4 complex matrix by Gaussian elimination with partial
/// pivoting.
pub fn mat4_det(a: &Mat4) -> C64 {
    let mut m = *a;
    let mut det = C_ONE;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| {
                m[i][col]
                    .norm()
                    .partial_cmp(&m[j][col].norm())
                    .expect("matrix entries must be finite")
            })
            .unwrap();
        if m[pivot][col].norm() == 0.0 {
            return C_ZERO;
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                let sub = f * m[col][k];
                m[row][k] -= sub;
            }
        }
    }
    det
}

/// Scalar abstraction so the tensor and SVD code can run on real values
/// during MPS training and on complex values everywhere else.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
    + std::iter::Sum
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn from_f64(x: f64) -> Self;
    fn scale(self, x: f64) -> Self;
    fn to_c64(self) -> C64;
    fn abs(self) -> f64 {
        self.abs2().sqrt()
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn to_c64(self) -> C64 {
        C64::new(self, 0.0)
    }
}

impl Scalar for C64 {
    const ZERO: Self = C64::new(0.0, 0.0);
    const ONE: Self = C64::new(1.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn from_f64(x: f64) -> Self {
        C64::new(x, 0.0)
    }
    fn scale(self, x: f64) -> Self {
        self * x
    }
    fn to_c64(self) -> C64 {
        self
    }
}

/// Thin singular value decomposition `a = u * diag(s) * vt`.
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Vec<f64>,
    pub vt: Array2<T>,
}

const JACOBI_EPS: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 64;

/// One-sided Jacobi SVD. Singular values come out sorted descending; the
/// gauge is fixed by making the largest-magnitude entry of each left
/// singular vector positive real.
pub fn svd<T: Scalar>(a: &Array2<T>) -> Svd<T> {
    let (m, n) = a.dim();
    assert!(m > 0 && n > 0, "svd of an empty matrix");
    if m < n {
        // A = (A^dag)^dag: run on the conjugate transpose and swap factors.
        let at = Array2::from_shape_fn((n, m), |(i, j)| a[(j, i)].conj());
        let inner = svd_tall(&at);
        let u = inner.vt.t().mapv(|x| x.conj());
        let vt = inner.u.t().mapv(|x| x.conj());
        return fix_gauge(Svd { u, s: inner.s, vt });
    }
    fix_gauge(svd_tall(a))
}

fn svd_tall<T: Scalar>(a: &Array2<T>) -> Svd<T> {
    let (m, n) = a.dim();
    debug_assert!(m >= n);
    let mut b = a.clone();
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| if i == j { T::ONE } else { T::ZERO });

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = T::ZERO;
                for k in 0..m {
                    let bp = b[(k, p)];
                    let bq = b[(k, q)];
                    app += bp.abs2();
                    aqq += bq.abs2();
                    apq = apq + bp.conj() * bq;
                }
                let g = apq.abs();
                if g <= JACOBI_EPS * (app * aqq).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Unitary column rotation diag(1, conj(w)) * Givens(c, s)
                // with w the phase of the off-diagonal Gram entry.
                let w = apq.scale(1.0 / g);
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let wc = w.conj();
                for k in 0..m {
                    let bp = b[(k, p)];
                    let bq = b[(k, q)];
                    b[(k, p)] = bp.scale(c) - (wc * bq).scale(s);
                    b[(k, q)] = bp.scale(s) + (wc * bq).scale(c);
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp.scale(c) - (wc * vq).scale(s);
                    v[(k, q)] = vp.scale(s) + (wc * vq).scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|k| b[(k, j)].abs2()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut u = Array2::from_elem((m, n), T::ZERO);
    let mut vt = Array2::from_elem((n, n), T::ZERO);
    let mut s = vec![0.0f64; n];
    let scale_floor = norms.iter().cloned().fold(0.0f64, f64::max) * 1e-300 + f64::MIN_POSITIVE;
    for (slot, &j) in order.iter().enumerate() {
        s[slot] = norms[j];
        if norms[j] > scale_floor {
            for k in 0..m {
                u[(k, slot)] = b[(k, j)].scale(1.0 / norms[j]);
            }
        }
        for k in 0..n {
            vt[(slot, k)] = v[(k, j)].conj();
        }
    }
    // Columns whose singular value is numerically zero get an orthonormal
    // completion so U stays an isometry.
    for slot in 0..n {
        if s[slot] > scale_floor {
            continue;
        }
        complete_column(&mut u, slot);
    }
    Svd { u, s, vt }
}

/// Replace column `slot` of `u` with a unit vector orthogonal to all other
/// columns, chosen deterministically from the standard basis.
fn complete_column<T: Scalar>(u: &mut Array2<T>, slot: usize) {
    let (m, n) = u.dim();
    for cand in 0..m {
        let mut col: Vec<T> = (0..m)
            .map(|k| if k == cand { T::ONE } else { T::ZERO })
            .collect();
        for j in 0..n {
            if j == slot {
                continue;
            }
            let proj: T = (0..m).map(|k| u[(k, j)].conj() * col[k]).sum();
            for (k, c) in col.iter_mut().enumerate() {
                *c = *c - u[(k, j)] * proj;
            }
        }
        let norm = col.iter().map(|x| x.abs2()).sum::<f64>().sqrt();
        if norm > 0.5 {
            for (k, c) in col.iter().enumerate() {
                u[(k, slot)] = c.scale(1.0 / norm);
            }
            return;
        }
    }
    panic!("orthonormal completion failed; matrix has more columns than rows");
}

fn fix_gauge<T: Scalar>(mut svd: Svd<T>) -> Svd<T> {
    let (m, k) = svd.u.dim();
    let n = svd.vt.dim().1;
    for j in 0..k {
        let mut best = 0usize;
        let mut best_mag = -1.0f64;
        for i in 0..m {
            let mag = svd.u[(i, j)].abs2();
            if mag > best_mag + 1e-30 {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = svd.u[(best, j)];
        let mag = pivot.abs();
        if mag == 0.0 {
            continue;
        }
        let phase = pivot.scale(1.0 / mag);
        let phase_conj = phase.conj();
        for i in 0..m {
            svd.u[(i, j)] = svd.u[(i, j)] * phase_conj;
        }
        if j < svd.s.len() && svd.s[j] > 0.0 {
            for i in 0..n {
                svd.vt[(j, i)] = svd.vt[(j, i)] * phase;
            }
        }
    }
    svd
}

/// Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, eigenvectors as columns); no ordering is imposed.
pub fn symmetric_eig(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.dim().0;
    assert_eq!(a.dim().0, a.dim().1, "symmetric_eig needs a square matrix");
    let mut m = a.clone();
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 });
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)].abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(m[(p, q)].abs());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-18 * scale {
                    continue;
                }
                let tau = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigs = (0..n).map(|i| m[(i, i)]).collect();
    (eigs, v)
}

/// Haar-random 4x4 unitary from a QR factorization of a Ginibre matrix;
/// deterministic given the RNG state.
pub fn haar_unitary4<R: rand::Rng>(rng: &mut R) -> Mat4 {
    use rand_distr::StandardNormal;
    let mut g = [[C_ZERO; 4]; 4];
    for row in &mut g {
        for e in row.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *e = C64::new(re, im);
        }
    }
    // Modified Gram-Schmidt. Dividing by the real residual norm is the
    // positive-diagonal R convention, which makes Q exactly Haar.
    let mut q = [[C_ZERO; 4]; 4];
    for j in 0..4 {
        let mut col = [g[0][j], g[1][j], g[2][j], g[3][j]];
        for prev in 0..j {
            let mut dot = C_ZERO;
            for k in 0..4 {
                dot += q[k][prev].conj() * col[k];
            }
            for k in 0..4 {
                col[k] -= dot * q[k][prev];
            }
        }
        let norm: f64 = col.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        for k in 0..4 {
            q[k][j] = col[k] / norm;
        }
    }
    q
}
