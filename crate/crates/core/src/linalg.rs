//! Small dense complex linear algebra on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::poly::C64;

pub type CMat = DMatrix<C64>;

pub fn mat_from_rows(rows: &[Vec<C64>], ncols: usize) -> CMat {
    CMat::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}

/// Singular values in ascending order. Empty matrices have none.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| x.total_cmp(y));
    s
}

/// Smallest singular value counting `ncols` of them: a wide matrix has
/// `ncols - nrows` implicit zeros, so injectivity tests on columns stay
/// meaningful.
pub fn sigma_min_cols(a: &CMat) -> f64 {
    if a.ncols() == 0 {
        return f64::INFINITY;
    }
    if a.nrows() < a.ncols() {
        return 0.0;
    }
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// The `k`-th smallest singular value (1-based) among `ncols` values, with
/// implicit zeros for wide matrices.
pub fn kth_smallest_sv_cols(a: &CMat, k: usize) -> f64 {
    let n = a.ncols();
    assert!(k >= 1 && k <= n);
    let zeros = n.saturating_sub(a.nrows());
    if k <= zeros {
        return 0.0;
    }
    singular_values(a)[k - zeros - 1]
}

pub fn hnorm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product, conjugate-linear in the first slot.
pub fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn normalize(v: &[C64]) -> Vec<C64> {
    let n = hnorm(v);
    v.iter().map(|x| x / n).collect()
}

/// Gram-Schmidt with one reorthogonalization pass. Vectors whose residual
/// falls below `tol` are dropped.
pub fn gram_schmidt(vectors: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = hdot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let nw = hnorm(&w);
        if nw > tol {
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    basis
}

/// Solves a square system by LU; `None` when singular.
pub fn solve(a: &CMat, b: &[C64]) -> Option<Vec<C64>> {
    let rhs = nalgebra::DVector::from_column_slice(b);
    a.clone().lu().solve(&rhs).map(|x| x.iter().copied().collect())
}

/// Random unitary matrix from the QR factorization of a complex Gaussian
/// matrix, phases fixed so the distribution is Haar.
pub fn random_unitary<R: rand::Rng>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| gaussian_c(rng));
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, j)] = q[(i, j)] * ph;
        }
    }
    u
}

/// Standard complex Gaussian sample with unit variance.
pub fn gaussian_c<R: rand::Rng>(rng: &mut R) -> C64 {
    let (a, b) = box_muller(rng);
    Complex::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
}

fn box_muller<R: rand::Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let t = std::f64::consts::TAU * u2;
    (r * t.cos(), r * t.sin())
}

/// Uniform sample on the unit sphere of `C^n`.
pub fn random_unit<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..n).map(|_| gaussian_c(rng)).collect();
    normalize(&v)
}
