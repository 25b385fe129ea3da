//! Multistart minimization on products of complex Stiefel manifolds (unit
//! spheres being the one-column case) and a small Nelder-Mead for
//! derivative-free searches.
//!
//! Restarts run in parallel; each draws from its own ChaCha stream keyed by
//! the restart index and results are reduced in index order, so the output
//! does not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{gaussian_c, CMat};
use crate::poly::C64;

/// A smooth real objective on a product of Stiefel manifolds
/// `St(n_b, k_b)`. Gradients are Euclidean gradients for the real inner
/// product `Re tr(A^H B)`, i.e. `2 df/d conj(X)`.
pub trait Objective: Sync {
    fn blocks(&self) -> Vec<(usize, usize)>;
    fn value(&self, x: &[CMat]) -> f64;
    fn value_grad(&self, x: &[CMat]) -> (f64, Vec<CMat>);
}

#[derive(Debug, Clone, Copy)]
pub struct PgdOptions {
    pub max_iter: usize,
    /// Stop once the Riemannian gradient norm drops below this.
    pub grad_tol: f64,
    /// Stop once the value drops below this (useful for zero searches).
    pub value_tol: f64,
}

impl Default for PgdOptions {
    fn default() -> Self {
        PgdOptions {
            max_iter: 3000,
            grad_tol: 1e-13,
            value_tol: 1e-30,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinResult {
    pub x: Vec<CMat>,
    pub value: f64,
    pub iterations: usize,
    pub start: usize,
}

/// Orthonormalizes the columns of `a` (the QR retraction).
pub fn qr_retract(a: &CMat) -> CMat {
    let (n, k) = a.shape();
    let mut q = a.clone();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let c = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).into_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-c, &qi, C64::new(1.0, 0.0));
            }
        }
        let nrm = q.column(j).norm();
        if nrm < 1e-300 {
            // degenerate direction; replace by a standard basis vector
            let mut e = CMat::zeros(n, 1);
            e[(j % n, 0)] = C64::new(1.0, 0.0);
            q.set_column(j, &e.column(0));
            return qr_retract(&q);
        }
        q.column_mut(j).unscale_mut(nrm);
    }
    q
}

/// Projection of `g` to the tangent space of the Stiefel manifold at `x`.
pub fn tangent_project(x: &CMat, g: &CMat) -> CMat {
    let xg = x.adjoint() * g;
    let herm = (&xg + xg.adjoint()) * C64::new(0.5, 0.0);
    g - x * herm
}

pub fn random_point<R: rand::Rng>(blocks: &[(usize, usize)], rng: &mut R) -> Vec<CMat> {
    blocks
        .iter()
        .map(|&(n, k)| qr_retract(&CMat::from_fn(n, k, |_, _| gaussian_c(rng))))
        .collect()
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dotc(y).re).sum()
}

/// Projected gradient descent with Armijo backtracking and
/// Barzilai-Borwein initial steps.
pub fn pgd<O: Objective + ?Sized>(obj: &O, x0: Vec<CMat>, opts: &PgdOptions) -> MinResult {
    let mut x = x0;
    let (mut f, g) = obj.value_grad(&x);
    let mut rg: Vec<CMat> = x.iter().zip(&g).map(|(xi, gi)| tangent_project(xi, gi)).collect();
    let mut step = 1.0;
    let mut prev: Option<(Vec<CMat>, Vec<CMat>)> = None;
    let mut it = 0;
    while it < opts.max_iter {
        let gn2 = inner(&rg, &rg);
        if gn2.sqrt() < opts.grad_tol || f < opts.value_tol {
            break;
        }
        if let Some((px, pg)) = &prev {
            let s: Vec<CMat> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<CMat> = rg.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = inner(&s, &y);
            if sy > 0.0 {
                step = (inner(&s, &s) / sy).clamp(1e-8, 1e4);
            } else {
                step = (step * 2.0).min(1e4);
            }
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<CMat> = x
                .iter()
                .zip(&rg)
                .map(|(xi, gi)| qr_retract(&(xi - gi * C64::new(t, 0.0))))
                .collect();
            let fc = obj.value(&cand);
            if fc <= f - 1e-4 * t * gn2 {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, fnew)) = accepted else { break };
        let (_, gnew) = obj.value_grad(&xn);
        let rgn: Vec<CMat> = xn.iter().zip(&gnew).map(|(xi, gi)| tangent_project(xi, gi)).collect();
        prev = Some((std::mem::replace(&mut x, xn), std::mem::replace(&mut rg, rgn)));
        f = fnew;
        it += 1;
    }
    MinResult {
        x,
        value: f,
        iterations: it,
        start: 0,
    }
}

/// Runs `pgd` from each point in `starts` and from `restarts` random
/// points, returning the best (ties go to the lowest start index).
pub fn multistart<O: Objective + ?Sized>(
    obj: &O,
    starts: Vec<Vec<CMat>>,
    restarts: usize,
    seed: u64,
    opts: &PgdOptions,
) -> MinResult {
    let blocks = obj.blocks();
    let fixed = starts.len();
    let results: Vec<MinResult> = (0..fixed + restarts)
        .into_par_iter()
        .map(|i| {
            let x0 = if i < fixed {
                starts[i].clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                random_point(&blocks, &mut rng)
            };
            let mut r = pgd(obj, x0, opts);
            r.start = i;
            r
        })
        .collect();
    results
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.start.cmp(&b.start)))
        .expect("at least one start")
}

/// Nelder-Mead on `R^k` with standard coefficients.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], scale: f64, max_evals: usize, ftol: f64) -> (Vec<f64>, f64) {
    let k = x0.len();
    if k == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..k {
        let mut p = x0.to_vec();
        p[i] += scale;
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = k + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[k].1;
        if (worst - best).abs() <= ftol * (1.0 + best.abs()) && diameter(&simplex) < 1e-14 {
            break;
        }
        let centroid: Vec<f64> = (0..k)
            .map(|j| simplex[..k].iter().map(|p| p.0[j]).sum::<f64>() / k as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[k].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            evals += 1;
            if fc < worst.min(fr) {
                simplex[k] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    for (pj, bj) in p.0.iter_mut().zip(&x_best) {
                        *pj = bj + 0.5 * (*pj - bj);
                    }
                    p.1 = f(&p.0);
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let b = &simplex[0].0;
    simplex
        .iter()
        .map(|p| p.0.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rayleigh quotient `v^H A v` with a known smallest eigenvalue.
    struct Rayleigh(CMat);

    impl Objective for Rayleigh {
        fn blocks(&self) -> Vec<(usize, usize)> {
            vec![(self.0.nrows(), 1)]
        }
        fn value(&self, x: &[CMat]) -> f64 {
            (x[0].adjoint() * &self.0 * &x[0])[(0, 0)].re
        }
        fn value_grad(&self, x: &[CMat]) -> (f64, Vec<CMat>) {
            let ax = &self.0 * &x[0];
            let v = x[0].dotc(&ax).re;
            (v, vec![ax * C64::new(2.0, 0.0)])
        }
    }

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_fn(vals.len(), vals.len(), |i, j| {
            if i == j {
                C64::new(vals[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    #[test]
    fn finds_smallest_eigenvalue() {
        let obj = Rayleigh(diag(&[3.0, 1.5, 0.25, 2.0]));
        let r = multistart(&obj, vec![], 8, 1, &PgdOptions::default());
        assert!((r.value - 0.25).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn multistart_is_deterministic() {
        let obj = Rayleigh(diag(&[3.0, 1.0, 2.0]));
        let a = multistart(&obj, vec![], 6, 9, &PgdOptions::default());
        let b = multistart(&obj, vec![], 6, 9, &PgdOptions::default());
        assert_eq!(a.x, b.x);
        assert_eq!(a.start, b.start);
    }

    #[test]
    fn stiefel_retraction_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_point(&[(5, 3)], &mut rng);
        let e = x[0].adjoint() * &x[0] - CMat::identity(3, 3);
        assert!(e.norm() < 1e-13);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, v) = nelder_mead(f, &[-1.2, 1.0], 0.5, 5000, 1e-16);
        assert!(v < 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-5);
    }
}
