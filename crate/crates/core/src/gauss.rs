//! Griffiths positivity of `Λ^l T*Y` through the Gauss map on decomposable
//! `l`-planes: the kernel criterion `dim K_u < l` for
//! `K_u = {u' : II(u, u') = 0}`, the operator `IIΛ^l_u`, and a finite
//! difference check that the Gauss map is an immersion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{invalid, Result};
use crate::germ::{Germ, Sff};
use crate::linalg::{kth_smallest_sv_cols, sigma_min_cols, CMat};
use crate::optim::{multistart, qr_retract, random_point, Objective, PgdOptions};
use crate::poly::{PolynomialMap, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub l: usize,
    /// `max_u dim K_u` over unit `u`, decided at `rank_tol`.
    pub max_kernel_dim: usize,
    pub witness_u: Vec<C64>,
    /// `min_u s_l(II(u, .))`, the `l`-th smallest singular value.
    pub margin: f64,
    /// `min_u s_k(II(u, .))` for `k = 1..=d`.
    pub margins: Vec<f64>,
    /// Griffiths positivity of `Λ^l T*Y` at the point.
    pub positive: bool,
}

/// `sum_a |II(u, w_a)|^2` over the sphere times the Stiefel manifold
/// `St(d, k)`; its minimum over `W` is the sum of the `k` smallest squared
/// singular values of `II(u, .)`.
struct KyFan<'a> {
    sff: &'a Sff,
    k: usize,
}

impl Objective for KyFan<'_> {
    fn blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.sff.d, 1), (self.sff.d, self.k)]
    }

    fn value(&self, x: &[CMat]) -> f64 {
        let u: Vec<C64> = x[0].iter().copied().collect();
        (self.sff.partial(&u) * &x[1]).norm_squared()
    }

    fn value_grad(&self, x: &[CMat]) -> (f64, Vec<CMat>) {
        let s = self.sff;
        let u: Vec<C64> = x[0].iter().copied().collect();
        let b = s.partial(&u);
        let q = &b * &x[1];
        let grad_w = b.adjoint() * &q * C64::new(2.0, 0.0);
        let grad_u = CMat::from_fn(s.d, 1, |i, _| {
            // (C_i W)_{r a} with C_i[r][j] = c_ijr
            let mut acc = ZERO;
            for r in 0..s.m {
                for a in 0..self.k {
                    let ciw: C64 = (0..s.d).map(|j| s.get(i, j, r) * x[1][(j, a)]).sum();
                    acc += q[(r, a)] * ciw.conj();
                }
            }
            acc * 2.0
        });
        (q.norm_squared(), vec![grad_u, grad_w])
    }
}

fn standard_starts(d: usize, k: usize) -> Vec<Vec<CMat>> {
    (0..d)
        .map(|i| {
            let u = CMat::from_fn(d, 1, |r, _| if r == i { ONE } else { ZERO });
            let w = CMat::from_fn(d, k, |r, c| if r == (i + c) % d { ONE } else { ZERO });
            vec![u, w]
        })
        .collect()
}

pub fn kernel_profile(germ: &Germ, l: usize, restarts: usize, seed: u64, tol: &Tolerances) -> Result<KernelProfile> {
    let d = germ.d();
    if l < 1 || l > d {
        return invalid(format!("need 1 <= l <= d = {d}, got l = {l}"));
    }
    let sff = germ.sff();
    let mut margins = Vec::with_capacity(d);
    let mut witnesses = Vec::with_capacity(d);
    for k in 1..=d {
        let obj = KyFan { sff, k };
        let best = multistart(
            &obj,
            standard_starts(d, k),
            restarts,
            seed ^ ((k as u64) << 32),
            &PgdOptions::default(),
        );
        let u: Vec<C64> = best.x[0].iter().copied().collect();
        margins.push(kth_smallest_sv_cols(&sff.partial(&u), k));
        witnesses.push(u);
    }
    // the k-th margin is nondecreasing in k; enforce it against optimizer noise
    for k in 1..d {
        if margins[k] < margins[k - 1] {
            margins[k] = margins[k - 1];
        }
    }
    let max_kernel_dim = margins.iter().take_while(|&&m| m <= tol.rank_tol).count();
    let witness_u = witnesses[max_kernel_dim.max(l) - 1].clone();
    Ok(KernelProfile {
        l,
        max_kernel_dim,
        witness_u,
        margin: margins[l - 1],
        margins,
        positive: max_kernel_dim < l,
    })
}

/// Increasing `k`-subsets of `0..d` in lexicographic order.
pub fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, d, k, &mut Vec::new(), &mut out);
    out
}

/// `IIΛ^l_u : Λ^l T -> N ⊗ Λ^{l-1} T` in the wedge bases induced by the
/// frames. Row `r * C(d, l-1) + j` pairs the normal vector `f_r` with the
/// `j`-th `(l-1)`-subset; column `i` is the `i`-th `l`-subset.
#[derive(Debug, Clone, PartialEq)]
pub struct IiLambda {
    pub l: usize,
    pub matrix: CMat,
    pub domain: Vec<Vec<usize>>,
    pub target: Vec<Vec<usize>>,
}

pub fn ii_lambda(germ: &Germ, u: &[C64], l: usize) -> Result<IiLambda> {
    let d = germ.d();
    if l < 1 || l > d {
        return invalid(format!("need 1 <= l <= d = {d}, got l = {l}"));
    }
    if u.len() != d || u.iter().all(|c| *c == ZERO) {
        return invalid("u must be a nonzero tangent vector");
    }
    let sff = germ.sff();
    let m = sff.m;
    let domain = subsets(d, l);
    let target = subsets(d, l - 1);
    let index = |s: &[usize]| target.iter().position(|t| t == s).expect("subset");
    let mut matrix = CMat::zeros(m * target.len(), domain.len());
    let basis = |i: usize| -> Vec<C64> { (0..d).map(|k| if k == i { ONE } else { ZERO }).collect() };
    for (col, s) in domain.iter().enumerate() {
        for (alpha, &sa) in s.iter().enumerate() {
            let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
            let rest: Vec<usize> = s.iter().copied().filter(|&x| x != sa).collect();
            let j = index(&rest);
            let ii = sff.apply(u, &basis(sa));
            for r in 0..m {
                matrix[(r * target.len() + j, col)] += ii[r] * sign;
            }
        }
    }
    Ok(IiLambda {
        l,
        matrix,
        domain,
        target,
    })
}

/// Coordinates of `w_1 ∧ ... ∧ w_l` in the basis indexed by `subsets(d, l)`:
/// the `l x l` minors.
pub fn wedge_coords(vectors: &[Vec<C64>]) -> Vec<C64> {
    let l = vectors.len();
    let d = vectors.first().map(|v| v.len()).unwrap_or(0);
    subsets(d, l)
        .iter()
        .map(|s| {
            let m = CMat::from_fn(l, l, |i, j| vectors[j][s[i]]);
            m.determinant()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionCheck {
    pub l: usize,
    pub immersion: bool,
    /// Smallest singular value of the Gauss map differential, minimized over
    /// the fiber of `l`-planes at the point.
    pub sigma_min: f64,
    /// Orthonormal basis (tangent-frame coordinates) of the worst plane.
    pub witness_plane: Vec<Vec<C64>>,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Local graph parametrization `x -> p + T x + N y(x)` of the zero set.
struct GraphChart<'a> {
    map: &'a PolynomialMap,
    partials: Vec<PolynomialMap>,
    p: Vec<C64>,
    t: CMat,
    nrm: CMat,
}

impl<'a> GraphChart<'a> {
    fn new(germ: &'a Germ) -> Self {
        let n = germ.n();
        let f = germ.frames();
        GraphChart {
            map: germ.map(),
            partials: (0..n).map(|i| germ.map().derivative(i)).collect(),
            p: germ.point().to_vec(),
            t: CMat::from_fn(n, germ.d(), |i, j| f.tangent[j][i]),
            nrm: CMat::from_fn(n, germ.codim(), |i, j| f.normal[j][i]),
        }
    }

    fn jac(&self, z: &[C64]) -> CMat {
        let m = self.map.m();
        let mut j = CMat::zeros(m, z.len());
        for (i, pi) in self.partials.iter().enumerate() {
            for (r, v) in pi.eval(z).into_iter().enumerate() {
                j[(r, i)] = v;
            }
        }
        j
    }

    fn point(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let tx = &self.t * nalgebra::DVector::from_column_slice(x);
        let ny = &self.nrm * nalgebra::DVector::from_column_slice(y);
        (0..self.p.len()).map(|i| self.p[i] + tx[i] + ny[i]).collect()
    }

    /// The point of the zero set over `x`.
    fn solve(&self, x: &[C64]) -> Option<Vec<C64>> {
        let m = self.map.m();
        let mut y = vec![ZERO; m];
        let mut converged = false;
        for _ in 0..40 {
            let z = self.point(x, &y);
            let fz = self.map.eval(&z);
            let res: f64 = fz.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let jn = self.jac(&z) * &self.nrm;
            let step = jn.lu().solve(&nalgebra::DVector::from_vec(fz))?;
            for (yi, si) in y.iter_mut().zip(step.iter()) {
                *yi -= si;
            }
            if res < 1e-15 || step.norm() < 1e-15 {
                converged = true;
                break;
            }
        }
        converged.then(|| self.point(x, &y))
    }

    /// Tangent matrix `Dphi(x)` (`n x d`).
    fn tangent(&self, x: &[C64]) -> Option<CMat> {
        let z = self.solve(x)?;
        let jz = self.jac(&z);
        let jn = &jz * &self.nrm;
        let jt = &jz * &self.t;
        let dy = jn.lu().solve(&jt)?;
        Some(&self.t - &self.nrm * dy)
    }

    /// Rows of `dF` at the point over `x`, as columns (`n x m`); they span
    /// the conormal space and depend holomorphically on `x`.
    fn conormal(&self, x: &[C64]) -> Option<CMat> {
        Some(self.jac(&self.solve(x)?).transpose())
    }
}

/// Finite-difference Jacobian of the Gauss map at `(p, V0)` in Grassmannian
/// chart coordinates, with the holomorphic four-point stencil
/// `(f(h) - f(-h) - i f(ih) + i f(-ih)) / 4h`.
fn gauss_jacobian(chart: &GraphChart<'_>, bundle: Bundle, w0: &CMat, h: f64) -> Option<CMat> {
    let (r, l) = w0.shape();
    let d = chart.t.ncols();
    let n = chart.p.len();
    let frame = |x: &[C64]| match bundle {
        Bundle::Cotangent => chart.tangent(x),
        Bundle::Normal => chart.conormal(x),
    };
    let full = complete_unitary(w0);
    let w0perp = full.columns(l, r - l).into_owned();
    let s0 = qr_retract(&(frame(&vec![ZERO; d])? * w0));
    let sperp = complete_unitary(&s0).columns(l, n - l).into_owned();
    let coord = |x: &[C64], z: &CMat| -> Option<CMat> {
        let w = w0 + &w0perp * z;
        let m = frame(x)? * w;
        let a = s0.adjoint() * &m;
        let b = sperp.adjoint() * &m;
        let ainv = a.try_inverse()?;
        Some(b * ainv)
    };
    let nz = (r - l) * l;
    let nin = d + nz;
    let nout = (n - l) * l;
    let mut jac = CMat::zeros(nout, nin);
    let steps = [
        (C64::new(h, 0.0), ONE),
        (C64::new(-h, 0.0), -ONE),
        (C64::new(0.0, h), C64::new(0.0, -1.0)),
        (C64::new(0.0, -h), C64::new(0.0, 1.0)),
    ];
    for k in 0..nin {
        let mut acc = CMat::zeros(n - l, l);
        for (delta, weight) in steps {
            let mut x = vec![ZERO; d];
            let mut z = CMat::zeros(r - l, l);
            if k < d {
                x[k] = delta;
            } else {
                let e = k - d;
                z[(e / l, e % l)] = delta;
            }
            acc += coord(&x, &z)? * weight;
        }
        acc /= C64::new(4.0 * h, 0.0);
        for (row, v) in acc.iter().enumerate() {
            jac[(row, k)] = *v;
        }
    }
    Some(jac)
}

/// Extends orthonormal columns to a unitary matrix.
fn complete_unitary(a: &CMat) -> CMat {
    let (n, k) = a.shape();
    let mut cols: Vec<Vec<C64>> = (0..k).map(|j| a.column(j).iter().copied().collect()).collect();
    for i in 0..n {
        cols.push((0..n).map(|r| if r == i { ONE } else { ZERO }).collect());
    }
    let b = crate::linalg::gram_schmidt(&cols, 1e-8);
    CMat::from_fn(n, n, |i, j| b[j][i])
}

/// Plane spanned by the columns of `base + base_perp * Y`.
fn plane_from_params(base: &CMat, base_perp: &CMat, theta: &[f64]) -> CMat {
    let (d, l) = base.shape();
    let y = CMat::from_fn(d - l, l, |i, j| {
        let k = 2 * (i * l + j);
        C64::new(theta[k], theta[k + 1])
    });
    qr_retract(&(base + base_perp * y))
}

/// Which exterior power the Gauss map lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bundle {
    /// `Λ^l T*Y`: planes in the tangent space.
    Cotangent,
    /// `Λ^l (NY)*`: planes in the conormal space, spanned by rows of `dF`.
    Normal,
}

/// Numerically differentiates the Gauss map `(q, [V]) -> [V]` on decomposable
/// `l`-planes along the zero set and minimizes the smallest singular value
/// of its differential over the fiber at the base point.
pub fn gauss_immersion_check(
    germ: &Germ,
    l: usize,
    h: f64,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ImmersionCheck> {
    bundle_immersion_check(germ, Bundle::Cotangent, l, h, restarts, seed, tol)
}

/// The same check for either bundle. For the normal bundle the planes are
/// `l`-planes of the conormal space, so `l` ranges up to the codimension.
pub fn bundle_immersion_check(
    germ: &Germ,
    bundle: Bundle,
    l: usize,
    h: f64,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ImmersionCheck> {
    let d = match bundle {
        Bundle::Cotangent => germ.d(),
        Bundle::Normal => germ.codim(),
    };
    if l < 1 || l > d {
        return invalid(format!("need 1 <= l <= {d}, got l = {l}"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return invalid("finite-difference step must be positive");
    }
    let warning = if h < 1e-6 {
        Some(format!("step {h:e} is small; roundoff may dominate the differences"))
    } else if h > 1e-2 {
        Some(format!("step {h:e} is large; truncation may dominate the differences"))
    } else {
        None
    };
    let chart = GraphChart::new(germ);
    let sigma = |w: &CMat| -> f64 {
        gauss_jacobian(&chart, bundle, w, h)
            .map(|j| sigma_min_cols(&j))
            .unwrap_or(f64::NAN)
    };
    let nparams = 2 * (d - l) * l;
    let (best_sigma, best_plane) = if nparams == 0 {
        let w = CMat::identity(d, d);
        (sigma(&w), w)
    } else {
        let runs: Vec<(f64, CMat, usize)> = (0..restarts.max(1))
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let base = random_point(&[(d, l)], &mut rng).remove(0);
                let base_perp = complete_unitary(&base).columns(l, d - l).into_owned();
                let f = |theta: &[f64]| -> f64 {
                    let s = sigma(&plane_from_params(&base, &base_perp, theta));
                    if s.is_nan() {
                        f64::INFINITY
                    } else {
                        s * s
                    }
                };
                let mut theta = vec![0.0; nparams];
                let mut scale = 0.5;
                let mut val = f(&theta);
                // restarted simplex searches shrink toward the local minimum
                for _ in 0..4 {
                    let (t2, v2) = crate::optim::nelder_mead(f, &theta, scale, 400, 1e-30);
                    if v2 <= val {
                        theta = t2;
                        val = v2;
                    }
                    scale *= 0.05;
                }
                let plane = plane_from_params(&base, &base_perp, &theta);
                (sigma(&plane), plane, i)
            })
            .collect();
        let best = runs
            .into_iter()
            .filter(|r| !r.0.is_nan())
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));
        match best {
            Some((s, w, _)) => (s, w),
            None => (f64::NAN, CMat::identity(d, l)),
        }
    };
    let witness_plane = (0..l).map(|j| best_plane.column(j).iter().copied().collect()).collect();
    Ok(ImmersionCheck {
        l,
        immersion: best_sigma > tol.rank_tol,
        sigma_min: best_sigma,
        witness_plane,
        step: h,
        warning,
    })
}

/// `sigma_min` of `u -> II(u, V)` for the plane spanned by the columns of
/// `v` (a `d x l` matrix); the Gauss map differential fails to be injective
/// at `V` exactly when this vanishes.
pub fn plane_sigma(sff: &Sff, v: &CMat) -> f64 {
    let (d, l) = v.shape();
    let m = sff.m;
    let mat = CMat::from_fn(m * l, d, |row, i| {
        let (a, r) = (row / m, row % m);
        (0..d).map(|j| sff.get(i, j, r) * v[(j, a)]).sum()
    });
    sigma_min_cols(&mat)
}
