//! Brody reparametrization of holomorphic disks, contact order of
//! hypersurfaces with lines, and a disk search on peak-section zero sets
//! that probes how derivatives of disks scale with the metric.
//!
//! The Poincare metric on the unit disk is `2|dz| / (1 - |z|^2)`. For the
//! reparametrization `g(w) = f(h(w/2)/2)`, with `h` the disk automorphism
//! sending 0 to the maximizer of `j1(p) = |f'(p/2)| (1 - |p|^2) / 4`, the
//! three factors of the argument evaluate to
//!
//! * `|f'(0)| = 4 j1(0)`,
//! * `|g'(w)| = j1(h(w/2)) / (1 - |w|^2/4) <= (4/3) sup j1`,
//! * `|g'(0)| = j1(p0)`,
//!
//! hence `C1 = 4`, `C2 = 4/3`, `C3 = 1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{invalid, Error, Result};
use crate::linalg::{gram_schmidt, hnorm, random_unit};
use crate::optim::nelder_mead;
use crate::peaks::{color_classes, discretize, Evaluator, Lattice, PeakFamily};
use crate::poly::{Coefficient, PolynomialMap, C64};

pub const C1: f64 = 4.0;
pub const C2: f64 = 4.0 / 3.0;
pub const C3: f64 = 1.0;

const ZERO: C64 = C64::new(0.0, 0.0);

fn vnorm(v: &[C64]) -> f64 {
    hnorm(v)
}

/// A holomorphic map from a disk to `C^m` as a truncated power series.
///
/// Coefficients past the stored degree obey `|a_k| <= coeff_bound *
/// coeff_radius^-k`, which certifies the series on `|z| < coeff_radius`.
/// A zero `coeff_bound` means the stored polynomial is the map itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskMap {
    /// `coeffs[j][k]` is the `z^k` coefficient of component `j`.
    pub coeffs: Vec<Vec<C64>>,
    pub coeff_bound: f64,
    pub coeff_radius: f64,
}

impl DiskMap {
    pub fn new(mut coeffs: Vec<Vec<C64>>, coeff_bound: f64, coeff_radius: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return invalid("a disk map needs at least one component");
        }
        if !(coeff_bound >= 0.0 && coeff_bound.is_finite()) || !(coeff_radius > 0.0 && coeff_radius.is_finite()) {
            return invalid("tail bound must be finite and nonnegative, radius positive");
        }
        let len = coeffs.iter().map(|c| c.len()).max().unwrap_or(0).max(1);
        for c in coeffs.iter_mut() {
            c.resize(len, ZERO);
        }
        Ok(DiskMap {
            coeffs,
            coeff_bound,
            coeff_radius,
        })
    }

    pub fn polynomial(coeffs: Vec<Vec<C64>>) -> Result<Self> {
        Self::new(coeffs, 0.0, 1.0)
    }

    /// Truncation at `deg_max` of a polynomial map `C -> C^m`. The dropped
    /// coefficients are bounded on the unit circle.
    pub fn from_polynomial(p: &PolynomialMap, deg_max: usize) -> Result<Self> {
        if p.n() != 1 {
            return invalid(format!("a disk map needs one variable, the map has {}", p.n()));
        }
        let deg = p.degree().unwrap_or(0) as usize;
        let mut coeffs = vec![vec![ZERO; deg_max + 1]; p.m()];
        let mut dropped = vec![vec![ZERO; p.m()]; deg.saturating_sub(deg_max)];
        for (j, a, c) in p.terms() {
            let k = a[0] as usize;
            if k <= deg_max {
                coeffs[j][k] = *c;
            } else {
                dropped[k - deg_max - 1][j] = *c;
            }
        }
        let bound = dropped.iter().map(|v| vnorm(v)).fold(0.0, f64::max);
        Self::new(coeffs, bound, 1.0)
    }

    pub fn m(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    /// Radius of the disk on which the map is certified.
    pub fn validity_radius(&self) -> f64 {
        if self.coeff_bound == 0.0 {
            f64::INFINITY
        } else {
            self.coeff_radius
        }
    }

    fn coeff_vec(&self, k: usize) -> Vec<C64> {
        self.coeffs.iter().map(|c| c[k]).collect()
    }

    pub fn eval(&self, z: C64) -> Vec<C64> {
        self.coeffs
            .iter()
            .map(|c| c.iter().rev().fold(ZERO, |acc, a| acc * z + a))
            .collect()
    }

    pub fn eval_derivative(&self, z: C64) -> Vec<C64> {
        self.coeffs
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(ZERO, |acc, (k, a)| acc * z + a * k as f64)
            })
            .collect()
    }

    pub fn derivative_norm(&self, z: C64) -> f64 {
        vnorm(&self.eval_derivative(z))
    }

    /// Coefficient shift. The tail bound moves to half the radius, where
    /// `(k + 1) 2^-k <= 1` absorbs the extra factor.
    pub fn derivative(&self) -> DiskMap {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let d: Vec<C64> = c.iter().enumerate().skip(1).map(|(k, a)| a * k as f64).collect();
                if d.is_empty() {
                    vec![ZERO]
                } else {
                    d
                }
            })
            .collect();
        DiskMap {
            coeffs,
            coeff_bound: self.coeff_bound / self.coeff_radius,
            coeff_radius: self.coeff_radius / 2.0,
        }
    }

    /// Bound on the dropped tail over `|z| <= rho`.
    pub fn tail_bound(&self, rho: f64) -> f64 {
        if self.coeff_bound == 0.0 {
            return 0.0;
        }
        let q = rho / self.coeff_radius;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        self.coeff_bound * q.powi(self.degree() as i32 + 1) / (1.0 - q)
    }

    /// Bound on the derivative of the dropped tail over `|z| <= rho`.
    pub fn derivative_tail_bound(&self, rho: f64) -> f64 {
        if self.coeff_bound == 0.0 {
            return 0.0;
        }
        let q = rho / self.coeff_radius;
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let nn = self.degree() as i32 + 1;
        let s = (nn as f64 * q.powi(nn - 1) * (1.0 - q) + q.powi(nn)) / (1.0 - q).powi(2);
        self.coeff_bound / self.coeff_radius * s
    }

    /// Bound on `|f|` over `|z| <= rho`.
    pub fn sup_bound(&self, rho: f64) -> f64 {
        (0..=self.degree())
            .map(|k| vnorm(&self.coeff_vec(k)) * rho.powi(k as i32))
            .sum::<f64>()
            + self.tail_bound(rho)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| c[1..].iter().all(|a| *a == ZERO))
    }

    /// Series of `f(u(w))` to degree `degree`, where `u` is given by its
    /// coefficients and stays within `|u| <= u_sup` on `|w| < u_radius`.
    fn compose(&self, u: &[C64], u_radius: f64, u_sup: f64, degree: usize) -> Result<DiskMap> {
        if u_sup >= self.validity_radius() {
            return invalid("the inner map leaves the disk of validity");
        }
        let len = degree + 1;
        let mut uu = vec![ZERO; len];
        for (d, s) in uu.iter_mut().zip(u) {
            *d = *s;
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                // Horner over truncated series
                let mut acc = vec![ZERO; len];
                for a in c.iter().rev() {
                    let mut next = vec![ZERO; len];
                    for (i, x) in acc.iter().enumerate() {
                        if *x == ZERO {
                            continue;
                        }
                        for (j, y) in uu[..len - i].iter().enumerate() {
                            next[i + j] += x * y;
                        }
                    }
                    next[0] += a;
                    acc = next;
                }
                acc
            })
            .collect();
        DiskMap::new(coeffs, self.sup_bound(u_sup), u_radius)
    }

    /// `f o h` as a series of the given degree.
    pub fn compose_mobius(&self, h: &Mobius, degree: usize) -> Result<DiskMap> {
        let a = h.a.norm();
        let valid = self.validity_radius();
        let radius = [2.0, 1.5, 1.2, 1.0, 0.9, 0.75, 0.5]
            .into_iter()
            .find(|&r: &f64| a * r < 1.0 && h.max_modulus(r) < valid)
            .ok_or_else(|| Error::InvalidArgument("no disk on which the composite is certified".into()))?;
        self.compose(&h.series(degree), radius, h.max_modulus(radius), degree)
    }
}

/// The disk automorphism `z -> rot (z + a) / (1 + conj(a) z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    pub a: C64,
    pub rot: C64,
}

impl Mobius {
    pub fn new(a: C64, angle: f64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return invalid("a disk automorphism needs |a| < 1");
        }
        Ok(Mobius {
            a,
            rot: C64::from_polar(1.0, angle),
        })
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.rot * (z + self.a) / (C64::new(1.0, 0.0) + self.a.conj() * z)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let d = C64::new(1.0, 0.0) + self.a.conj() * z;
        self.rot * (1.0 - self.a.norm_sqr()) / (d * d)
    }

    pub fn series(&self, degree: usize) -> Vec<C64> {
        let mut out = vec![self.rot * self.a];
        let s = 1.0 - self.a.norm_sqr();
        let mut pow = C64::new(1.0, 0.0);
        for _ in 1..=degree {
            out.push(self.rot * pow * s);
            pow *= -self.a.conj();
        }
        out
    }

    /// `max |h|` on the circle `|z| = r`, for `|a| r < 1`. The image circle
    /// is symmetric about the line through 0 and `a`, so the extremes sit
    /// at `z = +- r a/|a|`.
    pub fn max_modulus(&self, r: f64) -> f64 {
        let a = self.a.norm();
        ((r + a) / (1.0 + a * r)).max((r - a).abs() / (1.0 - a * r).abs())
    }
}

/// Scale factor of `f` from the Poincare disk to the Euclidean target:
/// `|f'(p)| (1 - |p|^2) / 2`.
pub fn poincare_jacobian(f: &DiskMap, p: C64) -> Result<f64> {
    if !(p.norm() < 1.0) {
        return invalid(format!("|p| = {} is not inside the unit disk", p.norm()));
    }
    Ok(f.derivative_norm(p) * (1.0 - p.norm_sqr()) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrodyCertificate {
    /// Maximizer of `j1`.
    pub p0: C64,
    pub j1_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `sup |g'| / |g'(0)|` over the check grid.
    pub sup_ratio: f64,
    /// `|f'(0)| / |g'(0)|`.
    pub f_ratio: f64,
    pub grid_step: f64,
    /// Both ratios within their constants times `1 + 5 grid_step`.
    pub holds: bool,
}

impl BrodyCertificate {
    /// The point `z` with `f(z) = g(w)`.
    pub fn preimage(&self, w: C64) -> C64 {
        Mobius {
            a: self.p0,
            rot: C64::new(1.0, 0.0),
        }
        .eval(w / 2.0)
            / 2.0
    }
}

fn j1(f: &DiskMap, p: C64) -> f64 {
    let r2 = p.norm_sqr();
    if r2 >= 1.0 {
        return 0.0;
    }
    f.derivative_norm(p / 2.0) * (1.0 - r2) / 4.0
}

/// Golden-section maximization of `phi` on `[lo, hi]`.
fn golden_max<F: Fn(f64) -> f64>(phi: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (phi(x1), phi(x2));
    for _ in 0..iters {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = phi(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = phi(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid search for the maximizer of `j1`, ties going to the smallest `|p|`
/// and then to the lexicographically smallest point.
fn maximize_j1(f: &DiskMap, step: f64) -> (C64, f64) {
    let k = (1.0 / step).ceil() as i64;
    let pts: Vec<C64> = (-k..=k)
        .flat_map(|i| (-k..=k).map(move |j| C64::new(i as f64 * step, j as f64 * step)))
        .filter(|p| p.norm() < 1.0)
        .collect();
    let key = |a: &(C64, f64), b: &(C64, f64)| {
        b.1.total_cmp(&a.1)
            .then(a.0.norm().total_cmp(&b.0.norm()))
            .then(a.0.re.total_cmp(&b.0.re))
            .then(a.0.im.total_cmp(&b.0.im))
    };
    let (mut p, mut v) = pts
        .par_iter()
        .map(|&p| (p, j1(f, p)))
        .min_by(key)
        .expect("grid contains the origin");
    for _ in 0..8 {
        let radial = if p.norm() > 0.0 {
            p / p.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for dir in [radial, radial * C64::new(0.0, 1.0)] {
            let (t, val) = golden_max(|t| j1(f, p + dir * t), -step, step, 60);
            if val > v {
                p += dir * t;
                v = val;
            }
        }
    }
    (p, v)
}

/// Brody's reparametrization `g(w) = f(h(w/2)/2)`, with a dense-grid check
/// of the two derivative ratios.
pub fn brody_reparametrize(f: &DiskMap, grid_step: f64) -> Result<(DiskMap, BrodyCertificate)> {
    if f.is_constant() {
        return Err(Error::DegenerateInput("a constant map has no reparametrization".into()));
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return invalid("grid step must be in (0, 1/2]");
    }
    if f.validity_radius() <= 0.5 {
        return invalid("the map must be certified beyond |z| = 1/2");
    }
    let (p0, j1_max) = maximize_j1(f, grid_step);
    let h = Mobius {
        a: p0,
        rot: C64::new(1.0, 0.0),
    };
    // u(w) = h(w/2)/2 stays in |u| < 1/2 for |w| < 2
    let degree = f.degree().max(56);
    let u: Vec<C64> = h
        .series(degree)
        .iter()
        .enumerate()
        .map(|(k, c)| c / 2f64.powi(k as i32 + 1))
        .collect();
    let g = f.compose(&u, 2.0, 0.5, degree)?;
    let g0 = g.derivative_norm(ZERO);
    if !(g0 > 0.0) {
        return Err(Error::DegenerateInput(
            "reparametrized map has zero derivative at 0".into(),
        ));
    }
    let nr = (1.0 / grid_step).ceil() as usize;
    let na = (2.0 * PI / grid_step).ceil() as usize;
    let sup = (1..=nr)
        .into_par_iter()
        .map(|i| {
            let r = 0.999 * i as f64 / nr as f64;
            (0..na)
                .map(|t| g.derivative_norm(C64::from_polar(r, 2.0 * PI * t as f64 / na as f64)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let sup_ratio = sup / g0;
    let f_ratio = f.derivative_norm(ZERO) / g0;
    let slack = 1.0 + 5.0 * grid_step;
    let holds = sup_ratio <= C2 * C3 * slack && f_ratio <= C1 * C3 * slack;
    Ok((
        g,
        BrodyCertificate {
            p0,
            j1_max,
            c1: C1,
            c2: C2,
            c3: C3,
            sup_ratio,
            f_ratio,
            grid_step,
            holds,
        },
    ))
}

/// Vanishing order at `t = 0` of `t -> s(z + t b)`, from the exact
/// restriction coefficients. A line inside `{s = 0}` gives `deg + 1`.
pub fn line_tangency_order<T: Coefficient>(s: &PolynomialMap<T>, z: &[T], b: &[T], zero_tol: f64) -> Result<u32> {
    if s.m() != 1 {
        return invalid("line tangency needs a single equation");
    }
    if z.len() != s.n() || b.len() != s.n() {
        return invalid("point and direction must live in the domain");
    }
    let nb = b.iter().map(|c| c.magnitude().powi(2)).sum::<f64>().sqrt();
    if (nb - 1.0).abs() > 1e-9 {
        return invalid(format!("direction must be a unit vector, |b| = {nb}"));
    }
    let c = s.restrict_to_line(0, z, b);
    let sentinel = s.degree().unwrap_or(0) + 1;
    Ok(c.iter()
        .position(|v| !v.is_negligible(zero_tol))
        .map(|k| k as u32)
        .unwrap_or(sentinel))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineScan {
    pub order: u32,
    pub witness: Vec<C64>,
    /// Size of the first nonvanishing restriction coefficient at the
    /// witness; zero when the line lies in the hypersurface.
    pub margin: f64,
    /// The line through the witness lies in the hypersurface.
    pub contained: bool,
    pub directions_tried: usize,
}

/// Homogeneous parts of `s(z + w)`: `parts[j]` lists `(alpha, coeff)` of degree `j`.
fn taylor_parts(s: &PolynomialMap, z: &[C64]) -> Vec<Vec<(Vec<u32>, C64)>> {
    let t = s.translate(z);
    let deg = s.degree().unwrap_or(0) as usize;
    let mut parts = vec![Vec::new(); deg + 1];
    for (_, a, c) in t.terms() {
        parts[a.iter().sum::<u32>() as usize].push((a.to_vec(), *c));
    }
    parts
}

fn restriction(parts: &[Vec<(Vec<u32>, C64)>], b: &[C64]) -> Vec<C64> {
    parts
        .iter()
        .map(|terms| {
            terms
                .iter()
                .map(|(a, c)| a.iter().zip(b).fold(*c, |acc, (&k, bi)| acc * bi.powu(k)))
                .sum()
        })
        .collect()
}

/// Unit vector of `C^k` modulo phase from `2(k-1)` angles.
fn sphere_point(k: usize, x: &[f64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(k);
    let mut rest = 1.0;
    for i in 0..k - 1 {
        let phase = if i == 0 {
            C64::new(1.0, 0.0)
        } else {
            C64::from_polar(1.0, x[k - 1 + i - 1])
        };
        out.push(phase * rest * x[i].cos());
        rest *= x[i].sin();
    }
    let last = if k == 1 { 0.0 } else { x[2 * k - 3] };
    out.push(C64::from_polar(rest, last));
    out
}

/// Highest contact order of a line through a zero `z` of `s`, searched over
/// the tangent directions (all directions at a singular point) by a grid of
/// about a thousand points refined with Nelder-Mead from the `restarts`
/// best ones. Orders beyond 1 count coefficients below `rank_tol` times the
/// largest Taylor coefficient as zero.
pub fn max_line_tangency(s: &PolynomialMap, z: &[C64], l: u32, restarts: usize, tol: &Tolerances) -> Result<LineScan> {
    let n = s.n();
    if s.m() != 1 || z.len() != n {
        return invalid("line tangency needs a single equation and a point of its domain");
    }
    if l == 0 {
        return invalid("contact order must be at least 1");
    }
    let parts = taylor_parts(s, z);
    let scale = parts.iter().flatten().map(|(_, c)| c.norm()).fold(0.0, f64::max);
    if parts[0].iter().map(|(_, c)| c.norm()).sum::<f64>() > 1e3 * tol.zero_tol * scale.max(1.0) {
        return invalid("the point is not on the hypersurface");
    }
    let cut = tol.rank_tol * scale.max(f64::MIN_POSITIVE);
    let grad: Vec<C64> = (0..n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i] = 1;
            parts
                .get(1)
                .and_then(|p| p.iter().find(|(a, _)| *a == e))
                .map(|(_, c)| *c)
                .unwrap_or(ZERO)
        })
        .collect();
    // directions with contact >= 2 lie in the kernel of ds
    let frame: Vec<Vec<C64>> = if vnorm(&grad) > cut {
        let nu: Vec<C64> = grad.iter().map(|g| g.conj() / vnorm(&grad)).collect();
        let mut cands = vec![nu.clone()];
        for i in 0..n {
            let mut e = vec![ZERO; n];
            e[i] = C64::new(1.0, 0.0);
            cands.push(e);
        }
        gram_schmidt(&cands, 1e-12)[1..].to_vec()
    } else {
        (0..n)
            .map(|i| {
                let mut e = vec![ZERO; n];
                e[i] = C64::new(1.0, 0.0);
                e
            })
            .collect()
    };
    let k = frame.len();
    let lift = |x: &[C64]| -> Vec<C64> {
        (0..n)
            .map(|i| frame.iter().zip(x).map(|(f, xi)| f[i] * xi).sum())
            .collect()
    };
    let degree = parts.len() - 1;
    let upto = (l as usize).min(degree);
    let contact = |b: &[C64]| -> f64 {
        restriction(&parts, b)[1..=upto.max(1)]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    };
    let order_of = |b: &[C64]| -> (u32, f64) {
        let c = restriction(&parts, b);
        match c.iter().skip(1).position(|v| v.norm() > cut) {
            Some(j) => (j as u32 + 1, c[j + 1].norm()),
            None => (degree as u32 + 1, 0.0),
        }
    };
    let mut candidates: Vec<Vec<C64>> = Vec::new();
    let mut tried = 1;
    if k == 0 {
        return invalid("no direction to search");
    } else if k == 1 {
        candidates.push(lift(&[C64::new(1.0, 0.0)]));
    } else {
        let dims = 2 * (k - 1);
        let g = ((1000f64).powf(1.0 / dims as f64).round() as usize).max(3);
        let total = g.pow(dims as u32);
        tried = total;
        let range = |i: usize, t: usize| {
            if i < k - 1 {
                t as f64 / (g - 1) as f64 * PI / 2.0
            } else {
                t as f64 / g as f64 * 2.0 * PI
            }
        };
        let mut scored: Vec<(f64, Vec<f64>)> = (0..total)
            .map(|idx| {
                let mut r = idx;
                let x: Vec<f64> = (0..dims)
                    .map(|i| {
                        let t = r % g;
                        r /= g;
                        range(i, t)
                    })
                    .collect();
                (contact(&lift(&sphere_point(k, &x))), x)
            })
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, x0) in scored.into_iter().take(restarts.max(1)) {
            let (x, _) = nelder_mead(
                |x| contact(&lift(&sphere_point(k, x))),
                &x0,
                PI / (4.0 * g as f64),
                4000,
                1e-16,
            );
            candidates.push(lift(&sphere_point(k, &x)));
        }
    }
    let mut best: Option<(u32, f64, Vec<C64>)> = None;
    for b in candidates {
        let (order, margin) = order_of(&b);
        let better = match &best {
            None => true,
            Some((o, m, _)) => order > *o || (order == *o && margin < *m),
        };
        if better {
            best = Some((order, margin, b));
        }
    }
    let (order, margin, witness) = best.expect("at least one candidate");
    Ok(LineScan {
        contained: order as usize > degree,
        order,
        witness,
        margin,
        directions_tried: tried,
    })
}

/// Budget of the disk search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskSearch {
    /// Zero-set seeds per scale.
    pub candidates: usize,
    pub seed: u64,
    /// Rays of the graph continuation; also the Fourier sample count.
    pub rays: usize,
    /// Grid step of the Brody certificate of each candidate.
    pub brody_step: f64,
}

impl Default for DiskSearch {
    fn default() -> Self {
        DiskSearch {
            candidates: 24,
            seed: 0,
            rays: 32,
            brody_step: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub k: f64,
    pub zero_points: usize,
    pub disks: usize,
    pub failures: usize,
    /// Largest `|f'(0)|` found, measured in the rescaled (`k`) metric.
    pub best_derivative: Option<f64>,
    /// `|g'(0)|` of its Brody reparametrization.
    pub brody_derivative: Option<f64>,
    /// `best_derivative / sqrt k`, the same disk in the unscaled metric.
    pub unscaled: Option<f64>,
}

/// Largest slope `|d phi / dw|` a graph disk may reach.
const MAX_SLOPE: f64 = 4.0;

/// Radial step of the graph continuation.
const RAY_STEP: f64 = 0.05;

/// The graph `w -> q + w v + phi(w) nu` of `{s = 0}` continued along
/// `rays` rays from `w = 0`. Each ray stops when Newton fails, the slope
/// exceeds `MAX_SLOPE`, or the graph leaves the ball of radius `region`.
/// Returns the common radius `rho` all rays reached and the graph at
/// `w = rho e^{2 pi i t / rays}`.
fn widest_graph_disk(
    eval: &Evaluator,
    q: &[C64],
    v: &[C64],
    nu: &[C64],
    rays: usize,
    region: f64,
) -> Option<(f64, Vec<Vec<C64>>)> {
    let max_steps = (2.0 * region / RAY_STEP).ceil() as usize;
    let point =
        |w: C64, phi: C64| -> Vec<C64> { q.iter().zip(v).zip(nu).map(|((a, b), c)| a + b * w + c * phi).collect() };
    let mut paths: Vec<Vec<Vec<C64>>> = Vec::with_capacity(rays);
    let mut reach = max_steps;
    for r in 0..rays {
        let dir = C64::from_polar(1.0, 2.0 * PI * r as f64 / rays as f64);
        let mut phi = ZERO;
        let mut slope = ZERO;
        let mut path = Vec::new();
        'ray: for i in 1..=reach {
            let w = dir * (RAY_STEP * i as f64);
            phi += slope * dir * RAY_STEP;
            let mut converged = false;
            for _ in 0..12 {
                let x = point(w, phi);
                let vg = eval.value_gradient(&x);
                let g = &vg.gradient[0];
                let dnu: C64 = g.iter().zip(nu).map(|(a, b)| a * b).sum();
                let dv: C64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
                if dnu.norm() == 0.0 || (dv / dnu).norm() > MAX_SLOPE {
                    break 'ray;
                }
                slope = -dv / dnu;
                let step = vg.value[0] / dnu;
                phi -= step;
                let weight = (-0.5 * PI * x.iter().map(|c| c.norm_sqr()).sum::<f64>()).exp();
                if step.norm() < 1e-13 * (1.0 + phi.norm()) || vg.value[0].norm() * weight < 1e-15 {
                    converged = true;
                    break;
                }
            }
            let x = point(w, phi);
            if !converged || vnorm(&x) > region {
                break;
            }
            path.push(x);
        }
        reach = reach.min(path.len());
        if reach == 0 {
            return None;
        }
        paths.push(path);
    }
    let boundary = paths.into_iter().map(|p| p[reach - 1].clone()).collect();
    Some((RAY_STEP * reach as f64, boundary))
}

/// Newton with minimum-norm steps from `x0` to `{s = 0}`, using the
/// direct evaluation. Steps are capped at 0.25 and the total distance at 1.
fn project_to_zero(eval: &Evaluator, x0: &[C64]) -> Option<Vec<C64>> {
    let mut x = x0.to_vec();
    for _ in 0..60 {
        let vg = eval.value_gradient(&x);
        let g = &vg.gradient[0];
        let g2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        if g2 == 0.0 {
            return None;
        }
        let weight = (-0.5 * PI * x.iter().map(|c| c.norm_sqr()).sum::<f64>()).exp();
        if vg.value[0].norm() * weight < 1e-14 {
            return Some(x);
        }
        let t = vg.value[0] / g2;
        let step: Vec<C64> = g.iter().map(|c| c.conj() * t).collect();
        let damp = (0.25 / vnorm(&step)).min(1.0);
        for (xi, si) in x.iter_mut().zip(&step) {
            *xi -= si * damp;
        }
        let moved: Vec<C64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        if vnorm(&moved) > 1.0 {
            return None;
        }
    }
    None
}

/// Taylor coefficients of a disk from its values on the unit circle.
fn fourier_disk(boundary: &[Vec<C64>]) -> Result<DiskMap> {
    let na = boundary.len();
    let n = boundary[0].len();
    let deg = na / 2 - 1;
    let coeffs: Vec<Vec<C64>> = (0..n)
        .map(|j| {
            (0..=deg)
                .map(|k| {
                    boundary
                        .iter()
                        .enumerate()
                        .map(|(t, x)| x[j] * C64::from_polar(1.0, -2.0 * PI * (k * t) as f64 / na as f64))
                        .sum::<C64>()
                        / na as f64
                })
                .collect()
        })
        .collect();
    let sup = boundary.iter().map(|x| vnorm(x)).fold(0.0, f64::max);
    DiskMap::new(coeffs, sup, 1.0)
}

/// For each `(k, family)`, look for holomorphic disks in the zero set of a
/// hypersurface section inside the ball of radius `sqrt k` and report the
/// largest derivative at the center. Disks are graphs over tangent lines
/// through sampled zeros, each Brody-reparametrized; this is a lower bound
/// for the extremal problem. Families with an empty lattice are skipped.
pub fn derivative_bound_experiment(
    families: &[(f64, PeakFamily)],
    search: &DiskSearch,
    tol: &Tolerances,
) -> Result<Vec<ScaleRow>> {
    let mut rows = Vec::new();
    for (idx, (k, family)) in families.iter().enumerate() {
        if family.m != 1 {
            return invalid("the experiment needs hypersurface sections");
        }
        if !(*k > 0.0) {
            return invalid("scales must be positive");
        }
        if family.lattice.is_empty() {
            continue;
        }
        let n = family.n();
        if n < 2 {
            return invalid("hypersurfaces need n >= 2");
        }
        let region = k.sqrt();
        // zeros are only needed to zero_tol, far below which peaks are dropped
        let eval = family.evaluator(family.cutoff_radius(tol.zero_tol * 1e-3));
        let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
        rng.set_stream(idx as u64);
        // projection only moves a unit distance, so oversample the seeds
        let mut zeros: Vec<(Vec<C64>, Vec<C64>)> = Vec::new();
        for _ in 0..8 * search.candidates {
            if zeros.len() >= search.candidates {
                break;
            }
            let u = random_unit(n, &mut rng);
            let r = region * 0.8 * rng.gen::<f64>().powf(1.0 / (2 * n) as f64);
            let seed: Vec<C64> = u.into_iter().map(|c| c * r).collect();
            let dir = random_unit(n, &mut rng);
            if let Some(q) = project_to_zero(&eval, &seed) {
                if vnorm(&q) < region {
                    zeros.push((q, dir));
                }
            }
        }
        let found: Vec<Option<(f64, f64)>> = zeros
            .par_iter()
            .map(|(q, d)| {
                let g = eval.value_gradient(q).gradient.remove(0);
                let gn = vnorm(&g);
                if gn == 0.0 {
                    return None;
                }
                let nu: Vec<C64> = g.iter().map(|c| c.conj() / gn).collect();
                let proj: C64 = g.iter().zip(d).map(|(a, b)| a * b).sum::<C64>() / gn;
                let t: Vec<C64> = d.iter().zip(&nu).map(|(a, b)| a - b * proj).collect();
                let tn = vnorm(&t);
                if tn < 1e-12 {
                    return None;
                }
                let v: Vec<C64> = t.iter().map(|c| c / tn).collect();
                let (rho, boundary) = widest_graph_disk(&eval, q, &v, &nu, search.rays, region)?;
                let disk = fourier_disk(&boundary).ok()?;
                let (_, cert) = brody_reparametrize(&disk, search.brody_step).ok()?;
                Some((rho, cert.j1_max))
            })
            .collect();
        let disks = found.iter().flatten().count();
        let best = found
            .iter()
            .flatten()
            .copied()
            .reduce(|a, b| if b.0 > a.0 { b } else { a });
        rows.push(ScaleRow {
            k: *k,
            zero_points: zeros.len(),
            disks,
            failures: zeros.len() - disks,
            best_derivative: best.map(|b| b.0),
            brody_derivative: best.map(|b| b.1),
            unscaled: best.map(|b| b.0 / region),
        });
    }
    Ok(rows)
}

/// Sections for the experiment at scale `k` in `C^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentFamily {
    /// Independent uniform coefficients in the unit disk on the lattice of
    /// the ball of radius `sqrt k`, padded by 2.
    Random,
    /// A single peak whose zero set is the line `z_n = 0`.
    Line,
}

pub fn experiment_family(kind: ExperimentFamily, n: usize, l: u32, k: f64, seed: u64) -> Result<PeakFamily> {
    if !(k > 0.0) {
        return invalid("scales must be positive");
    }
    match kind {
        ExperimentFamily::Line => {
            let lat = Lattice::from_points(n, vec![vec![ZERO; n]]);
            let cls = color_classes(&lat, 1.0);
            let mut f = PeakFamily::zeros(lat, cls, 1, l.max(1));
            let mut e = vec![0; n];
            e[n - 1] = 1;
            let i = f.basis().index_of(&e).expect("linear monomial");
            f.coeffs[0][i] = C64::new(1.0, 0.0);
            Ok(f)
        }
        ExperimentFamily::Random => {
            let lat = discretize(n, k.sqrt() + 2.0)?;
            let cls = color_classes(&lat, 1.0);
            let mut f = PeakFamily::zeros(lat, cls, 1, l);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for h in f.coeffs.iter_mut() {
                for c in h.iter_mut() {
                    *c = C64::from_polar(rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>());
                }
            }
            Ok(f)
        }
    }
}

pub fn experiment_csv(rows: &[ScaleRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
    let mut out = String::from("k,zero_points,disks,failures,best_derivative,brody_derivative,unscaled\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            r.zero_points,
            r.disks,
            r.failures,
            opt(r.best_derivative),
            opt(r.brody_derivative),
            opt(r.unscaled)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn identity() -> DiskMap {
        DiskMap::polynomial(vec![vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap()
    }

    #[test]
    fn jacobian_of_identity_and_square() {
        assert_eq!(poincare_jacobian(&identity(), c(0.0, 0.0)).unwrap(), 0.5);
        assert!(poincare_jacobian(&identity(), c(0.999, 0.0)).unwrap() < 1e-3);
        let sq = DiskMap::polynomial(vec![vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert!((poincare_jacobian(&sq, c(0.5, 0.0)).unwrap() - 0.375).abs() < 1e-15);
        assert!(poincare_jacobian(&sq, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn identity_reparametrizes_to_quarter_scaling() {
        let (g, cert) = brody_reparametrize(&identity(), 0.01).unwrap();
        assert_eq!(cert.p0, c(0.0, 0.0));
        assert!((g.eval_derivative(c(0.0, 0.0))[0] - c(0.25, 0.0)).norm() < 1e-15);
        assert!(cert.sup_ratio <= C2 + 1e-12 && cert.holds);
    }

    #[test]
    fn exponential_certificate() {
        let mut a = vec![c(1.0, 0.0)];
        for k in 1..=40 {
            let prev = a[k - 1];
            a.push(prev * 5.0 / k as f64);
        }
        // |a_k| <= e^5 5^k / k! <= e^{10} 2^-k ... use the Cauchy bound on |z| = 2
        let f = DiskMap::new(vec![a], (10f64).exp(), 2.0).unwrap();
        let (g, cert) = brody_reparametrize(&f, 0.01).unwrap();
        assert!(cert.holds, "{cert:?}");
        assert!(cert.f_ratio <= C1 * (1.0 + 1e-12));
        for t in 0..100 {
            let w = C64::from_polar(0.9 * (t % 10) as f64 / 10.0, t as f64 * 0.7);
            let z = cert.preimage(w);
            let diff = (f.eval(z)[0] - g.eval(w)[0]).norm();
            assert!(diff <= 1e-8 * f.eval(z)[0].norm().max(1.0), "{diff}");
        }
    }

    #[test]
    fn constant_map_is_degenerate() {
        let f = DiskMap::polynomial(vec![vec![c(2.0, 0.0)]]).unwrap();
        assert!(matches!(brody_reparametrize(&f, 0.01), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn derivative_is_coefficient_shift() {
        let f = DiskMap::polynomial(vec![vec![c(1.0, 0.0), c(2.0, 1.0), c(0.0, 3.0)]]).unwrap();
        let d = f.derivative();
        let z = c(0.3, -0.2);
        assert!((d.eval(z)[0] - f.eval_derivative(z)[0]).norm() < 1e-15);
    }

    #[test]
    fn truncation_of_polynomial_is_certified_inside_unit_disk() {
        let p = PolynomialMap::from_terms(1, 1, (0..8u32).map(|k| (0, vec![k], c(1.0, 0.0)))).unwrap();
        let f = DiskMap::from_polynomial(&p, 4).unwrap();
        let z = c(0.4, 0.1);
        let err = (p.eval(&[z])[0] - f.eval(z)[0]).norm();
        assert!(err > 0.0 && err <= f.tail_bound(z.norm()));
    }

    #[test]
    fn conic_tangent_line_has_order_two() {
        let one = Complex::<i64>::new(1, 0);
        let zero = Complex::<i64>::new(0, 0);
        let s = PolynomialMap::from_terms(
            2,
            1,
            [(0, vec![2, 0], one), (0, vec![0, 2], one), (0, vec![0, 0], -one)],
        )
        .unwrap();
        assert_eq!(line_tangency_order(&s, &[one, zero], &[zero, one], 0.0).unwrap(), 2);
        let lin = PolynomialMap::from_terms(2, 1, [(0, vec![0, 1], one)]).unwrap();
        assert_eq!(line_tangency_order(&lin, &[zero, zero], &[one, zero], 0.0).unwrap(), 2);
    }

    #[test]
    fn scan_of_conic_finds_tangent() {
        let s = PolynomialMap::from_terms(
            2,
            1,
            [
                (0, vec![2, 0], c(1.0, 0.0)),
                (0, vec![0, 2], c(1.0, 0.0)),
                (0, vec![0, 0], c(-1.0, 0.0)),
            ],
        )
        .unwrap();
        let z = [c(0.6, 0.0), c(0.8, 0.0)];
        let scan = max_line_tangency(&s, &z, 3, 4, &Tolerances::default()).unwrap();
        assert_eq!(scan.order, 2);
        assert!(!scan.contained);
    }
}
