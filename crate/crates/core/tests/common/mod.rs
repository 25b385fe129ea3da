//! Oracles shared by the integration tests. None of them goes through the
//! second fundamental form or the library's own grids.
#![allow(dead_code)]

use std::f64::consts::PI;

use ciscurv_core::brody::DiskMap;
use ciscurv_core::{PolynomialMap, C64};
use num_complex::Complex;
use rand::Rng;

pub type Zi = Complex<i64>;

pub type GraphData = Vec<Vec<(Vec<u32>, C64)>>;

fn graph_eval(data: &GraphData, x: &[C64]) -> Vec<C64> {
    data.iter()
        .map(|terms| {
            terms
                .iter()
                .map(|(a, c)| a.iter().zip(x).fold(*c, |acc, (&k, xi)| acc * xi.powu(k)))
                .sum()
        })
        .collect()
}

/// `Dg(x) v` by the four-point holomorphic stencil, accurate to `O(e^4)`.
fn graph_directional(data: &GraphData, x: &[C64], v: &[C64], e: f64) -> Vec<C64> {
    let shifted = |t: C64| -> Vec<C64> {
        let y: Vec<C64> = x.iter().zip(v).map(|(a, b)| a + b * t).collect();
        graph_eval(data, &y)
    };
    let i = C64::new(0.0, 1.0);
    let (a, b, c, d) = (
        shifted(C64::new(e, 0.0)),
        shifted(C64::new(-e, 0.0)),
        shifted(C64::new(0.0, e)),
        shifted(C64::new(0.0, -e)),
    );
    (0..a.len())
        .map(|r| (a[r] - b[r] - i * c[r] + i * d[r]) / (4.0 * e))
        .collect()
}

/// Holomorphic sectional curvature at the origin of the graph
/// `w = g(x)` with `g = O(|x|^2)`, from the induced metric alone:
/// `-2 d/dt d/dtbar h(tv)(v, v)` by a five-point Laplacian in `t`, for unit `v`.
/// The connection term of the curvature vanishes because `dh(0) = 0`.
pub fn fd_holsec(data: &GraphData, v: &[C64], h: f64) -> f64 {
    let phi = |t: C64| -> f64 {
        let x: Vec<C64> = v.iter().map(|c| c * t).collect();
        graph_directional(data, &x, v, 1e-3).iter().map(|c| c.norm_sqr()).sum()
    };
    let ring = phi(C64::new(h, 0.0)) + phi(C64::new(-h, 0.0)) + phi(C64::new(0.0, h)) + phi(C64::new(0.0, -h));
    let lap = (ring - 4.0 * phi(C64::new(0.0, 0.0))) / (h * h);
    -2.0 * lap / 4.0
}

/// `sup |g'|` on the disk of radius `r` from central differences of
/// `g.eval` on a polar grid.
pub fn fd_derivative_sup(g: &DiskMap, r: f64, rings: usize, spokes: usize) -> f64 {
    let e = 1e-6;
    let mut best: f64 = 0.0;
    for i in 0..=rings {
        let rho = r * i as f64 / rings as f64;
        for j in 0..spokes {
            let w = C64::from_polar(rho, 2.0 * PI * j as f64 / spokes as f64);
            let a = g.eval(w + e);
            let b = g.eval(w - e);
            let d: f64 = a
                .iter()
                .zip(&b)
                .map(|(x, y)| ((x - y) / (2.0 * e)).norm_sqr())
                .sum::<f64>()
                .sqrt();
            best = best.max(d);
        }
    }
    best
}

pub fn fd_derivative_at(g: &DiskMap, w: C64) -> f64 {
    let e = 1e-6;
    let a = g.eval(w + e);
    let b = g.eval(w - e);
    a.iter()
        .zip(&b)
        .map(|(x, y)| ((x - y) / (2.0 * e)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Random polynomial disk map `C -> C^m` with coefficients decaying like
/// `0.8^k`, nonconstant.
pub fn random_disk_map<R: Rng>(m: usize, deg: usize, rng: &mut R) -> DiskMap {
    let coeffs: Vec<Vec<C64>> = (0..m)
        .map(|_| {
            (0..=deg)
                .map(|k| {
                    let z = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    z * 0.8f64.powi(k as i32) * if k == 1 { 2.0 } else { 1.0 }
                })
                .collect()
        })
        .collect();
    DiskMap::polynomial(coeffs).expect("valid disk map")
}

/// `count` unit directions of `C^2` modulo phase, `b = (cos a, sin a e^{i p})`.
pub fn direction_grid_c2(count: usize) -> Vec<Vec<C64>> {
    let side = (count as f64).sqrt().ceil() as usize;
    let mut out = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let a = PI / 2.0 * i as f64 / (side - 1) as f64;
            let p = 2.0 * PI * j as f64 / side as f64;
            out.push(vec![C64::new(a.cos(), 0.0), C64::from_polar(a.sin(), p)]);
        }
    }
    out.truncate(count);
    out
}

pub fn zi(re: i64, im: i64) -> Zi {
    Complex::new(re, im)
}

/// `(w_2 - z_2) P(w) + (w_1 - z_1)^r Q(w)` with integer `P`, `Q`: contact
/// of order `r` with the `e_1` line through `z` when `Q(z) != 0`, and
/// containing that line when `Q = 0`.
pub fn contact_poly<R: Rng>(z: &[Zi], r: u32, q_at_z: bool, rng: &mut R) -> PolynomialMap<Zi> {
    let n = z.len();
    let mut rand_poly = |deg: u32| {
        let mut p = PolynomialMap::<Zi>::zero(n, 1);
        for _ in 0..4 {
            let mut a = vec![0u32; n];
            for _ in 0..rng.gen_range(0..=deg) {
                a[rng.gen_range(0..n)] += 1;
            }
            p.add_term(0, a, zi(rng.gen_range(-3..=3), rng.gen_range(-3..=3)));
        }
        p
    };
    let p = rand_poly(2);
    let mut q = rand_poly(1);
    let qz = q.eval(z)[0];
    q.add_term(0, vec![0; n], zi(1, 2) - qz);
    if !q_at_z {
        // the e_1 line through z then lies in the hypersurface
        q = PolynomialMap::zero(n, 1);
    }
    let shift = |i: usize| {
        let mut s = PolynomialMap::<Zi>::variable(n, i);
        s.add_term(0, vec![0; n], -z[i]);
        s
    };
    let mut tail = q;
    for _ in 0..r {
        tail = tail.mul_scalar_map(&shift(0));
    }
    p.mul_scalar_map(&shift(1)).add(&tail)
}
