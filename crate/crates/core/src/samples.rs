//! Named example germs and seeded random generators used by tests,
//! benchmarks and the CLI.

use rand::Rng;

use crate::config::Tolerances;
use crate::error::Result;
use crate::germ::Germ;
use crate::linalg::{gaussian_c, CMat};
use crate::poly::{Multi, PolynomialMap, C64};

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `z_n = 0` in `C^n`.
pub fn hyperplane(n: usize) -> PolynomialMap {
    let mut a = vec![0; n];
    a[n - 1] = 1;
    PolynomialMap::from_terms(n, 1, vec![(0, a, c(1.0))]).expect("valid")
}

/// `z3 - z1^2 - z2^2` in `C^3`.
pub fn quadric_graph() -> PolynomialMap {
    PolynomialMap::from_terms(
        3,
        1,
        vec![
            (0, vec![0, 0, 1], c(1.0)),
            (0, vec![2, 0, 0], c(-1.0)),
            (0, vec![0, 2, 0], c(-1.0)),
        ],
    )
    .expect("valid")
}

/// `z3 - z1^2` in `C^3`: flat along `e2`.
pub fn cylinder() -> PolynomialMap {
    PolynomialMap::from_terms(3, 1, vec![(0, vec![0, 0, 1], c(1.0)), (0, vec![2, 0, 0], c(-1.0))]).expect("valid")
}

/// `z2 - z1^3` in `C^2`, inflected at the origin.
pub fn plane_cubic() -> PolynomialMap {
    PolynomialMap::from_terms(2, 1, vec![(0, vec![0, 1], c(1.0)), (0, vec![3, 0], c(-1.0))]).expect("valid")
}

/// Defining map of the graph `z_{d+r} = g_r(z_1..z_d)`, where `g[r]` lists
/// `(exponent over d variables, coefficient)`.
pub fn graph_map(d: usize, n: usize, g: &[Vec<(Multi, C64)>]) -> PolynomialMap {
    let m = n - d;
    assert_eq!(g.len(), m);
    let mut f = PolynomialMap::zero(n, m);
    for (r, gr) in g.iter().enumerate() {
        let mut a = vec![0; n];
        a[d + r] = 1;
        f.add_term(r, a, c(1.0));
        for (alpha, coef) in gr {
            let mut a = alpha.clone();
            a.resize(n, 0);
            f.add_term(r, a, -coef);
        }
    }
    f
}

/// Graph germ at the origin; `g` should vanish to second order there.
pub fn graph_germ(d: usize, n: usize, g: &[Vec<(Multi, C64)>], tol: &Tolerances) -> Result<Germ> {
    Germ::new(graph_map(d, n, g), vec![c(0.0); n], tol)
}

fn exponents(vars: usize, deg: u32) -> Vec<Multi> {
    if vars == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for k in 0..=deg {
        for mut rest in exponents(vars - 1, deg - k) {
            rest.insert(0, k);
            out.push(rest);
        }
    }
    out
}

/// All exponents over `vars` variables with total degree in `lo..=hi`.
pub fn exponents_between(vars: usize, lo: u32, hi: u32) -> Vec<Multi> {
    (lo..=hi).flat_map(|k| exponents(vars, k)).collect()
}

/// Random Taylor data for a graph germ: every monomial of degree `2..=deg`
/// with a complex Gaussian coefficient.
pub fn random_graph_data<R: Rng>(d: usize, n: usize, deg: u32, rng: &mut R) -> Vec<Vec<(Multi, C64)>> {
    let monos = exponents_between(d, 2, deg.max(2));
    (0..n - d)
        .map(|_| monos.iter().map(|a| (a.clone(), gaussian_c(rng))).collect())
        .collect()
}

pub fn random_graph_germ<R: Rng>(d: usize, n: usize, deg: u32, rng: &mut R, tol: &Tolerances) -> Germ {
    let data = random_graph_data(d, n, deg, rng);
    graph_germ(d, n, &data, tol).expect("graph germs are submersive at the origin")
}

/// Random polynomial map `C^n -> C^(n-d)` of degree `deg`, shifted to vanish
/// at a random point of the polydisk of radius 1/2, together with that
/// point. Draws again if the result is not submersive.
pub fn random_germ<R: Rng>(d: usize, n: usize, deg: u32, rng: &mut R, tol: &Tolerances) -> Germ {
    let m = n - d;
    let monos = exponents_between(n, 1, deg.max(1));
    loop {
        let mut f = PolynomialMap::zero(n, m);
        for j in 0..m {
            for a in &monos {
                // keep higher-order terms from dominating
                let w = 1.0 / (1u32 << a.iter().sum::<u32>()) as f64;
                f.add_term(j, a.clone(), gaussian_c(rng) * (2.0 * w));
            }
        }
        let p: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect();
        let shift = f.eval(&p);
        for (j, s) in shift.into_iter().enumerate() {
            f.add_term(j, vec![0; n], -s);
        }
        if let Ok(g) = Germ::new(f, p, tol) {
            if g.submersion_margin() > 1e-3 {
                return g;
            }
        }
    }
}

/// Random plane curve `{s = 0}` of degree `deg` through a random point.
pub fn random_plane_curve<R: Rng>(deg: u32, rng: &mut R, tol: &Tolerances) -> Germ {
    random_germ(1, 2, deg, rng, tol)
}

/// `F o U^{-1}` at `U p`: the germ moved by an ambient unitary map.
pub fn transform_germ(germ: &Germ, u: &CMat, tol: &Tolerances) -> Result<Germ> {
    let n = germ.n();
    let uinv = u.adjoint();
    let a: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| uinv[(i, j)]).collect()).collect();
    let f = germ.map().compose_affine(&a, &vec![c(0.0); n])?;
    let p: Vec<C64> = (0..n)
        .map(|i| (0..n).map(|j| u[(i, j)] * germ.point()[j]).sum())
        .collect();
    // rounding can push |F(Up)| a little above the base residual
    let relaxed = Tolerances {
        zero_tol: tol.zero_tol.max(1e-9),
        ..*tol
    };
    Germ::new(f, p, &relaxed)
}
