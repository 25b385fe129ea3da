//! Dense truncated polynomials: `Pol_l(C^n, C^m)` stored as coefficient
//! vectors over a fixed monomial basis.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::poly::{Multi, PolynomialMap, C64};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Monomials of total degree `<= l` in `n` variables, graded then
/// lexicographically descending.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub n: usize,
    pub l: u32,
    exps: Vec<Multi>,
    index: HashMap<Multi, usize>,
    /// `prod_i alpha_i!`
    factorials: Vec<f64>,
    /// For each exponent `gamma`, the pairs `(beta, eps)` with `beta + eps = gamma`.
    pairs: Vec<Vec<(usize, usize)>>,
    /// `(alpha - e_var, var)` for every nonzero `alpha`.
    parent: Vec<(usize, usize)>,
    /// Taylor shift table `(alpha, beta, alpha - beta, prod binom(alpha, beta))`.
    shifts: Vec<(usize, usize, usize, f64)>,
    /// Per variable `v`, the triples `(alpha, alpha - e_v, alpha_v)`.
    deriv: Vec<Vec<(usize, usize, f64)>>,
}

impl MonomialBasis {
    pub fn new(n: usize, l: u32) -> Arc<Self> {
        let mut exps = Vec::new();
        for deg in 0..=l {
            let mut level = Vec::new();
            gen(n, deg, &mut Vec::new(), &mut level);
            exps.extend(level);
        }
        let index: HashMap<Multi, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let factorials = exps
            .iter()
            .map(|e| e.iter().map(|&k| (1..=k).map(|x| x as f64).product::<f64>()).product())
            .collect();
        let mut pairs = vec![Vec::new(); exps.len()];
        for (bi, b) in exps.iter().enumerate() {
            for (ei, e) in exps.iter().enumerate() {
                let g: Multi = b.iter().zip(e).map(|(x, y)| x + y).collect();
                if let Some(&gi) = index.get(&g) {
                    pairs[gi].push((bi, ei));
                }
            }
        }
        let parent = exps
            .iter()
            .map(|e| match e.iter().position(|&k| k > 0) {
                Some(v) => {
                    let mut q = e.clone();
                    q[v] -= 1;
                    (index[&q], v)
                }
                None => (0, 0),
            })
            .collect();
        let mut shifts = Vec::new();
        for (ai, a) in exps.iter().enumerate() {
            for (bi, b) in exps.iter().enumerate() {
                if b.iter().zip(a).all(|(x, y)| x <= y) {
                    let rest: Multi = a.iter().zip(b).map(|(x, y)| x - y).collect();
                    let mult: f64 = a
                        .iter()
                        .zip(b)
                        .map(|(&x, &y)| crate::poly::binomial(x as u64, y as u64) as f64)
                        .product();
                    shifts.push((ai, bi, index[&rest], mult));
                }
            }
        }
        let deriv = (0..n)
            .map(|v| {
                exps.iter()
                    .enumerate()
                    .filter(|(_, e)| e[v] > 0)
                    .map(|(i, e)| {
                        let mut q = e.clone();
                        q[v] -= 1;
                        (i, index[&q], e[v] as f64)
                    })
                    .collect()
            })
            .collect();
        Arc::new(MonomialBasis {
            n,
            l,
            exps,
            index,
            factorials,
            pairs,
            parent,
            shifts,
            deriv,
        })
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self) -> &[Multi] {
        &self.exps
    }

    pub fn index_of(&self, alpha: &[u32]) -> Option<usize> {
        self.index.get(alpha).copied()
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.exps[i].iter().sum()
    }

    /// All monomials `t^alpha` of the basis, in basis order.
    pub fn powers(&self, t: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.len()];
        self.powers_into(t, &mut out);
        out
    }

    pub fn powers_into(&self, t: &[C64], out: &mut [C64]) {
        out[0] = C64::new(1.0, 0.0);
        for i in 1..self.len() {
            let (q, v) = self.parent[i];
            out[i] = out[q] * t[v];
        }
    }

    /// `w -> h(t + w)` for a scalar polynomial in this basis.
    pub fn translate(&self, h: &[C64], t: &[C64]) -> Vec<C64> {
        let pw = self.powers(t);
        let mut out = vec![ZERO; self.len()];
        for &(ai, bi, ri, mult) in &self.shifts {
            let c = h[ai];
            if c != ZERO {
                out[bi] += c * mult * pw[ri];
            }
        }
        out
    }

    /// Truncated series of `scale * exp(sum_i a_i w_i)`.
    pub fn exp_linear(&self, a: &[C64], scale: C64) -> Vec<C64> {
        self.powers(a)
            .into_iter()
            .zip(&self.factorials)
            .map(|(p, f)| scale * p / *f)
            .collect()
    }

    /// Truncated product of two scalar polynomials.
    pub fn mul(&self, p: &[C64], q: &[C64]) -> Vec<C64> {
        self.mul_prefix(p, q, self.len())
    }

    /// The first `len` coefficients of the product. Lower-degree bases are
    /// prefixes of this one, so this is the product truncated to a smaller
    /// degree when `len` is that basis' length.
    pub fn mul_prefix(&self, p: &[C64], q: &[C64], len: usize) -> Vec<C64> {
        self.pairs[..len]
            .iter()
            .map(|ps| ps.iter().map(|&(b, e)| p[b] * q[e]).sum())
            .collect()
    }

    /// Value and gradient of a scalar polynomial at `w`.
    pub fn eval_gradient(&self, h: &[C64], w: &[C64]) -> (C64, Vec<C64>) {
        let pw = self.powers(w);
        let mut grad = vec![ZERO; self.n];
        let value = self.eval_gradient_into(h, &pw, &mut grad);
        (value, grad)
    }

    /// As `eval_gradient`, from precomputed `powers` and into `grad`.
    pub fn eval_gradient_into(&self, h: &[C64], powers: &[C64], grad: &mut [C64]) -> C64 {
        for (g, d) in grad.iter_mut().zip(&self.deriv) {
            *g = d.iter().map(|&(i, q, k)| h[i] * powers[q] * k).sum();
        }
        powers.iter().zip(h).map(|(p, c)| c * p).sum()
    }

    pub fn eval(&self, h: &[C64], w: &[C64]) -> C64 {
        self.powers(w).iter().zip(h).map(|(p, c)| c * p).sum()
    }
}

fn gen(vars: usize, deg: u32, cur: &mut Vec<u32>, out: &mut Vec<Multi>) {
    if cur.len() + 1 == vars {
        cur.push(deg);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    if vars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=deg).rev() {
        cur.push(k);
        gen(vars, deg - k, cur, out);
        cur.pop();
    }
}

/// An element of `Pol_l(C^n, C^m)`: `m` coefficient vectors over a shared
/// basis, component-major.
#[derive(Debug, Clone)]
pub struct Jet {
    pub m: usize,
    pub basis: Arc<MonomialBasis>,
    pub coeffs: Vec<C64>,
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
            && self.basis.n == other.basis.n
            && self.basis.l == other.basis.l
            && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn zero(basis: Arc<MonomialBasis>, m: usize) -> Self {
        let len = basis.len();
        Jet {
            m,
            basis,
            coeffs: vec![ZERO; m * len],
        }
    }

    pub fn n(&self) -> usize {
        self.basis.n
    }

    pub fn order(&self) -> u32 {
        self.basis.l
    }

    pub fn component(&self, j: usize) -> &[C64] {
        let len = self.basis.len();
        &self.coeffs[j * len..(j + 1) * len]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut [C64] {
        let len = self.basis.len();
        &mut self.coeffs[j * len..(j + 1) * len]
    }

    /// Coefficient of `w^alpha` in component `j`.
    pub fn coeff(&self, j: usize, alpha: &[u32]) -> C64 {
        self.basis.index_of(alpha).map(|i| self.component(j)[i]).unwrap_or(ZERO)
    }

    /// Value at the expansion point.
    pub fn value(&self) -> Vec<C64> {
        (0..self.m).map(|j| self.component(j)[0]).collect()
    }

    /// Holomorphic Jacobian at the expansion point (`m x n` rows).
    pub fn linear_part(&self) -> Vec<Vec<C64>> {
        let n = self.n();
        (0..self.m)
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let mut e = vec![0; n];
                        e[i] = 1;
                        self.coeff(j, &e)
                    })
                    .collect()
            })
            .collect()
    }

    /// The norm on `Pol_l`: largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn add_assign(&mut self, other: &Jet) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    pub fn added(&self, other: &Jet) -> Jet {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    /// `w -> H(t + w)`.
    pub fn translate(&self, t: &[C64]) -> Jet {
        let mut out = Jet::zero(self.basis.clone(), self.m);
        for j in 0..self.m {
            let tr = self.basis.translate(self.component(j), t);
            out.component_mut(j).copy_from_slice(&tr);
        }
        out
    }

    pub fn eval(&self, w: &[C64]) -> Vec<C64> {
        (0..self.m).map(|j| self.basis.eval(self.component(j), w)).collect()
    }

    pub fn to_polynomial(&self) -> PolynomialMap {
        let mut p = PolynomialMap::zero(self.n(), self.m);
        for j in 0..self.m {
            for (i, e) in self.basis.exps().iter().enumerate() {
                let c = self.component(j)[i];
                if c != ZERO {
                    p.add_term(j, e.clone(), c);
                }
            }
        }
        p
    }

    /// Dense form of a polynomial map of degree `<= basis.l`; higher terms
    /// are dropped.
    pub fn from_polynomial(p: &PolynomialMap, basis: Arc<MonomialBasis>) -> Jet {
        let mut out = Jet::zero(basis, p.m());
        for (j, a, c) in p.terms() {
            if let Some(i) = out.basis.index_of(a) {
                out.component_mut(j)[i] += c;
            }
        }
        out
    }
}

/// Serializable form `(m, n, l, coefficient list)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetWire {
    pub n: usize,
    pub m: usize,
    pub l: u32,
    pub coeffs: Vec<C64>,
}

impl From<&Jet> for JetWire {
    fn from(j: &Jet) -> Self {
        JetWire {
            n: j.n(),
            m: j.m,
            l: j.order(),
            coeffs: j.coeffs.clone(),
        }
    }
}
