//! Holomorphic polynomial maps `C^n -> C^m` stored as sparse multi-index
//! coefficient data.
//!
//! The coefficient type is generic so that restrictions and affine
//! substitutions can be carried out exactly over the Gaussian integers; the
//! numerical code paths use [`C64`].

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

/// Exponent multi-index over the domain variables.
pub type Multi = Vec<u32>;

/// Ring operations needed by [`PolynomialMap`].
pub trait Coefficient:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn from_u64(k: u64) -> Self;
    /// Division by a positive integer known to divide `self` (exact for
    /// integer coefficient rings).
    fn div_u64(&self, k: u64) -> Self;
    /// Whether the value counts as zero at tolerance `tol`. Exact rings
    /// ignore the tolerance.
    fn is_negligible(&self, tol: f64) -> bool;
    fn magnitude(&self) -> f64;
}

impl Coefficient for C64 {
    fn from_u64(k: u64) -> Self {
        C64::new(k as f64, 0.0)
    }
    fn div_u64(&self, k: u64) -> Self {
        self / k as f64
    }
    fn is_negligible(&self, tol: f64) -> bool {
        self.norm() <= tol
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Coefficient for Complex<i64> {
    fn from_u64(k: u64) -> Self {
        Complex::new(k as i64, 0)
    }
    fn div_u64(&self, k: u64) -> Self {
        let k = k as i64;
        debug_assert!(self.re % k == 0 && self.im % k == 0, "inexact division");
        Complex::new(self.re / k, self.im / k)
    }
    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
    fn magnitude(&self) -> f64 {
        ((self.re as f64).powi(2) + (self.im as f64).powi(2)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialMap<T: Coefficient = C64> {
    n: usize,
    m: usize,
    terms: BTreeMap<(usize, Multi), T>,
}

impl<T: Coefficient> PolynomialMap<T> {
    pub fn zero(n: usize, m: usize) -> Self {
        PolynomialMap {
            n,
            m,
            terms: BTreeMap::new(),
        }
    }

    /// Builds a map from `(component, exponent, coefficient)` triples,
    /// rejecting repeated `(component, exponent)` pairs.
    pub fn from_terms<I>(n: usize, m: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Multi, T)>,
    {
        let mut map = Self::zero(n, m);
        for (j, alpha, c) in terms {
            map.check_index(j, &alpha)?;
            if map.terms.contains_key(&(j, alpha.clone())) {
                return invalid(format!("duplicate term j={j} alpha={alpha:?}"));
            }
            if !c.is_zero() {
                map.terms.insert((j, alpha), c);
            }
        }
        Ok(map)
    }

    /// The constant map with value `c` in every component.
    pub fn constant(n: usize, values: &[T]) -> Self {
        let mut map = Self::zero(n, values.len());
        for (j, c) in values.iter().enumerate() {
            map.add_term(j, vec![0; n], c.clone());
        }
        map
    }

    /// The `i`-th coordinate function as a scalar map.
    pub fn variable(n: usize, i: usize) -> Self {
        let mut alpha = vec![0; n];
        alpha[i] = 1;
        let mut map = Self::zero(n, 1);
        map.add_term(0, alpha, T::one());
        map
    }

    fn check_index(&self, j: usize, alpha: &[u32]) -> Result<()> {
        if j >= self.m {
            return invalid(format!("component {j} out of range (m = {})", self.m));
        }
        if alpha.len() != self.n {
            return invalid(format!("multi-index has length {}, expected {}", alpha.len(), self.n));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &[u32], &T)> {
        self.terms.iter().map(|((j, a), c)| (*j, a.as_slice(), c))
    }

    pub fn coeff(&self, j: usize, alpha: &[u32]) -> T {
        self.terms.get(&(j, alpha.to_vec())).cloned().unwrap_or_else(T::zero)
    }

    /// Total degree; `None` for the zero map.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, a)| a.iter().sum()).max()
    }

    /// Accumulates `c` into the coefficient of `(j, alpha)`.
    pub fn add_term(&mut self, j: usize, alpha: Multi, c: T) {
        debug_assert!(j < self.m && alpha.len() == self.n);
        let key = (j, alpha);
        let v = match self.terms.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if !v.is_zero() {
            self.terms.insert(key, v);
        }
    }

    /// Single component as a scalar map.
    pub fn component(&self, j: usize) -> Self {
        let mut out = Self::zero(self.n, 1);
        for ((jj, a), c) in &self.terms {
            if *jj == j {
                out.terms.insert((0, a.clone()), c.clone());
            }
        }
        out
    }

    /// Stacks scalar maps into a vector-valued map.
    pub fn stack(parts: &[Self]) -> Result<Self> {
        let n = parts.first().map(|p| p.n).unwrap_or(0);
        let mut out = Self::zero(n, parts.len());
        for (j, p) in parts.iter().enumerate() {
            if p.n != n || p.m != 1 {
                return invalid("stack expects scalar maps over a common domain");
            }
            for ((_, a), c) in &p.terms {
                out.terms.insert((j, a.clone()), c.clone());
            }
        }
        Ok(out)
    }

    pub fn eval(&self, z: &[T]) -> Vec<T> {
        assert_eq!(z.len(), self.n, "point dimension mismatch");
        let mut out = vec![T::zero(); self.m];
        for ((j, a), c) in &self.terms {
            out[*j] = out[*j].clone() + c.clone() * monomial(z, a);
        }
        out
    }

    pub fn derivative(&self, var: usize) -> Self {
        assert!(var < self.n);
        let mut out = Self::zero(self.n, self.m);
        for ((j, a), c) in &self.terms {
            if a[var] == 0 {
                continue;
            }
            let mut b = a.clone();
            b[var] -= 1;
            out.add_term(*j, b, c.clone() * T::from_u64(a[var] as u64));
        }
        out
    }

    /// Directional derivative `sum_i b_i d/dz_i`.
    pub fn directional_derivative(&self, b: &[T]) -> Self {
        assert_eq!(b.len(), self.n);
        let mut out = Self::zero(self.n, self.m);
        for (i, bi) in b.iter().enumerate() {
            if bi.is_zero() {
                continue;
            }
            out = out.add(&self.derivative(i).scale(bi.clone()));
        }
        out
    }

    /// Jacobian at `z`, row `j` holding the gradient of component `j`.
    pub fn jacobian_at(&self, z: &[T]) -> Vec<Vec<T>> {
        let mut jac = vec![vec![T::zero(); self.n]; self.m];
        for i in 0..self.n {
            let col = self.derivative(i).eval(z);
            for (j, v) in col.into_iter().enumerate() {
                jac[j][i] = v;
            }
        }
        jac
    }

    /// Hessians at `z`: `hess[j][a][b] = d^2 F_j / dz_a dz_b`.
    pub fn hessian_at(&self, z: &[T]) -> Vec<Vec<Vec<T>>> {
        let mut hess = vec![vec![vec![T::zero(); self.n]; self.n]; self.m];
        for a in 0..self.n {
            let da = self.derivative(a);
            for b in a..self.n {
                let vals = da.derivative(b).eval(z);
                for (j, v) in vals.into_iter().enumerate() {
                    hess[j][a][b] = v.clone();
                    hess[j][b][a] = v;
                }
            }
        }
        hess
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m), "shape mismatch");
        let mut out = self.clone();
        for ((j, a), c) in &other.terms {
            out.add_term(*j, a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = Self::zero(self.n, self.m);
        for ((j, a), c) in &self.terms {
            out.add_term(*j, a.clone(), c.clone() * s.clone());
        }
        out
    }

    /// Product of each component with the scalar map `u`.
    pub fn mul_scalar_map(&self, u: &Self) -> Self {
        assert_eq!(u.m, 1, "multiplier must be scalar");
        assert_eq!(u.n, self.n);
        let mut out = Self::zero(self.n, self.m);
        for ((j, a), c) in &self.terms {
            for ((_, b), d) in &u.terms {
                let e: Multi = a.iter().zip(b).map(|(x, y)| x + y).collect();
                out.add_term(*j, e, c.clone() * d.clone());
            }
        }
        out
    }

    /// Drops every term of total degree above `deg`.
    pub fn truncate(&self, deg: u32) -> Self {
        let mut out = Self::zero(self.n, self.m);
        for ((j, a), c) in &self.terms {
            if a.iter().sum::<u32>() <= deg {
                out.terms.insert((*j, a.clone()), c.clone());
            }
        }
        out
    }

    /// The map `w -> F(A w + b)` where `A` is `n x k` (row `i` expresses the
    /// old variable `z_i` in the new variables) and `b` has length `n`.
    pub fn compose_affine(&self, a: &[Vec<T>], b: &[T]) -> Result<Self> {
        if a.len() != self.n || b.len() != self.n {
            return invalid("affine substitution has wrong number of rows");
        }
        let k = a.first().map(|r| r.len()).unwrap_or(0);
        if a.iter().any(|r| r.len() != k) {
            return invalid("ragged affine matrix");
        }
        let subs: Vec<PolynomialMap<T>> = (0..self.n)
            .map(|i| {
                let mut s = PolynomialMap::zero(k, 1);
                s.add_term(0, vec![0; k], b[i].clone());
                for (c, aic) in a[i].iter().enumerate() {
                    let mut e = vec![0; k];
                    e[c] = 1;
                    s.add_term(0, e, aic.clone());
                }
                s
            })
            .collect();
        let max_deg = self
            .terms
            .keys()
            .map(|(_, a)| a.iter().copied().max().unwrap_or(0))
            .max()
            .unwrap_or(0);
        // powers[i][e] = subs[i]^e
        let powers: Vec<Vec<PolynomialMap<T>>> = subs
            .iter()
            .map(|s| {
                let mut p = vec![PolynomialMap::constant(k, &[T::one()])];
                for e in 1..=max_deg as usize {
                    let next = p[e - 1].mul_scalar_map(s);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = PolynomialMap::zero(k, self.m);
        for ((j, alpha), c) in &self.terms {
            let mut term = PolynomialMap::constant(k, std::slice::from_ref(c));
            for (i, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    term = term.mul_scalar_map(&powers[i][e as usize]);
                }
            }
            for ((_, beta), v) in term.terms {
                out.add_term(*j, beta, v);
            }
        }
        Ok(out)
    }

    /// `w -> F(w + p)`.
    pub fn translate(&self, p: &[T]) -> Self {
        let id: Vec<Vec<T>> = (0..self.n)
            .map(|i| (0..self.n).map(|c| if c == i { T::one() } else { T::zero() }).collect())
            .collect();
        self.compose_affine(&id, p).expect("square identity substitution")
    }

    /// Coefficients of `t -> F_j(z + t b)` by multinomial expansion.
    pub fn restrict_to_line(&self, j: usize, z: &[T], b: &[T]) -> Vec<T> {
        let a: Vec<Vec<T>> = b.iter().map(|bi| vec![bi.clone()]).collect();
        let line = self.component(j).compose_affine(&a, z).expect("line substitution");
        let deg = self.degree().unwrap_or(0) as usize;
        let mut out = vec![T::zero(); deg + 1];
        for ((_, e), c) in line.terms {
            out[e[0] as usize] = c;
        }
        out
    }

    /// Coefficients of `t -> F_j(z + t b)` by repeated directional
    /// differentiation, `c_k = (b . grad)^k F_j (z) / k!`.
    pub fn restrict_by_differentiation(&self, j: usize, z: &[T], b: &[T]) -> Vec<T> {
        let deg = self.degree().unwrap_or(0) as usize;
        let mut cur = self.component(j);
        let mut fact: u64 = 1;
        let mut out = Vec::with_capacity(deg + 1);
        for k in 0..=deg {
            if k > 0 {
                cur = cur.directional_derivative(b);
                fact *= k as u64;
            }
            out.push(cur.eval(z)[0].div_u64(fact));
        }
        out
    }
}

impl PolynomialMap<C64> {
    /// Largest coefficient modulus: the norm used on jet spaces.
    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Removes coefficients with modulus at most `tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.n, self.m);
        for ((j, a), c) in &self.terms {
            if c.norm() > tol {
                out.terms.insert((*j, a.clone()), *c);
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolynomialMapWire::from(self)).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: PolynomialMapWire = serde_json::from_str(s)
            .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
        wire.try_into()
    }
}

pub(crate) fn monomial<T: Coefficient>(z: &[T], alpha: &[u32]) -> T {
    let mut acc = T::one();
    for (zi, &e) in z.iter().zip(alpha) {
        for _ in 0..e {
            acc = acc * zi.clone();
        }
    }
    acc
}

/// JSON wire format `{"n","m","terms":[{"j","alpha","re","im"}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialMapWire {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<TermWire>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermWire {
    pub j: usize,
    pub alpha: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

impl From<&PolynomialMap<C64>> for PolynomialMapWire {
    fn from(p: &PolynomialMap<C64>) -> Self {
        PolynomialMapWire {
            n: p.n,
            m: p.m,
            terms: p
                .terms()
                .map(|(j, a, c)| TermWire {
                    j,
                    alpha: a.to_vec(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<PolynomialMapWire> for PolynomialMap<C64> {
    type Error = Error;

    fn try_from(w: PolynomialMapWire) -> Result<Self> {
        if w.n == 0 || w.m == 0 {
            return invalid("polynomial map needs n >= 1 and m >= 1");
        }
        if w.terms.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()) {
            return invalid("non-finite coefficient");
        }
        PolynomialMap::from_terms(
            w.n,
            w.m,
            w.terms.into_iter().map(|t| (t.j, t.alpha, C64::new(t.re, t.im))),
        )
    }
}

impl Serialize for PolynomialMap<C64> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialMapWire::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolynomialMap<C64> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = PolynomialMapWire::deserialize(d)?;
        wire.try_into().map_err(serde::de::Error::custom)
    }
}

/// Multinomial-free helper: `C(a, b)` for small arguments.
pub fn binomial(a: u64, b: u64) -> u64 {
    if b > a {
        return 0;
    }
    let b = b.min(a - b);
    let mut r: u64 = 1;
    for i in 0..b {
        r = r * (a - i) / (i + 1);
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Gi = Complex<i64>;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn quadric() -> PolynomialMap {
        // z3 - z1^2 - z2^2
        PolynomialMap::from_terms(
            3,
            1,
            vec![
                (0, vec![0, 0, 1], c(1.0, 0.0)),
                (0, vec![2, 0, 0], c(-1.0, 0.0)),
                (0, vec![0, 2, 0], c(-1.0, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn eval_and_derivatives() {
        let f = quadric();
        let z = [c(1.0, 1.0), c(0.0, 2.0), c(3.0, 0.0)];
        let v = f.eval(&z)[0];
        let expect = z[2] - z[0] * z[0] - z[1] * z[1];
        assert!((v - expect).norm() < 1e-14);
        let jac = f.jacobian_at(&[C64::zero(); 3]);
        assert_eq!(jac[0], vec![C64::zero(), C64::zero(), C64::one()]);
        let h = f.hessian_at(&[C64::zero(); 3]);
        assert_eq!(h[0][0][0], c(-2.0, 0.0));
        assert_eq!(h[0][0][1], C64::zero());
    }

    #[test]
    fn duplicate_terms_rejected() {
        let r = PolynomialMap::from_terms(1, 1, vec![(0, vec![1], c(1.0, 0.0)), (0, vec![1], c(2.0, 0.0))]);
        assert!(r.is_err());
    }

    #[test]
    fn bad_index_rejected() {
        assert!(PolynomialMap::from_terms(2, 1, vec![(1, vec![1, 0], c(1.0, 0.0))]).is_err());
        assert!(PolynomialMap::from_terms(2, 1, vec![(0, vec![1], c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn json_schema() {
        let f = quadric();
        let s = f.to_json();
        assert!(s.contains("\"terms\""));
        assert!(s.contains("\"alpha\""));
        let g = PolynomialMap::from_json(&s).unwrap();
        assert_eq!(f, g);
        let err = PolynomialMap::from_json("{\"n\": 2, \"m\": 1, \"terms\": [").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }

    #[test]
    fn restriction_of_circle_at_tangent_point() {
        // z1^2 + z2^2 - 1 at (1, 0) along (0, 1) restricts to t^2.
        let s = PolynomialMap::<Gi>::from_terms(
            2,
            1,
            vec![
                (0, vec![2, 0], Gi::new(1, 0)),
                (0, vec![0, 2], Gi::new(1, 0)),
                (0, vec![0, 0], Gi::new(-1, 0)),
            ],
        )
        .unwrap();
        let z = [Gi::new(1, 0), Gi::new(0, 0)];
        let b = [Gi::new(0, 0), Gi::new(1, 0)];
        let r = s.restrict_to_line(0, &z, &b);
        assert_eq!(r, vec![Gi::zero(), Gi::zero(), Gi::one()]);
        assert_eq!(r, s.restrict_by_differentiation(0, &z, &b));
    }

    #[test]
    fn translate_matches_eval() {
        let f = quadric();
        let p = [c(0.5, -1.0), c(2.0, 0.25), c(-1.0, 1.0)];
        let g = f.translate(&p);
        let w = [c(0.1, 0.2), c(-0.3, 0.0), c(1.0, 1.0)];
        let zw: Vec<C64> = w.iter().zip(&p).map(|(a, b)| a + b).collect();
        assert!((g.eval(&w)[0] - f.eval(&zw)[0]).norm() < 1e-12);
    }

    fn gaussian_int_poly(n: usize, max_deg: u32) -> impl Strategy<Value = PolynomialMap<Gi>> {
        let term = (proptest::collection::vec(0..=max_deg, n), -5i64..=5, -5i64..=5);
        proptest::collection::vec(term, 1..8).prop_map(move |ts| {
            let mut p = PolynomialMap::<Gi>::zero(n, 1);
            for (a, re, im) in ts {
                if a.iter().sum::<u32>() <= max_deg {
                    p.add_term(0, a, Gi::new(re, im));
                }
            }
            p
        })
    }

    proptest! {
        #[test]
        fn restriction_routes_agree_exactly(
            p in gaussian_int_poly(3, 4),
            z in proptest::collection::vec((-3i64..=3, -3i64..=3), 3),
            b in proptest::collection::vec((-2i64..=2, -2i64..=2), 3),
        ) {
            let z: Vec<Gi> = z.into_iter().map(|(a, b)| Gi::new(a, b)).collect();
            let b: Vec<Gi> = b.into_iter().map(|(a, b)| Gi::new(a, b)).collect();
            prop_assert_eq!(p.restrict_to_line(0, &z, &b), p.restrict_by_differentiation(0, &z, &b));
        }

        #[test]
        fn affine_composition_is_evaluation(
            p in gaussian_int_poly(2, 3),
            a in proptest::collection::vec((-2i64..=2, -2i64..=2), 4),
            shift in proptest::collection::vec((-2i64..=2, -2i64..=2), 2),
            w in proptest::collection::vec((-2i64..=2, -2i64..=2), 2),
        ) {
            let g = |v: &(i64, i64)| Gi::new(v.0, v.1);
            let mat = vec![vec![g(&a[0]), g(&a[1])], vec![g(&a[2]), g(&a[3])]];
            let b: Vec<Gi> = shift.iter().map(g).collect();
            let w: Vec<Gi> = w.iter().map(g).collect();
            let q = p.compose_affine(&mat, &b).unwrap();
            let z: Vec<Gi> = (0..2).map(|i| mat[i][0] * w[0] + mat[i][1] * w[1] + b[i]).collect();
            prop_assert_eq!(q.eval(&w), p.eval(&z));
        }
    }
}
