//! Complete-intersection germs `{F = 0}` in flat `C^n`: frames, second
//! fundamental form, curvature values and negativity certifiers.
//!
//! Tangent vectors are given in coordinates of the tangent frame. For a
//! submanifold of flat space
//!
//! ```text
//! Ric(v)           = -2 sum_i |II(e_i, v)|^2
//! Scal             = -4 sum_ij |II(e_i, e_j)|^2
//! HolSec(v)        = -2 |II(v, v)|^2
//! HolBisec(v, v')  = -2 |II(v, v')|^2
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{invalid, Error, Result};
use crate::linalg::{gram_schmidt, hdot, hnorm, sigma_min_cols, singular_values, solve, CMat};
use crate::optim::{multistart, Objective, PgdOptions};
use crate::poly::{PolynomialMap, C64};

const NEWTON_STEPS: usize = 8;

/// Orthonormal tangent and normal frames at the base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frames {
    pub tangent: Vec<Vec<C64>>,
    pub normal: Vec<Vec<C64>>,
}

/// Second fundamental form in unitary frames: `II(e_i, e_j) = sum_r c[i][j][r] f_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sff {
    pub d: usize,
    pub m: usize,
    coeffs: Vec<C64>,
}

impl Sff {
    pub fn zero(d: usize, m: usize) -> Self {
        Sff {
            d,
            m,
            coeffs: vec![C64::new(0.0, 0.0); d * d * m],
        }
    }

    /// Builds the form from `c[i][j][r]`, symmetrizing in `(i, j)`.
    pub fn from_coeffs(c: &[Vec<Vec<C64>>]) -> Self {
        let d = c.len();
        let m = if d > 0 { c[0][0].len() } else { 0 };
        let mut s = Sff::zero(d, m);
        for i in 0..d {
            for j in 0..d {
                for r in 0..m {
                    s.coeffs[(i * d + j) * m + r] = (c[i][j][r] + c[j][i][r]) * 0.5;
                }
            }
        }
        s
    }

    pub fn get(&self, i: usize, j: usize, r: usize) -> C64 {
        self.coeffs[(i * self.d + j) * self.m + r]
    }

    /// `II(u, v)` in normal-frame coordinates; complex bilinear.
    pub fn apply(&self, u: &[C64], v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.m];
        for i in 0..self.d {
            if u[i] == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..self.d {
                let w = u[i] * v[j];
                for (r, o) in out.iter_mut().enumerate() {
                    *o += w * self.get(i, j, r);
                }
            }
        }
        out
    }

    /// Matrix of `w -> II(u, w)`, shape `m x d`.
    pub fn partial(&self, u: &[C64]) -> CMat {
        CMat::from_fn(self.m, self.d, |r, j| {
            (0..self.d).map(|i| u[i] * self.get(i, j, r)).sum()
        })
    }

    /// Frobenius norm `sqrt(sum_ij |II(e_i, e_j)|^2)`.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                for r in 0..self.m {
                    worst = worst.max((self.get(i, j, r) - self.get(j, i, r)).norm());
                }
            }
        }
        worst
    }

    /// The form in the tangent frame `e'_a = sum_i u[i][a] e_i` for a
    /// unitary `u` (`d x d`).
    pub fn change_tangent_frame(&self, u: &CMat) -> Sff {
        let d = self.d;
        let cols: Vec<Vec<C64>> = (0..d).map(|a| u.column(a).iter().copied().collect()).collect();
        let mut c = vec![vec![vec![C64::new(0.0, 0.0); self.m]; d]; d];
        for a in 0..d {
            for b in 0..d {
                c[a][b] = self.apply(&cols[a], &cols[b]);
            }
        }
        Sff::from_coeffs(&c)
    }

    /// The `d*m x d` matrix whose column `j` stacks `II(e_j, .)`; it sends
    /// `v` to the coefficients of `II(v, .)`.
    pub fn ricci_matrix(&self) -> CMat {
        let (d, m) = (self.d, self.m);
        CMat::from_fn(d * m, d, |row, j| {
            let (i, r) = (row / m, row % m);
            self.get(j, i, r)
        })
    }
}

/// A germ of `{F = 0}` at `p`, with frames and second fundamental form
/// computed once at construction.
#[derive(Debug, Clone)]
pub struct Germ {
    map: PolynomialMap,
    point: Vec<C64>,
    d: usize,
    frames: Frames,
    sff: Sff,
    sigma_min: f64,
}

impl Germ {
    /// Checks `|F(p)| <= zero_tol` and surjectivity of `dF(p)`, projects `p`
    /// onto the zero set by Newton's method and caches frames and `II`.
    pub fn new(map: PolynomialMap, point: Vec<C64>, tol: &Tolerances) -> Result<Self> {
        let n = map.n();
        let m = map.m();
        if point.len() != n {
            return invalid(format!("point has {} coordinates, map has n = {n}", point.len()));
        }
        if m >= n {
            return invalid(format!("need m < n for a positive-dimensional germ, got m={m} n={n}"));
        }
        let residual = hnorm(&map.eval(&point));
        if residual > tol.zero_tol {
            return Err(Error::DegenerateGerm(format!(
                "|F(p)| = {residual:e} exceeds zero_tol = {:e}",
                tol.zero_tol
            )));
        }
        let point = newton_project(&map, point);
        let jac = jacobian(&map, &point);
        let sigma_min = singular_values(&jac).first().copied().unwrap_or(0.0);
        if sigma_min < tol.rank_tol {
            return Err(Error::DegenerateGerm(format!(
                "dF(p) is not surjective (smallest singular value {sigma_min:e})"
            )));
        }
        let frames = compute_frames(&jac, n, m)?;
        let sff = compute_sff(&map, &point, &jac, &frames)?;
        Ok(Germ {
            map,
            point,
            d: n - m,
            frames,
            sff,
            sigma_min,
        })
    }

    pub fn map(&self) -> &PolynomialMap {
        &self.map
    }

    pub fn point(&self) -> &[C64] {
        &self.point
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn codim(&self) -> usize {
        self.map.m()
    }

    pub fn frames(&self) -> &Frames {
        &self.frames
    }

    pub fn sff(&self) -> &Sff {
        &self.sff
    }

    /// Smallest singular value of `dF(p)`.
    pub fn submersion_margin(&self) -> f64 {
        self.sigma_min
    }

    /// Ambient vector for tangent-frame coordinates.
    pub fn tangent_vector(&self, coords: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.n()];
        for (c, t) in coords.iter().zip(&self.frames.tangent) {
            for (o, ti) in out.iter_mut().zip(t) {
                *o += c * ti;
            }
        }
        out
    }

    /// Tangent-frame coordinates of an ambient vector (orthogonal
    /// projection onto `T`).
    pub fn tangent_coords(&self, v: &[C64]) -> Vec<C64> {
        self.frames.tangent.iter().map(|t| hdot(t, v)).collect()
    }
}

fn jacobian(map: &PolynomialMap, p: &[C64]) -> CMat {
    let rows = map.jacobian_at(p);
    CMat::from_fn(map.m(), map.n(), |i, j| rows[i][j])
}

/// Minimum-norm Newton steps `p <- p - J^H (J J^H)^{-1} F(p)`.
fn newton_project(map: &PolynomialMap, mut p: Vec<C64>) -> Vec<C64> {
    for _ in 0..NEWTON_STEPS {
        let f = map.eval(&p);
        if hnorm(&f) == 0.0 {
            break;
        }
        let j = jacobian(map, &p);
        let jjh = &j * j.adjoint();
        let Some(y) = solve(&jjh, &f) else { break };
        let step = j.adjoint() * nalgebra::DVector::from_vec(y);
        let next: Vec<C64> = p.iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        if hnorm(&map.eval(&next)) >= hnorm(&f) {
            break;
        }
        p = next;
    }
    p
}

fn compute_frames(jac: &CMat, n: usize, m: usize) -> Result<Frames> {
    // ker dF is the Hermitian complement of the conjugated rows.
    let rows: Vec<Vec<C64>> = (0..m).map(|i| jac.row(i).iter().map(|c| c.conj()).collect()).collect();
    let normal = gram_schmidt(&rows, 1e-14);
    if normal.len() != m {
        return Err(Error::DegenerateGerm("dependent rows in dF(p)".into()));
    }
    let mut all = normal.clone();
    for i in 0..n {
        let mut e = vec![C64::new(0.0, 0.0); n];
        e[i] = C64::new(1.0, 0.0);
        all.push(e);
    }
    let full = gram_schmidt(&all, 1e-8);
    let tangent: Vec<Vec<C64>> = full[m..].to_vec();
    debug_assert_eq!(tangent.len(), n - m);
    Ok(Frames { tangent, normal })
}

fn compute_sff(map: &PolynomialMap, p: &[C64], jac: &CMat, frames: &Frames) -> Result<Sff> {
    let m = map.m();
    let d = frames.tangent.len();
    let hess = map.hessian_at(p);
    // dF(p) restricted to N, as an m x m matrix in the normal frame
    let jn = CMat::from_fn(m, m, |k, r| {
        (0..map.n()).map(|a| jac[(k, a)] * frames.normal[r][a]).sum()
    });
    let lu = jn.lu();
    let mut c = vec![vec![vec![C64::new(0.0, 0.0); m]; d]; d];
    for i in 0..d {
        for j in i..d {
            let rhs: Vec<C64> = (0..m)
                .map(|k| {
                    let mut s = C64::new(0.0, 0.0);
                    for a in 0..map.n() {
                        let ta = frames.tangent[i][a];
                        if ta == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..map.n() {
                            s += hess[k][a][b] * ta * frames.tangent[j][b];
                        }
                    }
                    -s
                })
                .collect();
            let x = lu
                .solve(&nalgebra::DVector::from_vec(rhs))
                .ok_or_else(|| Error::DegenerateGerm("dF(p) restricted to N is singular".into()))?;
            for r in 0..m {
                c[i][j][r] = x[r];
                c[j][i][r] = x[r];
            }
        }
    }
    Ok(Sff::from_coeffs(&c))
}

/// The frames of a germ (cached at construction).
pub fn frames(germ: &Germ) -> Frames {
    germ.frames.clone()
}

pub fn second_fundamental_form(germ: &Germ) -> Sff {
    germ.sff.clone()
}

fn check_unit(v: &[C64], d: usize) -> Result<()> {
    if v.len() != d {
        return invalid(format!("tangent vector has {} coordinates, expected {d}", v.len()));
    }
    let nv = hnorm(v);
    if (nv - 1.0).abs() > 1e-8 {
        return invalid(format!("tangent vector must be a unit vector, norm is {nv}"));
    }
    Ok(())
}

fn basis(d: usize, i: usize) -> Vec<C64> {
    let mut e = vec![C64::new(0.0, 0.0); d];
    e[i] = C64::new(1.0, 0.0);
    e
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

pub fn ricci(germ: &Germ, v: &[C64]) -> Result<f64> {
    check_unit(v, germ.d)?;
    let s = &germ.sff;
    Ok(-2.0
        * (0..germ.d)
            .map(|i| norm_sqr(&s.apply(&basis(germ.d, i), v)))
            .sum::<f64>())
}

/// Scalar curvature `-4 sum_ij |II(e_i, e_j)|^2`; equal to twice the trace of
/// Ricci.
pub fn scalar(germ: &Germ) -> f64 {
    -4.0 * germ.sff.norm().powi(2)
}

/// `2 sum_i Ric(e_i)`, the other expression of the scalar curvature.
pub fn scalar_from_ricci(germ: &Germ) -> f64 {
    2.0 * (0..germ.d)
        .map(|i| ricci(germ, &basis(germ.d, i)).expect("unit basis vector"))
        .sum::<f64>()
}

pub fn holsec(germ: &Germ, v: &[C64]) -> Result<f64> {
    check_unit(v, germ.d)?;
    Ok(-2.0 * norm_sqr(&germ.sff.apply(v, v)))
}

pub fn holbisec(germ: &Germ, v: &[C64], w: &[C64]) -> Result<f64> {
    check_unit(v, germ.d)?;
    check_unit(w, germ.d)?;
    Ok(-2.0 * norm_sqr(&germ.sff.apply(v, w)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurvatureKind {
    Ricci,
    Scalar,
    HolSec,
    HolBisec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "margin", rename_all = "snake_case")]
pub enum Certificate {
    CertifiedNegative,
    CertifiedNotNegative,
    NumericallyNegativeWithMargin(f64),
    Inconclusive,
}

impl Certificate {
    /// Verdict label without the margin, for comparisons across runs.
    pub fn label(&self) -> &'static str {
        match self {
            Certificate::CertifiedNegative => "certified_negative",
            Certificate::CertifiedNotNegative => "certified_not_negative",
            Certificate::NumericallyNegativeWithMargin(_) => "numerically_negative_with_margin",
            Certificate::Inconclusive => "inconclusive",
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(
            self,
            Certificate::CertifiedNegative | Certificate::NumericallyNegativeWithMargin(_)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub kind: CurvatureKind,
    /// Largest value of the curvature over unit directions (the value
    /// closest to zero); for scalar curvature, the value itself.
    pub value: f64,
    /// Quantity the verdict is based on (a singular value or a norm).
    pub margin: f64,
    pub negativity_certificate: Certificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<C64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_pair: Option<Vec<C64>>,
}

/// Ricci negativity: injectivity of `v -> II(v, .)`.
pub fn certify_ricci_negative(germ: &Germ, tol: &Tolerances) -> CurvatureReport {
    let mat = germ.sff.ricci_matrix();
    let (sigma, witness) = smallest_right_singular(&mat);
    let cert = if sigma >= tol.rank_tol {
        Certificate::CertifiedNegative
    } else if sigma <= tol.rank_tol / 10.0 {
        Certificate::CertifiedNotNegative
    } else {
        Certificate::Inconclusive
    };
    CurvatureReport {
        kind: CurvatureKind::Ricci,
        value: -2.0 * sigma * sigma,
        margin: sigma,
        negativity_certificate: cert,
        witness: Some(witness),
        witness_pair: None,
    }
}

/// Smallest singular value of a tall (or square) matrix and a unit vector
/// attaining it.
fn smallest_right_singular(a: &CMat) -> (f64, Vec<C64>) {
    let k = a.ncols();
    // a^H a is small (d x d); its eigenvectors are the right singular
    // vectors, but the SVD is used for accuracy near zero.
    let padded = if a.nrows() < k {
        let mut p = DMatrix::zeros(k, k);
        p.view_mut((0, 0), (a.nrows(), k)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1).then(x.0.cmp(&y.0)))
        .map(|(i, s)| (i, *s))
        .expect("non-empty");
    let v: Vec<C64> = v_t.row(idx).iter().map(|c| c.conj()).collect();
    (sigma, v)
}

pub fn certify_scalar_negative(germ: &Germ, tol: &Tolerances) -> CurvatureReport {
    let nrm = germ.sff.norm();
    let cert = if nrm >= tol.rank_tol {
        Certificate::CertifiedNegative
    } else {
        Certificate::CertifiedNotNegative
    };
    CurvatureReport {
        kind: CurvatureKind::Scalar,
        value: scalar(germ),
        margin: nrm,
        negativity_certificate: cert,
        witness: None,
        witness_pair: None,
    }
}

struct HolSecObjective<'a>(&'a Sff);

impl Objective for HolSecObjective<'_> {
    fn blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.0.d, 1)]
    }

    fn value(&self, x: &[CMat]) -> f64 {
        let v: Vec<C64> = x[0].iter().copied().collect();
        norm_sqr(&self.0.apply(&v, &v))
    }

    fn value_grad(&self, x: &[CMat]) -> (f64, Vec<CMat>) {
        let s = self.0;
        let v: Vec<C64> = x[0].iter().copied().collect();
        let q = s.apply(&v, &v);
        let f = norm_sqr(&q);
        // d q_r / d v_k = 2 sum_j c_kjr v_j
        let g = CMat::from_fn(s.d, 1, |k, _| {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..s.m {
                let dq: C64 = (0..s.d).map(|j| s.get(k, j, r) * v[j]).sum::<C64>() * 2.0;
                acc += q[r] * dq.conj();
            }
            acc * 2.0
        });
        (f, vec![g])
    }
}

struct HolBisecObjective<'a>(&'a Sff);

impl Objective for HolBisecObjective<'_> {
    fn blocks(&self) -> Vec<(usize, usize)> {
        vec![(self.0.d, 1), (self.0.d, 1)]
    }

    fn value(&self, x: &[CMat]) -> f64 {
        let v: Vec<C64> = x[0].iter().copied().collect();
        let w: Vec<C64> = x[1].iter().copied().collect();
        norm_sqr(&self.0.apply(&v, &w))
    }

    fn value_grad(&self, x: &[CMat]) -> (f64, Vec<CMat>) {
        let s = self.0;
        let v: Vec<C64> = x[0].iter().copied().collect();
        let w: Vec<C64> = x[1].iter().copied().collect();
        let q = s.apply(&v, &w);
        let f = norm_sqr(&q);
        let grad_of = |other: &[C64]| {
            CMat::from_fn(s.d, 1, |k, _| {
                let mut acc = C64::new(0.0, 0.0);
                for r in 0..s.m {
                    let dq: C64 = (0..s.d).map(|j| s.get(k, j, r) * other[j]).sum();
                    acc += q[r] * dq.conj();
                }
                acc * 2.0
            })
        };
        (f, vec![grad_of(&w), grad_of(&v)])
    }
}

fn unit_starts(d: usize, blocks: usize) -> Vec<Vec<CMat>> {
    let mut starts = Vec::new();
    for i in 0..d {
        let e = CMat::from_fn(d, 1, |k, _| basis(d, i)[k]);
        starts.push(vec![e; blocks]);
    }
    starts
}

/// Holomorphic sectional curvature: multistart minimization of
/// `|II(v, v)|` over the unit sphere. Never certifies negativity.
pub fn certify_holsec_negative(germ: &Germ, restarts: usize, seed: u64, tol: &Tolerances) -> CurvatureReport {
    let obj = HolSecObjective(&germ.sff);
    let best = multistart(&obj, unit_starts(germ.d, 1), restarts, seed, &PgdOptions::default());
    let margin = best.value.max(0.0).sqrt();
    let cert = if margin < tol.zero_tol {
        Certificate::CertifiedNotNegative
    } else {
        Certificate::NumericallyNegativeWithMargin(margin)
    };
    CurvatureReport {
        kind: CurvatureKind::HolSec,
        value: -2.0 * margin * margin,
        margin,
        negativity_certificate: cert,
        witness: Some(best.x[0].iter().copied().collect()),
        witness_pair: None,
    }
}

/// Holomorphic bisectional curvature: the margin is
/// `min_v sigma_min(II(v, .))`, found by minimizing `|II(v, w)|^2` over
/// pairs of unit vectors and measuring the singular value at the optimum.
pub fn certify_holbisec_negative(germ: &Germ, restarts: usize, seed: u64, tol: &Tolerances) -> CurvatureReport {
    let sff = &germ.sff;
    let obj = HolBisecObjective(sff);
    let best = multistart(&obj, unit_starts(germ.d, 2), restarts, seed, &PgdOptions::default());
    let v: Vec<C64> = best.x[0].iter().copied().collect();
    // sigma_min(II(v*, .)) <= |II(v*, w*)|, so the SVD refines the optimum
    let (sigma, w_min) = smallest_right_singular(&sff.partial(&v));
    let margin = sigma;
    let cert = if margin < tol.zero_tol {
        Certificate::CertifiedNotNegative
    } else {
        Certificate::NumericallyNegativeWithMargin(margin)
    };
    CurvatureReport {
        kind: CurvatureKind::HolBisec,
        value: -2.0 * margin * margin,
        margin,
        negativity_certificate: cert,
        witness: Some(v),
        witness_pair: Some(w_min),
    }
}

/// Smallest singular value of `v -> II(v, .)` on the tangent space; exposed
/// for cross-checks.
pub fn ricci_sigma_min(germ: &Germ) -> f64 {
    sigma_min_cols(&germ.sff.ricci_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn linear_germ_frames() {
        let g = Germ::new(samples::hyperplane(3), vec![c(0.0); 3], &tol()).unwrap();
        let f = g.frames();
        assert_eq!(f.normal[0], vec![c(0.0), c(0.0), c(1.0)]);
        for t in &f.tangent {
            assert!(t[2].norm() < 1e-15);
        }
        assert_eq!(g.sff().norm(), 0.0);
    }

    #[test]
    fn quadric_sff() {
        let g = Germ::new(samples::quadric_graph(), vec![c(0.0); 3], &tol()).unwrap();
        let s = g.sff();
        assert!((s.get(0, 0, 0) - c(2.0)).norm() < 1e-14);
        assert!(s.get(0, 1, 0).norm() < 1e-14);
        assert!((s.get(1, 1, 0) - c(2.0)).norm() < 1e-14);
        assert!((ricci(&g, &[c(1.0), c(0.0)]).unwrap() + 8.0).abs() < 1e-12);
        assert!((scalar(&g) + 32.0).abs() < 1e-12);
        assert!((scalar_from_ricci(&g) + 32.0).abs() < 1e-12);
        assert!((holsec(&g, &[c(1.0), c(0.0)]).unwrap() + 8.0).abs() < 1e-12);
    }

    #[test]
    fn inflection_of_cubic() {
        // z2 - z1^3 at the origin
        let g = Germ::new(samples::plane_cubic(), vec![c(0.0); 2], &tol()).unwrap();
        assert!(g.sff().norm() < 1e-15);
    }

    #[test]
    fn non_unit_vector_rejected() {
        let g = Germ::new(samples::quadric_graph(), vec![c(0.0); 3], &tol()).unwrap();
        assert!(matches!(ricci(&g, &[c(2.0), c(0.0)]), Err(Error::InvalidArgument(_))));
        assert!(holbisec(&g, &[c(1.0), c(0.0)], &[c(0.5), c(0.0)]).is_err());
    }

    #[test]
    fn off_zero_set_rejected_and_singular_rejected() {
        let r = Germ::new(samples::quadric_graph(), vec![c(0.0), c(0.0), c(0.1)], &tol());
        assert!(matches!(r, Err(Error::DegenerateGerm(_))));
        // z1^2 + z2^2 at the origin: dF = 0
        let cone = PolynomialMap::from_terms(2, 1, vec![(0, vec![2, 0], c(1.0)), (0, vec![0, 2], c(1.0))]).unwrap();
        assert!(matches!(
            Germ::new(cone, vec![c(0.0); 2], &tol()),
            Err(Error::DegenerateGerm(_))
        ));
    }

    #[test]
    fn slightly_off_point_is_projected() {
        let p = vec![c(0.3), c(0.2), c(0.13 + 5e-10)];
        let g = Germ::new(samples::quadric_graph(), p, &tol()).unwrap();
        assert!(hnorm(&g.map().eval(g.point())) < 1e-15);
    }

    #[test]
    fn certifier_examples() {
        let t = tol();
        let quad = Germ::new(samples::quadric_graph(), vec![c(0.0); 3], &t).unwrap();
        let cyl = Germ::new(samples::cylinder(), vec![c(0.0); 3], &t).unwrap();
        let flat = Germ::new(samples::hyperplane(3), vec![c(0.0); 3], &t).unwrap();

        let r = certify_ricci_negative(&quad, &t);
        assert_eq!(r.negativity_certificate, Certificate::CertifiedNegative);
        assert!((r.margin - 2.0).abs() < 1e-12);
        assert_eq!(
            certify_ricci_negative(&cyl, &t).negativity_certificate,
            Certificate::CertifiedNotNegative
        );
        assert_eq!(
            certify_ricci_negative(&flat, &t).negativity_certificate,
            Certificate::CertifiedNotNegative
        );

        assert_eq!(
            certify_scalar_negative(&cyl, &t).negativity_certificate,
            Certificate::CertifiedNegative
        );
        assert_eq!(
            certify_scalar_negative(&flat, &t).negativity_certificate,
            Certificate::CertifiedNotNegative
        );

        for g in [&quad, &cyl, &flat] {
            // II(v, v) = 2(v1^2 + v2^2) e3 vanishes at (1, i)/sqrt 2 on the quadric
            let hs = certify_holsec_negative(g, 16, 1, &t);
            assert_eq!(hs.negativity_certificate, Certificate::CertifiedNotNegative, "{hs:?}");
            let hb = certify_holbisec_negative(g, 16, 1, &t);
            assert_eq!(hb.negativity_certificate, Certificate::CertifiedNotNegative);
        }
    }

    #[test]
    fn holsec_margin_matches_sphere_grid() {
        // the curve germ z2 = z1^2 + z1^3 in C^3 with a second equation
        // z3 = z1^2; d = 1 so the sphere is a circle and |II(v,v)| is constant
        let t = tol();
        let g = samples::graph_germ(
            1,
            3,
            &[vec![(vec![2], c(1.0)), (vec![3], c(1.0))], vec![(vec![2], c(1.0))]],
            &t,
        )
        .unwrap();
        let r = certify_holsec_negative(&g, 8, 3, &t);
        let exact = hnorm(&g.sff().apply(&[c(1.0)], &[c(1.0)]));
        assert!((r.margin - exact).abs() < 1e-9);
        assert!((exact - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn holsec_grid_oracle_on_random_surface() {
        use rand::{Rng, SeedableRng};
        let t = tol();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = samples::random_graph_germ(2, 5, 2, &mut rng, &t);
        let r = certify_holsec_negative(&g, 32, 5, &t);
        // brute force over the unit sphere of C^2 modulo the overall phase:
        // v = (cos a, e^{ib} sin a)
        let mut best = f64::INFINITY;
        let steps = 100;
        for i in 0..=steps {
            let a = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
            for j in 0..steps {
                let b = std::f64::consts::TAU * j as f64 / steps as f64;
                let v = [c(a.cos()), C64::from_polar(a.sin(), b)];
                best = best.min(hnorm(&g.sff().apply(&v, &v)));
            }
        }
        assert!(r.margin <= best + 1e-12);
        assert!(
            best - r.margin < 1e-1 * best.max(1e-3),
            "grid {best} vs pgd {}",
            r.margin
        );
        let _ = rng.gen::<u8>();
    }

    #[test]
    fn sff_frame_change() {
        use rand::SeedableRng;
        let t = tol();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let g = samples::random_germ(3, 6, 3, &mut rng, &t);
        let u = crate::linalg::random_unitary(3, &mut rng);
        let s2 = g.sff().change_tangent_frame(&u);
        let a: Vec<C64> = vec![c(0.3), C64::new(0.1, 0.4), c(-0.2)];
        let b: Vec<C64> = vec![C64::new(0.0, 1.0), c(0.5), c(0.25)];
        // II'(a, b) = II(U a, U b)
        let ua: Vec<C64> = (0..3).map(|i| (0..3).map(|k| u[(i, k)] * a[k]).sum()).collect();
        let ub: Vec<C64> = (0..3).map(|i| (0..3).map(|k| u[(i, k)] * b[k]).sum()).collect();
        let lhs = s2.apply(&a, &b);
        let rhs = g.sff().apply(&ua, &ub);
        for (x, y) in lhs.iter().zip(&rhs) {
            assert!((x - y).norm() < 1e-12);
        }
    }
}
