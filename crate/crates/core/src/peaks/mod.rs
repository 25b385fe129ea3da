//! Peak sections in the flat Bargmann-Fock model and the Donaldson-style
//! globalization sweep built on them.
//!
//! Sections of the model bundle over `C^n` are holomorphic maps `f` with
//! pointwise norm `|f(z)| exp(-pi/2 |z|^2)`. The peak with jet `H` at `p` is
//! `sigma(H, p)(z) = H(z - p) exp(pi <p, z> - pi/2 |p|^2)`. Jets are always
//! taken in the frame centered at some point `c`, i.e. of
//! `v -> s(c + v) / sigma(1, c)(c + v)`, which is the unitary-lift
//! trivialization: the norm of `s` at `c + v` is the frame value times
//! `exp(-pi/2 |v|^2)`.

pub mod basis;
pub mod globalize;
pub mod lattice;
pub mod oracle;
pub mod zeroset;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::hdot;
use crate::poly::{PolynomialMap, C64};

pub use basis::{Jet, JetWire, MonomialBasis};
pub use globalize::{
    calibrate, closed_form_schedule, globalize, local_avoid, validate_schedule, AvoidResult, Calibration,
    GlobalizeOptions, GlobalizeReport,
};
pub use lattice::{color_classes, discretize, discretize_with_scale, ColorClasses, Lattice};
pub use oracle::{LineTangencyOracle, LocusOracle, TransversalityOracle, ZeroJetOracle};
pub use zeroset::{transversality_margin, zero_set_sample, MarginReport, ZeroSample, ZeroSetSample};

/// Peaks farther than this from the evaluation point are dropped.
pub const CUTOFF: f64 = 8.0;

type BasisCache = Mutex<HashMap<(usize, u32), Arc<MonomialBasis>>>;

/// Shared monomial bases, one per `(n, l)`.
pub fn basis(n: usize, l: u32) -> Arc<MonomialBasis> {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("basis cache poisoned");
    guard.entry((n, l)).or_insert_with(|| MonomialBasis::new(n, l)).clone()
}

fn norm2(z: &[C64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// The flat model on `C^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatModel {
    pub n: usize,
}

impl FlatModel {
    /// `h(z) = pi/2 |z|^2`.
    pub fn weight(&self, z: &[C64]) -> f64 {
        0.5 * PI * norm2(z)
    }

    /// Pointwise norm of the section with underlying function value `f`.
    pub fn norm(&self, f: &[C64], z: &[C64]) -> f64 {
        norm2(f).sqrt() * (-self.weight(z)).exp()
    }
}

/// `sigma(H, p)`, with `H` given as a sparse polynomial map.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSection {
    pub h: PolynomialMap,
    pub p: Vec<C64>,
}

pub fn peak_section(h: PolynomialMap, p: Vec<C64>) -> Result<PeakSection> {
    if h.n() != p.len() {
        return invalid(format!("jet has {} variables but center has {}", h.n(), p.len()));
    }
    Ok(PeakSection { h, p })
}

impl PeakSection {
    /// Underlying holomorphic function at `z`.
    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let shifted: Vec<C64> = z.iter().zip(&self.p).map(|(a, b)| a - b).collect();
        let e = (PI * hdot(&self.p, z) - 0.5 * PI * norm2(&self.p)).exp();
        self.h.eval(&shifted).into_iter().map(|v| v * e).collect()
    }

    pub fn norm_at(&self, z: &[C64]) -> f64 {
        FlatModel { n: self.p.len() }.norm(&self.eval(z), z)
    }

    /// `log ||sigma(z)||`, computed without forming the exponential.
    pub fn log_norm_at(&self, z: &[C64]) -> f64 {
        let shifted: Vec<C64> = z.iter().zip(&self.p).map(|(a, b)| a - b).collect();
        let v = norm2(&self.h.eval(&shifted)).sqrt();
        v.ln() + PI * hdot(&self.p, z).re - 0.5 * PI * norm2(&self.p) - 0.5 * PI * norm2(z)
    }
}

/// A jet evaluation together with the bound on what the cutoff dropped.
#[derive(Debug, Clone)]
pub struct JetEval {
    pub jet: Jet,
    pub truncation_bound: f64,
}

/// Jet of the single peak `(h, a)` at `z` in the frame centered at `c`,
/// added into `out`. `h` is dense over `hb`, `out` over `ob`.
#[allow(clippy::too_many_arguments)]
fn add_peak_jet(
    hb: &MonomialBasis,
    h: &[C64],
    m: usize,
    a: &[C64],
    c: &[C64],
    z: &[C64],
    wb: &MonomialBasis,
    ol: usize,
    out: &mut [C64],
) {
    let delta: Vec<C64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let t: Vec<C64> = z.iter().zip(&delta).map(|(x, y)| x + y).collect();
    let lin: Vec<C64> = delta.iter().map(|d| -d.conj() * PI).collect();
    let kappa = PI * hdot(a, c) - 0.5 * PI * (norm2(a) + norm2(c));
    let scale = (kappa - PI * hdot(&delta, z)).exp();
    let e = wb.exp_linear(&lin, scale);
    let hl = hb.len();
    // bases are graded, so smaller ones are prefixes of `wb`
    let mut hw = vec![C64::new(0.0, 0.0); wb.len()];
    for j in 0..m {
        let hj = &h[j * hl..(j + 1) * hl];
        if hj.iter().all(|x| *x == C64::new(0.0, 0.0)) {
            continue;
        }
        hw[..hl].copy_from_slice(hj);
        let tr = wb.translate(&hw, &t);
        let prod = wb.mul_prefix(&tr, &e, ol);
        for (o, p) in out[j * ol..(j + 1) * ol].iter_mut().zip(prod) {
            *o += p;
        }
    }
}

/// A crude but valid bound on the coefficients of a dropped peak's jet.
fn dropped_bound(h: &[C64], deg: u32, a: &[C64], c: &[C64], z: &[C64]) -> f64 {
    let delta: Vec<C64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let x: Vec<C64> = c.iter().zip(z).map(|(p, q)| p + q).collect();
    let r2: f64 = x.iter().zip(a).map(|(p, q)| (p - q).norm_sqr()).sum();
    let t1: f64 = z.iter().zip(&delta).map(|(p, q)| (p + q).norm()).sum();
    let d1: f64 = delta.iter().map(|d| d.norm()).sum();
    let h1: f64 = h.iter().map(|v| v.norm()).sum();
    let log = h1.ln() + deg as f64 * (1.0 + t1).ln() - 0.5 * PI * r2 + 0.5 * PI * norm2(z) + PI * d1;
    log.exp()
}

/// `|H|_1 (1 + pi) (1 + r)^(l+1) e^{-pi r^2 / 2}`: bounds the weighted
/// value and first derivatives of a degree-`l` peak at distance `r`, and
/// decreases for `r >= 1`.
fn peak_envelope(l: u32, h1: f64, r: f64) -> f64 {
    h1 * (1.0 + PI) * (1.0 + r).powi(l as i32 + 1) * (-0.5 * PI * r * r).exp()
}

/// Repeated value and gradient evaluation of one family with a fixed cutoff.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    family: &'a PeakFamily,
    radius: f64,
    h1: f64,
    basis: Arc<MonomialBasis>,
}

impl Evaluator<'_> {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// The truncation bound covers the dropped peaks, in unweighted units.
    pub fn value_gradient(&self, x: &[C64]) -> ValueGradient {
        let f = self.family;
        let n = f.n();
        let hb = &self.basis;
        let hl = hb.len();
        let r2max = self.radius * self.radius;
        let mut value = vec![C64::new(0.0, 0.0); f.m];
        let mut gradient = vec![vec![C64::new(0.0, 0.0); n]; f.m];
        let mut dropped = 0usize;
        let mut w = vec![C64::new(0.0, 0.0); n];
        let mut pw = vec![C64::new(0.0, 0.0); hl];
        let mut dv = vec![C64::new(0.0, 0.0); n];
        for (a, h) in f.lattice.points.iter().zip(&f.coeffs) {
            let r2: f64 = x.iter().zip(a).map(|(p, q)| (p - q).norm_sqr()).sum();
            if r2 > r2max {
                dropped += 1;
                continue;
            }
            if h.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            for ((wi, p), q) in w.iter_mut().zip(x).zip(a) {
                *wi = p - q;
            }
            hb.powers_into(&w, &mut pw);
            let e = (PI * hdot(a, x) - 0.5 * PI * norm2(a)).exp();
            for j in 0..f.m {
                let v = hb.eval_gradient_into(&h[j * hl..(j + 1) * hl], &pw, &mut dv);
                value[j] += v * e;
                for ((gi, d), ai) in gradient[j].iter_mut().zip(&dv).zip(a) {
                    *gi += (d + v * PI * ai.conj()) * e;
                }
            }
        }
        let truncation_bound = if dropped == 0 {
            0.0
        } else {
            dropped as f64 * peak_envelope(f.l, self.h1, self.radius) * (0.5 * PI * norm2(x)).exp()
        };
        ValueGradient {
            value,
            gradient,
            truncation_bound,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValueGradient {
    pub value: Vec<C64>,
    /// Rows `d s_j`.
    pub gradient: Vec<Vec<C64>>,
    pub truncation_bound: f64,
}

/// The sum section `s = sum_p sigma(H_p, p)` over a colored lattice, with
/// the epsilon schedule it was built with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFamily {
    pub m: usize,
    pub l: u32,
    pub lattice: Lattice,
    pub classes: ColorClasses,
    /// Dense coefficients of `H_p` per lattice point, component-major over
    /// the degree-`l` monomial basis.
    pub coeffs: Vec<Vec<C64>>,
    pub schedule: Vec<f64>,
}

impl PeakFamily {
    /// All-zero family on the given lattice.
    pub fn zeros(lattice: Lattice, classes: ColorClasses, m: usize, l: u32) -> Self {
        let len = basis(lattice.n, l).len();
        let coeffs = vec![vec![C64::new(0.0, 0.0); m * len]; lattice.points.len()];
        PeakFamily {
            m,
            l,
            lattice,
            classes,
            coeffs,
            schedule: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.lattice.n
    }

    pub fn basis(&self) -> Arc<MonomialBasis> {
        basis(self.n(), self.l)
    }

    /// `||H_p||` in the max-coefficient norm.
    pub fn coeff_norm(&self, i: usize) -> f64 {
        self.coeffs[i].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn set_coeffs(&mut self, i: usize, h: &Jet) -> Result<()> {
        if h.m != self.m || h.n() != self.n() || h.order() != self.l {
            return invalid("jet shape does not match the family");
        }
        self.coeffs[i] = h.coeffs.clone();
        Ok(())
    }

    /// `H_p` as a jet.
    pub fn peak_jet(&self, i: usize) -> Jet {
        Jet {
            m: self.m,
            basis: self.basis(),
            coeffs: self.coeffs[i].clone(),
        }
    }

    /// The `l`-jet of the sum section at `z` in the frame centered at `c`.
    pub fn jet_at(&self, c: &[C64], z: &[C64], l: u32) -> JetEval {
        self.jet_at_filtered(c, z, l, |_| true)
    }

    /// As `jet_at`, restricted to the peaks selected by `include`.
    pub fn jet_at_filtered<F: Fn(usize) -> bool>(&self, c: &[C64], z: &[C64], l: u32, include: F) -> JetEval {
        let n = self.n();
        let hb = self.basis();
        let ob = basis(n, l);
        let wb = basis(n, l.max(self.l));
        let mut jet = Jet::zero(ob.clone(), self.m);
        let x: Vec<C64> = c.iter().zip(z).map(|(p, q)| p + q).collect();
        let mut dropped = 0.0;
        for (i, a) in self.lattice.points.iter().enumerate() {
            let h = &self.coeffs[i];
            if !include(i) || h.iter().all(|v| *v == C64::new(0.0, 0.0)) {
                continue;
            }
            let r2: f64 = x.iter().zip(a).map(|(p, q)| (p - q).norm_sqr()).sum();
            if r2 > CUTOFF * CUTOFF {
                dropped += dropped_bound(h, self.l, a, c, z);
                continue;
            }
            add_peak_jet(&hb, h, self.m, a, c, z, &wb, ob.len(), &mut jet.coeffs);
        }
        JetEval {
            jet,
            truncation_bound: dropped,
        }
    }

    /// Value of the underlying global function (frame at the origin).
    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        self.value_gradient(z).value
    }

    /// Value and derivative of the global function at `x`, summed directly
    /// rather than through frame jets.
    pub fn value_gradient(&self, x: &[C64]) -> ValueGradient {
        self.evaluator(CUTOFF).value_gradient(x)
    }

    fn max_l1(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|h| h.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Distance beyond which every peak's weighted contribution to values
    /// and first derivatives is below `tol`, capped at `CUTOFF`.
    pub fn cutoff_radius(&self, tol: f64) -> f64 {
        let h1 = self.max_l1();
        if h1 == 0.0 {
            return 0.0;
        }
        let mut r: f64 = 1.0;
        while r < CUTOFF && peak_envelope(self.l, h1, r) >= tol {
            r += 0.05;
        }
        r.min(CUTOFF)
    }

    /// Direct evaluator dropping peaks farther than `radius` (at least 1).
    pub fn evaluator(&self, radius: f64) -> Evaluator<'_> {
        Evaluator {
            family: self,
            radius: radius.max(1.0),
            h1: self.max_l1(),
            basis: self.basis(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s)
            .map_err(|e| crate::error::Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
    }
}

/// Grid over the closed polydisk of radius `radius` in `C^n`: each
/// coordinate runs over the points of `step Z^2` in its disk.
pub fn polydisk_grid(n: usize, radius: f64, step: f64) -> Vec<Vec<C64>> {
    let k = (radius / step).floor() as i64;
    let mut disk = Vec::new();
    for a in -k..=k {
        for b in -k..=k {
            let w = C64::new(a as f64 * step, b as f64 * step);
            if w.norm() <= radius + 1e-12 {
                disk.push(w);
            }
        }
    }
    let mut out: Vec<Vec<C64>> = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                disk.iter().map(move |w| {
                    let mut q = p.clone();
                    q.push(*w);
                    q
                })
            })
            .collect();
    }
    out
}

/// Fitted constant of the sum-of-peaks bound together with the two sides
/// of the inequality on one family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumOfPeaksBound {
    pub grid_max: f64,
    pub series_bound: f64,
    pub c: f64,
    pub holds: bool,
}

/// Sup over `z` in the unit polydisk and over peak directions of the total
/// jet norm of the unit monomial peaks at distance `r` from the frame center.
fn unit_peak_profile(n: usize, l: u32, r: f64, zgrid: &[Vec<C64>], dirs: &[Vec<C64>]) -> f64 {
    let b = basis(n, l);
    let c = vec![C64::new(0.0, 0.0); n];
    let mut best: f64 = 0.0;
    for d in dirs {
        let a: Vec<C64> = d.iter().map(|x| x * r).collect();
        for z in zgrid {
            let mut total = 0.0;
            for i in 0..b.len() {
                let mut h = vec![C64::new(0.0, 0.0); b.len()];
                h[i] = C64::new(1.0, 0.0);
                let mut out = vec![C64::new(0.0, 0.0); b.len()];
                add_peak_jet(&b, &h, 1, &a, &c, z, &b, b.len(), &mut out);
                total += out.iter().map(|v| v.norm()).fold(0.0, f64::max);
            }
            best = best.max(total);
        }
    }
    best
}

fn profile_samples(n: usize) -> (Vec<Vec<C64>>, Vec<Vec<C64>>) {
    use rand::SeedableRng;
    let zgrid = if n == 1 {
        polydisk_grid(1, 1.0, 0.25)
    } else {
        polydisk_grid(n, 1.0, 0.5)
    };
    let mut dirs = Vec::new();
    if n == 1 {
        for k in 0..16 {
            let th = 2.0 * PI * k as f64 / 16.0;
            dirs.push(vec![C64::new(th.cos(), th.sin())]);
        }
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        for i in 0..n {
            let mut e = vec![C64::new(0.0, 0.0); n];
            e[i] = C64::new(1.0, 0.0);
            dirs.push(e);
        }
        for _ in 0..16 {
            dirs.push(crate::linalg::random_unit(n, &mut rng));
        }
    }
    (zgrid, dirs)
}

/// Number of `1`-separated points in the shell `a <= |x| < a + 1` of
/// `R^(2n)` is at most the volume ratio of the enlarged shell to a ball of
/// radius 1/2.
pub fn shell_count_bound(n: usize, a: f64) -> f64 {
    let k = 2 * n as i32;
    ((a + 1.5).powi(k) - (a - 0.5).max(0.0).powi(k)) / 0.5f64.powi(k)
}

/// Smallest `C` (to 0.01) with `sup_{a <= r < a+1} g(r) <= C exp(-a^2/C)`
/// for the unit-peak profile `g`, inflated by `1 + grid_tol`.
pub fn fit_peak_constant(n: usize, l: u32, grid_tol: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u32), f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(c) = cache.lock().expect("poisoned").get(&(n, l)) {
        return c * (1.0 + grid_tol);
    }
    let (zgrid, dirs) = profile_samples(n);
    let amax = 12usize;
    let steps = 10;
    let mut shell_sup = vec![0.0f64; amax + 1];
    for (a, sup) in shell_sup.iter_mut().enumerate() {
        for s in 0..=steps {
            let r = a as f64 + s as f64 / steps as f64;
            *sup = sup.max(unit_peak_profile(n, l, r, &zgrid, &dirs));
        }
    }
    let mut c = 1.0;
    while !shell_sup
        .iter()
        .enumerate()
        .all(|(a, g)| *g <= c * (-((a * a) as f64) / c).exp())
    {
        c += 0.01;
    }
    cache.lock().expect("poisoned").insert((n, l), c);
    c * (1.0 + grid_tol)
}

/// `sum_{a >= a0} C exp(-a^2/C) P(a)`.
pub fn gaussian_series(n: usize, c: f64, a0: usize) -> f64 {
    let mut total = 0.0;
    let mut a = a0;
    loop {
        let term = c * (-((a * a) as f64) / c).exp() * shell_count_bound(n, a as f64);
        total += term;
        if a > a0 + 5 && term < 1e-300_f64.max(total * 1e-18) {
            break;
        }
        a += 1;
    }
    total
}

/// Uniform grid bound on the jet norms of `family` against the Gaussian
/// series bound scaled by the largest `||H_p||`.
pub fn sum_of_peaks_bound(family: &PeakFamily, l: u32, grid_tol: f64) -> SumOfPeaksBound {
    use rayon::prelude::*;
    let n = family.n();
    let c = fit_peak_constant(n, l, grid_tol);
    let hmax = (0..family.coeffs.len())
        .map(|i| family.coeff_norm(i))
        .fold(0.0, f64::max);
    if hmax == 0.0 {
        return SumOfPeaksBound {
            grid_max: 0.0,
            series_bound: 0.0,
            c,
            holds: true,
        };
    }
    let zgrid = polydisk_grid(n, 1.0, if n == 1 { 0.25 } else { 0.5 });
    let grid_max = family
        .lattice
        .points
        .par_iter()
        .map(|q| {
            zgrid
                .iter()
                .map(|z| family.jet_at(q, z, l).jet.max_norm())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let series_bound = hmax * gaussian_series(n, c, 0);
    SumOfPeaksBound {
        grid_max,
        series_bound,
        c,
        holds: grid_max <= series_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single(n: usize, m: usize, l: u32, p: Vec<C64>, h: Vec<C64>) -> PeakFamily {
        let lat = Lattice::from_points(n, vec![p]);
        let cls = color_classes(&lat, 1.0);
        let mut f = PeakFamily::zeros(lat, cls, m, l);
        f.coeffs[0] = h;
        f
    }

    #[test]
    fn unit_peak_norm_is_gaussian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = vec![c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)); 2];
            let z = vec![c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)); 2];
            let s = peak_section(PolynomialMap::constant(2, &[c(1.0, 0.0)]), p.clone()).unwrap();
            let d2: f64 = z.iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!((s.log_norm_at(&z) + 0.5 * PI * d2).abs() < 1e-12);
            assert!((s.norm_at(&p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_at_own_center_is_h() {
        let b = basis(2, 2);
        let h: Vec<C64> = (0..b.len()).map(|i| c(0.3 * i as f64, -0.1)).collect();
        let p = vec![c(1.2, -0.4), c(-0.7, 2.0)];
        let f = single(2, 1, 2, p.clone(), h.clone());
        let zero = vec![c(0.0, 0.0); 2];
        let j = f.jet_at(&p, &zero, 2).jet;
        for (a, b) in j.coeffs.iter().zip(&h) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_jet_matches_direct_evaluation() {
        // value and derivative of R_c s at z against the closed form
        let b = basis(1, 2);
        let h = vec![c(0.5, 0.2), c(-1.0, 0.3), c(0.25, 0.0)];
        let p = vec![c(0.8, -0.3)];
        let f = single(1, 1, 2, p.clone(), h.clone());
        let peak = peak_section(
            Jet {
                m: 1,
                basis: b,
                coeffs: h,
            }
            .to_polynomial(),
            p,
        )
        .unwrap();
        let cen = vec![c(-0.4, 0.9)];
        let z = vec![c(0.3, 0.2)];
        let frame = |v: C64| {
            let x = [cen[0] + v];
            peak.eval(&x)[0] * (-PI * cen[0].conj() * v - 0.5 * PI * cen[0].norm_sqr()).exp()
        };
        let j = f.jet_at(&cen, &z, 2).jet;
        assert!((j.coeffs[0] - frame(z[0])).norm() < 1e-12);
        let e = 1e-5;
        let d = (frame(z[0] + e) - frame(z[0] - e)) / (2.0 * e);
        assert!((j.coeffs[1] - d).norm() < 1e-8);
        // frame norm rule
        let x = [cen[0] + z[0]];
        assert!((peak.norm_at(&x) - j.coeffs[0].norm() * (-0.5 * PI * z[0].norm_sqr()).exp()).abs() < 1e-12);
    }

    #[test]
    fn distant_peak_is_negligible() {
        let lat = Lattice::from_points(1, vec![vec![c(0.0, 0.0)], vec![c(20.0, 0.0)]]);
        let cls = color_classes(&lat, 1.0);
        let mut f = PeakFamily::zeros(lat, cls, 1, 1);
        f.coeffs[0] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        f.coeffs[1] = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let zero = vec![c(0.0, 0.0)];
        let j = f.jet_at(&zero, &zero, 1);
        assert!(j.truncation_bound < 1e-40);
        assert!(j.truncation_bound <= crate::config::Tolerances::default().tail_tol);
        assert_eq!(j.jet.coeffs, vec![c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn jets_are_additive() {
        let lat = discretize(1, 2.0).unwrap();
        let cls = color_classes(&lat, 2.0);
        let mut f = PeakFamily::zeros(lat, cls, 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for h in f.coeffs.iter_mut() {
            for v in h.iter_mut() {
                *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let cen = f.lattice.points[1].clone();
        let z = vec![c(0.2, -0.5)];
        let all = f.jet_at(&cen, &z, 2).jet;
        let even = f.jet_at_filtered(&cen, &z, 2, |i| i % 2 == 0).jet;
        let odd = f.jet_at_filtered(&cen, &z, 2, |i| i % 2 == 1).jet;
        for ((a, b), d) in all.coeffs.iter().zip(&even.coeffs).zip(&odd.coeffs) {
            assert!((a - b - d).norm() < 1e-12);
        }
    }

    #[test]
    fn peak_concentration_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let b = basis(2, 2);
        for _ in 0..20 {
            let h: Vec<C64> = (0..b.len())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let hn = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let poly = Jet {
                m: 1,
                basis: b.clone(),
                coeffs: h,
            }
            .to_polynomial();
            let p = vec![c(rng.gen_range(-1.0..1.0), 0.0), c(0.0, rng.gen_range(-1.0..1.0))];
            let s = peak_section(poly, p.clone()).unwrap();
            for _ in 0..50 {
                let dir = crate::linalg::random_unit(2, &mut rng);
                let t = rng.gen_range(0.0..6.0);
                let z: Vec<C64> = p.iter().zip(&dir).map(|(a, d)| a + d * t).collect();
                assert!(s.norm_at(&z) <= 3.0 * hn * (-0.25 * PI * t * t).exp() + 1e-15);
            }
        }
    }

    #[test]
    fn direct_gradient_matches_frame_jet() {
        let lat = discretize(2, 1.6).unwrap();
        let cls = color_classes(&lat, 3.0);
        let mut f = PeakFamily::zeros(lat, cls, 1, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for c in f.coeffs.iter_mut() {
            for v in c.iter_mut() {
                *v = crate::linalg::gaussian_c(&mut rng);
            }
        }
        let x = [C64::new(0.3, -0.7), C64::new(0.9, 0.2)];
        let zero = [C64::new(0.0, 0.0); 2];
        let jet = f.jet_at(&zero, &x, 1).jet;
        let vg = f.value_gradient(&x);
        assert!((jet.value()[0] - vg.value[0]).norm() < 1e-12 * vg.value[0].norm().max(1.0));
        for (a, b) in jet.linear_part()[0].iter().zip(&vg.gradient[0]) {
            assert!((a - b).norm() < 1e-11 * b.norm().max(1.0));
        }
    }

    #[test]
    fn zero_family_bound_is_zero() {
        let lat = discretize(1, 2.0).unwrap();
        let cls = color_classes(&lat, 2.0);
        let f = PeakFamily::zeros(lat, cls, 1, 0);
        assert_eq!(sum_of_peaks_bound(&f, 0, 0.05).series_bound, 0.0);
    }

    #[test]
    fn family_json_round_trip() {
        let lat = discretize(1, 1.0).unwrap();
        let cls = color_classes(&lat, 2.0);
        let mut f = PeakFamily::zeros(lat, cls, 1, 1);
        f.coeffs[0][1] = c(0.25, -1.5);
        f.schedule = vec![0.1, 0.01];
        let back = PeakFamily::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }
}
