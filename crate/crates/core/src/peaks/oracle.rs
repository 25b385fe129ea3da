//! Fibered distance evaluators for bad jet loci.
//!
//! A margin is computed from the jet `H` of a section at a point `z` of the
//! chart around a frame center; it vanishes exactly on the locus. Each
//! oracle also bounds how far its margin can move under a jet perturbation,
//! which is what the globalization schedule is calibrated against.

use std::f64::consts::PI;

use crate::linalg::{mat_from_rows, singular_values};
use crate::optim::nelder_mead;
use crate::poly::C64;

use super::basis::Jet;

pub trait LocusOracle: Sync {
    fn name(&self) -> &'static str;
    /// Jet order the margin needs.
    fn order(&self) -> u32;
    fn margin(&self, z: &[C64], jet: &Jet) -> f64;
    /// Upper bound on `|margin(jet + delta) - margin(jet)|`.
    fn sensitivity(&self, z: &[C64], delta: &Jet) -> f64;
}

fn frame_weight(z: &[C64]) -> f64 {
    (-0.5 * PI * z.iter().map(|c| c.norm_sqr()).sum::<f64>()).exp()
}

/// Distance to the zero jet.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroJetOracle {
    pub order: u32,
}

impl LocusOracle for ZeroJetOracle {
    fn name(&self) -> &'static str {
        "zero-jet"
    }
    fn order(&self) -> u32 {
        self.order
    }
    fn margin(&self, _z: &[C64], jet: &Jet) -> f64 {
        jet.max_norm()
    }
    fn sensitivity(&self, _z: &[C64], delta: &Jet) -> f64 {
        delta.max_norm()
    }
}

/// Non-transversality to the zero section: `s(z) = 0` with `ds(z)` not
/// surjective. The margin is the weighted `max(|s|, sigma_m(ds))`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransversalityOracle;

impl TransversalityOracle {
    fn parts(jet: &Jet) -> (f64, Vec<Vec<C64>>) {
        let c = jet.value().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        (c, jet.linear_part())
    }
}

/// Smallest of the `m` singular values of an `m x n` matrix, zero if `m > n`.
pub(crate) fn surjectivity(rows: &[Vec<C64>], n: usize) -> f64 {
    let m = rows.len();
    if m == 0 {
        return f64::INFINITY;
    }
    if m > n {
        return 0.0;
    }
    if m == 1 {
        return rows[0].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    }
    singular_values(&mat_from_rows(rows, n))[0]
}

impl LocusOracle for TransversalityOracle {
    fn name(&self) -> &'static str {
        "transversality"
    }
    fn order(&self) -> u32 {
        1
    }
    fn margin(&self, z: &[C64], jet: &Jet) -> f64 {
        let (c, j) = Self::parts(jet);
        frame_weight(z) * c.max(surjectivity(&j, jet.n()))
    }
    fn sensitivity(&self, z: &[C64], delta: &Jet) -> f64 {
        let (c, j) = Self::parts(delta);
        let fro = j.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        frame_weight(z) * c.max(fro)
    }
}

/// Hypersurface jets (`m = 1`) that vanish and either fail to be
/// transverse or have contact of order `l` with some line through the
/// point: margin `w max(|s|, min(|ds|, min_b max_{1<=j<=l} |c_j(b)|))`,
/// where `c_j(b)` is the `t^j` coefficient of `t -> s(z + t b)`.
#[derive(Debug, Clone, Copy)]
pub struct LineTangencyOracle {
    pub l: u32,
    /// Direction grid resolution per angle.
    pub grid: usize,
}

impl LineTangencyOracle {
    pub fn new(l: u32) -> Self {
        LineTangencyOracle { l, grid: 12 }
    }

    /// `c_j(b)` for `j = 0..=l`.
    pub fn line_coeffs(jet: &Jet, b: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); jet.order() as usize + 1];
        let h = jet.component(0);
        for (i, alpha) in jet.basis.exps().iter().enumerate() {
            let mut t = h[i];
            for (bi, &k) in b.iter().zip(alpha) {
                for _ in 0..k {
                    t *= bi;
                }
            }
            out[alpha.iter().sum::<u32>() as usize] += t;
        }
        out
    }

    fn contact(&self, jet: &Jet, b: &[C64]) -> f64 {
        let c = Self::line_coeffs(jet, b);
        c[1..=(self.l as usize).min(c.len() - 1)]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Unit direction from angle parameters (a point of the projective
    /// space of lines, phases fixed by the first coordinate).
    fn direction(n: usize, x: &[f64]) -> Vec<C64> {
        // x = (theta_1..theta_{n-1}, phi_1..phi_{n-1})
        let k = n - 1;
        let mut b = Vec::with_capacity(n);
        let mut rest = 1.0;
        for i in 0..k {
            b.push(
                C64::new(rest * x[i].cos(), 0.0)
                    * if i == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::from_polar(1.0, x[k + i - 1])
                    },
            );
            rest *= x[i].sin();
        }
        b.push(C64::from_polar(rest, x[2 * k - 1]));
        b
    }

    /// `min_b max_{1<=j<=l} |c_j(b)|` over unit directions.
    pub fn min_contact(&self, jet: &Jet) -> f64 {
        let n = jet.n();
        if n == 1 {
            return self.contact(jet, &[C64::new(1.0, 0.0)]);
        }
        let k = n - 1;
        // keep the grid size roughly constant across dimensions
        let g = (self.grid / k).max(3);
        let mut best = (f64::INFINITY, vec![0.0; 2 * k]);
        let total = (g * 2 * g).pow(k as u32);
        for idx in 0..total {
            let mut r = idx;
            let mut x = vec![0.0; 2 * k];
            for xi in x.iter_mut().take(k) {
                *xi = (r % g) as f64 / (g - 1) as f64 * PI / 2.0;
                r /= g;
            }
            for xi in x.iter_mut().skip(k) {
                *xi = (r % (2 * g)) as f64 / (2 * g) as f64 * 2.0 * PI;
                r /= 2 * g;
            }
            let v = self.contact(jet, &Self::direction(n, &x));
            if v < best.0 {
                best = (v, x);
            }
        }
        let (_, v) = nelder_mead(
            |x| self.contact(jet, &Self::direction(n, x)),
            &best.1,
            PI / (4.0 * g as f64),
            200,
            1e-14,
        );
        v.min(best.0)
    }
}

impl LocusOracle for LineTangencyOracle {
    fn name(&self) -> &'static str {
        "linetangency"
    }
    fn order(&self) -> u32 {
        self.l
    }
    fn margin(&self, z: &[C64], jet: &Jet) -> f64 {
        let c0 = jet.value()[0].norm();
        let grad = jet.linear_part()[0].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        // a tangent direction gives a cheap upper bound on the inner minimum
        if grad > 0.0 && jet.n() > 1 {
            let g = &jet.linear_part()[0];
            let mut b = vec![C64::new(0.0, 0.0); jet.n()];
            b[0] = -g[1];
            b[1] = g[0];
            let nb = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if nb > 0.0 {
                for v in b.iter_mut() {
                    *v /= nb;
                }
                let cheap = self.contact(jet, &b);
                if cheap.min(grad) <= c0 {
                    return frame_weight(z) * c0;
                }
            }
        }
        let inner = grad.min(self.min_contact(jet));
        frame_weight(z) * c0.max(inner)
    }
    fn sensitivity(&self, z: &[C64], delta: &Jet) -> f64 {
        frame_weight(z) * delta.l1_norm()
    }
}
