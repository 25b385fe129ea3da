//! Quantitative transversality of a peak family over a region, and
//! sampling of its zero set as germs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{invalid, Result};
use crate::germ::Germ;
use crate::linalg::{mat_from_rows, solve, CMat};
use crate::poly::C64;

use super::oracle::surjectivity;
use super::{FlatModel, PeakFamily};

/// Grid steps above this no longer resolve a peak of width `1/sqrt(pi)`.
const COARSE_STEP: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    pub margin: f64,
    pub grid_points: usize,
    pub warning: Option<String>,
}

/// Largest `eta` such that at every grid point of the box
/// `|Re z_j - c_j|, |Im z_j - c_j| <= half_width` where the section norm is
/// below `eta`, the weighted derivative has smallest singular value above
/// `eta`. Found by bisection on the grid data.
pub fn transversality_margin(
    family: &PeakFamily,
    center: &[C64],
    half_width: f64,
    grid_step: f64,
) -> Result<MarginReport> {
    let n = family.n();
    if family.m > n {
        return invalid("transversality needs m <= n");
    }
    if center.len() != n || !(grid_step > 0.0) {
        return invalid("bad region");
    }
    let k = (half_width / grid_step + 1e-9).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * grid_step).collect();
    let side = axis.len();
    let total = side.pow(2 * n as u32);
    let zero = vec![C64::new(0.0, 0.0); n];
    let model = FlatModel { n };
    let data: Vec<(f64, f64)> = (0..total)
        .into_par_iter()
        .map(|mut idx| {
            let mut z = center.to_vec();
            for zj in z.iter_mut() {
                let re = axis[idx % side];
                idx /= side;
                let im = axis[idx % side];
                idx /= side;
                *zj += C64::new(re, im);
            }
            let jet = family.jet_at(&zero, &z, 1).jet;
            let w = (-model.weight(&z)).exp();
            let norm = model.norm(&jet.value(), &z);
            (norm, w * surjectivity(&jet.linear_part(), n))
        })
        .collect();
    let good = |eta: f64| data.iter().all(|&(s, d)| s >= eta || d > eta);
    let mut hi = data.iter().map(|&(s, d)| s.max(d)).fold(0.0, f64::max) * 2.0 + 1e-300;
    let mut lo = 0.0;
    if good(hi) {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if good(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let warning = (grid_step > COARSE_STEP).then(|| {
        format!("grid step {grid_step} is coarse relative to the peak width; the margin may be overestimated")
    });
    Ok(MarginReport {
        margin: lo,
        grid_points: total,
        warning,
    })
}

/// A point of the zero set with the local data of the section there.
#[derive(Debug, Clone)]
pub struct ZeroSample {
    pub point: Vec<C64>,
    /// Section norm at `point`.
    pub residual: f64,
    /// Degree-2 Taylor polynomial in coordinates centered at `point`.
    pub germ: Germ,
}

#[derive(Debug, Clone)]
pub struct ZeroSetSample {
    pub samples: Vec<ZeroSample>,
    pub dropped: usize,
}

/// Newton iteration from each seed (minimum-norm steps), then a Germ from
/// the second-order jet. Seeds that do not converge within unit distance,
/// or whose derivative is not surjective, are dropped.
pub fn zero_set_sample(family: &PeakFamily, seeds: &[Vec<C64>], tol: &Tolerances) -> Result<ZeroSetSample> {
    let n = family.n();
    let m = family.m;
    if m >= n {
        return invalid("zero sets need m < n");
    }
    if family.lattice.is_empty() {
        return Ok(ZeroSetSample {
            samples: Vec::new(),
            dropped: 0,
        });
    }
    let out: Vec<Option<ZeroSample>> = seeds
        .par_iter()
        .map(|x0| {
            if x0.len() != n {
                return None;
            }
            let mut v = vec![C64::new(0.0, 0.0); n];
            for _ in 0..100 {
                let jet = family.jet_at(x0, &v, 1).jet;
                let f = jet.value();
                let fnorm = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if fnorm < 1e-15 {
                    break;
                }
                let j = mat_from_rows(&jet.linear_part(), n);
                let jjh: CMat = &j * j.adjoint();
                let y = solve(&jjh, &f)?;
                let step = j.adjoint() * CMat::from_column_slice(m, 1, &y);
                // the frame factor is far from linear, so cap the step length
                let damp = (0.25 / step.norm()).min(1.0);
                for (vi, s) in v.iter_mut().zip(step.iter()) {
                    *vi -= s * damp;
                }
                if v.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1.0 {
                    return None;
                }
            }
            let point: Vec<C64> = x0.iter().zip(&v).map(|(a, b)| a + b).collect();
            let jet = family.jet_at(&point, &vec![C64::new(0.0, 0.0); n], 2).jet;
            let residual = jet.value().iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if residual > tol.zero_tol {
                return None;
            }
            let germ = Germ::new(jet.to_polynomial(), vec![C64::new(0.0, 0.0); n], tol).ok()?;
            Some(ZeroSample { point, residual, germ })
        })
        .collect();
    let dropped = out.iter().filter(|s| s.is_none()).count();
    Ok(ZeroSetSample {
        samples: out.into_iter().flatten().collect(),
        dropped,
    })
}
