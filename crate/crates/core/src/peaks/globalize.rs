//! Local avoidance by sampled perturbation and the class-by-class
//! globalization sweep.
//!
//! A perturbation added at a point of class `i` sees three kinds of
//! peaks: earlier classes (fixed before it is chosen), its own classmates
//! (at least `D` away), and later classes (much smaller). The schedule is
//! admissible when the last two move every margin by at most a quarter of
//! the local target, so each target survives at half strength.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::poly::C64;

use super::basis::Jet;
use super::lattice::{color_classes, discretize, distance, ColorClasses, Lattice};
use super::oracle::LocusOracle;
use super::{basis, polydisk_grid, PeakFamily};

/// `eps (-log eps)^(-n0)`, the local avoidance target.
pub fn eta(eps: f64, n0: f64) -> f64 {
    eps * (-eps.ln()).powf(-n0)
}

/// Pointwise constants of the schedule inequalities for one oracle:
/// `c_sum` bounds the margin change caused by peaks of size at most 1 on
/// the whole lattice, `c_tail` the change caused by the classmates of a
/// point alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub oracle: String,
    pub n: usize,
    pub m: usize,
    pub l: u32,
    pub d: f64,
    pub c_sum: f64,
    pub c_tail: f64,
}

/// Peaks of unit coefficients farther than this from the reference point
/// are ignored by the calibration.
const CALIBRATION_RADIUS: f64 = 7.0;

fn calibration_grid(n: usize) -> Vec<Vec<C64>> {
    match n {
        1 => polydisk_grid(1, 1.0, 0.25),
        2 => polydisk_grid(2, 1.0, 0.5),
        _ => polydisk_grid(n, 1.0, 1.0),
    }
}

/// Sums the oracle sensitivity to each unit monomial peak over a large
/// reference lattice centered at the origin, taking the sup over `K`.
pub fn calibrate<O: LocusOracle + ?Sized>(oracle: &O, n: usize, m: usize, l: u32, d: f64) -> Result<Calibration> {
    let lat = discretize(n, CALIBRATION_RADIUS + 1.0)?;
    let cls = color_classes(&lat, d);
    let origin = vec![C64::new(0.0, 0.0); n];
    let o = lat
        .points
        .iter()
        .position(|p| distance(p, &origin) < 1e-12)
        .expect("origin is a lattice point");
    let own_class = cls.class_of[o];
    let b = basis(n, l);
    let near: Vec<usize> = (0..lat.len())
        .filter(|&i| distance(&lat.points[i], &origin) <= CALIBRATION_RADIUS)
        .collect();
    let grid = calibration_grid(n);
    let per_z: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|z| {
            let (mut total, mut tail) = (0.0, 0.0);
            for &q in &near {
                let mut s = 0.0;
                for j in 0..m {
                    for k in 0..b.len() {
                        let mut unit = vec![C64::new(0.0, 0.0); m * b.len()];
                        unit[j * b.len() + k] = C64::new(1.0, 0.0);
                        let mut out = vec![C64::new(0.0, 0.0); m * b.len()];
                        super::add_peak_jet(&b, &unit, m, &lat.points[q], &origin, z, &b, b.len(), &mut out);
                        let jet = Jet {
                            m,
                            basis: b.clone(),
                            coeffs: out,
                        };
                        s += oracle.sensitivity(z, &jet);
                    }
                }
                total += s;
                if q != o && cls.class_of[q] == own_class {
                    tail += s;
                }
            }
            (total, tail)
        })
        .collect();
    let c_sum = per_z.iter().map(|x| x.0).fold(0.0, f64::max);
    let c_tail = per_z.iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(Calibration {
        oracle: oracle.name().to_string(),
        n,
        m,
        l,
        d,
        c_sum,
        c_tail,
    })
}

/// Largest admissible schedule from `eps1`: equality in the step
/// inequality `C eps_{i+1} <= eta_i / 4`, shrunk by a relative `1e-9`.
pub fn closed_form_schedule(eps1: f64, count: usize, c_sum: f64, n0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut e = eps1;
    for _ in 0..count {
        out.push(e);
        e = eta(e, n0) / (4.0 * c_sum) * (1.0 - 1e-9);
    }
    out
}

/// Checks the schedule against both inequalities; the error names the
/// first one violated.
pub fn validate_schedule(schedule: &[f64], classes: usize, n0: f64, cal: &Calibration) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidSchedule(msg));
    if schedule.len() < classes {
        return bad(format!("{} values for {} classes", schedule.len(), classes));
    }
    let schedule = &schedule[..classes];
    if let Some(&e) = schedule.first() {
        if !(e > 0.0 && e < 0.25) {
            return bad(format!("eps_1 = {e} is not in (0, 1/4)"));
        }
    }
    for i in 0..schedule.len() {
        let e = schedule[i];
        if !(e > 0.0) {
            return bad(format!("eps_{} = {e} is not positive", i + 1));
        }
        if i + 1 < schedule.len() {
            let next = schedule[i + 1];
            if next >= e {
                return bad(format!("schedule is not strictly decreasing at eps_{}", i + 2));
            }
            let lhs = cal.c_sum * next;
            let rhs = 0.25 * eta(e, n0);
            if lhs > rhs * (1.0 + 1e-12) {
                return bad(format!(
                    "C eps_{{i+1}} <= eps_i (-log eps_i)^(-N0) / 4 fails at i = {}: {lhs:.3e} > {rhs:.3e} (C = {:.4})",
                    i + 1,
                    cal.c_sum
                ));
            }
        }
        let lhs = cal.c_tail;
        let rhs = 0.25 * (-e.ln()).powf(-n0);
        if lhs > rhs {
            return bad(format!(
                "classmate tail {lhs:.3e} <= (-log eps_i)^(-N0) / 4 = {rhs:.3e} fails at i = {} (D = {})",
                i + 1,
                cal.d
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AvoidResult {
    pub h: Jet,
    /// Minimum oracle margin over the grid with the chosen `H` in place.
    pub achieved: f64,
    pub target: f64,
    pub below_target: bool,
    pub samples: usize,
}

fn sample_ball<R: Rng>(len: usize, eps: f64, rng: &mut R) -> Vec<C64> {
    (0..len)
        .map(|_| {
            let r = eps * rng.gen::<f64>().sqrt();
            let th = rng.gen::<f64>() * std::f64::consts::TAU;
            C64::from_polar(r, th)
        })
        .collect()
}

/// Rejection-samples `H` in the `eps`-ball until the margin of the family
/// with `sigma(H, p)` in place of the current peak at `p` stays above
/// `eps (-log eps)^(-n0)` on `grid`. Returns the best draw if the budget
/// runs out.
#[allow(clippy::too_many_arguments)]
pub fn local_avoid<O: LocusOracle + ?Sized, R: Rng>(
    family: &PeakFamily,
    p: usize,
    eps: f64,
    n0: f64,
    oracle: &O,
    grid: &[Vec<C64>],
    budget: usize,
    rng: &mut R,
) -> Result<AvoidResult> {
    if !(eps > 0.0 && eps < 0.25) {
        return invalid(format!("eps = {eps} is not in (0, 1/4)"));
    }
    if budget == 0 {
        return invalid("budget must be at least 1");
    }
    if p >= family.lattice.len() {
        return invalid("point index out of range");
    }
    let center = &family.lattice.points[p];
    let l = family.l;
    let base: Vec<Jet> = grid
        .iter()
        .map(|z| family.jet_at_filtered(center, z, l, |i| i != p).jet)
        .collect();
    let target = eta(eps, n0);
    let b = family.basis();
    let mut best: Option<(Jet, f64)> = None;
    let mut used = 0;
    for _ in 0..budget {
        used += 1;
        let h = Jet {
            m: family.m,
            basis: b.clone(),
            coeffs: sample_ball(family.m * b.len(), eps, rng),
        };
        let floor = best.as_ref().map(|x| x.1).unwrap_or(f64::NEG_INFINITY);
        let mut worst = f64::INFINITY;
        for (z, bj) in grid.iter().zip(&base) {
            let jet = bj.added(&h.translate(z));
            worst = worst.min(oracle.margin(z, &jet));
            if worst < floor && worst < target {
                break;
            }
        }
        if worst > floor {
            best = Some((h, worst));
        }
        if worst >= target {
            break;
        }
    }
    let (h, achieved) = best.expect("at least one sample");
    Ok(AvoidResult {
        h,
        achieved,
        target,
        below_target: achieved < target,
        samples: used,
    })
}

/// Smallest `N0` on a quarter-step grid such that at least an eighth of
/// random perturbations of size `eps` reach the target with nothing else
/// present, so a budget of a few hundred draws practically always succeeds.
pub fn calibrate_n0<O: LocusOracle + ?Sized>(
    oracle: &O,
    n: usize,
    m: usize,
    l: u32,
    eps: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    let lat = Lattice::from_points(n, vec![vec![C64::new(0.0, 0.0); n]]);
    let cls = color_classes(&lat, 1.0);
    let fam = PeakFamily::zeros(lat, cls, m, l);
    let grid = polydisk_grid(n, 1.0, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = fam.basis();
    let mut ratios: Vec<f64> = (0..samples)
        .map(|_| {
            let h = Jet {
                m,
                basis: b.clone(),
                coeffs: sample_ball(m * b.len(), eps, &mut rng),
            };
            grid.iter()
                .map(|z| oracle.margin(z, &h.translate(z)))
                .fold(f64::INFINITY, f64::min)
                / eps
        })
        .collect();
    ratios.sort_by(|a, b| b.total_cmp(a));
    let a = ratios[(samples / 8).min(samples - 1)];
    let log = -eps.ln();
    let mut n0 = 0.25;
    while log.powf(-n0) > a {
        n0 += 0.25;
    }
    n0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalizeOptions {
    pub m: usize,
    pub l: u32,
    /// Minimum distance between classmates.
    pub d: f64,
    pub n0: f64,
    pub eps1: f64,
    /// Explicit schedule; the closed-form one from `eps1` when absent.
    pub schedule: Option<Vec<f64>>,
    pub budget: usize,
    pub seed: u64,
    pub grid_step: f64,
    /// Only points with every real coordinate within this radius enter the
    /// uniform margin; the rest of the lattice pads the evaluated box so it
    /// sees no edge. All points count when absent.
    pub eval_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class: usize,
    pub size: usize,
    pub epsilon: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub index: usize,
    pub class: usize,
    pub point: Vec<C64>,
    pub achieved_margin: f64,
    pub final_margin: f64,
    pub target: f64,
    pub below_target: bool,
    pub samples: usize,
    pub evaluated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalizeReport {
    pub oracle: String,
    pub n0: f64,
    pub calibration: Calibration,
    pub schedule: Vec<f64>,
    pub classes: Vec<ClassReport>,
    pub points: Vec<PointReport>,
    /// Minimum over points and grid of the final margins; absent for an
    /// empty lattice.
    pub final_uniform_margin: Option<f64>,
    /// Half the smallest class target.
    pub guaranteed_margin: Option<f64>,
    pub any_below_target: bool,
}

/// Stream id of a point: its class and its integer lattice coordinates
/// (the list index for ad hoc point sets), so that a point draws the same
/// perturbations whatever box it is embedded in.
fn point_stream(lattice: &Lattice, class: usize, index: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ class as u64;
    let key: Vec<i64> = match lattice.ints.get(index) {
        Some(v) => v.clone(),
        None => vec![index as i64],
    };
    for k in key {
        for byte in k.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Runs the sweep: classes in order, points of a class in parallel, each
/// with its own stream of the seeded generator.
pub fn globalize<O: LocusOracle + ?Sized>(
    lattice: &Lattice,
    classes: &ColorClasses,
    oracle: &O,
    opts: &GlobalizeOptions,
) -> Result<(PeakFamily, GlobalizeReport)> {
    if opts.l < oracle.order() {
        return invalid(format!("oracle needs jets of order {}", oracle.order()));
    }
    if opts.m == 0 || opts.m > lattice.n {
        return invalid("need 1 <= m <= n");
    }
    if !(opts.grid_step > 0.0) || opts.budget == 0 {
        return invalid("grid step and budget must be positive");
    }
    let n = lattice.n;
    let cal = calibrate(oracle, n, opts.m, opts.l, opts.d)?;
    let count = classes.count();
    let schedule = match &opts.schedule {
        Some(s) => s.clone(),
        None => closed_form_schedule(opts.eps1, count, cal.c_sum, opts.n0),
    };
    validate_schedule(&schedule, count, opts.n0, &cal)?;
    let grid = polydisk_grid(n, 1.0, opts.grid_step);
    let mut family = PeakFamily::zeros(lattice.clone(), classes.clone(), opts.m, opts.l);
    family.schedule = schedule[..count].to_vec();
    let mut results: Vec<Option<AvoidResult>> = vec![None; lattice.len()];
    for (ci, members) in classes.classes.iter().enumerate() {
        let eps = schedule[ci];
        let snapshot = &family;
        let found: Vec<(usize, Result<AvoidResult>)> = members
            .par_iter()
            .map(|&i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(point_stream(lattice, ci, i));
                (
                    i,
                    local_avoid(snapshot, i, eps, opts.n0, oracle, &grid, opts.budget, &mut rng),
                )
            })
            .collect();
        for (i, r) in found {
            let r = r?;
            family.set_coeffs(i, &r.h)?;
            results[i] = Some(r);
        }
    }
    let finals: Vec<f64> = lattice
        .points
        .par_iter()
        .map(|p| {
            grid.iter()
                .map(|z| oracle.margin(z, &family.jet_at(p, z, opts.l).jet))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let inside = |p: &[C64]| match opts.eval_radius {
        Some(r) => p.iter().all(|c| c.re.abs() <= r + 1e-9 && c.im.abs() <= r + 1e-9),
        None => true,
    };
    let points: Vec<PointReport> = (0..lattice.len())
        .map(|i| {
            let r = results[i].as_ref().expect("every point is processed");
            PointReport {
                index: i,
                class: classes.class_of[i],
                point: lattice.points[i].clone(),
                achieved_margin: r.achieved,
                final_margin: finals[i],
                target: r.target,
                below_target: r.below_target,
                samples: r.samples,
                evaluated: inside(&lattice.points[i]),
            }
        })
        .collect();
    let class_reports: Vec<ClassReport> = (0..count)
        .map(|ci| ClassReport {
            class: ci,
            size: classes.classes[ci].len(),
            epsilon: schedule[ci],
            eta: eta(schedule[ci], opts.n0),
        })
        .collect();
    let final_uniform_margin = points
        .iter()
        .filter(|p| p.evaluated)
        .map(|p| p.final_margin)
        .reduce(f64::min);
    let guaranteed_margin = class_reports.iter().map(|c| 0.5 * c.eta).reduce(f64::min);
    let report = GlobalizeReport {
        oracle: oracle.name().to_string(),
        n0: opts.n0,
        calibration: cal,
        schedule: family.schedule.clone(),
        classes: class_reports,
        any_below_target: points.iter().any(|p| p.below_target),
        points,
        final_uniform_margin,
        guaranteed_margin,
    };
    Ok((family, report))
}
