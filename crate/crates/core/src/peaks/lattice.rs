//! Unit-scale discretization of a box in `C^n` and its color classes.
//!
//! Points are the scaled checkerboard lattice `s D_{2n}` (integer vectors
//! with even coordinate sum) in real coordinates `(Re z_1, Im z_1, ...)`.
//! With `s = 3/4` the separation is `s sqrt 2 > 1` and the covering radius
//! `s max(1, sqrt(2n)/2)` stays below 1 for `n <= 3`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::C64;

pub const DEFAULT_SCALE: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub n: usize,
    pub radius: f64,
    pub scale: f64,
    pub points: Vec<Vec<C64>>,
    /// Integer coordinates in `D_{2n}`; empty for ad hoc point sets.
    pub ints: Vec<Vec<i64>>,
    pub covering_radius: f64,
    pub separation: f64,
}

impl Lattice {
    /// An arbitrary point set, mainly for tests. Separation is measured,
    /// covering radius is left at infinity.
    pub fn from_points(n: usize, points: Vec<Vec<C64>>) -> Self {
        let separation = min_distance(&points);
        Lattice {
            n,
            radius: points
                .iter()
                .flat_map(|p| p.iter().flat_map(|c| [c.re.abs(), c.im.abs()]))
                .fold(0.0, f64::max),
            scale: 1.0,
            points,
            ints: Vec::new(),
            covering_radius: f64::INFINITY,
            separation,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn min_distance(points: &[Vec<C64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in 0..i {
            best = best.min(distance(&points[i], &points[j]));
        }
    }
    best
}

pub fn discretize(n: usize, radius: f64) -> Result<Lattice> {
    discretize_with_scale(n, radius, DEFAULT_SCALE)
}

/// Points of `scale * D_{2n}` with every real coordinate in `[-radius, radius]`.
pub fn discretize_with_scale(n: usize, radius: f64, scale: f64) -> Result<Lattice> {
    if n == 0 {
        return invalid("dimension must be positive");
    }
    if !(radius >= 0.0 && radius.is_finite()) || !(scale > 0.0) {
        return invalid("radius must be nonnegative and scale positive");
    }
    // deep holes of D_m sit at distance max(1, sqrt(m)/2)
    let covering = scale * 1f64.max(((2 * n) as f64).sqrt() / 2.0);
    if covering >= 1.0 {
        return invalid(format!(
            "covering radius {covering:.3} of the scaled lattice is not below 1 in dimension {n}"
        ));
    }
    let k = (radius / scale + 1e-9).floor() as i64;
    let dim = 2 * n;
    let mut ints = Vec::new();
    let mut cur = vec![-k; dim];
    loop {
        if cur.iter().sum::<i64>().rem_euclid(2) == 0 {
            ints.push(cur.clone());
        }
        let mut i = 0;
        while i < dim {
            if cur[i] < k {
                cur[i] += 1;
                break;
            }
            cur[i] = -k;
            i += 1;
        }
        if i == dim {
            break;
        }
    }
    let points = ints
        .iter()
        .map(|v| {
            (0..n)
                .map(|j| C64::new(v[2 * j] as f64 * scale, v[2 * j + 1] as f64 * scale))
                .collect()
        })
        .collect();
    Ok(Lattice {
        n,
        radius,
        scale,
        points,
        ints,
        covering_radius: covering,
        separation: scale * 2f64.sqrt(),
    })
}

/// Partition of the lattice into classes whose members are pairwise at
/// least `d` apart, listed by class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorClasses {
    pub d: f64,
    /// Sublattice index: classes are cosets of `k D_{2n}`.
    pub k: i64,
    pub class_of: Vec<usize>,
    pub classes: Vec<Vec<usize>>,
}

impl ColorClasses {
    pub fn count(&self) -> usize {
        self.classes.len()
    }
}

/// Coordinates of an integer vector of `D_{2n}` in the basis
/// `e_1 + e_2, e_2 - e_1, e_3 - e_1, ...`.
fn dn_coords(x: &[i64]) -> Vec<i64> {
    let total: i64 = x.iter().sum();
    let c1 = total / 2;
    let mut c = vec![c1];
    if x.len() > 1 {
        c.push(x[1] - c1);
    }
    c.extend_from_slice(&x[2.min(x.len())..]);
    c
}

pub fn color_classes(lattice: &Lattice, d: f64) -> ColorClasses {
    let n = lattice.len();
    if lattice.ints.is_empty() {
        // ad hoc point sets: greedy coloring
        let mut class_of = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let slot = classes.iter().position(|cl| {
                cl.iter()
                    .all(|&j| distance(&lattice.points[i], &lattice.points[j]) >= d)
            });
            let c = slot.unwrap_or_else(|| {
                classes.push(Vec::new());
                classes.len() - 1
            });
            classes[c].push(i);
            class_of[i] = c;
        }
        return ColorClasses {
            d,
            k: 0,
            class_of,
            classes,
        };
    }
    // same coset of k D_{2n} => distance >= k * s * sqrt 2 >= d
    let k = (d / (lattice.scale * 2f64.sqrt()) - 1e-12).ceil().max(1.0) as i64;
    let residues: Vec<Vec<i64>> = lattice
        .ints
        .iter()
        .map(|x| dn_coords(x).into_iter().map(|c| c.rem_euclid(k)).collect())
        .collect();
    let mut keys: Vec<Vec<i64>> = residues.clone();
    keys.sort();
    keys.dedup();
    let classes: Vec<Vec<usize>> = keys
        .iter()
        .map(|key| (0..n).filter(|&i| &residues[i] == key).collect())
        .collect();
    let mut class_of = vec![0; n];
    for (c, members) in classes.iter().enumerate() {
        for &i in members {
            class_of[i] = c;
        }
    }
    ColorClasses {
        d,
        k,
        class_of,
        classes,
    }
}
