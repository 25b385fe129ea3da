use std::f64::consts::{FRAC_PI_2, TAU};

use ciscurv_core::brody::{poincare_jacobian, DiskMap, Mobius};
use ciscurv_core::germ::{holbisec, holsec, ricci, scalar};
use ciscurv_core::jetspace::{fiber_rank, jet_space_dim, locus_codim, threshold_table};
use ciscurv_core::samples::graph_germ;
use ciscurv_core::{JetSpec, LocusId, Tolerances, C64};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Graph data for `d = 2`, `n = 4` with quadratic and cubic terms.
fn graph_data() -> impl Strategy<Value = Vec<Vec<(Vec<u32>, C64)>>> {
    let monos: Vec<Vec<u32>> = vec![vec![2, 0], vec![1, 1], vec![0, 2], vec![3, 0], vec![1, 2]];
    let coeff = (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c(a, b));
    proptest::collection::vec(proptest::collection::vec(coeff, monos.len()), 2).prop_map(move |rows| {
        rows.into_iter()
            .map(|r| monos.iter().cloned().zip(r).collect())
            .collect()
    })
}

fn unit2() -> impl Strategy<Value = Vec<C64>> {
    (0.0..FRAC_PI_2, 0.0..TAU).prop_map(|(a, p)| vec![c(a.cos(), 0.0), C64::from_polar(a.sin(), p)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn curvatures_of_graphs_are_nonpositive(data in graph_data(), v in unit2(), w in unit2()) {
        let g = graph_germ(2, 4, &data, &Tolerances::default()).unwrap();
        prop_assert!(holsec(&g, &v).unwrap() <= 0.0);
        prop_assert!(holbisec(&g, &v, &w).unwrap() <= 0.0);
        prop_assert!(ricci(&g, &v).unwrap() <= 0.0);
        // holomorphic sectional curvature is bounded below by the scalar one
        prop_assert!(holsec(&g, &v).unwrap() >= scalar(&g) / 2.0 - 1e-9);
    }

    #[test]
    fn hypotheses_imply_thresholds(d in 1u32..8, extra in 1u32..10) {
        let n = d + extra;
        for r in threshold_table(d, n).unwrap() {
            if r.hypothesis_holds {
                prop_assert!(r.threshold_holds, "{r:?}");
            }
        }
    }

    #[test]
    fn jet_dimension_grows_by_the_fiber(d in 1u32..6, extra in 1u32..6, l in 1u32..5) {
        let n = d + extra;
        let lo = jet_space_dim(JetSpec::new(d, n, l - 1).unwrap());
        let hi = jet_space_dim(JetSpec::new(d, n, l).unwrap());
        let fiber = fiber_rank(d, n, l);
        prop_assert_eq!(hi - lo, fiber);
    }

    #[test]
    fn line_tangency_bound_is_sharp_at_the_threshold(n in 2u32..10) {
        let l = 2 * n - 1;
        let r = locus_codim(LocusId::LineTangency(l), JetSpec::new(n - 1, n, l).unwrap()).unwrap();
        prop_assert_eq!(r.codim_lower_bound, n as i64);
        prop_assert!(r.hypothesis_holds && r.threshold_holds);
    }

    #[test]
    fn poincare_jacobian_is_mobius_invariant(
        a in (0.0..0.6f64, 0.0..TAU),
        rot in 0.0..TAU,
        p in (0.0..0.6f64, 0.0..TAU),
        coeffs in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4),
    ) {
        let mut row: Vec<C64> = coeffs.iter().map(|&(x, y)| c(x, y)).collect();
        row[1] += c(1.5, 0.0);
        let f = DiskMap::polynomial(vec![row]).unwrap();
        let h = Mobius::new(C64::from_polar(a.0, a.1), rot).unwrap();
        let p = C64::from_polar(p.0, p.1);
        let lhs = poincare_jacobian(&f.compose_mobius(&h, 90).unwrap(), p).unwrap();
        let rhs = poincare_jacobian(&f, h.eval(p)).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}
