use std::hint::black_box;

use ciscurv_core::brody::{brody_reparametrize, max_line_tangency, DiskMap};
use ciscurv_core::gauss::kernel_profile;
use ciscurv_core::germ::{certify_holbisec_negative, Germ};
use ciscurv_core::jetspace::threshold_table;
use ciscurv_core::peaks::{color_classes, discretize, PeakFamily};
use ciscurv_core::samples::{quadric_graph, random_germ};
use ciscurv_core::{Tolerances, C64};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn germs(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_germ(3, 6, 4, &mut rng, &tol);
    let map = g.map().clone();
    let point = g.point().to_vec();
    c.bench_function("germ_d3_n6", |b| {
        b.iter(|| Germ::new(black_box(map.clone()), point.clone(), &tol).unwrap())
    });
    c.bench_function("holbisec_certificate_d3_n6", |b| {
        b.iter(|| certify_holbisec_negative(black_box(&g), 8, 0, &tol))
    });
    c.bench_function("kernel_profile_d3_l2", |b| {
        b.iter(|| kernel_profile(black_box(&g), 2, 8, 0, &tol).unwrap())
    });
    c.bench_function("threshold_table_d3_n12", |b| {
        b.iter(|| threshold_table(black_box(3), 12).unwrap())
    });
}

fn peaks(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let lat = discretize(2, 3.0).unwrap();
    let cls = color_classes(&lat, 4.0);
    let mut f = PeakFamily::zeros(lat, cls, 1, 2);
    for h in f.coeffs.iter_mut() {
        for x in h.iter_mut() {
            *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let center = vec![C64::new(0.0, 0.0); 2];
    let z = vec![C64::new(0.3, -0.2), C64::new(0.1, 0.4)];
    c.bench_function("frame_jet_n2_l2", |b| b.iter(|| f.jet_at(black_box(&center), &z, 2)));
}

fn disks(c: &mut Criterion) {
    let f = DiskMap::polynomial(vec![
        vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.3, 0.2),
            C64::new(0.0, -0.4),
        ],
        vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.5),
            C64::new(0.0, 0.0),
            C64::new(0.2, 0.0),
        ],
    ])
    .unwrap();
    c.bench_function("brody_grid_0.02", |b| {
        b.iter(|| brody_reparametrize(black_box(&f), 0.02).unwrap())
    });
    let q = quadric_graph();
    let o = [C64::new(0.0, 0.0); 3];
    let tol = Tolerances::default();
    c.bench_function("line_scan_quadric", |b| {
        b.iter(|| max_line_tangency(black_box(&q), &o, 2, 4, &tol).unwrap())
    });
}

criterion_group!(benches, germs, peaks, disks);
criterion_main!(benches);
