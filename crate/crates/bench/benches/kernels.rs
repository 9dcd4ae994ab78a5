use bggcheck_bench::{flat23, flat_field, opts, quartic23, quartic_point, split23, x0, ORDER};
use bggcheck_core::bgg::{l0_defect, points_at, theta0};
use bggcheck_core::coupling::{coupling_report_at, projector, CouplingKind};
use bggcheck_core::point::Point;
use bggcheck_core::Polynomial;
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn jets(c: &mut Criterion) {
    let mut p = Polynomial::var(5, 0).scale(0.4);
    p.add_term(vec![1, 2, 0, 1, 0], -0.3);
    p.add_term(vec![0, 0, 2, 0, 1], 0.7);
    let a = p.jet_at(&x0(), ORDER).unwrap();
    let b = Polynomial::var(5, 3).jet_at(&x0(), ORDER).unwrap().exp();
    c.bench_function("jet mul n=5 order=4", |bn| bn.iter(|| black_box(&a) * black_box(&b)));
    c.bench_function("jet reciprocal n=5 order=4", |bn| bn.iter(|| black_box(&b).reciprocal()));
    c.bench_function("jet partial", |bn| bn.iter(|| black_box(&a).partial(2)));
}

fn geometry(c: &mut Criterion) {
    let m = quartic23();
    c.bench_function("point quartic (2,3)", |bn| {
        bn.iter(|| Point::with_optional_spin(black_box(&m), &x0(), ORDER).unwrap())
    });
}

fn bgg(c: &mut Criterion) {
    let pt = quartic_point();
    for name in ["aes_generic", "ckf1_generic", "ckf2_generic", "chi_generic"] {
        let f = flat_field(name);
        let jet = f.jet_at(&x0(), ORDER).unwrap();
        c.bench_function(&format!("theta0 {name}"), |bn| bn.iter(|| theta0(&pt, f.kind, black_box(&jet)).unwrap()));
        c.bench_function(&format!("splitting defect {name}"), |bn| bn.iter(|| l0_defect(&pt, black_box(&jet)).unwrap()));
    }
}

fn coupling(c: &mut Criterion) {
    let s = flat23();
    let metric = s.metric().unwrap();
    let pts = points_at(&metric, &metric.sample_points(4, 0), ORDER).unwrap();
    let (a, b) = (flat_field("ckf1_generic"), flat_field("chi_generic"));
    c.bench_function("coupling report form-spinor k=1, 4 points", |bn| {
        bn.iter(|| coupling_report_at(&pts, CouplingKind::FormSpinor { k: 1 }, &a, &b, opts()).unwrap())
    });

    let pt = Point::with_optional_spin(&metric, &x0(), ORDER).unwrap();
    let chi = b.jet_at(&x0(), ORDER).unwrap();
    let x = bggcheck_core::bgg::split_spinor(&pt, chi.as_spinor().unwrap()).unwrap();
    assert_eq!(pt.geo.signature, split23());
    c.bench_function("projector k=1 (2,3)", |bn| bn.iter(|| projector(&pt, black_box(&x), 1).unwrap()));
}

criterion_group!(benches, jets, geometry, bgg, coupling);
criterion_main!(benches);
