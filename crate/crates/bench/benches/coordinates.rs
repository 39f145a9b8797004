use criterion::{black_box, criterion_group, criterion_main, Criterion};
use petalstar::parametrize;
use petalstar::{CriticalChoice, FatouAtlas, KoenigsChart, Point, Representative, C64};

fn koenigs(c: &mut Criterion) {
    let rep = Representative::rational(C64::new(0.3, 0.5), C64::new(0.7, -0.2));
    let chart = KoenigsChart::build(&rep, CriticalChoice::Auto).unwrap();
    let z = Point::new(C64::new(0.4, 1.3));
    c.bench_function("koenigs_value", |b| b.iter(|| chart.value(black_box(z)).unwrap()));
}

fn fatou(c: &mut Criterion) {
    let atlas = FatouAtlas::polynomial("1/3".parse().unwrap()).unwrap();
    let x = atlas.inverse(1, C64::new(0.4, 0.2)).unwrap();
    c.bench_function("fatou_value", |b| b.iter(|| atlas.value(black_box(x)).unwrap()));
}

fn solve(c: &mut Criterion) {
    let (atlas, geometry, x) = petalstar_bench::solve_inputs();
    let seed = parametrize::solve_phi(&atlas, &geometry, x, None).unwrap().normalized_shift();
    let mut group = c.benchmark_group("solve_phi");
    group.sample_size(20);
    group.bench_function("grid_scan", |b| b.iter(|| parametrize::solve_phi(&atlas, &geometry, black_box(x), None).unwrap()));
    group.bench_function("continuation", |b| {
        b.iter(|| parametrize::solve_phi(&atlas, &geometry, black_box(x), Some(seed)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, koenigs, fatou, solve);
criterion_main!(benches);
