use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use manycover::flmo::{price_star, scale_and_prune};
use manycover::lp::{solve_lp, Cmp, LpModel};
use manycover::msc::{solve_msc_single, GuessConfig};
use manycover::rounding::{lipschitz_ell, lipschitz_greedy};
use manycover::RngStream;
use manycover::sets::BitSet;

use manycover_bench::{flmo_instance, msc_instance};

fn bench_greedy(c: &mut Criterion) {
    let inst = msc_instance(40, 30, 7);
    let ell = lipschitz_ell(2, 0.25).unwrap();
    c.bench_function("lipschitz_greedy n=40", |b| {
        b.iter(|| {
            for (f, &bi) in inst.fns.iter().zip(&inst.b) {
                black_box(lipschitz_greedy(f, bi, 0.25, ell).unwrap());
            }
        })
    });
}

fn bench_simplex(c: &mut Criterion) {
    let mut rng = RngStream::new(11);
    let n = 25;
    let mut model = LpModel::new(n);
    for j in 0..n {
        model.objective[j] = rng.next_range_f64(1.0, 5.0);
        model.set_upper(j, 1.0);
    }
    for _ in 0..15 {
        let picked: Vec<usize> = (0..n).filter(|_| rng.next_bool(0.5)).collect();
        let row: Vec<(usize, f64)> =
            picked.into_iter().map(|j| (j, rng.next_range_f64(0.2, 2.0))).collect();
        let rhs = row.iter().map(|(_, v)| v).sum::<f64>() * 0.4;
        model.add_row(row, Cmp::Ge, rhs);
    }
    c.bench_function("simplex 25x15", |b| b.iter(|| black_box(solve_lp(&model).unwrap())));
}

fn bench_pricing(c: &mut Criterion) {
    let inst = flmo_instance(3, 120, 13);
    let scaled = scale_and_prune(&inst, 150.0).unwrap();
    let mut rng = RngStream::new(14);
    let alpha: Vec<f64> = (0..inst.nc).map(|_| rng.next_range_f64(0.0, 40.0)).collect();
    let allowed = BitSet::full(inst.nc);
    let cap = scaled.open_cap();
    c.bench_function("price_star nc=120", |b| {
        b.iter(|| black_box(price_star(&scaled, 0, &alpha, &allowed, None, cap, 1e-9)))
    });
}

fn bench_end_to_end(c: &mut Criterion) {
    let inst = msc_instance(10, 8, 21);
    let cfg = GuessConfig::default();
    c.bench_function("solve_msc n=10", |b| {
        b.iter(|| black_box(solve_msc_single(&inst, 0.25, &cfg, &mut RngStream::new(3)).unwrap()))
    });
}

criterion_group!(benches, bench_greedy, bench_simplex, bench_pricing, bench_end_to_end);
criterion_main!(benches);
