use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use twoway::oracle::{morphism_suite, translation_suite, Sample};
use twoway::samples::{morphism_fixtures, sorting_transducer};
use twoway::twovpa::{compute_algebra, DEFAULT_ALGEBRA_CAP};
use twoway::twovpt::is_single_use_auto;
use twoway::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn algebra(c: &mut Criterion) {
    let mut g = c.benchmark_group("algebra");
    g.sample_size(10);
    for n in [2, 3] {
        let a = sorting_transducer(n).automaton;
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, format!("sorting{n}")), &a, |b, a| {
                b.iter(|| compute_algebra(black_box(a), DEFAULT_ALGEBRA_CAP, exec).unwrap().len())
            });
        }
    }
    g.finish();
}

fn suites(c: &mut Criterion) {
    let mut g = c.benchmark_group("suites");
    g.sample_size(10);
    let (_, deep) = morphism_fixtures().into_iter().find(|f| f.0 == "deep2").unwrap();
    let t = sorting_transducer(2);
    let s = Sample { random: 100, ..Sample::exhaustive(10) };
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new(name, "morphism-deep2"), |b| {
            b.iter(|| morphism_suite("deep2", &deep, &s, DEFAULT_ALGEBRA_CAP, exec).unwrap().checked)
        });
        g.bench_function(BenchmarkId::new(name, "translation-sorting2"), |b| {
            b.iter(|| translation_suite("sorting2", &t, &s, DEFAULT_ALGEBRA_CAP, exec).unwrap().checked)
        });
        g.bench_function(BenchmarkId::new(name, "single-use-sorting2"), |b| {
            b.iter(|| is_single_use_auto(&t, DEFAULT_ALGEBRA_CAP, exec).unwrap().holds())
        });
    }
    g.finish();
}

criterion_group!(benches, algebra, suites);
criterion_main!(benches);
