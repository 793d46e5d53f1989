use biconservative::exec::Exec;
use biconservative::extrinsic::{sample_patch, PatchOptions, PatchSpec};
use biconservative::profile::ModelParams;
use biconservative::scan::{scan_triples, scan_windows, Axis};
use biconservative::verify::{verify_patch, Level, VerifyOptions};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn triples(c: &mut Criterion) {
    let k: Axis = "0.5:2:6".parse().unwrap();
    let dk: Axis = "-0.5:0.5:5".parse().unwrap();
    let ddk: Axis = "-12:-1:12".parse().unwrap();
    let mut g = c.benchmark_group("scan_triples");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| scan_triples(&k, &dk, &ddk, 0.2, exec))
        });
    }
    g.finish();
}

fn windows(c: &mut Criterion) {
    let cs: Axis = "0.2:3:40".parse().unwrap();
    let bs: Axis = "0.5:6:40".parse().unwrap();
    let mut g = c.benchmark_group("scan_windows");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| scan_windows(&cs, &bs, exec)));
    }
    g.finish();
}

fn verify(c: &mut Criterion) {
    let patch = sample_patch(
        &ModelParams::reference(),
        std::f64::consts::FRAC_1_SQRT_2,
        &PatchSpec::reference(),
        &PatchOptions::default(),
    )
    .unwrap();
    let mut g = c.benchmark_group("verify_full");
    g.sample_size(10);
    for (name, exec) in MODES {
        let opts = VerifyOptions {
            exec,
            ..VerifyOptions::new(Level::Full)
        };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_patch(&patch, &opts).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, triples, windows, verify);
criterion_main!(benches);
