use criterion::{criterion_group, criterion_main, Criterion};
use liouville_core::cylinder::CylinderEnsemble;
use liouville_core::rng::Stream;
use liouville_core::sphere::{gmc_weights, SphereEnsemble};
use liouville_core::{Insertion, LiouvilleParams};

fn bench_sphere(c: &mut Criterion) {
    let p = LiouvilleParams::new(1.0, 1.0).unwrap();
    let ins = [Insertion::at(1.8, 0.0, 0.0), Insertion::at(1.8, 1.0, 0.0)];
    let ens = SphereEnsemble::build(&p, 24, &ins, 1.8).unwrap();

    c.bench_function(&format!("sphere_build_res24_{}cells", ens.n_cells()), |b| {
        b.iter(|| SphereEnsemble::build(&p, 24, &ins, 1.8).unwrap())
    });

    c.bench_function("sphere_field_and_weights", |b| {
        let mut k = 0u64;
        b.iter(|| {
            let mut s = Stream::for_sample(1, k);
            k += 1;
            let f = ens.sample_field(&mut s);
            gmc_weights(&f, &ens, 1.0).unwrap()
        })
    });

    c.bench_function("sphere_batch_64_samples", |b| {
        let mut base = 0u64;
        b.iter(|| {
            base += 64;
            ens.sample_map(64, base, |_, field| field[0])
        })
    });
}

fn bench_cylinder(c: &mut Criterion) {
    let ens = CylinderEnsemble::build(0.0, 12.0, 64).unwrap();
    c.bench_function("cylinder_lateral_field", |b| {
        let mut k = 0u64;
        b.iter(|| {
            let mut s = Stream::for_sample(2, k);
            k += 1;
            ens.sample_lateral(&mut s)
        })
    });
}

criterion_group!(benches, bench_sphere, bench_cylinder);
criterion_main!(benches);
