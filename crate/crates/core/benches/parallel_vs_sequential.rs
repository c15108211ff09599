use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_complex::Complex32;
use pfa_rd_geo::resampler::{design_zd_grid, resample_pfa_to_zd, ComplexRaster};
use pfa_rd_geo::testkit::{make_synthetic_scene_with, Preset, SceneOptions};
use pfa_rd_geo::{geocode, Exec, PfaGeometry, Surface};

const SIZE: usize = 256;

fn policies() -> [(&'static str, Exec); 2] {
    [
        ("sequential", Exec::Sequential),
        ("parallel", Exec::Parallel),
    ]
}

fn scene() -> (pfa_rd_geo::testkit::SyntheticScene, PfaGeometry) {
    let scene = make_synthetic_scene_with(
        1,
        Preset::MidLatitudeSquint,
        SceneOptions {
            rows: SIZE,
            cols: SIZE,
            probes: 0,
        },
    );
    let geom = PfaGeometry::from_meta(&scene.meta).unwrap();
    (scene, geom)
}

fn bench_geocode(c: &mut Criterion) {
    let (scene, geom) = scene();
    let surface = Surface::ConstantHae(scene.meta.scp_llh.height());
    let mut group = c.benchmark_group("geocode_256");
    group.sample_size(10);
    for (name, exec) in policies() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| geocode(&geom, &surface, 1, exec))
        });
    }
    group.finish();
}

fn bench_resample(c: &mut Criterion) {
    let (scene, geom) = scene();
    let h = scene.meta.scp_llh.height();
    let zd = design_zd_grid(&geom, h, &scene.orbit).unwrap();
    let src = ComplexRaster::filled(SIZE, SIZE, Complex32::new(1.0, 0.5)).unwrap();
    let mut group = c.benchmark_group("resample_256");
    group.sample_size(10);
    for (name, exec) in policies() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| resample_pfa_to_zd(&src, &geom, &zd, h, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_geocode, bench_resample);
criterion_main!(benches);
