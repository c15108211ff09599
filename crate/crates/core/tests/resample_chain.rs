use num_complex::Complex32;
use pfa_rd_geo::pfa_model::ImageIndex;
use pfa_rd_geo::rd_solver::Surface;
use pfa_rd_geo::resampler::{
    design_zd_grid, interpolate_complex, resample_pfa_to_zd, ComplexRaster,
};
use pfa_rd_geo::testkit::{make_synthetic_scene_with, Preset, SceneOptions};
use pfa_rd_geo::zd_model::zd_inverse_map;
use pfa_rd_geo::{Exec, PfaGeometry};

fn scene(rows: usize, cols: usize) -> (PfaGeometry, pfa_rd_geo::Orbit, f64) {
    let s = make_synthetic_scene_with(
        21,
        Preset::EquatorialNadirOffset,
        SceneOptions {
            rows,
            cols,
            probes: 0,
        },
    );
    (
        PfaGeometry::from_meta(&s.meta).unwrap(),
        s.orbit,
        s.meta.scp_llh.height(),
    )
}

#[test]
fn constant_image_is_preserved_exactly() {
    let (geom, orbit, h) = scene(96, 80);
    let zd = design_zd_grid(&geom, h, &orbit).unwrap();
    let c = Complex32::new(-3.5, 0.125);
    let src = ComplexRaster::filled(96, 80, c).unwrap();
    let out = resample_pfa_to_zd(&src, &geom, &zd, h, Exec::Sequential).unwrap();
    assert_eq!(out.raster.rows(), zd.rows);
    assert_eq!(out.raster.cols(), zd.lines);
    let mut n_valid = 0;
    for (v, ok) in out.raster.data().iter().zip(&out.valid) {
        if *ok {
            assert_eq!(*v, c);
            n_valid += 1;
        } else {
            assert_eq!(*v, Complex32::new(0.0, 0.0));
        }
    }
    let vf = out.report.valid_fraction;
    assert!(vf > 0.0 && vf <= 1.0);
    assert_eq!(n_valid as f64 / (zd.rows * zd.lines) as f64, vf);
    assert!(out.report.max_ground_roundtrip_error < 0.01);
}

#[test]
fn impulse_lands_at_predicted_location() {
    let (geom, orbit, h) = scene(128, 128);
    let zd = design_zd_grid(&geom, h, &orbit).unwrap();
    let mut src = ComplexRaster::filled(128, 128, Complex32::new(0.0, 0.0)).unwrap();
    src.set(40, 90, Complex32::new(2.0, 1.0));
    let out = resample_pfa_to_zd(&src, &geom, &zd, h, Exec::Parallel).unwrap();

    let (p, _) = geom
        .forward(
            &ImageIndex {
                row: 40.0,
                col: 90.0,
            },
            &Surface::ConstantHae(h),
        )
        .unwrap();
    let expect = zd.index_of(&zd_inverse_map(&orbit, &p, geom.constants.t_coa).unwrap());
    let (i, _) = out
        .raster
        .data()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    let (row, line) = ((i / zd.lines) as f64, (i % zd.lines) as f64);
    assert!((row - expect.row).abs() <= 1.0 && (line - expect.col).abs() <= 1.0);
}

#[test]
fn single_pixel_scene_has_no_margin() {
    let (geom, orbit, h) = scene(1, 1);
    let zd = design_zd_grid(&geom, h, &orbit).unwrap();
    assert_eq!((zd.rows, zd.lines), (1, 1));
}

#[test]
fn mismatched_source_is_rejected() {
    let (geom, orbit, h) = scene(32, 32);
    let zd = design_zd_grid(&geom, h, &orbit).unwrap();
    let src = ComplexRaster::filled(31, 32, Complex32::new(1.0, 0.0)).unwrap();
    assert!(resample_pfa_to_zd(&src, &geom, &zd, h, Exec::Sequential).is_err());
}

#[test]
fn bilinear_is_exact_on_planes() {
    let data = (0..20)
        .map(|i| {
            let (r, c) = ((i / 5) as f32, (i % 5) as f32);
            Complex32::new(2.0 * r - c, 0.5 * c)
        })
        .collect();
    let src = ComplexRaster::new(4, 5, data).unwrap();
    let v = interpolate_complex(
        &src,
        &ImageIndex {
            row: 1.25,
            col: 3.5,
        },
    )
    .unwrap();
    assert_eq!(v, Complex32::new(2.0 * 1.25 - 3.5, 1.75));
    assert!(interpolate_complex(
        &src,
        &ImageIndex {
            row: 3.0001,
            col: 0.0
        }
    )
    .is_none());
}
