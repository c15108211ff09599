use num_complex::Complex32;
use pfa_rd_geo::raster::{
    header_path, read_complex, read_dem, read_real, write_complex, write_dem, write_f64, DType,
};
use pfa_rd_geo::rd_solver::DemRaster;
use pfa_rd_geo::resampler::ComplexRaster;

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("pfa-rd-geo-io-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn dem_round_trips_in_both_precisions() {
    let dir = scratch("dem");
    let dem = DemRaster::new(
        vec![1.5, 2.5, -9999.0, 4.0],
        2,
        2,
        10.0,
        20.0,
        0.5,
        0.25,
        Some(-9999.0),
    )
    .unwrap();
    for (dtype, name) in [(DType::Float32, "d32"), (DType::Float64, "d64")] {
        let path = dir.join(name);
        write_dem(&path, &dem, dtype).unwrap();
        let back = read_dem(&path).unwrap();
        assert_eq!(back, dem);
        let header = std::fs::read_to_string(header_path(&path)).unwrap();
        assert!(header.contains("\"nodata\""));
        assert!(back.height_at(10.0, 20.5).is_err());
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn real_and_complex_rasters() {
    let dir = scratch("rasters");
    let path = dir.join("v.f64");
    let values = [0.0, f64::NAN, -1.0e300, 7.25, 1.0, 2.0];
    write_f64(&path, 2, 3, &values, None).unwrap();
    let (h, back) = read_real(&path).unwrap();
    assert_eq!((h.rows, h.cols, h.dtype), (2, 3, DType::Float64));
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&back), bits(&values));
    assert!(read_complex(&path).is_err());
    assert!(write_f64(&path, 2, 2, &values, None).is_err());

    let z = ComplexRaster::new(1, 3, vec![Complex32::new(1.0, 2.0); 3]).unwrap();
    let zp = dir.join("z.c64");
    write_complex(&zp, &z).unwrap();
    assert_eq!(read_complex(&zp).unwrap(), z);
    assert!(read_dem(&zp).is_err());
    std::fs::remove_dir_all(&dir).ok();
}
