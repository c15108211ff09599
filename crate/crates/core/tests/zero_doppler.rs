use pfa_rd_geo::geodesy::Vec3;
use pfa_rd_geo::pfa_model::ImageIndex;
use pfa_rd_geo::rd_solver::Surface;
use pfa_rd_geo::testkit::{
    dense_scan_zero_doppler, finite_diff_rdot, make_synthetic_scene, Preset,
};
use pfa_rd_geo::zd_model::{zd_forward_map, zd_inverse_map, zd_residual};
use pfa_rd_geo::{design_zd_grid, PfaGeometry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn finite_difference_matches_analytic_range_rate() {
    let scene = make_synthetic_scene(3, Preset::HighIncidence);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for probe in scene.probes.iter().take(50) {
        let eta = rng.gen_range(-150.0..150.0);
        let s = scene.orbit.state_at(eta).unwrap();
        let los: Vec3 = s.position.vec() - probe.ground.vec();
        let analytic = s.velocity.dot(&los) / los.norm();
        let fd = finite_diff_rdot(&scene.orbit, &probe.ground, eta).unwrap();
        assert!((fd - analytic).abs() < 1e-4, "{fd} vs {analytic}");
    }
}

#[test]
fn inverse_agrees_with_dense_scan() {
    let scene = make_synthetic_scene(4, Preset::EquatorialNadirOffset);
    for probe in scene.probes.iter().take(30) {
        let sol = zd_inverse_map(&scene.orbit, &probe.ground, 2.5).unwrap();
        let scan = dense_scan_zero_doppler(&scene.orbit, &probe.ground, -100.0, 100.0).unwrap();
        assert!((sol.eta - scan).abs() < 1e-7);
        assert!(
            finite_diff_rdot(&scene.orbit, &probe.ground, sol.eta)
                .unwrap()
                .abs()
                < 1e-4
        );
        let s = scene.orbit.state_at(sol.eta).unwrap();
        assert!((sol.r - s.position.distance(&probe.ground)).abs() < 1e-6);
        let g = zd_residual(&scene.orbit, &probe.ground, sol.eta).unwrap();
        assert!(g.abs() / (s.velocity.norm() * sol.r) < 1e-12);
    }
}

#[test]
fn grid_round_trip() {
    let scene = make_synthetic_scene(6, Preset::MidLatitudeSquint);
    let geom = PfaGeometry::from_meta(&scene.meta).unwrap();
    let h = scene.meta.scp_llh.height();
    let zd = design_zd_grid(&geom, h, &scene.orbit).unwrap();
    let surface = Surface::ConstantHae(h);
    for (row, line) in [
        (0.0, 0.0),
        (10.5, 200.25),
        ((zd.rows - 1) as f64, (zd.lines - 1) as f64),
    ] {
        let idx = ImageIndex { row, col: line };
        let (p, _) = zd_forward_map(&zd, &idx, &surface).unwrap();
        let back = zd.index_of(&zd_inverse_map(&zd.orbit, &p, zd.time_at(line)).unwrap());
        assert!(
            (back.row - row).abs() < 1e-6 && (back.col - line).abs() < 1e-6,
            "{back:?}"
        );
    }
    let d = zd.description();
    assert_eq!(d.rows, zd.rows);
    assert!(serde_json::to_string(&d).unwrap().contains("look_side"));
}
