use pfa_rd_geo::geodesy::Vec3;
use pfa_rd_geo::geodesy::{ecef_to_llh, llh_to_ecef, LlhPoint};
use pfa_rd_geo::pfa_model::{compute_affine, image_to_rrdot, rrdot_to_image, ImageCoord};
use pfa_rd_geo::rd_solver::rrdot_to_surface;
use pfa_rd_geo::testkit::{affine_entries_oracle, random_solver_case, ulp_distance};
use pfa_rd_geo::{EcefPoint, LookSide, PfaConstants};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn constants(theta: f64, ksf: f64, dksf: f64, w: f64, r: f64, rdot: f64) -> PfaConstants {
    PfaConstants {
        arp_pos: EcefPoint::new(7.0e6, 0.0, 0.0),
        arp_vel: Vec3::new(0.0, 7.5e3, 0.0),
        r_scp: r,
        rdot_scp: rdot,
        theta_coa: theta,
        dtheta_dt: w,
        ksf,
        dksf_dtheta: dksf,
        t_coa: 0.0,
        wavelength: 0.03,
        look_side: LookSide::Left,
    }
}

proptest! {
    #[test]
    fn llh_round_trip(lat in -89.9f64..89.9, lon in -179.9f64..179.9, h in -1000.0f64..20000.0) {
        let p = LlhPoint::new(lat, lon, h).unwrap();
        let back = ecef_to_llh(&llh_to_ecef(&p)).unwrap();
        prop_assert!((back.lat() - lat).abs() < 1e-9);
        prop_assert!((back.lon() - lon).abs() < 1e-9);
        prop_assert!((back.height() - h).abs() < 1e-4);
    }

    #[test]
    fn affine_entries_and_round_trip(
        theta in -0.3f64..0.3, ksf in 0.95f64..1.05, dksf in -0.1f64..0.1, w in 0.005f64..0.05,
        r in 4.0e5f64..2.0e6, rdot in -800.0f64..800.0, rg in -8000.0f64..8000.0, az in -8000.0f64..8000.0,
    ) {
        let k = constants(theta, ksf, dksf, w, r, rdot);
        let m = compute_affine(&k).unwrap();
        for (got, want) in [m.a11, m.a12, m.a21, m.a22].into_iter().zip(affine_entries_oracle(&k)) {
            prop_assert!(ulp_distance(got, want) <= 4);
        }
        let c = ImageCoord { rg, az };
        let rd = image_to_rrdot(&m, &c).unwrap();
        let back = rrdot_to_image(&m, &rd).unwrap();
        prop_assert!((back.rg - rg).abs() < 1e-6 && (back.az - az).abs() < 1e-6);
    }

    #[test]
    fn solver_successes_meet_residual_contract(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_solver_case(&mut rng);
        match rrdot_to_surface(&case.state, &case.rd, case.height, case.look) {
            Ok((p, diag)) => {
                prop_assert!(diag.range_residual.abs() < 1e-3);
                prop_assert!(diag.normalized_rdot(case.state.velocity.norm()).abs() < 1e-6);
                prop_assert!(diag.height_residual.abs() < 1e-3);
                if let Some(t) = case.truth {
                    prop_assert!(p.distance(&t) < 0.01);
                }
            }
            Err(_) => prop_assert!(case.truth.is_none()),
        }
    }
}
