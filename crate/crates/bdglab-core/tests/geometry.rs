mod common;

use std::f64::consts::PI;

use bdglab_core::geometry::*;
use bdglab_core::Error;
use proptest::prelude::*;

fn lattices() -> Vec<Lattice> {
    vec![
        common::square_2pi(),
        Lattice::triangular(2.0).unwrap(),
        Lattice::new(Vec2::new(1.3, 0.2), Vec2::new(-0.4, 1.7)).unwrap(),
        Lattice::new(Vec2::new(0.0, 2.0), Vec2::new(1.5, 0.0)).unwrap(),
    ]
}

#[test]
fn degenerate_basis_is_rejected() {
    let err = Lattice::new(Vec2::new(1.0, 2.0), Vec2::new(2.0, 4.0)).unwrap_err();
    assert!(matches!(err, Error::InvalidLattice { .. }));
}

#[test]
fn unit_flux_on_area_two_pi_gives_unit_field() {
    let f = make_flux_sector(&common::square_2pi(), 1).unwrap();
    assert!((f.b() - 1.0).abs() < 1e-14);
    let f3 = make_flux_sector(&common::square_2pi(), 3).unwrap();
    assert!((f3.b() - 3.0).abs() < 1e-14);
}

#[test]
fn rescaling_hits_the_requested_field() {
    let l = Lattice::triangular(1.0).unwrap().scaled_for_field(2, 0.37).unwrap();
    let f = make_flux_sector(&l, 2).unwrap();
    assert!((f.b() - 0.37).abs() < 1e-13);
}

#[test]
fn cocycle_identity_over_basis_pairs_and_random_points() {
    let mut rng = common::rng(7);
    for lat in lattices() {
        for n in 1..=3 {
            let c = Cocycle::new(lat, make_flux_sector(&lat, n).unwrap());
            let basis = [lat.omega1(), lat.omega2(), -lat.omega1(), -lat.omega2(), lat.omega1() + lat.omega2()];
            for _ in 0..100 {
                let x = common::random_point(&mut rng, 3.0);
                for s in basis {
                    for t in basis {
                        assert!(c.identity_residual(s, t, x).unwrap() < 1e-9);
                    }
                }
            }
        }
    }
}

#[test]
fn chern_number_equals_flux_and_ignores_base_point() {
    let mut rng = common::rng(11);
    for lat in lattices() {
        for n in [-2, -1, 1, 2, 5] {
            let c = Cocycle::new(lat, make_flux_sector(&lat, n).unwrap());
            for _ in 0..20 {
                let x = common::random_point(&mut rng, 4.0);
                assert_eq!(c.chern_number(x).unwrap(), n);
            }
        }
    }
}

#[test]
fn chern_number_independent_of_basis_orientation() {
    let lat = Lattice::new(Vec2::new(0.0, 2.5), Vec2::new(2.5, 0.0)).unwrap();
    assert!(lat.orientation() < 0.0);
    let c = Cocycle::new(lat, make_flux_sector(&lat, 3).unwrap());
    assert_eq!(c.chern_number(Vec2::new(0.3, -0.2)).unwrap(), 3);
}

#[test]
fn boundary_circulation_counts_flux_quanta() {
    for lat in lattices() {
        let f = make_flux_sector(&lat, 2).unwrap();
        assert!((boundary_flux(&lat, &f, 8) - 2.0).abs() < 1e-12);
    }
}

#[test]
fn off_lattice_shift_is_an_error() {
    let lat = common::square_2pi();
    let c = Cocycle::new(lat, make_flux_sector(&lat, 1).unwrap());
    let half = 0.5 * lat.omega1();
    assert!(matches!(c.eval(half, Vec2::default()), Err(Error::OffLattice { .. })));
}

#[test]
fn gauge_line_integral_matches_quadrature() {
    let f = make_flux_sector(&common::square_2pi(), 1).unwrap();
    let (x, y) = (Vec2::new(0.2, -1.0), Vec2::new(1.7, 0.4));
    let m = 1000;
    let d = (1.0 / m as f64) * (y - x);
    let quad: f64 = (0..m).map(|i| symmetric_gauge_potential(&f, x + (i as f64 + 0.5) * d).dot(d)).sum();
    assert!((gauge_line_integral(f.b(), x, y) - quad).abs() < 1e-12);
}

#[test]
fn distance_to_lattice_of_phases() {
    assert!(distance_to_2pi_z(4.0 * PI + 1e-3) - 1e-3 < 1e-12);
    assert!((distance_to_2pi_z(PI) - PI).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cocycle_identity_holds_for_lattice_vectors(
        a in 0.5f64..3.0, skew in -0.4f64..0.4, c2 in 0.5f64..3.0, n in 1i64..4,
        k1 in -3i64..4, l1 in -3i64..4, k2 in -3i64..4, l2 in -3i64..4,
        x1 in -5.0f64..5.0, x2 in -5.0f64..5.0,
    ) {
        let lat = Lattice::new(Vec2::new(a, 0.0), Vec2::new(skew, c2)).unwrap();
        let c = Cocycle::new(lat, make_flux_sector(&lat, n).unwrap());
        let s = lat.vector(k1 as f64, l1 as f64);
        let t = lat.vector(k2 as f64, l2 as f64);
        prop_assert!(c.identity_residual(s, t, Vec2::new(x1, x2)).unwrap() < 1e-9);
    }

    #[test]
    fn integer_coefficients_round_trip(k in -20i64..20, l in -20i64..20) {
        let lat = Lattice::triangular(1.3).unwrap();
        prop_assert_eq!(lat.integer_coefficients(lat.vector(k as f64, l as f64)).unwrap(), (k, l));
    }
}
