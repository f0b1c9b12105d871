mod common;

use std::f64::consts::PI;

use bdglab_core::field::VectorField;
use bdglab_core::geometry::{Lattice, Vec2};
use bdglab_core::space::*;
use bdglab_core::{c64, CMat, Error};
use proptest::prelude::*;
use rand::Rng;

/// Hofstadter Hamiltonian on an `N×N` square torus in the Landau gauge,
/// built independently of the symmetric gauge and cocycle machinery.
fn landau_gauge_laplacian(side: f64, nn: usize, n: i64) -> CMat {
    let h = side / nn as f64;
    let w = 1.0 / (h * h);
    let phi = 2.0 * PI * n as f64 / (nn * nn) as f64;
    let d = nn * nn;
    let idx = |j: usize, k: usize| (j % nn) * nn + (k % nn);
    let mut m = CMat::zeros(d, d);
    for j in 0..nn {
        for k in 0..nn {
            let a = idx(j, k);
            m[(a, a)] += c64::new(4.0 * w, 0.0);
            let ux = if j == nn - 1 { cis(-2.0 * PI * n as f64 * k as f64 / nn as f64) } else { c64::new(1.0, 0.0) };
            let uy = cis(phi * j as f64);
            let (bx, by) = (idx(j + 1, k), idx(j, k + 1));
            m[(a, bx)] -= ux * w;
            m[(bx, a)] -= ux.conj() * w;
            m[(a, by)] -= uy * w;
            m[(by, a)] -= uy.conj() * w;
        }
    }
    m
}

#[test]
fn spectrum_agrees_with_landau_gauge_construction() {
    for (n, nn) in [(1, 8), (2, 8), (1, 6), (3, 12)] {
        let (grid, flux) = common::setup(common::square_2pi(), n, nn);
        let ours = diagonalize(&magnetic_laplacian(&grid, &flux)).unwrap().values;
        let side = (2.0 * PI).sqrt();
        let other = diagonalize(&landau_gauge_laplacian(side, nn, n)).unwrap().values;
        for (a, b) in ours.iter().zip(&other) {
            assert!((a - b).abs() < 1e-10, "n={n} N={nn}: {a} vs {b}");
        }
    }
}

#[test]
fn frozen_lowest_eigenvalues_unit_flux_n8() {
    // Landau-gauge reference values, N = 8, |Ω| = 2π, n = 1.
    let reference = [9.877770946401221e-1, 2.939082396241147e0, 4.842179431806048e0, 6.697639063988403e0];
    let (grid, flux) = common::setup(common::square_2pi(), 1, 8);
    let values = diagonalize(&magnetic_laplacian(&grid, &flux)).unwrap().values;
    for (a, b) in values.iter().zip(reference) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn laplacian_is_hermitian_and_nonnegative() {
    for lat in [common::square_2pi(), Lattice::triangular(2.5).unwrap()] {
        let (grid, flux) = common::setup(lat, 2, 10);
        let h = magnetic_laplacian(&grid, &flux);
        assert!(hermitian_defect(&h) < 1e-13);
        assert!(diagonalize(&h).unwrap().values[0] > 0.0);
    }
}

#[test]
fn lowest_landau_clusters_on_a_coarse_grid() {
    for lat in [common::square_2pi(), Lattice::triangular(1.0).unwrap().scaled_for_field(1, 1.0).unwrap()] {
        let (grid, flux) = common::setup(lat, 1, 16);
        let spec = diagonalize(&magnetic_laplacian(&grid, &flux)).unwrap();
        let ids = cluster_ids(&spec.values, 0.25 * flux.b());
        let clusters = cluster_summary(&spec.values, &ids);
        for (m, &(mean, size)) in clusters.iter().take(2).enumerate() {
            let exact = flux.b() * (2 * m + 1) as f64;
            assert!((mean - exact).abs() < 0.05 * exact);
            assert_eq!(size, 1);
        }
    }
}

#[test]
fn stencil_is_consistent_for_skew_cells() {
    let grid = Grid::new(Lattice::triangular(1.0).unwrap(), 8).unwrap();
    let mut m = [0.0; 3];
    for l in grid.links() {
        let d = grid.point(l.dj, l.dk);
        m[0] += l.weight * d.x * d.x;
        m[1] += l.weight * d.x * d.y;
        m[2] += l.weight * d.y * d.y;
    }
    assert!((m[0] - 1.0).abs() < 1e-12 && m[1].abs() < 1e-12 && (m[2] - 1.0).abs() < 1e-12);
}

#[test]
fn overly_skewed_basis_is_rejected() {
    let lat = Lattice::new(Vec2::new(1.0, 0.0), Vec2::new(3.0, 0.2)).unwrap();
    assert!(Grid::new(lat, 8).is_err());
}

#[test]
fn half_cell_translation_commutes_with_laplacian_at_two_quanta() {
    for lat in [common::square_2pi(), Lattice::triangular(2.0).unwrap()] {
        let (grid, flux) = common::setup(lat, 2, 8);
        let h = magnetic_laplacian(&grid, &flux);
        for s in [0.5 * lat.omega1(), 0.5 * lat.omega2()] {
            let u = magnetic_translation(&grid, &flux, s).unwrap();
            let eye = CMat::identity(grid.dim(), grid.dim());
            assert!(common::max_abs_diff(&(&u * u.adjoint()), &eye) < 1e-12);
            assert!(common::max_abs_diff(&(&u * &h), &(&h * &u)) < 1e-10);
        }
    }
}

#[test]
fn lattice_translation_is_the_identity() {
    let (grid, flux) = common::setup(Lattice::triangular(2.0).unwrap(), 3, 6);
    let u = magnetic_translation(&grid, &flux, grid.lattice().omega1()).unwrap();
    assert!(common::max_abs_diff(&u, &CMat::identity(grid.dim(), grid.dim())) < 1e-12);
}

#[test]
fn incommensurate_translation_is_rejected() {
    let (grid, flux) = common::setup(common::square_2pi(), 1, 8);
    let s = 0.1 * grid.lattice().omega1();
    assert!(matches!(magnetic_translation(&grid, &flux, s), Err(Error::GridMismatch { .. })));
}

#[test]
fn reflection_commutes_with_laplacian() {
    let (grid, flux) = common::setup(Lattice::triangular(2.0).unwrap(), 2, 8);
    let h = magnetic_laplacian(&grid, &flux);
    let r = reflection(&grid, &flux);
    assert!(common::max_abs_diff(&(&r * &h), &(&h * &r)) < 1e-10);
}

#[test]
fn current_is_minus_the_field_derivative_of_kinetic_energy() {
    let mut rng = common::rng(3);
    let (grid, flux) = common::setup(Lattice::triangular(2.2).unwrap(), 1, 6);
    let d = grid.dim();
    let gamma = common::random_hermitian(&mut rng, d, 1.0);
    let e = VectorField::from_values((0..d).map(|_| common::random_point(&mut rng, 0.3)).collect());
    let kinetic = |e: &VectorField| {
        let h = magnetic_laplacian_with(&grid, &flux, Some(e));
        trace(&(&h * &gamma)).re
    };
    let j = current(&gamma, &grid, &flux, Some(&e));
    let step = 1e-5;
    for site in [0, 7, 20] {
        for dir in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)] {
            let shift = |sign: f64| {
                let mut v = e.values().to_vec();
                v[site] = v[site] + (sign * step) * dir;
                VectorField::from_values(v)
            };
            let fd = (kinetic(&shift(1.0)) - kinetic(&shift(-1.0))) / (2.0 * step);
            let exact = -grid.cell_weight() * j[site].dot(dir);
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "{fd} vs {exact}");
        }
    }
}

#[test]
fn functional_calculus_reproduces_the_matrix() {
    let mut rng = common::rng(5);
    let a = common::random_hermitian(&mut rng, 12, 1.0);
    let b = func_calc(&a, |x| x).unwrap();
    assert!(common::max_abs_diff(&a, &b) < 1e-13);
    let sq = func_calc(&a, |x| x * x).unwrap();
    assert!(common::max_abs_diff(&sq, &(&a * &a)) < 1e-12);
}

#[test]
fn non_finite_function_values_are_reported() {
    let a = CMat::from_fn(2, 2, |i, j| c64::new(if i == j { i as f64 } else { 0.0 }, 0.0));
    assert!(matches!(func_calc(&a, |x| 1.0 / x), Err(Error::Evaluation { .. })));
}

#[test]
fn zero_temperature_fermi_is_a_step() {
    assert_eq!(fermi(0.0, -1.0), 1.0);
    assert_eq!(fermi(0.0, 0.0), 0.5);
    assert_eq!(fermi(0.0, 2.0), 0.0);
}

#[test]
fn clusters_group_nearby_values() {
    let ids = cluster_ids(&[1.0, 1.01, 3.0, 3.02, 3.01, 5.0], 0.1);
    assert_eq!(ids, vec![0, 0, 1, 1, 1, 2]);
    let s = cluster_summary(&[1.0, 1.01, 3.0, 3.02, 3.01, 5.0], &ids);
    assert_eq!(s.iter().map(|c| c.1).collect::<Vec<_>>(), vec![2, 3, 1]);
}

#[test]
fn density_and_trace_agree() {
    let mut rng = common::rng(9);
    let (grid, _) = common::setup(common::square_2pi(), 1, 5);
    let a = common::random_hermitian(&mut rng, grid.dim(), 1.0);
    let rho = density(&a, &grid);
    let integral: f64 = rho.iter().sum::<f64>() * grid.cell_weight();
    assert!((integral - trace(&a).re).abs() < 1e-12);
    assert!(rng.random_range(0.0..1.0) < 1.0);
}

proptest! {
    #[test]
    fn fermi_is_particle_hole_symmetric(t in 1e-3f64..10.0, x in -50.0f64..50.0) {
        prop_assert!((fermi(t, x) + fermi(t, -x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fermi_stays_in_unit_interval(t in 1e-4f64..10.0, x in -1e4f64..1e4) {
        let f = fermi(t, x);
        prop_assert!((0.0..=1.0).contains(&f));
    }
}
