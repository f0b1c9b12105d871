mod common;

use std::f64::consts::PI;

use bdglab_core::field::*;
use bdglab_core::geometry::{Lattice, Vec2};

fn random_field(seed: u64, d: usize) -> Vec<Vec2> {
    let mut rng = common::rng(seed);
    (0..d).map(|_| common::random_point(&mut rng, 1.0)).collect()
}

#[test]
fn transverse_solve_inverts_curl_curl_on_the_projected_current() {
    for lat in [common::square_2pi(), Lattice::triangular(3.0).unwrap()] {
        for nn in [6, 7] {
            let (grid, _) = common::setup(lat, 1, nn);
            let j = random_field(1, grid.dim());
            let e = transverse_solve(&grid, &j);
            assert!(ampere_residual(&grid, &e, &j) < 1e-12);
        }
    }
}

#[test]
fn projection_is_idempotent_divergence_free_and_mean_zero() {
    let (grid, _) = common::setup(Lattice::triangular(3.0).unwrap(), 1, 8);
    let j = random_field(2, grid.dim());
    let p = project(&grid, &j);
    let pp = project(&grid, &p);
    let diff = p.iter().zip(&pp).map(|(a, b)| (*a - *b).norm()).fold(0.0, f64::max);
    assert!(diff < 1e-13);
    let (div, mean) = divergence_and_mean(&grid, &p);
    assert!(div < 1e-12 && mean < 1e-14);
    let (div_raw, _) = divergence_and_mean(&grid, &j);
    assert!(div_raw > 1e-3);
}

#[test]
fn field_energy_of_a_shear_wave() {
    let (grid, _) = common::setup(common::square_2pi(), 1, 8);
    let side = (2.0 * PI).sqrt();
    let amp = 0.3;
    let k = 2.0 * PI / side;
    let e = VectorField::from_values(
        (0..grid.dim()).map(|i| Vec2::new(0.0, amp * (k * grid.point_of(i).x).sin())).collect(),
    );
    let exact = 0.5 * amp * amp * k * k * side * side / 2.0;
    assert!((field_energy(&grid, &e) - exact).abs() < 1e-12);
    assert_eq!(field_energy(&grid, &VectorField::zeros(&grid)), 0.0);
}

#[test]
fn periodic_perturbations_keep_the_flux_quantized() {
    let (grid, flux) = common::setup(Lattice::triangular(2.0).unwrap(), 3, 7);
    let e = VectorField::from_values(random_field(4, grid.dim()));
    assert!((flux_quanta(&grid, flux.b(), &e) - 3.0).abs() < 1e-10);
    assert!((flux_quanta(&grid, flux.b(), &VectorField::zeros(&grid)) - 3.0).abs() < 1e-10);
}

#[test]
fn curl_curl_annihilates_gradients() {
    let (grid, _) = common::setup(common::square_2pi(), 1, 8);
    let side = (2.0 * PI).sqrt();
    let k = 2.0 * PI / side;
    let grad: Vec<Vec2> = (0..grid.dim())
        .map(|i| {
            let x = grid.point_of(i);
            Vec2::new(k * (k * x.x).cos(), 0.0)
        })
        .collect();
    let cc = curl_curl(&grid, &VectorField::from_values(grad));
    assert!(cc.iter().all(|v| v.norm() < 1e-12));
}
