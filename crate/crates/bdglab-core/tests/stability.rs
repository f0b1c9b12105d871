mod common;

use std::sync::Arc;

use bdglab_core::geometry::Lattice;
use bdglab_core::normal::normal_state;
use bdglab_core::potential::PotentialSpec;
use bdglab_core::space::{diagonalize, magnetic_translation};
use bdglab_core::stability::*;
use bdglab_core::state::{Interaction, Model, ModelSpec, Thermo};
use bdglab_core::{c64, CMat, Error};
use proptest::prelude::*;
use rand::Rng;

fn gaussian(grid_n: usize, n: i64, depth: f64) -> Model {
    common::model(
        common::square_2pi(),
        n,
        grid_n,
        PotentialSpec::Gaussian { depth, width: 0.8 },
        Interaction { direct: false, exchange: false },
    )
}

fn tanh_form(s: f64, t: f64) -> f64 {
    (s + t) / (s.tanh() + t.tanh())
}

#[test]
fn scalar_f_has_minimum_one_at_the_origin() {
    let mut min = f64::INFINITY;
    for i in -200..=200 {
        for j in -200..=200 {
            min = min.min(scalar_f(i as f64 * 0.1, j as f64 * 0.1));
        }
    }
    assert!(min >= 1.0 - 1e-12);
    assert!((scalar_f(0.0, 0.0) - 1.0).abs() < 1e-15);
}

#[test]
fn scalar_f_matches_the_tanh_form_away_from_cancellation() {
    for (s, t) in [(0.3, 0.7), (-1.2, 2.5), (4.0, -0.5), (0.01, 0.02), (10.0, 3.0)] {
        let a = scalar_f(s, t);
        assert!((a - tanh_form(s, t)).abs() < 1e-12 * a, "{s} {t}");
        assert!((a - scalar_f(t, s)).abs() < 1e-14 * a);
    }
    // on the cancellation line the value is cosh² s
    for s in [0.5f64, 3.0, 20.0] {
        let c = s.cosh();
        assert!((scalar_f(s, -s) / (c * c) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hessian_lower_bounds_on_random_configurations() {
    let mut rng = common::rng(53);
    for _ in 0..6 {
        let depth = rng.random_range(-2.0..2.0);
        let t = rng.random_range(0.05..2.0);
        let mu = rng.random_range(0.0..4.0);
        let model = gaussian(6, 1, depth);
        let sm = StabilityModel::new(&model, 12).unwrap();
        let (_, op) = sm.operator(&Thermo::new(t, mu).unwrap()).unwrap();
        assert!(op.k_min() >= t - 1e-12);
        let l = op.lowest_eigenvalue().unwrap().value;
        assert!(l >= t - model.v.sup_norm() - 1e-8, "{l} vs T={t}, v={}", model.v.sup_norm());
    }
}

#[test]
fn without_interaction_the_lowest_eigenvalue_is_min_k() {
    let model = common::model(common::square_2pi(), 1, 6, PotentialSpec::Zero, Interaction::default());
    let sm = StabilityModel::new(&model, 10).unwrap();
    let th = Thermo::new(0.3, 1.2).unwrap();
    let (ns, op) = sm.operator(&th).unwrap();
    let l = op.lowest_eigenvalue().unwrap().value;
    assert!((l - op.k_min()).abs() < 1e-12);
    let e = ns.h_values();
    let closest = e.iter().copied().fold(f64::INFINITY, |m, x| if x.abs() < m.abs() { x } else { m });
    assert!((l - k_entry(0.3, closest, closest)).abs() < 1e-12);
}

#[test]
fn untruncated_quadratic_form_matches_the_grid_formula() {
    let mut rng = common::rng(59);
    let model = gaussian(4, 1, 1.0);
    let d = model.dim();
    let sm = StabilityModel::new(&model, d).unwrap();
    let (ns, op) = sm.operator(&Thermo::new(0.7, 1.0).unwrap()).unwrap();
    let basis = sm.basis(&ns).unwrap();
    for _ in 0..5 {
        let a = common::random_symmetric(&mut rng, d, 1.0);
        let direct = full_quadratic_form(&model, &ns, &basis.lift(&a));
        let q = op.quadratic_form(&a);
        assert!((direct - q).abs() < 1e-10 * direct.abs().max(1.0), "{direct} vs {q}");
    }
}

#[test]
fn dense_operator_is_hermitian_and_agrees_with_the_quadratic_form() {
    let mut rng = common::rng(61);
    let model = gaussian(6, 1, 1.5);
    let sm = StabilityModel::new(&model, 8).unwrap();
    let (_, op) = sm.operator(&Thermo::new(0.4, 1.0).unwrap()).unwrap();
    let l = op.dense();
    assert!(common::max_abs_diff(&l, &l.adjoint().to_owned()) < 1e-12);
    let a = common::random_symmetric(&mut rng, 8, 1.0);
    let c = pair_coefficients(&a, &op.pair.pairs);
    let n = c.len();
    let mut q = 0.0;
    for p in 0..n {
        for r in 0..n {
            q += (c[p].conj() * l[(p, r)] * c[r]).re;
        }
    }
    assert!((q - op.quadratic_form(&a)).abs() < 1e-10);
    let back = kernel_from_coefficients(8, &op.pair.pairs, &c);
    assert!(common::max_abs_diff(&a, &back) < 1e-14);
}

#[test]
fn lift_and_project_round_trip() {
    let mut rng = common::rng(67);
    let model = gaussian(5, 1, 1.0);
    let ns = normal_state(&model, &Thermo::new(0.5, 1.0).unwrap()).unwrap();
    let basis = HSBasis::from_normal(&ns, 7).unwrap();
    let a = common::random_symmetric(&mut rng, 7, 1.0);
    assert!(common::max_abs_diff(&basis.project(&basis.lift(&a)), &a) < 1e-12);
    assert!(HSBasis::from_normal(&ns, 0).is_err());
    assert!(HSBasis::from_normal(&ns, 26).is_err());
}

#[test]
fn stability_operator_commutes_with_magnetic_translations() {
    let model = gaussian(8, 2, 1.0);
    // two full Landau clusters of multiplicity two
    let m = 4;
    let sm = StabilityModel::new(&model, m).unwrap();
    let (ns, op) = sm.operator(&Thermo::new(0.3, 2.0).unwrap()).unwrap();
    let basis = sm.basis(&ns).unwrap();
    let l = op.dense();
    for s in [0.5 * model.grid.lattice().omega1(), 0.5 * model.grid.lattice().omega2()] {
        let u = magnetic_translation(&model.grid, &model.flux, s).unwrap();
        let small = basis.vectors.adjoint() * &u * &basis.vectors;
        let eye = CMat::identity(m, m);
        assert!(common::max_abs_diff(&(&small * small.adjoint()), &eye) < 1e-10);
        let p = op.pair_action(&small);
        assert!(common::max_abs_diff(&(&p * &l), &(&l * &p)) < 1e-9);
    }
}

#[test]
fn birman_schwinger_reaches_one_at_the_binding_energy() {
    let spec = ModelSpec {
        lattice: Lattice::square(1.0).unwrap(),
        n: 1,
        grid_n: 12,
        potential: PotentialSpec::Gaussian { depth: 1.0, width: 1.0 },
        potential_integral: None,
        interaction: Interaction { direct: false, exchange: false },
    };
    let model = spec.at_field(0.2).unwrap();
    let sm = StabilityModel::new(&model, 24).unwrap();
    let (_, op) = sm.operator(&Thermo::new(0.01, 0.2).unwrap()).unwrap();
    let low = op.lowest_eigenvalue().unwrap();
    assert!(low.value < 0.0);
    let es: Vec<f64> = (0..10).map(|i| -low.value * 0.1 * (1 + 2 * i) as f64).collect();
    let r = birman_schwinger_check(&op, &model.v, &es).unwrap();
    assert!((r.lambda_max_at_e_star - 1.0).abs() < 1e-6);
    assert!(r.monotone);
    assert!(r.large_e < 1.0);
}

#[test]
fn birman_schwinger_rejects_repulsive_potentials() {
    let model = gaussian(5, 1, -1.0);
    let sm = StabilityModel::new(&model, 6).unwrap();
    let (ns, op) = sm.operator(&Thermo::new(0.3, 1.0).unwrap()).unwrap();
    assert!(matches!(BirmanSchwinger::new(&op, &model.v), Err(Error::Hypothesis(_))));
    assert!(matches!(bs_test_quantity(&ns, &model.v), Err(Error::Hypothesis(_))));
}

#[test]
fn finite_difference_error_shrinks_quadratically() {
    let mut rng = common::rng(71);
    let model = gaussian(6, 1, 1.0);
    let th = Thermo::new(0.5, 1.0).unwrap();
    let ns = normal_state(&model, &th).unwrap();
    let d = model.dim();
    for _ in 0..3 {
        let x = common::random_symmetric(&mut rng, d, 1.0);
        let a = al_cond_kernel(&ns, &x);
        let scale = 1.0 / a.norm_l2();
        let a = CMat::from_fn(d, d, |i, j| a[(i, j)] * scale);
        let r = hessian_fd_check(&model, &ns, &a, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        for ratio in r.ratios() {
            assert!((ratio - 0.25).abs() < 0.1, "{:?}", r.ratios());
        }
    }
}

#[test]
fn oversized_perturbations_are_rejected() {
    let model = gaussian(5, 1, 1.0);
    let th = Thermo::new(0.5, 1.0).unwrap();
    let ns = normal_state(&model, &th).unwrap();
    let d = model.dim();
    let a = CMat::from_fn(d, d, |i, j| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
    assert!(matches!(hessian_fd_check(&model, &ns, &a, &[10.0]), Err(Error::Admissibility(_))));
}

#[test]
fn bisection_locates_a_synthetic_critical_temperature() {
    let r = critical_temperature_with(|t| Ok(t - 0.3), 0.1, 1.0, 1e-6).unwrap();
    match r.verdict {
        TcVerdict::Critical(tc) => assert!((tc - 0.3).abs() < 1e-6),
        v => panic!("{v:?}"),
    }
    assert!(r.lo.1 < 0.0 && r.hi.1 >= 0.0);
    let stable = critical_temperature_with(|t| Ok(t + 1.0), 0.1, 1.0, 1e-6).unwrap();
    assert_eq!(stable.verdict, TcVerdict::StableEverywhere);
    let unstable = critical_temperature_with(|t| Ok(t - 5.0), 0.1, 1.0, 1e-6).unwrap();
    assert_eq!(unstable.verdict, TcVerdict::UnstableEverywhere);
    assert!(critical_temperature_with(Ok, 1.0, 0.5, 1e-6).is_err());
}

#[test]
fn one_cell_phase_diagram_reproduces_the_direct_evaluation() {
    let spec = ModelSpec {
        lattice: Lattice::square(1.0).unwrap(),
        n: 1,
        grid_n: 6,
        potential: PotentialSpec::Gaussian { depth: 1.0, width: 0.8 },
        potential_integral: None,
        interaction: Interaction { direct: false, exchange: false },
    };
    let rows = phase_diagram(&spec, &[0.5], &[0.2], 0.5, 10);
    assert_eq!(rows.len(), 1);
    let sm = StabilityModel::new(&spec.at_field(0.5).unwrap(), 10).unwrap();
    let l = sm.lambda_min(&Thermo::new(0.2, 0.5).unwrap()).unwrap();
    assert_eq!(rows[0].lambda_min, l);
    assert_eq!(rows[0].verdict, if l < 0.0 { "unstable" } else { "stable" });
    let bad = phase_diagram(&spec, &[0.5], &[-1.0], 0.5, 10);
    assert_eq!(bad[0].verdict, "error");
}

#[test]
fn pair_matrix_is_hermitian() {
    let model = gaussian(5, 1, 1.0);
    let ns = normal_state(&model, &Thermo::new(0.5, 1.0).unwrap()).unwrap();
    let basis = HSBasis::from_normal(&ns, 6).unwrap();
    let p = pair_matrix(&basis.vectors, &model.v);
    assert_eq!(p.pairs.len(), 21);
    assert!(common::max_abs_diff(&p.matrix, &p.matrix.adjoint().to_owned()) < 1e-12);
    let op = StabilityOperator::new(0.5, basis.values.clone(), Arc::new(p), model.v.sup_norm()).unwrap();
    let spec = diagonalize(&op.dense()).unwrap();
    assert!((spec.values[0] - op.lowest_eigenvalue().unwrap().value).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn k_is_bounded_below_by_twice_the_temperature(t in 1e-3f64..5.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let k = k_entry(t, a, b);
        prop_assert!(k >= 2.0 * t * (1.0 - 1e-12));
        prop_assert!(k >= 0.5 * (a + b).abs() * (1.0 - 1e-12));
    }
}
