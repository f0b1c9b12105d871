mod common;

use bdglab_core::geometry::Lattice;
use bdglab_core::normal::{normal_state, NormalState};
use bdglab_core::potential::PotentialSpec;
use bdglab_core::stability::{full_quadratic_form, StabilityModel};
use bdglab_core::state::{BdGState, Gauge, Interaction, Model, ModelSpec, Thermo};
use bdglab_core::vortex::*;
use bdglab_core::Error;

fn spec(potential: PotentialSpec) -> ModelSpec {
    ModelSpec {
        lattice: Lattice::square(1.0).unwrap(),
        n: 1,
        grid_n: 8,
        potential,
        potential_integral: None,
        interaction: Interaction { direct: false, exchange: false },
    }
}

fn attractive() -> Model {
    spec(PotentialSpec::Gaussian { depth: 1.0, width: 1.0 }).at_field(0.2).unwrap()
}

fn seeded(model: &Model, t: f64) -> (NormalState, BdGState) {
    let sm = StabilityModel::new(model, 16).unwrap();
    let th = Thermo::new(t, 0.2).unwrap();
    let (ns, op) = sm.operator(&th).unwrap();
    let low = op.lowest_eigenvalue().unwrap();
    let (seed, _) = unstable_mode_seed(model, &ns, &sm.basis(&ns).unwrap(), &low).unwrap();
    (ns, seed)
}

#[test]
fn unstable_normal_state_relaxes_to_a_paired_vortex_lattice() {
    let model = attractive();
    let (ns, seed) = seeded(&model, 0.05);
    assert!(admissibility_drift(&seed).unwrap() < 1e-12);
    let cfg = ScfConfig::default();
    let res = scf_solve(&model, &ns.thermo, &cfg, seed, Gauge::symmetric(&model), |_| {}).unwrap();
    assert_eq!(res.verdict, Verdict::Converged);
    assert!(order_parameter(&res.state) > 10.0 * cfg.tol_gamma);
    let cmp = energy_comparison(&model, &res, &ns).unwrap();
    assert!(cmp.delta < 0.0, "{cmp:?}");
    assert!(admissibility_drift(&res.state).unwrap() < 1e-10);
    let eq = equivariance_check(&model, &res.state, &res.gauge).unwrap();
    assert!(eq.flux_error < 1e-9 && eq.translation < 1e-9 && eq.field_translation < 1e-12, "{eq:?}");

    let relaxed = scf_solve(&model, &ns.thermo, &cfg, normal_seed(&ns), Gauge::symmetric(&model), |_| {}).unwrap();
    assert_eq!(relaxed.verdict, Verdict::Converged);
    assert_eq!(order_parameter(&relaxed.state), 0.0);
    assert!(res.free_energy < relaxed.free_energy);
}

#[test]
fn stable_normal_state_loses_the_seeded_pairing() {
    let model = attractive();
    let (ns, seed) = seeded(&model, 0.1);
    let res = scf_solve(&model, &ns.thermo, &ScfConfig::default(), seed, Gauge::symmetric(&model), |_| {}).unwrap();
    assert_eq!(res.verdict, Verdict::Converged);
    assert!(order_parameter(&res.state) < 1e-6);
}

#[test]
fn global_phase_of_the_seed_does_not_change_the_solution() {
    let model = attractive();
    let (ns, seed) = seeded(&model, 0.05);
    let cfg = ScfConfig::default();
    let a = scf_solve(&model, &ns.thermo, &cfg, seed.clone(), Gauge::symmetric(&model), |_| {}).unwrap();
    let b = scf_solve(&model, &ns.thermo, &cfg, seed.rephased(1.1), Gauge::symmetric(&model), |_| {}).unwrap();
    assert!((a.free_energy - b.free_energy).abs() < 1e-10);
    assert_eq!(a.trace.len(), b.trace.len());
    for (x, y) in a.trace.iter().zip(&b.trace) {
        assert!((x.free_energy - y.free_energy).abs() < 1e-10);
    }
    assert!((order_parameter(&a.state) - order_parameter(&b.state)).abs() < 1e-8);
    let back = b.state.rephased(-1.1);
    assert!(big_gamma_distance(&a.state, &back) < 1e-6);
}

#[test]
fn restarting_from_a_converged_state_keeps_the_free_energy() {
    let model = attractive();
    let (ns, seed) = seeded(&model, 0.05);
    let cfg = ScfConfig::default();
    let a = scf_solve(&model, &ns.thermo, &cfg, seed, Gauge::symmetric(&model), |_| {}).unwrap();
    let b = scf_solve(&model, &ns.thermo, &cfg, a.state.clone(), a.gauge.clone(), |_| {}).unwrap();
    assert_eq!(b.verdict, Verdict::Converged);
    assert!((a.free_energy - b.free_energy).abs() < 1e-12, "{} vs {}", a.free_energy, b.free_energy);
}

#[test]
fn without_interaction_pairing_never_appears() {
    let model = spec(PotentialSpec::Zero).at_field(0.5).unwrap();
    let th = Thermo::new(0.2, 0.5).unwrap();
    let ns = normal_state(&model, &th).unwrap();
    let mut rows = 0;
    let res = scf_solve(&model, &th, &ScfConfig::default(), normal_seed(&ns), Gauge::symmetric(&model), |_| rows += 1)
        .unwrap();
    assert_eq!(res.verdict, Verdict::Converged);
    assert_eq!(rows, res.trace.len());
    assert_eq!(order_parameter(&res.state), 0.0);
    assert!(res.trace.last().unwrap().residual_gamma < 1e-8);
}

#[test]
fn first_step_follows_the_quadratic_form() {
    let model = attractive();
    let sm = StabilityModel::new(&model, 16).unwrap();
    let th = Thermo::new(0.05, 0.2).unwrap();
    let (ns, op) = sm.operator(&th).unwrap();
    let low = op.lowest_eigenvalue().unwrap();
    assert!(low.value < 0.0);
    let alpha = sm.basis(&ns).unwrap().lift(&low.kernel);
    let q = full_quadratic_form(&model, &ns, &alpha);
    assert!((q - low.value).abs() < 1e-6 * low.value.abs().max(1.0));
    let (seed, _) = pairing_field_seed(&model, &ns, &alpha, &Gauge::symmetric(&model)).unwrap();
    let step = seeded_step_check(&model, &ns, &seed, low.value).unwrap();
    assert!(step.delta_f < 0.0);
    assert!(step.relative_error() < 0.3, "{step:?}");
    let own = full_quadratic_form(&model, &ns, &seed.alpha);
    assert!((step.delta_f - own).abs() < 0.05 * own.abs());
}

#[test]
fn invalid_settings_are_rejected() {
    let model = attractive();
    let th = Thermo::new(0.1, 0.2).unwrap();
    let ns = normal_state(&model, &th).unwrap();
    for cfg in [
        ScfConfig { damping: 0.0, ..Default::default() },
        ScfConfig { damping: 1.5, ..Default::default() },
        ScfConfig { tol_gamma: 0.0, ..Default::default() },
        ScfConfig { stall_window: 0, ..Default::default() },
    ] {
        assert!(matches!(
            scf_solve(&model, &th, &cfg, normal_seed(&ns), Gauge::symmetric(&model), |_| {}),
            Err(Error::Parameter(_))
        ));
    }
    let cold = Thermo::new(0.0, 0.2).unwrap();
    assert!(
        scf_solve(&model, &cold, &ScfConfig::default(), normal_seed(&ns), Gauge::symmetric(&model), |_| {}).is_err()
    );
}

#[test]
fn iteration_cap_reports_a_stall() {
    let model = attractive();
    let (ns, seed) = seeded(&model, 0.05);
    let cfg = ScfConfig { max_iter: 3, ..Default::default() };
    let res = scf_solve(&model, &ns.thermo, &cfg, seed, Gauge::symmetric(&model), |_| {}).unwrap();
    assert_eq!(res.verdict, Verdict::Stalled);
    assert_eq!(res.trace.len(), 3);
    assert_eq!(Verdict::Stalled.as_str(), "stalled");
}
