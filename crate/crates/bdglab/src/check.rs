//! The `check` command: invariant suite on the configured model plus
//! algebraic identities on seeded random states.

use std::path::Path;

use bdglab_core::geometry::{Cocycle, Vec2};
use bdglab_core::normal::verify_uniqueness_amp;
use bdglab_core::space::{cluster_ids, cluster_summary, diagonalize, fermi, func_calc, hermitize, magnetic_laplacian};
use bdglab_core::stability::StabilityModel;
use bdglab_core::state::{
    admissibility, block, effective_hamiltonian, entropy, entropy_derivative, entropy_s_form, gibbs_map,
    particle_hole_defect, split_big_gamma, BdGState, Gauge,
};
use bdglab_core::{c64, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{newton_bisection_gap, CLUSTER_THRESHOLD};
use crate::config::RunConfig;
use crate::emit::write_json;
use crate::error::{CliError, Result};

/// One invariant: measured value against its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    /// Identifier.
    pub name: &'static str,
    /// Measured quantity; the check passes when it is `<= tolerance`.
    pub value: f64,
    /// Bound.
    pub tolerance: f64,
    /// Outcome.
    pub pass: bool,
}

/// The whole suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    /// All checks passed.
    pub passed: bool,
    /// Individual results in a fixed order.
    pub checks: Vec<CheckItem>,
}

fn item(name: &'static str, value: f64, tolerance: f64) -> CheckItem {
    CheckItem { name, value, tolerance, pass: value <= tolerance }
}

fn random_hermitian(rng: &mut impl Rng, d: usize, scale: f64) -> CMat {
    let mut a = CMat::from_fn(d, d, |_, _| c64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)));
    hermitize(&mut a);
    a
}

fn random_symmetric(rng: &mut impl Rng, d: usize, scale: f64) -> CMat {
    let mut a = CMat::from_fn(d, d, |_, _| c64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)));
    for i in 0..d {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

fn bdg(h: &CMat, delta: &CMat, t: f64) -> Result<BdGState> {
    let d = h.nrows();
    let hbar = CMat::from_fn(d, d, |i, j| -h[(i, j)].conj());
    Ok(split_big_gamma(&func_calc(&block(h, delta, &hbar), |x| fermi(t, x))?))
}

/// Gibbs state of a random particle-hole symmetric `Λ`.
fn random_admissible(rng: &mut impl Rng, d: usize) -> Result<BdGState> {
    let h = random_hermitian(rng, d, 2.0);
    let delta = random_symmetric(rng, d, 1.0);
    let t = rng.random_range(0.05..2.0);
    bdg(&h, &delta, t)
}

/// Relative error of `d/dε Tr g(Γ(ε))` against `Tr(g′(Γ)Γ′)` along a
/// random smooth path of Gibbs states.
fn entropy_derivative_error(rng: &mut impl Rng, d: usize) -> Result<f64> {
    let h0 = random_hermitian(rng, d, 1.0);
    let dl0 = random_symmetric(rng, d, 0.5);
    let x = random_hermitian(rng, d, 1.0);
    let dx = random_symmetric(rng, d, 1.0);
    let path = |eps: f64| {
        let h = CMat::from_fn(d, d, |i, j| h0[(i, j)] + x[(i, j)] * eps);
        let dl = CMat::from_fn(d, d, |i, j| dl0[(i, j)] + dx[(i, j)] * eps);
        bdg(&h, &dl, 0.7)
    };
    let step = 1e-4;
    let (p, m) = (path(step)?, path(-step)?);
    let tangent = BdGState {
        gamma: CMat::from_fn(d, d, |i, j| (p.gamma[(i, j)] - m.gamma[(i, j)]) * (0.5 / step)),
        alpha: CMat::from_fn(d, d, |i, j| (p.alpha[(i, j)] - m.alpha[(i, j)]) * (0.5 / step)),
    };
    let fd = (entropy(&p)? - entropy(&m)?) / (2.0 * step);
    let exact = entropy_derivative(&path(0.0)?, &tangent)?;
    Ok((fd - exact).abs() / exact.abs().max(1e-3))
}

/// Runs the suite and writes `check.json`. Returns a numerical failure when
/// any check fails, after writing the report.
pub fn check(cfg: &RunConfig, out: &Path) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.check.seed);
    let model = cfg.model_spec()?.build()?;
    let th = cfg.thermo()?;
    let lattice = *model.grid.lattice();
    let mut checks = Vec::new();

    let cocycle = Cocycle::new(lattice, model.flux);
    let basis = [lattice.omega1(), lattice.omega2()];
    let scale = lattice.omega1().norm().max(lattice.omega2().norm());
    let (mut identity, mut chern): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let x = Vec2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale));
        for s in basis {
            for t in basis {
                identity = identity.max(cocycle.identity_residual(s, t, x)?);
            }
        }
        let c = cocycle.chern_number(x).map_err(CliError::from)?;
        chern = chern.max((c - model.flux.n()).abs() as f64);
    }
    checks.push(item("cocycle_identity", identity, 1e-9));
    checks.push(item("chern_number_error", chern, 0.0));

    let values = diagonalize(&magnetic_laplacian(&model.grid, &model.flux))?.values;
    let clusters = cluster_summary(&values, &cluster_ids(&values, CLUSTER_THRESHOLD * model.flux.b()));
    let lowest = clusters.first().map_or(0, |c| c.1) as i64;
    checks.push(item("lowest_cluster_multiplicity_error", (lowest - model.flux.n()).abs() as f64, 0.0));

    let v = &model.v;
    checks.push(item("potential_evenness", v.evenness_defect(), 1e-12 * v.sup_norm().max(1.0)));

    let sm = StabilityModel::new(&model, cfg.rank())?;
    let (ns, op) = sm.operator(&th)?;
    checks.push(item("normal_fixed_point_residual", ns.solution.residual, 1e-12));
    if let Some(gap) = newton_bisection_gap(&ns)? {
        checks.push(item("normal_newton_bisection_gap", gap, 1e-10));
    }
    let rep = verify_uniqueness_amp(&model, &ns);
    checks.push(item("normal_density_not_positive", if rep.coercive { 0.0 } else { 1.0 }, 0.0));
    checks.push(item("hessian_k_lower_bound", th.t - op.k_min(), 1e-12));
    let low = op.lowest_eigenvalue()?;
    checks.push(item("hessian_lambda_lower_bound", th.t - v.sup_norm() - low.value, 1e-8));

    let gauge = Gauge::symmetric(&model);
    let s = random_admissible(&mut rng, model.dim())?;
    checks.push(item(
        "particle_hole_defect",
        particle_hole_defect(&effective_hamiltonian(&model, &s, &gauge, &th)),
        1e-10,
    ));
    let (next, _) = gibbs_map(&model, &s, &gauge, &th)?;
    let a = admissibility(&next)?;
    checks.push(item("gibbs_map_admissibility", (-a.big_min).max(a.big_max - 1.0).max(0.0), 1e-10));

    let (mut forms, mut pair, mut eig): (f64, f64, f64) = (0.0, f64::NEG_INFINITY, 0.0);
    for trial in 0..cfg.check.trials {
        let s = random_admissible(&mut rng, 2 + trial % 4)?;
        forms = forms.max((entropy(&s)? - entropy_s_form(&s)?).abs());
        let a = admissibility(&s)?;
        pair = pair.max(a.pair_bound);
        eig = eig.max((-a.big_min).max(a.big_max - 1.0).max(0.0));
    }
    checks.push(item("entropy_forms", forms, 1e-8));
    checks.push(item("pair_bound", pair, 1e-9));
    checks.push(item("random_state_admissibility", eig, 1e-10));

    let mut deriv: f64 = 0.0;
    for _ in 0..5 {
        deriv = deriv.max(entropy_derivative_error(&mut rng, 5)?);
    }
    checks.push(item("entropy_derivative", deriv, 1e-5));

    let report = CheckReport { passed: checks.iter().all(|c| c.pass), checks };
    write_json(&out.join("check.json"), &report)?;
    if !report.passed {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        return Err(CliError::Numerical(format!("numerical failure: checks failed: {}", failed.join(", "))));
    }
    Ok(report)
}
