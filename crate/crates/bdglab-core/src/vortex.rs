//! Damped self-consistent iteration of `Γ = f_T(Λ_{Γa})` coupled to the
//! transverse Ampère equation `curl* curl e = P j(γ, a_b + e)`.

use alloc::vec::Vec;

use crate::field::{self, VectorField};
use crate::normal::NormalState;
use crate::space::{self, diagonalize, fermi, magnetic_translation, reflection, SpectralData};
use crate::stability::{HSBasis, LowestMode};
use crate::state::{
    assemble_big_gamma, effective_hamiltonian, energy, entropy_of_values, free_energy, gibbs_from_spectrum, BdGState,
    Gauge, Model, Thermo,
};
use crate::{CMat, Error, Result};

/// Iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScfConfig {
    /// Mixing weight `θ ∈ (0, 1]`.
    pub damping: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Tolerance on `‖Γ − f_T(Λ_{Γa})‖_F`.
    pub tol_gamma: f64,
    /// Tolerance on the Ampère residual.
    pub tol_a: f64,
    /// Iterations between Ampère updates (0 keeps `a = a_b`).
    pub ampere_every: usize,
    /// Window for the stall test.
    pub stall_window: usize,
}

impl Default for ScfConfig {
    fn default() -> Self {
        Self { damping: 0.3, max_iter: 3000, tol_gamma: 1e-8, tol_a: 1e-8, ampere_every: 5, stall_window: 50 }
    }
}

impl ScfConfig {
    /// Checks ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameter("damping must lie in (0, 1]".into()));
        }
        if !(self.tol_gamma > 0.0 && self.tol_a > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if self.stall_window == 0 {
            return Err(Error::Parameter("stall window must be positive".into()));
        }
        Ok(())
    }
}

/// How an SCF run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Both residuals below tolerance.
    Converged,
    /// Iteration cap reached, or the residual stopped decreasing.
    Stalled,
    /// Non-finite values appeared.
    Diverged,
}

impl Verdict {
    /// Lower-case name.
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Stalled => "stalled",
            Verdict::Diverged => "diverged",
        }
    }
}

/// One line of the iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// Iteration number, starting at 0.
    pub iter: usize,
    /// `‖Γ − f_T(Λ_{Γa})‖_F`.
    pub residual_gamma: f64,
    /// `‖curl* curl e − P j‖_{L²}`.
    pub residual_a: f64,
    /// `F_T` of the Gibbs image `f_T(Λ_{Γa})`.
    pub free_energy: f64,
    /// `‖α‖_HS` of the current iterate.
    pub order_parameter: f64,
}

/// Final state, trace and verdict.
#[derive(Debug, Clone)]
pub struct ScfResult {
    /// Last iterate (the one whose residuals were tested).
    pub state: BdGState,
    /// Vector potential `a_b + e`.
    pub gauge: Gauge,
    /// Per-iteration record.
    pub trace: Vec<TraceRow>,
    /// Outcome.
    pub verdict: Verdict,
    /// `F_T(state, a)`.
    pub free_energy: f64,
}

/// `‖α‖_HS`.
pub fn order_parameter(s: &BdGState) -> f64 {
    s.alpha.norm_l2()
}

/// `‖Γ − Γ′‖_F` of the assembled `2d×2d` matrices.
pub fn big_gamma_distance(a: &BdGState, b: &BdGState) -> f64 {
    let dg = (&a.gamma - &b.gamma).norm_l2();
    let da = (&a.alpha - &b.alpha).norm_l2();
    libm::sqrt(2.0 * (dg * dg + da * da))
}

fn mix(a: &BdGState, b: &BdGState, theta: f64) -> BdGState {
    let comb =
        |x: &CMat, y: &CMat| CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * (1.0 - theta) + y[(i, j)] * theta);
    BdGState { gamma: comb(&a.gamma, &b.gamma), alpha: comb(&a.alpha, &b.alpha) }
}

fn finite(s: &BdGState) -> bool {
    let ok =
        |m: &CMat| (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()));
    ok(&s.gamma) && ok(&s.alpha)
}

/// `F_T` of `f_T(Λ)` using the known spectrum of `Λ`.
fn gibbs_free_energy(model: &Model, image: &BdGState, spec: &SpectralData, gauge: &Gauge, th: &Thermo) -> Result<f64> {
    let occ: Vec<f64> = spec.values.iter().map(|&e| fermi(th.t, e)).collect();
    let s = entropy_of_values(&occ)?;
    Ok(energy(model, image, gauge) - 0.5 * th.t * s - th.mu * image.particle_number())
}

/// `e` solving `curl* curl e = P j(γ, a_b + e_old)`.
pub fn ampere_update(model: &Model, gamma: &CMat, e_old: &VectorField) -> VectorField {
    let j = space::current(gamma, &model.grid, &model.flux, Some(e_old));
    field::transverse_solve(&model.grid, &j)
}

/// Ampère residual of `(γ, a_b + e)`.
pub fn ampere_residual(model: &Model, gamma: &CMat, e: &VectorField) -> f64 {
    let j = space::current(gamma, &model.grid, &model.flux, Some(e));
    field::ampere_residual(&model.grid, e, &j)
}

/// Runs the damped iteration from `seed` with initial field `gauge`.
///
/// `observe` receives every trace row as it is produced.
pub fn scf_solve(
    model: &Model,
    th: &Thermo,
    cfg: &ScfConfig,
    seed: BdGState,
    gauge: Gauge,
    mut observe: impl FnMut(&TraceRow),
) -> Result<ScfResult> {
    cfg.validate()?;
    if !(th.t > 0.0) {
        return Err(Error::Parameter("the SCF solver needs T > 0".into()));
    }
    let mut s = seed;
    let mut gauge = gauge;
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut verdict = Verdict::Stalled;
    let stall = libm::log(1.0 / 0.99);
    for iter in 0..cfg.max_iter {
        let lam = effective_hamiltonian(model, &s, &gauge, th);
        let spec = match diagonalize(&lam) {
            Ok(spec) => spec,
            Err(_) => {
                verdict = Verdict::Diverged;
                break;
            }
        };
        let image = gibbs_from_spectrum(&spec, th.t);
        if !finite(&image) {
            verdict = Verdict::Diverged;
            break;
        }
        let residual_gamma = big_gamma_distance(&s, &image);
        let residual_a = ampere_residual(model, &s.gamma, &gauge.e);
        let row = TraceRow {
            iter,
            residual_gamma,
            residual_a,
            free_energy: gibbs_free_energy(model, &image, &spec, &gauge, th)?,
            order_parameter: order_parameter(&s),
        };
        observe(&row);
        trace.push(row);
        if !(residual_gamma.is_finite() && residual_a.is_finite() && row.free_energy.is_finite()) {
            verdict = Verdict::Diverged;
            break;
        }
        if residual_gamma < cfg.tol_gamma && residual_a < cfg.tol_a {
            verdict = Verdict::Converged;
            break;
        }
        let w = cfg.stall_window;
        if iter >= w {
            let r_now = residual_gamma.max(residual_a);
            let old = &trace[iter - w];
            let r_old = old.residual_gamma.max(old.residual_a);
            if libm::fabs(libm::log(r_now / r_old)) < stall {
                break;
            }
        }
        s = mix(&s, &image, cfg.damping);
        if cfg.ampere_every > 0 && (iter + 1) % cfg.ampere_every == 0 {
            let e = ampere_update(model, &s.gamma, &gauge.e);
            gauge = Gauge::with_field(model, e);
        }
    }
    let free_energy = if verdict == Verdict::Diverged { f64::NAN } else { free_energy(model, &s, &gauge, th)? };
    Ok(ScfResult { state: s, gauge, trace, verdict, free_energy })
}

/// The normal state as an SCF seed.
pub fn normal_seed(ns: &NormalState) -> BdGState {
    BdGState::normal(ns.gamma.clone())
}

/// Seed `f_T(Λ(γ_N, ηα))` for a unit pairing kernel `α` on the grid, with
/// `η` the largest power of ½ such that the seed's pairing block obeys
/// `‖α₀‖²_HS <= 0.01 Tr γ_N(1 − γ_N)`. Returns the seed and `η`.
pub fn pairing_field_seed(model: &Model, ns: &NormalState, alpha: &CMat, gauge: &Gauge) -> Result<(BdGState, f64)> {
    let th = ns.thermo;
    let g = &ns.gamma;
    let gg = g * g;
    let budget = 0.01 * (space::trace(g) - space::trace(&gg)).re;
    let mut eta = 1.0;
    for _ in 0..200 {
        let pert = BdGState {
            gamma: g.clone(),
            alpha: CMat::from_fn(alpha.nrows(), alpha.ncols(), |i, j| alpha[(i, j)] * eta),
        };
        let lam = effective_hamiltonian(model, &pert, gauge, &th);
        let seed = gibbs_from_spectrum(&diagonalize(&lam)?, th.t);
        let a2 = order_parameter(&seed);
        let a2 = a2 * a2;
        if a2 <= budget {
            return Ok((seed, eta));
        }
        eta *= 0.5;
    }
    Err(Error::Numerical("could not scale the pairing seed into the admissible range".into()))
}

/// Seeds from the lowest mode of `L`, lifted to the grid.
pub fn unstable_mode_seed(
    model: &Model,
    ns: &NormalState,
    basis: &HSBasis,
    mode: &LowestMode,
) -> Result<(BdGState, f64)> {
    let alpha = basis.lift(&mode.kernel);
    pairing_field_seed(model, ns, &alpha, &Gauge::symmetric(model))
}

/// Compares the free-energy change of an admissible seed with `ε²λ`, where
/// `ε = ‖α₀‖_HS` is the seed's pairing amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeededStep {
    /// `ε`.
    pub eps: f64,
    /// Measured `F_T(seed) − F_T(Γ_N)`.
    pub delta_f: f64,
    /// `ε²λ`.
    pub predicted: f64,
}

impl SeededStep {
    /// `|ΔF − predicted| / |predicted|`.
    pub fn relative_error(&self) -> f64 {
        libm::fabs(self.delta_f - self.predicted) / libm::fabs(self.predicted)
    }
}

/// First-step consistency of a seed built by [`pairing_field_seed`] from a
/// kernel with Rayleigh quotient `lambda`. Along the seed's pairing
/// direction the quadratic form is `ε²λ` up to `O(λ/K)` corrections.
pub fn seeded_step_check(model: &Model, ns: &NormalState, seed: &BdGState, lambda: f64) -> Result<SeededStep> {
    let gauge = Gauge::symmetric(model);
    let f0 = free_energy(model, &BdGState::normal(ns.gamma.clone()), &gauge, &ns.thermo)?;
    let f1 = free_energy(model, seed, &gauge, &ns.thermo)?;
    let eps = order_parameter(seed);
    Ok(SeededStep { eps, delta_f: f1 - f0, predicted: eps * eps * lambda })
}

/// Symmetry diagnostics of a converged state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivarianceReport {
    /// `max ‖U_s Γ U_s* − Γ‖_F` over the basis translations `s = ω1, ω2`.
    pub translation: f64,
    /// `max |e(x + s) − e(x)|` over the basis translations.
    pub field_translation: f64,
    /// `(1/2π)` times the plaquette flux of `a_b + e`.
    pub flux: f64,
    /// `|flux − n|`.
    pub flux_error: f64,
    /// `‖RΓR* − Γ‖_F` for the reflection `x ↦ −x`.
    pub reflection: f64,
}

fn conjugate_state(u: &CMat, s: &BdGState) -> BdGState {
    BdGState { gamma: u * &s.gamma * u.adjoint(), alpha: u * &s.alpha * u.transpose() }
}

/// Lattice-translation and flux checks.
pub fn equivariance_check(model: &Model, s: &BdGState, gauge: &Gauge) -> Result<EquivarianceReport> {
    let grid = &model.grid;
    let l = grid.lattice();
    let mut translation: f64 = 0.0;
    let mut field_translation: f64 = 0.0;
    let n = grid.n() as i64;
    for (shift, (p, q)) in [(l.omega1(), (n, 0)), (l.omega2(), (0, n))] {
        let u = magnetic_translation(grid, &model.flux, shift)?;
        translation = translation.max(big_gamma_distance(&conjugate_state(&u, s), s));
        for i in 0..grid.dim() {
            let (j, k) = grid.split(i);
            let w = grid.wrap(j as i64 + p, k as i64 + q);
            field_translation = field_translation.max((gauge.e.at(w.index) - gauge.e.at(i)).norm());
        }
    }
    let flux = field::flux_quanta(grid, model.flux.b(), &gauge.e);
    let r = reflection(grid, &model.flux);
    let reflection = big_gamma_distance(&conjugate_state(&r, s), s);
    Ok(EquivarianceReport {
        translation,
        field_translation,
        flux,
        flux_error: libm::fabs(flux - model.flux.n() as f64),
        reflection,
    })
}

/// `F_T` of an SCF result against the normal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyComparison {
    /// `F_T(Γ, a)`.
    pub vortex: f64,
    /// `F_T(Γ_{Tb}, a_b)`.
    pub normal: f64,
    /// `vortex − normal`.
    pub delta: f64,
}

/// Compares free energies on the same model.
pub fn energy_comparison(model: &Model, result: &ScfResult, ns: &NormalState) -> Result<EnergyComparison> {
    let normal = free_energy(model, &normal_seed(ns), &Gauge::symmetric(model), &ns.thermo)?;
    let vortex = free_energy(model, &result.state, &result.gauge, &ns.thermo)?;
    Ok(EnergyComparison { vortex, normal, delta: vortex - normal })
}

/// Largest eigenvalue drift of `Γ` outside `[0, 1]`.
pub fn admissibility_drift(s: &BdGState) -> Result<f64> {
    let spec = diagonalize(&assemble_big_gamma(s)?)?;
    let lo = spec.values.first().copied().unwrap_or(0.0);
    let hi = spec.values.last().copied().unwrap_or(0.0);
    Ok((-lo).max(hi - 1.0).max(0.0))
}
