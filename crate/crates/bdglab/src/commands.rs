//! The `spectrum`, `normal`, `tc` and `scf` commands.

use std::path::{Path, PathBuf};

use bdglab_core::normal::{
    bisect_xi, newton_xi, normal_state, normal_state_at_filling, twist_average, verify_uniqueness_amp, LandauProblem,
    NormalState,
};
use bdglab_core::space::{cluster_ids, cluster_summary, diagonalize, magnetic_laplacian, trace};
use bdglab_core::stability::{StabilityModel, TcVerdict};
use bdglab_core::state::Gauge;
use bdglab_core::state::{Model, Thermo};
use bdglab_core::vortex::{
    admissibility_drift, energy_comparison, equivariance_check, normal_seed, order_parameter, scf_solve,
    seeded_step_check, unstable_mode_seed, Verdict,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::emit::{fmt_f64, write_csv, write_json, write_jsonl};
use crate::error::{CliError, Result};

/// Spectrum of `−Δ_{a_b}` grouped into Landau clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOutput {
    /// Field `b`.
    pub b: f64,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Cluster of each eigenvalue.
    pub cluster_ids: Vec<usize>,
    /// `(mean, size)` per cluster.
    pub clusters: Vec<(f64, usize)>,
}

/// Clusters are split where a value is more than `b/4` from the running
/// cluster mean; the exact levels are `2b` apart.
pub const CLUSTER_THRESHOLD: f64 = 0.25;

/// Diagonalizes `−Δ_{a_b}` and writes `spectrum.csv`.
pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<SpectrumOutput> {
    let model = cfg.model_spec()?.build()?;
    let b = model.flux.b();
    let values = diagonalize(&magnetic_laplacian(&model.grid, &model.flux))?.values;
    let ids = cluster_ids(&values, CLUSTER_THRESHOLD * b);
    let clusters = cluster_summary(&values, &ids);
    let rows: Vec<Vec<String>> = values
        .iter()
        .zip(&ids)
        .enumerate()
        .map(|(i, (v, c))| vec![i.to_string(), fmt_f64(*v), c.to_string()])
        .collect();
    write_csv(&out.join("spectrum.csv"), &["index", "eigenvalue", "cluster_id"], &rows)?;
    Ok(SpectrumOutput { b, values, cluster_ids: ids, clusters })
}

/// Result of the `normal` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalOutput {
    /// Temperature.
    pub t: f64,
    /// Chemical potential used (solved for when `nu` is set).
    pub mu: f64,
    /// Shift `ξ`.
    pub xi: f64,
    /// `|ξ − g_T(ξ)|`.
    pub residual: f64,
    /// `|ξ_bisection − ξ_Newton|` when the root is unique (`∫v >= 0`).
    pub newton_bisection_gap: Option<f64>,
    /// Number of roots found.
    pub roots: usize,
    /// `Tr γ`.
    pub particle_number: f64,
    /// Mean density on the cell.
    pub density_mean: f64,
    /// `(max − min)/mean` of the cell density.
    pub density_spread: f64,
    /// Sup norm of the cell current.
    pub current_sup: f64,
    /// Density spread after averaging over boundary twists.
    pub twist_density_spread: Option<f64>,
    /// Current sup norm after averaging over boundary twists.
    pub twist_current_sup: Option<f64>,
    /// Free energy of the normal state.
    #[serde(rename = "F_T")]
    pub free_energy: f64,
}

fn solve_normal(cfg: &RunConfig, model: &Model) -> Result<NormalState> {
    match cfg.nu {
        Some(nu) => Ok(normal_state_at_filling(LandauProblem::new(model)?, cfg.thermo.t, nu, 1e-12)?),
        None => Ok(normal_state(model, &cfg.thermo()?)?),
    }
}

/// `|ξ_bisection − ξ_Newton|` on `[0, g_T(0)]`, or `None` when `∫v < 0`.
pub fn newton_bisection_gap(ns: &NormalState) -> Result<Option<f64>> {
    let p = &ns.problem;
    let th = &ns.thermo;
    if p.lambda < 0.0 {
        return Ok(None);
    }
    let a = bisect_xi(p, th, 0.0, p.g_t(0.0, th), 0.0)?;
    let b = newton_xi(p, th, 0.0, 1e-13, 100)?;
    Ok(Some((a - b).abs()))
}

/// Solves for the normal state and writes `normal.json`.
pub fn normal(cfg: &RunConfig, out: &Path) -> Result<NormalOutput> {
    let model = cfg.model_spec()?.build()?;
    let ns = solve_normal(cfg, &model)?;
    let rep = verify_uniqueness_amp(&model, &ns);
    let (twist_density_spread, twist_current_sup) = if cfg.normal.twist_average {
        let avg = twist_average(&model, &ns)?;
        (Some(avg.density_spread), Some(avg.current_sup))
    } else {
        (None, None)
    };
    let o = NormalOutput {
        t: ns.thermo.t,
        mu: ns.thermo.mu,
        xi: ns.xi,
        residual: ns.solution.residual,
        newton_bisection_gap: newton_bisection_gap(&ns)?,
        roots: ns.solution.roots.len(),
        particle_number: trace(&ns.gamma).re,
        density_mean: rep.density_mean,
        density_spread: rep.density_spread,
        current_sup: rep.current_sup,
        twist_density_spread,
        twist_current_sup,
        free_energy: ns.free_energy(),
    };
    write_json(&out.join("normal.json"), &o)?;
    Ok(o)
}

/// One row of the `tc` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcRow {
    /// Field.
    pub b: f64,
    /// Chemical potential.
    pub mu: f64,
    /// `T_c`, when the bracket straddles a sign change.
    pub t_c: Option<f64>,
    /// `"critical"`, `"stable-everywhere"` or `"unstable-everywhere"`.
    pub verdict: &'static str,
    /// `λ_min(L)` at the lower end of the final bracket.
    pub lambda_lo: f64,
    /// `λ_min(L)` at the upper end of the final bracket.
    pub lambda_hi: f64,
    /// Truncation rank.
    pub m: usize,
    /// Relative change of `λ_min(L)` at `t_lo` when `M` is doubled.
    pub drift: f64,
}

fn tc_row(cfg: &RunConfig, b: Option<f64>) -> Result<TcRow> {
    let spec = cfg.model_spec()?;
    let model = match b {
        Some(b) => spec.at_field(b)?,
        None => spec.build()?,
    };
    let b = model.flux.b();
    let mu = cfg.tc.mu_over_b.map_or(cfg.thermo.mu, |r| r * b);
    let m = cfg.rank();
    let sm = StabilityModel::new(&model, m)?;
    let res = sm.critical_temperature(mu, cfg.tc.t_lo, cfg.tc.t_hi, cfg.tc.tol)?;
    let (t_c, verdict) = match res.verdict {
        TcVerdict::Critical(t) => (Some(t), "critical"),
        TcVerdict::StableEverywhere => (None, "stable-everywhere"),
        TcVerdict::UnstableEverywhere => (None, "unstable-everywhere"),
    };
    let th = Thermo::new(cfg.tc.t_lo, mu)?;
    let base = res.trace[0].1;
    let m2 = (2 * m).min(model.dim());
    let doubled = if m2 == m { base } else { StabilityModel::new(&model, m2)?.lambda_min(&th)? };
    let drift = if base != 0.0 { ((doubled - base) / base).abs() } else { (doubled - base).abs() };
    Ok(TcRow { b, mu, t_c, verdict, lambda_lo: res.lo.1, lambda_hi: res.hi.1, m, drift })
}

fn pool(cfg: &RunConfig) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.thread_count()?)
        .build()
        .map_err(|e| CliError::Numerical(format!("thread pool: {e}")))
}

/// Bisects `T_c` for every configured field and writes `tc.csv`.
pub fn tc(cfg: &RunConfig, out: &Path) -> Result<Vec<TcRow>> {
    let bs: Vec<Option<f64>> =
        if cfg.tc.b.is_empty() { vec![None] } else { cfg.tc.b.iter().map(|&b| Some(b)).collect() };
    let rows: Vec<TcRow> = pool(cfg)?.install(|| bs.par_iter().map(|&b| tc_row(cfg, b)).collect::<Result<Vec<_>>>())?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt_f64(r.b),
                r.t_c.map_or_else(|| r.verdict.to_string(), fmt_f64),
                fmt_f64(r.lambda_lo),
                fmt_f64(r.lambda_hi),
                r.m.to_string(),
                fmt_f64(r.drift),
            ]
        })
        .collect();
    write_csv(
        &out.join("tc.csv"),
        &["b", "T_c_or_verdict", "lambda_min_at_bracket_lo", "lambda_min_at_bracket_hi", "M", "M_doubled_drift"],
        &table,
    )?;
    Ok(rows)
}

/// One line of `scf_trace.jsonl`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceLine {
    /// Iteration.
    pub iter: usize,
    /// `‖Γ − f_T(Λ)‖_F`.
    pub residual_gamma: f64,
    /// Ampère residual.
    pub residual_a: f64,
    /// `F_T` of the Gibbs image.
    pub free_energy: f64,
    /// `‖α‖_HS`.
    pub order_parameter: f64,
}

/// Result of the `scf` command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScfOutput {
    /// `"converged"`, `"stalled"` or `"diverged"`.
    pub verdict: &'static str,
    /// Iterations performed.
    pub iterations: usize,
    /// Temperature.
    pub t: f64,
    /// Chemical potential.
    pub mu: f64,
    /// Field.
    pub b: f64,
    /// Flux integer of the cell.
    pub n: i64,
    /// `λ_min(L)` at the normal state.
    pub lambda_min: f64,
    /// Seed amplitude factor `η`.
    pub seed_eta: f64,
    /// `‖α₀‖_HS` of the seed.
    pub seed_order_parameter: f64,
    /// `F_T(seed) − F_T(normal)`.
    pub seed_delta_f: f64,
    /// `‖α₀‖²λ_min(L)`.
    pub seed_delta_f_predicted: f64,
    /// `‖α‖_HS` of the final state.
    pub order_parameter: f64,
    /// Final `Γ` residual.
    pub residual_gamma: f64,
    /// Final Ampère residual.
    pub residual_a: f64,
    /// `F_T` of the final state.
    pub free_energy: f64,
    /// `F_T(Γ_N, a_b)`.
    pub free_energy_normal: f64,
    /// `free_energy − free_energy_normal`.
    pub delta_f: f64,
    /// `F_T` of the normal branch relaxed against the Ampère equation.
    pub free_energy_relaxed_normal: Option<f64>,
    /// `free_energy − free_energy_relaxed_normal`.
    pub delta_f_relaxed: Option<f64>,
    /// `(1/2π)` times the flux of the final vector potential.
    pub flux: f64,
    /// `|flux − n|`.
    pub flux_error: f64,
    /// Magnetic-translation residual of `Γ`.
    pub translation_residual: f64,
    /// Translation residual of `e`.
    pub field_translation_residual: f64,
    /// Reflection residual of `Γ`.
    pub reflection_residual: f64,
    /// Eigenvalue drift of `Γ` outside `[0, 1]`.
    pub admissibility_drift: f64,
}

/// Seeds from the lowest Hessian mode, iterates, and writes `scf.json`
/// and, when enabled, `scf_trace.jsonl`. A run that does not converge is
/// written out and then reported as a numerical failure.
pub fn scf(cfg: &RunConfig, out: &Path) -> Result<ScfOutput> {
    let model = cfg.model_spec()?.build()?;
    let th = solve_normal(cfg, &model)?.thermo;
    let sm = StabilityModel::new(&model, cfg.rank())?;
    let (ns, op) = sm.operator(&th)?;
    let low = op.lowest_eigenvalue()?;
    let (seed, seed_eta) = unstable_mode_seed(&model, &ns, &sm.basis(&ns)?, &low)?;
    let step = seeded_step_check(&model, &ns, &seed, low.value)?;
    let solver = cfg.scf.solver();
    let res = scf_solve(&model, &th, &solver, seed, Gauge::symmetric(&model), |_| {})?;
    if cfg.scf.trace {
        let lines: Vec<TraceLine> = res
            .trace
            .iter()
            .map(|r| TraceLine {
                iter: r.iter,
                residual_gamma: r.residual_gamma,
                residual_a: r.residual_a,
                free_energy: r.free_energy,
                order_parameter: r.order_parameter,
            })
            .collect();
        write_jsonl(&out.join("scf_trace.jsonl"), &lines)?;
    }
    let last = res.trace.last().copied();
    let (free_energy_normal, eq, drift) = if res.verdict == Verdict::Diverged {
        (f64::NAN, None, f64::NAN)
    } else {
        let cmp = energy_comparison(&model, &res, &ns)?;
        (cmp.normal, Some(equivariance_check(&model, &res.state, &res.gauge)?), admissibility_drift(&res.state)?)
    };
    let relaxed = if cfg.scf.relaxed_normal {
        let r = scf_solve(&model, &th, &solver, normal_seed(&ns), Gauge::symmetric(&model), |_| {})?;
        (r.verdict == Verdict::Converged).then_some(r.free_energy)
    } else {
        None
    };
    let o = ScfOutput {
        verdict: res.verdict.as_str(),
        iterations: res.trace.len(),
        t: th.t,
        mu: th.mu,
        b: model.flux.b(),
        n: model.flux.n(),
        lambda_min: low.value,
        seed_eta,
        seed_order_parameter: step.eps,
        seed_delta_f: step.delta_f,
        seed_delta_f_predicted: step.predicted,
        order_parameter: order_parameter(&res.state),
        residual_gamma: last.map_or(f64::NAN, |r| r.residual_gamma),
        residual_a: last.map_or(f64::NAN, |r| r.residual_a),
        free_energy: res.free_energy,
        free_energy_normal,
        delta_f: res.free_energy - free_energy_normal,
        free_energy_relaxed_normal: relaxed,
        delta_f_relaxed: relaxed.map(|f| res.free_energy - f),
        flux: eq.map_or(f64::NAN, |e| e.flux),
        flux_error: eq.map_or(f64::NAN, |e| e.flux_error),
        translation_residual: eq.map_or(f64::NAN, |e| e.translation),
        field_translation_residual: eq.map_or(f64::NAN, |e| e.field_translation),
        reflection_residual: eq.map_or(f64::NAN, |e| e.reflection),
        admissibility_drift: drift,
    };
    write_json(&out.join("scf.json"), &o)?;
    if res.verdict != Verdict::Converged {
        return Err(CliError::Numerical(format!(
            "numerical failure: scf {} after {} iterations",
            o.verdict, o.iterations
        )));
    }
    Ok(o)
}

/// Writes the resolved configuration next to the outputs.
pub fn write_resolved_config(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let path = out.join("config.toml");
    crate::emit::write_text(&path, &cfg.to_toml_string()?)?;
    Ok(path)
}
