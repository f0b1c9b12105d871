//! Magnetic-translation invariant normal states `γ = f_T(−Δ_{a_b} − μ + ξ)`.
//!
//! The direct term is replaced by the scalar shift `ξ = λ·den(γ)` with
//! `λ = ∫v`, which solves `ξ = g_T(ξ)` on the cached spectrum of `−Δ_{a_b}`.
//!
//! On the cell space only shifts in `ℒ/n` act, so for small `n` the density
//! of `γ` on one cell is not constant. The full-plane operator, obtained by
//! averaging over boundary twists, has constant density and no current; see
//! [`twist_average`].

use alloc::vec::Vec;

use crate::field::VectorField;
use crate::geometry::Vec2;
use crate::space::{self, diagonalize, fermi, magnetic_laplacian, SpectralData};
use crate::state::{g_entropy, Model, Thermo};
use crate::{CMat, Error, Result};

/// Number of scan points used to bracket roots when `∫v < 0`.
pub const NEGATIVE_SCAN_POINTS: usize = 256;

/// Spectrum of `−Δ_{a_b}` together with the cell data `g_T` needs.
#[derive(Debug, Clone)]
pub struct LandauProblem {
    /// Eigen-decomposition of `−Δ_{a_b}`.
    pub spectrum: SpectralData,
    /// `|Ω|`.
    pub area: f64,
    /// `λ = ∫v`, or zero when the direct term is switched off.
    pub lambda: f64,
    /// `b`.
    pub b: f64,
}

impl LandauProblem {
    /// Diagonalizes `−Δ_{a_b}` for `model`.
    pub fn new(model: &Model) -> Result<Self> {
        if model.interaction.exchange {
            return Err(Error::Parameter("the normal solver does not support the exchange term".into()));
        }
        let spectrum = diagonalize(&magnetic_laplacian(&model.grid, &model.flux))?;
        let lambda = if model.interaction.direct { model.v.integral() } else { 0.0 };
        Ok(Self { spectrum, area: model.grid.lattice().area(), lambda, b: model.flux.b() })
    }

    /// `(1/|Ω|) Σ_k f_T(ε_k − μ + ξ)`.
    pub fn density(&self, xi: f64, th: &Thermo) -> f64 {
        self.spectrum.values.iter().map(|&e| fermi(th.t, e - th.mu + xi)).sum::<f64>() / self.area
    }

    /// `g_T(ξ) = λ (1/|Ω|) Tr f_T(−Δ_{a_b} − μ + ξ)`.
    pub fn g_t(&self, xi: f64, th: &Thermo) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda * self.density(xi, th)
    }

    /// `g_T′(ξ) = −(λ/(T|Ω|)) Σ f(1 − f)`.
    pub fn g_t_prime(&self, xi: f64, th: &Thermo) -> f64 {
        if self.lambda == 0.0 || th.t <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .spectrum
            .values
            .iter()
            .map(|&e| {
                let f = fermi(th.t, e - th.mu + xi);
                f * (1.0 - f)
            })
            .sum();
        -self.lambda * s / (th.t * self.area)
    }

    /// `ξ − g_T(ξ)`.
    pub fn residual(&self, xi: f64, th: &Thermo) -> f64 {
        xi - self.g_t(xi, th)
    }

    /// Free energy of the normal state with shift `ξ`, from the spectrum.
    pub fn free_energy(&self, xi: f64, th: &Thermo) -> f64 {
        let mut kin = 0.0;
        let mut num = 0.0;
        let mut ent = 0.0;
        for &e in &self.spectrum.values {
            let f = fermi(th.t, e - th.mu + xi);
            kin += e * f;
            num += f;
            ent += g_entropy(f);
        }
        kin + 0.5 * self.lambda * num * num / self.area - th.t * ent - th.mu * num + 0.5 * self.b * self.b * self.area
    }
}

/// Roots of `ξ = g_T(ξ)` and how they were found.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSolution {
    /// Selected root (lowest free energy when several exist).
    pub xi: f64,
    /// `|ξ − g_T(ξ)|` at the selected root.
    pub residual: f64,
    /// Every root found.
    pub roots: Vec<f64>,
    /// Scan points `(ξ, ξ − g_T(ξ))` used for bracketing (`∫v < 0` only).
    pub scan: Vec<(f64, f64)>,
}

/// Bisection for a sign change of `ξ − g_T(ξ)` on `[lo, hi]`.
pub fn bisect_xi(p: &LandauProblem, th: &Thermo, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = p.residual(lo, th);
    let fhi = p.residual(hi, th);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoRoot(alloc::format!("no sign change on [{lo}, {hi}]")));
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let fm = p.residual(mid, th);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration on `ξ − g_T(ξ)` from `start`.
pub fn newton_xi(p: &LandauProblem, th: &Thermo, start: f64, tol: f64, max_iter: usize) -> Result<f64> {
    let mut xi = start;
    for _ in 0..max_iter {
        let r = p.residual(xi, th);
        if libm::fabs(r) < tol {
            return Ok(xi);
        }
        let d = 1.0 - p.g_t_prime(xi, th);
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Numerical("Newton step with vanishing derivative".into()));
        }
        let step = r / d;
        xi -= step;
        if libm::fabs(step) <= 1e-16 * libm::fabs(xi).max(1.0) {
            break;
        }
    }
    let r = p.residual(xi, th);
    if libm::fabs(r) < tol {
        Ok(xi)
    } else {
        Err(Error::Numerical(alloc::format!("Newton stopped with residual {r:e}")))
    }
}

/// Bisection to `1e-6`, then Newton; falls back to full bisection when Newton
/// leaves the bracket or stalls.
fn polish(p: &LandauProblem, th: &Thermo, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let coarse = bisect_xi(p, th, lo, hi, 1e-6)?;
    match newton_xi(p, th, coarse, tol, 50) {
        Ok(x) if x >= lo - 1e-6 && x <= hi + 1e-6 => Ok(x),
        _ => bisect_xi(p, th, lo, hi, 0.0),
    }
}

/// Solves `ξ = g_T(ξ)`.
///
/// For `λ >= 0` the root is unique and lies in `[0, g_T(0)]`. For `λ < 0`
/// every sign change on a scan of `[λ·d/|Ω|, 0]` is refined and the root
/// with the lowest free energy is selected.
pub fn solve_xi(p: &LandauProblem, th: &Thermo, tol: f64) -> Result<XiSolution> {
    if !(th.t > 0.0) {
        return Err(Error::Parameter("the normal solver needs T > 0".into()));
    }
    if p.lambda == 0.0 {
        return Ok(XiSolution { xi: 0.0, residual: 0.0, roots: alloc::vec![0.0], scan: Vec::new() });
    }
    if p.lambda > 0.0 {
        let hi = p.g_t(0.0, th);
        let xi = polish(p, th, 0.0, hi, tol)?;
        let residual = libm::fabs(p.residual(xi, th));
        return Ok(XiSolution { xi, residual, roots: alloc::vec![xi], scan: Vec::new() });
    }
    let lo = p.lambda * p.spectrum.dim() as f64 / p.area;
    let m = NEGATIVE_SCAN_POINTS;
    let scan: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let x = lo + (0.0 - lo) * i as f64 / (m - 1) as f64;
            (x, p.residual(x, th))
        })
        .collect();
    let mut roots = Vec::new();
    for w in scan.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0.signum() != f1.signum() && f1 != 0.0 {
            roots.push(polish(p, th, x0, x1, tol)?);
        }
    }
    if let Some(&(x, f)) = scan.last() {
        if f == 0.0 {
            roots.push(x);
        }
    }
    let xi =
        roots.iter().copied().min_by(|a, b| p.free_energy(*a, th).total_cmp(&p.free_energy(*b, th))).ok_or_else(
            || Error::NoRoot(alloc::format!("no sign change of xi - g_T(xi) on [{lo}, 0] over {m} points")),
        )?;
    let residual = libm::fabs(p.residual(xi, th));
    Ok(XiSolution { xi, residual, roots, scan })
}

/// The normal state `(Γ_{Tb}, a_b)`.
#[derive(Debug, Clone)]
pub struct NormalState {
    /// Self-consistent shift.
    pub xi: f64,
    /// Root-finding record.
    pub solution: XiSolution,
    /// `γ = f_T(−Δ_{a_b} − μ + ξ)`.
    pub gamma: CMat,
    /// Thermodynamic point.
    pub thermo: Thermo,
    /// The spectral problem it was built from.
    pub problem: LandauProblem,
}

impl NormalState {
    /// Eigenvalues of `h_{Tb} = −Δ_{a_b} + ξ − μ`, ascending.
    pub fn h_values(&self) -> Vec<f64> {
        self.problem.spectrum.values.iter().map(|e| e - self.thermo.mu + self.xi).collect()
    }

    /// Eigenvectors of `h_{Tb}` (columns).
    pub fn h_vectors(&self) -> &CMat {
        &self.problem.spectrum.vectors
    }

    /// Free energy from the spectrum.
    pub fn free_energy(&self) -> f64 {
        self.problem.free_energy(self.xi, &self.thermo)
    }
}

/// Builds the normal state from a prepared spectral problem.
pub fn normal_state_from(problem: LandauProblem, th: &Thermo) -> Result<NormalState> {
    let solution = solve_xi(&problem, th, 1e-12)?;
    let xi = solution.xi;
    let occ: Vec<f64> = problem.spectrum.values.iter().map(|&e| fermi(th.t, e - th.mu + xi)).collect();
    let gamma = space::reconstruct(&problem.spectrum, &occ);
    Ok(NormalState { xi, solution, gamma, thermo: *th, problem })
}

/// Builds the normal state of `model` at `th`.
pub fn normal_state(model: &Model, th: &Thermo) -> Result<NormalState> {
    normal_state_from(LandauProblem::new(model)?, th)
}

/// Normal state at temperature `t` whose particle number `Tr γ` equals `nu`,
/// found by bisection on `μ` to absolute tolerance `tol` in `μ`.
pub fn normal_state_at_filling(problem: LandauProblem, t: f64, nu: f64, tol: f64) -> Result<NormalState> {
    let d = problem.spectrum.dim() as f64;
    if !(nu > 0.0 && nu < d) {
        return Err(Error::Parameter(alloc::format!("target particle number {nu} must lie in (0, {d})")));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter("filling tolerance must be positive".into()));
    }
    let count = |mu: f64| -> Result<f64> {
        let th = Thermo::new(t, mu)?;
        let sol = solve_xi(&problem, &th, 1e-12)?;
        Ok(problem.density(sol.xi, &th) * problem.area)
    };
    let vals = &problem.spectrum.values;
    let width = (vals[vals.len() - 1] - vals[0]).max(1.0) + libm::fabs(problem.lambda) * d / problem.area;
    let (mut lo, mut hi) = (vals[0] - width, vals[vals.len() - 1] + width);
    for _ in 0..60 {
        if count(lo)? < nu {
            break;
        }
        lo -= width;
    }
    for _ in 0..60 {
        if count(hi)? > nu {
            break;
        }
        hi += width;
    }
    if !(count(lo)? < nu && count(hi)? > nu) {
        return Err(Error::NoRoot(alloc::format!("could not bracket a chemical potential for Tr γ = {nu}")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if count(mid)? < nu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    normal_state_from(problem, &Thermo::new(t, 0.5 * (lo + hi))?)
}

/// `max |γ − f_T(−Δ_{a_b} − μ + v*ρ_γ)|`, recomputed from the grid.
pub fn self_consistency_residual(model: &Model, ns: &NormalState) -> Result<f64> {
    let rho = space::density(&ns.gamma, &model.grid);
    let shift =
        if model.interaction.direct { model.v.convolve(&model.grid, &rho) } else { alloc::vec![0.0; rho.len()] };
    let mut h = magnetic_laplacian(&model.grid, &model.flux);
    for (i, s) in shift.iter().enumerate() {
        h[(i, i)] += crate::c64::new(s - ns.thermo.mu, 0.0);
    }
    let t = ns.thermo.t;
    let g = space::func_calc(&h, |x| fermi(t, x))?;
    Ok((&g - &ns.gamma).norm_max())
}

/// Density and current diagnostics of a normal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalReport {
    /// Mean of `den(γ)`.
    pub density_mean: f64,
    /// Smallest value of `den(γ)`.
    pub density_min: f64,
    /// `(max − min)/mean` of `den(γ)`.
    pub density_spread: f64,
    /// Largest pointwise norm of `j(γ, a_b)`.
    pub current_sup: f64,
    /// True when `den(γ) > 0` everywhere, which makes `a = a_b` the only
    /// solution of the linearized Ampère equation at this state.
    pub coercive: bool,
}

/// Checks constant positive density and vanishing current.
pub fn verify_uniqueness_amp(model: &Model, ns: &NormalState) -> NormalReport {
    let rho = space::density(&ns.gamma, &model.grid);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &r in &rho {
        lo = lo.min(r);
        hi = hi.max(r);
        sum += r;
    }
    let mean = sum / rho.len() as f64;
    let j = space::current(&ns.gamma, &model.grid, &model.flux, None);
    let current_sup = VectorField::from_values(j).sup_norm();
    NormalReport {
        density_mean: mean,
        density_min: lo,
        density_spread: if mean != 0.0 { (hi - lo) / libm::fabs(mean) } else { 0.0 },
        current_sup,
        coercive: lo > 0.0,
    }
}

/// Density and current of the full-plane normal state.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistAverage {
    /// Twist-averaged `den(γ)` on the grid.
    pub density: Vec<f64>,
    /// Twist-averaged current.
    pub current: Vec<Vec2>,
    /// `(max − min)/mean` of the averaged density.
    pub density_spread: f64,
    /// Largest pointwise norm of the averaged current.
    pub current_sup: f64,
}

/// Averages `den` and `j` of `f_T(−Δ_{a_b + c} − μ + ξ)` over the constant
/// fields `c` with boundary twists `c·ω_i ∈ (2π/N){0, …, N − 1}`.
///
/// These `N²` magnetic Bloch fibers are permuted by the grid magnetic
/// translations, so the average is the cell restriction of the full-plane
/// operator. Costs `N²` diagonalizations.
pub fn twist_average(model: &Model, ns: &NormalState) -> Result<TwistAverage> {
    let grid = &model.grid;
    let (o1, o2) = (grid.lattice().omega1(), grid.lattice().omega2());
    let det = o1.x * o2.y - o1.y * o2.x;
    let n = grid.n();
    let d = grid.dim();
    let t = ns.thermo.t;
    let shift = ns.xi - ns.thermo.mu;
    let mut density = alloc::vec![0.0; d];
    let mut current = alloc::vec![Vec2::default(); d];
    for a in 0..n {
        for b in 0..n {
            let th1 = 2.0 * core::f64::consts::PI * a as f64 / n as f64;
            let th2 = 2.0 * core::f64::consts::PI * b as f64 / n as f64;
            let c = Vec2::new((th1 * o2.y - th2 * o1.y) / det, (th2 * o1.x - th1 * o2.x) / det);
            let e = VectorField::from_values(alloc::vec![c; d]);
            let h = space::magnetic_laplacian_with(grid, &model.flux, Some(&e));
            let g = space::func_calc(&h, |x| fermi(t, x + shift))?;
            for (acc, r) in density.iter_mut().zip(space::density(&g, grid)) {
                *acc += r;
            }
            for (acc, j) in current.iter_mut().zip(space::current(&g, grid, &model.flux, Some(&e))) {
                *acc = *acc + j;
            }
        }
    }
    let m = (n * n) as f64;
    density.iter_mut().for_each(|r| *r /= m);
    current.iter_mut().for_each(|j| *j = (1.0 / m) * *j);
    let (lo, hi) = density.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &r| (l.min(r), h.max(r)));
    let mean = density.iter().sum::<f64>() / d as f64;
    let current_sup = VectorField::from_values(current.clone()).sup_norm();
    Ok(TwistAverage {
        density_spread: if mean != 0.0 { (hi - lo) / libm::fabs(mean) } else { 0.0 },
        current_sup,
        density,
        current,
    })
}
