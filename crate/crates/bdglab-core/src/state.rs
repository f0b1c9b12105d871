//! BdG states `Γ = [[γ, α], [α*, 1 − γ̄]]`, the effective Hamiltonian, and
//! the energy, entropy and free energy functionals.
//!
//! Conventions:
//! - `(v♯α)(x, y) = v(x − y) α(x, y)` acts entrywise on grid kernels.
//! - The entropy `S(Γ) = Tr g(Γ)` runs over both blocks of `Γ`, i.e. it is
//!   twice the von Neumann entropy `−Tr Γ ln Γ`. The free energy weighs it
//!   with `T/2`, so `F_T = E − T(−Tr Γ ln Γ) − μ Tr γ`. With this weight the
//!   stationarity condition in `Γ` is exactly `Γ = f_T(Λ)`.
//! - The field energy is `½∫|curl a|²`, the normalization for which
//!   `curl* curl a = j` is the stationarity condition in `a`.

use alloc::vec::Vec;

use crate::field::{self, VectorField};
use crate::geometry::{make_flux_sector, FluxSector, Lattice};
use crate::potential::{PairPotential, PotentialSpec};
use crate::space::{
    self, diagonalize, fermi, hermitize, magnetic_laplacian, magnetic_laplacian_with, Grid, SpectralData,
};
use crate::{c64, CMat, Error, Result};

/// Temperature and chemical potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thermo {
    /// Temperature `T >= 0`.
    pub t: f64,
    /// Chemical potential.
    pub mu: f64,
}

impl Thermo {
    /// Validated constructor.
    pub fn new(t: f64, mu: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() || !mu.is_finite() {
            return Err(Error::Parameter(alloc::format!("invalid thermodynamic point T={t}, mu={mu}")));
        }
        Ok(Self { t, mu })
    }
}

/// Which mean-field terms enter `h_{γa}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interaction {
    /// Direct term `v * ρ_γ`.
    pub direct: bool,
    /// Exchange term `−v♯γ`.
    pub exchange: bool,
}

impl Default for Interaction {
    fn default() -> Self {
        Self { direct: true, exchange: false }
    }
}

/// Grid, field sector, pair potential and mean-field switches.
#[derive(Debug, Clone)]
pub struct Model {
    /// Discretized cell.
    pub grid: Grid,
    /// Flux quanta and field.
    pub flux: FluxSector,
    /// Pair potential.
    pub v: PairPotential,
    /// Mean-field switches.
    pub interaction: Interaction,
}

impl Model {
    /// Bundles the ingredients.
    pub fn new(grid: Grid, flux: FluxSector, v: PairPotential, interaction: Interaction) -> Self {
        Self { grid, flux, v, interaction }
    }

    /// One-particle dimension `N²`.
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
}

/// Recipe for a [`Model`]: cell shape, flux, grid size and potential.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    /// Cell basis.
    pub lattice: Lattice,
    /// Flux quanta per cell.
    pub n: i64,
    /// Grid points per direction.
    pub grid_n: usize,
    /// Potential profile.
    pub potential: PotentialSpec,
    /// Rescale the sampled potential to this value of `∫v`.
    pub potential_integral: Option<f64>,
    /// Mean-field switches.
    pub interaction: Interaction,
}

impl ModelSpec {
    /// Builds the model on the given cell.
    pub fn build(&self) -> Result<Model> {
        self.build_on(self.lattice)
    }

    /// Builds the model on the cell rescaled so that the field equals `b`.
    pub fn at_field(&self, b: f64) -> Result<Model> {
        self.build_on(self.lattice.scaled_for_field(self.n, b)?)
    }

    fn build_on(&self, lattice: Lattice) -> Result<Model> {
        let grid = Grid::new(lattice, self.grid_n)?;
        let flux = make_flux_sector(&lattice, self.n)?;
        let mut v = PairPotential::new(&grid, &self.potential)?;
        if let Some(target) = self.potential_integral {
            v = v.with_integral(target)?;
        }
        Ok(Model::new(grid, flux, v, self.interaction))
    }
}

/// Periodic part `e` of the vector potential with the matching `−Δ_a`.
#[derive(Debug, Clone)]
pub struct Gauge {
    /// `e = a − a_b`.
    pub e: VectorField,
    /// `−Δ_{a_b + e}`.
    pub kinetic: CMat,
}

impl Gauge {
    /// `a = a_b`.
    pub fn symmetric(model: &Model) -> Self {
        Self { e: VectorField::zeros(&model.grid), kinetic: magnetic_laplacian(&model.grid, &model.flux) }
    }

    /// `a = a_b + e`.
    pub fn with_field(model: &Model, e: VectorField) -> Self {
        let kinetic = magnetic_laplacian_with(&model.grid, &model.flux, Some(&e));
        Self { e, kinetic }
    }
}

/// One-particle density `γ` and pairing kernel `α` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BdGState {
    /// `γ`, Hermitian `d×d`.
    pub gamma: CMat,
    /// `α`, symmetric `d×d`.
    pub alpha: CMat,
}

impl BdGState {
    /// State with `α = 0`.
    pub fn normal(gamma: CMat) -> Self {
        let d = gamma.nrows();
        Self { gamma, alpha: CMat::zeros(d, d) }
    }

    /// One-particle dimension.
    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }

    /// `Tr γ`.
    pub fn particle_number(&self) -> f64 {
        space::trace(&self.gamma).re
    }

    /// The same state with `α` multiplied by `e^{iφ}` (a constant gauge).
    pub fn rephased(&self, phi: f64) -> Self {
        let z = space::cis(phi);
        let mut alpha = self.alpha.clone();
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                alpha[(i, j)] *= z;
            }
        }
        Self { gamma: self.gamma.clone(), alpha }
    }
}

/// Builds `[[a, b], [b*, c]]`.
pub fn block(a: &CMat, b: &CMat, c: &CMat) -> CMat {
    let d = a.nrows();
    CMat::from_fn(2 * d, 2 * d, |i, j| match (i < d, j < d) {
        (true, true) => a[(i, j)],
        (true, false) => b[(i, j - d)],
        (false, true) => b[(j, i - d)].conj(),
        (false, false) => c[(i - d, j - d)],
    })
}

/// `Γ = [[γ, α], [α*, 1 − γ̄]]`.
pub fn assemble_big_gamma(s: &BdGState) -> Result<CMat> {
    let d = s.dim();
    if s.gamma.ncols() != d || s.alpha.nrows() != d || s.alpha.ncols() != d {
        return Err(Error::Shape("gamma and alpha must both be d x d".into()));
    }
    let hole = CMat::from_fn(d, d, |i, j| {
        let one = if i == j { 1.0 } else { 0.0 };
        c64::new(one, 0.0) - s.gamma[(i, j)].conj()
    });
    Ok(block(&s.gamma, &s.alpha, &hole))
}

/// Reads `(γ, α)` from the upper blocks of a `2d×2d` matrix, symmetrizing
/// away round-off.
pub fn split_big_gamma(big: &CMat) -> BdGState {
    let d = big.nrows() / 2;
    let mut gamma = CMat::from_fn(d, d, |i, j| big[(i, j)]);
    hermitize(&mut gamma);
    let alpha = CMat::from_fn(d, d, |i, j| (big[(i, j + d)] + big[(j, i + d)]) * 0.5);
    BdGState { gamma, alpha }
}

/// `J*XJ` for `J = [[0, 1], [−1, 0]]`.
pub fn j_conjugate(x: &CMat) -> CMat {
    let d = x.nrows() / 2;
    CMat::from_fn(2 * d, 2 * d, |i, j| {
        let (bi, ii) = (i / d, i % d);
        let (bj, jj) = (j / d, j % d);
        // (J*XJ)_{ab} = s · X_{a', b'} with a' = 1 − a, b' = 1 − b and sign −1 off the diagonal blocks
        let v = x[((1 - bi) * d + ii, (1 - bj) * d + jj)];
        if bi == bj {
            v
        } else {
            -v
        }
    })
}

/// `max |J*ΓJ − (1 − Γ̄)|`.
pub fn gamma_symmetry_defect(big: &CMat) -> f64 {
    let jg = j_conjugate(big);
    let n = big.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let one = if i == j { 1.0 } else { 0.0 };
            let target = c64::new(one, 0.0) - big[(i, j)].conj();
            m = m.max((jg[(i, j)] - target).norm());
        }
    }
    m
}

/// `max |J*ΛJ + Λ̄|`.
pub fn particle_hole_defect(lam: &CMat) -> f64 {
    let jl = j_conjugate(lam);
    let n = lam.nrows();
    let mut m: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            m = m.max((jl[(i, j)] + lam[(i, j)].conj()).norm());
        }
    }
    m
}

/// Admissibility diagnostics of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// Smallest eigenvalue of `Γ`.
    pub big_min: f64,
    /// Largest eigenvalue of `Γ`.
    pub big_max: f64,
    /// `max |α − αᵀ|`.
    pub alpha_asymmetry: f64,
    /// `λ_max(αα* − γ(1 − γ))`.
    pub pair_bound: f64,
}

impl Admissibility {
    /// Passes the state invariants with tolerance `tol` on eigenvalues.
    pub fn ok(&self, tol: f64) -> bool {
        self.big_min >= -tol && self.big_max <= 1.0 + tol && self.alpha_asymmetry <= 1e-10 && self.pair_bound <= 1e-9
    }
}

/// Computes [`Admissibility`].
pub fn admissibility(s: &BdGState) -> Result<Admissibility> {
    let big = assemble_big_gamma(s)?;
    let spec = diagonalize(&big)?;
    let d = s.dim();
    let mut asym: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            asym = asym.max((s.alpha[(i, j)] - s.alpha[(j, i)]).norm());
        }
    }
    let aa = &s.alpha * s.alpha.adjoint();
    let gg = &s.gamma * &s.gamma;
    let mut m = CMat::from_fn(d, d, |i, j| aa[(i, j)] - s.gamma[(i, j)] + gg[(i, j)]);
    hermitize(&mut m);
    let top = diagonalize(&m)?.values.last().copied().unwrap_or(0.0);
    Ok(Admissibility {
        big_min: spec.values[0],
        big_max: *spec.values.last().unwrap_or(&0.0),
        alpha_asymmetry: asym,
        pair_bound: top,
    })
}

/// Entrywise `v♯X`.
pub fn v_sharp(v: &PairPotential, x: &CMat) -> CMat {
    CMat::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * v.between(i, j))
}

/// Mean-field one-particle operator `h_{γa} − μ`.
pub fn one_particle_hamiltonian(model: &Model, s: &BdGState, gauge: &Gauge, mu: f64) -> CMat {
    let d = model.dim();
    let mut h = gauge.kinetic.clone();
    if model.interaction.direct {
        let diag: Vec<f64> = (0..d).map(|i| s.gamma[(i, i)].re).collect();
        for a in 0..d {
            let u: f64 = (0..d).map(|b| model.v.between(a, b) * diag[b]).sum();
            h[(a, a)] += c64::new(u, 0.0);
        }
    }
    if model.interaction.exchange {
        for a in 0..d {
            for b in 0..d {
                h[(a, b)] -= s.gamma[(a, b)] * model.v.between(a, b);
            }
        }
    }
    for a in 0..d {
        h[(a, a)] -= c64::new(mu, 0.0);
    }
    hermitize(&mut h);
    h
}

/// `Λ_{Γa} = [[h, v♯α], [(v♯α)*, −h̄]]`.
pub fn effective_hamiltonian(model: &Model, s: &BdGState, gauge: &Gauge, th: &Thermo) -> CMat {
    let h = one_particle_hamiltonian(model, s, gauge, th.mu);
    let delta = v_sharp(&model.v, &s.alpha);
    let d = h.nrows();
    let minus_hbar = CMat::from_fn(d, d, |i, j| -h[(i, j)].conj());
    block(&h, &delta, &minus_hbar)
}

/// `f_T` applied to a decomposed `Λ`, split into `(γ, α)`.
pub fn gibbs_from_spectrum(spec: &SpectralData, t: f64) -> BdGState {
    let occ: Vec<f64> = spec.values.iter().map(|&e| fermi(t, e)).collect();
    split_big_gamma(&space::reconstruct(spec, &occ))
}

/// The Gibbs map `Γ ↦ f_T(Λ_{Γa})`; also returns the spectrum of `Λ`.
pub fn gibbs_map(model: &Model, s: &BdGState, gauge: &Gauge, th: &Thermo) -> Result<(BdGState, SpectralData)> {
    let lam = effective_hamiltonian(model, s, gauge, th);
    let spec = diagonalize(&lam)?;
    Ok((gibbs_from_spectrum(&spec, th.t), spec))
}

/// Terms of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `Tr(−Δ_a γ)`.
    pub kinetic: f64,
    /// `½∫ρ(v*ρ)`.
    pub direct: f64,
    /// `−½Tr((v♯γ)γ)`, zero unless enabled.
    pub exchange: f64,
    /// `½Tr(α*(v♯α))`.
    pub pairing: f64,
    /// `½∫|curl e|² + ½b²|Ω|`.
    pub field: f64,
}

impl EnergyParts {
    /// Sum of all terms.
    pub fn total(&self) -> f64 {
        self.kinetic + self.direct + self.exchange + self.pairing + self.field
    }
}

/// Evaluates the energy functional term by term.
pub fn energy_parts(model: &Model, s: &BdGState, gauge: &Gauge) -> EnergyParts {
    let d = model.dim();
    let mut kinetic = 0.0;
    for i in 0..d {
        for j in 0..d {
            kinetic += (gauge.kinetic[(i, j)] * s.gamma[(j, i)]).re;
        }
    }
    let diag: Vec<f64> = (0..d).map(|i| s.gamma[(i, i)].re).collect();
    let mut direct = 0.0;
    let (mut exchange, mut pairing) = (0.0, 0.0);
    for a in 0..d {
        for b in 0..d {
            let v = model.v.between(a, b);
            if model.interaction.direct {
                direct += 0.5 * v * diag[a] * diag[b];
            }
            if model.interaction.exchange {
                exchange -= 0.5 * v * s.gamma[(a, b)].norm_sqr();
            }
            pairing += 0.5 * v * s.alpha[(a, b)].norm_sqr();
        }
    }
    let b = model.flux.b();
    let field = field::field_energy(&model.grid, &gauge.e) + 0.5 * b * b * model.grid.lattice().area();
    EnergyParts { kinetic, direct, exchange, pairing, field }
}

/// Total energy.
pub fn energy(model: &Model, s: &BdGState, gauge: &Gauge) -> f64 {
    energy_parts(model, s, gauge).total()
}

/// `g(λ) = −λ ln λ − (1 − λ) ln(1 − λ)` with `0 ln 0 = 0`.
pub fn g_entropy(lam: f64) -> f64 {
    xlogx_neg(lam) + xlogx_neg(1.0 - lam)
}

/// `s(λ) = −2λ ln λ`.
pub fn s_entropy(lam: f64) -> f64 {
    2.0 * xlogx_neg(lam)
}

fn xlogx_neg(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * libm::log(x)
    }
}

/// Checks and clips eigenvalues of `Γ` into `[0, 1]`.
pub fn clipped_occupations(values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&l| {
            if !(-1e-10..=1.0 + 1e-10).contains(&l) {
                Err(Error::Admissibility(alloc::format!("eigenvalue {l} of Gamma outside [0, 1]")))
            } else {
                Ok(l.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// `S = Tr g(Γ)` from the eigenvalues of `Γ`.
pub fn entropy_of_values(values: &[f64]) -> Result<f64> {
    Ok(clipped_occupations(values)?.iter().map(|&l| g_entropy(l)).sum())
}

/// `S(Γ) = Tr g(Γ)` over the full `2d×2d` matrix.
pub fn entropy(s: &BdGState) -> Result<f64> {
    let spec = diagonalize(&assemble_big_gamma(s)?)?;
    entropy_of_values(&spec.values)
}

/// `Tr s(Γ)`; equals [`entropy`] for admissible states.
pub fn entropy_s_form(s: &BdGState) -> Result<f64> {
    let spec = diagonalize(&assemble_big_gamma(s)?)?;
    Ok(clipped_occupations(&spec.values)?.iter().map(|&l| s_entropy(l)).sum())
}

/// `F_T = E − (T/2) Tr g(Γ) − μ Tr γ` given a precomputed entropy.
pub fn free_energy_with_entropy(model: &Model, s: &BdGState, gauge: &Gauge, th: &Thermo, entropy: f64) -> f64 {
    energy(model, s, gauge) - 0.5 * th.t * entropy - th.mu * s.particle_number()
}

/// `F_T = E − (T/2) Tr g(Γ) − μ Tr γ`.
pub fn free_energy(model: &Model, s: &BdGState, gauge: &Gauge, th: &Thermo) -> Result<f64> {
    let e = entropy(s)?;
    Ok(free_energy_with_entropy(model, s, gauge, th, e))
}

/// `Tr(g′(Γ) Γ′)` for the tangent `Γ′ = [[γ′, α′], [α′*, −γ̄′]]`, with
/// `g′(λ) = ln((1 − λ)/λ)`. Needs `0 < Γ < 1`.
pub fn entropy_derivative(s: &BdGState, ds: &BdGState) -> Result<f64> {
    let d = s.dim();
    let spec = diagonalize(&assemble_big_gamma(s)?)?;
    if spec.values.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
        return Err(Error::Admissibility("entropy derivative needs 0 < Gamma < 1".into()));
    }
    let gp = space::func_calc_spectral(&spec, |l| libm::log((1.0 - l) / l))?;
    let minus_bar = CMat::from_fn(d, d, |i, j| -ds.gamma[(i, j)].conj());
    let tangent = block(&ds.gamma, &ds.alpha, &minus_bar);
    let mut tr = 0.0;
    for i in 0..2 * d {
        for j in 0..2 * d {
            tr += (gp[(i, j)] * tangent[(j, i)]).re;
        }
    }
    Ok(tr)
}
