//! The pairing Hessian `L = K + ½v♯` of the free energy at the normal state,
//! on a rank-`M` truncation of the Hilbert–Schmidt space.
//!
//! Pairing kernels are expanded as `α(x, y) = Σ A_ij u_i(x) u_j(y)` in the
//! lowest `M` eigenvectors `u_i` of `h = −Δ_{a_b} + ξ − μ`, which makes `K`
//! diagonal: `K_ij = (e_i + e_j)/(tanh(e_i/2T) + tanh(e_j/2T))`. With these
//! conventions `F_T(Γ + εφ(α)) = F_T(Γ) + ε²⟨α, Lα⟩ + O(ε⁴)`.
//!
//! The operator is restricted to symmetric kernels, spanned by
//! `s_ij = (e_ij + e_ji)/√2` for `i < j` and `e_ii`.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::normal::{normal_state_from, LandauProblem, NormalState};
use crate::potential::PairPotential;
use crate::space::{diagonalize, func_calc, hermitize};
use crate::state::{Model, ModelSpec, Thermo};
use crate::{c64, CMat, Error, Result};

const LN2: f64 = core::f64::consts::LN_2;

fn ln_cosh(x: f64) -> f64 {
    let a = libm::fabs(x);
    a + libm::log1p(libm::exp(-2.0 * a)) - LN2
}

/// `ln(u / sinh u)`, even in `u`.
fn ln_u_over_sinh(u: f64) -> f64 {
    let a = libm::fabs(u);
    if a < 1e-3 {
        let u2 = a * a;
        libm::log1p(-u2 / 6.0 + 7.0 * u2 * u2 / 360.0)
    } else if a < 20.0 {
        libm::log(a / libm::sinh(a))
    } else {
        libm::log(a) - a - libm::log1p(-libm::exp(-2.0 * a)) + LN2
    }
}

/// `f(s, t) = (s + t)/(tanh s + tanh t)`, continuously extended; `f >= 1`.
///
/// Evaluated as `cosh s · cosh t · u/sinh u` with `u = s + t` in log space,
/// which has no cancellation on the line `s + t = 0`.
pub fn scalar_f(s: f64, t: f64) -> f64 {
    libm::exp(ln_cosh(s) + ln_cosh(t) + ln_u_over_sinh(s + t))
}

/// `K(e_i, e_j) = 2T f(e_i/2T, e_j/2T)`.
pub fn k_entry(t: f64, ei: f64, ej: f64) -> f64 {
    2.0 * t * scalar_f(ei / (2.0 * t), ej / (2.0 * t))
}

/// Lowest `M` eigenvectors of `h_{Tb}` and their eigenvalues.
#[derive(Debug, Clone)]
pub struct HSBasis {
    /// `d×M`, orthonormal columns.
    pub vectors: CMat,
    /// Ascending eigenvalues `e_1 <= … <= e_M`.
    pub values: Vec<f64>,
}

impl HSBasis {
    /// Truncates the spectrum of `h_{Tb}` at rank `m`.
    pub fn from_normal(ns: &NormalState, m: usize) -> Result<Self> {
        let d = ns.problem.spectrum.dim();
        if m == 0 || m > d {
            return Err(Error::Parameter(alloc::format!("rank M={m} must lie in 1..={d}")));
        }
        let vectors = CMat::from_fn(d, m, |x, i| ns.h_vectors()[(x, i)]);
        let values = ns.h_values()[..m].to_vec();
        Ok(Self { vectors, values })
    }

    /// Truncation rank.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `α = U A Uᵀ` on the grid.
    pub fn lift(&self, a: &CMat) -> CMat {
        &self.vectors * a * self.vectors.transpose()
    }

    /// `A = U* α Ū`, the coefficients of the part of `α` inside the basis.
    pub fn project(&self, alpha: &CMat) -> CMat {
        self.vectors.adjoint() * alpha * self.vectors.conjugate()
    }
}

/// Index pairs `(i, j)`, `i <= j`, of the symmetric subspace.
pub fn symmetric_pairs(m: usize) -> Vec<(usize, usize)> {
    let mut p = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            p.push((i, j));
        }
    }
    p
}

fn pair_weight(i: usize, j: usize) -> f64 {
    if i == j {
        core::f64::consts::FRAC_1_SQRT_2
    } else {
        1.0
    }
}

/// Coefficient of `s_ij` for a symmetric `A`.
pub fn pair_coefficients(a: &CMat, pairs: &[(usize, usize)]) -> Vec<c64> {
    pairs
        .iter()
        .map(|&(i, j)| if i == j { a[(i, i)] } else { (a[(i, j)] + a[(j, i)]) * core::f64::consts::FRAC_1_SQRT_2 })
        .collect()
}

/// Symmetric `A` from coefficients of `s_ij`.
pub fn kernel_from_coefficients(m: usize, pairs: &[(usize, usize)], c: &[c64]) -> CMat {
    let mut a = CMat::zeros(m, m);
    for (&(i, j), &z) in pairs.iter().zip(c) {
        if i == j {
            a[(i, i)] = z;
        } else {
            let w = z * core::f64::consts::FRAC_1_SQRT_2;
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
    }
    a
}

/// `v♯` in the symmetric pair basis of a fixed set of one-particle vectors.
#[derive(Debug, Clone)]
pub struct PairMatrix {
    /// Basis rank `M`.
    pub m: usize,
    /// Pair labels of the rows and columns.
    pub pairs: Vec<(usize, usize)>,
    /// `⟨s_p, v♯ s_q⟩`.
    pub matrix: CMat,
}

/// Builds `⟨s_ij, v♯ s_kl⟩` from `V(ij, kl) = Σ_xy P_ik(x) v(x − y) P_jl(y)`,
/// `P_ik = ū_i u_k`.
pub fn pair_matrix(vectors: &CMat, v: &PairPotential) -> PairMatrix {
    let (d, m) = (vectors.nrows(), vectors.ncols());
    let vg = CMat::from_fn(d, d, |x, y| c64::new(v.between(x, y), 0.0));
    // rows (j, l) of P as a d×M² matrix (column j·M + l)
    let pt = CMat::from_fn(d, m * m, |x, c| vectors[(x, c / m)].conj() * vectors[(x, c % m)]);
    let pairs = symmetric_pairs(m);
    let mut pos = alloc::vec![0usize; m * m];
    for (p, &(i, j)) in pairs.iter().enumerate() {
        pos[i * m + j] = p;
    }
    let np = pairs.len();
    let mut out = CMat::zeros(np, np);
    for i in 0..m {
        let ci = CMat::from_fn(m, d, |k, x| vectors[(x, i)].conj() * vectors[(x, k)]);
        let wi = &ci * &vg;
        let ri = &wi * &pt;
        // ri[(k, j·M + l)] = V(ij, kl)
        for j in i..m {
            let p = pos[i * m + j];
            for k in 0..m {
                for l in k..m {
                    let q = pos[k * m + l];
                    let val = ri[(k, j * m + l)] + ri[(l, j * m + k)];
                    out[(p, q)] = val * (pair_weight(i, j) * pair_weight(k, l));
                }
            }
        }
    }
    hermitize(&mut out);
    PairMatrix { m, pairs, matrix: out }
}

/// `L = K + ½v♯` at one temperature, on the symmetric subspace.
#[derive(Debug, Clone)]
pub struct StabilityOperator {
    /// Temperature.
    pub t: f64,
    /// Eigenvalues `e_i` of `h_{Tb}` in the truncated basis.
    pub values: Vec<f64>,
    /// `K_ij`, row-major `M×M`.
    pub kdiag: Vec<f64>,
    /// `v♯` on the symmetric subspace.
    pub pair: Arc<PairMatrix>,
    /// Pair modes kept in the eigenproblem; modes with `K` above the cutoff
    /// are decoupled because `L >= K − ½‖v‖_∞` there.
    pub kept: Vec<usize>,
    /// `e_M − e_1 >= 6 max(T, ‖v‖_∞)`.
    pub coverage_ok: bool,
    /// `‖v‖_∞`.
    pub v_sup: f64,
}

/// The lowest eigenpair of `L`.
#[derive(Debug, Clone)]
pub struct LowestMode {
    /// `λ_min(L)`.
    pub value: f64,
    /// Coefficients over all symmetric pairs (zero on decoupled ones).
    pub coefficients: Vec<c64>,
    /// Symmetric `M×M` kernel, unit Hilbert–Schmidt norm.
    pub kernel: CMat,
}

impl StabilityOperator {
    /// Assembles `L` from eigenvalues `e_i` of `h_{Tb}` and a pair matrix.
    pub fn new(t: f64, values: Vec<f64>, pair: Arc<PairMatrix>, v_sup: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Parameter("the stability operator needs T > 0".into()));
        }
        let m = values.len();
        if m != pair.m {
            return Err(Error::Shape("basis rank and pair matrix differ".into()));
        }
        let mut kdiag = Vec::with_capacity(m * m);
        for &ei in &values {
            for &ej in &values {
                kdiag.push(k_entry(t, ei, ej));
            }
        }
        let cut = 1e8 * v_sup.max(t).max(1.0);
        let kept = (0..pair.pairs.len())
            .filter(|&p| {
                let (i, j) = pair.pairs[p];
                kdiag[i * m + j] <= cut
            })
            .collect();
        let coverage_ok = values[m - 1] - values[0] >= 6.0 * t.max(v_sup);
        Ok(Self { t, values, kdiag, pair, kept, coverage_ok, v_sup })
    }

    /// Truncation rank `M`.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// `min K_ij`.
    pub fn k_min(&self) -> f64 {
        self.kdiag.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `K` of a symmetric pair index.
    pub fn k_of_pair(&self, p: usize) -> f64 {
        let (i, j) = self.pair.pairs[p];
        self.kdiag[i * self.rank() + j]
    }

    /// Dense `L` restricted to the given pair indices.
    pub fn dense_on(&self, idx: &[usize]) -> CMat {
        let mut l = CMat::from_fn(idx.len(), idx.len(), |a, b| self.pair.matrix[(idx[a], idx[b])] * 0.5);
        for (a, &p) in idx.iter().enumerate() {
            l[(a, a)] += c64::new(self.k_of_pair(p), 0.0);
        }
        hermitize(&mut l);
        l
    }

    /// Dense `L` on the whole symmetric subspace.
    pub fn dense(&self) -> CMat {
        let all: Vec<usize> = (0..self.pair.pairs.len()).collect();
        self.dense_on(&all)
    }

    /// `⟨A, L A⟩` for a symmetric `M×M` kernel.
    pub fn quadratic_form(&self, a: &CMat) -> f64 {
        let c = pair_coefficients(a, &self.pair.pairs);
        let n = c.len();
        let mut q = 0.0;
        for p in 0..n {
            q += self.k_of_pair(p) * c[p].norm_sqr();
            let mut row = c64::new(0.0, 0.0);
            for (r, &cr) in c.iter().enumerate() {
                row += self.pair.matrix[(p, r)] * cr;
            }
            q += 0.5 * (c[p].conj() * row).re;
        }
        q
    }

    /// Lowest eigenvalue and its kernel.
    pub fn lowest_eigenvalue(&self) -> Result<LowestMode> {
        let spec = diagonalize(&self.dense_on(&self.kept))?;
        let value = *spec.values.first().ok_or_else(|| Error::Numerical("empty stability operator".into()))?;
        let mut coefficients = alloc::vec![c64::new(0.0, 0.0); self.pair.pairs.len()];
        for (a, &p) in self.kept.iter().enumerate() {
            coefficients[p] = spec.vectors[(a, 0)];
        }
        // fix the global phase so that the largest coefficient is real positive
        let big =
            coefficients.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(c64::new(1.0, 0.0));
        if big.norm() > 0.0 {
            let ph = big.conj() * (1.0 / big.norm());
            for z in &mut coefficients {
                *z *= ph;
            }
        }
        let kernel = kernel_from_coefficients(self.rank(), &self.pair.pairs, &coefficients);
        Ok(LowestMode { value, coefficients, kernel })
    }

    /// Matrix of `A ↦ ũAũᵀ` on the symmetric subspace for an `M×M` unitary `ũ`.
    pub fn pair_action(&self, u: &CMat) -> CMat {
        let pairs = &self.pair.pairs;
        let n = pairs.len();
        let m = self.rank();
        let mut out = CMat::zeros(n, n);
        for (q, &(k, l)) in pairs.iter().enumerate() {
            let mut s = CMat::zeros(m, m);
            let w = if k == l { 1.0 } else { core::f64::consts::FRAC_1_SQRT_2 };
            s[(k, l)] += c64::new(w, 0.0);
            if k != l {
                s[(l, k)] += c64::new(w, 0.0);
            }
            let x = u * &s * u.transpose();
            let c = pair_coefficients(&x, pairs);
            for p in 0..n {
                out[(p, q)] = c[p];
            }
        }
        out
    }
}

/// Cached ingredients of `L` for one model and rank; `L` at any `(T, μ)`
/// follows from the normal state and a diagonal update.
#[derive(Debug, Clone)]
pub struct StabilityModel {
    /// Spectral data of `−Δ_{a_b}`.
    pub problem: LandauProblem,
    /// `v♯` in the pair basis of the lowest `M` Landau vectors.
    pub pair: Arc<PairMatrix>,
    /// `‖v‖_∞`.
    pub v_sup: f64,
    /// Truncation rank.
    pub m: usize,
}

impl StabilityModel {
    /// Diagonalizes `−Δ_{a_b}` and builds the pair matrix at rank `m`.
    pub fn new(model: &Model, m: usize) -> Result<Self> {
        let problem = LandauProblem::new(model)?;
        let d = problem.spectrum.dim();
        if m == 0 || m > d {
            return Err(Error::Parameter(alloc::format!("rank M={m} must lie in 1..={d}")));
        }
        let u = CMat::from_fn(d, m, |x, i| problem.spectrum.vectors[(x, i)]);
        let pair = Arc::new(pair_matrix(&u, &model.v));
        Ok(Self { problem, pair, v_sup: model.v.sup_norm(), m })
    }

    /// Normal state at `th`.
    pub fn normal_state(&self, th: &Thermo) -> Result<NormalState> {
        normal_state_from(self.problem.clone(), th)
    }

    /// `L` at the normal state `ns` (which must come from the same model).
    pub fn operator_for(&self, ns: &NormalState) -> Result<StabilityOperator> {
        let values = ns.h_values()[..self.m].to_vec();
        StabilityOperator::new(ns.thermo.t, values, self.pair.clone(), self.v_sup)
    }

    /// Normal state and `L` at `th`.
    pub fn operator(&self, th: &Thermo) -> Result<(NormalState, StabilityOperator)> {
        let ns = self.normal_state(th)?;
        let op = self.operator_for(&ns)?;
        Ok((ns, op))
    }

    /// `λ_min(L)` at `th`.
    pub fn lambda_min(&self, th: &Thermo) -> Result<f64> {
        Ok(self.operator(th)?.1.lowest_eigenvalue()?.value)
    }

    /// The basis `u_1..u_M` as an [`HSBasis`] at the normal state `ns`.
    pub fn basis(&self, ns: &NormalState) -> Result<HSBasis> {
        HSBasis::from_normal(ns, self.m)
    }

    /// Bisection for `T_c` on `[tlo, thi]`.
    pub fn critical_temperature(&self, mu: f64, tlo: f64, thi: f64, tol: f64) -> Result<TcResult> {
        critical_temperature_with(|t| self.lambda_min(&Thermo::new(t, mu)?), tlo, thi, tol)
    }
}

/// Birman–Schwinger family `G(E) = W(K + E)^{-1}W`, `W² = −½v♯`.
#[derive(Debug, Clone)]
pub struct BirmanSchwinger {
    k: Vec<f64>,
    w: CMat,
}

impl BirmanSchwinger {
    /// Builds `W` on the pair modes kept by `op`; requires `v <= 0`.
    pub fn new(op: &StabilityOperator, v: &PairPotential) -> Result<Self> {
        if !v.is_nonpositive() {
            return Err(Error::Hypothesis("the Birman-Schwinger check needs v <= 0".into()));
        }
        let idx = &op.kept;
        let mut neg = CMat::from_fn(idx.len(), idx.len(), |a, b| -op.pair.matrix[(idx[a], idx[b])] * 0.5);
        hermitize(&mut neg);
        let w = func_calc(&neg, |x| libm::sqrt(x.max(0.0)))?;
        let k = idx.iter().map(|&p| op.k_of_pair(p)).collect();
        Ok(Self { k, w })
    }

    /// `G(E)`.
    pub fn g(&self, e: f64) -> CMat {
        let n = self.k.len();
        let scaled = CMat::from_fn(n, n, |a, b| self.w[(a, b)] * (1.0 / (self.k[a] + e)));
        let mut g = &self.w * &scaled;
        hermitize(&mut g);
        g
    }

    /// `λ_max(G(E))`.
    pub fn lambda_max(&self, e: f64) -> Result<f64> {
        Ok(*diagonalize(&self.g(e))?.values.last().unwrap_or(&0.0))
    }
}

/// Outcome of the Birman–Schwinger cross-check.
#[derive(Debug, Clone, PartialEq)]
pub struct BsReport {
    /// `E* = −λ_min(L)`.
    pub e_star: f64,
    /// `λ_max(G(E*))`, which should be 1.
    pub lambda_max_at_e_star: f64,
    /// `(E, λ_max(G(E)))` on the test grid.
    pub grid: Vec<(f64, f64)>,
    /// Strict decrease along the grid.
    pub monotone: bool,
    /// `λ_max(G(10³‖v‖_∞))`.
    pub large_e: f64,
}

/// Checks `λ_min(L) = −E* ⟺ λ_max(G(E*)) = 1` and the monotonicity of `G`.
pub fn birman_schwinger_check(op: &StabilityOperator, v: &PairPotential, e_grid: &[f64]) -> Result<BsReport> {
    let bs = BirmanSchwinger::new(op, v)?;
    let lowest = op.lowest_eigenvalue()?;
    if !(lowest.value < 0.0) {
        return Err(Error::Hypothesis(alloc::format!("lambda_min(L) = {} is not negative", lowest.value)));
    }
    let e_star = -lowest.value;
    let lambda_max_at_e_star = bs.lambda_max(e_star)?;
    let mut grid = Vec::with_capacity(e_grid.len());
    for &e in e_grid {
        grid.push((e, bs.lambda_max(e)?));
    }
    let monotone = grid.windows(2).all(|w| w[1].1 < w[0].1);
    let large_e = bs.lambda_max(1e3 * v.sup_norm().max(f64::MIN_POSITIVE))?;
    Ok(BsReport { e_star, lambda_max_at_e_star, grid, monotone, large_e })
}

/// `⟨u, G(0) u⟩` for `u ∝ (w♯)^{-1}(φ ⊗ φ)`, `φ` the lowest eigenvector of
/// `h_{Tb}`, computed on the full grid: `1/(K(e_1, e_1)·‖(φ⊗φ)/w‖²)` with
/// `w = √(−v/2)`.
pub fn bs_test_quantity(ns: &NormalState, v: &PairPotential) -> Result<f64> {
    let d = ns.problem.spectrum.dim();
    let phi: Vec<f64> = (0..d).map(|x| ns.h_vectors()[(x, 0)].norm_sqr()).collect();
    let mut norm2 = 0.0;
    for x in 0..d {
        for y in 0..d {
            let w2 = -0.5 * v.between(x, y);
            if !(w2 > 0.0) {
                return Err(Error::Hypothesis("the test quantity needs v < 0 everywhere".into()));
            }
            norm2 += phi[x] * phi[y] / w2;
        }
    }
    let e1 = ns.h_values()[0];
    Ok(1.0 / (k_entry(ns.thermo.t, e1, e1) * norm2))
}

/// Result of the `T_c` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TcVerdict {
    /// Sign change of `λ_min(L)` located at this temperature.
    Critical(f64),
    /// `λ_min(L) > 0` at both ends.
    StableEverywhere,
    /// `λ_min(L) < 0` at both ends.
    UnstableEverywhere,
}

/// `T_c` with the final bracket and every evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct TcResult {
    /// Verdict.
    pub verdict: TcVerdict,
    /// Final bracket `(T, λ_min)` on the unstable side.
    pub lo: (f64, f64),
    /// Final bracket `(T, λ_min)` on the stable side.
    pub hi: (f64, f64),
    /// All `(T, λ_min)` evaluations in order.
    pub trace: Vec<(f64, f64)>,
}

/// Bisection on the sign of `lam(T)` until the bracket is narrower than `tol`.
pub fn critical_temperature_with(
    mut lam: impl FnMut(f64) -> Result<f64>,
    tlo: f64,
    thi: f64,
    tol: f64,
) -> Result<TcResult> {
    if !(tlo > 0.0 && thi > tlo) {
        return Err(Error::Parameter(alloc::format!("invalid temperature bracket [{tlo}, {thi}]")));
    }
    let mut trace = Vec::new();
    let mut eval = |t: f64, trace: &mut Vec<(f64, f64)>| -> Result<f64> {
        let l = lam(t)?;
        trace.push((t, l));
        Ok(l)
    };
    let (mut a, mut fa) = (tlo, eval(tlo, &mut trace)?);
    let (mut b, mut fb) = (thi, eval(thi, &mut trace)?);
    if fa >= 0.0 && fb >= 0.0 {
        return Ok(TcResult { verdict: TcVerdict::StableEverywhere, lo: (a, fa), hi: (b, fb), trace });
    }
    if fa < 0.0 && fb < 0.0 {
        return Ok(TcResult { verdict: TcVerdict::UnstableEverywhere, lo: (a, fa), hi: (b, fb), trace });
    }
    if fa >= 0.0 {
        return Err(Error::Numerical("stable at low and unstable at high temperature".into()));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let fm = eval(mid, &mut trace)?;
        if fm < 0.0 {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(TcResult { verdict: TcVerdict::Critical(0.5 * (a + b)), lo: (a, fa), hi: (b, fb), trace })
}

/// Finite-difference check of the quadratic expansion of `F_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    /// `Q = ⟨α, Lα⟩` on the full grid.
    pub q: f64,
    /// `(ε, D(ε))` with `D(ε) = [F_T(Γ + εφ(α)) − F_T(Γ)]/ε²`.
    pub d: Vec<(f64, f64)>,
    /// `|D(ε) − Q|` per `ε`.
    pub errors: Vec<f64>,
}

impl FdReport {
    /// `err(ε_{k+1})/err(ε_k)` for consecutive entries.
    pub fn ratios(&self) -> Vec<f64> {
        self.errors.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// `⟨α, (K + ½v♯)α⟩` with `K` built from the full spectrum of `h_{Tb}`.
pub fn full_quadratic_form(model: &Model, ns: &NormalState, alpha: &CMat) -> f64 {
    let u = ns.h_vectors();
    let e = ns.h_values();
    let a = u.adjoint() * alpha * u.conjugate();
    let d = e.len();
    let t = ns.thermo.t;
    let mut q = 0.0;
    for i in 0..d {
        for j in 0..d {
            let w = a[(i, j)].norm_sqr();
            if w > 0.0 {
                q += k_entry(t, e[i], e[j]) * w;
            }
        }
    }
    for x in 0..d {
        for y in 0..d {
            q += 0.5 * model.v.between(x, y) * alpha[(x, y)].norm_sqr();
        }
    }
    q
}

/// The kernel `α = U (G X G) Uᵀ` with `G = diag(f_i(1 − f_i))` in the
/// eigenbasis of `h_{Tb}`: `αα*` is then bounded by a multiple of
/// `[γ(1 − γ)]²`. `x` must be complex symmetric `d×d`.
pub fn al_cond_kernel(ns: &NormalState, x: &CMat) -> CMat {
    let u = ns.h_vectors();
    let g: Vec<f64> = ns
        .h_values()
        .iter()
        .map(|&e| {
            let f = crate::space::fermi(ns.thermo.t, e);
            f * (1.0 - f)
        })
        .collect();
    let d = g.len();
    let a = CMat::from_fn(d, d, |i, j| x[(i, j)] * (g[i] * g[j]));
    u * a * u.transpose()
}

/// Compares `[F_T(Γ + εφ(α)) − F_T(Γ)]/ε²` with `⟨α, Lα⟩`.
pub fn hessian_fd_check(model: &Model, ns: &NormalState, alpha: &CMat, eps: &[f64]) -> Result<FdReport> {
    use crate::state::{admissibility, free_energy, BdGState, Gauge};
    let gauge = Gauge::symmetric(model);
    let th = ns.thermo;
    let base = BdGState::normal(ns.gamma.clone());
    let f0 = free_energy(model, &base, &gauge, &th)?;
    let q = full_quadratic_form(model, ns, alpha);
    let mut d = Vec::with_capacity(eps.len());
    let mut errors = Vec::with_capacity(eps.len());
    for &e in eps {
        let a = CMat::from_fn(alpha.nrows(), alpha.ncols(), |i, j| alpha[(i, j)] * e);
        let s = BdGState { gamma: ns.gamma.clone(), alpha: a };
        if !admissibility(&s)?.ok(1e-10) {
            return Err(Error::Admissibility(alloc::format!("perturbation with eps={e} leaves the admissible set")));
        }
        let de = (free_energy(model, &s, &gauge, &th)? - f0) / (e * e);
        d.push((e, de));
        errors.push(libm::fabs(de - q));
    }
    Ok(FdReport { q, d, errors })
}

/// One cell of a `(b, T)` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRow {
    /// Field.
    pub b: f64,
    /// Temperature.
    pub t: f64,
    /// Normal-state shift.
    pub xi: f64,
    /// `λ_min(L)`.
    pub lambda_min: f64,
    /// `"unstable"`, `"stable"` or `"error"`.
    pub verdict: &'static str,
    /// Failure message of the cell, if any.
    pub error: Option<String>,
}

/// All temperatures at one field, sharing the cached pair matrix.
pub fn phase_row(spec: &ModelSpec, b: f64, ts: &[f64], mu: f64, m: usize) -> Vec<PhaseRow> {
    let fail = |t: f64, e: Error| PhaseRow {
        b,
        t,
        xi: f64::NAN,
        lambda_min: f64::NAN,
        verdict: "error",
        error: Some(alloc::format!("{e}")),
    };
    let sm = match spec.at_field(b).and_then(|model| StabilityModel::new(&model, m)) {
        Ok(sm) => sm,
        Err(e) => return ts.iter().map(|&t| fail(t, e.clone())).collect(),
    };
    ts.iter()
        .map(|&t| {
            let cell = Thermo::new(t, mu).and_then(|th| {
                let (ns, op) = sm.operator(&th)?;
                Ok((ns.xi, op.lowest_eigenvalue()?.value))
            });
            match cell {
                Ok((xi, l)) => PhaseRow {
                    b,
                    t,
                    xi,
                    lambda_min: l,
                    verdict: if l < 0.0 { "unstable" } else { "stable" },
                    error: None,
                },
                Err(e) => fail(t, e),
            }
        })
        .collect()
}

/// Sequential sweep over `bs × ts`, rows ordered by `b` then `T`.
pub fn phase_diagram(spec: &ModelSpec, bs: &[f64], ts: &[f64], mu: f64, m: usize) -> Vec<PhaseRow> {
    bs.iter().flat_map(|&b| phase_row(spec, b, ts, mu, m)).collect()
}
