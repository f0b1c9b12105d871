//! Grid discretization of the magnetically periodic one-particle space.
//!
//! A function on the cell is stored by its values at the grid points
//! `x_jk = (j/N)ω1 + (k/N)ω2`, `0 <= j, k < N`, flattened as `j·N + k`.
//! Values outside the cell follow from `f(x + s) = e^{iχ_s(x)} f(x)`.
//! Unit vectors of this basis are orthonormal in `L²(Ω)` after division by
//! `√cellWeight`, so matrix traces are traces per cell.

use alloc::vec;
use alloc::vec::Vec;

use faer::Side;

use crate::field::VectorField;
use crate::geometry::{gauge_line_integral, Cocycle, FluxSector, Lattice, Vec2};
use crate::{c64, CMat, Error, Result};

/// `e^{iθ}`.
pub fn cis(theta: f64) -> c64 {
    c64::new(libm::cos(theta), libm::sin(theta))
}

/// One stencil direction in index space together with its weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    /// Index step along `ω1/N`.
    pub dj: i64,
    /// Index step along `ω2/N`.
    pub dk: i64,
    /// Hopping weight (inverse squared length units).
    pub weight: f64,
}

/// N×N grid over the fundamental cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lattice: Lattice,
    n: usize,
    links: Vec<Link>,
}

/// Site reached from the cell by an unwrapped index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wrapped {
    /// Flat index of the representative inside the cell.
    pub index: usize,
    /// Lattice translation `p ω1 + q ω2` from the representative.
    pub p: i64,
    /// See `p`.
    pub q: i64,
}

impl Grid {
    /// Builds the grid and its Laplacian stencil.
    ///
    /// The stencil uses the two basis directions plus, for a non-orthogonal
    /// basis, the shorter diagonal; weights solve `Σ w δδᵀ = I` so the
    /// stencil is consistent with the Euclidean Laplacian.
    pub fn new(lattice: Lattice, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::Parameter("grid needs N >= 4".into()));
        }
        let h = 1.0 / n as f64;
        let e1 = h * lattice.omega1();
        let e2 = h * lattice.omega2();
        let c = e1.dot(e2);
        let scale = e1.dot(e1).max(e2.dot(e2));
        let mut links = Vec::with_capacity(3);
        if libm::fabs(c) <= 1e-14 * scale {
            links.push(Link { dj: 1, dk: 0, weight: 1.0 / e1.dot(e1) });
            links.push(Link { dj: 0, dk: 1, weight: 1.0 / e2.dot(e2) });
        } else {
            let sign = if c > 0.0 { -1 } else { 1 };
            let e3 = e1 + (sign as f64) * e2;
            let w = solve_stencil([e1, e2, e3])?;
            links.push(Link { dj: 1, dk: 0, weight: w[0] });
            links.push(Link { dj: 0, dk: 1, weight: w[1] });
            links.push(Link { dj: 1, dk: sign, weight: w[2] });
        }
        Ok(Self { lattice, n, links })
    }

    /// Points per basis direction.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points `N²`.
    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    /// The lattice of the cell.
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// Quadrature weight `|Ω|/N²`.
    pub fn cell_weight(&self) -> f64 {
        self.lattice.area() / (self.dim() as f64)
    }

    /// Stencil directions.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Position of the (possibly out-of-cell) index pair.
    pub fn point(&self, j: i64, k: i64) -> Vec2 {
        let h = 1.0 / self.n as f64;
        self.lattice.vector(j as f64 * h, k as f64 * h)
    }

    /// Position of a flat in-cell index.
    pub fn point_of(&self, index: usize) -> Vec2 {
        let (j, k) = self.split(index);
        self.point(j as i64, k as i64)
    }

    /// Flat index of an in-cell pair.
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n + k
    }

    /// In-cell pair of a flat index.
    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.n, index % self.n)
    }

    /// Reduces an index pair into the cell.
    pub fn wrap(&self, j: i64, k: i64) -> Wrapped {
        let n = self.n as i64;
        let (p, jr) = (j.div_euclid(n), j.rem_euclid(n));
        let (q, kr) = (k.div_euclid(n), k.rem_euclid(n));
        Wrapped { index: self.index(jr as usize, kr as usize), p, q }
    }
}

fn solve_stencil(e: [Vec2; 3]) -> Result<[f64; 3]> {
    // rows: xx, xy, yy components of Σ w_i e_i e_iᵀ = I
    let a = [
        [e[0].x * e[0].x, e[1].x * e[1].x, e[2].x * e[2].x],
        [e[0].x * e[0].y, e[1].x * e[1].y, e[2].x * e[2].y],
        [e[0].y * e[0].y, e[1].y * e[1].y, e[2].y * e[2].y],
    ];
    let rhs = [1.0, 0.0, 1.0];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det3(a);
    if d == 0.0 {
        return Err(Error::Parameter("degenerate stencil".into()));
    }
    let mut w = [0.0; 3];
    for (c, wc) in w.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = rhs[r];
        }
        *wc = det3(m) / d;
    }
    if w.iter().any(|&x| x < 0.0) {
        return Err(Error::Parameter("lattice basis too skewed for a positive nearest-neighbour stencil".into()));
    }
    Ok(w)
}

/// Phase and weight of one directed hop `x → x + δ`, folded into the cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hop {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    /// `e^{−iθ(x, y)} e^{iχ_t(y')}`; the Laplacian entry is `−weight·phase`.
    pub phase: c64,
    /// Cartesian displacement `y − x`.
    pub delta: Vec2,
}

/// All forward hops (one per link and site), with the field `a_b + e`.
pub(crate) fn hops(grid: &Grid, flux: &FluxSector, e: Option<&VectorField>) -> Vec<Hop> {
    let cocycle = Cocycle::new(*grid.lattice(), *flux);
    let n = grid.n() as i64;
    let mut out = Vec::with_capacity(grid.dim() * grid.links().len());
    for j in 0..n {
        for k in 0..n {
            let from = grid.index(j as usize, k as usize);
            let x = grid.point(j, k);
            for link in grid.links() {
                let (yj, yk) = (j + link.dj, k + link.dk);
                let w = grid.wrap(yj, yk);
                let y = grid.point(yj, yk);
                let yr = grid.point_of(w.index);
                let mut theta = gauge_line_integral(flux.b(), x, y);
                if let Some(e) = e {
                    theta += 0.5 * (e.at(from) + e.at(w.index)).dot(y - x);
                }
                let chi = cocycle.eval_coefficients(w.p as f64, w.q as f64, yr);
                out.push(Hop { from, to: w.index, weight: link.weight, phase: cis(chi - theta), delta: y - x });
            }
        }
    }
    out
}

/// Makes `a` exactly Hermitian by averaging with its adjoint.
pub fn hermitize(a: &mut CMat) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = c64::new(a[(i, i)].re, 0.0);
        for j in 0..i {
            let m = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = m;
            a[(j, i)] = m.conj();
        }
    }
}

/// `max |A − A*|`.
pub fn hermitian_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d
}

/// `−Δ_a` for `a = a_b + e` by Peierls hopping with cocycle boundary phases.
pub fn magnetic_laplacian_with(grid: &Grid, flux: &FluxSector, e: Option<&VectorField>) -> CMat {
    let d = grid.dim();
    let mut h = CMat::zeros(d, d);
    for hop in hops(grid, flux, e) {
        h[(hop.from, hop.from)] += c64::new(hop.weight, 0.0);
        h[(hop.to, hop.to)] += c64::new(hop.weight, 0.0);
        h[(hop.from, hop.to)] -= hop.phase * hop.weight;
        h[(hop.to, hop.from)] -= hop.phase.conj() * hop.weight;
    }
    hermitize(&mut h);
    h
}

/// `−Δ_{a_b}` in the symmetric gauge.
pub fn magnetic_laplacian(grid: &Grid, flux: &FluxSector) -> CMat {
    magnetic_laplacian_with(grid, flux, None)
}

/// Eigenvalues (ascending) with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Eigenvectors, column `i` belongs to `values[i]`.
    pub vectors: CMat,
}

impl SpectralData {
    /// Dimension of the decomposed operator.
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn diagonalize(a: &CMat) -> Result<SpectralData> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(alloc::format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    let scale = a.norm_max().max(1.0);
    let defect = hermitian_defect(a);
    if defect > 1e-10 * scale {
        return Err(Error::Shape(alloc::format!("matrix not Hermitian (defect {defect:e})")));
    }
    let evd = a.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Numerical(alloc::format!("eigensolver: {e:?}")))?;
    let s = evd.S();
    let values = (0..a.nrows()).map(|i| s[i].re).collect();
    Ok(SpectralData { values, vectors: evd.U().to_owned() })
}

/// `V diag(values) V*`.
pub fn reconstruct(spec: &SpectralData, values: &[f64]) -> CMat {
    let v = &spec.vectors;
    let mut w = v.clone();
    for (j, &f) in values.iter().enumerate() {
        for i in 0..w.nrows() {
            w[(i, j)] *= f;
        }
    }
    let mut out = &w * v.adjoint();
    hermitize(&mut out);
    out
}

/// Functional calculus `f(A) = V f(Λ) V*` from a decomposition.
pub fn func_calc_spectral(spec: &SpectralData, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let mut vals = Vec::with_capacity(spec.dim());
    for &lam in &spec.values {
        let y = f(lam);
        if !y.is_finite() {
            return Err(Error::Evaluation { eigenvalue: lam });
        }
        vals.push(y);
    }
    Ok(reconstruct(spec, &vals))
}

/// Functional calculus of a Hermitian matrix.
pub fn func_calc(a: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    func_calc_spectral(&diagonalize(a)?, f)
}

/// Fermi-Dirac function `f_T(λ) = (1 + e^{λ/T})^{-1}`; the `T = 0` limit is
/// the step with value ½ at zero.
pub fn fermi(t: f64, lam: f64) -> f64 {
    if t <= 0.0 {
        return if lam < 0.0 {
            1.0
        } else if lam > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let x = lam / t;
    if x > 0.0 {
        let e = libm::exp(-x);
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + libm::exp(x))
    }
}

/// `den(A)(x) = A_xx / cellWeight`.
pub fn density(a: &CMat, grid: &Grid) -> Vec<f64> {
    let w = grid.cell_weight();
    (0..grid.dim()).map(|i| a[(i, i)].re / w).collect()
}

/// Trace of a matrix (sum of the diagonal).
pub fn trace(a: &CMat) -> c64 {
    (0..a.nrows().min(a.ncols())).fold(c64::new(0.0, 0.0), |acc, i| acc + a[(i, i)])
}

/// Current density `[−i∇_a, γ]₊(x, x)` on the grid, for `a = a_b + e`.
///
/// Each link carries `J = −∂E/∂θ`, the derivative of `Tr(−Δ_a γ)` with
/// respect to its phase; half of `J·δ` is booked at each endpoint. This is
/// the exact derivative of the kinetic energy with respect to `e`.
pub fn current(gamma: &CMat, grid: &Grid, flux: &FluxSector, e: Option<&VectorField>) -> Vec<Vec2> {
    let w = grid.cell_weight();
    let mut j = vec![Vec2::default(); grid.dim()];
    for hop in hops(grid, flux, e) {
        let jl = 2.0 * hop.weight * (hop.phase * gamma[(hop.to, hop.from)]).im;
        let contrib = (0.5 * jl / w) * hop.delta;
        j[hop.from] = j[hop.from] + contrib;
        j[hop.to] = j[hop.to] + contrib;
    }
    j
}

/// Magnetic translation by the grid vector `(p/N)ω1 + (q/N)ω2`:
/// `(u_s f)(x) = e^{−iχ_s(x)} f(x + s)`.
///
/// For lattice shifts this is the identity on magnetic-periodic functions.
pub fn magnetic_translation_steps(grid: &Grid, flux: &FluxSector, p: i64, q: i64) -> CMat {
    let cocycle = Cocycle::new(*grid.lattice(), *flux);
    let nn = grid.n() as f64;
    let (sp, sq) = (p as f64 / nn, q as f64 / nn);
    let d = grid.dim();
    let mut u = CMat::zeros(d, d);
    for j in 0..grid.n() {
        for k in 0..grid.n() {
            let x = grid.index(j, k);
            let xp = grid.point_of(x);
            let w = grid.wrap(j as i64 + p, k as i64 + q);
            let yr = grid.point_of(w.index);
            let phase = cocycle.eval_coefficients(w.p as f64, w.q as f64, yr) - cocycle.eval_coefficients(sp, sq, xp);
            u[(x, w.index)] = cis(phase);
        }
    }
    u
}

/// Magnetic translation by a Cartesian shift that must map the grid to itself.
pub fn magnetic_translation(grid: &Grid, flux: &FluxSector, s: Vec2) -> Result<CMat> {
    let (k, l) = grid.lattice().coefficients(s);
    let nn = grid.n() as f64;
    let (pk, pl) = (k * nn, l * nn);
    let (rp, rq) = (libm::round(pk), libm::round(pl));
    if libm::fabs(pk - rp) > 1e-9 || libm::fabs(pl - rq) > 1e-9 {
        return Err(Error::GridMismatch { x: s.x, y: s.y });
    }
    Ok(magnetic_translation_steps(grid, flux, rp as i64, rq as i64))
}

/// Reflection `(Rf)(x) = f(−x)` on magnetic-periodic functions.
pub fn reflection(grid: &Grid, flux: &FluxSector) -> CMat {
    let cocycle = Cocycle::new(*grid.lattice(), *flux);
    let d = grid.dim();
    let mut u = CMat::zeros(d, d);
    for j in 0..grid.n() {
        for k in 0..grid.n() {
            let x = grid.index(j, k);
            let w = grid.wrap(-(j as i64), -(k as i64));
            let yr = grid.point_of(w.index);
            u[(x, w.index)] = cis(cocycle.eval_coefficients(w.p as f64, w.q as f64, yr));
        }
    }
    u
}

/// Groups ascending eigenvalues: a value joins the current cluster when it
/// lies within `threshold` of the running cluster mean.
pub fn cluster_ids(values: &[f64], threshold: f64) -> Vec<usize> {
    let mut ids = Vec::with_capacity(values.len());
    let (mut id, mut sum, mut count) = (0usize, 0.0, 0usize);
    for &v in values {
        if count > 0 && libm::fabs(v - sum / count as f64) > threshold {
            id += 1;
            sum = 0.0;
            count = 0;
        }
        sum += v;
        count += 1;
        ids.push(id);
    }
    ids
}

/// Mean and size of each cluster produced by [`cluster_ids`].
pub fn cluster_summary(values: &[f64], ids: &[usize]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for (&v, &id) in values.iter().zip(ids) {
        if id == out.len() {
            out.push((0.0, 0));
        }
        out[id].0 += v;
        out[id].1 += 1;
    }
    for c in &mut out {
        c.0 /= c.1 as f64;
    }
    out
}
