//! Cell-periodic vector fields `e = a − a_b` and the transverse Ampère solve.
//!
//! Fields live on the grid points. Derivatives are spectral: the discrete
//! Fourier modes `e^{iq·x}` with `q` in the reciprocal lattice diagonalize
//! `curl* curl`. The constant mode and, for even `N`, the Nyquist modes are
//! excluded from the projection `P` onto divergence-free mean-zero fields.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::geometry::Vec2;
use crate::space::{cis, Grid};
use crate::{c64, CMat};

/// Vector field sampled at the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    values: Vec<Vec2>,
}

impl VectorField {
    /// The zero field on `grid`.
    pub fn zeros(grid: &Grid) -> Self {
        Self { values: vec![Vec2::default(); grid.dim()] }
    }

    /// Wraps raw samples.
    pub fn from_values(values: Vec<Vec2>) -> Self {
        Self { values }
    }

    /// Sample at a flat grid index.
    pub fn at(&self, i: usize) -> Vec2 {
        self.values[i]
    }

    /// All samples.
    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    /// Largest pointwise norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Reciprocal basis `G_i · ω_j = 2π δ_ij`.
fn reciprocal(grid: &Grid) -> (Vec2, Vec2) {
    let l = grid.lattice();
    let (o1, o2) = (l.omega1(), l.omega2());
    let w = l.orientation();
    ((2.0 * PI / w) * Vec2::new(o2.y, -o2.x), (2.0 * PI / w) * Vec2::new(-o1.y, o1.x))
}

/// Wavevector of the Fourier index `(p1, p2)` and whether it is a kept mode.
fn wavevector(grid: &Grid, p1: usize, p2: usize) -> (Vec2, bool) {
    let n = grid.n();
    let signed = |p: usize| if 2 * p > n { p as i64 - n as i64 } else { p as i64 };
    let nyquist = |p: usize| n % 2 == 0 && 2 * p == n;
    let (g1, g2) = reciprocal(grid);
    let q = (signed(p1) as f64) * g1 + (signed(p2) as f64) * g2;
    let kept = !(p1 == 0 && p2 == 0) && !nyquist(p1) && !nyquist(p2);
    (q, kept)
}

fn dft_matrix(n: usize, inverse: bool) -> CMat {
    let sign = if inverse { 1.0 } else { -1.0 };
    CMat::from_fn(n, n, |p, j| cis(sign * 2.0 * PI * ((p * j) % n) as f64 / n as f64))
}

/// Two-dimensional DFT of grid samples (`inverse` includes the `1/N²`).
fn dft2(grid: &Grid, f: &[c64], inverse: bool) -> Vec<c64> {
    let n = grid.n();
    let m = CMat::from_fn(n, n, |j, k| f[grid.index(j, k)]);
    let fm = dft_matrix(n, inverse);
    let out = &fm * &m * fm.transpose();
    let scale = if inverse { 1.0 / (n * n) as f64 } else { 1.0 };
    (0..n * n)
        .map(|i| {
            let (j, k) = grid.split(i);
            out[(j, k)] * scale
        })
        .collect()
}

fn forward(grid: &Grid, v: &[Vec2]) -> (Vec<c64>, Vec<c64>) {
    let x: Vec<c64> = v.iter().map(|a| c64::new(a.x, 0.0)).collect();
    let y: Vec<c64> = v.iter().map(|a| c64::new(a.y, 0.0)).collect();
    (dft2(grid, &x, false), dft2(grid, &y, false))
}

fn backward(grid: &Grid, fx: &[c64], fy: &[c64]) -> Vec<Vec2> {
    let x = dft2(grid, fx, true);
    let y = dft2(grid, fy, true);
    x.iter().zip(&y).map(|(a, b)| Vec2::new(a.re, b.re)).collect()
}

/// Applies a per-mode linear map `(q, kept, ĵ) ↦ ê` to a field.
fn spectral_map(grid: &Grid, v: &[Vec2], map: impl Fn(Vec2, bool, c64, c64) -> (c64, c64)) -> Vec<Vec2> {
    let (fx, fy) = forward(grid, v);
    let mut gx = vec![c64::new(0.0, 0.0); fx.len()];
    let mut gy = gx.clone();
    for i in 0..fx.len() {
        let (p1, p2) = grid.split(i);
        let (q, kept) = wavevector(grid, p1, p2);
        let (a, b) = map(q, kept, fx[i], fy[i]);
        gx[i] = a;
        gy[i] = b;
    }
    backward(grid, &gx, &gy)
}

/// Projection `P` onto divergence-free, mean-zero fields.
pub fn project(grid: &Grid, j: &[Vec2]) -> Vec<Vec2> {
    spectral_map(grid, j, |q, kept, jx, jy| {
        if !kept {
            return (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
        }
        let q2 = q.dot(q);
        let qj = jx * q.x + jy * q.y;
        (jx - qj * (q.x / q2), jy - qj * (q.y / q2))
    })
}

/// Solves `curl* curl e = P j` for the transverse, mean-zero `e`.
pub fn transverse_solve(grid: &Grid, j: &[Vec2]) -> VectorField {
    let e = spectral_map(grid, j, |q, kept, jx, jy| {
        if !kept {
            return (c64::new(0.0, 0.0), c64::new(0.0, 0.0));
        }
        let q2 = q.dot(q);
        let qj = jx * q.x + jy * q.y;
        ((jx - qj * (q.x / q2)) / q2, (jy - qj * (q.y / q2)) / q2)
    });
    VectorField::from_values(e)
}

/// Spectral `curl* curl e = |q|² ê − q (q·ê)`.
pub fn curl_curl(grid: &Grid, e: &VectorField) -> Vec<Vec2> {
    spectral_map(grid, e.values(), |q, _, ex, ey| {
        let qe = ex * q.x + ey * q.y;
        let q2 = q.dot(q);
        (ex * q2 - qe * q.x, ey * q2 - qe * q.y)
    })
}

/// Spectral scalar curl `∂1 e2 − ∂2 e1`.
pub fn curl(grid: &Grid, e: &VectorField) -> Vec<f64> {
    let (fx, fy) = forward(grid, e.values());
    let c: Vec<c64> = (0..fx.len())
        .map(|i| {
            let (p1, p2) = grid.split(i);
            let (q, _) = wavevector(grid, p1, p2);
            (fy[i] * q.x - fx[i] * q.y) * c64::new(0.0, 1.0)
        })
        .collect();
    dft2(grid, &c, true).iter().map(|z| z.re).collect()
}

/// `½ ∫ |curl e|²` over the cell.
pub fn field_energy(grid: &Grid, e: &VectorField) -> f64 {
    let w = grid.cell_weight();
    0.5 * w * curl(grid, e).iter().map(|c| c * c).sum::<f64>()
}

/// `‖curl* curl e − P j‖_{L²(Ω)}`.
pub fn ampere_residual(grid: &Grid, e: &VectorField, j: &[Vec2]) -> f64 {
    let lhs = curl_curl(grid, e);
    let rhs = project(grid, j);
    let w = grid.cell_weight();
    let s: f64 = lhs
        .iter()
        .zip(&rhs)
        .map(|(a, b)| {
            let d = *a - *b;
            d.dot(d)
        })
        .sum();
    libm::sqrt(w * s)
}

/// `‖div j‖_{L²}` and `|mean j|` computed spectrally.
pub fn divergence_and_mean(grid: &Grid, j: &[Vec2]) -> (f64, f64) {
    let (fx, fy) = forward(grid, j);
    let d: Vec<c64> = (0..fx.len())
        .map(|i| {
            let (p1, p2) = grid.split(i);
            let (q, _) = wavevector(grid, p1, p2);
            (fx[i] * q.x + fy[i] * q.y) * c64::new(0.0, 1.0)
        })
        .collect();
    let div = dft2(grid, &d, true);
    let w = grid.cell_weight();
    let l2 = libm::sqrt(w * div.iter().map(|z| z.re * z.re).sum::<f64>());
    let n2 = (grid.dim()) as f64;
    let mean = Vec2::new(fx[0].re / n2, fy[0].re / n2);
    (l2, mean.norm())
}

/// Total flux `(1/2π)Σ` of plaquette phases of `a_b + e`, counted per cell.
///
/// The `e` contribution telescopes because `e` is periodic; the result is
/// `n` up to round-off.
pub fn flux_quanta(grid: &Grid, b: f64, e: &VectorField) -> f64 {
    use crate::geometry::gauge_line_integral;
    let n = grid.n() as i64;
    let link = |j0: i64, k0: i64, j1: i64, k1: i64| {
        let (x, y) = (grid.point(j0, k0), grid.point(j1, k1));
        let ex = e.at(grid.wrap(j0, k0).index);
        let ey = e.at(grid.wrap(j1, k1).index);
        gauge_line_integral(b, x, y) + 0.5 * (ex + ey).dot(y - x)
    };
    let mut total = 0.0;
    for j in 0..n {
        for k in 0..n {
            total += link(j, k, j + 1, k) + link(j + 1, k, j + 1, k + 1)
                - link(j, k + 1, j + 1, k + 1)
                - link(j, k, j, k + 1);
        }
    }
    let sign = if grid.lattice().orientation() > 0.0 { 1.0 } else { -1.0 };
    sign * total / (2.0 * PI)
}
