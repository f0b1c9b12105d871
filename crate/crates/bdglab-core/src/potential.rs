//! Pair potentials sampled on grid difference vectors.
//!
//! A radial profile is truncated to the cell and made lattice periodic by
//! evaluating it at the shortest image of each difference vector.

use alloc::vec::Vec;

use crate::geometry::Vec2;
use crate::space::Grid;
use crate::{Error, Result};

/// Radial profiles and tabulated potentials.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `v = 0`.
    Zero,
    /// `v(x) = −depth · exp(−|x|²/(2 width²))`; positive depth attracts.
    Gaussian {
        /// Depth of the well (`v(0) = −depth`).
        depth: f64,
        /// Gaussian width.
        width: f64,
    },
    /// `v(x) = −depth · (1 + |x|)^{−κ}`.
    InversePower {
        /// Decay exponent.
        kappa: f64,
        /// Depth of the well.
        depth: f64,
    },
    /// Values on the difference index `dj·N + dk`.
    Table(Vec<f64>),
}

impl PotentialSpec {
    fn radial(&self, r: f64) -> f64 {
        match *self {
            PotentialSpec::Zero | PotentialSpec::Table(_) => 0.0,
            PotentialSpec::Gaussian { depth, width } => -depth * libm::exp(-r * r / (2.0 * width * width)),
            PotentialSpec::InversePower { kappa, depth } => -depth * libm::pow(1.0 + r, -kappa),
        }
    }
}

/// Even, lattice-periodic pair potential on grid differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    n: usize,
    values: Vec<f64>,
    sup: f64,
    integral: f64,
}

/// Shortest representative of `x` modulo the lattice.
pub fn minimal_image(grid: &Grid, x: Vec2) -> Vec2 {
    let l = grid.lattice();
    let mut best = x;
    for a in -2..=2 {
        for b in -2..=2 {
            let y = x + l.vector(a as f64, b as f64);
            if y.norm() < best.norm() {
                best = y;
            }
        }
    }
    best
}

impl PairPotential {
    /// Samples `spec` on `grid`.
    pub fn new(grid: &Grid, spec: &PotentialSpec) -> Result<Self> {
        let d = grid.dim();
        let values = match spec {
            PotentialSpec::Table(t) => {
                if t.len() != d {
                    return Err(Error::Shape(alloc::format!("table has {} values, grid needs {d}", t.len())));
                }
                t.clone()
            }
            PotentialSpec::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(Error::Parameter("gaussian width must be positive".into()));
            }
            _ => (0..d).map(|i| spec.radial(minimal_image(grid, grid.point_of(i)).norm())).collect(),
        };
        Self::from_values(grid, values)
    }

    /// Wraps raw samples after checking evenness and finiteness.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        let n = grid.n();
        if values.len() != grid.dim() {
            return Err(Error::Shape("potential table size".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("potential must be finite".into()));
        }
        let pot = Self {
            n,
            sup: values.iter().fold(0.0, |m: f64, v| m.max(libm::fabs(*v))),
            integral: grid.cell_weight() * values.iter().sum::<f64>(),
            values,
        };
        if pot.evenness_defect() > 1e-12 * pot.sup.max(1.0) {
            return Err(Error::Parameter("potential must satisfy v(-x) = v(x)".into()));
        }
        Ok(pot)
    }

    /// The zero potential.
    pub fn zero(grid: &Grid) -> Self {
        Self { n: grid.n(), values: alloc::vec![0.0; grid.dim()], sup: 0.0, integral: 0.0 }
    }

    /// `max |v(−x) − v(x)|`.
    pub fn evenness_defect(&self) -> f64 {
        let n = self.n;
        let mut d: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let a = self.values[j * n + k];
                let b = self.values[((n - j) % n) * n + (n - k) % n];
                d = d.max(libm::fabs(a - b));
            }
        }
        d
    }

    /// `v` times a constant.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
            sup: self.sup * libm::fabs(factor),
            integral: self.integral * factor,
        }
    }

    /// Rescales so that `∫_Ω v = target`; fails for a potential with zero integral.
    pub fn with_integral(&self, target: f64) -> Result<Self> {
        if target == 0.0 {
            return Ok(self.scaled(0.0));
        }
        if self.integral == 0.0 {
            return Err(Error::Parameter("cannot rescale a potential with zero integral".into()));
        }
        Ok(self.scaled(target / self.integral))
    }

    /// `‖v‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.sup
    }

    /// `λ = ∫_Ω v` by grid quadrature.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// True when `v <= 0` everywhere.
    pub fn is_nonpositive(&self) -> bool {
        self.values.iter().all(|&v| v <= 0.0)
    }

    /// Samples on the difference index.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `v(x_a − x_b)` for flat indices `a`, `b`.
    pub fn between(&self, a: usize, b: usize) -> f64 {
        let n = self.n;
        let (ja, ka) = (a / n, a % n);
        let (jb, kb) = (b / n, b % n);
        self.values[((ja + n - jb) % n) * n + (ka + n - kb) % n]
    }

    /// Dense matrix `V_ab = v(x_a − x_b)`, row-major.
    pub fn pair_matrix(&self) -> Vec<f64> {
        let d = self.n * self.n;
        let mut m = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                m.push(self.between(a, b));
            }
        }
        m
    }

    /// `(v * ρ)(x) = ∫ v(x − y) ρ(y) dy`.
    pub fn convolve(&self, grid: &Grid, rho: &[f64]) -> Vec<f64> {
        let d = grid.dim();
        let w = grid.cell_weight();
        (0..d).map(|a| w * (0..d).map(|b| self.between(a, b) * rho[b]).sum::<f64>()).collect()
    }
}
