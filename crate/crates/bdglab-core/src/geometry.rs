//! Lattices, quantized magnetic fields, gauge cocycles and Chern numbers.
//!
//! A cell `Ω` spanned by `ω1, ω2` carries the field `b = 2πn/|Ω|`. The gauge
//! cocycle `χ_s(x) = (b/2)(s ∧ x) + c_s` encodes the magnetic-periodic
//! boundary conditions `f(x + s) = e^{iχ_s(x)} f(x)`.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Neg, Sub};

use crate::{Error, Result};

/// Tolerance for detecting integer lattice coefficients.
pub const OFF_LATTICE_TOL: f64 = 1e-9;

/// Plain Cartesian 2-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    /// First component.
    pub x: f64,
    /// Second component.
    pub y: f64,
}

impl Vec2 {
    /// Builds a vector.
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Wedge product `self ∧ other = x1 y2 − y1 x2`.
    pub fn wedge(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Euclidean inner product.
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Euclidean norm.
    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.x, self * v.y)
    }
}

/// Bravais lattice with basis `ω1, ω2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    omega1: Vec2,
    omega2: Vec2,
    area: f64,
}

impl Lattice {
    /// Builds a lattice; fails if the basis is degenerate.
    pub fn new(omega1: Vec2, omega2: Vec2) -> Result<Self> {
        let area = libm::fabs(omega1.wedge(omega2));
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::InvalidLattice { area });
        }
        Ok(Self { omega1, omega2, area })
    }

    /// Square lattice of the given side.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(Vec2::new(side, 0.0), Vec2::new(0.0, side))
    }

    /// Triangular lattice of the given side (60° between the basis vectors).
    pub fn triangular(side: f64) -> Result<Self> {
        Self::new(Vec2::new(side, 0.0), Vec2::new(0.5 * side, 0.5 * libm::sqrt(3.0) * side))
    }

    /// First basis vector.
    pub fn omega1(&self) -> Vec2 {
        self.omega1
    }

    /// Second basis vector.
    pub fn omega2(&self) -> Vec2 {
        self.omega2
    }

    /// Cell area `|ω1 ∧ ω2|`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// Signed wedge `ω1 ∧ ω2`.
    pub fn orientation(&self) -> f64 {
        self.omega1.wedge(self.omega2)
    }

    /// The same lattice with both basis vectors multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(factor * self.omega1, factor * self.omega2)
    }

    /// Rescales the cell so that `n` flux quanta give the field `b`.
    pub fn scaled_for_field(&self, n: i64, b: f64) -> Result<Self> {
        if n == 0 || !(b * n as f64 > 0.0) {
            return Err(Error::Parameter("field and flux must be nonzero and of equal sign".into()));
        }
        let target_area = 2.0 * PI * n as f64 / b;
        self.scaled(libm::sqrt(target_area / self.area))
    }

    /// Real coefficients `(k, ℓ)` with `s = kω1 + ℓω2`.
    pub fn coefficients(&self, s: Vec2) -> (f64, f64) {
        let w = self.orientation();
        (s.wedge(self.omega2) / w, self.omega1.wedge(s) / w)
    }

    /// Integer coefficients of a lattice vector, or an off-lattice error.
    pub fn integer_coefficients(&self, s: Vec2) -> Result<(i64, i64)> {
        let (k, l) = self.coefficients(s);
        let (rk, rl) = (libm::round(k), libm::round(l));
        if libm::fabs(k - rk) > OFF_LATTICE_TOL || libm::fabs(l - rl) > OFF_LATTICE_TOL {
            return Err(Error::OffLattice { x: s.x, y: s.y });
        }
        Ok((rk as i64, rl as i64))
    }

    /// The lattice vector `kω1 + ℓω2`.
    pub fn vector(&self, k: f64, l: f64) -> Vec2 {
        k * self.omega1 + l * self.omega2
    }
}

/// Quantized field sector: `b = 2πn/|Ω|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSector {
    n: i64,
    b: f64,
}

impl FluxSector {
    /// Number of flux quanta per cell.
    pub fn n(&self) -> i64 {
        self.n
    }

    /// Magnetic field strength.
    pub fn b(&self) -> f64 {
        self.b
    }
}

/// Builds the flux sector with `n` quanta through the cell of `lattice`.
pub fn make_flux_sector(lattice: &Lattice, n: i64) -> Result<FluxSector> {
    let area = lattice.area();
    if !(area > 0.0) {
        return Err(Error::InvalidLattice { area });
    }
    Ok(FluxSector { n, b: 2.0 * PI * n as f64 / area })
}

/// Symmetric gauge `a_b(x) = (b/2)(−x2, x1)`.
pub fn symmetric_gauge_potential(flux: &FluxSector, x: Vec2) -> Vec2 {
    let h = 0.5 * flux.b;
    Vec2::new(-h * x.y, h * x.x)
}

/// Exact line integral of the symmetric gauge along the segment `x → y`.
///
/// The potential is linear, so the midpoint rule is exact.
pub fn gauge_line_integral(b: f64, x: Vec2, y: Vec2) -> f64 {
    let m = 0.5 * (x + y);
    let d = y - x;
    0.5 * b * (m.wedge(d))
}

/// The canonical gauge cocycle of a lattice and flux sector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cocycle {
    lattice: Lattice,
    flux: FluxSector,
}

impl Cocycle {
    /// Pairs a lattice with a flux sector.
    pub fn new(lattice: Lattice, flux: FluxSector) -> Self {
        Self { lattice, flux }
    }

    /// The underlying lattice.
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// The underlying flux sector.
    pub fn flux(&self) -> &FluxSector {
        &self.flux
    }

    /// `χ_s(x)` for `s = kω1 + ℓω2`, coefficients allowed to be fractional.
    pub fn eval_coefficients(&self, k: f64, l: f64, x: Vec2) -> f64 {
        let b = self.flux.b;
        let s = self.lattice.vector(k, l);
        let c = 0.5 * b * k * l * self.lattice.omega2.wedge(self.lattice.omega1);
        0.5 * b * s.wedge(x) + c
    }

    /// `χ_s(x)` for a lattice vector `s`, unwrapped.
    pub fn eval(&self, s: Vec2, x: Vec2) -> Result<f64> {
        let (k, l) = self.lattice.integer_coefficients(s)?;
        Ok(self.eval_coefficients(k as f64, l as f64, x))
    }

    /// Distance of `χ_{s+t}(x) − χ_s(x+t) − χ_t(x)` from `2πℤ`.
    pub fn identity_residual(&self, s: Vec2, t: Vec2, x: Vec2) -> Result<f64> {
        let r = self.eval(s + t, x)? - self.eval(s, x + t)? - self.eval(t, x)?;
        Ok(distance_to_2pi_z(r))
    }

    /// Raw winding value `(1/2π)(χ_{ν2}(x+ν1) − χ_{ν2}(x) − χ_{ν1}(x+ν2) + χ_{ν1}(x))`.
    ///
    /// The basis `(ν1, ν2)` is taken negatively oriented, which is the
    /// orientation for which the winding equals the flux `(1/2π)∫curl a_b`.
    pub fn chern_value(&self, x: Vec2) -> f64 {
        let (nu1, nu2) = if self.lattice.orientation() > 0.0 {
            (self.lattice.omega2, self.lattice.omega1)
        } else {
            (self.lattice.omega1, self.lattice.omega2)
        };
        let chi = |s: Vec2, y: Vec2| {
            let (k, l) = self.lattice.coefficients(s);
            self.eval_coefficients(libm::round(k), libm::round(l), y)
        };
        (chi(nu2, x + nu1) - chi(nu2, x) - chi(nu1, x + nu2) + chi(nu1, x)) / (2.0 * PI)
    }

    /// Chern number at base point `x`.
    pub fn chern_number(&self, x: Vec2) -> Result<i64> {
        let v = self.chern_value(x);
        let r = libm::round(v);
        if libm::fabs(v - r) > 1e-8 {
            return Err(Error::CocycleInconsistency { value: v });
        }
        Ok(r as i64)
    }
}

/// Distance from `r` to the nearest multiple of `2π`.
pub fn distance_to_2pi_z(r: f64) -> f64 {
    let m = libm::round(r / (2.0 * PI));
    libm::fabs(r - 2.0 * PI * m)
}

/// `(1/2π)∮ a_b · dl` around the cell boundary, counter-clockwise, using
/// `segments` midpoint-rule pieces per edge.
pub fn boundary_flux(lattice: &Lattice, flux: &FluxSector, segments: usize) -> f64 {
    let (o1, o2) = if lattice.orientation() > 0.0 {
        (lattice.omega1(), lattice.omega2())
    } else {
        (lattice.omega2(), lattice.omega1())
    };
    let corners = [Vec2::default(), o1, o1 + o2, o2, Vec2::default()];
    let mut total = 0.0;
    for w in corners.windows(2) {
        let d = (1.0 / segments as f64) * (w[1] - w[0]);
        for i in 0..segments {
            let mid = w[0] + (i as f64 + 0.5) * d;
            total += symmetric_gauge_potential(flux, mid).dot(d);
        }
    }
    total / (2.0 * PI)
}
