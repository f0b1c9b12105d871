#![allow(dead_code)]

use bdglab_core::geometry::{make_flux_sector, FluxSector, Lattice, Vec2};
use bdglab_core::potential::{PairPotential, PotentialSpec};
use bdglab_core::space::{cis, fermi, func_calc, hermitize, Grid};
use bdglab_core::state::{block, split_big_gamma, BdGState, Interaction, Model};
use bdglab_core::{c64, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn square_2pi() -> Lattice {
    Lattice::square((2.0 * std::f64::consts::PI).sqrt()).unwrap()
}

pub fn setup(lattice: Lattice, n: i64, grid_n: usize) -> (Grid, FluxSector) {
    (Grid::new(lattice, grid_n).unwrap(), make_flux_sector(&lattice, n).unwrap())
}

pub fn model(lattice: Lattice, n: i64, grid_n: usize, spec: PotentialSpec, interaction: Interaction) -> Model {
    let (grid, flux) = setup(lattice, n, grid_n);
    let v = PairPotential::new(&grid, &spec).unwrap();
    Model::new(grid, flux, v, interaction)
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize, scale: f64) -> CMat {
    let mut a = CMat::from_fn(d, d, |_, _| c64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)));
    hermitize(&mut a);
    a
}

pub fn random_symmetric(rng: &mut impl Rng, d: usize, scale: f64) -> CMat {
    let mut a = CMat::from_fn(d, d, |_, _| c64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)));
    for i in 0..d {
        for j in 0..i {
            a[(i, j)] = a[(j, i)];
        }
    }
    a
}

/// `f_T(Λ)` for a random particle-hole symmetric `Λ`; always admissible.
pub fn random_admissible(rng: &mut impl Rng, d: usize) -> BdGState {
    let h = random_hermitian(rng, d, 2.0);
    let delta = random_symmetric(rng, d, 1.0);
    let hbar = CMat::from_fn(d, d, |i, j| -h[(i, j)].conj());
    let lam = block(&h, &delta, &hbar);
    let t = rng.random_range(0.05..2.0);
    split_big_gamma(&func_calc(&lam, |x| fermi(t, x)).unwrap())
}

pub fn random_point(rng: &mut impl Rng, scale: f64) -> Vec2 {
    Vec2::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm_max()
}

pub fn phase(theta: f64) -> c64 {
    cis(theta)
}
