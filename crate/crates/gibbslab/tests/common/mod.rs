#![allow(dead_code)]

use std::sync::Arc;

use gibbslab::interactions::{
    gaussian_hermitian, generate_model, DecayFunction, Interaction, ModelKind,
};
use gibbslab::{Lattice, LocalOperator, Mat, Region};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random two-body chain, ‖Ψ(Z)‖ = strength · e^{-diam Z}.
pub fn short_range_chain(n: usize, strength: f64, seed: u64) -> Interaction {
    let kind = ModelKind::RandomKLocal {
        k: 2,
        decay: DecayFunction::Exponential { b: 1.0 },
        strength,
        r_max: 4,
    };
    generate_model(&kind, &Lattice::chain(n), seed).unwrap()
}

pub fn tfim(n: usize, j: f64, g: f64) -> Interaction {
    generate_model(&ModelKind::Tfim { j, g }, &Lattice::chain(n), 0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian Hermitian operator on `sites` with operator norm `norm`.
pub fn random_op(lat: &Arc<Lattice>, sites: &[usize], norm: f64, seed: u64) -> LocalOperator {
    let region = Region::new(lat, sites.to_vec()).unwrap();
    let m = gaussian_hermitian(&mut rng(seed), region.hilbert_dim(), norm).unwrap();
    LocalOperator::new(region, m).unwrap()
}

pub fn random_mat(dim: usize, norm: f64, seed: u64) -> Mat {
    gaussian_hermitian(&mut rng(seed), dim, norm).unwrap()
}

pub fn single(lat: &Arc<Lattice>, site: usize, m: Mat) -> LocalOperator {
    LocalOperator::new(Region::single(lat, site), m).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
