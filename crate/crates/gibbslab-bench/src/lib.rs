//! Fixtures shared by the benchmarks.

use gibbslab::interactions::{
    gaussian_hermitian, generate_model, DecayFunction, Interaction, ModelKind,
};
use gibbslab::{Lattice, LocalOperator, Region};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn tfim(n: usize) -> Interaction {
    generate_model(&ModelKind::Tfim { j: 1.0, g: 1.0 }, &Lattice::chain(n), 0).unwrap()
}

pub fn random_chain(n: usize, seed: u64) -> Interaction {
    let kind = ModelKind::RandomKLocal {
        k: 2,
        decay: DecayFunction::Exponential { b: 1.0 },
        strength: 1.0,
        r_max: 4,
    };
    generate_model(&kind, &Lattice::chain(n), seed).unwrap()
}

/// Unit-norm Gaussian Hermitian operator on one site.
pub fn site_op(psi: &Interaction, site: usize, seed: u64) -> LocalOperator {
    let region = Region::single(psi.lattice(), site);
    let m = gaussian_hermitian(
        &mut ChaCha8Rng::seed_from_u64(seed),
        region.hilbert_dim(),
        1.0,
    )
    .unwrap();
    LocalOperator::new(region, m).unwrap()
}
