mod common;

use gibbslab::algebra::dense;
use gibbslab::interactions::{generate_model, DecayFunction, ModelKind};
use gibbslab::{Lattice, Region};
use proptest::prelude::*;

fn decay(k: u8) -> DecayFunction {
    match k % 3 {
        0 => DecayFunction::Exponential { b: 1.0 },
        1 => DecayFunction::Exponential { b: 0.5 },
        _ => DecayFunction::flat(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn norm_is_convex_along_paths(seed in any::<u64>(), k in any::<u8>()) {
        let psi = common::short_range_chain(6, 1.0, seed);
        let v = common::short_range_chain(6, 0.7, seed.wrapping_add(1));
        let f = decay(k);
        let ends = psi.norm_f(&f).max(psi.add_scaled(&v, 1.0).unwrap().norm_f(&f));
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            prop_assert!(psi.add_scaled(&v, s).unwrap().norm_f(&f) <= ends * (1.0 + 1e-12));
        }
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive(seed in any::<u64>(), s in -3.0f64..3.0, k in any::<u8>()) {
        let a = common::short_range_chain(6, 1.0, seed);
        let b = common::short_range_chain(6, 0.5, seed ^ 0x55);
        let f = decay(k);
        prop_assert!((a.scale(s).norm_f(&f) - s.abs() * a.norm_f(&f)).abs() <= 1e-12 * a.norm_f(&f).max(1.0));
        let sum = a.add_scaled(&b, 1.0).unwrap().norm_f(&f);
        prop_assert!(sum <= (a.norm_f(&f) + b.norm_f(&f)) * (1.0 + 1e-12));
    }

    #[test]
    fn assemble_is_linear(seed in any::<u64>(), s in -2.0f64..2.0) {
        let a = common::short_range_chain(5, 1.0, seed);
        let b = common::short_range_chain(5, 1.0, seed ^ 0xaa);
        let lam = Region::range(a.lattice(), 1..5);
        let lhs = a.add_scaled(&b, s).unwrap().assemble(&lam).unwrap();
        let rhs = a.assemble(&lam).unwrap().add(&b.assemble(&lam).unwrap().scale_re(s)).unwrap();
        prop_assert!(dense::frobenius(&(lhs.matrix() - rhs.matrix())) <= 1e-11);
    }
}

#[test]
fn power_law_pairs_respect_their_envelope() {
    let lat = Lattice::chain(8);
    let (alpha, j) = (2.5, 0.8);
    let psi = generate_model(&ModelKind::PowerLawTwoBody { alpha, j }, &lat, 3).unwrap();
    let f = DecayFunction::Polynomial { alpha };
    for (op, norm) in psi.terms_with_norms() {
        let d = op.support().diam().unwrap() as f64;
        assert!(norm <= j * f.eval(d) * (1.0 + 1e-12));
        assert!((op.op_norm().unwrap() - norm).abs() < 1e-12);
    }
    // ‖Ψ‖_F ≤ sup_x Σ_{y≠x} 2|J|, since every term is a pair with ‖Ψ‖ ≤ |J|F(d)
    let direct = (0..8)
        .map(|x| (0..8).filter(|&y| y != x).map(|_| 2.0 * j).sum::<f64>())
        .fold(0.0, f64::max);
    assert!(psi.norm_f(&f) <= direct * (1.0 + 1e-12));
    assert_eq!(psi.locality(), 2);
}
