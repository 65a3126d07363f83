mod common;

use gibbslab::interactions::DecayFunction;
use gibbslab::liebrobinson::{
    commutator_norm, lr_bound, lr_bound_long_range, lr_bound_perturbed, lr_bound_short_range,
    CommutatorProbe, LongRangeForm, LrBoundSpec,
};
use gibbslab::{Lattice, LocalOperator, Region};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn short_range_bound_dominates_measurement(seed in any::<u64>(), b in prop::sample::select(vec![0.5, 1.0, 2.0])) {
        let psi = common::short_range_chain(7, 1.0, seed);
        let lat = psi.lattice().clone();
        let h = psi.assemble(&Region::full(&lat)).unwrap();
        let pn = psi.norm_f(&DecayFunction::Exponential { b });
        let a = common::random_op(&lat, &[0], 1.0, seed ^ 1);
        for d in 1..7 {
            let bo = common::random_op(&lat, &[d], 1.0, seed ^ (d as u64 + 2));
            let probe = CommutatorProbe::new(&h, &a, &bo).unwrap();
            for k in 0..=30 {
                let t = 0.1 * k as f64;
                let m = probe.norm_at(t).unwrap();
                prop_assert!(m <= 2.0 + 1e-12);
                prop_assert!(m <= lr_bound_short_range(b, pn, a.support(), bo.support(), t) * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn perturbed_bound_dominates_measurement(seed in any::<u64>(), vn in 0.1f64..2.0) {
        let psi = common::short_range_chain(7, 1.0, seed);
        let lat = psi.lattice().clone();
        let v = common::random_op(&lat, &[0], vn, seed ^ 5);
        let h = psi.assemble(&Region::full(&lat)).unwrap().add(&v.embed(&Region::full(&lat)).unwrap()).unwrap();
        let pn = psi.norm_f(&DecayFunction::Exponential { b: 1.0 });
        let a = common::random_op(&lat, &[0], 1.0, seed ^ 6);
        for d in [2, 4, 6] {
            let bo = common::random_op(&lat, &[d], 1.0, seed ^ 7);
            let probe = CommutatorProbe::new(&h, &a, &bo).unwrap();
            for k in 0..=15 {
                let t = 0.2 * k as f64;
                let bound = lr_bound_perturbed(1.0, pn, vn, a.support(), bo.support(), t);
                prop_assert!(probe.norm_at(t).unwrap() <= bound * (1.0 + 1e-12) + 1e-12);
            }
        }
    }

    #[test]
    fn commutator_norm_is_time_reversal_symmetric(seed in any::<u64>(), t in -3.0f64..3.0) {
        let psi = common::short_range_chain(5, 1.0, seed);
        let lat = psi.lattice().clone();
        let h = psi.assemble(&Region::full(&lat)).unwrap();
        let a = common::random_op(&lat, &[0], 1.0, seed ^ 1);
        let bo = common::random_op(&lat, &[3], 1.0, seed ^ 2);
        let fwd = commutator_norm(&h, &a, &bo, t).unwrap();
        let back = commutator_norm(&h, &bo, &a, -t).unwrap();
        prop_assert!((fwd - back).abs() < 1e-10);
    }
}

#[test]
fn identity_observable_commutes() {
    let psi = common::short_range_chain(4, 1.0, 3);
    let lat = psi.lattice().clone();
    let h = psi.assemble(&Region::full(&lat)).unwrap();
    let a = common::random_op(&lat, &[0], 1.0, 1);
    let one = LocalOperator::identity(Region::single(&lat, 3)).unwrap();
    for t in [0.0, 0.7, 2.0] {
        assert!(commutator_norm(&h, &a, &one, t).unwrap() < 1e-12);
    }
}

#[test]
fn perturbed_bound_is_affine_in_perturbation_norm() {
    let lat = Lattice::chain(10);
    let (x, y) = (Region::single(&lat, 0), Region::range(&lat, 4..10));
    let at = |vn: f64| lr_bound_perturbed(1.0, 1.5, vn, &x, &y, 1.3);
    assert!((at(0.0) - lr_bound_short_range(1.0, 1.5, &x, &y, 1.3)).abs() < 1e-15);
    assert!(((at(2.0) - at(1.0)) - (at(1.0) - at(0.0))).abs() < 1e-12);
    let spec = LrBoundSpec::PerturbedShortRange {
        b: 1.0,
        psi_norm: 1.5,
        v_norm: 0.0,
    };
    assert_eq!(lr_bound(&spec, &x, &y, 1.3).unwrap(), at(0.0));
}

#[test]
fn long_range_bound_decreases_with_distance() {
    let lat = Lattice::chain(30);
    let spec = LrBoundSpec::LongRange {
        alpha: 4.0,
        sigma: 0.7,
        prefactor: 1.0,
        v: 1.0,
        nu: 1,
    };
    let x = Region::single(&lat, 0);
    let mut prev = f64::INFINITY;
    for d in 1..30 {
        let y = Region::single(&lat, d);
        let v = lr_bound_long_range(&spec, LongRangeForm::Simplified, &x, &y, 1.0).unwrap();
        assert!(v <= prev);
        prev = v;
    }
    let bad = LrBoundSpec::LongRange {
        alpha: 0.5,
        sigma: 0.7,
        prefactor: 1.0,
        v: 1.0,
        nu: 1,
    };
    assert!(
        lr_bound_long_range(&bad, LongRangeForm::Full, &x, &Region::single(&lat, 3), 1.0).is_err()
    );
}
