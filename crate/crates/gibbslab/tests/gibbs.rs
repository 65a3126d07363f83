mod common;
#[path = "common/oracle.rs"]
mod oracle;

use gibbslab::algebra::dense::c;
use gibbslab::gibbs::{covariance, covariance_region, CovarianceOptions, GibbsState};
use gibbslab::{pauli, Lattice, LocalOperator, Mat, Region};
use proptest::prelude::*;

fn two_qubit_state(h: Mat, beta: f64) -> (GibbsState, Region, Region) {
    let lat = Lattice::chain(2);
    let h = LocalOperator::new(Region::full(&lat), h).unwrap();
    (
        GibbsState::new(&h, beta).unwrap(),
        Region::single(&lat, 0),
        Region::single(&lat, 1),
    )
}

#[test]
fn covariance_region_matches_grid_oracle() {
    let opts = CovarianceOptions::default();
    for (seed, beta) in [(0, 0.5), (1, 1.0), (2, 2.0), (3, 1.0), (4, 0.3)] {
        let (st, x, y) = two_qubit_state(common::random_mat(4, 1.0, seed), beta);
        let got = covariance_region(st.rho(), &x, &y, &opts).unwrap().value;
        let want = oracle::grid_oracle(st.rho().matrix());
        assert!((got - want).abs() <= 1e-6, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn ising_pair_covariance_is_tanh() {
    let zz = gibbslab::algebra::dense::kron(&pauli::z(), &pauli::z()) * c(-1.0, 0.0);
    for beta in [0.3, 1.0, 2.5] {
        let (st, x, y) = two_qubit_state(zz.clone(), beta);
        let got = covariance_region(st.rho(), &x, &y, &CovarianceOptions::default())
            .unwrap()
            .value;
        assert!((got - beta.tanh()).abs() < 1e-9);
        assert!((oracle::grid_oracle(st.rho().matrix()) - beta.tanh()).abs() < 1e-9);
    }
}

#[test]
fn two_site_tfim_correlator_closed_form() {
    for (g, beta) in [(0.0, 0.7), (0.5, 1.0), (1.3, 0.4)] {
        let psi = common::tfim(2, 1.0, g);
        let lat = psi.lattice().clone();
        let st = GibbsState::new(&psi.assemble(&Region::full(&lat)).unwrap(), beta).unwrap();
        let zz = LocalOperator::product(Region::full(&lat), &[pauli::z(), pauli::z()]).unwrap();
        let r = (1.0 + 4.0 * g * g).sqrt();
        let want = (2.0 * beta.sinh() + 2.0 / r * (beta * r).sinh())
            / (2.0 * beta.cosh() + 2.0 * (beta * r).cosh());
        assert!((st.expect(&zz).unwrap().re - want).abs() < 1e-12, "g {g}");
    }
}

#[test]
fn infinite_temperature_and_monotone_decay() {
    let psi = common::short_range_chain(5, 1.0, 11);
    let lat = psi.lattice().clone();
    let hot = GibbsState::new(&psi.assemble(&Region::full(&lat)).unwrap(), 1e-8).unwrap();
    let v = covariance_region(
        hot.rho(),
        &Region::single(&lat, 0),
        &Region::single(&lat, 1),
        &CovarianceOptions::default(),
    )
    .unwrap()
    .value;
    assert!(v < 1e-6);

    let tf = common::tfim(6, 1.0, 1.0);
    let lat = tf.lattice().clone();
    let st = GibbsState::new(&tf.assemble(&Region::full(&lat)).unwrap(), 0.5).unwrap();
    let opts = CovarianceOptions {
        restarts: 2,
        ..Default::default()
    };
    let at = |s: usize| {
        covariance_region(
            st.rho(),
            &Region::single(&lat, 0),
            &Region::single(&lat, s),
            &opts,
        )
        .unwrap()
        .value
    };
    let (near, far) = (at(1), at(5));
    assert!(far <= near, "{far} > {near}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn covariance_bounded_and_symmetric(seed in any::<u64>(), beta in 0.1f64..2.0) {
        let psi = common::short_range_chain(4, 1.0, seed);
        let lat = psi.lattice().clone();
        let st = GibbsState::new(&psi.assemble(&Region::full(&lat)).unwrap(), beta).unwrap();
        let a = common::random_op(&lat, &[0], 1.0, seed ^ 1);
        let b = common::random_op(&lat, &[2, 3], 1.0, seed ^ 2);
        prop_assert!(covariance(st.rho(), &a, &b).unwrap().norm() <= 2.0 + 1e-12);
        let opts = CovarianceOptions { restarts: 2, ..Default::default() };
        let (x, y) = (Region::new(&lat, vec![0]).unwrap(), Region::new(&lat, vec![2, 3]).unwrap());
        let xy = covariance_region(st.rho(), &x, &y, &opts).unwrap().value;
        let yx = covariance_region(st.rho(), &y, &x, &opts).unwrap().value;
        prop_assert!((xy - yx).abs() <= 1e-9);
        prop_assert!(xy <= 2.0 + 1e-12);
    }
}
