mod common;

use std::f64::consts::PI;

use gibbslab::algebra::dense::{self, c};
use gibbslab::experiments::ZetaQbp;
use gibbslab::liebrobinson::lr_bound_short_range;
use gibbslab::qbp::{
    eta, f_hat, f_time, f_time_bound, partition_ratio_identity, phi_local, phi_spectral, phi_time,
    trace_norm_stability, zeta_qbp_general, EtaOptions, EtaVariant, PerturbationPath,
    ShortRangeQbp, SizeFactor,
};
use gibbslab::quadrature::QuadOptions;
use gibbslab::{pauli, Lattice, LocalOperator, Mat, Region};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_unitary(dim: usize, seed: u64) -> Mat {
    let mut rng = common::rng(seed);
    let g = Mat::from_shape_fn((dim, dim), |_| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    dense::polar_unitary(&g).unwrap()
}

fn op(region: &Region, m: Mat) -> LocalOperator {
    LocalOperator::new(region.clone(), m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_is_even_and_scales(beta in 0.05f64..20.0, w in -50.0f64..50.0, t in 0.001f64..30.0) {
        prop_assert_eq!(f_hat(beta, w), f_hat(beta, -w));
        let scaled = f_time(1.0, t / beta) / beta;
        prop_assert!((f_time(beta, t) - scaled).abs() <= 1e-12 * scaled.max(1e-300));
        prop_assert!(f_time(beta, t) <= f_time_bound(beta, t) * (1.0 + 1e-12));
    }

    #[test]
    fn trace_norm_helper_inequality(x in 0.0f64..=1.0, y in 0.0f64..20.0) {
        prop_assert!((x * y).exp_m1() <= x * y.exp_m1() * (1.0 + 1e-14) + 1e-300);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generator_is_contractive_linear_and_covariant(seed in any::<u64>(), beta in 0.1f64..3.0, s in -2.0f64..2.0) {
        let lat = Lattice::chain(2);
        let full = Region::full(&lat);
        let h = op(&full, common::random_mat(4, 2.0, seed));
        let v = op(&full, common::random_mat(4, 1.0, seed ^ 7));
        let w = op(&full, common::random_mat(4, 0.5, seed ^ 9));
        let phi_v = phi_spectral(&h, &v, beta).unwrap();
        prop_assert!(phi_v.op_norm().unwrap() <= v.op_norm().unwrap() * (1.0 + 1e-12));

        let mix = v.add(&w.scale_re(s)).unwrap();
        let lin = phi_v.add(&phi_spectral(&h, &w, beta).unwrap().scale_re(s)).unwrap();
        prop_assert!(phi_spectral(&h, &mix, beta).unwrap().sub(&lin).unwrap().frobenius() < 1e-11);

        let u = random_unitary(4, seed ^ 13);
        let conj = |m: &Mat| dense::hermitize(&u.dot(m).dot(&dense::adjoint(&u)));
        let rotated = phi_spectral(&op(&full, conj(h.matrix())), &op(&full, conj(v.matrix())), beta).unwrap();
        let want = u.dot(phi_v.matrix()).dot(&dense::adjoint(&u));
        prop_assert!(dense::frobenius(&(rotated.matrix() - &want)) < 1e-10);
    }

    #[test]
    fn trace_norm_stability_holds(seed in any::<u64>(), beta in 0.1f64..3.0, s in 0.0f64..=1.0) {
        let psi = common::short_range_chain(4, 1.0, seed);
        let lat = psi.lattice().clone();
        let h = psi.assemble(&Region::full(&lat)).unwrap();
        let v = common::random_op(&lat, &[1], 1.0, seed ^ 3);
        let (lhs, rhs) = trace_norm_stability(&h, &v, beta, s).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12);
    }
}

#[test]
fn unit_and_commuting_generators() {
    let lat = Lattice::chain(3);
    let full = Region::full(&lat);
    let psi = common::short_range_chain(3, 1.0, 4);
    let h = psi.assemble(&full).unwrap();
    let one = LocalOperator::identity(full.clone()).unwrap();
    assert!(
        phi_spectral(&h, &one, 0.8)
            .unwrap()
            .sub(&one)
            .unwrap()
            .frobenius()
            < 1e-12
    );

    // classical H and diagonal V: the time integral returns V·∫f up to the tail
    let tf = common::tfim(3, 1.0, 0.0);
    let hc = tf.assemble(&full).unwrap();
    let v = common::single(&lat, 1, pauli::z());
    let beta = 1.0;
    for big_t in [0.5, 1.0, 2.0] {
        let (phi, _) = phi_time(&hc, &v, beta, big_t, &QuadOptions::default()).unwrap();
        let err = phi
            .sub(&v.embed(&full).unwrap())
            .unwrap()
            .op_norm()
            .unwrap();
        assert!(
            err <= 16.0 * (-PI * big_t / beta).exp() / (PI * PI) + 1e-9,
            "T = {big_t}: {err}"
        );
    }
    let (zero, _) = phi_time(&hc, &v, beta, 0.0, &QuadOptions::default()).unwrap();
    assert_eq!(zero.frobenius(), 0.0);
}

#[test]
fn local_generator_error_is_monotone_and_bounded() {
    for seed in 0..3 {
        let psi = common::short_range_chain(6, 1.0, seed);
        let lat = psi.lattice().clone();
        let full = Region::full(&lat);
        let h = psi.assemble(&full).unwrap();
        let v = common::random_op(&lat, &[2], 1.0, seed + 100);
        let beta = 0.7;
        let zeta = ZetaQbp::short_range(&psi, &full, &v, beta, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for r in 0..6 {
            let e = phi_local(&h, &v, beta, r).unwrap().error;
            assert!(e <= prev + 1e-12, "seed {seed} r {r}: {e} > {prev}");
            assert!(e <= v.op_norm().unwrap() * zeta.eval(r).0);
            prev = e;
        }
        assert!(prev < 1e-12);
    }
}

#[test]
fn local_eta_approximations_obey_their_bounds() {
    let psi = common::short_range_chain(5, 1.0, 21);
    let lat = psi.lattice().clone();
    let full = Region::full(&lat);
    let v = common::random_op(&lat, &[2], 1.0, 5);
    let path = PerturbationPath::new(psi.assemble(&full).unwrap(), v.clone()).unwrap();
    let vn = path.v_norm().unwrap();
    let opts = EtaOptions {
        tol: 1e-10,
        ..Default::default()
    };
    for beta in [0.3, 1.0] {
        let zeta = ZetaQbp::short_range(&psi, &full, &v, beta, 1.0).unwrap();
        for (variant, scale, exp) in [(EtaVariant::Plain, 0.5, 0.5), (EtaVariant::Tilde, 1.0, 1.0)]
        {
            let exact = eta(&path, beta, variant, None, &opts).unwrap();
            for r in 0..3 {
                let local = eta(&path, beta, variant, Some(r), &opts).unwrap();
                let diff = dense::op_norm(&(exact.last() - local.last())).unwrap();
                let bound = scale * beta * vn * (exp * beta * vn).exp() * zeta.eval(r).0;
                assert!(
                    diff <= bound,
                    "{variant:?} beta {beta} r {r}: {diff} > {bound}"
                );
            }
        }
    }
}

#[test]
fn eta_of_zero_perturbation_is_identity() {
    let psi = common::short_range_chain(4, 1.0, 2);
    let lat = psi.lattice().clone();
    let full = Region::full(&lat);
    let v = LocalOperator::zero(Region::single(&lat, 1)).unwrap();
    let path = PerturbationPath::new(psi.assemble(&full).unwrap(), v).unwrap();
    let sol = eta(&path, 1.0, EtaVariant::Plain, None, &EtaOptions::default()).unwrap();
    for e in &sol.eta {
        assert!(dense::frobenius(&(e - &dense::identity(16))) < 1e-14);
    }
}

#[test]
fn partition_ratio_residuals() {
    let lat = Lattice::chain(4);
    let full = Region::full(&lat);
    let classical = common::tfim(4, 1.0, 0.0).assemble(&full).unwrap();
    let path = PerturbationPath::new(
        classical,
        common::single(&lat, 2, pauli::z().mapv(|z| z * 0.8)),
    )
    .unwrap();
    assert!(partition_ratio_identity(&path, 1.0, 1.0).unwrap() < 1e-8);
    assert_eq!(partition_ratio_identity(&path, 1.0, 0.0).unwrap(), 0.0);
    for seed in 0..3 {
        let psi = common::short_range_chain(4, 1.0, seed);
        let v = common::random_op(&lat, &[1], 1.0, seed + 40);
        let path = PerturbationPath::new(psi.assemble(&full).unwrap(), v).unwrap();
        assert!(partition_ratio_identity(&path, 0.7, 1.0).unwrap() < 1e-7);
    }
}

#[test]
fn general_zeta_stays_below_the_closed_form() {
    let lat = Lattice::chain(12);
    let x = Region::single(&lat, 5);
    let (b, psi_norm) = (1.0, 1.2);
    for beta in [0.3, 1.0, 3.0] {
        let closed = ShortRangeQbp {
            b,
            beta,
            psi_norm,
            path_norm: Some(psi_norm),
            v_norm: 0.0,
        };
        for r in 0..5 {
            let rest = x.neighborhood(r).complement();
            let general =
                zeta_qbp_general(|t| lr_bound_short_range(b, psi_norm, &x, &rest, t), beta);
            assert!(general <= 2.0);
            assert!(general <= closed.path(SizeFactor::Sites(1), r as f64).unwrap() * (1.0 + 1e-9));
        }
    }
}
