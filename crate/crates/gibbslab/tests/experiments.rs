mod common;

use gibbslab::experiments::{
    appending_series, dc_1d_via_expansionals, dc_from_li, expansional, li_remove_region,
    li_site_by_site, lppl_from_dc, lppl_unperturbed, measure_dc, slt_stability, DcCertificate,
    DecayLaw, DecayModel, LiCertificate, LpplCertificate, LpplInstance, SizeLaw, Zeta, ZetaQbp,
    DEFAULT_TABLE_LEN,
};
use gibbslab::gibbs::{CovarianceOptions, GibbsState};
use gibbslab::interactions::{generate_model, DecayFunction, Interaction, ModelKind};
use gibbslab::{pauli, Lattice, LocalOperator, Region};

const EXP1: DecayFunction = DecayFunction::Exponential { b: 1.0 };

fn opts() -> CovarianceOptions {
    CovarianceOptions {
        restarts: 2,
        ..Default::default()
    }
}

fn anchor_pairs(lat: &std::sync::Arc<Lattice>, n: usize) -> Vec<(Region, Region)> {
    (1..n)
        .map(|d| (Region::single(lat, 0), Region::single(lat, d)))
        .collect()
}

fn lppl_certificate(psi: &Interaction, beta: f64) -> LpplCertificate {
    let dc = DcCertificate {
        n: 1.0,
        f: SizeLaw::power(1.0, 1.0),
        zeta: Zeta::from_law(DecayLaw::exponential(2.0, 0.5), DEFAULT_TABLE_LEN, 2.0),
    };
    lppl_from_dc(&dc, psi.norm_f(&EXP1), 1.0, beta, 1, DEFAULT_TABLE_LEN).unwrap()
}

#[test]
fn decoupled_and_hot_states_have_no_correlations() {
    let field_only = common::tfim(6, 0.0, 1.0);
    let lat = field_only.lattice().clone();
    let full = Region::full(&lat);
    let s = measure_dc(
        &field_only,
        &full,
        1.0,
        &anchor_pairs(&lat, 6),
        DecayModel::Exponential,
        &opts(),
    )
    .unwrap();
    assert!(s.sup.iter().all(|&v| v < 1e-9));
    assert!(s.fit.is_none() && s.fit_skipped.is_some());

    let psi = common::short_range_chain(6, 1.0, 1);
    let s = measure_dc(
        &psi,
        &full,
        1e-8,
        &anchor_pairs(&lat, 6),
        DecayModel::Exponential,
        &opts(),
    )
    .unwrap();
    assert!(s.sup.iter().all(|&v| v < 1e-6));
}

#[test]
fn critical_tfim_correlations_fit_an_exponential() {
    let psi = common::tfim(10, 1.0, 1.05);
    let lat = psi.lattice().clone();
    let pairs: Vec<_> = (1..=7)
        .map(|d| (Region::single(&lat, 1), Region::single(&lat, 1 + d)))
        .collect();
    let s = measure_dc(
        &psi,
        &Region::full(&lat),
        0.5,
        &pairs,
        DecayModel::Exponential,
        &opts(),
    )
    .unwrap();
    let fit = s.fit.expect("fit");
    assert!(fit.rate > 0.0 && fit.r_squared >= 0.95, "{fit:?}");
}

#[test]
fn lppl_trivial_cases_and_random_slack() {
    let psi = common::short_range_chain(6, 1.0, 5);
    let lat = psi.lattice().clone();
    let full = Region::full(&lat);
    let beta = 0.7;
    let b = common::single(&lat, 5, pauli::z());
    let run = |v: LocalOperator, b: LocalOperator| {
        let zeta = ZetaQbp::short_range(&psi, &full, &v, beta, 1.0).unwrap();
        let inst = LpplInstance {
            psi: &psi,
            lambda: full.clone(),
            beta,
            v,
            b,
        };
        lppl_unperturbed(&inst, &zeta, None, &opts()).unwrap()
    };
    let zero = run(
        LocalOperator::zero(Region::single(&lat, 0)).unwrap(),
        b.clone(),
    );
    assert!(zero.points.iter().all(|p| p.lhs == 0.0) && !zero.violated);
    let one = run(
        common::random_op(&lat, &[0], 1.0, 3),
        LocalOperator::identity(Region::single(&lat, 5)).unwrap(),
    );
    assert!(one.points.iter().all(|p| p.lhs < 1e-12));
    let rep = run(common::random_op(&lat, &[0], 1.0, 3), b);
    assert!(rep.min_slack >= 0.0 && !rep.violated);
}

#[test]
fn li_reports_on_a_short_range_chain() {
    let psi = common::short_range_chain(7, 1.0, 9);
    let lat = psi.lattice().clone();
    let full = Region::full(&lat);
    let beta = 0.5;
    let lppl = lppl_certificate(&psi, beta);
    let b = common::single(&lat, 6, pauli::z());
    let x = Region::new(&lat, vec![0, 1]).unwrap();
    let rep = li_remove_region(&psi, &full, beta, &x, &b, &lppl, &EXP1, None).unwrap();
    assert!(rep.min_slack >= 0.0);
    let one = LocalOperator::identity(Region::single(&lat, 6)).unwrap();
    let triv = li_remove_region(&psi, &full, beta, &x, &one, &lppl, &EXP1, None).unwrap();
    assert!(triv.points.iter().all(|p| p.lhs < 1e-12));

    let same = li_site_by_site(&psi, &full, &full, beta, &b, &lppl, &EXP1, None).unwrap();
    assert!(same.points.iter().all(|p| p.lhs == 0.0));
    let far = Region::range(&lat, 1..7);
    let rep = li_site_by_site(&psi, &full, &far, beta, &b, &lppl, &EXP1, None).unwrap();
    assert!(rep.min_slack >= 0.0 && !rep.points.is_empty());
}

#[test]
fn removing_a_decoupled_region_changes_nothing() {
    // field on sites 0..2, bonds only among 2..6
    let lat = Lattice::chain(6);
    let mut psi = Interaction::new(&lat);
    for s in 0..2 {
        psi.insert(common::single(&lat, s, pauli::x())).unwrap();
    }
    for s in 2..5 {
        let zz = LocalOperator::product(
            Region::new(&lat, vec![s, s + 1]).unwrap(),
            &[pauli::z(), pauli::z()],
        )
        .unwrap();
        psi.insert(zz.scale_re(-1.0)).unwrap();
    }
    let full = Region::full(&lat);
    let lppl = lppl_certificate(&psi, 0.5);
    let x = Region::new(&lat, vec![0, 1]).unwrap();
    let b = common::single(&lat, 4, pauli::z());
    let rep = li_remove_region(&psi, &full, 0.5, &x, &b, &lppl, &EXP1, None).unwrap();
    assert!(rep.points.iter().all(|p| p.lhs < 1e-12));
}

#[test]
fn finite_range_coupling_vanishes_in_dc_from_li() {
    let psi = common::tfim(8, 1.0, 1.0);
    let lat = psi.lattice().clone();
    let li = LiCertificate {
        f: SizeLaw::constant(1.0),
        zeta: Zeta::from_law(DecayLaw::exponential(2.0, 0.5), DEFAULT_TABLE_LEN, 2.0),
    };
    let (x, y) = (Region::single(&lat, 0), Region::single(&lat, 6));
    let rep = dc_from_li(
        &psi,
        &Region::full(&lat),
        0.5,
        &x,
        &y,
        &li,
        &EXP1,
        None,
        &opts(),
    )
    .unwrap();
    for p in &rep.points {
        let l = p.inputs["l"] as usize;
        if 6 - 2 * l > 1 {
            assert_eq!(p.inputs["coupling"], 0.0);
            assert!((p.rhs - 3.0 * li.zeta.eval(l)).abs() < 1e-12);
        }
    }
    let field_only = common::tfim(8, 0.0, 1.0);
    let rep = dc_from_li(
        &field_only,
        &Region::full(&lat),
        0.5,
        &x,
        &y,
        &li,
        &EXP1,
        None,
        &opts(),
    )
    .unwrap();
    assert!(rep.points.iter().all(|p| p.lhs < 1e-9));
}

#[test]
fn slt_reparametrizes_temperature() {
    let psi = common::tfim(6, 1.0, 0.8);
    let lat = psi.lattice().clone();
    let full = Region::full(&lat);
    let b = common::single(&lat, 2, pauli::x());
    let dc = DcCertificate {
        n: 1.0,
        f: SizeLaw::power(1.0, 1.0),
        zeta: Zeta::from_law(DecayLaw::exponential(2.0, 0.5), DEFAULT_TABLE_LEN, 2.0),
    };
    let (beta, eps) = (0.6, 0.15);
    let p = slt_stability(&psi, &psi.scale(eps), &full, beta, &b, &dc, &EXP1).unwrap();
    let h = psi.assemble(&full).unwrap();
    let m0 = GibbsState::new(&h, beta).unwrap().expect(&b).unwrap().re;
    let m1 = GibbsState::new(&h, beta * (1.0 + eps))
        .unwrap()
        .expect(&b)
        .unwrap()
        .re;
    assert!((p.lhs - (m0 - m1).abs()).abs() < 1e-12);
    let none = slt_stability(&psi, &Interaction::new(&lat), &full, beta, &b, &dc, &EXP1).unwrap();
    assert_eq!(none.lhs, 0.0);
}

#[test]
fn expansionals_of_decoupled_and_coupled_chains() {
    let lat = Lattice::chain(6);
    let (v, w) = (Region::range(&lat, 0..3), Region::range(&lat, 3..6));
    let field_only = common::tfim(6, 0.0, 1.0);
    let e = expansional(&field_only, 0.7, &v, &w).unwrap();
    let id = LocalOperator::identity(Region::full(&lat)).unwrap();
    assert!(e.operator.sub(&id).unwrap().op_norm().unwrap() < 1e-12);
    for seed in 0..3 {
        let psi = common::short_range_chain(6, 1.0, seed);
        let e = expansional(&psi, 0.5, &v, &w).unwrap();
        assert!(e.norm * e.inverse_norm >= 1.0 - 1e-12);
    }
}

#[test]
fn one_dimensional_driver_identities() {
    let ising = common::tfim(9, 1.0, 0.0);
    let beta = 0.1;
    let rep = dc_1d_via_expansionals(
        &ising,
        beta,
        1.0,
        &pauli::z(),
        &pauli::z(),
        &[1, 2, 3, 4, 5, 6],
    )
    .unwrap();
    for p in &rep.points {
        assert!(
            (p.covariance - beta.tanh().powi(p.dist as i32)).abs() < 1e-10,
            "dist {}",
            p.dist
        );
        assert!(p.identity_residual.unwrap() < 1e-9);
    }
    let tf = common::tfim(9, 1.0, 1.0);
    let rep =
        dc_1d_via_expansionals(&tf, 0.08, 1.0, &pauli::id(), &pauli::z(), &[1, 2, 3]).unwrap();
    for p in &rep.points {
        assert!(p.identity_residual.unwrap() < 1e-9);
        assert!(p.covariance.abs() < 1e-12);
    }
    let perturbed = tf
        .add_scaled(
            &Interaction::single(common::single(tf.lattice(), 2, pauli::z())).unwrap(),
            0.1,
        )
        .unwrap();
    assert!(dc_1d_via_expansionals(&perturbed, 0.05, 1.0, &pauli::z(), &pauli::z(), &[1]).is_err());
    assert!(dc_1d_via_expansionals(&tf, 10.0, 1.0, &pauli::z(), &pauli::z(), &[1]).is_err());
}

#[test]
fn appending_differences_decay_on_long_range_ising() {
    let lat = Lattice::chain(10);
    let psi = generate_model(
        &ModelKind::ExpIsing {
            j: 1.0,
            g: 1.0,
            rate: 2.0,
        },
        &lat,
        0,
    )
    .unwrap();
    let beta = 0.4 * gibbslab::experiments::beta_star(&psi, 1.0).unwrap();
    let s = appending_series(&psi, beta, &[1, 2, 3, 4]).unwrap();
    let fit = s.fit.expect("fit");
    assert!(fit.rate > 0.0 && fit.r_squared >= 0.9, "{fit:?}");
    assert!(s
        .norm
        .iter()
        .zip(&s.inverse_norm)
        .all(|(a, b)| a * b >= 1.0 - 1e-12));
}
