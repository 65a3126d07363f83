//! One task per (seed, experiment, β); each returns a JSON result and flat rows.

use anyhow::{bail, Result};
use gibbslab::experiments::{
    appending_series, beta_star, chebyshev_nodes, li_remove_region, lppl_along_path, lppl_from_dc,
    lppl_unperturbed, measure_dc, measure_dc_uniform, monotone_envelope, BoundReport,
    DcCertificate, DecayLaw, LpplInstance, SizeLaw, Zeta, ZetaQbp, DEFAULT_TABLE_LEN,
};
use gibbslab::gibbs::{residuals, CovarianceOptions, GibbsState};
use gibbslab::interactions::{
    check_translation_invariance, gaussian_hermitian, DecayFunction, Interaction,
};
use gibbslab::liebrobinson::{lr_bound_perturbed, lr_bound_short_range, CommutatorProbe};
use gibbslab::qbp::{
    eta, partition_ratio_identity, trace_norm_stability, EtaOptions, EtaVariant, PerturbationPath,
};
use gibbslab::{algebra::dense, Error, LocalOperator, Region};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{self, DcParams, ExperimentSpec, LpplMode, QbpCheckParams};

pub struct Entry {
    pub seed: u64,
    pub beta: Option<f64>,
    pub result: Value,
    pub rows: Vec<Vec<String>>,
    pub violated: bool,
}

/// 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn sites(s: &[usize]) -> String {
    s.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

/// Columns after the leading `seed,beta`.
pub fn csv_columns(kind: &str) -> &'static [&'static str] {
    match kind {
        "norms" | "gibbs" => &["quantity", "value"],
        "dc" => &["sublattice", "x", "y", "dist", "value", "sup", "envelope"],
        "lppl" | "li" | "lr" => &[
            "theorem", "label", "inputs", "lhs", "rhs", "slack", "violated",
        ],
        "qbp_check" => &["instance", "check", "value", "bound", "passed"],
        "expansional" => &["q", "norm", "inverse_norm", "difference"],
        _ => &[],
    }
}

pub struct Task<'a> {
    pub spec: &'a ExperimentSpec,
    pub psi: &'a Interaction,
    pub seed: u64,
    pub beta: Option<f64>,
}

pub fn run(task: &Task) -> Result<Entry> {
    let (result, rows, violated) = match task.spec {
        ExperimentSpec::Norms(p) => norms(task.psi, &p.decay, p.two_point_alpha)?,
        ExperimentSpec::Gibbs(p) => gibbs(task, p.region.as_deref(), &p.observables)?,
        ExperimentSpec::Dc(p) => dc(task, p)?,
        ExperimentSpec::Lppl(p) => {
            let lat = task.psi.lattice();
            let inst = LpplInstance {
                psi: task.psi,
                lambda: Region::full(lat),
                beta: beta(task)?,
                v: config::operator(lat, &p.v)?,
                b: config::operator(lat, &p.b)?,
            };
            let zeta =
                ZetaQbp::short_range(task.psi, &inst.lambda, &inst.v, inst.beta, p.decay_rate)?;
            let opts = cov_opts(p.restarts, task.seed);
            let rep = match p.mode {
                LpplMode::Unperturbed => {
                    lppl_unperturbed(&inst, &zeta, p.r_grid.as_deref(), &opts)?
                }
                LpplMode::AlongPath => {
                    let nodes = chebyshev_nodes(p.s_nodes);
                    lppl_along_path(&inst, &zeta, p.r_grid.as_deref(), Some(&nodes), &opts)?
                }
            };
            bound_report(rep)
        }
        ExperimentSpec::Li(p) => {
            let lat = task.psi.lattice();
            let beta = beta(task)?;
            let lambda = Region::full(lat);
            let f = DecayFunction::Exponential { b: p.decay_rate };
            let dc = DcCertificate {
                n: 1.0,
                f: SizeLaw::power(1.0, 1.0),
                zeta: Zeta::from_law(
                    DecayLaw::exponential(p.certificate.prefactor, p.certificate.rate),
                    DEFAULT_TABLE_LEN,
                    2.0,
                ),
            };
            let psi_norm = task.psi.norm_f(&f);
            let lppl = lppl_from_dc(
                &dc,
                psi_norm,
                p.decay_rate,
                beta,
                lat.dim(),
                DEFAULT_TABLE_LEN,
            )?;
            let x = config::region(lat, &p.x)?;
            let b = config::operator(lat, &p.b)?;
            bound_report(li_remove_region(
                task.psi,
                &lambda,
                beta,
                &x,
                &b,
                &lppl,
                &f,
                p.r_grid.as_deref(),
            )?)
        }
        ExperimentSpec::Lr(p) => {
            let lat = task.psi.lattice();
            let a = config::operator(lat, &p.a)?;
            let b = config::operator(lat, &p.b)?;
            let full = Region::full(lat);
            let mut h = task.psi.assemble(&full)?;
            let psi_norm = task
                .psi
                .norm_f(&DecayFunction::Exponential { b: p.decay_rate });
            let v = p.v.as_ref().map(|v| config::operator(lat, v)).transpose()?;
            let v_norm = match &v {
                Some(v) => {
                    h = h.add(&v.embed(&full)?)?;
                    Some(v.op_norm()?)
                }
                None => None,
            };
            let scale = a.op_norm()? * b.op_norm()?;
            if scale == 0.0 {
                bail!("observables must be nonzero");
            }
            let (x, y) = (a.support().clone(), b.support().clone());
            let d = x.dist(&y)?.finite().unwrap_or(0);
            let probe = CommutatorProbe::new(&h, &a, &b)?;
            let mut rep = BoundReport::new(if v.is_some() {
                "lr_perturbed"
            } else {
                "lr_short_range"
            });
            for &t in &p.times {
                let lhs = probe.norm_at(t)? / scale;
                let rhs = match v_norm {
                    Some(vn) => lr_bound_perturbed(p.decay_rate, psi_norm, vn, &x, &y, t),
                    None => lr_bound_short_range(p.decay_rate, psi_norm, &x, &y, t),
                };
                rep.push("t", &[("t", t), ("dist", d as f64)], lhs, rhs);
            }
            bound_report(rep)
        }
        ExperimentSpec::QbpCheck(p) => qbp_check(task, p)?,
        ExperimentSpec::Expansional(p) => {
            let beta = match p.beta_fraction {
                Some(f) => f * beta_star(task.psi, p.decay_rate)?,
                None => beta(task)?,
            };
            let s = appending_series(task.psi, beta, &p.q)?;
            let rows = (0..s.q.len())
                .map(|i| {
                    vec![
                        s.q[i].to_string(),
                        num(s.norm[i]),
                        num(s.inverse_norm[i]),
                        num(s.difference[i]),
                    ]
                })
                .collect();
            (serde_json::to_value(&s)?, rows, false)
        }
    };
    Ok(Entry {
        seed: task.seed,
        beta: task.beta,
        result,
        rows,
        violated,
    })
}

fn beta(task: &Task) -> Result<f64> {
    task.beta
        .ok_or_else(|| anyhow::anyhow!("experiment needs a beta"))
}

fn cov_opts(restarts: usize, seed: u64) -> CovarianceOptions {
    CovarianceOptions {
        restarts,
        seed,
        ..CovarianceOptions::default()
    }
}

type Out = (Value, Vec<Vec<String>>, bool);

fn bound_report(rep: BoundReport) -> Out {
    let rows = rep
        .points
        .iter()
        .map(|p| {
            let inputs = p
                .inputs
                .iter()
                .map(|(k, v)| format!("{k}={}", num(*v)))
                .collect::<Vec<_>>()
                .join(";");
            vec![
                rep.theorem.clone(),
                p.label.clone(),
                inputs,
                num(p.lhs),
                num(p.rhs),
                num(p.slack),
                p.violated().to_string(),
            ]
        })
        .collect();
    let violated = rep.violated;
    (
        serde_json::to_value(&rep).expect("report serializes"),
        rows,
        violated,
    )
}

fn decay_label(d: &DecayFunction) -> String {
    match *d {
        DecayFunction::Exponential { b } => format!("norm_exponential(b={b})"),
        DecayFunction::Stretched { b, p } => format!("norm_stretched(b={b};p={p})"),
        DecayFunction::Polynomial { alpha } => format!("norm_polynomial(alpha={alpha})"),
    }
}

fn norms(psi: &Interaction, decay: &[DecayFunction], alpha: Option<f64>) -> Result<Out> {
    let mut q: Vec<(String, f64)> = vec![
        ("terms".into(), psi.len() as f64),
        ("locality".into(), psi.locality() as f64),
        ("norm_flat".into(), psi.norm_f(&DecayFunction::flat())),
    ];
    for d in decay {
        q.push((decay_label(d), psi.norm_f(d)));
    }
    if let Some(a) = alpha {
        q.push((format!("norm_two_point(alpha={a})"), psi.norm_two_point(a)));
    }
    match check_translation_invariance(psi) {
        Ok(t) => {
            q.push((
                "translation_invariant".into(),
                f64::from(u8::from(t.invariant)),
            ));
            q.push(("translation_deviation".into(), t.max_deviation));
        }
        Err(Error::InvalidParameter(_)) => {}
        Err(e) => return Err(e.into()),
    }
    let result = Value::Object(q.iter().map(|(k, v)| (k.clone(), json!(v))).collect());
    let rows = q.into_iter().map(|(k, v)| vec![k, num(v)]).collect();
    Ok((result, rows, false))
}

fn gibbs(
    task: &Task,
    region: Option<&[gibbslab::lattice::Coord]>,
    observables: &[config::OperatorSpec],
) -> Result<Out> {
    let lat = task.psi.lattice();
    let region = match region {
        Some(r) => config::region(lat, r)?,
        None => Region::full(lat),
    };
    let state = GibbsState::new(&task.psi.assemble(&region)?, beta(task)?)?;
    let energy = state.expect(state.hamiltonian())?.re;
    let (comm, trace) = residuals(&state)?;
    let mut q: Vec<(String, f64)> = vec![
        ("log_partition".into(), state.log_partition()),
        ("energy".into(), energy),
        ("commutator_residual".into(), comm),
        ("trace_residual".into(), trace),
    ];
    for (i, o) in observables.iter().enumerate() {
        let op = config::operator(lat, o)?;
        let v = state.expect(&op)?;
        q.push((format!("observable_{i}_re"), v.re));
        q.push((format!("observable_{i}_im"), v.im));
    }
    let mut result = serde_json::Map::new();
    result.insert("sites".into(), json!(region.sites()));
    for (k, v) in &q {
        result.insert(k.clone(), json!(v));
    }
    let rows = q.into_iter().map(|(k, v)| vec![k, num(v)]).collect();
    Ok((Value::Object(result), rows, false))
}

fn dc(task: &Task, p: &DcParams) -> Result<Out> {
    let lat = task.psi.lattice();
    let beta = beta(task)?;
    let lambda = match &p.region {
        Some(r) => config::region(lat, r)?,
        None => Region::full(lat),
    };
    let opts = cov_opts(p.restarts, task.seed);
    let series = if p.uniform {
        let pairs_of = |sub: &Region| {
            let s = sub.sites();
            s[1..]
                .iter()
                .map(|&y| (Region::single(lat, s[0]), Region::single(lat, y)))
                .collect::<Vec<_>>()
        };
        measure_dc_uniform(task.psi, &lambda, beta, pairs_of, p.model, task.seed, &opts)?
    } else {
        let pairs = match &p.anchor {
            Some(a) => {
                let x = config::region(lat, std::slice::from_ref(a))?;
                lambda
                    .sites()
                    .iter()
                    .filter(|&&s| !x.contains(s))
                    .map(|&s| (x.clone(), Region::single(lat, s)))
                    .collect()
            }
            None => p
                .pairs
                .iter()
                .map(|q| Ok((config::region(lat, &q.x)?, config::region(lat, &q.y)?)))
                .collect::<Result<Vec<_>>>()?,
        };
        measure_dc(task.psi, &lambda, beta, &pairs, p.model, &opts)?
    };
    let env = monotone_envelope(&series.sup);
    let at = |d: usize| {
        series
            .dist
            .iter()
            .position(|&x| x == d)
            .expect("dist present")
    };
    let rows = series
        .points
        .iter()
        .map(|pt| {
            let i = at(pt.dist);
            vec![
                sites(&pt.sublattice),
                sites(&pt.x),
                sites(&pt.y),
                pt.dist.to_string(),
                num(pt.value),
                num(series.sup[i]),
                num(env[i]),
            ]
        })
        .collect();
    Ok((serde_json::to_value(&series)?, rows, false))
}

fn qbp_check(task: &Task, p: &QbpCheckParams) -> Result<Out> {
    let lat = task.psi.lattice();
    let beta = beta(task)?;
    let x = config::region(lat, &p.x)?;
    let full = Region::full(lat);
    let h = task.psi.assemble(&full)?;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut violated = false;
    for i in 0..p.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(
            task.seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(i as u64),
        );
        let v = LocalOperator::new(
            x.clone(),
            gaussian_hermitian(&mut rng, x.hilbert_dim(), p.v_norm)?,
        )?;
        let path = PerturbationPath::new(h.clone(), v.clone())?;
        let mut record = |check: &str, value: f64, bound: f64| {
            let passed = value <= bound;
            violated |= !passed;
            rows.push(vec![
                i.to_string(),
                check.to_string(),
                num(value),
                num(bound),
                passed.to_string(),
            ]);
            checks.push(json!({"instance": i, "check": check, "value": value, "bound": bound, "passed": passed}));
        };
        let h1 = path.hamiltonian_at(1.0)?;
        let target = h1.exp_herm(-beta)?;
        let opts = EtaOptions::default();
        match eta(&path, beta, EtaVariant::Plain, None, &opts) {
            Ok(sol) => {
                let e = sol.last();
                let rec = e.dot(h.exp_herm(-beta)?.matrix()).dot(&dense::adjoint(e));
                let err = dense::op_norm(&(rec - target.matrix()))? / target.op_norm()?;
                record("eta_reconstruction", err, p.tolerance);
            }
            Err(Error::Invariant(_)) => record("eta_growth", 1.0, 0.0),
            Err(e) => return Err(e.into()),
        }
        match eta(&path, beta, EtaVariant::Tilde, None, &opts) {
            Ok(sol) => {
                let e = sol.last();
                let rho0 = GibbsState::new(&h, beta)?;
                let rho1 = GibbsState::new(&h1, beta)?;
                let rec = e.dot(rho0.rho().matrix()).dot(&dense::adjoint(e));
                let err = dense::trace_norm(&(rec - rho1.rho().matrix()))?;
                record("eta_tilde_reconstruction", err, p.tolerance);
            }
            Err(Error::Invariant(_)) => record("eta_tilde_growth", 1.0, 0.0),
            Err(e) => return Err(e.into()),
        }
        let vn = path.v_norm()?;
        let ratio = partition_ratio_identity(&path, beta, 1.0)?;
        record("partition_ratio", ratio, p.tolerance * (beta * vn).exp());
        let (lhs, rhs) = trace_norm_stability(&h, &v, beta, 1.0)?;
        record("trace_norm_stability", lhs, rhs * (1.0 + 1e-9) + 1e-12);
    }
    Ok((json!({ "checks": checks }), rows, violated))
}
