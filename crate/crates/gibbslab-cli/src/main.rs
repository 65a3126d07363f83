//! `gibbslab`: config-driven runs of the exact-diagonalization experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod exec;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use gibbslab::experiments::{fit_decay, DecayModel};
use gibbslab::interactions::{DecayFunction, ModelKind};
use rayon::prelude::*;

use config::{
    ExperimentSpec, Format, GibbsParams, InteractionSpec, LatticeSpec, NormsParams, QbpCheckParams,
    RunConfig,
};
use exec::{num, Task};
use output::ExperimentReport;

#[derive(Parser)]
#[command(
    name = "gibbslab",
    version,
    about = "Exact-diagonalization experiments on finite spin lattices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every experiment in the config.
    Run(Common),
    /// Interaction norms, locality and translation invariance.
    Norms(Common),
    /// Gibbs state summaries (log Z, energy, observables).
    Gibbs(Common),
    /// Decay-of-correlations series.
    Dc(Common),
    /// Local-perturbation bounds.
    Lppl(Common),
    /// Local-indistinguishability bounds.
    Li(Common),
    /// Lieb-Robinson bounds against measured commutators.
    Lr(Common),
    /// Identity suite: eta reconstruction, partition ratio, trace-norm stability.
    QbpCheck(Common),
    /// Every experiment for every seed listed under `sweep.seeds`.
    Sweep(Common),
    /// Fit a decay law to two CSV columns.
    Fit(FitArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FitModel {
    Exponential,
    Stretched,
    Polynomial,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    input: PathBuf,
    /// Abscissa column, by header name or zero-based index.
    #[arg(long, default_value = "0")]
    x: String,
    /// Value column, by header name or zero-based index.
    #[arg(long, default_value = "1")]
    y: String,
    #[arg(long, value_enum, default_value = "exponential")]
    model: FitModel,
    /// Stretch exponent for the stretched model.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.cmd) {
        Ok(true) => ExitCode::from(2),
        Ok(false) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Ok(true) when some bound was violated.
fn dispatch(cmd: Cmd) -> Result<bool> {
    match cmd {
        Cmd::Run(c) => execute(&c, "run", None, false),
        Cmd::Sweep(c) => execute(&c, "sweep", None, true),
        Cmd::Norms(c) => execute(&c, "norms", Some("norms"), false),
        Cmd::Gibbs(c) => execute(&c, "gibbs", Some("gibbs"), false),
        Cmd::Dc(c) => execute(&c, "dc", Some("dc"), false),
        Cmd::Lppl(c) => execute(&c, "lppl", Some("lppl"), false),
        Cmd::Li(c) => execute(&c, "li", Some("li"), false),
        Cmd::Lr(c) => execute(&c, "lr", Some("lr"), false),
        Cmd::QbpCheck(c) => execute(&c, "qbp-check", Some("qbp_check"), false),
        Cmd::Fit(f) => fit(&f).map(|_| false),
    }
}

/// Random two-body chain of six sites with unit-norm perturbations on the
/// middle site.
fn qbp_default(seed: u64) -> RunConfig {
    RunConfig {
        lattice: LatticeSpec {
            dim: 1,
            extent: vec![6],
            local_dim: 2,
        },
        interaction: InteractionSpec::Model(ModelKind::RandomKLocal {
            k: 2,
            decay: DecayFunction::Exponential { b: 1.0 },
            strength: 1.0,
            r_max: 4,
        }),
        beta: vec![0.3, 1.0],
        experiments: vec![ExperimentSpec::QbpCheck(QbpCheckParams {
            name: "qbp_check".into(),
            x: vec![vec![2]],
            v_norm: 1.0,
            instances: 4,
            tolerance: 1e-8,
        })],
        output: None,
        seed,
        tolerances: None,
        jobs: None,
        sweep: None,
    }
}

fn default_experiment(kind: &str) -> Option<ExperimentSpec> {
    match kind {
        "norms" => Some(ExperimentSpec::Norms(NormsParams {
            name: "norms".into(),
            decay: vec![DecayFunction::Exponential { b: 1.0 }],
            two_point_alpha: None,
        })),
        "gibbs" => Some(ExperimentSpec::Gibbs(GibbsParams {
            name: "gibbs".into(),
            region: None,
            observables: Vec::new(),
        })),
        _ => None,
    }
}

fn execute(c: &Common, command: &str, only: Option<&str>, sweep: bool) -> Result<bool> {
    let started = output::unix_now();
    let (mut cfg, raw) = match &c.config {
        Some(p) => config::load(p)?,
        None if only == Some("qbp_check") => {
            let cfg = qbp_default(c.seed.unwrap_or(0));
            let raw = serde_json::to_value(&cfg)?;
            (cfg, raw)
        }
        None => bail!("`{command}` needs --config PATH"),
    };
    if let Some(kind) = only {
        cfg.experiments.retain(|e| e.kind() == kind);
        if cfg.experiments.is_empty() {
            match default_experiment(kind) {
                Some(e) => cfg.experiments.push(e),
                None => bail!("config lists no `{kind}` experiments"),
            }
        }
    }
    cfg.validate()?;
    let seeds = if sweep {
        if c.seed.is_some() {
            bail!("`sweep` takes its seeds from `sweep.seeds`, not --seed");
        }
        match &cfg.sweep {
            Some(s) if !s.seeds.is_empty() => s.seeds.clone(),
            _ => bail!("config error: `sweep` needs a nonempty `sweep.seeds`"),
        }
    } else {
        vec![c.seed.unwrap_or(cfg.seed)]
    };
    gibbslab::algebra::set_tolerances(cfg.tolerances());
    let jobs = c.jobs.or(cfg.jobs).unwrap_or(1);
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    let lattice = cfg.build_lattice()?;
    let interactions = seeds
        .iter()
        .map(|&s| cfg.build_interaction(&lattice, s))
        .collect::<Result<Vec<_>>>()?;

    let mut tasks = Vec::new();
    let mut spans = Vec::new();
    for spec in &cfg.experiments {
        let start = tasks.len();
        for (seed, psi) in seeds.iter().zip(&interactions) {
            if spec.uses_beta_list() {
                for &b in &cfg.beta {
                    tasks.push(Task {
                        spec,
                        psi,
                        seed: *seed,
                        beta: Some(b),
                    });
                }
            } else {
                tasks.push(Task {
                    spec,
                    psi,
                    seed: *seed,
                    beta: None,
                });
            }
        }
        spans.push(start..tasks.len());
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let results: Vec<Result<exec::Entry>> =
        pool.install(|| tasks.par_iter().map(exec::run).collect());

    let mut results = results.into_iter();
    let mut reports = Vec::new();
    for (spec, span) in cfg.experiments.iter().zip(spans) {
        let mut entries = Vec::with_capacity(span.len());
        for r in results.by_ref().take(span.len()) {
            entries.push(r.with_context(|| format!("experiment `{}`", spec.name()))?);
        }
        reports.push(ExperimentReport {
            name: spec.name().to_string(),
            kind: spec.kind(),
            entries,
        });
    }

    let out = c
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| PathBuf::from(&o.dir)));
    let format = c
        .format
        .or(cfg.output.as_ref().and_then(|o| o.format))
        .unwrap_or(Format::Both);
    if let Some(dir) = &out {
        output::write_all(dir, format, &reports, &raw, &seeds, command, started)?;
    }
    for r in &reports {
        let status = if r.violated() { "VIOLATED" } else { "ok" };
        println!(
            "{} ({}): {} entries, {status}",
            r.name,
            r.kind,
            r.entries.len()
        );
        if r.kind == "qbp_check" && out.is_none() {
            for e in &r.entries {
                for row in &e.rows {
                    println!(
                        "  seed {} beta {} {}",
                        e.seed,
                        e.beta.map(num).unwrap_or_default(),
                        row.join(" ")
                    );
                }
            }
        }
    }
    Ok(reports.iter().any(ExperimentReport::violated))
}

fn column(headers: &csv::StringRecord, key: &str) -> Result<usize> {
    if let Some(i) = headers.iter().position(|h| h == key) {
        return Ok(i);
    }
    match key.parse::<usize>() {
        Ok(i) if i < headers.len() => Ok(i),
        _ => bail!(
            "no column `{key}` in {:?}",
            headers.iter().collect::<Vec<_>>()
        ),
    }
}

fn fit(a: &FitArgs) -> Result<()> {
    let mut rdr = csv::Reader::from_path(&a.input)
        .with_context(|| format!("reading {}", a.input.display()))?;
    let headers = rdr.headers()?.clone();
    let (ix, iy) = (column(&headers, &a.x)?, column(&headers, &a.y)?);
    let (mut r, mut y) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .trim()
                .parse()
                .with_context(|| format!("row {}: column {i} is not a number", line + 1))
        };
        r.push(parse(ix)?);
        y.push(parse(iy)?);
    }
    let model = match a.model {
        FitModel::Exponential => DecayModel::Exponential,
        FitModel::Polynomial => DecayModel::Polynomial,
        FitModel::Stretched => DecayModel::Stretched {
            p: a.p.context("the stretched model needs --p")?,
        },
    };
    let f = fit_decay(&r, &y, model)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&f)?);
    } else {
        println!("prefactor {}", num(f.prefactor));
        println!("rate {}", num(f.rate));
        println!("r_squared {}", num(f.r_squared));
        println!("used {}", f.used);
    }
    Ok(())
}
