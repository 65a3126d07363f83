//! Run configuration: parsing, validation and resolution against a lattice.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use gibbslab::algebra::Tolerances;
use gibbslab::experiments::DecayModel;
use gibbslab::interactions::{generate_model, DecayFunction, Interaction, ModelKind};
use gibbslab::lattice::Coord;
use gibbslab::{pauli, Lattice, LocalOperator, Mat, Region, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub interaction: InteractionSpec,
    #[serde(default)]
    pub beta: Vec<f64>,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Option<ToleranceSpec>,
    #[serde(default)]
    pub jobs: Option<usize>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    /// Spatial dimension ν.
    pub dim: usize,
    pub extent: Vec<usize>,
    #[serde(default = "two")]
    pub local_dim: usize,
}

fn two() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionSpec {
    Model(ModelKind),
    Terms(Vec<TermSpec>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub sites: Vec<Coord>,
    pub matrix: MatrixSpec,
}

/// Rows of [re, im] pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

/// An operator on a sorted coordinate list, given either as a Pauli string
/// (one letter of I, X, Y, Z per site) or as an explicit matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub sites: Vec<Coord>,
    #[serde(default)]
    pub pauli: Option<String>,
    #[serde(default)]
    pub matrix: Option<MatrixSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    pub x: Vec<Coord>,
    pub y: Vec<Coord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub herm: Option<f64>,
    pub psd: Option<f64>,
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentSpec {
    Norms(NormsParams),
    Gibbs(GibbsParams),
    Dc(DcParams),
    Lppl(LpplParams),
    Li(LiParams),
    Lr(LrParams),
    QbpCheck(QbpCheckParams),
    Expansional(ExpansionalParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsParams {
    pub name: String,
    #[serde(default)]
    pub decay: Vec<DecayFunction>,
    #[serde(default)]
    pub two_point_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsParams {
    pub name: String,
    /// Defaults to the whole lattice.
    #[serde(default)]
    pub region: Option<Vec<Coord>>,
    #[serde(default)]
    pub observables: Vec<OperatorSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DcParams {
    pub name: String,
    #[serde(default)]
    pub region: Option<Vec<Coord>>,
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// Pairs ({anchor}, {y}) for every other site y.
    #[serde(default)]
    pub anchor: Option<Coord>,
    /// Repeat on every sub-box, anchored at each box's first site.
    #[serde(default)]
    pub uniform: bool,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_model")]
    pub model: DecayModel,
}

fn default_restarts() -> usize {
    8
}

fn default_model() -> DecayModel {
    DecayModel::Exponential
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpplMode {
    Unperturbed,
    AlongPath,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpplParams {
    pub name: String,
    pub v: OperatorSpec,
    pub b: OperatorSpec,
    #[serde(default = "default_lppl_mode")]
    pub mode: LpplMode,
    /// Exponential decay rate b of the interaction norm.
    #[serde(default = "one")]
    pub decay_rate: f64,
    #[serde(default)]
    pub r_grid: Option<Vec<usize>>,
    #[serde(default = "default_s_nodes")]
    pub s_nodes: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_lppl_mode() -> LpplMode {
    LpplMode::Unperturbed
}

fn default_s_nodes() -> usize {
    17
}

/// Exponential DC certificate C e^{-c d}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub prefactor: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiParams {
    pub name: String,
    pub x: Vec<Coord>,
    pub b: OperatorSpec,
    pub certificate: CertificateSpec,
    #[serde(default = "one")]
    pub decay_rate: f64,
    #[serde(default)]
    pub r_grid: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrParams {
    pub name: String,
    pub a: OperatorSpec,
    pub b: OperatorSpec,
    /// Perturbation on the support of `a`; switches to the perturbed bound.
    #[serde(default)]
    pub v: Option<OperatorSpec>,
    pub times: Vec<f64>,
    #[serde(default = "one")]
    pub decay_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QbpCheckParams {
    pub name: String,
    /// Support of the random perturbations.
    pub x: Vec<Coord>,
    #[serde(default = "one")]
    pub v_norm: f64,
    #[serde(default = "one_usize")]
    pub instances: usize,
    /// Bound on the reconstruction residuals; the partition-ratio bound is
    /// this times e^{β‖V‖}.
    #[serde(default = "identity_tol")]
    pub tolerance: f64,
}

fn identity_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionalParams {
    pub name: String,
    pub q: Vec<usize>,
    #[serde(default = "one")]
    pub decay_rate: f64,
    /// Run at this fraction of β* instead of the β list.
    #[serde(default)]
    pub beta_fraction: Option<f64>,
}

impl ExperimentSpec {
    pub fn name(&self) -> &str {
        match self {
            ExperimentSpec::Norms(p) => &p.name,
            ExperimentSpec::Gibbs(p) => &p.name,
            ExperimentSpec::Dc(p) => &p.name,
            ExperimentSpec::Lppl(p) => &p.name,
            ExperimentSpec::Li(p) => &p.name,
            ExperimentSpec::Lr(p) => &p.name,
            ExperimentSpec::QbpCheck(p) => &p.name,
            ExperimentSpec::Expansional(p) => &p.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Norms(_) => "norms",
            ExperimentSpec::Gibbs(_) => "gibbs",
            ExperimentSpec::Dc(_) => "dc",
            ExperimentSpec::Lppl(_) => "lppl",
            ExperimentSpec::Li(_) => "li",
            ExperimentSpec::Lr(_) => "lr",
            ExperimentSpec::QbpCheck(_) => "qbp_check",
            ExperimentSpec::Expansional(_) => "expansional",
        }
    }

    /// Whether the experiment runs once per β of the list.
    pub fn uses_beta_list(&self) -> bool {
        match self {
            ExperimentSpec::Norms(_) | ExperimentSpec::Lr(_) => false,
            ExperimentSpec::Expansional(p) => p.beta_fraction.is_none(),
            _ => true,
        }
    }
}

/// Parses config text; errors carry serde's line, column and field name.
pub fn parse(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| anyhow!("config error: {e}"))?;
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<(RunConfig, serde_json::Value)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = parse(&text)?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    Ok((cfg, raw))
}

impl RunConfig {
    pub fn build_lattice(&self) -> Result<Arc<Lattice>> {
        let l = &self.lattice;
        if l.dim != l.extent.len() {
            bail!(
                "config error: lattice.dim = {} but extent has {} entries",
                l.dim,
                l.extent.len()
            );
        }
        Ok(Lattice::cuboid(&l.extent, l.local_dim)?)
    }

    pub fn build_interaction(&self, lattice: &Arc<Lattice>, seed: u64) -> Result<Interaction> {
        match &self.interaction {
            InteractionSpec::Model(kind) => Ok(generate_model(kind, lattice, seed)?),
            InteractionSpec::Terms(terms) => {
                let mut psi = Interaction::new(lattice);
                for (i, t) in terms.iter().enumerate() {
                    let region = region(lattice, &t.sites)
                        .with_context(|| format!("interaction term {i}"))?;
                    let m = matrix(&t.matrix).with_context(|| format!("interaction term {i}"))?;
                    psi.insert(LocalOperator::new(region, m)?)
                        .with_context(|| format!("interaction term {i}"))?;
                }
                Ok(psi)
            }
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(o) = &self.tolerances {
            t.herm = o.herm.unwrap_or(t.herm);
            t.psd = o.psd.unwrap_or(t.psd);
            t.trace = o.trace.unwrap_or(t.trace);
        }
        t
    }

    /// Checks everything that can be checked without diagonalizing.
    pub fn validate(&self) -> Result<()> {
        let lattice = self.build_lattice()?;
        for (i, &b) in self.beta.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                bail!("config error: beta[{i}] = {b} must be positive");
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for e in &self.experiments {
            let ctx = || format!("experiment `{}`", e.name());
            if !names.insert(e.name().to_string()) {
                bail!("config error: duplicate experiment name `{}`", e.name());
            }
            if e.name().is_empty()
                || !e
                    .name()
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                bail!(
                    "config error: experiment name `{}` must be nonempty [A-Za-z0-9_-]",
                    e.name()
                );
            }
            if e.uses_beta_list() && self.beta.is_empty() {
                bail!(
                    "config error: experiment `{}` needs a nonempty beta list",
                    e.name()
                );
            }
            validate_experiment(e, &lattice).with_context(ctx)?;
        }
        Ok(())
    }
}

fn validate_experiment(e: &ExperimentSpec, lattice: &Arc<Lattice>) -> Result<()> {
    match e {
        ExperimentSpec::Norms(p) => {
            for d in &p.decay {
                d.validate()?;
            }
        }
        ExperimentSpec::Gibbs(p) => {
            if let Some(r) = &p.region {
                region(lattice, r)?;
            }
            for o in &p.observables {
                operator(lattice, o)?;
            }
        }
        ExperimentSpec::Dc(p) => {
            if let Some(r) = &p.region {
                region(lattice, r)?;
            }
            let modes = usize::from(!p.pairs.is_empty())
                + usize::from(p.anchor.is_some())
                + usize::from(p.uniform);
            if modes != 1 {
                bail!("give exactly one of `pairs`, `anchor` or `uniform: true`");
            }
            for q in &p.pairs {
                region(lattice, &q.x)?;
                region(lattice, &q.y)?;
            }
            if let Some(a) = &p.anchor {
                region(lattice, std::slice::from_ref(a))?;
            }
        }
        ExperimentSpec::Lppl(p) => {
            operator(lattice, &p.v)?;
            operator(lattice, &p.b)?;
            positive("decay_rate", p.decay_rate)?;
            if p.s_nodes < 2 {
                bail!("s_nodes must be at least 2");
            }
        }
        ExperimentSpec::Li(p) => {
            region(lattice, &p.x)?;
            operator(lattice, &p.b)?;
            positive("decay_rate", p.decay_rate)?;
            positive("certificate.prefactor", p.certificate.prefactor)?;
            positive("certificate.rate", p.certificate.rate)?;
        }
        ExperimentSpec::Lr(p) => {
            operator(lattice, &p.a)?;
            operator(lattice, &p.b)?;
            if let Some(v) = &p.v {
                let v = operator(lattice, v)?;
                if v.support() != operator(lattice, &p.a)?.support() {
                    bail!("`v` must share the support of `a`");
                }
            }
            positive("decay_rate", p.decay_rate)?;
            if p.times.is_empty() {
                bail!("`times` is empty");
            }
        }
        ExperimentSpec::QbpCheck(p) => {
            region(lattice, &p.x)?;
            if !(p.v_norm >= 0.0 && p.v_norm.is_finite()) {
                bail!("v_norm = {} must be nonnegative", p.v_norm);
            }
            if !(p.tolerance >= 0.0) {
                bail!("tolerance = {} must be nonnegative", p.tolerance);
            }
        }
        ExperimentSpec::Expansional(p) => {
            if lattice.dim() != 1 {
                bail!("expansionals need a chain");
            }
            if p.q.is_empty() || p.q.contains(&0) {
                bail!("`q` must list positive block lengths");
            }
            positive("decay_rate", p.decay_rate)?;
            if let Some(f) = p.beta_fraction {
                if !(f > 0.0 && f < 1.0) {
                    bail!("beta_fraction = {f} must lie in (0, 1)");
                }
            }
        }
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        bail!("{name} = {v} must be positive")
    }
}

pub fn region(lattice: &Arc<Lattice>, coords: &[Coord]) -> Result<Region> {
    if coords.iter().any(|c| c.len() != lattice.dim()) {
        bail!("coordinates must have {} components", lattice.dim());
    }
    if coords.windows(2).any(|w| w[0] >= w[1]) {
        bail!("coordinate list {coords:?} must be sorted and free of repeats");
    }
    Ok(Region::from_coords(lattice, coords)?)
}

pub fn matrix(spec: &MatrixSpec) -> Result<Mat> {
    let n = spec.len();
    if spec.iter().any(|row| row.len() != n) {
        bail!("matrix must be square");
    }
    Ok(Mat::from_shape_fn((n, n), |(i, j)| {
        C64::new(spec[i][j][0], spec[i][j][1])
    }))
}

pub fn operator(lattice: &Arc<Lattice>, spec: &OperatorSpec) -> Result<LocalOperator> {
    let support = region(lattice, &spec.sites)?;
    match (&spec.pauli, &spec.matrix) {
        (Some(p), None) => {
            if lattice.local_dim() != 2 {
                bail!("Pauli strings need local dimension 2");
            }
            if p.chars().count() != spec.sites.len() {
                bail!(
                    "Pauli string `{p}` has {} letters for {} sites",
                    p.chars().count(),
                    spec.sites.len()
                );
            }
            let factors = p
                .chars()
                .map(|ch| match ch.to_ascii_uppercase() {
                    'I' => Ok(pauli::id()),
                    'X' => Ok(pauli::x()),
                    'Y' => Ok(pauli::y()),
                    'Z' => Ok(pauli::z()),
                    _ => Err(anyhow!("unknown Pauli letter `{ch}`")),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LocalOperator::product(support, &factors)?)
        }
        (None, Some(m)) => Ok(LocalOperator::new(support, matrix(m)?)?),
        _ => bail!("give exactly one of `pauli` or `matrix`"),
    }
}
