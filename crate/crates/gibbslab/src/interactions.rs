//! Interactions, decay families, interaction norms and model generators.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{self, c, dense, LocalOperator, Mat, ONE};
use crate::error::{Error, Result};
use crate::lattice::{Distance, Lattice, Region};
use crate::pauli;

/// Decay profile F on [0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecayFunction {
    /// e^{-b r}
    Exponential { b: f64 },
    /// e^{-b r^p}, 0 < p < 1
    Stretched { b: f64, p: f64 },
    /// (r + 1)^{-alpha}
    Polynomial { alpha: f64 },
}

impl DecayFunction {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DecayFunction::Exponential { b } => b >= 0.0 && b.is_finite(),
            DecayFunction::Stretched { b, p } => b > 0.0 && b.is_finite() && p > 0.0 && p < 1.0,
            DecayFunction::Polynomial { alpha } => alpha > 0.0 && alpha.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "bad decay parameters {self:?}"
            )))
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return 0.0;
        }
        match *self {
            DecayFunction::Exponential { b } => (-b * r).exp(),
            DecayFunction::Stretched { b, p } => (-b * r.powf(p)).exp(),
            DecayFunction::Polynomial { alpha } => (r + 1.0).powf(-alpha),
        }
    }

    pub fn at(&self, d: Distance) -> f64 {
        self.eval(d.as_f64())
    }

    /// F ≡ 1, the weight behind ‖Ψ‖_0.
    pub fn flat() -> DecayFunction {
        DecayFunction::Exponential { b: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionMeta {
    pub kind: Option<String>,
    pub translation_invariant: bool,
    pub k_local: Option<usize>,
    pub decay: Option<DecayFunction>,
}

#[derive(Debug, Clone)]
struct Term {
    op: LocalOperator,
    norm: f64,
}

/// Map from regions to Hermitian local terms.
#[derive(Debug, Clone)]
pub struct Interaction {
    lattice: Arc<Lattice>,
    terms: BTreeMap<Vec<usize>, Term>,
    pub meta: InteractionMeta,
}

impl Interaction {
    pub fn new(lattice: &Arc<Lattice>) -> Interaction {
        Interaction {
            lattice: Arc::clone(lattice),
            terms: BTreeMap::new(),
            meta: InteractionMeta::default(),
        }
    }

    /// One-term interaction {support(op) ↦ op}.
    pub fn single(op: LocalOperator) -> Result<Interaction> {
        let mut psi = Interaction::new(op.support().lattice());
        psi.insert(op)?;
        Ok(psi)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// Adds a term; terms on an existing support are summed.
    pub fn insert(&mut self, op: LocalOperator) -> Result<()> {
        if !Arc::ptr_eq(op.support().lattice(), &self.lattice)
            && **op.support().lattice() != *self.lattice
        {
            return Err(Error::MismatchedLattice);
        }
        if op.support().is_empty() {
            return Err(Error::EmptyRegion);
        }
        let dev = op.hermitian_deviation();
        if dev > algebra::tolerances().herm {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let key = op.support().sites().to_vec();
        let op = match self.terms.remove(&key) {
            Some(old) => old.op.add(&op)?,
            None => op,
        };
        let norm = op.op_norm()?;
        self.terms.insert(key, Term { op, norm });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &LocalOperator> {
        self.terms.values().map(|t| &t.op)
    }

    /// Terms with their cached operator norms.
    pub fn terms_with_norms(&self) -> impl Iterator<Item = (&LocalOperator, f64)> {
        self.terms.values().map(|t| (&t.op, t.norm))
    }

    pub fn term(&self, sites: &[usize]) -> Option<&LocalOperator> {
        self.terms.get(sites).map(|t| &t.op)
    }

    /// Ψ + s·Φ.
    pub fn add_scaled(&self, other: &Interaction, s: f64) -> Result<Interaction> {
        let mut out = self.clone();
        out.meta = InteractionMeta::default();
        for op in other.terms() {
            out.insert(op.scale_re(s))?;
        }
        out.terms.retain(|_, t| t.norm > 0.0);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Interaction {
        let mut out = self.clone();
        for t in out.terms.values_mut() {
            t.op = t.op.scale_re(s);
            t.norm *= s.abs();
        }
        if s == 0.0 {
            out.terms.clear();
        }
        out
    }

    /// Terms supported inside `region`.
    pub fn restrict(&self, region: &Region) -> Interaction {
        let mut out = Interaction::new(&self.lattice);
        for (k, t) in &self.terms {
            if k.iter().all(|&s| region.contains(s)) {
                out.terms.insert(k.clone(), t.clone());
            }
        }
        out
    }

    /// Largest k with a term on k sites.
    pub fn locality(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// ‖Ψ‖_F = sup_z Σ_{Z∋z} |Z| ‖Ψ(Z)‖ / F(diam Z).
    pub fn norm_f(&self, f: &DecayFunction) -> f64 {
        let mut per_site = vec![0.0; self.lattice.len()];
        for t in self.terms.values() {
            let sup = t.op.support();
            let diam = sup.diam().unwrap_or(0) as f64;
            let w = sup.len() as f64 * t.norm / f.eval(diam);
            for &z in sup.sites() {
                per_site[z] += w;
            }
        }
        per_site.into_iter().fold(0.0, f64::max)
    }

    /// sup_{x,y} Σ_{Z∋x,y} ‖Ψ(Z)‖ / F_α(d(x,y)).
    pub fn norm_two_point(&self, alpha: f64) -> f64 {
        let n = self.lattice.len();
        let mut pair = vec![0.0; n * n];
        for t in self.terms.values() {
            let s = t.op.support().sites();
            for &x in s {
                for &y in s {
                    pair[x * n + y] += t.norm;
                }
            }
        }
        let mut best: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                let d = self.lattice.site_dist(x, y) as f64;
                best = best.max(pair[x * n + y] * (d + 1.0).powf(alpha));
            }
        }
        best
    }

    /// Σ_n e^{λn} sup_z Σ_{Z∋z, diam Z ≥ n} ‖Ψ(Z)‖, n up to the largest
    /// term diameter.
    pub fn norm_lambda(&self, lambda: f64) -> f64 {
        let max_diam = self
            .terms
            .values()
            .map(|t| t.op.support().diam().unwrap_or(0))
            .max();
        let Some(max_diam) = max_diam else {
            return 0.0;
        };
        let mut total = 0.0;
        for n in 0..=max_diam {
            let mut per_site = vec![0.0; self.lattice.len()];
            for t in self.terms.values() {
                let sup = t.op.support();
                if sup.diam().unwrap_or(0) >= n {
                    for &z in sup.sites() {
                        per_site[z] += t.norm;
                    }
                }
            }
            total += (lambda * n as f64).exp() * per_site.into_iter().fold(0.0, f64::max);
        }
        total
    }

    /// H_{Λ'} = Σ_{Z ⊆ Λ'} Ψ(Z) on Λ'.
    pub fn assemble(&self, region: &Region) -> Result<LocalOperator> {
        self.assemble_within(region, region)
    }

    /// Σ_{Z ⊆ inside} Ψ(Z), embedded on `on` ⊇ inside.
    pub fn assemble_within(&self, inside: &Region, on: &Region) -> Result<LocalOperator> {
        if !inside.is_subset(on) {
            return Err(Error::NotSubset {
                inner: inside.sites().to_vec(),
                outer: on.sites().to_vec(),
            });
        }
        let mut h = LocalOperator::zero(on.clone())?.into_matrix();
        for (k, t) in &self.terms {
            if k.iter().all(|&s| inside.contains(s)) {
                t.op.accumulate_into(&mut h, on, ONE)?;
            }
        }
        LocalOperator::new(on.clone(), h)
    }

    /// Sum of the terms meeting both `a` and `b`, embedded on `on`.
    pub fn crossing(&self, a: &Region, b: &Region, on: &Region) -> Result<LocalOperator> {
        let mut h = LocalOperator::zero(on.clone())?.into_matrix();
        for (k, t) in &self.terms {
            let in_on = k.iter().all(|&s| on.contains(s));
            if in_on && k.iter().any(|&s| a.contains(s)) && k.iter().any(|&s| b.contains(s)) {
                t.op.accumulate_into(&mut h, on, ONE)?;
            }
        }
        LocalOperator::new(on.clone(), h)
    }
}

/// Built-in model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelKind {
    /// -J Σ σzσz - g Σ σx over nearest-neighbour bonds.
    Tfim { j: f64, g: f64 },
    /// J Σ (σxσx + σyσy + Δ σzσz) + h Σ σz.
    Xxz { j: f64, delta: f64, h: f64 },
    /// -J Σ_{x<y} e^{-rate (d(x,y)-1)} σzσz - g Σ σx over all pairs.
    ExpIsing { j: f64, g: f64, rate: f64 },
    /// Gaussian Hermitian terms with ‖Ψ(Z)‖ = strength · F(diam Z).
    RandomKLocal {
        k: usize,
        decay: DecayFunction,
        strength: f64,
        #[serde(default = "default_r_max")]
        r_max: usize,
    },
    /// Random two-body terms on every pair with ‖Ψ({x,y})‖ ≤ |J| F_α(d).
    PowerLawTwoBody { alpha: f64, j: f64 },
}

fn default_r_max() -> usize {
    4
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Tfim { .. } => "tfim",
            ModelKind::Xxz { .. } => "xxz",
            ModelKind::ExpIsing { .. } => "exp_ising",
            ModelKind::RandomKLocal { .. } => "random_k_local",
            ModelKind::PowerLawTwoBody { .. } => "power_law_two_body",
        }
    }
}

fn bonds(lattice: &Arc<Lattice>) -> Vec<(usize, usize)> {
    let n = lattice.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if lattice.site_dist(a, b) == 1 {
                out.push((a, b));
            }
        }
    }
    out
}

fn pair(lattice: &Arc<Lattice>, a: usize, b: usize, m: Mat) -> Result<LocalOperator> {
    LocalOperator::new(Region::new(lattice, vec![a, b])?, m)
}

/// Random Hermitian matrix with i.i.d. Gaussian entries, rescaled to
/// operator norm `norm`.
pub fn gaussian_hermitian(rng: &mut ChaCha8Rng, dim: usize, norm: f64) -> Result<Mat> {
    let mut m = Mat::from_shape_fn((dim, dim), |_| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    m = dense::hermitize(&m);
    let n = dense::op_norm(&m)?;
    Ok(if n > 0.0 { m * c(norm / n, 0.0) } else { m })
}

/// Builds the interaction for `kind`; deterministic in `seed`.
pub fn generate_model(kind: &ModelKind, lattice: &Arc<Lattice>, seed: u64) -> Result<Interaction> {
    let mut psi = Interaction::new(lattice);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = lattice.local_dim();
    let finite = |x: f64, what: &str| -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("{what} must be finite")))
        }
    };
    match *kind {
        ModelKind::Tfim { j, g } => {
            finite(j, "J")?;
            finite(g, "g")?;
            if d != 2 {
                return Err(Error::InvalidParameter(
                    "TFIM needs local dimension 2".into(),
                ));
            }
            let zz = dense::kron(&pauli::z(), &pauli::z()) * c(-j, 0.0);
            for (a, b) in bonds(lattice) {
                if j != 0.0 {
                    psi.insert(pair(lattice, a, b, zz.clone())?)?;
                }
            }
            if g != 0.0 {
                for s in 0..lattice.len() {
                    psi.insert(LocalOperator::new(
                        Region::single(lattice, s),
                        pauli::x() * c(-g, 0.0),
                    )?)?;
                }
            }
            psi.meta.translation_invariant = true;
            psi.meta.k_local = Some(2);
            psi.meta.decay = Some(DecayFunction::Exponential { b: 1.0 });
        }
        ModelKind::Xxz { j, delta, h } => {
            finite(j, "J")?;
            finite(delta, "delta")?;
            finite(h, "h")?;
            if d != 2 {
                return Err(Error::InvalidParameter(
                    "XXZ needs local dimension 2".into(),
                ));
            }
            let xx = dense::kron(&pauli::x(), &pauli::x());
            let yy = dense::kron(&pauli::y(), &pauli::y());
            let zz = dense::kron(&pauli::z(), &pauli::z());
            let bond = (xx + yy + zz * c(delta, 0.0)) * c(j, 0.0);
            if j != 0.0 {
                for (a, b) in bonds(lattice) {
                    psi.insert(pair(lattice, a, b, bond.clone())?)?;
                }
            }
            if h != 0.0 {
                for s in 0..lattice.len() {
                    psi.insert(LocalOperator::new(
                        Region::single(lattice, s),
                        pauli::z() * c(h, 0.0),
                    )?)?;
                }
            }
            psi.meta.translation_invariant = true;
            psi.meta.k_local = Some(2);
            psi.meta.decay = Some(DecayFunction::Exponential { b: 1.0 });
        }
        ModelKind::ExpIsing { j, g, rate } => {
            finite(j, "J")?;
            finite(g, "g")?;
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::InvalidParameter("rate must be positive".into()));
            }
            if d != 2 {
                return Err(Error::InvalidParameter(
                    "exp_ising needs local dimension 2".into(),
                ));
            }
            let zz = dense::kron(&pauli::z(), &pauli::z());
            let n = lattice.len();
            if j != 0.0 {
                for a in 0..n {
                    for b in a + 1..n {
                        let dist = lattice.site_dist(a, b) as f64;
                        let w = -j * (-rate * (dist - 1.0)).exp();
                        psi.insert(pair(lattice, a, b, zz.clone() * c(w, 0.0))?)?;
                    }
                }
            }
            if g != 0.0 {
                for s in 0..n {
                    psi.insert(LocalOperator::new(
                        Region::single(lattice, s),
                        pauli::x() * c(-g, 0.0),
                    )?)?;
                }
            }
            psi.meta.translation_invariant = lattice.dim() == 1;
            psi.meta.k_local = Some(2);
            psi.meta.decay = Some(DecayFunction::Exponential { b: rate });
        }
        ModelKind::RandomKLocal {
            k,
            decay,
            strength,
            r_max,
        } => {
            decay.validate()?;
            if k == 0 || !(strength >= 0.0) || !strength.is_finite() {
                return Err(Error::InvalidParameter(
                    "random_k_local needs k ≥ 1 and strength ≥ 0".into(),
                ));
            }
            if strength > 0.0 {
                for anchor in 0..lattice.len() {
                    let near: Vec<usize> = (anchor + 1..lattice.len())
                        .filter(|&s| lattice.site_dist(anchor, s) <= r_max)
                        .collect();
                    for extra in subsets_up_to(&near, k - 1) {
                        let mut sites = vec![anchor];
                        sites.extend(extra);
                        let region = Region::new(lattice, sites)?;
                        let norm = strength * decay.eval(region.diam()? as f64);
                        let m = gaussian_hermitian(&mut rng, region.hilbert_dim(), norm)?;
                        psi.insert(LocalOperator::new(region, m)?)?;
                    }
                }
            }
            psi.meta.k_local = Some(k);
            psi.meta.decay = Some(decay);
        }
        ModelKind::PowerLawTwoBody { alpha, j } => {
            finite(j, "J")?;
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidParameter("alpha must be positive".into()));
            }
            let n = lattice.len();
            if j != 0.0 {
                for a in 0..n {
                    for b in a + 1..n {
                        let dist = lattice.site_dist(a, b) as f64;
                        let w: f64 = rng.random_range(0.5..=1.0);
                        let norm = j.abs() * w * (dist + 1.0).powf(-alpha);
                        let m = gaussian_hermitian(&mut rng, d * d, norm)?;
                        psi.insert(pair(lattice, a, b, m)?)?;
                    }
                }
            }
            psi.meta.k_local = Some(2);
            psi.meta.decay = Some(DecayFunction::Polynomial { alpha });
        }
    }
    psi.meta.kind = Some(kind.name().to_string());
    Ok(psi)
}

/// All subsets of `items` with at most `k` elements, in lexicographic order.
fn subsets_up_to(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    fn rec(items: &[usize], k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 0 {
            return;
        }
        for (i, &x) in items.iter().enumerate() {
            cur.push(x);
            out.push(cur.clone());
            rec(&items[i + 1..], k - 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, &mut Vec::new(), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TranslationCheck {
    pub invariant: bool,
    pub max_deviation: f64,
}

/// Compares every term with its copies shifted by ±1 along a 1D chain.
/// Shifts that leave the chain are skipped; a missing copy counts as a
/// deviation of the term's Frobenius norm.
pub fn check_translation_invariance(psi: &Interaction) -> Result<TranslationCheck> {
    let lat = psi.lattice();
    if lat.dim() != 1 {
        return Err(Error::InvalidParameter(
            "translation check needs a 1D lattice".into(),
        ));
    }
    let tol = algebra::tolerances().herm;
    let mut worst: f64 = 0.0;
    let mut invariant = true;
    for op in psi.terms() {
        for shift in [-1i64, 1] {
            let coords: Option<Vec<Vec<i64>>> = op
                .support()
                .coords()
                .into_iter()
                .map(|c| {
                    let moved = vec![c[0] + shift];
                    lat.index_of(&moved).map(|_| moved)
                })
                .collect();
            let Some(coords) = coords else { continue };
            let shifted = Region::from_coords(lat, &coords)?;
            let scale = op.frobenius().max(1.0);
            let dev = match psi.term(shifted.sites()) {
                Some(other) => dense::frobenius(&(other.matrix() - op.matrix())),
                None => op.frobenius(),
            };
            worst = worst.max(dev);
            if dev > tol * scale {
                invariant = false;
            }
        }
    }
    Ok(TranslationCheck {
        invariant,
        max_deviation: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ZERO;

    fn tfim(n: usize, j: f64, g: f64) -> Interaction {
        generate_model(&ModelKind::Tfim { j, g }, &Lattice::chain(n), 0).unwrap()
    }

    #[test]
    fn empty_norms_vanish() {
        let psi = Interaction::new(&Lattice::chain(4));
        assert_eq!(psi.norm_f(&DecayFunction::Exponential { b: 1.0 }), 0.0);
        assert_eq!(psi.norm_two_point(3.0), 0.0);
        assert_eq!(psi.norm_lambda(0.5), 0.0);
    }

    #[test]
    fn on_site_field_norm() {
        let l = Lattice::chain(3);
        let op = LocalOperator::new(Region::single(&l, 1), pauli::z() * c(-0.7, 0.0)).unwrap();
        let psi = Interaction::single(op).unwrap();
        for f in [
            DecayFunction::Exponential { b: 2.0 },
            DecayFunction::Polynomial { alpha: 3.0 },
        ] {
            assert!((psi.norm_f(&f) - 0.7).abs() < 1e-14);
        }
    }

    #[test]
    fn ising_chain_norm_is_4e() {
        let psi = tfim(5, 1.0, 0.0);
        let v = psi.norm_f(&DecayFunction::Exponential { b: 1.0 });
        assert!((v - 4.0 * std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn single_bond_norms() {
        let l = Lattice::chain(4);
        let m = dense::kron(&pauli::z(), &pauli::z()) * c(1.5, 0.0);
        let psi = Interaction::single(pair(&l, 1, 2, m).unwrap()).unwrap();
        assert!((psi.norm_two_point(3.0) - 8.0 * 1.5).abs() < 1e-12);
        assert!((psi.norm_lambda(0.0) - 2.0 * 1.5).abs() < 1e-12);
    }

    #[test]
    fn translation_invariance() {
        let psi = tfim(6, 1.0, 0.8);
        let chk = check_translation_invariance(&psi).unwrap();
        assert!(chk.invariant);
        assert_eq!(chk.max_deviation, 0.0);

        let l = psi.lattice().clone();
        let mut bent = psi.clone();
        let bump = dense::kron(&pauli::z(), &pauli::z()) * c(-0.01, 0.0);
        bent.insert(pair(&l, 2, 3, bump).unwrap()).unwrap();
        assert!(!check_translation_invariance(&bent).unwrap().invariant);

        let m = dense::kron(&pauli::x(), &pauli::x());
        let one = Interaction::single(pair(&l, 2, 3, m).unwrap()).unwrap();
        assert!(!check_translation_invariance(&one).unwrap().invariant);
    }

    #[test]
    fn classical_ising_terms_commute() {
        let psi = tfim(5, 1.0, 0.0);
        let ops: Vec<_> = psi.terms().cloned().collect();
        for a in &ops {
            for b in &ops {
                assert!(a.commutator(b).unwrap().frobenius() < 1e-14);
            }
        }
    }

    #[test]
    fn random_generator_is_deterministic_and_scaled() {
        let l = Lattice::chain(6);
        let decay = DecayFunction::Exponential { b: 1.0 };
        let kind = ModelKind::RandomKLocal {
            k: 2,
            decay,
            strength: 0.3,
            r_max: 4,
        };
        let a = generate_model(&kind, &l, 7).unwrap();
        let b = generate_model(&kind, &l, 7).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.terms().zip(b.terms()) {
            assert_eq!(x.matrix(), y.matrix());
        }
        for (op, norm) in a.terms_with_norms() {
            let want = 0.3 * decay.eval(op.support().diam().unwrap() as f64);
            assert!((norm - want).abs() < 1e-12 * want.max(1.0));
        }
        let zero = ModelKind::RandomKLocal {
            k: 2,
            decay,
            strength: 0.0,
            r_max: 4,
        };
        assert!(generate_model(&zero, &l, 7).unwrap().is_empty());
    }

    #[test]
    fn subsets_enumeration() {
        let s = subsets_up_to(&[1, 2, 3], 2);
        assert_eq!(s.len(), 1 + 3 + 3);
    }

    #[test]
    fn assemble_single_site_and_empty() {
        let l = Lattice::chain(3);
        let op = LocalOperator::new(Region::single(&l, 0), pauli::z()).unwrap();
        let psi = Interaction::single(op.clone()).unwrap();
        let h = psi.assemble(&Region::single(&l, 0)).unwrap();
        assert_eq!(h.matrix(), op.matrix());
        let e = psi.assemble(&Region::empty(&l)).unwrap();
        assert_eq!(e.dim(), 1);
        assert_eq!(e.matrix()[[0, 0]], ZERO);
    }
}
