use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::fit::{fit_decay, DecayFit, DecayModel};
use crate::error::{Error, Result};
use crate::gibbs::{covariance_region, CovarianceOptions, GibbsState};
use crate::interactions::Interaction;
use crate::lattice::Region;

/// Sublattice count above which the uniform quantifier is sampled.
pub const SUBLATTICE_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcPoint {
    pub sublattice: Vec<usize>,
    pub x: Vec<usize>,
    pub y: Vec<usize>,
    pub dist: usize,
    pub value: f64,
}

/// Measured covariances, their sup per distance and an optional fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DcSeries {
    pub points: Vec<DcPoint>,
    pub dist: Vec<usize>,
    pub sup: Vec<f64>,
    pub fit: Option<DecayFit>,
    /// Why the fit was skipped, if it was.
    pub fit_skipped: Option<String>,
}

impl DcSeries {
    fn from_points(points: Vec<DcPoint>, model: DecayModel) -> Result<DcSeries> {
        let mut by: BTreeMap<usize, f64> = BTreeMap::new();
        for p in &points {
            let e = by.entry(p.dist).or_insert(0.0);
            *e = e.max(p.value);
        }
        let dist: Vec<usize> = by.keys().copied().collect();
        let sup: Vec<f64> = by.values().copied().collect();
        let r: Vec<f64> = dist.iter().map(|&d| d as f64).collect();
        let (fit, fit_skipped) = match fit_decay(&r, &sup, model) {
            Ok(f) => (Some(f), None),
            Err(Error::InsufficientData(m)) => (None, Some(m)),
            Err(e) => return Err(e),
        };
        Ok(DcSeries {
            points,
            dist,
            sup,
            fit,
            fit_skipped,
        })
    }
}

fn measure_on(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    pairs: &[(Region, Region)],
    opts: &CovarianceOptions,
) -> Result<Vec<DcPoint>> {
    let state = GibbsState::new(&psi.assemble(lambda)?, beta)?;
    let mut out = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let d = x.dist(y)?.finite().ok_or(Error::EmptyRegion)?;
        let cov = covariance_region(state.rho(), x, y, opts)?;
        out.push(DcPoint {
            sublattice: lambda.sites().to_vec(),
            x: x.sites().to_vec(),
            y: y.sites().to_vec(),
            dist: d,
            value: cov.value,
        });
    }
    Ok(out)
}

/// Cov_{ρ_β^Λ}(X;Y) for each pair, keyed by dist(X,Y).
pub fn measure_dc(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    pairs: &[(Region, Region)],
    model: DecayModel,
    opts: &CovarianceOptions,
) -> Result<DcSeries> {
    DcSeries::from_points(measure_on(psi, lambda, beta, pairs, opts)?, model)
}

/// The same measurement on every sublattice from [`sublattices`], with
/// `pairs_of` choosing the region pairs inside each one.
pub fn measure_dc_uniform(
    psi: &Interaction,
    lambda: &Region,
    beta: f64,
    pairs_of: impl Fn(&Region) -> Vec<(Region, Region)>,
    model: DecayModel,
    seed: u64,
    opts: &CovarianceOptions,
) -> Result<DcSeries> {
    let mut points = Vec::new();
    for sub in sublattices(lambda, SUBLATTICE_CAP, seed)? {
        let pairs = pairs_of(&sub);
        if pairs.is_empty() {
            continue;
        }
        points.extend(measure_on(psi, &sub, beta, &pairs, opts)?);
    }
    DcSeries::from_points(points, model)
}

/// All axis-aligned boxes (intervals in 1D) of Λ with at least two sites,
/// ordered by size then position. Beyond `cap`, a seeded sample of `cap`.
pub fn sublattices(lambda: &Region, cap: usize, seed: u64) -> Result<Vec<Region>> {
    let lat = lambda.lattice();
    let coords = lambda.coords();
    if coords.is_empty() {
        return Ok(Vec::new());
    }
    let nu = lat.dim();
    let lo: Vec<i64> = (0..nu)
        .map(|k| coords.iter().map(|c| c[k]).min().unwrap())
        .collect();
    let hi: Vec<i64> = (0..nu)
        .map(|k| coords.iter().map(|c| c[k]).max().unwrap())
        .collect();
    let mut boxes: Vec<Vec<(i64, i64)>> = vec![Vec::new()];
    for k in 0..nu {
        let mut next = Vec::new();
        for b in &boxes {
            for a in lo[k]..=hi[k] {
                for e in a..=hi[k] {
                    let mut nb = b.clone();
                    nb.push((a, e));
                    next.push(nb);
                }
            }
        }
        boxes = next;
    }
    let mut out: Vec<Region> = Vec::new();
    for b in boxes {
        let members: Vec<usize> = lambda
            .sites()
            .iter()
            .zip(&coords)
            .filter(|(_, c)| c.iter().zip(&b).all(|(x, (a, e))| x >= a && x <= e))
            .map(|(&s, _)| s)
            .collect();
        if members.len() >= 2 {
            let r = Region::new(lat, members)?;
            if !out.contains(&r) {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.sites().cmp(b.sites())));
    if out.len() > cap {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        out.shuffle(&mut rng);
        out.truncate(cap);
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.sites().cmp(b.sites())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    #[test]
    fn intervals_of_a_chain() {
        let l = Lattice::chain(5);
        let subs = sublattices(&Region::full(&l), 64, 0).unwrap();
        assert_eq!(subs.len(), 10);
        assert!(subs.iter().all(|s| s.len() >= 2));
        let capped = sublattices(&Region::full(&l), 4, 7).unwrap();
        assert_eq!(capped.len(), 4);
        assert_eq!(capped, sublattices(&Region::full(&l), 4, 7).unwrap());
    }

    #[test]
    fn boxes_of_a_square() {
        let l = Lattice::cuboid(&[3, 3], 2).unwrap();
        let subs = sublattices(&Region::full(&l), 1000, 0).unwrap();
        // 6 x 6 interval pairs, minus the 9 single sites
        assert_eq!(subs.len(), 27);
    }
}
