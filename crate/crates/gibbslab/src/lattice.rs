//! Finite subsets of Z^ν under the ℓ1 metric.
//!
//! Sites are kept in lexicographic order of their coordinates. That order is
//! also the tensor-factor order of every dense operator built on a region, so
//! it never changes once a lattice is constructed.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Coord = Vec<i64>;

/// Distance between regions; `Infinite` when either side is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Distance {
    Finite(usize),
    Infinite,
}

impl Distance {
    pub fn as_f64(self) -> f64 {
        match self {
            Distance::Finite(d) => d as f64,
            Distance::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<usize> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lattice {
    dim: usize,
    sites: Vec<Coord>,
    local_dim: usize,
}

impl Lattice {
    /// Builds a lattice from arbitrary distinct coordinates; they are sorted.
    pub fn new(dim: usize, mut sites: Vec<Coord>, local_dim: usize) -> Result<Arc<Lattice>> {
        if dim == 0 {
            return Err(Error::InvalidLattice("dimension must be positive".into()));
        }
        if local_dim < 2 {
            return Err(Error::InvalidLattice(format!(
                "local dimension {local_dim} < 2"
            )));
        }
        if let Some(bad) = sites.iter().find(|c| c.len() != dim) {
            return Err(Error::InvalidLattice(format!(
                "site {bad:?} does not have {dim} coordinates"
            )));
        }
        sites.sort();
        if sites.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLattice("duplicate sites".into()));
        }
        Ok(Arc::new(Lattice {
            dim,
            sites,
            local_dim,
        }))
    }

    /// Open chain {0, …, n−1} of qubits.
    pub fn chain(n: usize) -> Arc<Lattice> {
        Self::chain_with_local_dim(n, 2)
    }

    pub fn chain_with_local_dim(n: usize, local_dim: usize) -> Arc<Lattice> {
        Self::new(1, (0..n as i64).map(|x| vec![x]).collect(), local_dim)
            .expect("chain construction")
    }

    /// Axis-aligned box [0, e_1) × … × [0, e_ν).
    pub fn cuboid(extent: &[usize], local_dim: usize) -> Result<Arc<Lattice>> {
        let mut sites: Vec<Coord> = vec![Vec::new()];
        for &e in extent {
            let mut next = Vec::with_capacity(sites.len() * e);
            for s in &sites {
                for x in 0..e as i64 {
                    let mut c = s.clone();
                    c.push(x);
                    next.push(c);
                }
            }
            sites = next;
        }
        if extent.contains(&0) {
            sites.clear();
        }
        Self::new(extent.len(), sites, local_dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn coord(&self, site: usize) -> &Coord {
        &self.sites[site]
    }

    pub fn coords(&self) -> &[Coord] {
        &self.sites
    }

    pub fn index_of(&self, c: &[i64]) -> Option<usize> {
        self.sites.binary_search_by(|s| s.as_slice().cmp(c)).ok()
    }

    /// ℓ1 distance between two sites given by index.
    pub fn site_dist(&self, a: usize, b: usize) -> usize {
        self.sites[a]
            .iter()
            .zip(&self.sites[b])
            .map(|(x, y)| (x - y).unsigned_abs() as usize)
            .sum()
    }
}

/// Subset of a lattice, stored as sorted site indices.
#[derive(Clone)]
pub struct Region {
    lattice: Arc<Lattice>,
    members: Vec<usize>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members.iter()).finish()
    }
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.same_lattice(other) && self.members == other.members
    }
}

impl Eq for Region {}

impl std::hash::Hash for Region {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.members.hash(state);
    }
}

impl Region {
    pub fn new(lattice: &Arc<Lattice>, mut members: Vec<usize>) -> Result<Region> {
        members.sort_unstable();
        members.dedup();
        if let Some(&m) = members.last() {
            if m >= lattice.len() {
                return Err(Error::InvalidLattice(format!(
                    "site index {m} out of range for {} sites",
                    lattice.len()
                )));
            }
        }
        Ok(Region {
            lattice: Arc::clone(lattice),
            members,
        })
    }

    pub fn from_coords(lattice: &Arc<Lattice>, coords: &[Coord]) -> Result<Region> {
        let members = coords
            .iter()
            .map(|c| {
                lattice
                    .index_of(c)
                    .ok_or_else(|| Error::InvalidLattice(format!("site {c:?} not in lattice")))
            })
            .collect::<Result<Vec<_>>>()?;
        Region::new(lattice, members)
    }

    pub fn empty(lattice: &Arc<Lattice>) -> Region {
        Region {
            lattice: Arc::clone(lattice),
            members: Vec::new(),
        }
    }

    pub fn full(lattice: &Arc<Lattice>) -> Region {
        Region {
            lattice: Arc::clone(lattice),
            members: (0..lattice.len()).collect(),
        }
    }

    pub fn single(lattice: &Arc<Lattice>, site: usize) -> Region {
        Region::new(lattice, vec![site]).expect("site index in range")
    }

    /// Sites with index in `range`; for chains this is an interval.
    pub fn range(lattice: &Arc<Lattice>, range: std::ops::Range<usize>) -> Region {
        Region::new(lattice, range.collect()).expect("range within lattice")
    }

    /// Ball {x : d(x, center) ≤ radius}.
    pub fn ball(lattice: &Arc<Lattice>, center: usize, radius: usize) -> Region {
        Region::single(lattice, center).neighborhood(radius)
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn sites(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.members.binary_search(&site).is_ok()
    }

    pub fn coords(&self) -> Vec<Coord> {
        self.members
            .iter()
            .map(|&s| self.lattice.coord(s).clone())
            .collect()
    }

    /// Hilbert-space dimension D^|X|.
    pub fn hilbert_dim(&self) -> usize {
        self.lattice.local_dim().pow(self.members.len() as u32)
    }

    pub fn same_lattice(&self, other: &Region) -> bool {
        Arc::ptr_eq(&self.lattice, &other.lattice) || *self.lattice == *other.lattice
    }

    fn check(&self, other: &Region) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::MismatchedLattice)
        }
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.members.iter().all(|&s| other.contains(s))
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.members.iter().all(|&s| !other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Result<Region> {
        self.check(other)?;
        let mut m = self.members.clone();
        m.extend_from_slice(&other.members);
        Region::new(&self.lattice, m)
    }

    pub fn intersection(&self, other: &Region) -> Result<Region> {
        self.check(other)?;
        let m = self
            .members
            .iter()
            .copied()
            .filter(|&s| other.contains(s))
            .collect();
        Region::new(&self.lattice, m)
    }

    pub fn difference(&self, other: &Region) -> Result<Region> {
        self.check(other)?;
        let m = self
            .members
            .iter()
            .copied()
            .filter(|&s| !other.contains(s))
            .collect();
        Region::new(&self.lattice, m)
    }

    pub fn complement(&self) -> Region {
        let m = (0..self.lattice.len())
            .filter(|&s| !self.contains(s))
            .collect();
        Region {
            lattice: Arc::clone(&self.lattice),
            members: m,
        }
    }

    /// Distance from one site to this region.
    pub fn dist_to_site(&self, site: usize) -> Distance {
        self.members
            .iter()
            .map(|&m| self.lattice.site_dist(m, site))
            .min()
            .map_or(Distance::Infinite, Distance::Finite)
    }

    pub fn dist(&self, other: &Region) -> Result<Distance> {
        self.check(other)?;
        let mut best = Distance::Infinite;
        for &a in &self.members {
            for &b in &other.members {
                let d = Distance::Finite(self.lattice.site_dist(a, b));
                if d < best {
                    best = d;
                }
            }
        }
        Ok(best)
    }

    pub fn diam(&self) -> Result<usize> {
        if self.members.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut d = 0;
        for (i, &a) in self.members.iter().enumerate() {
            for &b in &self.members[i + 1..] {
                d = d.max(self.lattice.site_dist(a, b));
            }
        }
        Ok(d)
    }

    /// X_r = {x ∈ Λ : d(x, X) ≤ r}.
    pub fn neighborhood(&self, r: usize) -> Region {
        let m = (0..self.lattice.len())
            .filter(|&s| matches!(self.dist_to_site(s), Distance::Finite(d) if d <= r))
            .collect();
        Region {
            lattice: Arc::clone(&self.lattice),
            members: m,
        }
    }

    /// S_q = {z ∈ within : d(self, z) = q}.
    pub fn shell(&self, q: usize, within: &Region) -> Result<Region> {
        self.check(within)?;
        let m = within
            .members
            .iter()
            .copied()
            .filter(|&z| self.dist_to_site(z) == Distance::Finite(q))
            .collect();
        Region::new(&self.lattice, m)
    }

    /// Position of every member of `sub` inside this region's ordering.
    pub fn positions_of(&self, sub: &Region) -> Result<Vec<usize>> {
        self.check(sub)?;
        sub.members
            .iter()
            .map(|s| {
                self.members.binary_search(s).map_err(|_| Error::NotSubset {
                    inner: sub.members.clone(),
                    outer: self.members.clone(),
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_and_diameters() {
        let chain = Lattice::chain(10);
        let a = Region::single(&chain, 0);
        let b = Region::single(&chain, 3);
        assert_eq!(a.dist(&b).unwrap(), Distance::Finite(3));
        assert_eq!(a.dist(&a).unwrap(), Distance::Finite(0));
        assert_eq!(Region::range(&chain, 0..6).diam().unwrap(), 5);
        assert_eq!(a.diam().unwrap(), 0);
        assert_eq!(a.dist(&Region::empty(&chain)).unwrap(), Distance::Infinite);
        assert!(Region::empty(&chain).diam().is_err());

        let sq = Lattice::cuboid(&[4, 4], 2).unwrap();
        let o = Region::from_coords(&sq, &[vec![0, 0]]).unwrap();
        let p = Region::from_coords(&sq, &[vec![2, 3]]).unwrap();
        assert_eq!(o.dist(&p).unwrap(), Distance::Finite(5));
        let diag = Region::from_coords(&sq, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(diag.diam().unwrap(), 2);
    }

    #[test]
    fn mismatched_lattices_error() {
        let a = Lattice::chain(4);
        let b = Lattice::chain(5);
        let x = Region::single(&a, 0);
        let y = Region::single(&b, 0);
        assert_eq!(x.dist(&y), Err(Error::MismatchedLattice));
    }

    #[test]
    fn neighborhoods_clip_at_boundary() {
        let chain = Lattice::chain(10);
        let x = Region::single(&chain, 5);
        assert_eq!(x.neighborhood(0), x);
        assert_eq!(x.neighborhood(2).sites(), &[3, 4, 5, 6, 7]);
        let short = Lattice::chain(4);
        let y = Region::single(&short, 0);
        assert_eq!(y.neighborhood(10), Region::full(&short));
    }

    #[test]
    fn shell_example() {
        let chain = Lattice::chain(10);
        let y = Region::single(&chain, 4);
        let within = Region::range(&chain, 2..7).complement();
        assert_eq!(y.shell(3, &within).unwrap().sites(), &[1, 7]);
        assert!(y.shell(20, &within).unwrap().is_empty());
    }

    #[test]
    fn lattice_rejects_bad_input() {
        assert!(Lattice::new(1, vec![vec![0], vec![0]], 2).is_err());
        assert!(Lattice::new(1, vec![vec![0]], 1).is_err());
        assert!(Lattice::new(2, vec![vec![0]], 2).is_err());
    }

    #[test]
    fn sites_are_sorted_lexicographically() {
        let l = Lattice::new(2, vec![vec![1, 0], vec![0, 1], vec![0, 0]], 2).unwrap();
        assert_eq!(l.coords(), &[vec![0, 0], vec![0, 1], vec![1, 0]]);
    }
}
