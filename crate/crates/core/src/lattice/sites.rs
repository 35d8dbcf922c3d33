use std::collections::HashMap;

use super::site_uniform;
use crate::error::{Error, Result};

/// Site-count guard for every constructed set.
pub const MAX_SITES: u128 = 1_000_000;

/// Finite subset of `Z^d`, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteSet {
    dim: usize,
    coords: Vec<i64>,
    index: HashMap<Vec<i64>, usize>,
}

impl SiteSet {
    /// Builds a set from arbitrary points; they are sorted, duplicates are an
    /// error.
    pub fn new(dim: usize, mut points: Vec<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if points.len() as u128 > MAX_SITES {
            return Err(Error::TooManySites {
                sites: points.len() as u128,
                limit: MAX_SITES,
            });
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::invalid(format!("point {p:?} does not have {dim} coordinates")));
        }
        points.sort_unstable();
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate site {:?}", w[0])));
        }
        let index = points.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        let coords = points.into_iter().flatten().collect();
        Ok(SiteSet { dim, coords, index })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
    pub fn site(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
    pub fn sites(&self) -> impl ExactSizeIterator<Item = &[i64]> {
        self.coords.chunks_exact(self.dim)
    }
    pub fn index_of(&self, p: &[i64]) -> Option<usize> {
        self.index.get(p).copied()
    }
    pub fn contains(&self, p: &[i64]) -> bool {
        self.index.contains_key(p)
    }
    pub fn is_subset_of(&self, other: &SiteSet) -> bool {
        self.dim == other.dim && self.sites().all(|p| other.contains(p))
    }

    /// `self \ other`, in canonical order.
    pub fn difference(&self, other: &SiteSet) -> Result<SiteSet> {
        let pts = self
            .sites()
            .filter(|p| !other.contains(p))
            .map(<[i64]>::to_vec)
            .collect();
        SiteSet::new(self.dim, pts)
    }

    /// `max |n - m|_∞` over pairs of sites; 0 for sets of size <= 1.
    pub fn linf_diameter(&self) -> usize {
        (0..self.dim)
            .map(|axis| {
                let (lo, hi) = self
                    .sites()
                    .map(|p| p[axis])
                    .fold((i64::MAX, i64::MIN), |(lo, hi), c| (lo.min(c), hi.max(c)));
                if lo > hi {
                    0
                } else {
                    (hi - lo) as usize
                }
            })
            .max()
            .unwrap_or(0)
    }
}

/// `Λ_L = [-L, L]^d ∩ Z^d`.
pub fn centered_box(dim: usize, l: usize) -> Result<SiteSet> {
    if dim == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let side = 2 * l as u128 + 1;
    let count = u32::try_from(dim)
        .ok()
        .and_then(|d| side.checked_pow(d))
        .unwrap_or(u128::MAX);
    if count > MAX_SITES {
        return Err(Error::TooManySites {
            sites: count,
            limit: MAX_SITES,
        });
    }
    let l = l as i64;
    let mut coords = Vec::with_capacity(count as usize * dim);
    let mut index = HashMap::with_capacity(count as usize);
    let mut p = vec![-l; dim];
    for i in 0..count as usize {
        coords.extend_from_slice(&p);
        index.insert(p.clone(), i);
        for slot in p.iter_mut().rev() {
            if *slot < l {
                *slot += 1;
                break;
            }
            *slot = -l;
        }
    }
    Ok(SiteSet { dim, coords, index })
}

/// Random `inner ⊊ outer` drawn from `seed`, with `outer` inside a window of
/// at most `max_outer` sites (side up to 60 in d = 1, 12 in d = 2).
///
/// Each window site is kept with probability `q ∈ [1/2, 1)`, then each kept
/// site enters `inner` with probability 1/2; both sets are patched to be
/// non-empty and distinct.
pub fn random_nested_pair(dim: usize, max_outer: usize, seed: u64) -> Result<(SiteSet, SiteSet)> {
    if !(1..=2).contains(&dim) || max_outer < 2 {
        return Err(Error::invalid(
            "random nested pairs need d in {1, 2} and room for two sites",
        ));
    }
    let mut counter = 0u64;
    let mut next = || {
        counter += 1;
        site_uniform(seed, dim as u64, counter)
    };
    let max_side = if dim == 1 { 60 } else { 12 };
    let cap = (max_outer as f64).powf(1.0 / dim as f64).floor() as usize;
    let side_hi = max_side.min(cap).max(2);
    let side = 2 + (next() * (side_hi - 1) as f64) as usize;
    let q = 0.5 + 0.5 * next();
    let mut window: Vec<Vec<i64>> = Vec::new();
    let s = side as i64;
    if dim == 1 {
        window.extend((0..s).map(|a| vec![a]));
    } else {
        window.extend((0..s).flat_map(|a| (0..s).map(move |b| vec![a, b])));
    }
    let mut outer: Vec<Vec<i64>> = window.iter().filter(|_| next() < q).take(max_outer).cloned().collect();
    // patch from inside the window so the pair never outgrows it
    for p in &window {
        if outer.len() >= 2 {
            break;
        }
        if !outer.contains(p) {
            outer.push(p.clone());
        }
    }
    let mut inner: Vec<Vec<i64>> = outer.iter().filter(|_| next() < 0.5).cloned().collect();
    if inner.is_empty() {
        inner.push(outer[0].clone());
    }
    if inner.len() == outer.len() {
        inner.pop();
    }
    Ok((SiteSet::new(dim, inner)?, SiteSet::new(dim, outer)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_sizes() {
        let b = centered_box(1, 1).unwrap();
        assert_eq!(b.sites().collect::<Vec<_>>(), vec![&[-1][..], &[0], &[1]]);
        assert_eq!(centered_box(2, 1).unwrap().len(), 9);
        assert_eq!(centered_box(3, 20).unwrap().len(), 68_921);
        assert!(matches!(
            centered_box(3, 50),
            Err(Error::TooManySites { sites: 1_030_301, .. })
        ));
        assert_eq!(centered_box(2, 0).unwrap().len(), 1);
    }

    #[test]
    fn box_is_canonical() {
        let b = centered_box(2, 2).unwrap();
        let pts: Vec<Vec<i64>> = b.sites().map(<[i64]>::to_vec).collect();
        let rebuilt = SiteSet::new(2, pts.clone()).unwrap();
        assert_eq!(rebuilt, b);
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(b.index_of(p), Some(i));
        }
    }

    #[test]
    fn duplicates_and_shape_rejected() {
        assert!(SiteSet::new(1, vec![vec![0], vec![0]]).is_err());
        assert!(SiteSet::new(2, vec![vec![0]]).is_err());
    }

    #[test]
    fn difference_and_diameter() {
        let outer = centered_box(2, 2).unwrap();
        let inner = centered_box(2, 1).unwrap();
        let ring = outer.difference(&inner).unwrap();
        assert_eq!(ring.len(), 16);
        assert!(inner.is_subset_of(&outer));
        assert!(!outer.is_subset_of(&inner));
        assert_eq!(outer.linf_diameter(), 4);
        assert_eq!(inner.linf_diameter(), 2);
        assert_eq!(SiteSet::new(1, vec![vec![5]]).unwrap().linf_diameter(), 0);
    }

    #[test]
    fn nested_pairs_are_proper() {
        for dim in 1..=2 {
            for seed in 0..50 {
                let (inner, outer) = random_nested_pair(dim, 150, seed).unwrap();
                assert!(!inner.is_empty() && inner.len() < outer.len() && outer.len() <= 150);
                assert!(inner.is_subset_of(&outer));
                assert_eq!(random_nested_pair(dim, 150, seed).unwrap().1.len(), outer.len());
            }
        }
    }
}
