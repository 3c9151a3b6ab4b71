//! Subsystem bitmasks and link indexing.
//!
//! A subsystem of `N` sites is a `u32` mask with bit `i - 1` set when site
//! `i` belongs to it. Since a pure state has `S_A = S_{complement(A)}`, the
//! canonical representative of a bipartition never contains site `N`, and
//! the canonical masks are exactly `1..2^(N-1)`.
//!
//! Links `(i, j)` with `i < j` are flattened row-major over the upper
//! triangle: `(1,2) -> 0, (1,3) -> 1, ..., (N-1,N) -> N(N-1)/2 - 1`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Largest supported number of sites.
pub const MAX_SITES: usize = 30;

/// A subsystem `A` of an `N`-site system; the complement is implied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    mask: u32,
    n_sites: usize,
}

impl Bipartition {
    /// Any nonempty proper subsystem. The mask need not be canonical.
    pub fn new(mask: u32, n_sites: usize) -> Result<Self> {
        check_size(n_sites)?;
        let full = full_mask(n_sites);
        if mask == 0 || mask & full == full || mask & !full != 0 {
            return Err(Error::InvalidPartition { mask: mask as u64, n_sites });
        }
        Ok(Self { mask, n_sites })
    }

    /// Build from 1-based site labels.
    pub fn from_sites(sites: &[usize], n_sites: usize) -> Result<Self> {
        check_size(n_sites)?;
        let mut mask = 0u32;
        for &s in sites {
            if s == 0 || s > n_sites {
                return Err(Error::InvalidArgument(format!("site {s} out of range 1..={n_sites}")));
            }
            mask |= 1 << (s - 1);
        }
        Self::new(mask, n_sites)
    }

    /// Canonical bipartition with the given position in canonical order.
    pub fn from_index(index: usize, n_sites: usize) -> Result<Self> {
        check_size(n_sites)?;
        if index >= n_canonical(n_sites) {
            return Err(Error::InvalidArgument(format!(
                "canonical index {index} out of range for {n_sites} sites"
            )));
        }
        Ok(Self { mask: index as u32 + 1, n_sites })
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn contains(&self, site: usize) -> bool {
        site >= 1 && site <= self.n_sites && self.mask >> (site - 1) & 1 == 1
    }

    /// Number of sites in `A`.
    pub fn size(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn complement(&self) -> Self {
        Self { mask: full_mask(self.n_sites) & !self.mask, n_sites: self.n_sites }
    }

    pub fn is_canonical(&self) -> bool {
        !self.contains(self.n_sites)
    }

    /// The representative that excludes site `N`.
    pub fn canonical(&self) -> Self {
        if self.is_canonical() {
            *self
        } else {
            self.complement()
        }
    }

    /// Position of the canonical representative in canonical order.
    pub fn index(&self) -> usize {
        self.canonical().mask as usize - 1
    }

    /// Sites of `A` in ascending order, 1-based.
    pub fn sites(&self) -> Vec<usize> {
        (1..=self.n_sites).filter(|&s| self.contains(s)).collect()
    }

    /// Number of contiguous runs of `A` on the ring (site `N` next to site 1).
    /// Equal for `A` and its complement.
    pub fn block_count(&self) -> usize {
        ring_block_count(self.mask, self.n_sites)
    }
}

fn check_size(n_sites: usize) -> Result<()> {
    if !(2..=MAX_SITES).contains(&n_sites) {
        return Err(Error::InvalidSize(format!("{n_sites} sites, need 2..={MAX_SITES}")));
    }
    Ok(())
}

pub(crate) fn full_mask(n_sites: usize) -> u32 {
    if n_sites >= 32 {
        u32::MAX
    } else {
        (1u32 << n_sites) - 1
    }
}

/// Runs of set bits of `mask` on a ring of `n` sites.
pub fn ring_block_count(mask: u32, n: usize) -> usize {
    let full = full_mask(n);
    let m = mask & full;
    if m == 0 || m == full {
        return 0;
    }
    // a run starts at site i when i is set and i-1 (cyclically) is not
    let rotated = ((m << 1) | (m >> (n - 1))) & full;
    (m & !rotated).count_ones() as usize
}

/// `2^(N-1) - 1`.
pub fn n_canonical(n_sites: usize) -> usize {
    (1usize << (n_sites - 1)) - 1
}

/// `N(N-1)/2`.
pub fn n_links(n_sites: usize) -> usize {
    n_sites * (n_sites - 1) / 2
}

/// Flat index of the link `(i, j)`, in either order.
pub fn link_index(i: usize, j: usize, n_sites: usize) -> Result<usize> {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    if i == j || i == 0 || j > n_sites {
        return Err(Error::InvalidLink { i, j });
    }
    Ok(flat(i, j, n_sites))
}

#[inline]
pub(crate) fn flat(i: usize, j: usize, n: usize) -> usize {
    // rows 1..i-1 hold (n-1) + (n-2) + ... + (n-i+1) entries
    let before = (i - 1) * (2 * n - i) / 2;
    before + (j - i - 1)
}

/// Inverse of [`link_index`]: the pair `(i, j)` with `i < j`.
pub fn link_pair(k: usize, n_sites: usize) -> Result<(usize, usize)> {
    if n_sites < 2 || k >= n_links(n_sites) {
        return Err(Error::InvalidArgument(format!("link index {k} out of range for {n_sites} sites")));
    }
    let mut rest = k;
    let mut i = 1;
    loop {
        let row = n_sites - i;
        if rest < row {
            return Ok((i, i + 1 + rest));
        }
        rest -= row;
        i += 1;
    }
}

/// All canonical subsystems in ascending mask order.
pub fn canonical_subsystems(n_sites: usize) -> Result<Vec<Bipartition>> {
    check_size(n_sites)?;
    Ok((1..=n_canonical(n_sites) as u32).map(|mask| Bipartition { mask, n_sites }).collect())
}

/// Whether `p` separates sites `i` and `j`.
pub fn breaks_link(p: &Bipartition, i: usize, j: usize) -> Result<bool> {
    link_index(i, j, p.n_sites)?;
    Ok(p.contains(i) != p.contains(j))
}

/// Indices of all links broken by `p`, ascending.
pub fn broken_links(p: &Bipartition) -> Vec<usize> {
    let n = p.n_sites;
    let mut out = Vec::with_capacity(p.size() * (n - p.size()));
    for i in 1..n {
        let a = p.contains(i);
        for j in i + 1..=n {
            if a != p.contains(j) {
                out.push(flat(i, j, n));
            }
        }
    }
    out
}

/// Canonical bipartitions whose subsystem is a union of at most `n_blocks`
/// arcs of the ring.
pub fn contiguous_partitions(n_sites: usize, n_blocks: usize) -> Result<Vec<Bipartition>> {
    check_size(n_sites)?;
    if n_blocks == 0 || n_blocks > n_sites / 2 {
        return Err(Error::InvalidParameter(format!(
            "block count {n_blocks} outside 1..={} for {n_sites} sites",
            n_sites / 2
        )));
    }
    Ok(canonical_subsystems(n_sites)?
        .into_iter()
        .filter(|p| p.block_count() <= n_blocks)
        .collect())
}

/// Mask of the ring arc `{i, i+1, ..., j-1}` (indices mod `N`, 1-based).
/// Empty when `i == j`.
pub fn arc_mask(i: usize, j: usize, n_sites: usize) -> u32 {
    let i0 = (i + n_sites - 1) % n_sites;
    let j0 = (j + n_sites - 1) % n_sites;
    let len = (j0 + n_sites - i0) % n_sites;
    let mut mask = 0u32;
    for t in 0..len {
        mask |= 1 << ((i0 + t) % n_sites);
    }
    mask
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_counts() {
        let p3: Vec<u32> = canonical_subsystems(3).unwrap().iter().map(|p| p.mask()).collect();
        assert_eq!(p3, [0b001, 0b010, 0b011]);
        assert_eq!(canonical_subsystems(10).unwrap().len(), 511);
        let p2 = canonical_subsystems(2).unwrap();
        assert_eq!(p2.len(), 1);
        assert_eq!(p2[0].mask(), 1);
        assert!(canonical_subsystems(1).is_err());
        assert!(canonical_subsystems(31).is_err());
    }

    #[test]
    fn breaks_link_examples() {
        let p = Bipartition::from_sites(&[1, 2], 6).unwrap();
        assert!(breaks_link(&p, 2, 3).unwrap());
        assert!(!breaks_link(&p, 1, 2).unwrap());
        assert!(!breaks_link(&p, 3, 4).unwrap());
        assert!(matches!(breaks_link(&p, 3, 3), Err(Error::InvalidLink { .. })));
    }

    #[test]
    fn contiguous_examples() {
        assert_eq!(contiguous_partitions(6, 1).unwrap().len(), 15);
        assert_eq!(contiguous_partitions(4, 2).unwrap().len(), 7);
        assert_eq!(contiguous_partitions(6, 3).unwrap().len(), 31);
        assert!(contiguous_partitions(6, 0).is_err());
    }

    #[test]
    fn contiguous_matches_arc_enumeration() {
        // single arcs of every length and start, deduplicated by canonicalization
        for n in 3..=12 {
            let mut arcs: Vec<u32> = Vec::new();
            for start in 1..=n {
                for len in 1..n {
                    let m = arc_mask(start, start + len, n);
                    let p = Bipartition::new(m, n).unwrap().canonical().mask();
                    if !arcs.contains(&p) {
                        arcs.push(p);
                    }
                }
            }
            arcs.sort();
            let got: Vec<u32> = contiguous_partitions(n, 1).unwrap().iter().map(|p| p.mask()).collect();
            assert_eq!(got, arcs, "n = {n}");
        }
    }

    #[test]
    fn each_link_broken_by_quarter_of_masks() {
        for n in 2..=12 {
            let parts = canonical_subsystems(n).unwrap();
            for k in 0..n_links(n) {
                let (i, j) = link_pair(k, n).unwrap();
                let c = parts.iter().filter(|p| breaks_link(p, i, j).unwrap()).count();
                assert_eq!(c, 1 << (n - 2));
            }
        }
    }

    #[test]
    fn maximal_block_count_gives_everything() {
        for n in 2..=14 {
            assert_eq!(contiguous_partitions(n, n / 2).unwrap().len(), n_canonical(n));
        }
    }

    #[test]
    fn arc_masks() {
        assert_eq!(arc_mask(2, 4, 6), 0b000110);
        assert_eq!(arc_mask(5, 2, 6), 0b110001);
        assert_eq!(arc_mask(3, 3, 6), 0);
    }

    proptest! {
        #[test]
        fn link_bijection(n in 2usize..=30, seed in any::<u64>()) {
            let k = (seed as usize) % n_links(n);
            let (i, j) = link_pair(k, n).unwrap();
            prop_assert!(i < j && j <= n);
            prop_assert_eq!(link_index(i, j, n).unwrap(), k);
            prop_assert_eq!(link_index(j, i, n).unwrap(), k);
        }

        #[test]
        fn breaking_is_complement_invariant(n in 2usize..=16, raw in any::<u32>(), k in any::<usize>()) {
            let mask = 1 + raw % (n_canonical(n) as u32);
            let p = Bipartition::new(mask, n).unwrap();
            let (i, j) = link_pair(k % n_links(n), n).unwrap();
            prop_assert_eq!(breaks_link(&p, i, j).unwrap(), breaks_link(&p.complement(), i, j).unwrap());
            prop_assert_eq!(p.block_count(), p.complement().block_count());
            prop_assert_eq!(p.complement().canonical(), p);
        }

        #[test]
        fn broken_links_agree(n in 2usize..=12, raw in any::<u32>()) {
            let mask = 1 + raw % (n_canonical(n) as u32);
            let p = Bipartition::new(mask, n).unwrap();
            let direct: Vec<usize> = (0..n_links(n))
                .filter(|&k| { let (i, j) = link_pair(k, n).unwrap(); breaks_link(&p, i, j).unwrap() })
                .collect();
            prop_assert_eq!(broken_links(&p), direct);
        }
    }
}
