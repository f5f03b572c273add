//! Set partitions of the subsystem index set {1..n}.
//!
//! Partitions are enumerated through restricted-growth strings with a fixed
//! number of classes, which yields each k-block partition exactly once in a
//! deterministic (lexicographic) order.

use crate::error::{Error, Result};
use std::fmt;
use std::str::FromStr;

/// A k-block set partition of {1..n}.
///
/// Blocks are pairwise disjoint, cover {1..n} exactly, use 1-based site
/// indices, and are kept in canonical order: each block sorted ascending,
/// blocks sorted by their minimum element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Build a partition from raw blocks, validating and canonicalizing.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".into()));
        }
        let mut seen = vec![false; n + 1];
        let mut canonical: Vec<Vec<usize>> = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            let mut b = block;
            b.sort_unstable();
            for &site in &b {
                if site < 1 || site > n {
                    return Err(Error::InvalidPartition(format!(
                        "site {site} outside 1..={n}"
                    )));
                }
                if seen[site] {
                    return Err(Error::InvalidPartition(format!("site {site} repeated")));
                }
                seen[site] = true;
            }
            canonical.push(b);
        }
        if seen[1..=n].iter().any(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "blocks do not cover 1..={n}"
            )));
        }
        canonical.sort_by_key(|b| b[0]);
        Ok(Self {
            n,
            blocks: canonical,
        })
    }

    /// Number of partitioned sites.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of blocks.
    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    /// The blocks in canonical order (1-based site indices).
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// The sites not contained in `block` (ascending).
    pub fn complement_of(&self, block: &[usize]) -> Vec<usize> {
        (1..=self.n).filter(|s| !block.contains(s)).collect()
    }

    fn from_rgs(rgs: &[usize], k: usize) -> Self {
        let mut blocks = vec![Vec::new(); k];
        for (i, &class) in rgs.iter().enumerate() {
            blocks[class].push(i + 1);
        }
        // first occurrences of classes are increasing, so blocks are already
        // sorted by minimum element
        Self {
            n: rgs.len(),
            blocks,
        }
    }
}

impl fmt::Display for Partition {
    /// Text form "1,3|2|4": comma-separated sites, pipe-separated blocks.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rendered: Vec<String> = self
            .blocks
            .iter()
            .map(|b| {
                b.iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{}", rendered.join("|"))
    }
}

impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut blocks = Vec::new();
        let mut max_site = 0usize;
        for part in s.split('|') {
            let mut block = Vec::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                if tok.is_empty() {
                    return Err(Error::InvalidPartition(format!("empty token in '{s}'")));
                }
                let site: usize = tok
                    .parse()
                    .map_err(|_| Error::InvalidPartition(format!("bad site '{tok}'")))?;
                max_site = max_site.max(site);
                block.push(site);
            }
            blocks.push(block);
        }
        Partition::new(max_site, blocks)
    }
}

/// Iterator over all k-block set partitions of {1..n}.
///
/// Enumeration walks restricted-growth strings `a` with exactly k classes in
/// lexicographic order: `a[0] = 0`, `a[i] <= max(a[..i]) + 1`, and the string
/// uses all classes `0..k`.
pub struct KPartitions {
    n: usize,
    k: usize,
    rgs: Vec<usize>,
    prefix_max: Vec<usize>,
    done: bool,
}

impl KPartitions {
    fn first(n: usize, k: usize) -> Self {
        // smallest valid string: zeros, then the forced tail 1,2,..,k-1
        let rgs: Vec<usize> = (0..n).map(|i| (i + k).saturating_sub(n)).collect();
        let mut prefix_max = vec![0usize; n];
        let mut m = 0;
        for i in 0..n {
            m = m.max(rgs[i]);
            prefix_max[i] = m;
        }
        Self {
            n,
            k,
            rgs,
            prefix_max,
            done: false,
        }
    }

    fn advance(&mut self) {
        // scan right-to-left for a digit that can grow while still leaving
        // room to introduce all remaining classes in the tail
        for i in (1..self.n).rev() {
            let cap = (self.prefix_max[i - 1] + 1).min(self.k - 1);
            if self.rgs[i] >= cap {
                continue;
            }
            let cand = self.rgs[i] + 1;
            let max_after = self.prefix_max[i - 1].max(cand);
            let missing = (self.k - 1).saturating_sub(max_after);
            if missing > self.n - 1 - i {
                continue;
            }
            self.rgs[i] = cand;
            self.prefix_max[i] = max_after;
            // minimal tail: zeros until the remaining classes are forced
            for j in i + 1..self.n {
                let m = self.prefix_max[j - 1];
                let need = (self.k - 1).saturating_sub(m);
                self.rgs[j] = if need >= self.n - j { m + 1 } else { 0 };
                self.prefix_max[j] = m.max(self.rgs[j]);
            }
            return;
        }
        self.done = true;
    }
}

impl Iterator for KPartitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let item = Partition::from_rgs(&self.rgs, self.k);
        self.advance();
        Some(item)
    }
}

/// All k-block set partitions of {1..n}, lazily, each exactly once.
pub fn k_partitions(n: usize, k: usize) -> Result<KPartitions> {
    if k < 1 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    Ok(KPartitions::first(n, k))
}

/// All unordered bipartitions of {1..n}; there are 2^(n-1) - 1 of them.
pub fn bipartitions(n: usize) -> Result<KPartitions> {
    if n < 2 {
        return Err(Error::KOutOfRange { k: 2, n });
    }
    k_partitions(n, 2)
}

/// Stirling number of the second kind S(n, k), the count of k-block
/// partitions of an n-set. Rejects n > 20 (u64 overflow territory).
pub fn stirling2(n: usize, k: usize) -> Result<u64> {
    if n > 20 {
        return Err(Error::StirlingOverflow(n));
    }
    if k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if n == 0 {
        return Ok(1);
    }
    if k == 0 {
        return Ok(0);
    }
    let mut row = vec![0u64; k + 1];
    row[0] = 1; // S(0,0)
    for _ in 1..=n {
        for j in (1..=k).rev() {
            row[j] = (j as u64) * row[j] + row[j - 1];
        }
        row[0] = 0;
    }
    Ok(row[k])
}
