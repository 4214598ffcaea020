//! Group structure over signal coordinates: contiguous non-overlapping
//! partitions, group support sets, and group-level thresholding.

use crate::error::{Error, Result};
use crate::linalg::norm_p;
use std::fmt;
use std::ops::Range;

/// Partition of `0..n` into `r` contiguous, non-overlapping groups given by
/// their sizes. Group `i` covers `offsets[i]..offsets[i] + sizes[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl GroupPartition {
    /// Builds a partition from group sizes. Every size must be at least 1.
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument(
                "partition needs at least one group".into(),
            ));
        }
        if let Some(i) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidArgument(format!(
                "group {i} has size 0; every group must be non-empty"
            )));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0usize;
        for &s in &sizes {
            offsets.push(total);
            total += s;
        }
        Ok(Self {
            sizes,
            offsets,
            total,
        })
    }

    /// `count` groups of identical size.
    pub fn uniform(group_size: usize, count: usize) -> Result<Self> {
        Self::new(vec![group_size; count])
    }

    /// Parses either a comma-separated size list (`"16,16,8"`) or the
    /// uniform shorthand `"<size>x<count>"` (`"16x64"`).
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let bad = |msg: String| Error::InvalidArgument(format!("partition '{text}': {msg}"));
        if let Some((l, r)) = text.split_once(['x', 'X']) {
            let size: usize = l
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad group size '{l}'")))?;
            let count: usize = r
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad group count '{r}'")))?;
            return Self::uniform(size, count);
        }
        let sizes = text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|_| bad(format!("bad group size '{tok}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Self::new(sizes)
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn total_len(&self) -> usize {
        self.total
    }

    pub fn size(&self, group: usize) -> usize {
        self.sizes[group]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Coordinate range covered by `group`.
    pub fn range(&self, group: usize) -> Range<usize> {
        let start = self.offsets[group];
        start..start + self.sizes[group]
    }

    pub fn ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        (0..self.num_groups()).map(|g| self.range(g))
    }

    /// Slice of `x` covered by `group`.
    pub fn slice<'a>(&self, x: &'a [f64], group: usize) -> &'a [f64] {
        &x[self.range(group)]
    }
}

impl fmt::Display for GroupPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.sizes {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        Ok(())
    }
}

/// Ordered, duplicate-free set of group indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GroupSet {
    indices: Vec<usize>,
}

impl GroupSet {
    /// Builds a set from arbitrary indices, sorting and rejecting
    /// out-of-range or duplicate entries.
    pub fn new(mut indices: Vec<usize>, num_groups: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "duplicate group index {}",
                w[0]
            )));
        }
        if let Some(&i) = indices.last() {
            if i >= num_groups {
                return Err(Error::InvalidArgument(format!(
                    "group index {i} out of range (partition has {num_groups} groups)"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, group: usize) -> bool {
        self.indices.binary_search(&group).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_subset_of(&self, other: &GroupSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }
}

/// Per-group p-norms of `x`: component `i` is the p-norm of group `i`.
pub fn group_norms(x: &[f64], part: &GroupPartition, p: f64) -> Result<Vec<f64>> {
    check_len(x, part)?;
    check_p(p)?;
    Ok(part.ranges().map(|r| norm_p(&x[r], p)).collect())
}

/// Groups of `x` with any nonzero entry. All p-norms of a group vanish
/// together, so the support set does not depend on p.
pub fn group_support(x: &[f64], part: &GroupPartition) -> Result<GroupSet> {
    check_len(x, part)?;
    let indices = (0..part.num_groups())
        .filter(|&g| x[part.range(g)].iter().any(|&v| v != 0.0))
        .collect();
    Ok(GroupSet::from_sorted(indices))
}

/// Zeroes every group whose p-norm falls below `tau`; groups exactly at the
/// threshold are kept. Returns the thresholded vector and its support set.
pub fn threshold_groups(
    x: &[f64],
    part: &GroupPartition,
    p: f64,
    tau: f64,
) -> Result<(Vec<f64>, GroupSet)> {
    check_len(x, part)?;
    check_p(p)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold tau must be positive, got {tau}"
        )));
    }
    let mut out = x.to_vec();
    let mut kept = Vec::new();
    for g in 0..part.num_groups() {
        let r = part.range(g);
        if norm_p(&x[r.clone()], p) >= tau {
            kept.push(g);
        } else {
            out[r].fill(0.0);
        }
    }
    Ok((out, GroupSet::from_sorted(kept)))
}

fn check_len(x: &[f64], part: &GroupPartition) -> Result<()> {
    if x.len() != part.total_len() {
        return Err(Error::DimensionMismatch(format!(
            "vector length {} does not match partition length {}",
            x.len(),
            part.total_len()
        )));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "group norm exponent p must be a finite value >= 1, got {p}"
        )));
    }
    Ok(())
}
