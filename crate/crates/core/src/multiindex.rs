//! Multi-indices over a fixed number of parameter directions and
//! downward-closed (monotone) index sets.
//!
//! A set `Λ` is downward closed when `ν ∈ Λ` and `μ ≤ ν` (componentwise)
//! imply `μ ∈ Λ`. Sets are kept as ordered sequences whose every prefix is
//! itself downward closed, so the sequence can be consumed one index at a
//! time by the hierarchical interpolation routines.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Exponent tuple `ν = (ν_1, …, ν_d)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Box<[u32]>);

impl MultiIndex {
    pub fn new(exponents: impl Into<Vec<u32>>) -> Result<Self> {
        let v: Vec<u32> = exponents.into();
        if v.is_empty() {
            return Err(Error::InvalidInput(
                "multi-index needs at least one direction".into(),
            ));
        }
        Ok(Self(v.into_boxed_slice()))
    }

    pub fn zero(dim: usize) -> Self {
        assert!(dim >= 1, "parameter dimension must be positive");
        Self(vec![0; dim].into_boxed_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `self ≤ other` componentwise.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(other.0.iter()).all(|(a, b)| a <= b)
    }

    /// The immediate predecessors `ν − e_i` for each direction with `ν_i > 0`.
    pub fn predecessors(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.dim()).filter(|&i| self.0[i] > 0).map(move |i| {
            let mut v = self.0.clone();
            v[i] -= 1;
            MultiIndex(v)
        })
    }

    /// Underscore-joined exponents, used in file names (`3_0_1`).
    pub fn file_stem(&self) -> String {
        self.0
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("_")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parsed = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::InvalidInput(format!("bad exponent {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(parsed)
    }
}

fn check_dims(indices: &[MultiIndex]) -> Result<usize> {
    let Some(first) = indices.first() else {
        return Ok(0);
    };
    let d = first.dim();
    for nu in indices {
        if nu.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: nu.dim(),
            });
        }
    }
    Ok(d)
}

/// Whether the given indices form a downward closed set (order ignored).
///
/// Only the immediate predecessors `ν − e_i` are looked up; transitivity
/// covers the rest.
pub fn is_downward_closed(indices: &[MultiIndex]) -> Result<bool> {
    check_dims(indices)?;
    let set: HashSet<&MultiIndex> = indices.iter().collect();
    Ok(indices
        .iter()
        .all(|nu| nu.predecessors().all(|p| set.contains(&p))))
}

/// Appends all exponent tuples of length `d` summing to `level` in
/// descending lexicographic order, i.e. first coordinate largest first.
fn push_level(d: usize, level: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>, limit: usize) {
    if out.len() >= limit {
        return;
    }
    if d == 1 {
        prefix.push(level);
        out.push(MultiIndex(prefix.clone().into_boxed_slice()));
        prefix.pop();
        return;
    }
    for first in (0..=level).rev() {
        prefix.push(first);
        push_level(d - 1, level - first, prefix, out, limit);
        prefix.pop();
        if out.len() >= limit {
            return;
        }
    }
}

/// The first `count` indices of the graded sequence
/// `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2), …`.
///
/// Indices are ordered by total degree; inside a degree level the tuples
/// appear in descending lexicographic order. Every prefix is downward closed.
pub fn canonical_sequence(d: usize, count: usize) -> Vec<MultiIndex> {
    assert!(d >= 1, "parameter dimension must be positive");
    let mut out = Vec::with_capacity(count);
    let mut prefix = Vec::with_capacity(d);
    let mut level = 0;
    while out.len() < count {
        push_level(d, level, &mut prefix, &mut out, count);
        level += 1;
    }
    out
}

/// Serializes a sequence as one comma-separated tuple per line.
pub fn sequence_to_text(indices: &[MultiIndex]) -> String {
    let mut s = String::new();
    for nu in indices {
        s.push_str(&nu.to_string());
        s.push('\n');
    }
    s
}

/// Parses the format written by [`sequence_to_text`]; blank lines are skipped.
pub fn sequence_from_text(text: &str) -> Result<Vec<MultiIndex>> {
    let v = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<MultiIndex>>>()?;
    check_dims(&v)?;
    Ok(v)
}

/// Ordered downward-closed set whose every prefix is downward closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DownwardClosedSet {
    dim: usize,
    indices: Vec<MultiIndex>,
    members: HashSet<MultiIndex>,
}

impl DownwardClosedSet {
    pub fn empty(dim: usize) -> Self {
        assert!(dim >= 1, "parameter dimension must be positive");
        Self {
            dim,
            indices: Vec::new(),
            members: HashSet::new(),
        }
    }

    /// Validates that `indices` is a linear extension of a downward closed set.
    pub fn new(indices: Vec<MultiIndex>) -> Result<Self> {
        let d = check_dims(&indices)?;
        if d == 0 {
            return Err(Error::InvalidSet("empty index set".into()));
        }
        let mut set = Self::empty(d);
        set.extend(indices)?;
        Ok(set)
    }

    /// The first `count` entries of [`canonical_sequence`].
    pub fn canonical(d: usize, count: usize) -> Self {
        let indices = canonical_sequence(d, count);
        let members = indices.iter().cloned().collect();
        Self {
            dim: d,
            indices,
            members,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.members.contains(nu)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    /// Largest exponent used in each direction.
    pub fn max_exponents(&self) -> Vec<u32> {
        let mut m = vec![0; self.dim];
        for nu in &self.indices {
            for (mj, &e) in m.iter_mut().zip(nu.exponents()) {
                *mj = (*mj).max(e);
            }
        }
        m
    }

    /// Checks that appending `extra` in order keeps every prefix downward
    /// closed, without modifying the set.
    pub fn check_extension(&self, extra: &[MultiIndex]) -> Result<()> {
        let mut seen: HashSet<&MultiIndex> = HashSet::new();
        for nu in extra {
            if nu.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    found: nu.dim(),
                });
            }
            if self.members.contains(nu) || seen.contains(nu) {
                return Err(Error::InvalidSet(format!("duplicate index ({nu})")));
            }
            for p in nu.predecessors() {
                if !self.members.contains(&p) && !seen.contains(&p) {
                    return Err(Error::InvalidSet(format!(
                        "({nu}) added before its predecessor ({p})"
                    )));
                }
            }
            seen.insert(nu);
        }
        Ok(())
    }

    /// Appends `extra` in order; on error the set is left unchanged.
    pub fn extend(&mut self, extra: impl IntoIterator<Item = MultiIndex>) -> Result<()> {
        let extra: Vec<MultiIndex> = extra.into_iter().collect();
        self.check_extension(&extra)?;
        for nu in extra {
            self.members.insert(nu.clone());
            self.indices.push(nu);
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a DownwardClosedSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;
    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}
