//! Snapshot maps on `[-1, 1]^d`: closed-form test functions, the FOM-backed
//! maps of the two channel models, and an on-disk snapshot cache.

mod analytic;
mod cache;
mod fom_map;

pub use analytic::{AnalyticKind, AnalyticMap};
pub use cache::{CachedMap, SnapshotCache};
pub use fom_map::{FomMap, FomProblem, BIAS_FORCE};

use crate::error::{Error, Result};

/// Affine bijection between `[-1, 1]^d` and a box of physical parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineParameterMap {
    intervals: Vec<(f64, f64)>,
}

impl AffineParameterMap {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidInput("parameter map needs at least one interval".into()));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::InvalidInput(format!("invalid parameter interval [{a}, {b}]")));
            }
        }
        Ok(Self { intervals })
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// `a + (y + 1)(b − a)/2`, componentwise.
    pub fn to_physical(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y.len())?;
        y.iter()
            .zip(&self.intervals)
            .map(|(&y, &(a, b))| {
                if !(-1.0..=1.0).contains(&y) {
                    return Err(Error::Domain(format!("reference coordinate {y} outside [-1, 1]")));
                }
                // endpoints map exactly
                Ok(0.5 * ((1.0 - y) * a + (1.0 + y) * b))
            })
            .collect()
    }

    pub fn to_reference(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        x.iter()
            .zip(&self.intervals)
            .map(|(&x, &(a, b))| {
                if !(a..=b).contains(&x) {
                    return Err(Error::Domain(format!("parameter {x} outside [{a}, {b}]")));
                }
                Ok(((x - a) - (b - x)) / (b - a))
            })
            .collect()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }
}
