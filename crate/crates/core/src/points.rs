//! Nested univariate point sequences on `[-1, 1]` and their tensorization.
//!
//! Leja points are obtained greedily: given `x_1, …, x_{N-1}`, the next
//! point maximizes `F^N(y) = Π_{i<N} |y − x_i|`. The maximization runs over
//! a uniform candidate grid; among candidates whose value is within
//! [`TIE_RTOL`] of the maximum the largest `y` wins, which makes mirrored
//! maxima resolve toward the positive side independently of rounding.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::multiindex::MultiIndex;
use crate::par;

pub const DEFAULT_GRID_RESOLUTION: usize = 100_001;
pub const MIN_GRID_RESOLUTION: usize = 1000;

/// Relative band below the grid maximum that counts as a tie.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PointRuleKind {
    Leja,
    SymmetrizedLeja,
    /// Fixed equidistant master set, put in Leja ordering.
    EquidistantLejaOrdered,
    /// Fixed equidistant master set in natural left-to-right order.
    EquidistantNatural,
}

impl PointRuleKind {
    pub const ALL: [PointRuleKind; 4] = [
        PointRuleKind::Leja,
        PointRuleKind::SymmetrizedLeja,
        PointRuleKind::EquidistantLejaOrdered,
        PointRuleKind::EquidistantNatural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PointRuleKind::Leja => "leja",
            PointRuleKind::SymmetrizedLeja => "symmetrized-leja",
            PointRuleKind::EquidistantLejaOrdered => "equidistant-leja",
            PointRuleKind::EquidistantNatural => "equidistant-natural",
        }
    }
}

impl fmt::Display for PointRuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PointRuleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PointRuleKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown point rule {s:?} (expected one of leja, symmetrized-leja, equidistant-leja, equidistant-natural)"
                ))
            })
    }
}

/// Uniform candidate grid value `y_g`, exactly antisymmetric: `y_{M-g} = -y_g`.
#[inline]
fn grid_point(g: usize, resolution: usize) -> f64 {
    let m = (resolution - 1) as f64;
    (2.0 * g as f64 - m) / m
}

/// Greedy maximizer of a product of distances over the candidate grid.
struct GridMaximizer {
    resolution: usize,
    values: Vec<f64>,
}

impl GridMaximizer {
    fn new(resolution: usize) -> Self {
        Self {
            resolution,
            values: vec![1.0; resolution],
        }
    }

    /// Multiplies `|y − x|` into every candidate value.
    fn include(&mut self, x: f64) {
        let res = self.resolution;
        let update = |(g, v): (usize, &mut f64)| *v *= (grid_point(g, res) - x).abs();
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            self.values
                .par_iter_mut()
                .with_min_len(8192)
                .enumerate()
                .for_each(update);
        }
        #[cfg(not(feature = "parallel"))]
        self.values.iter_mut().enumerate().for_each(update);
    }

    fn argmax(&self) -> f64 {
        let values = &self.values;
        let best = par::max_over(values.len(), |g| values[g]);
        let g = select_tie_upper(values, best);
        grid_point(g, self.resolution)
    }
}

/// Largest position whose value lies within the tie band below `best`.
fn select_tie_upper(values: &[f64], best: f64) -> usize {
    let floor = best * (1.0 - TIE_RTOL);
    values
        .iter()
        .rposition(|&v| v >= floor)
        .expect("candidate set is non-empty")
}

fn check_resolution(grid_resolution: usize) -> Result<()> {
    if grid_resolution < MIN_GRID_RESOLUTION {
        return Err(Error::InvalidInput(format!(
            "grid resolution {grid_resolution} below the minimum {MIN_GRID_RESOLUTION}"
        )));
    }
    Ok(())
}

/// Leja sequence of length `n` started at `x1`.
pub fn leja_sequence(n: usize, x1: f64, grid_resolution: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    if !(-1.0..=1.0).contains(&x1) {
        return Err(Error::Domain(format!("start point {x1} outside [-1, 1]")));
    }
    check_resolution(grid_resolution)?;
    let mut pts = vec![x1];
    let mut grid = GridMaximizer::new(grid_resolution);
    while pts.len() < n {
        grid.include(*pts.last().unwrap());
        pts.push(grid.argmax());
    }
    Ok(pts)
}

/// Symmetrized Leja sequence: `0, 1, −1`, then grid maximizers at even
/// positions `N` (1-based) and mirrored points `x_N = −x_{N−1}` at odd ones.
pub fn symmetrized_leja(n: usize, grid_resolution: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one point".into()));
    }
    check_resolution(grid_resolution)?;
    let mut pts: Vec<f64> = vec![0.0, 1.0, -1.0];
    pts.truncate(n);
    if n <= 3 {
        return Ok(pts);
    }
    let mut grid = GridMaximizer::new(grid_resolution);
    for &x in &pts {
        grid.include(x);
    }
    while pts.len() < n {
        let position = pts.len() + 1;
        let next = if position % 2 == 0 {
            grid.argmax()
        } else {
            -pts[pts.len() - 1]
        };
        grid.include(next);
        pts.push(next);
    }
    Ok(pts)
}

/// Reorders a finite point set by the greedy Leja rule restricted to the set.
///
/// Starts from the point of largest magnitude (positive on ties); ties in
/// the restricted maximization go to the larger value.
pub fn leja_order(points: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot order an empty set".into()));
    }
    let mut remaining: Vec<f64> = points.to_vec();
    for &p in &remaining {
        if !(-1.0..=1.0).contains(&p) {
            return Err(Error::Domain(format!("point {p} outside [-1, 1]")));
        }
    }
    remaining.sort_by(f64::total_cmp);
    if remaining.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("duplicate points in set".into()));
    }

    // sorted ascending, so ties resolve to the rightmost candidate
    let first = {
        let best = remaining.iter().fold(0.0f64, |m, p| m.max(p.abs()));
        remaining.iter().rposition(|p| p.abs() == best).unwrap()
    };
    let mut ordered = vec![remaining.remove(first)];
    let mut values: Vec<f64> = vec![1.0; remaining.len()];
    while !remaining.is_empty() {
        let last = *ordered.last().unwrap();
        for (v, &p) in values.iter_mut().zip(&remaining) {
            *v *= (p - last).abs();
        }
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let k = select_tie_upper(&values, best);
        ordered.push(remaining.remove(k));
        values.remove(k);
    }
    Ok(ordered)
}

/// `m` uniformly spaced points from −1 to 1 in natural order.
pub fn equidistant(m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!(
            "equidistant set needs at least 2 points, got {m}"
        )));
    }
    let denom = (m - 1) as f64;
    Ok((0..m)
        .map(|i| (2.0 * i as f64 - denom) / denom)
        .collect())
}

/// A concrete, finite prefix of a nested point sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariatePointRule {
    kind: PointRuleKind,
    points: Vec<f64>,
    grid_resolution: usize,
    /// `Π_{j<k} (z_k − z_j)`, the normalisation of `h_k`.
    denominators: Vec<f64>,
}

impl UnivariatePointRule {
    /// Builds the first `n` points of a rule.
    ///
    /// Plain Leja starts at `x1 = 0`. The equidistant kinds use a master set
    /// of `max(n, 2)` points.
    pub fn new(kind: PointRuleKind, n: usize, grid_resolution: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one point".into()));
        }
        let mut points = match kind {
            PointRuleKind::Leja => leja_sequence(n, 0.0, grid_resolution)?,
            PointRuleKind::SymmetrizedLeja => symmetrized_leja(n, grid_resolution)?,
            PointRuleKind::EquidistantLejaOrdered => leja_order(&equidistant(n.max(2))?)?,
            PointRuleKind::EquidistantNatural => equidistant(n.max(2))?,
        };
        points.truncate(n);
        Ok(Self::from_points(kind, points, grid_resolution))
    }

    /// Wraps explicit points (assumed distinct, in `[-1, 1]`).
    pub fn from_points(kind: PointRuleKind, points: Vec<f64>, grid_resolution: usize) -> Self {
        let denominators = (0..points.len())
            .map(|k| {
                points[..k]
                    .iter()
                    .fold(1.0, |acc, &zj| acc * (points[k] - zj))
            })
            .collect();
        Self {
            kind,
            points,
            grid_resolution,
            denominators,
        }
    }

    pub fn kind(&self) -> PointRuleKind {
        self.kind
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution
    }

    pub fn point(&self, k: usize) -> Result<f64> {
        self.points.get(k).copied().ok_or_else(|| {
            Error::OutOfRange(format!(
                "point {k} requested from a {} rule of length {}",
                self.kind,
                self.points.len()
            ))
        })
    }

    /// Writes `h_0(y), …, h_{len-1}(y)` into `out`.
    pub(crate) fn hierarchical_values_into(&self, y: f64, out: &mut [f64]) {
        let mut numerator = 1.0;
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = numerator / self.denominators[k];
            numerator *= y - self.points[k];
        }
    }

    /// One-line description: `kind n=<len> res=<grid resolution>`.
    pub fn descriptor(&self) -> String {
        format!(
            "{} n={} res={}",
            self.kind,
            self.points.len(),
            self.grid_resolution
        )
    }

    pub fn parse_descriptor(s: &str) -> Result<(PointRuleKind, usize, usize)> {
        let mut parts = s.split_whitespace();
        let kind: PointRuleKind = parts
            .next()
            .ok_or_else(|| Error::InvalidInput("empty rule descriptor".into()))?
            .parse()?;
        let mut n = None;
        let mut res = None;
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("bad descriptor field {p:?}")))?;
            let v: usize = v
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad descriptor value {p:?}")))?;
            match k {
                "n" => n = Some(v),
                "res" => res = Some(v),
                _ => return Err(Error::InvalidInput(format!("unknown descriptor field {k:?}"))),
            }
        }
        match (n, res) {
            (Some(n), Some(res)) => Ok((kind, n, res)),
            _ => Err(Error::InvalidInput(format!("incomplete rule descriptor {s:?}"))),
        }
    }
}

/// One univariate rule per parameter direction.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorGrid {
    rules: Vec<UnivariatePointRule>,
}

impl TensorGrid {
    pub fn new(rules: Vec<UnivariatePointRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidInput("tensor grid needs at least one direction".into()));
        }
        Ok(Self { rules })
    }

    /// The same rule kind in every direction, each with `n` points.
    pub fn uniform(kind: PointRuleKind, dim: usize, n: usize, grid_resolution: usize) -> Result<Self> {
        let rule = UnivariatePointRule::new(kind, n, grid_resolution)?;
        Self::new(vec![rule; dim])
    }

    pub fn dim(&self) -> usize {
        self.rules.len()
    }

    pub fn rules(&self) -> &[UnivariatePointRule] {
        &self.rules
    }

    pub fn rule(&self, j: usize) -> &UnivariatePointRule {
        &self.rules[j]
    }

    /// Whether every exponent of `nu` has a point in its direction.
    pub fn covers(&self, nu: &MultiIndex) -> bool {
        nu.dim() == self.dim()
            && nu
                .exponents()
                .iter()
                .zip(&self.rules)
                .all(|(&e, r)| (e as usize) < r.len())
    }

    /// `z_ν`: component `j` is point `ν_j` of rule `j`.
    pub fn point(&self, nu: &MultiIndex) -> Result<Vec<f64>> {
        if nu.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: nu.dim(),
            });
        }
        nu.exponents()
            .iter()
            .zip(&self.rules)
            .map(|(&e, r)| r.point(e as usize))
            .collect()
    }
}
