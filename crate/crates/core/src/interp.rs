//! Hierarchical Lagrange interpolation on downward-closed index sets.
//!
//! The sparse operator `I_Λ = Σ_{ν∈Λ} Δ_ν` is stored in surplus form
//! `I_Λ g = Σ_{ν∈Λ} α_ν H_ν`, where `H_ν(y) = Π_j h_{ν_j}(y_j)` and
//! `h_k(y) = Π_{j<k} (y − z_j)/(z_k − z_j)`. Since `h_k` vanishes at the
//! earlier nodes and equals one at `z_k`, the collocation matrix over any
//! linear extension of `Λ` is unit lower triangular and the surpluses follow
//! by forward substitution: `α_ν = g(z_ν) − I_{Λ_prev} g(z_ν)`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::multiindex::{DownwardClosedSet, MultiIndex};
use crate::par;
use crate::points::{TensorGrid, UnivariatePointRule};

/// A deterministic vector-valued map on `[-1, 1]^d`.
pub trait SnapshotMap: Sync {
    /// Number of parameters `d`.
    fn param_dim(&self) -> usize;

    /// Length `D` of every returned vector.
    fn output_len(&self) -> usize;

    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// Snapshot at the interpolation node `z_ν`; caching maps key on `ν`.
    fn snapshot(&self, index: &MultiIndex, y: &[f64]) -> Result<Vec<f64>> {
        let _ = index;
        self.evaluate(y)
    }
}

impl<M: SnapshotMap + ?Sized> SnapshotMap for &M {
    fn param_dim(&self) -> usize {
        (**self).param_dim()
    }
    fn output_len(&self) -> usize {
        (**self).output_len()
    }
    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).evaluate(y)
    }
    fn snapshot(&self, index: &MultiIndex, y: &[f64]) -> Result<Vec<f64>> {
        (**self).snapshot(index, y)
    }
}

/// Adapts a closure `y ↦ vector` into a [`SnapshotMap`].
pub struct FnMap<F> {
    dim: usize,
    len: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, len: usize, f: F) -> Self {
        Self { dim, len, f }
    }
}

impl<F> SnapshotMap for FnMap<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn param_dim(&self) -> usize {
        self.dim
    }
    fn output_len(&self) -> usize {
        self.len
    }
    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok((self.f)(y))
    }
}

/// `h_k(y)` for the nodes of `rule`, evaluated as a product of ratios.
pub fn hierarchical_poly(k: usize, y: f64, rule: &UnivariatePointRule) -> Result<f64> {
    let zk = rule.point(k)?;
    Ok(rule.points()[..k]
        .iter()
        .fold(1.0, |acc, &zj| acc * (y - zj) / (zk - zj)))
}

/// `H_ν(y) = Π_j h_{ν_j}(y_j)`.
pub fn tensor_hierarchical(nu: &MultiIndex, y: &[f64], grid: &TensorGrid) -> Result<f64> {
    if nu.dim() != grid.dim() || y.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            found: if nu.dim() != grid.dim() { nu.dim() } else { y.len() },
        });
    }
    let mut h = 1.0;
    for (j, (&e, &yj)) in nu.exponents().iter().zip(y).enumerate() {
        h *= hierarchical_poly(e as usize, yj, grid.rule(j))?;
    }
    Ok(h)
}

/// Sparse interpolant of a vector-valued map in hierarchical surplus form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseInterpolant {
    index_set: DownwardClosedSet,
    grid: TensorGrid,
    coefficients: Vec<Vec<f64>>,
    output_len: usize,
    snapshot_count: usize,
}

impl SparseInterpolant {
    /// Interpolant over `indices` with one snapshot per index.
    pub fn build<M: SnapshotMap + ?Sized>(
        indices: &DownwardClosedSet,
        grid: TensorGrid,
        map: &M,
    ) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidSet("empty index set".into()));
        }
        let mut interp = Self::empty(grid, map.output_len())?;
        interp.enrich(indices.indices(), map)?;
        Ok(interp)
    }

    /// The zero operator on `grid` (no indices, no snapshots).
    pub fn empty(grid: TensorGrid, output_len: usize) -> Result<Self> {
        Ok(Self {
            index_set: DownwardClosedSet::empty(grid.dim()),
            grid,
            coefficients: Vec::new(),
            output_len,
            snapshot_count: 0,
        })
    }

    pub fn index_set(&self) -> &DownwardClosedSet {
        &self.index_set
    }

    pub fn grid(&self) -> &TensorGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshot_count
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Adds `extra` (in order) to the index set, evaluating `map` once per new
    /// index. Existing surpluses are not touched. Snapshots belonging to the
    /// same total-degree level are requested together and may be computed
    /// concurrently. On error the interpolant is unchanged.
    pub fn enrich<M: SnapshotMap + ?Sized>(&mut self, extra: &[MultiIndex], map: &M) -> Result<()> {
        if map.param_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: map.param_dim(),
            });
        }
        if map.output_len() != self.output_len {
            return Err(Error::DimensionMismatch {
                expected: self.output_len,
                found: map.output_len(),
            });
        }
        self.index_set.check_extension(extra)?;
        if let Some(nu) = extra.iter().find(|nu| !self.grid.covers(nu)) {
            return Err(Error::OutOfRange(format!(
                "index ({nu}) exceeds the point rules of the grid"
            )));
        }

        let mut snapshots = Vec::with_capacity(extra.len());
        for level in extra.chunk_by(|a, b| a.total_degree() == b.total_degree()) {
            let batch = par::try_map(level, |nu| {
                let y = self.grid.point(nu)?;
                let s = map.snapshot(nu, &y)?;
                if s.len() != self.output_len {
                    return Err(Error::DimensionMismatch {
                        expected: self.output_len,
                        found: s.len(),
                    });
                }
                Ok((y, s))
            })?;
            snapshots.extend(batch);
        }

        for (nu, (y, mut surplus)) in extra.iter().zip(snapshots) {
            self.accumulate_into(&y, -1.0, &mut surplus);
            self.coefficients.push(surplus);
            self.index_set.extend([nu.clone()])?;
            self.snapshot_count += 1;
        }
        Ok(())
    }

    /// Hierarchical values `h_k(y_j)` for every direction up to the largest
    /// exponent in use.
    fn hierarchical_table(&self, y: &[f64]) -> Vec<Vec<f64>> {
        let max = self.index_set.max_exponents();
        y.iter()
            .zip(max)
            .enumerate()
            .map(|(j, (&yj, m))| {
                let mut h = vec![0.0; m as usize + 1];
                self.grid.rule(j).hierarchical_values_into(yj, &mut h);
                h
            })
            .collect()
    }

    /// `out += scale · I_Λ(y)`.
    fn accumulate_into(&self, y: &[f64], scale: f64, out: &mut [f64]) {
        if self.coefficients.is_empty() {
            return;
        }
        let table = self.hierarchical_table(y);
        for (nu, alpha) in self.index_set.iter().zip(&self.coefficients) {
            let h = nu
                .exponents()
                .iter()
                .zip(&table)
                .fold(1.0, |acc, (&e, hj)| acc * hj[e as usize]);
            if h == 0.0 {
                continue;
            }
            let w = scale * h;
            for (o, a) in out.iter_mut().zip(alpha) {
                *o += w * a;
            }
        }
    }

    /// `I_Λ g (y) = Σ_ν α_ν H_ν(y)`.
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        if y.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!("parameter {y:?} outside [-1, 1]^d")));
        }
        let mut out = vec![0.0; self.output_len];
        self.accumulate_into(y, 1.0, &mut out);
        Ok(out)
    }

    /// Evaluates at many points, concurrently when the `parallel` feature is on.
    pub fn evaluate_many(&self, ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        par::try_map(ys, |y| self.evaluate(y))
    }

    pub fn evaluate_many_sequential(&self, ys: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        par::map_sequential(ys, |y| self.evaluate(y))
            .into_iter()
            .collect()
    }

    /// Writes `manifest.txt` and one `alpha_<ν>.bin` file per index into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut manifest = String::new();
        manifest.push_str("sparse-interpolant v1\n");
        manifest.push_str(&format!("dim {}\n", self.dim()));
        manifest.push_str(&format!("output_len {}\n", self.output_len));
        manifest.push_str(&format!("snapshot_count {}\n", self.snapshot_count));
        for (j, rule) in self.grid.rules().iter().enumerate() {
            let pts: Vec<String> = rule.points().iter().map(|p| format!("{p:e}")).collect();
            manifest.push_str(&format!(
                "rule {j} {} points={}\n",
                rule.descriptor(),
                pts.join(",")
            ));
        }
        for (nu, alpha) in self.index_set.iter().zip(&self.coefficients) {
            manifest.push_str(&format!("index {nu}\n"));
            let mut f = fs::File::create(dir.join(format!("alpha_{}.bin", nu.file_stem())))?;
            f.write_all(&encode_f64s(alpha))?;
        }
        fs::write(dir.join("manifest.txt"), manifest)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.txt"))?;
        let bad = |msg: &str| Error::InvalidInput(format!("interpolant manifest: {msg}"));
        let mut lines = text.lines();
        if lines.next() != Some("sparse-interpolant v1") {
            return Err(bad("missing header"));
        }
        let mut dim = None;
        let mut output_len = None;
        let mut snapshot_count = None;
        let mut rules = Vec::new();
        let mut indices = Vec::new();
        for line in lines {
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad(line))?;
            let parse_usize = |s: &str| s.trim().parse::<usize>().map_err(|_| bad(line));
            match key {
                "dim" => dim = Some(parse_usize(rest)?),
                "output_len" => output_len = Some(parse_usize(rest)?),
                "snapshot_count" => snapshot_count = Some(parse_usize(rest)?),
                "rule" => {
                    let (_, body) = rest.split_once(' ').ok_or_else(|| bad(line))?;
                    let (desc, pts) = body.split_once(" points=").ok_or_else(|| bad(line))?;
                    let (kind, _, res) = UnivariatePointRule::parse_descriptor(desc)?;
                    let points = pts
                        .split(',')
                        .map(|p| p.parse::<f64>().map_err(|_| bad(line)))
                        .collect::<Result<Vec<_>>>()?;
                    rules.push(UnivariatePointRule::from_points(kind, points, res));
                }
                "index" => indices.push(rest.parse::<MultiIndex>()?),
                _ => return Err(bad(line)),
            }
        }
        let (Some(dim), Some(output_len), Some(snapshot_count)) = (dim, output_len, snapshot_count)
        else {
            return Err(bad("incomplete header"));
        };
        if rules.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rules.len(),
            });
        }
        let grid = TensorGrid::new(rules)?;
        let mut index_set = DownwardClosedSet::empty(dim);
        index_set.extend(indices)?;
        let mut coefficients = Vec::with_capacity(index_set.len());
        for nu in &index_set {
            let bytes = fs::read(dir.join(format!("alpha_{}.bin", nu.file_stem())))?;
            let alpha = decode_f64s(&bytes)?;
            if alpha.len() != output_len {
                return Err(Error::DimensionMismatch {
                    expected: output_len,
                    found: alpha.len(),
                });
            }
            coefficients.push(alpha);
        }
        Ok(Self {
            index_set,
            grid,
            coefficients,
            output_len,
            snapshot_count,
        })
    }
}

pub(crate) fn encode_f64s(v: &[f64]) -> Vec<u8> {
    v.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub(crate) fn decode_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::InvalidInput(format!(
            "binary vector length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
