//! Convergence studies: interpolants of increasing dimension along the
//! canonical index sequence, checked against reference solutions on a test
//! grid.

mod config;

pub use config::{StudyConfig, StudyModel, TestGrid};

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::fom::oseen::weighted_norm;
use crate::interp::{SnapshotMap, SparseInterpolant};
use crate::multiindex::{canonical_sequence, MultiIndex};
use crate::par;
use crate::points::{PointRuleKind, TensorGrid, UnivariatePointRule};
use crate::providers::{AnalyticMap, CachedMap, FomMap, FomProblem, SnapshotCache};

/// Errors of the interpolant with `n` snapshots over the test grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub n: usize,
    pub mean_rel_l2: f64,
    pub max_rel_l2: f64,
}

pub const CSV_HEADER: &str = "N,mean_rel_l2,max_rel_l2";

impl StudyReport {
    /// Total map evaluations.
    pub fn evaluations(&self) -> usize {
        self.snapshot_evaluations + self.reference_evaluations
    }
}

impl ErrorRow {
    /// CSV line with round-trip-exact numbers.
    pub fn csv_line(&self) -> String {
        format!("{},{:e},{:e}", self.n, self.mean_rel_l2, self.max_rel_l2)
    }
}

/// `‖a − r‖_w / ‖r‖_w` with diagonal weights `w`.
pub fn relative_l2_error(approx: &[f64], reference: &[f64], weights: &[f64]) -> Result<f64> {
    for len in [approx.len(), weights.len()] {
        if len != reference.len() {
            return Err(Error::DimensionMismatch {
                expected: reference.len(),
                found: len,
            });
        }
    }
    let norm = weighted_norm(reference, weights);
    if !(norm > 0.0) {
        return Err(Error::UndefinedError);
    }
    let diff: Vec<f64> = approx.iter().zip(reference).map(|(a, r)| a - r).collect();
    Ok(weighted_norm(&diff, weights) / norm)
}

/// Outcome of one study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub rule: Vec<PointRuleKind>,
    pub rows: Vec<ErrorRow>,
    /// Map evaluations at interpolation nodes (cache hits excluded).
    pub snapshot_evaluations: usize,
    /// Map evaluations at test points; shared by all reports of one
    /// comparison and counted on the first.
    pub reference_evaluations: usize,
    pub output: Option<PathBuf>,
}

/// Writes the CSV header and flushes each row as it arrives.
struct CsvSink {
    out: Option<BufWriter<File>>,
}

impl CsvSink {
    fn create(path: Option<&Path>) -> Result<Self> {
        let out = match path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                let mut w = BufWriter::new(File::create(p)?);
                writeln!(w, "{CSV_HEADER}")?;
                w.flush()?;
                Some(w)
            }
            None => None,
        };
        Ok(Self { out })
    }

    fn row(&mut self, row: &ErrorRow) -> Result<()> {
        if let Some(w) = &mut self.out {
            writeln!(w, "{}", row.csv_line())?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Renders rows exactly as the study CSV files.
pub fn rows_to_csv(rows: &[ErrorRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.csv_line());
        s.push('\n');
    }
    s
}

/// Snapshot provider selected by the study configuration.
enum Provider {
    Analytic(AnalyticMap),
    Fom(FomMap),
}

impl Provider {
    fn new(cfg: &StudyConfig) -> Result<Self> {
        Ok(match &cfg.model {
            StudyModel::Analytic { kind, dim, len } => Provider::Analytic(AnalyticMap::new(*kind, *dim, *len)?),
            StudyModel::Fom(model) => {
                let mut p = FomProblem::new(*model, cfg.nx, cfg.ny)?;
                p.flow = cfg.flow.clone();
                if let Some(b) = cfg.bias {
                    p.bias = b;
                }
                let map = FomMap::new(p)?;
                Provider::Fom(if cfg.warm_start { map.with_warm_start() } else { map })
            }
        })
    }

    fn map(&self) -> &dyn SnapshotMap {
        match self {
            Provider::Analytic(m) => m,
            Provider::Fom(m) => m,
        }
    }

    fn evaluations(&self) -> usize {
        match self {
            Provider::Analytic(m) => m.calls(),
            Provider::Fom(m) => m.solves(),
        }
    }

    fn descriptor(&self) -> String {
        match self {
            Provider::Analytic(m) => format!(
                "analytic kind={} d={} D={}",
                m.kind(),
                m.param_dim(),
                m.output_len()
            ),
            Provider::Fom(m) => m.problem().descriptor(),
        }
    }

    /// Weights of the error norm: lumped reference-mesh mass for the FOM.
    fn weights(&self) -> Result<Vec<f64>> {
        match self {
            Provider::Analytic(m) => Ok(vec![1.0; m.output_len()]),
            Provider::Fom(m) => Ok(m.problem().reference_mesh()?.velocity_weights()),
        }
    }
}

/// Shared state of one or more studies on the same model and test grid.
struct Session<'c> {
    cfg: &'c StudyConfig,
    provider: Provider,
    tests: Vec<Vec<f64>>,
    references: Vec<Vec<f64>>,
    weights: Vec<f64>,
    sequence: Vec<MultiIndex>,
    /// Reference evaluations not yet attributed to a report.
    pending_references: std::cell::Cell<usize>,
}

impl<'c> Session<'c> {
    fn open(cfg: &'c StudyConfig) -> Result<Self> {
        cfg.validate()?;
        let provider = Provider::new(cfg)?;
        let tests = cfg.test_grid.points(cfg.model.param_dim())?;
        let weights = provider.weights()?;
        let map = provider.map();

        let ref_cache = match &cfg.cache {
            Some(root) => {
                let desc = format!("{} references {}", provider.descriptor(), cfg.test_grid);
                Some(SnapshotCache::open(root, &desc, map.output_len())?)
            }
            None => None,
        };
        let indexed: Vec<(usize, &Vec<f64>)> = tests.iter().enumerate().collect();
        let references = par::try_map(&indexed, |&(i, y)| match &ref_cache {
            Some(c) => c.point_or_compute(i, y, || map.evaluate(y)),
            None => map.evaluate(y),
        })?;
        let sequence = canonical_sequence(cfg.model.param_dim(), cfg.max_dimension);
        let pending_references = std::cell::Cell::new(provider.evaluations());
        Ok(Self {
            cfg,
            provider,
            tests,
            references,
            weights,
            sequence,
            pending_references,
        })
    }

    fn grid(&self, rules: &[PointRuleKind]) -> Result<TensorGrid> {
        let mut max = vec![0u32; rules.len()];
        for nu in &self.sequence {
            for (m, &e) in max.iter_mut().zip(nu.exponents()) {
                *m = (*m).max(e);
            }
        }
        let rules = rules
            .iter()
            .zip(&max)
            .map(|(&k, &m)| UnivariatePointRule::new(k, m as usize + 1, self.cfg.grid_resolution))
            .collect::<Result<Vec<_>>>()?;
        TensorGrid::new(rules)
    }

    fn check_disjoint(&self, grid: &TensorGrid) -> Result<()> {
        if self.cfg.allow_node_overlap {
            return Ok(());
        }
        for nu in &self.sequence {
            let z = grid.point(nu)?;
            if let Some(t) = self
                .tests
                .iter()
                .find(|t| t.iter().zip(&z).all(|(a, b)| (a - b).abs() <= 1e-12))
            {
                return Err(Error::Config(format!(
                    "test point {t:?} coincides with interpolation node ({nu}); set allow_node_overlap = true to permit"
                )));
            }
        }
        Ok(())
    }

    fn run(&self, rules: &[PointRuleKind], output: Option<&Path>) -> Result<StudyReport> {
        let grid = self.grid(rules)?;
        self.check_disjoint(&grid)?;
        let map = self.provider.map();
        let before = self.provider.evaluations();

        let snap_cache = match &self.cfg.cache {
            Some(root) => {
                let rules_desc: Vec<String> = grid.rules().iter().map(|r| r.descriptor()).collect();
                let desc = format!("{} snapshots {}", self.provider.descriptor(), rules_desc.join(" | "));
                Some(SnapshotCache::open(root, &desc, map.output_len())?)
            }
            None => None,
        };
        let cached = snap_cache.as_ref().map(|c| CachedMap::new(map, c)).transpose()?;
        let source: &dyn SnapshotMap = match &cached {
            Some(c) => c,
            None => map,
        };

        let mut sink = CsvSink::create(output)?;
        let mut interp = SparseInterpolant::empty(grid.clone(), map.output_len())?;
        let mut rows = Vec::with_capacity(self.sequence.len());
        for level in self
            .sequence
            .chunk_by(|a, b| a.total_degree() == b.total_degree())
        {
            // one level of snapshots at a time, concurrently
            let snaps = par::try_map(level, |nu| {
                let y = grid.point(nu)?;
                source.snapshot(nu, &y)
            })?;
            let memo = Prefetched {
                inner: source,
                store: Mutex::new(level.iter().cloned().zip(snaps).collect()),
            };
            for nu in level {
                interp.enrich(std::slice::from_ref(nu), &memo)?;
                let row = self.errors(&interp)?;
                sink.row(&row)?;
                rows.push(row);
            }
        }
        Ok(StudyReport {
            rule: rules.to_vec(),
            rows,
            snapshot_evaluations: self.provider.evaluations() - before,
            reference_evaluations: self.pending_references.take(),
            output: output.map(Path::to_path_buf),
        })
    }

    fn errors(&self, interp: &SparseInterpolant) -> Result<ErrorRow> {
        let approx = interp.evaluate_many(&self.tests)?;
        let errs = approx
            .iter()
            .zip(&self.references)
            .map(|(a, r)| relative_l2_error(a, r, &self.weights))
            .collect::<Result<Vec<f64>>>()?;
        Ok(ErrorRow {
            n: interp.snapshot_count(),
            mean_rel_l2: errs.iter().sum::<f64>() / errs.len() as f64,
            max_rel_l2: errs.iter().copied().fold(0.0, f64::max),
        })
    }
}

/// Hands out snapshots computed ahead of time.
struct Prefetched<'a> {
    inner: &'a dyn SnapshotMap,
    store: Mutex<HashMap<MultiIndex, Vec<f64>>>,
}

impl SnapshotMap for Prefetched<'_> {
    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn output_len(&self) -> usize {
        self.inner.output_len()
    }

    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.inner.evaluate(y)
    }

    fn snapshot(&self, index: &MultiIndex, y: &[f64]) -> Result<Vec<f64>> {
        let hit = self.store.lock().unwrap_or_else(|e| e.into_inner()).remove(index);
        match hit {
            Some(v) => Ok(v),
            None => self.inner.snapshot(index, y),
        }
    }
}

/// Runs the study of `cfg` with its point rules; writes `cfg.output` if set.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    let session = Session::open(cfg)?;
    session.run(&cfg.rules_per_direction()?, cfg.output.as_deref())
}

/// One study per rule (applied in every direction) with shared references
/// and cache. Output files are `<output stem>_<rule>.csv`.
pub fn compare_point_rules(cfg: &StudyConfig, rules: &[PointRuleKind]) -> Result<Vec<StudyReport>> {
    let session = Session::open(cfg)?;
    let d = cfg.model.param_dim();
    rules
        .iter()
        .map(|&rule| {
            let out = cfg.output.as_deref().map(|p| rule_output(p, rule));
            session.run(&vec![rule; d], out.as_deref())
        })
        .collect()
}

fn rule_output(base: &Path, rule: PointRuleKind) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
    base.with_file_name(format!("{stem}_{}.csv", rule.name()))
}
