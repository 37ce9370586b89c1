//! Flat `key = value` study configuration.
//!
//! ```text
//! # model-1 convergence study
//! model = narrowing-width
//! point_rule = leja
//! max_dimension = 25
//! test_grid = cells:40
//! nx = 36
//! ny = 12
//! cache = /tmp/rom-cache
//! output = model1.csv
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fom::{FlowConfig, GeometryModel};
use crate::points::{PointRuleKind, DEFAULT_GRID_RESOLUTION};
use crate::providers::AnalyticKind;

#[derive(Clone, Debug, PartialEq)]
pub enum StudyModel {
    Fom(GeometryModel),
    /// Closed-form oracle with `dim` parameters and `len` outputs.
    Analytic { kind: AnalyticKind, dim: usize, len: usize },
}

impl StudyModel {
    pub fn param_dim(&self) -> usize {
        match self {
            StudyModel::Fom(GeometryModel::CurvedWalls) => 2,
            StudyModel::Fom(_) => 1,
            StudyModel::Analytic { dim, .. } => *dim,
        }
    }
}

/// Parameter points at which the interpolant is checked.
#[derive(Clone, Debug, PartialEq)]
pub enum TestGrid {
    /// Tensor product of cell midpoints `-1 + (2i+1)/m` per direction; never
    /// contains ±1 or 0.
    Cells(Vec<usize>),
    /// Tensor product of `m ≥ 2` equispaced points including ±1.
    Uniform(Vec<usize>),
    Points(Vec<Vec<f64>>),
}

impl TestGrid {
    pub fn points(&self, dim: usize) -> Result<Vec<Vec<f64>>> {
        let axes: Vec<Vec<f64>> = match self {
            TestGrid::Points(p) => {
                if let Some(bad) = p.iter().find(|y| y.len() != dim) {
                    return Err(Error::Config(format!("test point {bad:?} is not {dim}-dimensional")));
                }
                return Ok(p.clone());
            }
            TestGrid::Cells(m) | TestGrid::Uniform(m) => {
                if m.len() != dim {
                    return Err(Error::Config(format!(
                        "test grid has {} directions, the model has {dim}",
                        m.len()
                    )));
                }
                let uniform = matches!(self, TestGrid::Uniform(_));
                m.iter()
                    .map(|&m| {
                        if m == 0 || (uniform && m < 2) {
                            return Err(Error::Config(format!("test grid size {m} too small")));
                        }
                        Ok((0..m)
                            .map(|i| {
                                if uniform {
                                    -1.0 + 2.0 * i as f64 / (m - 1) as f64
                                } else {
                                    -1.0 + (2 * i + 1) as f64 / m as f64
                                }
                            })
                            .collect())
                    })
                    .collect::<Result<_>>()?
            }
        };
        // first direction varies slowest
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

impl fmt::Display for TestGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sizes = |m: &[usize]| m.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x");
        match self {
            TestGrid::Cells(m) => write!(f, "cells:{}", sizes(m)),
            TestGrid::Uniform(m) => write!(f, "uniform:{}", sizes(m)),
            TestGrid::Points(p) => {
                let pts: Vec<String> = p
                    .iter()
                    .map(|y| y.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","))
                    .collect();
                write!(f, "points:{}", pts.join(";"))
            }
        }
    }
}

impl FromStr for TestGrid {
    type Err = Error;

    /// `cells:40`, `cells:12x6`, `uniform:11x11` or `points:0.1,0.2;0.3,-0.4`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse test grid {s:?}"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let sizes = || -> Result<Vec<usize>> {
            rest.split('x')
                .map(|v| v.trim().parse::<usize>().map_err(|_| bad()))
                .collect()
        };
        match kind.trim() {
            "cells" => Ok(TestGrid::Cells(sizes()?)),
            "uniform" => Ok(TestGrid::Uniform(sizes()?)),
            "points" => rest
                .split(';')
                .map(|p| {
                    p.split(',')
                        .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
                .map(TestGrid::Points),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub model: StudyModel,
    /// One rule per direction, or a single rule applied to all.
    pub point_rules: Vec<PointRuleKind>,
    /// Rules compared by `compare_point_rules`.
    pub compare_rules: Vec<PointRuleKind>,
    pub max_dimension: usize,
    pub grid_resolution: usize,
    pub test_grid: TestGrid,
    /// Permit test points that coincide with interpolation nodes.
    pub allow_node_overlap: bool,
    pub nx: usize,
    pub ny: usize,
    pub flow: FlowConfig,
    /// `None` keeps the model default (off for model 1, on for model 2).
    pub bias: Option<bool>,
    pub warm_start: bool,
    pub cache: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl StudyConfig {
    /// Defaults for `model`: Leja points, the cell-midpoint test grid
    /// (40 points for one parameter, 12×6 for two), `N_max = 25`.
    pub fn new(model: StudyModel) -> Self {
        let test_grid = match model.param_dim() {
            1 => TestGrid::Cells(vec![40]),
            2 => TestGrid::Cells(vec![12, 6]),
            d => TestGrid::Cells(vec![6; d]),
        };
        let (nx, ny) = match model {
            StudyModel::Fom(GeometryModel::CurvedWalls) => (72, 12),
            _ => (36, 12),
        };
        Self {
            model,
            point_rules: vec![PointRuleKind::Leja],
            compare_rules: vec![
                PointRuleKind::Leja,
                PointRuleKind::SymmetrizedLeja,
                PointRuleKind::EquidistantLejaOrdered,
            ],
            max_dimension: 25,
            grid_resolution: DEFAULT_GRID_RESOLUTION,
            test_grid,
            allow_node_overlap: false,
            nx,
            ny,
            flow: FlowConfig::default(),
            bias: None,
            warm_start: false,
            cache: None,
            output: None,
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Self = text.parse()?;
        // relative paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.cache, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// The rule for each direction.
    pub fn rules_per_direction(&self) -> Result<Vec<PointRuleKind>> {
        let d = self.model.param_dim();
        match self.point_rules.len() {
            1 => Ok(vec![self.point_rules[0]; d]),
            n if n == d => Ok(self.point_rules.clone()),
            n => Err(Error::Config(format!("{n} point rules given for {d} directions"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_dimension == 0 {
            return Err(Error::Config("max_dimension must be at least 1".into()));
        }
        self.rules_per_direction()?;
        self.flow.validate()?;
        let pts = self.test_grid.points(self.model.param_dim())?;
        if pts.is_empty() {
            return Err(Error::Config("empty test grid".into()));
        }
        for (i, p) in pts.iter().enumerate() {
            if p.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(Error::Config(format!("test point {p:?} outside [-1, 1]^d")));
            }
            if pts[..i].contains(p) {
                return Err(Error::Config(format!("duplicate test point {p:?}")));
            }
        }
        if self.compare_rules.is_empty() {
            return Err(Error::Config("compare_rules is empty".into()));
        }
        Ok(())
    }
}

fn parse_list<T: FromStr<Err = Error>>(v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| s.trim().parse()).collect()
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value {v:?} for {key}")))
}

impl FromStr for StudyConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }

        let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let model_text = get("model").ok_or_else(|| Error::Config("missing key: model".into()))?;
        let model = if let Some(kind) = model_text.strip_prefix("analytic:") {
            let kind: AnalyticKind = kind.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let dim = get("dim").map(|v| parse_value("dim", v)).transpose()?.unwrap_or(1);
            let len = get("output_len").map(|v| parse_value("output_len", v)).transpose()?.unwrap_or(1);
            StudyModel::Analytic { kind, dim, len }
        } else {
            StudyModel::Fom(model_text.parse().map_err(|e: Error| Error::Config(e.to_string()))?)
        };

        let mut cfg = StudyConfig::new(model);
        for (k, v) in &pairs {
            let v = v.as_str();
            let cfg_err = |e: Error| Error::Config(format!("{k}: {e}"));
            match k.as_str() {
                "model" | "dim" | "output_len" => {}
                "point_rule" => cfg.point_rules = parse_list(v).map_err(cfg_err)?,
                "compare_rules" => cfg.compare_rules = parse_list(v).map_err(cfg_err)?,
                "max_dimension" => cfg.max_dimension = parse_value(k, v)?,
                "grid_resolution" => cfg.grid_resolution = parse_value(k, v)?,
                "test_grid" => cfg.test_grid = v.parse()?,
                "allow_node_overlap" => cfg.allow_node_overlap = parse_value(k, v)?,
                "nx" => cfg.nx = parse_value(k, v)?,
                "ny" => cfg.ny = parse_value(k, v)?,
                "nu_visc" => cfg.flow.nu_visc = parse_value(k, v)?,
                "oseen_tol" => cfg.flow.oseen_tol = parse_value(k, v)?,
                "oseen_max_iter" => cfg.flow.oseen_max_iter = parse_value(k, v)?,
                "relaxation" => cfg.flow.relaxation = parse_value(k, v)?,
                "bias" => cfg.bias = Some(parse_value(k, v)?),
                "warm_start" => cfg.warm_start = parse_value(k, v)?,
                "cache" => cfg.cache = Some(PathBuf::from(v)),
                "output" => cfg.output = Some(PathBuf::from(v)),
                other => return Err(Error::Config(format!("unknown key {other:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
