use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::AffineParameterMap;
use crate::error::{Error, Result};
use crate::fom::geometry::NARROWING_MU_RANGE;
use crate::fom::oseen::iterate;
use crate::fom::{build_mesh, pullback, Field, FlowConfig, GeometryModel, GeometrySpec, Mesh, OseenSolution, OseenSystem};
use crate::interp::SnapshotMap;

/// Downward body force applied while selecting the bottom-jet branch of the
/// curved-wall model.
pub const BIAS_FORCE: f64 = 1e-2;

/// Stopping tolerance of the biased phase.
const BIAS_TOL: f64 = 1e-4;

/// Viscosity range of the curved-wall model.
pub const CURVED_VISCOSITY_RANGE: (f64, f64) = (0.15, 0.2);

/// A parametrized channel problem: parameters in `[-1, 1]^d` are mapped
/// affinely to physical values, then meshed and solved.
///
/// * narrowing width: `y₁ ↦ μ ∈ [0.1, 2.9]`, viscosity from `flow`.
/// * curved walls: `y₁ ↦ ν ∈ [0.15, 0.2]`, `y₂ ↦ curvature ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub struct FomProblem {
    pub model: GeometryModel,
    pub nx: usize,
    pub ny: usize,
    pub flow: FlowConfig,
    pub params: AffineParameterMap,
    /// Solve with a small downward force first, then without it.
    pub bias: bool,
}

impl FomProblem {
    pub fn new(model: GeometryModel, nx: usize, ny: usize) -> Result<Self> {
        let (intervals, bias) = match model {
            GeometryModel::NarrowingWidth => (vec![NARROWING_MU_RANGE], false),
            GeometryModel::CurvedWalls => (vec![CURVED_VISCOSITY_RANGE, (0.0, 1.0)], true),
            GeometryModel::Straight => {
                return Err(Error::Config("the straight channel has no geometry parameter".into()))
            }
        };
        Ok(Self {
            model,
            nx,
            ny,
            flow: FlowConfig::default(),
            params: AffineParameterMap::new(intervals)?,
            bias,
        })
    }

    pub fn param_dim(&self) -> usize {
        self.params.dim()
    }

    /// Geometry and flow settings at `y ∈ [-1, 1]^d`.
    pub fn physical(&self, y: &[f64]) -> Result<(GeometrySpec, FlowConfig)> {
        let x = self.params.to_physical(y)?;
        Ok(self.physical_from(&x))
    }

    /// Geometry and flow settings at physical parameter values.
    pub fn physical_from(&self, x: &[f64]) -> (GeometrySpec, FlowConfig) {
        let mut flow = self.flow.clone();
        let spec = match self.model {
            GeometryModel::CurvedWalls => {
                flow.nu_visc = x[0];
                GeometrySpec::curved_walls(x[1])
            }
            _ => GeometrySpec::narrowing_width(x[0]),
        };
        (spec, flow)
    }

    pub fn mesh_at(&self, y: &[f64]) -> Result<Mesh> {
        let (spec, _) = self.physical(y)?;
        build_mesh(&spec, self.nx, self.ny)
    }

    /// Mesh at the reference geometry; supplies the error weights.
    pub fn reference_mesh(&self) -> Result<Mesh> {
        build_mesh(&GeometrySpec::reference(self.model), self.nx, self.ny)
    }

    /// Length of the pulled-back velocity vector.
    pub fn output_len(&self) -> Result<usize> {
        Ok(self.reference_mesh()?.velocity_dofs())
    }

    /// Solves at physical parameters `x`, optionally starting from a velocity
    /// vector in the shared numbering.
    pub fn solve_physical(&self, x: &[f64], init: Option<&[f64]>) -> Result<(Mesh, OseenSolution)> {
        let (spec, flow) = self.physical_from(x);
        let run = || -> Result<(Mesh, OseenSolution)> {
            let mesh = build_mesh(&spec, self.nx, self.ny)?;
            let mut start = Field::zero(&mesh);
            if let Some(v) = init {
                if v.len() != start.velocity.len() {
                    return Err(Error::DimensionMismatch {
                        expected: start.velocity.len(),
                        found: v.len(),
                    });
                }
                start.velocity.copy_from_slice(v);
            }
            let mut system = OseenSystem::new(&mesh, &flow)?;
            let mut trace = Vec::new();
            if self.bias {
                let biased = FlowConfig {
                    oseen_tol: BIAS_TOL.max(flow.oseen_tol),
                    ..flow.clone()
                };
                system.set_body_force([flow.body_force[0], flow.body_force[1] - BIAS_FORCE]);
                let pre = iterate(&system, &mesh, &biased, start)?;
                trace.extend(pre.trace);
                start = pre.field;
                system.set_body_force(flow.body_force);
            }
            let sol = iterate(&system, &mesh, &flow, start)?;
            trace.extend(sol.trace);
            Ok((mesh, OseenSolution { field: sol.field, trace }))
        };
        run().map_err(|e| e.at(x))
    }

    pub fn solve(&self, y: &[f64], init: Option<&[f64]>) -> Result<(Mesh, OseenSolution)> {
        let x = self.params.to_physical(y)?;
        self.solve_physical(&x, init)
    }

    /// Everything that determines a snapshot, for cache fingerprints.
    pub fn descriptor(&self) -> String {
        let f = &self.flow;
        let intervals: Vec<String> = self
            .params
            .intervals()
            .iter()
            .map(|(a, b)| format!("{a:e}:{b:e}"))
            .collect();
        format!(
            "fom model={} nx={} ny={} nu={:e} force={:e},{:e} inflow={:?} outlet={:?} tol={:e} max_iter={} relax={:e} bias={} params={}",
            self.model.name(),
            self.nx,
            self.ny,
            f.nu_visc,
            f.body_force[0],
            f.body_force[1],
            f.inflow,
            f.outlet,
            f.oseen_tol,
            f.oseen_max_iter,
            f.relaxation,
            self.bias,
            intervals.join(";"),
        )
    }
}

/// FOM-backed snapshot map with solve counters.
pub struct FomMap {
    problem: FomProblem,
    len: usize,
    solves: AtomicUsize,
    iterations: AtomicUsize,
    /// Previously computed `(y, velocity)` pairs used as initial guesses.
    warm: Option<Mutex<Vec<(Vec<f64>, Vec<f64>)>>>,
}

impl FomMap {
    pub fn new(problem: FomProblem) -> Result<Self> {
        let len = problem.output_len()?;
        Ok(Self {
            problem,
            len,
            solves: AtomicUsize::new(0),
            iterations: AtomicUsize::new(0),
            warm: None,
        })
    }

    /// Starts each solve from the nearest previously computed snapshot.
    /// Converged results agree with cold starts to within the Oseen
    /// tolerance, but are no longer bitwise reproducible.
    pub fn with_warm_start(mut self) -> Self {
        self.warm = Some(Mutex::new(Vec::new()));
        self
    }

    pub fn problem(&self) -> &FomProblem {
        &self.problem
    }

    /// Number of completed FOM solves.
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Total Oseen iterations over all solves.
    pub fn iterations(&self) -> usize {
        self.iterations.load(Ordering::Relaxed)
    }

    fn nearest(&self, y: &[f64]) -> Option<Vec<f64>> {
        let warm = self.warm.as_ref()?.lock().unwrap_or_else(|e| e.into_inner());
        warm.iter()
            .map(|(z, v)| {
                let d: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v.clone())
    }
}

impl SnapshotMap for FomMap {
    fn param_dim(&self) -> usize {
        self.problem.param_dim()
    }

    fn output_len(&self) -> usize {
        self.len
    }

    fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        let init = self.nearest(y);
        let (mesh, sol) = self.problem.solve(y, init.as_deref())?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        self.iterations.fetch_add(sol.iterations(), Ordering::Relaxed);
        let v = pullback(&sol.field, &mesh)?;
        if let Some(warm) = &self.warm {
            warm.lock()
                .unwrap_or_else(|e| e.into_inner())
                .push((y.to_vec(), v.clone()));
        }
        Ok(v)
    }
}
