//! Taylor-Hood (biquadratic velocity, bilinear pressure) discretization of
//! the linearized steady problem
//!
//! ```text
//!   −ν Δu + (w·∇)u + ∇p = f,   ∇·u = 0,
//! ```
//!
//! with the advecting field `w` frozen at the previous iterate, and the
//! fixed-point (Oseen) iteration built on top of it. The outlet carries the
//! natural condition `ν ∂u/∂n − p n = 0` of the Laplacian form.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};

use super::mesh::{Mesh, NodeTag};
use super::{Field, FlowConfig, Inflow, Outlet};
use crate::error::{Error, Result};

/// Backward error above which a direct solve is reported as failed.
const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// The relaxation used after the first non-decreasing difference.
const FALLBACK_RELAXATION: f64 = 0.5;

/// Element loop for one mesh, viscosity, forcing and set of constraints.
struct Assembler<'m> {
    mesh: &'m Mesh,
    nu: f64,
    force: [f64; 2],
    /// Prescribed value per constrained unknown.
    constraints: Vec<Option<f64>>,
}

/// Reusable assembly and factorization state for one mesh and configuration.
pub struct OseenSystem<'m> {
    assembler: Assembler<'m>,
    n: usize,
    pattern: Vec<(usize, usize)>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    symbolic_lu: SymbolicLu<usize>,
}

impl<'m> OseenSystem<'m> {
    pub fn new(mesh: &'m Mesh, cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let nv = mesh.num_velocity_nodes();
        let n = mesh.velocity_dofs() + mesh.pressure_dofs();
        let height = mesh.spec().channel_height;
        let mut constraints = vec![None; n];
        let mut free_outlet = false;
        for (node, (tag, p)) in mesh.tags().iter().zip(mesh.coords()).enumerate() {
            let value = match (tag, cfg.outlet) {
                (NodeTag::Interior, _) => None,
                (NodeTag::Wall, _) => Some([0.0, 0.0]),
                (NodeTag::Inlet, _) => match cfg.inflow {
                    Inflow::Parabolic => Some([p[1] * (height - p[1]), 0.0]),
                    Inflow::Homogeneous => Some([0.0, 0.0]),
                },
                (NodeTag::Outlet, Outlet::NoSlip) => Some([0.0, 0.0]),
                (NodeTag::Outlet, Outlet::StressFree) => {
                    free_outlet = true;
                    None
                }
            };
            if let Some([vx, vy]) = value {
                constraints[node] = Some(vx);
                constraints[nv + node] = Some(vy);
            }
        }
        if !free_outlet {
            // pressure is determined up to a constant
            constraints[mesh.velocity_dofs()] = Some(0.0);
        }
        let assembler = Assembler {
            mesh,
            nu: cfg.nu_visc,
            force: cfg.body_force,
            constraints,
        };

        let mut pattern = Vec::new();
        let mut scratch = vec![0.0; n];
        assembler.scatter(&vec![0.0; mesh.velocity_dofs()], |r, c, _| pattern.push((r, c)), &mut scratch);
        let pairs: Vec<Pair<usize, usize>> = pattern.iter().map(|&(r, c)| Pair::new(r, c)).collect();
        let (symbolic, argsort) = SymbolicSparseColMat::try_new_from_indices(n, n, &pairs)
            .map_err(|e| solver_error(format!("sparsity pattern: {e:?}")))?;
        let symbolic_lu = SymbolicLu::try_new(symbolic.as_ref())
            .map_err(|e| solver_error(format!("symbolic factorization: {e:?}")))?;
        Ok(Self {
            assembler,
            n,
            pattern,
            symbolic,
            argsort,
            symbolic_lu,
        })
    }

    pub fn num_unknowns(&self) -> usize {
        self.n
    }

    pub fn set_body_force(&mut self, force: [f64; 2]) {
        self.assembler.force = force;
    }

    /// One linear solve with advection frozen at `advect` (velocity DOFs).
    pub fn step(&self, advect: &[f64]) -> Result<Field> {
        let mesh = self.assembler.mesh;
        if advect.len() != mesh.velocity_dofs() {
            return Err(Error::DimensionMismatch {
                expected: mesh.velocity_dofs(),
                found: advect.len(),
            });
        }
        let mut values = Vec::with_capacity(self.pattern.len());
        let mut rhs = vec![0.0; self.n];
        self.assembler.scatter(advect, |_, _, v| values.push(v), &mut rhs);

        let mat = SparseColMat::new_from_argsort(self.symbolic.clone(), &self.argsort, &values)
            .map_err(|e| solver_error(format!("matrix assembly: {e:?}")))?;
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat.as_ref())
            .map_err(|e| solver_error(format!("factorization: {e:?}")))?;
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| rhs[i]);
        lu.solve_in_place(x.as_mut());
        let sol: Vec<f64> = (0..self.n).map(|i| x[(i, 0)]).collect();

        // normwise backward error ‖b − Ax‖∞ / (‖A‖∞ ‖x‖∞ + ‖b‖∞)
        let mut r = rhs.clone();
        let mut row_sums = vec![0.0; self.n];
        for (&(row, col), v) in self.pattern.iter().zip(&values) {
            r[row] -= v * sol[col];
            row_sums[row] += v.abs();
        }
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = inf(&row_sums) * inf(&sol) + inf(&rhs);
        let rel = if scale > 0.0 { inf(&r) / scale } else { inf(&r) };
        if !rel.is_finite() || rel > SOLVE_RESIDUAL_TOL {
            return Err(Error::Solver {
                message: "direct solve of the Oseen system is inaccurate".into(),
                residual: rel,
            });
        }
        let (velocity, pressure) = sol.split_at(mesh.velocity_dofs());
        Ok(Field {
            velocity: velocity.to_vec(),
            pressure: pressure.to_vec(),
        })
    }
}

impl Assembler<'_> {
    /// Emits every matrix entry `(row, col, value)` in a fixed order and
    /// accumulates the right-hand side. Constrained rows become identity rows.
    fn scatter(&self, advect: &[f64], mut emit: impl FnMut(usize, usize, f64), rhs: &mut [f64]) {
        let mesh = self.mesh;
        let nv = mesh.num_velocity_nodes();
        let p0 = mesh.velocity_dofs();
        rhs.iter_mut().for_each(|r| *r = 0.0);
        let (ax, ay) = advect.split_at(nv);

        for ((cell, pcell), factors) in mesh
            .cells()
            .iter()
            .zip(mesh.pressure_cells())
            .zip(mesh.factors())
        {
            let mut k = [[0.0; 9]; 9];
            let mut bx = [[0.0; 4]; 9];
            let mut by = [[0.0; 4]; 9];
            let mut f = [[0.0; 2]; 9];
            for q in factors {
                let mut w = [0.0; 2];
                for (a, &node) in cell.iter().enumerate() {
                    w[0] += ax[node] * q.phi[a];
                    w[1] += ay[node] * q.phi[a];
                }
                for a in 0..9 {
                    let ga = q.grad[a];
                    let pa = q.phi[a] * q.jxw;
                    for b in 0..9 {
                        let gb = q.grad[b];
                        k[a][b] += self.nu * q.jxw * (ga[0] * gb[0] + ga[1] * gb[1])
                            + pa * (w[0] * gb[0] + w[1] * gb[1]);
                    }
                    for (qq, &psi) in q.psi.iter().enumerate() {
                        bx[a][qq] -= q.jxw * psi * ga[0];
                        by[a][qq] -= q.jxw * psi * ga[1];
                    }
                    f[a][0] += pa * self.force[0];
                    f[a][1] += pa * self.force[1];
                }
            }

            for (comp, b_comp) in [(0usize, &bx), (1usize, &by)] {
                for a in 0..9 {
                    let row = comp * nv + cell[a];
                    if self.constraints[row].is_some() {
                        continue;
                    }
                    for b in 0..9 {
                        emit(row, comp * nv + cell[b], k[a][b]);
                    }
                    for qq in 0..4 {
                        emit(row, p0 + pcell[qq], b_comp[a][qq]);
                    }
                    rhs[row] += f[a][comp];
                }
            }
            for qq in 0..4 {
                let row = p0 + pcell[qq];
                if self.constraints[row].is_some() {
                    continue;
                }
                for b in 0..9 {
                    emit(row, cell[b], bx[b][qq]);
                    emit(row, nv + cell[b], by[b][qq]);
                }
            }
        }
        for (row, c) in self.constraints.iter().enumerate() {
            if let Some(v) = c {
                emit(row, row, 1.0);
                rhs[row] = *v;
            }
        }
    }

}

fn solver_error(message: String) -> Error {
    Error::Solver {
        message,
        residual: f64::NAN,
    }
}

/// Solves one Oseen linearization around `u_k`.
pub fn oseen_step(mesh: &Mesh, cfg: &FlowConfig, u_k: &Field) -> Result<Field> {
    check_field(mesh, u_k)?;
    OseenSystem::new(mesh, cfg)?.step(&u_k.velocity)
}

/// Result of a converged fixed-point iteration.
#[derive(Clone, Debug)]
pub struct OseenSolution {
    pub field: Field,
    /// Relative L² difference between consecutive iterates.
    pub trace: Vec<f64>,
}

impl OseenSolution {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Oseen fixed-point iteration with under-relaxation
/// `u ← (1−ω) u_k + ω u^{k+1}` until the relative L² difference drops
/// below `cfg.oseen_tol`. The relaxation drops to 0.5 the first time the
/// difference fails to decrease.
pub fn oseen_solve(mesh: &Mesh, cfg: &FlowConfig, init: &Field) -> Result<OseenSolution> {
    check_field(mesh, init)?;
    let system = OseenSystem::new(mesh, cfg)?;
    iterate(&system, mesh, cfg, init.clone())
}

pub(crate) fn iterate(system: &OseenSystem<'_>, mesh: &Mesh, cfg: &FlowConfig, init: Field) -> Result<OseenSolution> {
    let weights = mesh.velocity_weights();
    let mut omega = cfg.relaxation;
    let mut u = init;
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..cfg.oseen_max_iter {
        let next = system.step(&u.velocity)?;
        let relaxed = if omega == 1.0 {
            next
        } else {
            Field {
                velocity: blend(&u.velocity, &next.velocity, omega),
                pressure: blend(&u.pressure, &next.pressure, omega),
            }
        };
        let diff = relative_difference(&relaxed.velocity, &u.velocity, &weights);
        if !diff.is_finite() {
            trace.push(diff);
            return Err(Error::Divergence { trace });
        }
        if let Some(&prev) = trace.last() {
            if diff >= prev && omega > FALLBACK_RELAXATION {
                omega = FALLBACK_RELAXATION;
            }
        }
        trace.push(diff);
        u = relaxed;
        if diff < cfg.oseen_tol {
            return Ok(OseenSolution { field: u, trace });
        }
    }
    Err(Error::Divergence { trace })
}

fn blend(old: &[f64], new: &[f64], omega: f64) -> Vec<f64> {
    old.iter()
        .zip(new)
        .map(|(o, n)| (1.0 - omega) * o + omega * n)
        .collect()
}

pub(crate) fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

/// `‖new − old‖ / ‖new‖` in the lumped-mass norm; absolute when `new = 0`.
fn relative_difference(new: &[f64], old: &[f64], w: &[f64]) -> f64 {
    let d: f64 = new
        .iter()
        .zip(old)
        .zip(w)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let n = weighted_norm(new, w);
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

fn check_field(mesh: &Mesh, field: &Field) -> Result<()> {
    if field.velocity.len() != mesh.velocity_dofs() {
        return Err(Error::DimensionMismatch {
            expected: mesh.velocity_dofs(),
            found: field.velocity.len(),
        });
    }
    if field.pressure.len() != mesh.pressure_dofs() {
        return Err(Error::DimensionMismatch {
            expected: mesh.pressure_dofs(),
            found: field.pressure.len(),
        });
    }
    Ok(())
}

/// Euclidean norm of the weak divergence `(q_k, ∇·u)` over all pressure
/// test functions.
pub fn divergence_residual(mesh: &Mesh, field: &Field) -> f64 {
    let nv = mesh.num_velocity_nodes();
    let mut r = vec![0.0; mesh.pressure_dofs()];
    for ((cell, pcell), factors) in mesh
        .cells()
        .iter()
        .zip(mesh.pressure_cells())
        .zip(mesh.factors())
    {
        for q in factors {
            let mut div = 0.0;
            for (a, &node) in cell.iter().enumerate() {
                div += field.velocity[node] * q.grad[a][0] + field.velocity[nv + node] * q.grad[a][1];
            }
            for (qq, &p) in pcell.iter().enumerate() {
                r[p] += q.jxw * q.psi[qq] * div;
            }
        }
    }
    r.iter().map(|v| v * v).sum::<f64>().sqrt()
}
