//! Full-order model: parametrized channel geometries, a Taylor-Hood
//! discretization on a mapped structured grid, and the Oseen fixed-point
//! solver for the steady incompressible Navier-Stokes equations.
//!
//! All meshes of one model and resolution share the same topology and DOF
//! numbering, so snapshots at different parameters are compared entrywise.

pub mod element;
pub mod geometry;
pub mod mesh;
pub mod oseen;

use std::io::Write;

pub use geometry::{GeometryModel, GeometrySpec};
pub use mesh::{build_mesh, Mesh, NodeTag};
pub use oseen::{divergence_residual, oseen_solve, oseen_step, OseenSolution, OseenSystem};

use crate::error::{Error, Result};

/// Velocity prescribed on the inlet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Inflow {
    /// `u = (y(H − y), 0)`, peak 2.25 for `H = 3`.
    Parabolic,
    Homogeneous,
}

/// Condition on the right end of the channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outlet {
    /// Natural do-nothing condition.
    StressFree,
    /// Closed end (no-slip); the pressure is then pinned at one DOF.
    NoSlip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub nu_visc: f64,
    pub body_force: [f64; 2],
    pub inflow: Inflow,
    pub outlet: Outlet,
    pub characteristic_velocity: f64,
    pub characteristic_length: f64,
    pub oseen_tol: f64,
    pub oseen_max_iter: usize,
    pub relaxation: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            nu_visc: 1.0,
            body_force: [0.0, 0.0],
            inflow: Inflow::Parabolic,
            outlet: Outlet::StressFree,
            characteristic_velocity: 2.25,
            characteristic_length: 3.0,
            oseen_tol: 1e-10,
            oseen_max_iter: 200,
            relaxation: 1.0,
        }
    }
}

impl FlowConfig {
    pub fn with_viscosity(nu_visc: f64) -> Self {
        Self {
            nu_visc,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu_visc > 0.0 && self.nu_visc.is_finite()) {
            return Err(Error::Config(format!("viscosity must be positive, got {}", self.nu_visc)));
        }
        if !(self.oseen_tol > 0.0) {
            return Err(Error::Config(format!("oseen_tol must be positive, got {}", self.oseen_tol)));
        }
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::Config(format!("relaxation must lie in (0, 1], got {}", self.relaxation)));
        }
        if self.oseen_max_iter == 0 {
            return Err(Error::Config("oseen_max_iter must be at least 1".into()));
        }
        if !self.body_force.iter().all(|f| f.is_finite()) {
            return Err(Error::Config("body force must be finite".into()));
        }
        Ok(())
    }

    /// Reynolds number from the characteristic scales.
    pub fn reynolds(&self) -> Result<f64> {
        reynolds(self.characteristic_velocity, self.characteristic_length, self.nu_visc)
    }
}

/// `Re = U L / ν`.
pub fn reynolds(u: f64, l: f64, nu: f64) -> Result<f64> {
    if !(u > 0.0 && l > 0.0 && nu > 0.0) {
        return Err(Error::Domain(format!(
            "Reynolds number needs positive inputs, got U={u}, L={l}, nu={nu}"
        )));
    }
    Ok(u * l / nu)
}

/// Discrete velocity/pressure pair. Velocity is laid out as all x
/// components followed by all y components.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl Field {
    pub fn zero(mesh: &Mesh) -> Self {
        Self {
            velocity: vec![0.0; mesh.velocity_dofs()],
            pressure: vec![0.0; mesh.pressure_dofs()],
        }
    }

    /// Nodal interpolation of `u(x, y)`; zero pressure.
    pub fn from_velocity_fn(mesh: &Mesh, u: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let nv = mesh.num_velocity_nodes();
        let mut velocity = vec![0.0; 2 * nv];
        for (i, p) in mesh.coords().iter().enumerate() {
            let [ux, uy] = u(p[0], p[1]);
            velocity[i] = ux;
            velocity[nv + i] = uy;
        }
        Self {
            velocity,
            pressure: vec![0.0; mesh.pressure_dofs()],
        }
    }

    /// Pressure interpolated to every velocity node.
    pub fn nodal_pressure(&self, mesh: &Mesh) -> Vec<f64> {
        let mut p = vec![0.0; mesh.num_velocity_nodes()];
        for (cell, pcell) in mesh.cells().iter().zip(mesh.pressure_cells()) {
            let c = pcell.map(|q| self.pressure[q]);
            for b in 0..3 {
                for a in 0..3 {
                    let psi = element::q1(a as f64 / 2.0, b as f64 / 2.0);
                    p[cell[3 * b + a]] = psi.iter().zip(&c).map(|(w, v)| w * v).sum();
                }
            }
        }
        p
    }
}

/// Plain pullback: the velocity DOF vector in the shared numbering.
pub fn pullback(field: &Field, mesh: &Mesh) -> Result<Vec<f64>> {
    if field.velocity.len() != mesh.velocity_dofs() {
        return Err(Error::DimensionMismatch {
            expected: mesh.velocity_dofs(),
            found: field.velocity.len(),
        });
    }
    Ok(field.velocity.clone())
}

/// `x,y,u_x,u_y,p` at every velocity node.
pub fn write_field_csv(mesh: &Mesh, field: &Field, mut out: impl Write) -> Result<()> {
    let nv = mesh.num_velocity_nodes();
    let p = field.nodal_pressure(mesh);
    writeln!(out, "x,y,u_x,u_y,p")?;
    for (i, c) in mesh.coords().iter().enumerate() {
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e}",
            c[0], c[1], field.velocity[i], field.velocity[nv + i], p[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
