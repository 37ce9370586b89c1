use std::io::Write;

use super::element::{element_factors, QuadPoint, NQ};
use super::geometry::{blocks, GeometrySpec, Point, ZoneSplit};
use crate::error::{Error, Result};

/// Boundary role of a velocity node, in increasing priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeTag {
    Interior,
    Outlet,
    Inlet,
    Wall,
}

/// Mapped structured biquadratic mesh of a channel.
///
/// Velocity nodes live on the half-step logical grid `(2nx+1) × (2ny+1)`;
/// pressure nodes are the cell corners. Only the node coordinates depend on
/// the geometry parameter.
#[derive(Clone, Debug)]
pub struct Mesh {
    spec: GeometrySpec,
    nx: usize,
    ny: usize,
    coords: Vec<Point>,
    tags: Vec<NodeTag>,
    cells: Vec<[usize; 9]>,
    pressure_cells: Vec<[usize; 4]>,
    /// Velocity node carrying each pressure node.
    pressure_at: Vec<usize>,
    factors: Vec<[QuadPoint; NQ]>,
}

/// Builds the mesh for `spec` on an `nx × ny` logical grid.
pub fn build_mesh(spec: &GeometrySpec, nx: usize, ny: usize) -> Result<Mesh> {
    spec.validate()?;
    let split = ZoneSplit::new(spec.model, nx, ny)?;
    let blocks = blocks(spec, &split);
    if let Some(obs) = spec.obstruction() {
        if !(obs.height > 0.0 && obs.height < 0.5 * spec.channel_height) {
            return Err(Error::Geometry(format!(
                "obstruction height {} leaves no gap",
                obs.height
            )));
        }
    }

    let active = |i: usize, j: usize| blocks.iter().any(|b| b.contains_cell(i, j));
    let (gx, gy) = (2 * nx + 1, 2 * ny + 1);
    let logical = |ii: usize, jj: usize| jj * gx + ii;

    let mut used = vec![false; gx * gy];
    for j in 0..ny {
        for i in 0..nx {
            if active(i, j) {
                for b in 0..3 {
                    for a in 0..3 {
                        used[logical(2 * i + a, 2 * j + b)] = true;
                    }
                }
            }
        }
    }
    let mut number = vec![usize::MAX; gx * gy];
    let mut count = 0;
    for (l, u) in used.iter().enumerate() {
        if *u {
            number[l] = count;
            count += 1;
        }
    }

    let mut coords = vec![[f64::NAN; 2]; count];
    let mut placed = vec![false; count];
    for block in &blocks {
        let (c0, c1) = block.cols;
        let (r0, r1) = block.rows;
        let (w, h) = (2 * (c1 - c0), 2 * (r1 - r0));
        for jj in 2 * r0..=2 * r1 {
            for ii in 2 * c0..=2 * c1 {
                let n = number[logical(ii, jj)];
                if n == usize::MAX || placed[n] {
                    continue;
                }
                let xi = (ii - 2 * c0) as f64 / w as f64;
                let eta = (jj - 2 * r0) as f64 / h as f64;
                coords[n] = block.map(xi, eta);
                placed[n] = true;
            }
        }
    }

    let mut tags = vec![NodeTag::Interior; count];
    let mut cells = Vec::new();
    let mut pressure_number = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut pressure_at = Vec::new();
    let mut pressure_cells = Vec::new();
    // pressure nodes numbered in the same row-major order as velocity nodes
    for j in 0..=ny {
        for i in 0..=nx {
            if used[logical(2 * i, 2 * j)] {
                pressure_number[j * (nx + 1) + i] = pressure_at.len();
                pressure_at.push(number[logical(2 * i, 2 * j)]);
            }
        }
    }
    for j in 0..ny {
        for i in 0..nx {
            if !active(i, j) {
                continue;
            }
            let mut cell = [0; 9];
            for b in 0..3 {
                for a in 0..3 {
                    cell[3 * b + a] = number[logical(2 * i + a, 2 * j + b)];
                }
            }
            let pc = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .map(|(a, b)| pressure_number[(j + b) * (nx + 1) + i + a]);
            let mut mark = |local: [usize; 3], tag: NodeTag| {
                for l in local {
                    let n = cell[l];
                    tags[n] = tags[n].max(tag);
                }
            };
            let left = [0, 3, 6];
            let right = [2, 5, 8];
            let bottom = [0, 1, 2];
            let top = [6, 7, 8];
            if i == 0 {
                mark(left, NodeTag::Inlet);
            } else if !active(i - 1, j) {
                mark(left, NodeTag::Wall);
            }
            if i + 1 == nx {
                mark(right, NodeTag::Outlet);
            } else if !active(i + 1, j) {
                mark(right, NodeTag::Wall);
            }
            if j == 0 || !active(i, j - 1) {
                mark(bottom, NodeTag::Wall);
            }
            if j + 1 == ny || !active(i, j + 1) {
                mark(top, NodeTag::Wall);
            }
            cells.push(cell);
            pressure_cells.push(pc);
        }
    }

    let mut factors = Vec::with_capacity(cells.len());
    for (k, cell) in cells.iter().enumerate() {
        let x = cell.map(|n| coords[n]);
        let f = element_factors(&x);
        if let Some(q) = f.iter().find(|q| !(q.det > 0.0)) {
            return Err(Error::Geometry(format!(
                "cell {k} has non-positive Jacobian {:e}",
                q.det
            )));
        }
        factors.push(f);
    }

    Ok(Mesh {
        spec: spec.clone(),
        nx,
        ny,
        coords,
        tags,
        cells,
        pressure_cells,
        pressure_at,
        factors,
    })
}

impl Mesh {
    pub fn spec(&self) -> &GeometrySpec {
        &self.spec
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    pub fn tags(&self) -> &[NodeTag] {
        &self.tags
    }

    pub fn cells(&self) -> &[[usize; 9]] {
        &self.cells
    }

    pub fn pressure_cells(&self) -> &[[usize; 4]] {
        &self.pressure_cells
    }

    pub(crate) fn factors(&self) -> &[[QuadPoint; NQ]] {
        &self.factors
    }

    pub fn num_velocity_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn num_pressure_nodes(&self) -> usize {
        self.pressure_at.len()
    }

    /// Length of the velocity DOF vector, `[u_x…, u_y…]`.
    pub fn velocity_dofs(&self) -> usize {
        2 * self.coords.len()
    }

    pub fn pressure_dofs(&self) -> usize {
        self.pressure_at.len()
    }

    /// Velocity node that coincides with pressure node `q`.
    pub fn pressure_node(&self, q: usize) -> usize {
        self.pressure_at[q]
    }

    pub fn has_outlet(&self) -> bool {
        self.tags.contains(&NodeTag::Outlet)
    }

    /// Row-sum lumped velocity mass per node, i.e. `∫ φ_n`.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.coords.len()];
        for (cell, f) in self.cells.iter().zip(&self.factors) {
            for q in f {
                for (a, &n) in cell.iter().enumerate() {
                    m[n] += q.jxw * q.phi[a];
                }
            }
        }
        m
    }

    /// Lumped weights expanded to the velocity DOF layout.
    pub fn velocity_weights(&self) -> Vec<f64> {
        let m = self.lumped_mass();
        m.iter().chain(m.iter()).copied().collect()
    }

    pub fn area(&self) -> f64 {
        self.factors.iter().flatten().map(|q| q.jxw).sum()
    }

    /// `node,x,y,tag` table.
    pub fn write_nodes_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "node,x,y,tag")?;
        for (n, (p, t)) in self.coords.iter().zip(&self.tags).enumerate() {
            writeln!(out, "{n},{:e},{:e},{t:?}", p[0], p[1])?;
        }
        Ok(())
    }

    /// `cell,n0,…,n8` table (local order `3b + a`).
    pub fn write_cells_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "cell,n0,n1,n2,n3,n4,n5,n6,n7,n8")?;
        for (k, c) in self.cells.iter().enumerate() {
            let ids: Vec<String> = c.iter().map(|n| n.to_string()).collect();
            writeln!(out, "{k},{}", ids.join(","))?;
        }
        Ok(())
    }
}
