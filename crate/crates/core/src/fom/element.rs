//! Biquadratic / bilinear shape functions on the unit square and the
//! tensor Gauss rule used for all element integrals.
//!
//! Local node `(a, b)` with `a, b ∈ {0, 1, 2}` sits at `(a/2, b/2)` and has
//! local number `3b + a`. Pressure corners are numbered `(0,0), (1,0),
//! (0,1), (1,1)`.

use super::geometry::Point;

const G: f64 = 0.387_298_334_620_741_7; // sqrt(3/5)/2
const GAUSS_NODES: [f64; 3] = [0.5 - G, 0.5, 0.5 + G];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

pub const NQ: usize = 9;

/// 3×3 Gauss points `(s, t, w)` on `[0,1]²`.
pub fn quadrature() -> [(f64, f64, f64); NQ] {
    let mut q = [(0.0, 0.0, 0.0); NQ];
    for (b, (&t, &wt)) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS).enumerate() {
        for (a, (&s, &ws)) in GAUSS_NODES.iter().zip(&GAUSS_WEIGHTS).enumerate() {
            q[3 * b + a] = (s, t, ws * wt);
        }
    }
    q
}

fn lagrange2(s: f64) -> [f64; 3] {
    [
        (1.0 - s) * (1.0 - 2.0 * s),
        4.0 * s * (1.0 - s),
        s * (2.0 * s - 1.0),
    ]
}

fn lagrange2_deriv(s: f64) -> [f64; 3] {
    [4.0 * s - 3.0, 4.0 - 8.0 * s, 4.0 * s - 1.0]
}

/// Values and reference gradients of the nine biquadratic functions.
pub fn q2(s: f64, t: f64) -> ([f64; 9], [[f64; 2]; 9]) {
    let (ls, lt) = (lagrange2(s), lagrange2(t));
    let (ds, dt) = (lagrange2_deriv(s), lagrange2_deriv(t));
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    for b in 0..3 {
        for a in 0..3 {
            v[3 * b + a] = ls[a] * lt[b];
            g[3 * b + a] = [ds[a] * lt[b], ls[a] * dt[b]];
        }
    }
    (v, g)
}

/// Values of the four bilinear functions.
pub fn q1(s: f64, t: f64) -> [f64; 4] {
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), (1.0 - s) * t, s * t]
}

/// Geometric factors at one quadrature point of a mapped element.
#[derive(Clone, Copy, Debug)]
pub struct QuadPoint {
    /// `|det J| · w`
    pub jxw: f64,
    pub phi: [f64; 9],
    /// Physical gradients of the velocity shape functions.
    pub grad: [[f64; 2]; 9],
    pub psi: [f64; 4],
    pub det: f64,
}

/// Isoparametric factors for an element with node coordinates `x`.
pub fn element_factors(x: &[Point; 9]) -> [QuadPoint; NQ] {
    let mut out = [QuadPoint {
        jxw: 0.0,
        phi: [0.0; 9],
        grad: [[0.0; 2]; 9],
        psi: [0.0; 4],
        det: 0.0,
    }; NQ];
    for (k, (s, t, w)) in quadrature().into_iter().enumerate() {
        let (phi, dref) = q2(s, t);
        // J[r][c] = d x_r / d ξ_c
        let mut jac = [[0.0; 2]; 2];
        for (n, d) in dref.iter().enumerate() {
            for r in 0..2 {
                jac[r][0] += x[n][r] * d[0];
                jac[r][1] += x[n][r] * d[1];
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        let mut grad = [[0.0; 2]; 9];
        for (g, d) in grad.iter_mut().zip(&dref) {
            // ∇φ = J^{-T} ∇_ref φ
            g[0] = inv[0][0] * d[0] + inv[1][0] * d[1];
            g[1] = inv[0][1] * d[0] + inv[1][1] * d[1];
        }
        out[k] = QuadPoint {
            jxw: det.abs() * w,
            phi,
            grad,
            psi: q1(s, t),
            det,
        };
    }
    out
}
