//! Parametrized channel geometries and their block decomposition.
//!
//! Every channel is `[0, L] × [0, H]` with `H = 3`. The narrowing models
//! place two obstructions mirrored about `y = H/2`, one on each wall. An
//! obstruction is a quadrilateral: a base on the wall, a short flat tip at
//! height `h`, a front face towards the inlet and a back face towards the
//! outlet. The fluid region is split into seven structured blocks around the
//! two obstructions:
//!
//! ```text
//!   +---------+---+-----------+
//!   |  U,T    |///|   D,T     |
//!   +---------+---+-----------+  y = H - h
//!   |  U,G    |M,G|   D,G     |
//!   +---------+---+-----------+  y = h
//!   |  U,B    |///|   D,B     |
//!   +---------+---+-----------+
//! ```
//!
//! Each block is meshed by transfinite interpolation of its four sides, so
//! the logical cell layout (and with it every degree-of-freedom number) is
//! the same for every parameter value.

use crate::error::{Error, Result};

pub const CHANNEL_HEIGHT: f64 = 3.0;

/// Narrowing-width channel length.
pub const NARROWING_LENGTH: f64 = 9.0;
pub const NARROWING_CENTER: f64 = 4.5;
pub const NARROWING_BASE_HALF_WIDTH: f64 = 0.75;
pub const NARROWING_TIP_HALF_WIDTH: f64 = 0.125;
pub const NARROWING_MU_RANGE: (f64, f64) = (0.1, 2.9);

/// Curved-wall channel length (outlet at x = 18).
pub const CURVED_LENGTH: f64 = 18.0;
pub const CURVED_JUNCTION_X: f64 = 3.0;
pub const CURVED_TIP_LEFT_X: f64 = 4.25;
pub const CURVED_TIP_RIGHT_X: f64 = 4.5;
pub const CURVED_TIP_GAP: f64 = 1.0;
/// Upstream displacement of the intermediate control point at curvature 1.
pub const CURVED_DISPLACEMENT: f64 = 0.6;

pub type Point = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryModel {
    /// Plain rectangular channel, used for verification.
    Straight,
    /// Symmetric straight-edged narrowing whose open gap has width `mu`.
    NarrowingWidth,
    /// Narrowing with quadratic front faces of varying curvature.
    CurvedWalls,
}

impl GeometryModel {
    pub fn name(self) -> &'static str {
        match self {
            GeometryModel::Straight => "straight",
            GeometryModel::NarrowingWidth => "narrowing-width",
            GeometryModel::CurvedWalls => "curved-walls",
        }
    }
}

impl std::str::FromStr for GeometryModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "straight" => Ok(GeometryModel::Straight),
            "narrowing-width" | "model1" => Ok(GeometryModel::NarrowingWidth),
            "curved-walls" | "model2" => Ok(GeometryModel::CurvedWalls),
            other => Err(Error::InvalidInput(format!("unknown geometry model {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub model: GeometryModel,
    /// Gap width of the narrowing-width model.
    pub mu: f64,
    /// Normalized curvature in `[0, 1]`, 0 = straight faces.
    pub curvature: f64,
    pub channel_height: f64,
    pub channel_length: f64,
}

impl GeometrySpec {
    pub fn straight(length: f64) -> Self {
        Self {
            model: GeometryModel::Straight,
            mu: 0.0,
            curvature: 0.0,
            channel_height: CHANNEL_HEIGHT,
            channel_length: length,
        }
    }

    pub fn narrowing_width(mu: f64) -> Self {
        Self {
            model: GeometryModel::NarrowingWidth,
            mu,
            curvature: 0.0,
            channel_height: CHANNEL_HEIGHT,
            channel_length: NARROWING_LENGTH,
        }
    }

    pub fn curved_walls(curvature: f64) -> Self {
        Self {
            model: GeometryModel::CurvedWalls,
            mu: CURVED_TIP_GAP,
            curvature,
            channel_height: CHANNEL_HEIGHT,
            channel_length: CURVED_LENGTH,
        }
    }

    /// The parameter value at which the reference mesh is built.
    pub fn reference(model: GeometryModel) -> Self {
        match model {
            GeometryModel::Straight => Self::straight(NARROWING_LENGTH),
            GeometryModel::NarrowingWidth => Self::narrowing_width(1.0),
            GeometryModel::CurvedWalls => Self::curved_walls(0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.channel_length > 0.0 && self.channel_height > 0.0) {
            return Err(Error::Geometry("channel extents must be positive".into()));
        }
        match self.model {
            GeometryModel::Straight => Ok(()),
            GeometryModel::NarrowingWidth => {
                let (lo, hi) = NARROWING_MU_RANGE;
                if !(lo..=hi).contains(&self.mu) {
                    return Err(Error::Geometry(format!(
                        "gap width {} outside [{lo}, {hi}]",
                        self.mu
                    )));
                }
                Ok(())
            }
            GeometryModel::CurvedWalls => {
                if !(0.0..=1.0).contains(&self.curvature) {
                    return Err(Error::Geometry(format!(
                        "curvature {} outside [0, 1]",
                        self.curvature
                    )));
                }
                Ok(())
            }
        }
    }

    /// The bottom obstruction (the top one is its mirror image).
    pub fn obstruction(&self) -> Option<Obstruction> {
        let h_total = self.channel_height;
        match self.model {
            GeometryModel::Straight => None,
            GeometryModel::NarrowingWidth => {
                let h = 0.5 * (h_total - self.mu);
                let base_left = NARROWING_CENTER - NARROWING_BASE_HALF_WIDTH;
                let base_right = NARROWING_CENTER + NARROWING_BASE_HALF_WIDTH;
                let tip_left = NARROWING_CENTER - NARROWING_TIP_HALF_WIDTH;
                let tip_right = NARROWING_CENTER + NARROWING_TIP_HALF_WIDTH;
                Some(Obstruction {
                    height: h,
                    tip_left,
                    tip_right,
                    front: Curve::line([base_left, 0.0], [tip_left, h]),
                    back: Curve::line([base_right, 0.0], [tip_right, h]),
                })
            }
            GeometryModel::CurvedWalls => {
                let h = 0.5 * (h_total - CURVED_TIP_GAP);
                let junction = [CURVED_JUNCTION_X, 0.0];
                let tip = [CURVED_TIP_LEFT_X, h];
                let mid = [
                    0.5 * (junction[0] + tip[0]) - CURVED_DISPLACEMENT * self.curvature,
                    0.5 * h,
                ];
                Some(Obstruction {
                    height: h,
                    tip_left: CURVED_TIP_LEFT_X,
                    tip_right: CURVED_TIP_RIGHT_X,
                    front: Curve::quadratic(junction, mid, tip),
                    back: Curve::line([CURVED_TIP_RIGHT_X, 0.0], [CURVED_TIP_RIGHT_X, h]),
                })
            }
        }
    }
}

/// A parametric boundary curve on `s ∈ [0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curve {
    Line(Point, Point),
    /// Quadratic through `p0` (s=0), `pm` (s=1/2) and `p1` (s=1).
    Quadratic(Point, Point, Point),
}

impl Curve {
    pub fn line(p0: Point, p1: Point) -> Self {
        Curve::Line(p0, p1)
    }

    pub fn quadratic(p0: Point, pm: Point, p1: Point) -> Self {
        Curve::Quadratic(p0, pm, p1)
    }

    pub fn start(&self) -> Point {
        match *self {
            Curve::Line(p0, _) | Curve::Quadratic(p0, _, _) => p0,
        }
    }

    pub fn end(&self) -> Point {
        match *self {
            Curve::Line(_, p1) | Curve::Quadratic(_, _, p1) => p1,
        }
    }

    pub fn eval(&self, s: f64) -> Point {
        if s == 0.0 {
            return self.start();
        }
        if s == 1.0 {
            return self.end();
        }
        match *self {
            Curve::Line(p0, p1) => [p0[0] + s * (p1[0] - p0[0]), p0[1] + s * (p1[1] - p0[1])],
            Curve::Quadratic(p0, pm, p1) => {
                let l0 = (1.0 - s) * (1.0 - 2.0 * s);
                let lm = 4.0 * s * (1.0 - s);
                let l1 = s * (2.0 * s - 1.0);
                [
                    l0 * p0[0] + lm * pm[0] + l1 * p1[0],
                    l0 * p0[1] + lm * pm[1] + l1 * p1[1],
                ]
            }
        }
    }

    /// Reflection about the horizontal line `y = axis`.
    pub fn mirrored(&self, axis: f64) -> Self {
        let m = |p: Point| [p[0], 2.0 * axis - p[1]];
        match *self {
            Curve::Line(p0, p1) => Curve::Line(m(p0), m(p1)),
            Curve::Quadratic(p0, pm, p1) => Curve::Quadratic(m(p0), m(pm), m(p1)),
        }
    }

    pub fn reversed(&self) -> Self {
        match *self {
            Curve::Line(p0, p1) => Curve::Line(p1, p0),
            Curve::Quadratic(p0, pm, p1) => Curve::Quadratic(p1, pm, p0),
        }
    }
}

/// Bottom-wall obstruction of a narrowing model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obstruction {
    /// Tip height above the wall.
    pub height: f64,
    pub tip_left: f64,
    pub tip_right: f64,
    /// From the upstream wall junction to the left tip corner.
    pub front: Curve,
    /// From the downstream wall junction to the right tip corner.
    pub back: Curve,
}

/// A four-sided block meshed by transfinite (Coons) interpolation.
///
/// `bottom`/`top` run in the logical `i` direction, `left`/`right` in `j`.
#[derive(Clone, Debug)]
pub struct Block {
    pub cols: (usize, usize),
    pub rows: (usize, usize),
    pub bottom: Curve,
    pub top: Curve,
    pub left: Curve,
    pub right: Curve,
}

impl Block {
    pub fn contains_cell(&self, i: usize, j: usize) -> bool {
        (self.cols.0..self.cols.1).contains(&i) && (self.rows.0..self.rows.1).contains(&j)
    }

    /// Coons patch at `(ξ, η) ∈ [0,1]²`; exact side values on the boundary.
    pub fn map(&self, xi: f64, eta: f64) -> Point {
        if eta == 0.0 {
            return self.bottom.eval(xi);
        }
        if eta == 1.0 {
            return self.top.eval(xi);
        }
        if xi == 0.0 {
            return self.left.eval(eta);
        }
        if xi == 1.0 {
            return self.right.eval(eta);
        }
        let b = self.bottom.eval(xi);
        let t = self.top.eval(xi);
        let l = self.left.eval(eta);
        let r = self.right.eval(eta);
        let p00 = self.bottom.start();
        let p10 = self.bottom.end();
        let p01 = self.top.start();
        let p11 = self.top.end();
        let mut p = [0.0; 2];
        for c in 0..2 {
            p[c] = (1.0 - eta) * b[c] + eta * t[c] + (1.0 - xi) * l[c] + xi * r[c]
                - ((1.0 - xi) * (1.0 - eta) * p00[c]
                    + xi * (1.0 - eta) * p10[c]
                    + (1.0 - xi) * eta * p01[c]
                    + xi * eta * p11[c]);
        }
        p
    }
}

/// Logical cell counts of the block zones for an `nx × ny` reference grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZoneSplit {
    /// Columns upstream of, inside, and downstream of the narrowing.
    pub cols: [usize; 3],
    /// Rows below, inside, and above the gap.
    pub rows: [usize; 3],
}

impl ZoneSplit {
    /// Depends on the model only, never on the parameter value.
    pub fn new(model: GeometryModel, nx: usize, ny: usize) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Geometry(format!("mesh {nx}x{ny} too coarse (need >= 4x4)")));
        }
        let (length, tip_left, tip_right) = match model {
            GeometryModel::Straight => {
                return Ok(Self {
                    cols: [nx, 0, 0],
                    rows: [0, ny, 0],
                })
            }
            GeometryModel::NarrowingWidth => (
                NARROWING_LENGTH,
                NARROWING_CENTER - NARROWING_TIP_HALF_WIDTH,
                NARROWING_CENTER + NARROWING_TIP_HALF_WIDTH,
            ),
            GeometryModel::CurvedWalls => (CURVED_LENGTH, CURVED_TIP_LEFT_X, CURVED_TIP_RIGHT_X),
        };
        let tip = tip_right - tip_left;
        let mid = ((nx as f64 * tip / length).round() as usize).max(2);
        let rest = nx - mid;
        let up = ((rest as f64 * tip_left / (length - tip)).round() as usize).clamp(1, rest - 1);
        let down = rest - up;
        // reference configuration: obstruction height equals gap width
        let side = ((ny as f64 / 3.0).round() as usize).max(1);
        let gap = ny - 2 * side;
        Ok(Self {
            cols: [up, mid, down],
            rows: [side, gap, side],
        })
    }
}

/// Seven-block (or single-block) decomposition of the fluid region.
pub fn blocks(spec: &GeometrySpec, split: &ZoneSplit) -> Vec<Block> {
    let l = spec.channel_length;
    let h_total = spec.channel_height;
    let Some(obs) = spec.obstruction() else {
        let nx = split.cols[0];
        let ny = split.rows[1];
        return vec![Block {
            cols: (0, nx),
            rows: (0, ny),
            bottom: Curve::line([0.0, 0.0], [l, 0.0]),
            top: Curve::line([0.0, h_total], [l, h_total]),
            left: Curve::line([0.0, 0.0], [0.0, h_total]),
            right: Curve::line([l, 0.0], [l, h_total]),
        }];
    };
    let axis = 0.5 * h_total;
    let h = obs.height;
    let (tl, tr) = (obs.tip_left, obs.tip_right);
    let xa = obs.front.start()[0];
    let xb = obs.back.start()[0];
    let [cu, cm, cd] = split.cols;
    let [rb, rg, rt] = split.rows;
    let c = [0, cu, cu + cm, cu + cm + cd];
    let r = [0, rb, rb + rg, rb + rg + rt];
    let front_top = obs.front.mirrored(axis).reversed();
    let back_top = obs.back.mirrored(axis).reversed();
    let lo = h;
    let hi = h_total - h;
    let line = Curve::line;
    vec![
        // upstream, bottom
        Block {
            cols: (c[0], c[1]),
            rows: (r[0], r[1]),
            bottom: line([0.0, 0.0], [xa, 0.0]),
            top: line([0.0, lo], [tl, lo]),
            left: line([0.0, 0.0], [0.0, lo]),
            right: obs.front,
        },
        // upstream, gap
        Block {
            cols: (c[0], c[1]),
            rows: (r[1], r[2]),
            bottom: line([0.0, lo], [tl, lo]),
            top: line([0.0, hi], [tl, hi]),
            left: line([0.0, lo], [0.0, hi]),
            right: line([tl, lo], [tl, hi]),
        },
        // upstream, top
        Block {
            cols: (c[0], c[1]),
            rows: (r[2], r[3]),
            bottom: line([0.0, hi], [tl, hi]),
            top: line([0.0, h_total], [xa, h_total]),
            left: line([0.0, hi], [0.0, h_total]),
            right: front_top,
        },
        // narrowing, gap
        Block {
            cols: (c[1], c[2]),
            rows: (r[1], r[2]),
            bottom: line([tl, lo], [tr, lo]),
            top: line([tl, hi], [tr, hi]),
            left: line([tl, lo], [tl, hi]),
            right: line([tr, lo], [tr, hi]),
        },
        // downstream, bottom
        Block {
            cols: (c[2], c[3]),
            rows: (r[0], r[1]),
            bottom: line([xb, 0.0], [l, 0.0]),
            top: line([tr, lo], [l, lo]),
            left: obs.back,
            right: line([l, 0.0], [l, lo]),
        },
        // downstream, gap
        Block {
            cols: (c[2], c[3]),
            rows: (r[1], r[2]),
            bottom: line([tr, lo], [l, lo]),
            top: line([tr, hi], [l, hi]),
            left: line([tr, lo], [tr, hi]),
            right: line([l, lo], [l, hi]),
        },
        // downstream, top
        Block {
            cols: (c[2], c[3]),
            rows: (r[2], r[3]),
            bottom: line([tr, hi], [l, hi]),
            top: line([xb, h_total], [l, h_total]),
            left: back_top,
            right: line([l, hi], [l, h_total]),
        },
    ]
}
