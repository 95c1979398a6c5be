//! Problem data: the nonlinear diffusion coefficient, forcings, meshes and
//! boundary conditions shared by every solver in the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named right-hand sides. Every experiment uses one of these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Forcing {
    Zero,
    /// `f(x) = c x`
    LinearRamp { c: f64 },
    /// `f(x) = c sin(k pi x)`
    Sine { k: f64, c: f64 },
}

impl Forcing {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Forcing::Zero => 0.0,
            Forcing::LinearRamp { c } => c * x,
            Forcing::Sine { k, c } => c * (k * PI * x).sin(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            Forcing::Zero => true,
            Forcing::LinearRamp { c } => c == 0.0,
            Forcing::Sine { c, .. } => c == 0.0,
        }
    }
}

/// The operator `-div((1 + alpha u^2) grad u) - f`, without geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diffusion {
    pub alpha: f64,
    pub forcing: Forcing,
}

impl Diffusion {
    pub fn new(alpha: f64, forcing: Forcing) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!(
                "alpha must be finite and nonnegative, got {alpha}"
            )));
        }
        Ok(Diffusion { alpha, forcing })
    }

    /// Diffusivity `nu(u) = 1 + alpha u^2`.
    #[inline]
    pub fn nu(&self, u: f64) -> f64 {
        1.0 + self.alpha * u * u
    }

    /// `nu'(u) = 2 alpha u`.
    #[inline]
    pub fn dnu(&self, u: f64) -> f64 {
        2.0 * self.alpha * u
    }
}

/// A 1D problem on `(x_left, x_right)` with Dirichlet data at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub forcing: Forcing,
    pub x_left: f64,
    pub x_right: f64,
    pub u_left: f64,
    pub u_right: f64,
}

impl ProblemSpec {
    /// Problem on the unit interval.
    pub fn unit(alpha: f64, forcing: Forcing, u_left: f64, u_right: f64) -> Self {
        ProblemSpec {
            alpha,
            forcing,
            x_left: 0.0,
            x_right: 1.0,
            u_left,
            u_right,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Diffusion::new(self.alpha, self.forcing)?;
        if !(self.x_right > self.x_left) {
            return Err(Error::InvalidInput(format!(
                "domain length must be positive: ({}, {})",
                self.x_left, self.x_right
            )));
        }
        if !self.u_left.is_finite() || !self.u_right.is_finite() {
            return Err(Error::InvalidInput("boundary values must be finite".into()));
        }
        Ok(())
    }

    pub fn diffusion(&self) -> Diffusion {
        Diffusion {
            alpha: self.alpha,
            forcing: self.forcing,
        }
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }
}

/// Dirichlet data imposed on the top and bottom edges of the unit-height
/// rectangle in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HorizontalTrace {
    /// Linear interpolation of the left and right values in `x`.
    Linear,
    /// The exact 1D Kirchhoff profile between the left and right values, so
    /// that the 2D solution is independent of `y` (requires `f = 0`).
    Kirchhoff,
}

/// A 2D problem on a rectangle, Dirichlet on every edge.
///
/// The left and right edges carry constant values; top and bottom carry a
/// `HorizontalTrace` joining them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec2d {
    pub alpha: f64,
    pub forcing: Forcing,
    pub x_left: f64,
    pub x_right: f64,
    pub y_bottom: f64,
    pub y_top: f64,
    pub u_left: f64,
    pub u_right: f64,
    pub horizontal: HorizontalTrace,
}

impl ProblemSpec2d {
    pub fn validate(&self) -> Result<()> {
        Diffusion::new(self.alpha, self.forcing)?;
        if !(self.x_right > self.x_left) || !(self.y_top > self.y_bottom) {
            return Err(Error::InvalidInput("domain lengths must be positive".into()));
        }
        if self.horizontal == HorizontalTrace::Kirchhoff && !self.forcing.is_zero() {
            return Err(Error::UnsupportedOracle(
                "Kirchhoff edge traces need zero forcing".into(),
            ));
        }
        Ok(())
    }

    pub fn diffusion(&self) -> Diffusion {
        Diffusion {
            alpha: self.alpha,
            forcing: self.forcing,
        }
    }

    /// The 1D problem obtained by dropping `y`.
    pub fn profile(&self) -> ProblemSpec {
        ProblemSpec {
            alpha: self.alpha,
            forcing: self.forcing,
            x_left: self.x_left,
            x_right: self.x_right,
            u_left: self.u_left,
            u_right: self.u_right,
        }
    }

    /// Value prescribed on the top and bottom edges at abscissa `x`.
    pub fn horizontal_value(&self, x: f64) -> f64 {
        match self.horizontal {
            HorizontalTrace::Linear => {
                let t = (x - self.x_left) / (self.x_right - self.x_left);
                self.u_left + t * (self.u_right - self.u_left)
            }
            HorizontalTrace::Kirchhoff => crate::kirchhoff::kirchhoff_exact(&self.profile(), x)
                .expect("validated Kirchhoff profile"),
        }
    }
}

/// Uniform 1D mesh with `n_cells + 1` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh1D {
    pub x_left: f64,
    pub x_right: f64,
    pub n_cells: usize,
}

impl Mesh1D {
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidInput("mesh needs at least one cell".into()));
        }
        if !(x_right > x_left) {
            return Err(Error::InvalidInput(format!(
                "empty interval ({x_left}, {x_right})"
            )));
        }
        Ok(Mesh1D {
            x_left,
            x_right,
            n_cells,
        })
    }

    /// Mesh of `(x_left, x_right)` whose spacing is `h`, which must divide the
    /// interval length.
    pub fn with_spacing(x_left: f64, x_right: f64, h: f64) -> Result<Self> {
        let cells = cells_for_spacing(x_right - x_left, h)?;
        Mesh1D::new(x_left, x_right, cells)
    }

    #[inline]
    pub fn h(&self) -> f64 {
        (self.x_right - self.x_left) / self.n_cells as f64
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_cells {
            self.x_right
        } else {
            self.x_left + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.node(i)).collect()
    }

    /// Sub-mesh spanning nodes `first..=last`.
    pub fn slice(&self, first: usize, last: usize) -> Result<Self> {
        if first >= last || last > self.n_cells {
            return Err(Error::InvalidInput(format!(
                "invalid node range {first}..={last} for {} cells",
                self.n_cells
            )));
        }
        Ok(Mesh1D {
            x_left: self.node(first),
            x_right: self.node(last),
            n_cells: last - first,
        })
    }

    /// Index of the node at `x`, if `x` is (to rounding) a mesh node.
    pub fn node_index(&self, x: f64) -> Result<usize> {
        let t = (x - self.x_left) / self.h();
        let i = t.round();
        if i < 0.0 || i > self.n_cells as f64 || (t - i).abs() > 1e-8 {
            return Err(Error::InvalidInput(format!(
                "x = {x} is not a node of the mesh with h = {}",
                self.h()
            )));
        }
        Ok(i as usize)
    }
}

/// Number of cells of spacing `h` covering `length`; fails unless `h` divides
/// `length` up to rounding.
pub fn cells_for_spacing(length: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !(length > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing {h} and length {length} must be positive"
        )));
    }
    let t = length / h;
    let n = t.round();
    if n < 1.0 || (t - n).abs() > 1e-8 * n.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "h = {h} does not divide the length {length}"
        )));
    }
    Ok(n as usize)
}

/// Uniform tensor grid. Node `(i, j)` has linear index `j * (nx + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x_left: f64,
    pub x_right: f64,
    pub y_bottom: f64,
    pub y_top: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid2D {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx < 1 || ny < 2 {
            return Err(Error::InvalidInput(format!(
                "grid needs nx >= 1 and ny >= 2, got {nx} x {ny}"
            )));
        }
        if !(x.1 > x.0) || !(y.1 > y.0) {
            return Err(Error::InvalidInput("empty grid extent".into()));
        }
        Ok(Grid2D {
            x_left: x.0,
            x_right: x.1,
            y_bottom: y.0,
            y_top: y.1,
            nx,
            ny,
        })
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        (self.x_right - self.x_left) / self.nx as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        (self.y_top - self.y_bottom) / self.ny as f64
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        if i == self.nx {
            self.x_right
        } else {
            self.x_left + i as f64 * self.hx()
        }
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        if j == self.ny {
            self.y_top
        } else {
            self.y_bottom + j as f64 * self.hy()
        }
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for j in 0..=self.ny {
            for i in 0..=self.nx {
                if self.is_boundary(i, j) {
                    out.push(self.index(i, j));
                }
            }
        }
        out
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for j in 1..self.ny {
            for i in 1..self.nx {
                out.push(self.index(i, j));
            }
        }
        out
    }

    /// Sub-grid spanning columns `first..=last`.
    pub fn columns(&self, first: usize, last: usize) -> Result<Self> {
        if first >= last || last > self.nx {
            return Err(Error::InvalidInput(format!(
                "invalid column range {first}..={last}"
            )));
        }
        Ok(Grid2D {
            x_left: self.x(first),
            x_right: self.x(last),
            nx: last - first,
            ..*self
        })
    }
}

/// Condition on one face of a 1D subdomain.
///
/// `Neumann(phi)` prescribes the outward flux `nu(u) du/dn = phi`; at a left
/// face the outward normal points to `-x`, at a right face to `+x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FaceCondition {
    Dirichlet(f64),
    Neumann(f64),
}

impl FaceCondition {
    pub fn dirichlet_value(&self) -> Option<f64> {
        match *self {
            FaceCondition::Dirichlet(g) => Some(g),
            FaceCondition::Neumann(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bc1d {
    pub left: FaceCondition,
    pub right: FaceCondition,
}

impl Bc1d {
    pub fn dirichlet(left: f64, right: f64) -> Self {
        Bc1d {
            left: FaceCondition::Dirichlet(left),
            right: FaceCondition::Dirichlet(right),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let (FaceCondition::Neumann(_), FaceCondition::Neumann(_)) = (self.left, self.right) {
            return Err(Error::InvalidInput(
                "pure Neumann problem is singular".into(),
            ));
        }
        Ok(())
    }
}

/// Settings for the damped Newton iteration used by every nonlinear solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonConfig {
    /// Bound on the Newton correction |J^-1 r|, infinity norm.
    pub tol_residual: f64,
    pub max_iter: usize,
    pub damping: bool,
    /// Smallest step fraction tried by the backtracking line search.
    pub min_step: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tol_residual: 1e-12,
            max_iter: 50,
            damping: true,
            min_step: 2f64.powi(-20),
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidInput("tol_residual must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        if !(self.min_step > 0.0 && self.min_step <= 1.0) {
            return Err(Error::InvalidInput("min_step must lie in (0, 1]".into()));
        }
        Ok(())
    }
}
