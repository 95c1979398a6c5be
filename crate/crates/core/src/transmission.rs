//! Nonlinear Dirichlet-to-Neumann and Neumann-to-Dirichlet maps of a
//! subdomain.
//!
//! Fluxes are outward: on a subdomain whose interface is its right end,
//! `DtN(lambda) = nu(u) u_x`; on one whose interface is its left end,
//! `DtN(lambda) = -nu(u) u_x`. The flux is read off the same half-cell balance
//! the Neumann rows use, so `ntd_eval(dtn_eval(lambda)) == lambda` holds for
//! the discrete problem up to the Newton tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::SubdomainSolution;
use crate::pde1d::{self, Side};
use crate::pde2d::{DiffusionProblem2d, Face2d, StripBc};
use crate::problem::{Bc1d, Diffusion, FaceCondition, Grid2D, Mesh1D, NewtonConfig};

/// Dirichlet trace on an interface: one value in 1D, one per interior node
/// of the interface line in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceValue(pub Vec<f64>);

/// Outward flux on an interface, same shape as [`InterfaceValue`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxValue(pub Vec<f64>);

impl InterfaceValue {
    pub fn scalar(v: f64) -> Self {
        InterfaceValue(vec![v])
    }

    pub fn zeros(n: usize) -> Self {
        InterfaceValue(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs_diff(&self, other: &InterfaceValue) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(1 - theta) self + theta other`, componentwise.
    pub fn relax(&self, other: &InterfaceValue, theta: f64) -> InterfaceValue {
        InterfaceValue(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - theta) * a + theta * b)
                .collect(),
        )
    }
}

impl FluxValue {
    pub fn neg(&self) -> FluxValue {
        FluxValue(self.0.iter().map(|v| -v).collect())
    }
}

/// A value together with the inner Newton iterations spent computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<T> {
    pub value: T,
    pub newton_iterations: usize,
}

/// Condition imposed on one face of a subdomain solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Face {
    Dirichlet(Vec<f64>),
    Neumann(Vec<f64>),
}

/// What sits on one end of a subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Boundary {
    /// Part of the physical boundary, with its Dirichlet values.
    Outer(Vec<f64>),
    Interface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Line(Mesh1D),
    /// Vertical strip with Dirichlet data on its bottom and top rows.
    Strip {
        grid: Grid2D,
        bottom: Vec<f64>,
        top: Vec<f64>,
    },
}

/// Everything a subdomain solve needs besides the interface data: forcing,
/// outer boundary values and mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainData {
    pub id: usize,
    pub diffusion: Diffusion,
    pub geometry: Geometry,
    pub left: Boundary,
    pub right: Boundary,
}

impl SubdomainData {
    pub fn face_len(&self) -> usize {
        match &self.geometry {
            Geometry::Line(_) => 1,
            Geometry::Strip { grid, .. } => grid.ny - 1,
        }
    }

    /// The single interface of a subdomain in a two-subdomain split.
    pub fn interface_side(&self) -> Result<Side> {
        match (&self.left, &self.right) {
            (Boundary::Outer(_), Boundary::Interface) => Ok(Side::Right),
            (Boundary::Interface, Boundary::Outer(_)) => Ok(Side::Left),
            _ => Err(Error::InvalidInput(format!(
                "subdomain {} does not have exactly one interface",
                self.id
            ))),
        }
    }

    fn boundary(&self, side: Side) -> &Boundary {
        match side {
            Side::Left => &self.left,
            Side::Right => &self.right,
        }
    }

    fn outer_face(&self, side: Side) -> Result<Face> {
        match self.boundary(side) {
            Boundary::Outer(v) => Ok(Face::Dirichlet(v.clone())),
            Boundary::Interface => Err(Error::InvalidInput(format!(
                "subdomain {}: no data for interface on the {side:?}",
                self.id
            ))),
        }
    }

    /// Faces for a solve with `face` on `side` and outer data elsewhere.
    fn faces_with(&self, side: Side, face: Face) -> Result<(Face, Face)> {
        Ok(match side {
            Side::Left => (face, self.outer_face(Side::Right)?),
            Side::Right => (self.outer_face(Side::Left)?, face),
        })
    }

    fn check_face(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.face_len() {
            return Err(Error::DimensionMismatch {
                expected: self.face_len(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Nonlinear solve with the given conditions on both vertical faces.
    /// Non-convergence is reported as a solver failure naming this subdomain.
    pub fn solve(&self, left: &Face, right: &Face, cfg: &NewtonConfig) -> Result<SubdomainSolution> {
        for f in [left, right] {
            match f {
                Face::Dirichlet(v) | Face::Neumann(v) => self.check_face(v)?,
            }
        }
        let sol = match &self.geometry {
            Geometry::Line(mesh) => {
                let to_1d = |f: &Face| match f {
                    Face::Dirichlet(v) => FaceCondition::Dirichlet(v[0]),
                    Face::Neumann(v) => FaceCondition::Neumann(v[0]),
                };
                let bc = Bc1d {
                    left: to_1d(left),
                    right: to_1d(right),
                };
                let guess = pde1d::kirchhoff_predictor_1d(&self.diffusion, mesh, &bc)?;
                pde1d::newton_subdomain_solve(&self.diffusion, mesh, &bc, guess, cfg)
            }
            Geometry::Strip { .. } => {
                let p = self.strip_problem(left, right)?;
                p.solve(p.kirchhoff_predictor()?, cfg)
            }
        }
        .map_err(|e| e.in_subdomain(self.id))?;
        if !sol.converged {
            return Err(Error::SolverFailure {
                subdomain: Some(self.id),
                reason: format!(
                    "Newton stopped after {} iterations at correction {:e}",
                    sol.newton_iterations, sol.residual_norm
                ),
            });
        }
        Ok(sol)
    }

    fn strip_problem(&self, left: &Face, right: &Face) -> Result<DiffusionProblem2d> {
        let Geometry::Strip { grid, bottom, top } = &self.geometry else {
            unreachable!("strip geometry");
        };
        let to_2d = |f: &Face| match f {
            Face::Dirichlet(v) => Face2d::Dirichlet(v.clone()),
            Face::Neumann(v) => Face2d::Neumann(v.clone()),
        };
        DiffusionProblem2d::new(
            self.diffusion,
            *grid,
            StripBc {
                left: to_2d(left),
                right: to_2d(right),
                bottom: bottom.clone(),
                top: top.clone(),
            },
        )
    }

    /// Values of `u` on one face.
    pub fn trace(&self, u: &[f64], side: Side) -> Vec<f64> {
        match &self.geometry {
            Geometry::Line(mesh) => vec![match side {
                Side::Left => u[0],
                Side::Right => u[mesh.n_cells],
            }],
            Geometry::Strip { grid, .. } => {
                let i = match side {
                    Side::Left => 0,
                    Side::Right => grid.nx,
                };
                (1..grid.ny).map(|j| u[grid.index(i, j)]).collect()
            }
        }
    }

    /// Outward flux of `u` on one face; the face must have been Dirichlet in
    /// the solve that produced `u`.
    pub fn outward_flux(&self, u: &[f64], side: Side) -> Result<Vec<f64>> {
        match &self.geometry {
            Geometry::Line(mesh) => Ok(vec![pde1d::outward_flux(u, &self.diffusion, mesh, side)?]),
            Geometry::Strip { grid, .. } => {
                // face conditions do not enter the flux formula
                let dummy = Face::Dirichlet(vec![0.0; grid.ny - 1]);
                self.strip_problem(&dummy, &dummy)?.outward_flux(u, side)
            }
        }
    }
}

/// Solve with Dirichlet data `lambda` on the interface and return the outward
/// flux there.
pub fn dtn_eval(
    lambda: &InterfaceValue,
    psi: &SubdomainData,
    cfg: &NewtonConfig,
) -> Result<Evaluation<FluxValue>> {
    let side = psi.interface_side()?;
    let (l, r) = psi.faces_with(side, Face::Dirichlet(lambda.0.clone()))?;
    let sol = psi.solve(&l, &r, cfg)?;
    Ok(Evaluation {
        value: FluxValue(psi.outward_flux(&sol.values, side)?),
        newton_iterations: sol.newton_iterations,
    })
}

/// Solve with outward flux `phi` on the interface and return the trace there.
pub fn ntd_eval(
    phi: &FluxValue,
    psi: &SubdomainData,
    cfg: &NewtonConfig,
) -> Result<Evaluation<InterfaceValue>> {
    let side = psi.interface_side()?;
    let (l, r) = psi.faces_with(side, Face::Neumann(phi.0.clone()))?;
    let sol = psi.solve(&l, &r, cfg)?;
    Ok(Evaluation {
        value: InterfaceValue(psi.trace(&sol.values, side)),
        newton_iterations: sol.newton_iterations,
    })
}

/// Relative step of the central difference in [`dtn_derivative`].
pub const DTN_DERIVATIVE_STEP: f64 = 1e-6;

/// Central difference of the scalar DtN map at `lambda`, with step
/// `1e-6 max(1, |lambda|)`.
pub fn dtn_derivative(
    lambda: f64,
    psi: &SubdomainData,
    cfg: &NewtonConfig,
) -> Result<Evaluation<f64>> {
    dtn_derivative_with_step(lambda, psi, cfg, DTN_DERIVATIVE_STEP * lambda.abs().max(1.0))
}

pub fn dtn_derivative_with_step(
    lambda: f64,
    psi: &SubdomainData,
    cfg: &NewtonConfig,
    eps: f64,
) -> Result<Evaluation<f64>> {
    if psi.face_len() != 1 {
        return Err(Error::InvalidInput(
            "DtN derivative is only available for 1D subdomains".into(),
        ));
    }
    let plus = dtn_eval(&InterfaceValue::scalar(lambda + eps), psi, cfg)?;
    let minus = dtn_eval(&InterfaceValue::scalar(lambda - eps), psi, cfg)?;
    Ok(Evaluation {
        value: (plus.value.0[0] - minus.value.0[0]) / (2.0 * eps),
        newton_iterations: plus.newton_iterations + minus.newton_iterations,
    })
}
