//! Five-point conservative discretization of `-div(nu(u) grad u) = f` on a
//! vertical strip. Top and bottom edges are Dirichlet; the left and right
//! edges may be Dirichlet or Neumann (interfaces of a strip decomposition).

use crate::error::{Error, Result};
use crate::kirchhoff::{recover, transform};
use crate::linalg::{BandLu, BandMatrix};
use crate::newton::{damped_newton, NewtonSystem, SubdomainSolution};
use crate::pde1d::Side;
use crate::problem::{Diffusion, Grid2D, NewtonConfig, ProblemSpec2d};

/// Data on the interior nodes `j = 1..ny` of a vertical edge.
#[derive(Debug, Clone, PartialEq)]
pub enum Face2d {
    Dirichlet(Vec<f64>),
    /// Outward flux `nu(u) du/dn` per node.
    Neumann(Vec<f64>),
}

impl Face2d {
    fn values(&self) -> &[f64] {
        match self {
            Face2d::Dirichlet(v) | Face2d::Neumann(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StripBc {
    pub left: Face2d,
    pub right: Face2d,
    /// Dirichlet values on `j = 0`, all `nx + 1` nodes.
    pub bottom: Vec<f64>,
    /// Dirichlet values on `j = ny`.
    pub top: Vec<f64>,
}

impl StripBc {
    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        let face = grid.ny - 1;
        for v in [self.left.values(), self.right.values()] {
            if v.len() != face {
                return Err(Error::DimensionMismatch {
                    expected: face,
                    got: v.len(),
                });
            }
        }
        for v in [&self.bottom, &self.top] {
            if v.len() != grid.nx + 1 {
                return Err(Error::DimensionMismatch {
                    expected: grid.nx + 1,
                    got: v.len(),
                });
            }
        }
        if matches!(self.left, Face2d::Neumann(_)) && matches!(self.right, Face2d::Neumann(_)) {
            return Err(Error::InvalidInput(
                "both vertical edges Neumann is not supported".into(),
            ));
        }
        Ok(())
    }

    /// All-Dirichlet conditions of a global 2D problem on `grid`.
    pub fn from_problem(spec: &ProblemSpec2d, grid: &Grid2D) -> Self {
        let edge: Vec<f64> = (0..=grid.nx)
            .map(|i| spec.horizontal_value(grid.x(i)))
            .collect();
        StripBc {
            left: Face2d::Dirichlet(vec![spec.u_left; grid.ny - 1]),
            right: Face2d::Dirichlet(vec![spec.u_right; grid.ny - 1]),
            bottom: edge.clone(),
            top: edge,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiffusionProblem2d {
    pub diffusion: Diffusion,
    pub grid: Grid2D,
    pub bc: StripBc,
}

impl DiffusionProblem2d {
    pub fn new(diffusion: Diffusion, grid: Grid2D, bc: StripBc) -> Result<Self> {
        bc.validate(&grid)?;
        Ok(DiffusionProblem2d {
            diffusion,
            grid,
            bc,
        })
    }

    #[inline]
    fn flux_x(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let p = g.index(i, j);
        let q = g.index(i + 1, j);
        self.diffusion.nu(0.5 * (u[p] + u[q])) * (u[q] - u[p]) / g.hx()
    }

    #[inline]
    fn flux_y(&self, u: &[f64], i: usize, j: usize) -> f64 {
        let g = &self.grid;
        let p = g.index(i, j);
        let q = g.index(i, j + 1);
        self.diffusion.nu(0.5 * (u[p] + u[q])) * (u[q] - u[p]) / g.hy()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.grid.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.n_nodes(),
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn assemble_residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok(self.residual_unchecked(u))
    }

    fn residual_unchecked(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (hx, hy) = (g.hx(), g.hy());
        let mut r = vec![0.0; g.n_nodes()];
        for i in 0..=nx {
            r[g.index(i, 0)] = u[g.index(i, 0)] - self.bc.bottom[i];
            r[g.index(i, ny)] = u[g.index(i, ny)] - self.bc.top[i];
        }
        for j in 1..ny {
            for i in 0..=nx {
                let k = g.index(i, j);
                let f = self.diffusion.forcing.eval(g.x(i));
                let vertical = -(self.flux_y(u, i, j) - self.flux_y(u, i, j - 1)) / hy;
                r[k] = if i == 0 {
                    match &self.bc.left {
                        Face2d::Dirichlet(v) => u[k] - v[j - 1],
                        Face2d::Neumann(phi) => {
                            -(self.flux_x(u, 0, j) + phi[j - 1]) / (0.5 * hx) + vertical - f
                        }
                    }
                } else if i == nx {
                    match &self.bc.right {
                        Face2d::Dirichlet(v) => u[k] - v[j - 1],
                        Face2d::Neumann(phi) => {
                            -(phi[j - 1] - self.flux_x(u, nx - 1, j)) / (0.5 * hx) + vertical - f
                        }
                    }
                } else {
                    -(self.flux_x(u, i, j) - self.flux_x(u, i - 1, j)) / hx + vertical - f
                };
            }
        }
        r
    }

    pub fn assemble_jacobian(&self, u: &[f64]) -> Result<BandMatrix> {
        self.check_len(u)?;
        Ok(self.jacobian_unchecked(u))
    }

    fn jacobian_unchecked(&self, u: &[f64]) -> BandMatrix {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (hx, hy) = (g.hx(), g.hy());
        let d = &self.diffusion;
        let mut jac = BandMatrix::zeros(g.n_nodes(), nx + 1);
        // adds coef * dF/du for the flux between nodes p and q (q downstream)
        let mut add_flux = |row: usize, coef: f64, p: usize, q: usize, h: f64| {
            let m = 0.5 * (u[p] + u[q]);
            let chain = 0.5 * d.dnu(m) * (u[q] - u[p]) / h;
            let nu_h = d.nu(m) / h;
            jac.add(row, p, coef * (chain - nu_h));
            jac.add(row, q, coef * (chain + nu_h));
        };
        for j in 1..ny {
            for i in 0..=nx {
                let k = g.index(i, j);
                let dirichlet_edge = (i == 0 && matches!(self.bc.left, Face2d::Dirichlet(_)))
                    || (i == nx && matches!(self.bc.right, Face2d::Dirichlet(_)));
                if dirichlet_edge {
                    continue;
                }
                add_flux(k, -1.0 / hy, k, g.index(i, j + 1), hy);
                add_flux(k, 1.0 / hy, g.index(i, j - 1), k, hy);
                if i == 0 {
                    add_flux(k, -2.0 / hx, k, g.index(1, j), hx);
                } else if i == nx {
                    add_flux(k, 2.0 / hx, g.index(nx - 1, j), k, hx);
                } else {
                    add_flux(k, -1.0 / hx, k, g.index(i + 1, j), hx);
                    add_flux(k, 1.0 / hx, g.index(i - 1, j), k, hx);
                }
            }
        }
        for j in 0..=ny {
            for i in 0..=nx {
                let k = g.index(i, j);
                let dirichlet = j == 0
                    || j == ny
                    || (i == 0 && matches!(self.bc.left, Face2d::Dirichlet(_)))
                    || (i == nx && matches!(self.bc.right, Face2d::Dirichlet(_)));
                if dirichlet {
                    jac.set(k, k, 1.0);
                }
            }
        }
        jac
    }

    fn row_scales_unchecked(&self, u: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (nx, ny) = (g.nx, g.ny);
        let (hx2, hy2) = (g.hx() * g.hx(), g.hy() * g.hy());
        let nu = |p: usize, q: usize| self.diffusion.nu(0.5 * (u[p] + u[q]));
        let mut s = vec![1.0; g.n_nodes()];
        for j in 1..ny {
            for i in 0..=nx {
                let k = g.index(i, j);
                let vertical = (nu(k, g.index(i, j + 1)) + nu(k, g.index(i, j - 1))) / hy2;
                if i == 0 {
                    if let Face2d::Neumann(_) = self.bc.left {
                        s[k] = 2.0 * nu(k, g.index(1, j)) / hx2 + vertical;
                    }
                } else if i == nx {
                    if let Face2d::Neumann(_) = self.bc.right {
                        s[k] = 2.0 * nu(k, g.index(nx - 1, j)) / hx2 + vertical;
                    }
                } else {
                    s[k] = (nu(k, g.index(i + 1, j)) + nu(k, g.index(i - 1, j))) / hx2 + vertical;
                }
            }
        }
        s
    }

    /// Outward flux on the interior nodes of one vertical edge, from the
    /// half-cell balance.
    pub fn outward_flux(&self, u: &[f64], side: Side) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let g = &self.grid;
        let (hx, hy) = (g.hx(), g.hy());
        let i = match side {
            Side::Left => 0,
            Side::Right => g.nx,
        };
        let f = self.diffusion.forcing.eval(g.x(i));
        Ok((1..g.ny)
            .map(|j| {
                let vertical = (self.flux_y(u, i, j) - self.flux_y(u, i, j - 1)) / hy;
                let balance = 0.5 * hx * (f + vertical);
                match side {
                    Side::Left => -self.flux_x(u, 0, j) - balance,
                    Side::Right => self.flux_x(u, g.nx - 1, j) - balance,
                }
            })
            .collect())
    }

    /// Values on the interior nodes of one vertical edge.
    pub fn trace(&self, u: &[f64], side: Side) -> Vec<f64> {
        let g = &self.grid;
        let i = match side {
            Side::Left => 0,
            Side::Right => g.nx,
        };
        (1..g.ny).map(|j| u[g.index(i, j)]).collect()
    }

    /// Row-wise linear interpolation between the vertical edges; a Neumann
    /// edge takes the opposite Dirichlet value.
    pub fn initial_guess(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut u = vec![0.0; g.n_nodes()];
        for i in 0..=g.nx {
            u[g.index(i, 0)] = self.bc.bottom[i];
            u[g.index(i, g.ny)] = self.bc.top[i];
        }
        for j in 1..g.ny {
            let (a, b) = match (&self.bc.left, &self.bc.right) {
                (Face2d::Dirichlet(l), Face2d::Dirichlet(r)) => (l[j - 1], r[j - 1]),
                (Face2d::Neumann(_), Face2d::Dirichlet(r)) => (r[j - 1], r[j - 1]),
                (Face2d::Dirichlet(l), Face2d::Neumann(_)) => (l[j - 1], l[j - 1]),
                (Face2d::Neumann(_), Face2d::Neumann(_)) => unreachable!("validated"),
            };
            for i in 0..=g.nx {
                u[g.index(i, j)] = a + (b - a) * i as f64 / g.nx as f64;
            }
        }
        u
    }

    /// Newton starting point from the linear problem `-lap w = f` in the
    /// Kirchhoff variable, as in [`crate::pde1d::kirchhoff_predictor_1d`].
    pub fn kirchhoff_predictor(&self) -> Result<Vec<f64>> {
        let a = self.diffusion.alpha;
        let lift_all = |v: &[f64]| v.iter().map(|&x| transform(a, x)).collect::<Vec<_>>();
        let lift = |f: &Face2d| match f {
            Face2d::Dirichlet(v) => Face2d::Dirichlet(lift_all(v)),
            Face2d::Neumann(v) => Face2d::Neumann(v.clone()),
        };
        let linear = DiffusionProblem2d::new(
            Diffusion {
                alpha: 0.0,
                forcing: self.diffusion.forcing,
            },
            self.grid,
            StripBc {
                left: lift(&self.bc.left),
                right: lift(&self.bc.right),
                bottom: lift_all(&self.bc.bottom),
                top: lift_all(&self.bc.top),
            },
        )?;
        let zero = vec![0.0; self.grid.n_nodes()];
        let r0: Vec<f64> = linear.residual(&zero).iter().map(|r| -r).collect();
        let w = linear.linearize(&zero)?.solve(&r0)?;
        Ok(w.into_iter().map(|w| recover(a, w)).collect())
    }

    pub fn solve(&self, initial_guess: Vec<f64>, cfg: &NewtonConfig) -> Result<SubdomainSolution> {
        self.check_len(&initial_guess)?;
        damped_newton(self, initial_guess, cfg)
    }
}

impl NewtonSystem for DiffusionProblem2d {
    type Jacobian = BandLu;

    fn len(&self) -> usize {
        self.grid.n_nodes()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.residual_unchecked(u)
    }

    fn row_scales(&self, u: &[f64]) -> Vec<f64> {
        self.row_scales_unchecked(u)
    }

    fn linearize(&self, u: &[f64]) -> Result<BandLu> {
        self.jacobian_unchecked(u).factorize()
    }
}

pub fn assemble_residual_2d(
    u: &[f64],
    d: &Diffusion,
    grid: &Grid2D,
    bc: &StripBc,
) -> Result<Vec<f64>> {
    DiffusionProblem2d::new(*d, *grid, bc.clone())?.assemble_residual(u)
}
