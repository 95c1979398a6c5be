//! Conservative finite differences for `-(nu(u) u')' = f` on a 1D mesh.
//!
//! Fluxes live at cell midpoints, `F_{i+1/2} = nu((u_i + u_{i+1}) / 2) (u_{i+1} - u_i) / h`.
//! A Neumann face closes the half cell next to it, so the flux returned by
//! [`outward_flux`] for a Dirichlet solve reproduces the same solution when fed
//! back as Neumann data.

use crate::error::{Error, Result};
use crate::kirchhoff::{recover, transform};
use crate::linalg::Tridiagonal;
use crate::newton::{damped_newton, NewtonSystem, SubdomainSolution};
use crate::problem::{Bc1d, Diffusion, FaceCondition, Mesh1D, NewtonConfig};

/// Which end of a 1D subdomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Left,
    Right,
}

fn check_len(u: &[f64], mesh: &Mesh1D) -> Result<()> {
    if u.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Midpoint flux `F_{i+1/2}`.
#[inline]
pub fn midpoint_flux(d: &Diffusion, u: &[f64], i: usize, h: f64) -> f64 {
    d.nu(0.5 * (u[i] + u[i + 1])) * (u[i + 1] - u[i]) / h
}

/// Derivatives of `F_{i+1/2}` with respect to `u_i` and `u_{i+1}`.
#[inline]
fn midpoint_flux_derivs(d: &Diffusion, u: &[f64], i: usize, h: f64) -> (f64, f64) {
    let m = 0.5 * (u[i] + u[i + 1]);
    let slope = (u[i + 1] - u[i]) / h;
    let chain = 0.5 * d.dnu(m) * slope;
    let nu_h = d.nu(m) / h;
    (chain - nu_h, chain + nu_h)
}

pub fn assemble_residual_1d(
    u: &[f64],
    d: &Diffusion,
    mesh: &Mesh1D,
    bc: &Bc1d,
) -> Result<Vec<f64>> {
    check_len(u, mesh)?;
    bc.validate()?;
    Ok(residual_unchecked(u, d, mesh, bc))
}

fn residual_unchecked(u: &[f64], d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Vec<f64> {
    let n = mesh.n_cells;
    let h = mesh.h();
    let flux: Vec<f64> = (0..n).map(|i| midpoint_flux(d, u, i, h)).collect();
    let mut r = vec![0.0; n + 1];
    for i in 1..n {
        r[i] = -(flux[i] - flux[i - 1]) / h - d.forcing.eval(mesh.node(i));
    }
    r[0] = match bc.left {
        FaceCondition::Dirichlet(g) => u[0] - g,
        FaceCondition::Neumann(phi) => -(flux[0] + phi) / (0.5 * h) - d.forcing.eval(mesh.node(0)),
    };
    r[n] = match bc.right {
        FaceCondition::Dirichlet(g) => u[n] - g,
        FaceCondition::Neumann(phi) => {
            -(phi - flux[n - 1]) / (0.5 * h) - d.forcing.eval(mesh.node(n))
        }
    };
    r
}

pub fn assemble_jacobian_1d(
    u: &[f64],
    d: &Diffusion,
    mesh: &Mesh1D,
    bc: &Bc1d,
) -> Result<Tridiagonal> {
    check_len(u, mesh)?;
    bc.validate()?;
    Ok(jacobian_unchecked(u, d, mesh, bc))
}

fn jacobian_unchecked(u: &[f64], d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Tridiagonal {
    let n = mesh.n_cells;
    let h = mesh.h();
    let derivs: Vec<(f64, f64)> = (0..n).map(|i| midpoint_flux_derivs(d, u, i, h)).collect();
    let mut j = Tridiagonal::zeros(n + 1);
    for i in 1..n {
        let (a_prev, b_prev) = derivs[i - 1];
        let (a, b) = derivs[i];
        j.lower[i - 1] = a_prev / h;
        j.diag[i] = -(a - b_prev) / h;
        j.upper[i] = -b / h;
    }
    match bc.left {
        FaceCondition::Dirichlet(_) => j.diag[0] = 1.0,
        FaceCondition::Neumann(_) => {
            let (a, b) = derivs[0];
            j.diag[0] = -2.0 * a / h;
            j.upper[0] = -2.0 * b / h;
        }
    }
    match bc.right {
        FaceCondition::Dirichlet(_) => j.diag[n] = 1.0,
        FaceCondition::Neumann(_) => {
            let (a, b) = derivs[n - 1];
            j.lower[n - 1] = 2.0 * a / h;
            j.diag[n] = 2.0 * b / h;
        }
    }
    j
}

fn row_scales_unchecked(u: &[f64], d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Vec<f64> {
    let n = mesh.n_cells;
    let h2 = mesh.h() * mesh.h();
    let nu: Vec<f64> = (0..n).map(|i| d.nu(0.5 * (u[i] + u[i + 1]))).collect();
    let mut s = vec![1.0; n + 1];
    for i in 1..n {
        s[i] = (nu[i - 1] + nu[i]) / h2;
    }
    if let FaceCondition::Neumann(_) = bc.left {
        s[0] = 2.0 * nu[0] / h2;
    }
    if let FaceCondition::Neumann(_) = bc.right {
        s[n] = 2.0 * nu[n - 1] / h2;
    }
    s
}

/// Outward flux `nu(u) du/dn` at one end, from the half-cell balance.
pub fn outward_flux(u: &[f64], d: &Diffusion, mesh: &Mesh1D, side: Side) -> Result<f64> {
    check_len(u, mesh)?;
    let h = mesh.h();
    let n = mesh.n_cells;
    Ok(match side {
        Side::Left => -midpoint_flux(d, u, 0, h) - 0.5 * h * d.forcing.eval(mesh.node(0)),
        Side::Right => midpoint_flux(d, u, n - 1, h) - 0.5 * h * d.forcing.eval(mesh.node(n)),
    })
}

/// Linear interpolation of Dirichlet data; a Neumann end takes the value of
/// the opposite Dirichlet end.
pub fn initial_guess_1d(mesh: &Mesh1D, bc: &Bc1d) -> Result<Vec<f64>> {
    bc.validate()?;
    let (gl, gr) = match (bc.left.dirichlet_value(), bc.right.dirichlet_value()) {
        (Some(a), Some(b)) => (a, b),
        (None, Some(b)) => (b, b),
        (Some(a), None) => (a, a),
        (None, None) => unreachable!("validated"),
    };
    let n = mesh.n_cells as f64;
    Ok((0..mesh.n_nodes())
        .map(|i| gl + (gr - gl) * i as f64 / n)
        .collect())
}

/// Newton starting point: with `w = u + alpha u^3 / 3` the equation is
/// `-w'' = f`, so solve that linear problem with transformed Dirichlet data
/// (fluxes are unchanged) and map back pointwise.
pub fn kirchhoff_predictor_1d(d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Result<Vec<f64>> {
    bc.validate()?;
    let lift = |c: FaceCondition| match c {
        FaceCondition::Dirichlet(v) => FaceCondition::Dirichlet(transform(d.alpha, v)),
        neumann => neumann,
    };
    let linear = DiffusionProblem1d {
        diffusion: Diffusion {
            alpha: 0.0,
            forcing: d.forcing,
        },
        mesh: *mesh,
        bc: Bc1d {
            left: lift(bc.left),
            right: lift(bc.right),
        },
    };
    let zero = vec![0.0; mesh.n_nodes()];
    let r0: Vec<f64> = linear.residual(&zero).iter().map(|r| -r).collect();
    let w = linear.linearize(&zero)?.solve(&r0)?;
    Ok(w.into_iter().map(|w| recover(d.alpha, w)).collect())
}

/// One subdomain problem, ready for Newton.
#[derive(Debug, Clone, Copy)]
pub struct DiffusionProblem1d {
    pub diffusion: Diffusion,
    pub mesh: Mesh1D,
    pub bc: Bc1d,
}

impl NewtonSystem for DiffusionProblem1d {
    type Jacobian = Tridiagonal;

    fn len(&self) -> usize {
        self.mesh.n_nodes()
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        residual_unchecked(u, &self.diffusion, &self.mesh, &self.bc)
    }

    fn row_scales(&self, u: &[f64]) -> Vec<f64> {
        row_scales_unchecked(u, &self.diffusion, &self.mesh, &self.bc)
    }

    fn linearize(&self, u: &[f64]) -> Result<Tridiagonal> {
        Ok(jacobian_unchecked(u, &self.diffusion, &self.mesh, &self.bc))
    }
}

pub fn newton_subdomain_solve(
    d: &Diffusion,
    mesh: &Mesh1D,
    bc: &Bc1d,
    initial_guess: Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<SubdomainSolution> {
    check_len(&initial_guess, mesh)?;
    bc.validate()?;
    let sys = DiffusionProblem1d {
        diffusion: *d,
        mesh: *mesh,
        bc: *bc,
    };
    damped_newton(&sys, initial_guess, cfg)
}

/// Diagonally scaled residual norm of `u` for the given problem.
pub fn scaled_residual_norm(u: &[f64], d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Result<f64> {
    let sys = DiffusionProblem1d {
        diffusion: *d,
        mesh: *mesh,
        bc: *bc,
    };
    let r = assemble_residual_1d(u, d, mesh, bc)?;
    Ok(sys.scaled_norm(u, &r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kirchhoff::kirchhoff_exact;
    use crate::problem::{Forcing, ProblemSpec};
    use proptest::prelude::*;

    fn unit_mesh(n: usize) -> Mesh1D {
        Mesh1D::new(0.0, 1.0, n).unwrap()
    }

    fn linear_diffusion() -> Diffusion {
        Diffusion::new(0.0, Forcing::Zero).unwrap()
    }

    fn nonlinear(f: Forcing) -> Diffusion {
        Diffusion::new(1.0, f).unwrap()
    }

    fn inf(v: &[f64]) -> f64 {
        v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    #[test]
    fn linear_state_has_zero_residual() {
        let mesh = unit_mesh(17);
        let u: Vec<f64> = mesh.nodes().iter().map(|x| 2.0 - 3.0 * x).collect();
        let bc = Bc1d::dirichlet(2.0, -1.0);
        let r = assemble_residual_1d(&u, &linear_diffusion(), &mesh, &bc).unwrap();
        assert!(inf(&r) < 1e-12, "{r:?}");
    }

    #[test]
    fn constant_state_has_zero_residual() {
        let mesh = unit_mesh(10);
        let u = vec![7.5; 11];
        let bc = Bc1d::dirichlet(7.5, 7.5);
        let r = assemble_residual_1d(&u, &nonlinear(Forcing::Zero), &mesh, &bc).unwrap();
        assert_eq!(inf(&r), 0.0);
    }

    #[test]
    fn wrong_length_is_rejected() {
        let mesh = unit_mesh(10);
        let bc = Bc1d::dirichlet(0.0, 1.0);
        let err = assemble_residual_1d(&[0.0; 5], &linear_diffusion(), &mesh, &bc).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 11, got: 5 }));
    }

    #[test]
    fn kirchhoff_residual_decays_second_order() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, 1.0, 3.0);
        let bc = Bc1d::dirichlet(1.0, 3.0);
        let norms: Vec<f64> = [100, 200, 400]
            .iter()
            .map(|&n| {
                let mesh = unit_mesh(n);
                let u: Vec<f64> = mesh
                    .nodes()
                    .iter()
                    .map(|&x| kirchhoff_exact(&spec, x).unwrap())
                    .collect();
                let r = assemble_residual_1d(&u, &spec.diffusion(), &mesh, &bc).unwrap();
                inf(&r[1..n])
            })
            .collect();
        for w in norms.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.2..4.8).contains(&ratio), "ratio {ratio}, norms {norms:?}");
        }
    }

    #[test]
    fn linear_jacobian_is_second_difference() {
        let mesh = unit_mesh(5);
        let h = mesh.h();
        let bc = Bc1d::dirichlet(0.0, 0.0);
        let u = vec![0.3, -1.0, 4.0, 2.0, 0.0, 1.0];
        let j = assemble_jacobian_1d(&u, &linear_diffusion(), &mesh, &bc).unwrap();
        assert_eq!(j.diag[0], 1.0);
        assert_eq!(j.diag[5], 1.0);
        assert_eq!(j.upper[0], 0.0);
        for i in 1..5 {
            assert!((j.diag[i] - 2.0 / (h * h)).abs() < 1e-9);
            assert!((j.lower[i - 1] + 1.0 / (h * h)).abs() < 1e-9);
            assert!((j.upper[i] + 1.0 / (h * h)).abs() < 1e-9);
        }
        let zero = vec![0.0; 6];
        let j0 = assemble_jacobian_1d(&zero, &nonlinear(Forcing::Zero), &mesh, &bc).unwrap();
        let jl = assemble_jacobian_1d(&zero, &linear_diffusion(), &mesh, &bc).unwrap();
        assert_eq!(j0, jl);
    }

    /// Column-wise central differences of the residual.
    fn fd_jacobian(u: &[f64], d: &Diffusion, mesh: &Mesh1D, bc: &Bc1d) -> Vec<Vec<f64>> {
        let step = 1e-6 * inf(u).max(1.0);
        (0..u.len())
            .map(|k| {
                let mut up = u.to_vec();
                let mut dn = u.to_vec();
                up[k] += step;
                dn[k] -= step;
                let rp = assemble_residual_1d(&up, d, mesh, bc).unwrap();
                let rm = assemble_residual_1d(&dn, d, mesh, bc).unwrap();
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect()
            })
            .collect()
    }

    fn face_strategy() -> impl Strategy<Value = FaceCondition> {
        prop_oneof![
            (-20.0f64..20.0).prop_map(FaceCondition::Dirichlet),
            (-50.0f64..50.0).prop_map(FaceCondition::Neumann),
        ]
    }

    proptest! {
        #[test]
        fn jacobian_matches_finite_differences(
            u in proptest::collection::vec(-20.0f64..20.0, 13),
            alpha in prop_oneof![Just(0.0), Just(0.1), Just(1.0)],
            left in face_strategy(),
            right in (-20.0f64..20.0).prop_map(FaceCondition::Dirichlet),
            swap in any::<bool>(),
        ) {
            let mesh = Mesh1D::new(0.2, 0.8, 12).unwrap();
            let bc = if swap { Bc1d { left: right, right: left } } else { Bc1d { left, right } };
            let d = Diffusion::new(alpha, Forcing::Sine { k: 10.0, c: 1.0 }).unwrap();
            let j = assemble_jacobian_1d(&u, &d, &mesh, &bc).unwrap();
            let fd = fd_jacobian(&u, &d, &mesh, &bc);
            for (k, col) in fd.iter().enumerate() {
                let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
                for (i, v) in col.iter().enumerate() {
                    prop_assert!((j.get(i, k) - v).abs() <= 1e-6 * scale,
                        "entry ({i},{k}): analytic {} fd {}", j.get(i, k), v);
                }
            }
        }
    }

    #[test]
    fn linear_problem_converges_in_one_step() {
        let mesh = unit_mesh(40);
        let bc = Bc1d::dirichlet(0.0, 1.0);
        let guess = vec![0.0; 41];
        let sol =
            newton_subdomain_solve(&linear_diffusion(), &mesh, &bc, guess, &NewtonConfig::default())
                .unwrap();
        assert!(sol.converged);
        assert_eq!(sol.newton_iterations, 1);
        for (u, x) in sol.values.iter().zip(mesh.nodes()) {
            assert!((u - x).abs() < 1e-13);
        }
    }

    #[test]
    fn kirchhoff_solution_is_second_order_accurate() {
        let errors = |a: f64, b: f64, cells: &[usize]| -> Vec<f64> {
            let spec = ProblemSpec::unit(1.0, Forcing::Zero, a, b);
            let bc = Bc1d::dirichlet(a, b);
            cells
                .iter()
                .map(|&n| {
                    let mesh = unit_mesh(n);
                    let guess = initial_guess_1d(&mesh, &bc).unwrap();
                    let cfg = NewtonConfig::default();
                    let sol = newton_subdomain_solve(&spec.diffusion(), &mesh, &bc, guess, &cfg)
                        .unwrap();
                    assert!(sol.converged);
                    sol.values
                        .iter()
                        .zip(mesh.nodes())
                        .map(|(u, x)| (u - kirchhoff_exact(&spec, x).unwrap()).abs())
                        .fold(0.0, f64::max)
                })
                .collect()
        };
        let smooth = errors(1.0, 3.0, &[250, 500, 1000]);
        for w in smooth.windows(2) {
            assert!((w[0] / w[1] - 4.0).abs() < 0.05, "{smooth:?}");
        }
        // u'(0) ~ 2687 here: the layer at x = 0 is only resolved below h ~ 4e-4,
        // so the error shrinks but has not reached the h^2 regime.
        let steep = errors(0.0, 20.0, &[500, 1000, 2000]);
        assert!(steep.windows(2).all(|w| w[1] < w[0]), "{steep:?}");
        assert!(steep[1] < 0.2, "{steep:?}");
    }

    #[test]
    fn neumann_solve_recovers_kirchhoff_trace() {
        let spec = ProblemSpec::unit(1.0, Forcing::Zero, 0.0, 20.0);
        // (1 + u^2) u' is the constant w(1) - w(0) on (0, 1)
        let c = 20.0 + 8000.0 / 3.0;
        let mesh = Mesh1D::new(0.5, 1.0, 500).unwrap();
        // outward normal of the left face is -x
        let bc = Bc1d {
            left: FaceCondition::Neumann(-c),
            right: FaceCondition::Dirichlet(20.0),
        };
        let guess = initial_guess_1d(&mesh, &bc).unwrap();
        let sol =
            newton_subdomain_solve(&spec.diffusion(), &mesh, &bc, guess, &NewtonConfig::default())
                .unwrap();
        assert!(sol.converged);
        let exact = kirchhoff_exact(&spec, 0.5).unwrap();
        assert!((exact - 15.85).abs() < 5e-3, "{exact}");
        assert!((sol.values[0] - exact).abs() < 1e-3, "{} vs {exact}", sol.values[0]);
    }

    #[test]
    fn converged_dirichlet_solve_is_flux_conservative() {
        let d = nonlinear(Forcing::Sine { k: 10.0, c: 1.0 });
        let mesh = unit_mesh(200);
        let bc = Bc1d::dirichlet(0.0, 10.0);
        let cfg = NewtonConfig::default();
        let guess = initial_guess_1d(&mesh, &bc).unwrap();
        let sol = newton_subdomain_solve(&d, &mesh, &bc, guess, &cfg).unwrap();
        assert!(sol.converged);
        let u = &sol.values;
        let h = mesh.h();
        let sys = DiffusionProblem1d { diffusion: d, mesh, bc };
        let scales = sys.row_scales(u);
        for i in 1..mesh.n_cells {
            let jump = midpoint_flux(&d, u, i, h) - midpoint_flux(&d, u, i - 1, h);
            let defect = (jump + h * d.forcing.eval(mesh.node(i))).abs();
            assert!(defect <= cfg.tol_residual * h * scales[i], "node {i}: {defect}");
        }
    }

    #[test]
    fn outward_flux_round_trips_through_neumann_solve() {
        let d = nonlinear(Forcing::LinearRamp { c: 100.0 });
        let mesh = Mesh1D::new(0.0, 0.3, 300).unwrap();
        let cfg = NewtonConfig::default();
        let bc = Bc1d::dirichlet(0.0, -7.0);
        let guess = initial_guess_1d(&mesh, &bc).unwrap();
        let u = newton_subdomain_solve(&d, &mesh, &bc, guess, &cfg).unwrap().values;
        let phi = outward_flux(&u, &d, &mesh, Side::Right).unwrap();
        let nbc = Bc1d {
            left: FaceCondition::Dirichlet(0.0),
            right: FaceCondition::Neumann(phi),
        };
        let r = assemble_residual_1d(&u, &d, &mesh, &nbc).unwrap();
        let norm = scaled_residual_norm(&u, &d, &mesh, &nbc).unwrap();
        assert!(norm < 1e-11, "{norm} {:?}", &r[295..]);
    }
}
