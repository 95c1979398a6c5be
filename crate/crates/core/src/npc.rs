//! Newton-type solvers: Newton on the Dirichlet-Neumann interface residual
//! (DNPEN), plain Newton on the whole domain, and Newton on the restricted
//! additive Schwarz fixed point (RASPEN).

use serde::{Deserialize, Serialize};

use crate::dn::{check_theta, ConvergenceHistory, Decomposition, IterationRecord, Stop};
use crate::error::{Error, Result};
use crate::linalg::dense_solve;
use crate::newton::{damped_newton_observed, SubdomainSolution};
use crate::pde1d::{self, DiffusionProblem1d};
use crate::pde2d::{DiffusionProblem2d, StripBc};
use crate::problem::{Bc1d, Grid2D, Mesh1D, NewtonConfig, ProblemSpec, ProblemSpec2d};
use crate::transmission::{Boundary, Evaluation, Face, Geometry, InterfaceValue, SubdomainData};

/// `F(lambda) = theta (lambda - NtD_2(-DtN_1(lambda)))` on a 1D
/// two-subdomain split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstructuredResidualSpec {
    pub psi1: SubdomainData,
    pub psi2: SubdomainData,
    pub theta: f64,
}

impl SubstructuredResidualSpec {
    pub fn new(split: &Decomposition, theta: f64) -> Result<Self> {
        check_theta(theta)?;
        let (psi1, psi2) = split.pair()?;
        if psi1.face_len() != 1 {
            return Err(Error::InvalidInput(
                "the substructured residual is implemented for 1D splits only".into(),
            ));
        }
        Ok(SubstructuredResidualSpec {
            psi1: psi1.clone(),
            psi2: psi2.clone(),
            theta,
        })
    }

    /// The theta-free part `lambda - NtD_2(-DtN_1(lambda))`.
    pub fn unscaled(&self, lambda: f64, cfg: &NewtonConfig) -> Result<Evaluation<f64>> {
        let n = crate::dn::neumann_response(&InterfaceValue::scalar(lambda), &self.psi1, &self.psi2, cfg)?;
        Ok(Evaluation {
            value: lambda - n.value.0[0],
            newton_iterations: n.newton_iterations,
        })
    }
}

pub fn substructured_residual(
    lambda: f64,
    spec: &SubstructuredResidualSpec,
    cfg: &NewtonConfig,
) -> Result<Evaluation<f64>> {
    check_theta(spec.theta)?;
    let k = spec.unscaled(lambda, cfg)?;
    Ok(Evaluation {
        value: spec.theta * k.value,
        newton_iterations: k.newton_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOuterConfig {
    /// Stop once the error (or residual, without a reference) is below
    /// `tol * max(1, initial value)`.
    pub tol: f64,
    pub max_iter: usize,
    pub inner: NewtonConfig,
}

impl Default for NewtonOuterConfig {
    fn default() -> Self {
        NewtonOuterConfig {
            tol: 1e-10,
            max_iter: 50,
            inner: NewtonConfig::default(),
        }
    }
}

impl NewtonOuterConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        self.inner.validate()
    }
}

/// Relative step of the central difference for the DNPEN derivative.
pub const DNPEN_DERIVATIVE_STEP: f64 = 1e-7;

/// Smallest derivative magnitude DNPEN will divide by.
pub const DNPEN_SINGULAR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarOutcome {
    pub lambda: f64,
    pub iterates: Vec<f64>,
    pub history: ConvergenceHistory,
}

/// Newton's method on [`substructured_residual`] with a central-difference
/// derivative.
///
/// The residual column of the history is `|F(lambda)| / theta`, so
/// histories for different `theta` are directly comparable.
pub fn dnpen_solve(
    lambda0: f64,
    spec: &SubstructuredResidualSpec,
    cfg: &NewtonOuterConfig,
    reference: Option<f64>,
) -> Result<ScalarOutcome> {
    cfg.validate()?;
    check_theta(spec.theta)?;
    if !lambda0.is_finite() {
        return Err(Error::InvalidInput("initial interface value must be finite".into()));
    }
    let theta = spec.theta;
    let mut lambda = lambda0;
    let mut iterates = vec![lambda];
    let mut history = ConvergenceHistory::default();
    let mut stop = Stop::new(cfg.tol);
    let mut inner = 0;
    for k in 0..=cfg.max_iter {
        let kv = spec.unscaled(lambda, &cfg.inner)?;
        let f = theta * kv.value;
        let error = match reference {
            Some(r) => (lambda - r).abs(),
            None => kv.value.abs(),
        };
        history.records.push(IterationRecord {
            iteration: k,
            error_inf: error,
            residual_inf: kv.value.abs(),
            inner_newton_total: inner,
        });
        if stop.reached(error) {
            history.converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        let eps = DNPEN_DERIVATIVE_STEP * lambda.abs().max(1.0);
        let plus = spec.unscaled(lambda + eps, &cfg.inner)?;
        let minus = spec.unscaled(lambda - eps, &cfg.inner)?;
        // theta factored out of the difference so that it does not enter
        // the cancellation
        let df = theta * ((plus.value - minus.value) / (2.0 * eps));
        if !(df.abs() >= DNPEN_SINGULAR) {
            return Err(Error::SingularJacobian(format!(
                "interface residual derivative {df:e} at lambda = {lambda}"
            )));
        }
        inner += kv.newton_iterations + plus.newton_iterations + minus.newton_iterations;
        lambda -= f / df;
        iterates.push(lambda);
    }
    Ok(ScalarOutcome {
        lambda,
        iterates,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeOutcome {
    pub solution: SubdomainSolution,
    pub history: ConvergenceHistory,
}

/// Damped Newton on the whole 1D problem from the straight-line initial
/// guess. Errors are measured against the converged result.
pub fn newton_monodomain_solve(
    spec: &ProblemSpec,
    mesh: &Mesh1D,
    cfg: &NewtonConfig,
) -> Result<VolumeOutcome> {
    spec.validate()?;
    let bc = Bc1d::dirichlet(spec.u_left, spec.u_right);
    let sys = DiffusionProblem1d {
        diffusion: spec.diffusion(),
        mesh: *mesh,
        bc,
    };
    let guess = pde1d::initial_guess_1d(mesh, &bc)?;
    observed_monodomain(|obs| damped_newton_observed(&sys, guess, cfg, obs))
}

/// As [`newton_monodomain_solve`], on a 2D grid.
pub fn newton_monodomain_solve_2d(
    spec: &ProblemSpec2d,
    grid: &Grid2D,
    cfg: &NewtonConfig,
) -> Result<VolumeOutcome> {
    spec.validate()?;
    let sys = DiffusionProblem2d::new(spec.diffusion(), *grid, StripBc::from_problem(spec, grid))?;
    let guess = sys.initial_guess();
    observed_monodomain(|obs| damped_newton_observed(&sys, guess, cfg, obs))
}

fn observed_monodomain<F>(run: F) -> Result<VolumeOutcome>
where
    F: FnOnce(&mut dyn FnMut(usize, &[f64], f64)) -> Result<SubdomainSolution>,
{
    let mut states: Vec<(Vec<f64>, f64)> = Vec::new();
    let solution = run(&mut |_, u, norm| states.push((u.to_vec(), norm)))?;
    if !solution.converged {
        return Err(Error::SolverFailure {
            subdomain: None,
            reason: format!(
                "Newton stopped after {} iterations at correction {:e}",
                solution.newton_iterations, solution.residual_norm
            ),
        });
    }
    let records = states
        .iter()
        .enumerate()
        .map(|(k, (u, norm))| IterationRecord {
            iteration: k,
            error_inf: max_abs_diff(u, &solution.values),
            residual_inf: *norm,
            inner_newton_total: k,
        })
        .collect();
    Ok(VolumeOutcome {
        solution,
        history: ConvergenceHistory {
            records,
            converged: true,
        },
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasConfig {
    /// Cells each subdomain extends past the split.
    pub overlap_cells: usize,
    pub outer: NewtonOuterConfig,
}

impl Default for RasConfig {
    fn default() -> Self {
        RasConfig {
            overlap_cells: 4,
            outer: NewtonOuterConfig::default(),
        }
    }
}

/// Relative step of the central differences in the RASPEN Jacobian.
pub const RASPEN_DERIVATIVE_STEP: f64 = 1e-6;

/// Two overlapping subdomains around a split node, with restricted
/// ownership: nodes up to the split belong to the first.
struct RasSplit {
    first: SubdomainData,
    second: SubdomainData,
    split: usize,
    /// Last node of the first subdomain, first node of the second.
    end1: usize,
    start2: usize,
}

impl RasSplit {
    fn new(spec: &ProblemSpec, mesh: &Mesh1D, gamma: f64, overlap: usize) -> Result<Self> {
        let m = mesh.node_index(gamma)?;
        if overlap == 0 || m <= overlap || m + overlap >= mesh.n_cells {
            return Err(Error::InvalidInput(format!(
                "overlap of {overlap} cells around node {m} leaves the domain of {} cells",
                mesh.n_cells
            )));
        }
        let d = spec.diffusion();
        let sub = |id, a, b| -> Result<SubdomainData> {
            Ok(SubdomainData {
                id,
                diffusion: d,
                geometry: Geometry::Line(mesh.slice(a, b)?),
                left: Boundary::Interface,
                right: Boundary::Interface,
            })
        };
        Ok(RasSplit {
            first: sub(0, 0, m + overlap)?,
            second: sub(1, m - overlap, mesh.n_cells)?,
            split: m,
            end1: m + overlap,
            start2: m - overlap,
        })
    }

    fn solve_first(&self, left: f64, right: f64, cfg: &NewtonConfig) -> Result<SubdomainSolution> {
        self.first
            .solve(&Face::Dirichlet(vec![left]), &Face::Dirichlet(vec![right]), cfg)
    }

    fn solve_second(&self, left: f64, right: f64, cfg: &NewtonConfig) -> Result<SubdomainSolution> {
        self.second
            .solve(&Face::Dirichlet(vec![left]), &Face::Dirichlet(vec![right]), cfg)
    }
}

/// Newton on `u - G(u)`, where `G` solves both overlapping subdomains with
/// Dirichlet data taken from `u` and keeps each solution on the nodes it
/// owns.
///
/// `G` depends on `u` only through the two artificial boundary values, so
/// its Jacobian has two nonzero columns, computed by central differences,
/// and each Newton step reduces to a 2x2 solve.
pub fn raspen_solve(
    u0: Vec<f64>,
    spec: &ProblemSpec,
    mesh: &Mesh1D,
    gamma: f64,
    cfg: &RasConfig,
    reference: Option<&[f64]>,
) -> Result<VolumeOutcome> {
    spec.validate()?;
    cfg.outer.validate()?;
    let n = mesh.n_nodes();
    if u0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u0.len() });
    }
    if let Some(r) = reference {
        if r.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: r.len() });
        }
    }
    let ras = RasSplit::new(spec, mesh, gamma, cfg.overlap_cells)?;
    let inner = &cfg.outer.inner;
    let (gl, gr) = (spec.u_left, spec.u_right);

    let mut u = u0;
    u[0] = gl;
    u[n - 1] = gr;
    let mut history = ConvergenceHistory::default();
    let mut stop = Stop::new(cfg.outer.tol);
    let mut spent = 0;
    let mut newton_iterations = 0;
    let mut last_residual = f64::INFINITY;
    for k in 0..=cfg.outer.max_iter {
        let v1 = ras.solve_first(gl, u[ras.end1], inner)?;
        let v2 = ras.solve_second(u[ras.start2], gr, inner)?;
        let g = assemble_owned(&ras, &v1.values, &v2.values, n);
        let r: Vec<f64> = u.iter().zip(&g).map(|(a, b)| a - b).collect();
        let residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        last_residual = residual;
        let error = match reference {
            Some(re) => max_abs_diff(&u, re),
            None => residual,
        };
        history.records.push(IterationRecord {
            iteration: k,
            error_inf: error,
            residual_inf: residual,
            inner_newton_total: spent,
        });
        if stop.reached(error) {
            history.converged = true;
            break;
        }
        if k == cfg.outer.max_iter {
            break;
        }
        spent += v1.newton_iterations + v2.newton_iterations;

        // columns of dG/du at the artificial boundary nodes
        let p1 = ras.end1;
        let p2 = ras.start2;
        let e1 = RASPEN_DERIVATIVE_STEP * u[p1].abs().max(1.0);
        let e2 = RASPEN_DERIVATIVE_STEP * u[p2].abs().max(1.0);
        let a_plus = ras.solve_first(gl, u[p1] + e1, inner)?;
        let a_minus = ras.solve_first(gl, u[p1] - e1, inner)?;
        let b_plus = ras.solve_second(u[p2] + e2, gr, inner)?;
        let b_minus = ras.solve_second(u[p2] - e2, gr, inner)?;
        spent += a_plus.newton_iterations
            + a_minus.newton_iterations
            + b_plus.newton_iterations
            + b_minus.newton_iterations;
        // column p1 lives on the first subdomain's owned nodes, p2 on the second's
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        for i in 0..=ras.split {
            c1[i] = (a_plus.values[i] - a_minus.values[i]) / (2.0 * e1);
        }
        for i in ras.split + 1..n {
            c2[i] = (b_plus.values[i - ras.start2] - b_minus.values[i - ras.start2]) / (2.0 * e2);
        }
        // (I - J) d = -r, restricted to {p1, p2}
        let a = vec![
            vec![1.0 - c1[p1], -c2[p1]],
            vec![-c1[p2], 1.0 - c2[p2]],
        ];
        let dp = dense_solve(a, vec![-r[p1], -r[p2]])
            .map_err(|e| Error::SingularJacobian(format!("RASPEN reduced system: {e}")))?;
        for i in 0..n {
            u[i] += -r[i] + c1[i] * dp[0] + c2[i] * dp[1];
        }
        newton_iterations += 1;
    }
    Ok(VolumeOutcome {
        solution: SubdomainSolution {
            values: u,
            converged: history.converged,
            newton_iterations,
            residual_norm: last_residual,
        },
        history,
    })
}

fn assemble_owned(ras: &RasSplit, v1: &[f64], v2: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i <= ras.split { v1[i] } else { v2[i - ras.start2] })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Forcing, HorizontalTrace};

    fn fig4(gamma: f64, n: usize) -> (ProblemSpec, Mesh1D, Decomposition) {
        let spec = ProblemSpec::unit(1.0, Forcing::Sine { k: 10.0, c: 1.0 }, 0.0, 10.0);
        let mesh = Mesh1D::new(0.0, 1.0, n).unwrap();
        let split = Decomposition::line(&spec, &mesh, &[gamma]).unwrap();
        (spec, mesh, split)
    }

    #[test]
    fn residual_scales_with_theta() {
        let (_, _, s) = fig4(0.5, 200);
        let cfg = NewtonConfig::default();
        for lam in [-3.0, 2.0, 7.5] {
            let a = substructured_residual(lam, &SubstructuredResidualSpec::new(&s, 0.9).unwrap(), &cfg).unwrap();
            let b = substructured_residual(lam, &SubstructuredResidualSpec::new(&s, 0.1).unwrap(), &cfg).unwrap();
            assert!((a.value / b.value - 9.0).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_vanishes_at_reference() {
        let (_, _, s) = fig4(0.3, 500);
        let cfg = NewtonConfig::default();
        let r = s.reference_traces(&cfg).unwrap()[0].0[0];
        let f = substructured_residual(r, &SubstructuredResidualSpec::new(&s, 0.5).unwrap(), &cfg).unwrap();
        assert!(f.value.abs() <= 10.0 * cfg.tol_residual, "{:e}", f.value);
    }

    #[test]
    fn linear_symmetric_residual_is_identity() {
        let spec = ProblemSpec::unit(0.0, Forcing::Zero, 0.0, 0.0);
        let mesh = Mesh1D::new(0.0, 1.0, 100).unwrap();
        let s = Decomposition::line(&spec, &mesh, &[0.5]).unwrap();
        let f = substructured_residual(4.0, &SubstructuredResidualSpec::new(&s, 0.5).unwrap(),
            &NewtonConfig::default()).unwrap();
        assert!((f.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn dnpen_iterates_do_not_depend_on_theta() {
        let (_, _, s) = fig4(0.3, 500);
        let cfg = NewtonOuterConfig::default();
        let runs: Vec<_> = [0.1, 0.5, 0.9]
            .iter()
            .map(|&t| dnpen_solve(0.0, &SubstructuredResidualSpec::new(&s, t).unwrap(), &cfg, None).unwrap())
            .collect();
        for r in &runs[1..] {
            assert_eq!(r.iterates.len(), runs[0].iterates.len());
            for (a, b) in r.iterates.iter().zip(&runs[0].iterates) {
                assert!((a - b).abs() <= 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn dnpen_agrees_with_monodomain_and_dn() {
        let (spec, mesh, s) = fig4(0.5, 400);
        let cfg = NewtonOuterConfig::default();
        let mono = newton_monodomain_solve(&spec, &mesh, &cfg.inner).unwrap();
        let lam_ref = mono.solution.values[200];
        let d = dnpen_solve(0.0, &SubstructuredResidualSpec::new(&s, 0.5).unwrap(), &cfg, Some(lam_ref)).unwrap();
        assert!(d.history.converged);
        assert!((d.lambda - lam_ref).abs() < 1e-9);
        let (p1, p2) = s.pair().unwrap();
        let dn = crate::dn::dn_solve(&InterfaceValue::scalar(0.0), p1, p2, &crate::dn::DnConfig::default(), None).unwrap();
        assert!((dn.lambda.0[0] - lam_ref).abs() < 1e-9);
    }

    #[test]
    fn monodomain_history_ends_within_tolerance() {
        let (spec, mesh, _) = fig4(0.5, 400);
        let out = newton_monodomain_solve(&spec, &mesh, &NewtonConfig::default()).unwrap();
        let e = out.history.errors();
        // the final state carries the applied last correction
        assert!(*e.last().unwrap() <= 1e-12);
        assert_eq!(e.len(), out.solution.newton_iterations + 1);
    }

    #[test]
    fn linear_monodomain_takes_one_step() {
        let spec = ProblemSpec::unit(0.0, Forcing::Sine { k: 3.0, c: 5.0 }, 1.0, 2.0);
        let mesh = Mesh1D::new(0.0, 1.0, 100).unwrap();
        let out = newton_monodomain_solve(&spec, &mesh, &NewtonConfig::default()).unwrap();
        assert_eq!(out.solution.newton_iterations, 1);
    }

    #[test]
    fn monodomain_2d_converges() {
        let spec = ProblemSpec2d {
            alpha: 1.0,
            forcing: Forcing::Zero,
            x_left: 0.0,
            x_right: 1.0,
            y_bottom: 0.0,
            y_top: 1.0,
            u_left: 0.0,
            u_right: 20.0,
            horizontal: HorizontalTrace::Linear,
        };
        let grid = Grid2D::new((0.0, 1.0), (0.0, 1.0), 16, 16).unwrap();
        let out = newton_monodomain_solve_2d(&spec, &grid, &NewtonConfig::default()).unwrap();
        assert!(out.solution.converged);
    }

    #[test]
    fn raspen_linear_in_one_step() {
        let spec = ProblemSpec::unit(0.0, Forcing::Sine { k: 10.0, c: 1.0 }, 0.0, 10.0);
        let mesh = Mesh1D::new(0.0, 1.0, 200).unwrap();
        let bc = Bc1d::dirichlet(0.0, 10.0);
        let u0 = pde1d::initial_guess_1d(&mesh, &bc).unwrap();
        let mono = newton_monodomain_solve(&spec, &mesh, &NewtonConfig::default()).unwrap();
        let out = raspen_solve(u0, &spec, &mesh, 0.5, &RasConfig::default(), Some(&mono.solution.values)).unwrap();
        assert!(out.history.converged);
        assert_eq!(out.history.iterations(), Some(1), "{:?}", out.history.errors());
    }

    #[test]
    fn raspen_matches_monodomain() {
        let (spec, mesh, _) = fig4(0.3, 400);
        let mono = newton_monodomain_solve(&spec, &mesh, &NewtonConfig::default()).unwrap();
        let u0 = pde1d::initial_guess_1d(&mesh, &Bc1d::dirichlet(0.0, 10.0)).unwrap();
        let out = raspen_solve(u0, &spec, &mesh, 0.3, &RasConfig::default(), None).unwrap();
        assert!(out.history.converged);
        assert!(max_abs_diff(&out.solution.values, &mono.solution.values) < 1e-9);
        // the monodomain solution is a fixed point of the Schwarz map
        let at_ref = raspen_solve(mono.solution.values.clone(), &spec, &mesh, 0.3,
            &RasConfig::default(), None).unwrap();
        assert!(at_ref.history.records[0].residual_inf <= 10.0 * 1e-12);
    }

    #[test]
    fn raspen_rejects_overlap_past_the_boundary() {
        let (spec, mesh, _) = fig4(0.5, 10);
        let u0 = vec![0.0; 11];
        let cfg = RasConfig { overlap_cells: 5, ..RasConfig::default() };
        assert!(raspen_solve(u0, &spec, &mesh, 0.5, &cfg, None).is_err());
    }
}
