//! Nonlinear Dirichlet-Neumann iteration: the two-subdomain interface map,
//! its fixed-point iteration, the relaxation that makes it converge
//! quadratically, and the left-to-right sweep over many subdomains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::newton::SubdomainSolution;
use crate::pde1d::{self, Side};
use crate::pde2d::{DiffusionProblem2d, StripBc};
use crate::problem::{Bc1d, Grid2D, Mesh1D, NewtonConfig, ProblemSpec, ProblemSpec2d};
use crate::transmission::{
    dtn_derivative, dtn_eval, ntd_eval, Boundary, Evaluation, Face, FluxValue, Geometry,
    InterfaceValue, SubdomainData,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DnConfig {
    pub theta: f64,
    /// Stop once the interface error is below `tol * max(1, e_0)`.
    pub tol: f64,
    pub max_outer: usize,
    pub inner: NewtonConfig,
}

impl Default for DnConfig {
    fn default() -> Self {
        DnConfig {
            theta: 0.5,
            tol: 1e-10,
            max_outer: 200,
            inner: NewtonConfig::default(),
        }
    }
}

impl DnConfig {
    pub fn with_theta(theta: f64) -> Self {
        DnConfig {
            theta,
            ..DnConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        self.inner.validate()
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0, 1), got {theta}")));
    }
    Ok(())
}

/// One outer iteration of an iterative solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Distance to the reference solution (infinity norm).
    pub error_inf: f64,
    /// Fixed-point or Newton residual of the iterate (infinity norm).
    pub residual_inf: f64,
    /// Inner Newton iterations spent to produce this iterate.
    pub inner_newton_total: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceHistory {
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl ConvergenceHistory {
    pub fn errors(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.error_inf).collect()
    }

    /// Outer iterations taken to converge, if it did.
    pub fn iterations(&self) -> Option<usize> {
        if self.converged {
            self.records.last().map(|r| r.iteration)
        } else {
            None
        }
    }
}

/// Stopping rule shared by the outer solvers: against the reference when one
/// is given, otherwise against the residual.
pub(crate) struct Stop {
    tol: f64,
    scale: Option<f64>,
}

impl Stop {
    pub(crate) fn new(tol: f64) -> Self {
        Stop { tol, scale: None }
    }

    /// Whether the iterate with this measure is converged; the first measure
    /// seen fixes the relative scale.
    pub(crate) fn reached(&mut self, measure: f64) -> bool {
        let scale = *self.scale.get_or_insert(measure.max(1.0));
        measure <= self.tol * scale
    }
}

/// A split of a 1D interval or a 2D rectangle into subdomains along
/// node-aligned vertical interfaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub subdomains: Vec<SubdomainData>,
    /// Global node (1D) or column (2D) index of each interface.
    pub interface_nodes: Vec<usize>,
    pub global: GlobalProblem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GlobalProblem {
    Line { spec: ProblemSpec, mesh: Mesh1D },
    Plane { spec: ProblemSpec2d, grid: Grid2D },
}

impl Decomposition {
    /// Split `spec` on `mesh` at the given interface abscissae.
    pub fn line(spec: &ProblemSpec, mesh: &Mesh1D, interfaces: &[f64]) -> Result<Self> {
        spec.validate()?;
        check_domain(mesh.x_left, mesh.x_right, spec.x_left, spec.x_right)?;
        let nodes = interfaces
            .iter()
            .map(|&x| mesh.node_index(x))
            .collect::<Result<Vec<_>>>()?;
        Self::line_at_nodes(spec, mesh, nodes)
    }

    /// `n` subdomains of equal node count.
    pub fn line_equal(spec: &ProblemSpec, mesh: &Mesh1D, n: usize) -> Result<Self> {
        spec.validate()?;
        check_domain(mesh.x_left, mesh.x_right, spec.x_left, spec.x_right)?;
        let nodes = equal_cuts(mesh.n_cells, n)?;
        Self::line_at_nodes(spec, mesh, nodes)
    }

    fn line_at_nodes(spec: &ProblemSpec, mesh: &Mesh1D, nodes: Vec<usize>) -> Result<Self> {
        let cuts = full_cuts(&nodes, mesh.n_cells)?;
        let d = spec.diffusion();
        let last = cuts.len() - 2;
        let subdomains = cuts
            .windows(2)
            .enumerate()
            .map(|(id, w)| {
                Ok(SubdomainData {
                    id,
                    diffusion: d,
                    geometry: Geometry::Line(mesh.slice(w[0], w[1])?),
                    left: if id == 0 { Boundary::Outer(vec![spec.u_left]) } else { Boundary::Interface },
                    right: if id == last { Boundary::Outer(vec![spec.u_right]) } else { Boundary::Interface },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposition {
            subdomains,
            interface_nodes: nodes,
            global: GlobalProblem::Line { spec: *spec, mesh: *mesh },
        })
    }

    /// `n` vertical strips with equal column counts.
    pub fn strips(spec: &ProblemSpec2d, grid: &Grid2D, n: usize) -> Result<Self> {
        spec.validate()?;
        check_domain(grid.x_left, grid.x_right, spec.x_left, spec.x_right)?;
        let nodes = equal_cuts(grid.nx, n)?;
        let cuts = full_cuts(&nodes, grid.nx)?;
        let global_bc = StripBc::from_problem(spec, grid);
        let d = spec.diffusion();
        let last = cuts.len() - 2;
        let face = grid.ny - 1;
        let subdomains = cuts
            .windows(2)
            .enumerate()
            .map(|(id, w)| {
                Ok(SubdomainData {
                    id,
                    diffusion: d,
                    geometry: Geometry::Strip {
                        grid: grid.columns(w[0], w[1])?,
                        bottom: global_bc.bottom[w[0]..=w[1]].to_vec(),
                        top: global_bc.top[w[0]..=w[1]].to_vec(),
                    },
                    left: if id == 0 { Boundary::Outer(vec![spec.u_left; face]) } else { Boundary::Interface },
                    right: if id == last { Boundary::Outer(vec![spec.u_right; face]) } else { Boundary::Interface },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decomposition {
            subdomains,
            interface_nodes: nodes,
            global: GlobalProblem::Plane { spec: *spec, grid: *grid },
        })
    }

    pub fn interface_count(&self) -> usize {
        self.interface_nodes.len()
    }

    /// Values per interface: 1 in 1D, `ny - 1` in 2D.
    pub fn face_len(&self) -> usize {
        self.subdomains[0].face_len()
    }

    /// The two subdomains of a two-subdomain split.
    pub fn pair(&self) -> Result<(&SubdomainData, &SubdomainData)> {
        match self.subdomains.as_slice() {
            [a, b] => Ok((a, b)),
            s => Err(Error::InvalidInput(format!(
                "expected two subdomains, got {}",
                s.len()
            ))),
        }
    }

    /// Newton solve of the undecomposed problem on the union mesh, from the
    /// straight-line initial guess.
    pub fn monodomain(&self, cfg: &NewtonConfig) -> Result<SubdomainSolution> {
        let sol = match &self.global {
            GlobalProblem::Line { spec, mesh } => {
                let bc = Bc1d::dirichlet(spec.u_left, spec.u_right);
                let guess = pde1d::initial_guess_1d(mesh, &bc)?;
                pde1d::newton_subdomain_solve(&spec.diffusion(), mesh, &bc, guess, cfg)?
            }
            GlobalProblem::Plane { spec, grid } => {
                let p = DiffusionProblem2d::new(spec.diffusion(), *grid, StripBc::from_problem(spec, grid))?;
                p.solve(p.initial_guess(), cfg)?
            }
        };
        if !sol.converged {
            return Err(Error::SolverFailure {
                subdomain: None,
                reason: format!(
                    "monodomain Newton stopped after {} iterations at {:e}",
                    sol.newton_iterations, sol.residual_norm
                ),
            });
        }
        Ok(sol)
    }

    /// Interface traces of a global solution.
    pub fn traces_of(&self, u: &[f64]) -> Vec<InterfaceValue> {
        self.interface_nodes
            .iter()
            .map(|&k| match &self.global {
                GlobalProblem::Line { .. } => InterfaceValue::scalar(u[k]),
                GlobalProblem::Plane { grid, .. } => {
                    InterfaceValue((1..grid.ny).map(|j| u[grid.index(k, j)]).collect())
                }
            })
            .collect()
    }

    /// Interface traces of the monodomain discrete solution.
    pub fn reference_traces(&self, cfg: &NewtonConfig) -> Result<Vec<InterfaceValue>> {
        Ok(self.traces_of(&self.monodomain(cfg)?.values))
    }
}

fn check_domain(a: f64, b: f64, sa: f64, sb: f64) -> Result<()> {
    let tol = 1e-12 * (b - a).abs().max(1.0);
    if (a - sa).abs() > tol || (b - sb).abs() > tol {
        return Err(Error::InvalidInput(format!(
            "mesh ({a}, {b}) does not cover the problem domain ({sa}, {sb})"
        )));
    }
    Ok(())
}

fn equal_cuts(n_cells: usize, n: usize) -> Result<Vec<usize>> {
    if n < 2 || !n_cells.is_multiple_of(n) {
        return Err(Error::InvalidInput(format!(
            "cannot split {n_cells} cells into {n} equal subdomains"
        )));
    }
    Ok((1..n).map(|k| k * n_cells / n).collect())
}

fn full_cuts(interior: &[usize], n_cells: usize) -> Result<Vec<usize>> {
    let mut cuts = Vec::with_capacity(interior.len() + 2);
    cuts.push(0);
    cuts.extend_from_slice(interior);
    cuts.push(n_cells);
    if interior.is_empty() || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!(
            "interfaces must be strictly increasing interior nodes, got {interior:?}"
        )));
    }
    Ok(cuts)
}

/// `(1 - theta) lambda + theta NtD_2(-DtN_1(lambda))`.
pub fn g_map_eval(
    lambda: &InterfaceValue,
    psi1: &SubdomainData,
    psi2: &SubdomainData,
    theta: f64,
    cfg: &NewtonConfig,
) -> Result<Evaluation<InterfaceValue>> {
    let n = neumann_response(lambda, psi1, psi2, cfg)?;
    Ok(Evaluation {
        value: lambda.relax(&n.value, theta),
        newton_iterations: n.newton_iterations,
    })
}

/// `NtD_2(-DtN_1(lambda))`, the unrelaxed trace returned by the second
/// subdomain.
pub fn neumann_response(
    lambda: &InterfaceValue,
    psi1: &SubdomainData,
    psi2: &SubdomainData,
    cfg: &NewtonConfig,
) -> Result<Evaluation<InterfaceValue>> {
    let phi: Evaluation<FluxValue> = dtn_eval(lambda, psi1, cfg)?;
    let v = ntd_eval(&phi.value.neg(), psi2, cfg)?;
    Ok(Evaluation {
        value: v.value,
        newton_iterations: phi.newton_iterations + v.newton_iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DnOutcome {
    pub lambda: InterfaceValue,
    /// Every iterate, starting with the initial guess.
    pub iterates: Vec<InterfaceValue>,
    pub history: ConvergenceHistory,
}

/// Fixed-point iteration of [`g_map_eval`].
///
/// Record `n` holds `|lambda_n - reference|`, `|lambda_n - G(lambda_n)|` and
/// the inner Newton iterations spent to reach `lambda_n`. Without a
/// reference, the error column is the distance to the next iterate and the
/// stopping rule uses it.
pub fn dn_solve(
    lambda0: &InterfaceValue,
    psi1: &SubdomainData,
    psi2: &SubdomainData,
    cfg: &DnConfig,
    reference: Option<&InterfaceValue>,
) -> Result<DnOutcome> {
    cfg.validate()?;
    check_shape(lambda0, psi1.face_len())?;
    if let Some(r) = reference {
        check_shape(r, psi1.face_len())?;
    }
    fixed_point(lambda0.clone(), cfg, reference, |lambda| {
        g_map_eval(lambda, psi1, psi2, cfg.theta, &cfg.inner)
    })
}

fn check_shape(v: &InterfaceValue, n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.len() });
    }
    Ok(())
}

fn fixed_point<F>(
    lambda0: InterfaceValue,
    cfg: &DnConfig,
    reference: Option<&InterfaceValue>,
    mut map: F,
) -> Result<DnOutcome>
where
    F: FnMut(&InterfaceValue) -> Result<Evaluation<InterfaceValue>>,
{
    let mut lambda = lambda0;
    let mut iterates = vec![lambda.clone()];
    let mut history = ConvergenceHistory::default();
    let mut stop = Stop::new(cfg.tol);
    let mut inner = 0;
    for n in 0..=cfg.max_outer {
        let next = map(&lambda)?;
        let residual = lambda.max_abs_diff(&next.value);
        let error = match reference {
            Some(r) => lambda.max_abs_diff(r),
            None => residual,
        };
        history.records.push(IterationRecord {
            iteration: n,
            error_inf: error,
            residual_inf: residual,
            inner_newton_total: inner,
        });
        if stop.reached(error) {
            history.converged = true;
            break;
        }
        if n == cfg.max_outer {
            break;
        }
        inner += next.newton_iterations;
        lambda = next.value;
        iterates.push(lambda.clone());
    }
    Ok(DnOutcome {
        lambda,
        iterates,
        history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalTheta {
    pub theta: f64,
    /// `DtN_1'(lambda) / DtN_2'(lambda)` at the exact trace.
    pub delta: f64,
    pub d1: f64,
    pub d2: f64,
    /// The exact (monodomain) interface trace.
    pub lambda_exact: f64,
}

/// Relaxation that zeroes the derivative of the interface map at the exact
/// trace: `1 / (1 + delta)`. Requires the two DtN derivatives to share a
/// sign.
pub fn optimal_theta(split: &Decomposition, cfg: &NewtonConfig) -> Result<OptimalTheta> {
    let (psi1, psi2) = split.pair()?;
    if psi1.face_len() != 1 {
        return Err(Error::InvalidInput("optimal theta is defined in 1D only".into()));
    }
    let lambda_exact = split.reference_traces(cfg)?[0].0[0];
    let d1 = dtn_derivative(lambda_exact, psi1, cfg)?.value;
    let d2 = dtn_derivative(lambda_exact, psi2, cfg)?.value;
    if !(d1 * d2 > 0.0) {
        return Err(Error::HypothesisViolated { d1, d2 });
    }
    let delta = d1 / d2;
    Ok(OptimalTheta {
        theta: 1.0 / (1.0 + delta),
        delta,
        d1,
        d2,
        lambda_exact,
    })
}

/// Traces of the two neighbouring subdomain solutions at one interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceTraces {
    /// Trace of the subdomain on the left.
    pub left: InterfaceValue,
    /// Trace of the subdomain on the right.
    pub right: InterfaceValue,
}

impl InterfaceTraces {
    pub fn uniform(lambda: &InterfaceValue) -> Self {
        InterfaceTraces {
            left: lambda.clone(),
            right: lambda.clone(),
        }
    }

    /// Dirichlet data for the next sweep.
    pub fn relaxed(&self, theta: f64) -> InterfaceValue {
        self.left.relax(&self.right, theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub traces: Vec<InterfaceTraces>,
    pub solutions: Vec<SubdomainSolution>,
    pub newton_iterations: usize,
}

/// One multi-subdomain iteration.
///
/// Each subdomain takes as Dirichlet data on its right interface the relaxed
/// previous traces, and as Neumann data on its left interface the negated
/// flux of its left neighbour computed earlier in the same sweep. The first
/// subdomain is all-Dirichlet.
pub fn dn_multi_sweep(
    traces: &[InterfaceTraces],
    split: &Decomposition,
    theta: f64,
    cfg: &NewtonConfig,
) -> Result<SweepOutcome> {
    check_theta(theta)?;
    if traces.len() != split.interface_count() {
        return Err(Error::DimensionMismatch {
            expected: split.interface_count(),
            got: traces.len(),
        });
    }
    for t in traces {
        check_shape(&t.left, split.face_len())?;
        check_shape(&t.right, split.face_len())?;
    }
    let mut solutions = Vec::with_capacity(split.subdomains.len());
    let mut left_trace = Vec::with_capacity(traces.len());
    let mut right_trace = Vec::with_capacity(traces.len());
    let mut incoming: Option<FluxValue> = None;
    let mut newton_iterations = 0;
    for (j, psi) in split.subdomains.iter().enumerate() {
        let left = match (&psi.left, &incoming) {
            (Boundary::Outer(v), _) => Face::Dirichlet(v.clone()),
            (Boundary::Interface, Some(phi)) => Face::Neumann(phi.neg().0),
            (Boundary::Interface, None) => unreachable!("flux from the left neighbour"),
        };
        let right = match &psi.right {
            Boundary::Outer(v) => Face::Dirichlet(v.clone()),
            Boundary::Interface => Face::Dirichlet(traces[j].relaxed(theta).0),
        };
        let sol = psi.solve(&left, &right, cfg)?;
        newton_iterations += sol.newton_iterations;
        if j > 0 {
            right_trace.push(InterfaceValue(psi.trace(&sol.values, Side::Left)));
        }
        if matches!(psi.right, Boundary::Interface) {
            left_trace.push(InterfaceValue(psi.trace(&sol.values, Side::Right)));
            incoming = Some(FluxValue(psi.outward_flux(&sol.values, Side::Right)?));
        }
        solutions.push(sol);
    }
    let traces = left_trace
        .into_iter()
        .zip(right_trace)
        .map(|(left, right)| InterfaceTraces { left, right })
        .collect();
    Ok(SweepOutcome {
        traces,
        solutions,
        newton_iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiOutcome {
    /// Relaxed interface values after the last sweep.
    pub lambda: Vec<InterfaceValue>,
    pub history: ConvergenceHistory,
}

/// Repeated sweeps starting from `lambda0` (one value per interface, used
/// for both neighbouring traces). The iterate after sweep `n` is the relaxed
/// trace, which for two subdomains coincides with [`dn_solve`]'s iterate.
/// Errors are the maximum over all interfaces.
pub fn dn_multi_solve(
    lambda0: &[InterfaceValue],
    split: &Decomposition,
    cfg: &DnConfig,
    reference: Option<&[InterfaceValue]>,
) -> Result<MultiOutcome> {
    cfg.validate()?;
    for v in [Some(lambda0), reference].into_iter().flatten() {
        if v.len() != split.interface_count() {
            return Err(Error::DimensionMismatch {
                expected: split.interface_count(),
                got: v.len(),
            });
        }
        for l in v {
            check_shape(l, split.face_len())?;
        }
    }
    let dist = |a: &[InterfaceValue], b: &[InterfaceValue]| {
        a.iter().zip(b).map(|(x, y)| x.max_abs_diff(y)).fold(0.0, f64::max)
    };
    let mut traces: Vec<InterfaceTraces> = lambda0.iter().map(InterfaceTraces::uniform).collect();
    let mut lambda: Vec<InterfaceValue> = traces.iter().map(|t| t.relaxed(cfg.theta)).collect();
    let mut history = ConvergenceHistory::default();
    let mut stop = Stop::new(cfg.tol);
    let mut inner = 0;
    for n in 0..=cfg.max_outer {
        let sweep = dn_multi_sweep(&traces, split, cfg.theta, &cfg.inner)?;
        let next: Vec<InterfaceValue> = sweep.traces.iter().map(|t| t.relaxed(cfg.theta)).collect();
        let residual = dist(&lambda, &next);
        let error = match reference {
            Some(r) => dist(&lambda, r),
            None => residual,
        };
        history.records.push(IterationRecord {
            iteration: n,
            error_inf: error,
            residual_inf: residual,
            inner_newton_total: inner,
        });
        if stop.reached(error) {
            history.converged = true;
            break;
        }
        if n == cfg.max_outer {
            break;
        }
        inner += sweep.newton_iterations;
        traces = sweep.traces;
        lambda = next;
    }
    Ok(MultiOutcome { lambda, history })
}
