//! Experiment registry. A named experiment expands into fully specified
//! cases; each case runs one solver and yields one convergence history.
//! The manifest stores the cases, so a saved manifest replays exactly.

use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use serde::{Deserialize, Serialize};

use crate::dn::{
    dn_multi_solve, dn_solve, optimal_theta, ConvergenceHistory, DnConfig, Decomposition,
    OptimalTheta,
};
use crate::error::{Error, Result};
use crate::history::{render_history_csv, write_atomic, HistoryRecord};
use crate::npc::{
    dnpen_solve, newton_monodomain_solve, newton_monodomain_solve_2d, raspen_solve,
    NewtonOuterConfig, RasConfig, SubstructuredResidualSpec,
};
use crate::problem::{
    cells_for_spacing, Forcing, Grid2D, HorizontalTrace, Mesh1D, NewtonConfig, ProblemSpec,
    ProblemSpec2d,
};
use crate::transmission::InterfaceValue;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Name and one-line description of every experiment.
pub const EXPERIMENTS: [(&str, &str); 6] = [
    ("nilpotent-toy", "antisymmetric problem where DN with theta=1/2 converges in one step"),
    ("quadratic-theta", "two-subdomain DN with theta=1/2 vs the optimal theta, f=100x"),
    ("mesh-independence-1d", "DN sweep over ten subdomains for several mesh sizes"),
    ("mesh-independence-2d", "DN sweep over four vertical strips for several mesh sizes"),
    ("dnpen-compare", "DNPEN vs Newton, DN and RASPEN with the optimal theta, two splits"),
    ("dnpen-theta", "DNPEN vs Newton, DN and RASPEN with non-optimal theta values"),
];

/// Command-line adjustments to an experiment's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub h: Option<Vec<f64>>,
    pub theta: Option<Vec<f64>>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dn,
    Dnpen,
    Newton,
    Raspen,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dn => "dn",
            Method::Dnpen => "dnpen",
            Method::Newton => "newton",
            Method::Raspen => "raspen",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Line(ProblemSpec),
    Plane(ProblemSpec2d),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    /// No decomposition (monodomain Newton).
    Whole,
    /// Interfaces at these abscissae.
    At(Vec<f64>),
    /// This many subdomains of equal size.
    Equal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaRule {
    Fixed(f64),
    /// `1 / (1 + delta)` from the derivatives at the reference trace.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initial {
    /// The same value on every interface node.
    Value(f64),
    /// The straight line between the two boundary values.
    StraightLine,
}

/// Everything needed to produce one convergence history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    /// CSV file name, relative to the manifest.
    pub stream: String,
    pub method: Method,
    pub problem: Problem,
    pub h: f64,
    pub split: Split,
    pub theta: Option<ThetaRule>,
    pub initial: Initial,
    /// Outer tolerance; for Newton, the bound on the Newton correction.
    pub tol: f64,
    pub max_outer: usize,
    /// Subdomain (or, for Newton, the only) nonlinear solves.
    pub inner: NewtonConfig,
    pub overlap_cells: Option<usize>,
}

/// Outcome of one case, as recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSummary {
    pub stream: String,
    pub method: Method,
    pub theta: Option<f64>,
    pub h: f64,
    pub subdomains: usize,
    pub converged: bool,
    pub iterations: Option<usize>,
    pub final_error: Option<f64>,
    pub optimal_theta: Option<OptimalTheta>,
    /// Set when the solver stopped with an error; the history then holds
    /// no rows.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub description: String,
    pub generator: String,
    pub determinism: String,
    pub overrides: Overrides,
    pub cases: Vec<Case>,
    pub streams: Vec<StreamSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRun {
    pub manifest: Manifest,
    /// One history per case, in case order.
    pub histories: Vec<Vec<HistoryRecord>>,
}

impl ExperimentRun {
    pub fn history(&self, stream: &str) -> Option<&[HistoryRecord]> {
        self.manifest
            .streams
            .iter()
            .position(|s| s.stream == stream)
            .map(|i| self.histories[i].as_slice())
    }
}

pub fn describe(name: &str) -> Result<&'static str> {
    EXPERIMENTS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| *d)
        .ok_or_else(|| Error::UnknownExperiment(name.to_string()))
}

pub fn run_experiment(name: &str, overrides: &Overrides) -> Result<ExperimentRun> {
    let cases = plan(name, overrides)?;
    run_cases(name, overrides, cases)
}

/// Replays the cases stored in a manifest.
pub fn rerun(manifest: &Manifest) -> Result<ExperimentRun> {
    run_cases(&manifest.experiment, &manifest.overrides, manifest.cases.clone())
}

/// The cases an experiment expands into.
pub fn plan(name: &str, ov: &Overrides) -> Result<Vec<Case>> {
    describe(name)?;
    check_overrides(ov)?;
    let alpha = ov.alpha.unwrap_or(1.0);
    let line_tol = |tol, max_outer| (tol, max_outer, NewtonConfig::default());
    let mut cases = Vec::new();
    match name {
        "nilpotent-toy" => {
            let spec = ProblemSpec::unit(alpha, Forcing::Sine { k: 4.0, c: 1.0 }, 5.0, -5.0);
            for h in hs(ov, &[1e-3]) {
                for theta in thetas(ov, &[0.5]) {
                    for start in [-1.0, 0.0, 3.0] {
                        cases.push(dn_case(
                            Problem::Line(spec),
                            h,
                            Split::At(vec![0.5]),
                            ThetaRule::Fixed(theta),
                            Initial::Value(start),
                            line_tol(1e-10, 200),
                        ));
                    }
                }
            }
        }
        "quadratic-theta" => {
            let spec = ProblemSpec::unit(alpha, Forcing::LinearRamp { c: 100.0 }, 0.0, -20.0);
            for h in hs(ov, &[1e-3]) {
                for gamma in [0.5, 0.3] {
                    let rules = thetas(ov, &[0.5])
                        .into_iter()
                        .map(ThetaRule::Fixed)
                        .chain([ThetaRule::Optimal]);
                    for rule in rules {
                        cases.push(dn_case(
                            Problem::Line(spec),
                            h,
                            Split::At(vec![gamma]),
                            rule,
                            Initial::Value(0.0),
                            line_tol(1e-12, 200),
                        ));
                    }
                }
            }
        }
        "mesh-independence-1d" => {
            let spec = ProblemSpec::unit(alpha, Forcing::Zero, 0.0, 20.0);
            for h in hs(ov, &[1e-2, 2e-3, 1e-3, 1e-4]) {
                for theta in thetas(ov, &[0.5]) {
                    cases.push(dn_case(
                        Problem::Line(spec),
                        h,
                        Split::Equal(10),
                        ThetaRule::Fixed(theta),
                        Initial::Value(0.0),
                        line_tol(1e-8, 1000),
                    ));
                }
            }
        }
        "mesh-independence-2d" => {
            let spec = ProblemSpec2d {
                alpha,
                forcing: Forcing::Zero,
                x_left: 0.0,
                x_right: 1.0,
                y_bottom: 0.0,
                y_top: 1.0,
                u_left: 0.0,
                u_right: 20.0,
                horizontal: HorizontalTrace::Linear,
            };
            for h in hs(ov, &[1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0]) {
                for theta in thetas(ov, &[0.5]) {
                    cases.push(dn_case(
                        Problem::Plane(spec),
                        h,
                        Split::Equal(4),
                        ThetaRule::Fixed(theta),
                        Initial::Value(0.0),
                        line_tol(1e-8, 300),
                    ));
                }
            }
        }
        "dnpen-compare" => {
            if ov.theta.is_some() {
                return Err(Error::RejectedOverride(
                    "dnpen-compare always uses the optimal theta".into(),
                ));
            }
            let spec = newton_comparison_problem(alpha);
            for h in hs(ov, &[1e-3]) {
                for gamma in [0.5, 0.3] {
                    cases.push(dnpen_case(spec, h, gamma, ThetaRule::Optimal));
                    cases.push(dn_case(
                        Problem::Line(spec),
                        h,
                        Split::At(vec![gamma]),
                        ThetaRule::Optimal,
                        Initial::StraightLine,
                        line_tol(1e-10, 200),
                    ));
                    cases.push(raspen_case(spec, h, gamma));
                }
                cases.push(newton_case(spec, h));
            }
        }
        "dnpen-theta" => {
            let spec = newton_comparison_problem(alpha);
            for h in hs(ov, &[1e-3]) {
                for theta in thetas(ov, &[0.1, 0.9]) {
                    cases.push(dnpen_case(spec, h, 0.5, ThetaRule::Fixed(theta)));
                    cases.push(dn_case(
                        Problem::Line(spec),
                        h,
                        Split::At(vec![0.5]),
                        ThetaRule::Fixed(theta),
                        Initial::StraightLine,
                        line_tol(1e-10, 500),
                    ));
                }
                cases.push(raspen_case(spec, h, 0.5));
                cases.push(newton_case(spec, h));
            }
        }
        _ => unreachable!("describe() accepted {name}"),
    }
    for c in &mut cases {
        c.stream = stream_name(c);
    }
    if let Some(dup) = cases
        .iter()
        .enumerate()
        .find(|(i, c)| cases[..*i].iter().any(|d| d.stream == c.stream))
    {
        return Err(Error::RejectedOverride(format!(
            "overrides produce the stream {} twice",
            dup.1.stream
        )));
    }
    Ok(cases)
}

/// `f = sin(10 pi x)`, `u(0) = 0`, `u(1) = 10`.
pub fn newton_comparison_problem(alpha: f64) -> ProblemSpec {
    ProblemSpec::unit(alpha, Forcing::Sine { k: 10.0, c: 1.0 }, 0.0, 10.0)
}

fn check_overrides(ov: &Overrides) -> Result<()> {
    let bad = |m: String| Err(Error::RejectedOverride(m));
    if let Some(h) = &ov.h {
        if h.is_empty() {
            return bad("--h needs at least one value".into());
        }
        if let Some(x) = h.iter().find(|x| !(x.is_finite() && **x > 0.0 && **x < 1.0)) {
            return bad(format!("mesh size {x} must lie in (0, 1)"));
        }
    }
    if let Some(t) = &ov.theta {
        if t.is_empty() {
            return bad("--theta needs at least one value".into());
        }
        if let Some(x) = t.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
            return bad(format!("theta {x} must lie in (0, 1)"));
        }
    }
    if let Some(a) = ov.alpha {
        if !(a.is_finite() && a >= 0.0) {
            return bad(format!("alpha {a} must be finite and non-negative"));
        }
    }
    Ok(())
}

fn hs(ov: &Overrides, default: &[f64]) -> Vec<f64> {
    ov.h.clone().unwrap_or_else(|| default.to_vec())
}

fn thetas(ov: &Overrides, default: &[f64]) -> Vec<f64> {
    ov.theta.clone().unwrap_or_else(|| default.to_vec())
}

fn dn_case(
    problem: Problem,
    h: f64,
    split: Split,
    theta: ThetaRule,
    initial: Initial,
    (tol, max_outer, inner): (f64, usize, NewtonConfig),
) -> Case {
    Case {
        stream: String::new(),
        method: Method::Dn,
        problem,
        h,
        split,
        theta: Some(theta),
        initial,
        tol,
        max_outer,
        inner,
        overlap_cells: None,
    }
}

fn dnpen_case(spec: ProblemSpec, h: f64, gamma: f64, theta: ThetaRule) -> Case {
    let outer = NewtonOuterConfig::default();
    Case {
        stream: String::new(),
        method: Method::Dnpen,
        problem: Problem::Line(spec),
        h,
        split: Split::At(vec![gamma]),
        theta: Some(theta),
        initial: Initial::StraightLine,
        tol: outer.tol,
        max_outer: outer.max_iter,
        inner: outer.inner,
        overlap_cells: None,
    }
}

fn raspen_case(spec: ProblemSpec, h: f64, gamma: f64) -> Case {
    let ras = RasConfig::default();
    Case {
        stream: String::new(),
        method: Method::Raspen,
        problem: Problem::Line(spec),
        h,
        split: Split::At(vec![gamma]),
        theta: None,
        initial: Initial::StraightLine,
        tol: ras.outer.tol,
        max_outer: ras.outer.max_iter,
        inner: ras.outer.inner,
        overlap_cells: Some(ras.overlap_cells),
    }
}

fn newton_case(spec: ProblemSpec, h: f64) -> Case {
    let inner = NewtonConfig::default();
    Case {
        stream: String::new(),
        method: Method::Newton,
        problem: Problem::Line(spec),
        h,
        split: Split::Whole,
        theta: None,
        initial: Initial::StraightLine,
        tol: inner.tol_residual,
        max_outer: inner.max_iter,
        inner,
        overlap_cells: None,
    }
}

fn stream_name(c: &Case) -> String {
    let mut s = c.method.name().to_string();
    match c.theta {
        Some(ThetaRule::Fixed(t)) => s += &format!("_theta{t}"),
        Some(ThetaRule::Optimal) => s += "_thetaopt",
        None => {}
    }
    s += &format!("_h{}", c.h);
    match &c.split {
        Split::Whole => {}
        Split::At(xs) => {
            let xs: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
            s += &format!("_split{}", xs.join("-"));
        }
        Split::Equal(n) => s += &format!("_n{n}"),
    }
    if let Initial::Value(v) = c.initial {
        if v != 0.0 {
            s += &format!("_start{v}");
        }
    }
    s + ".csv"
}

fn run_cases(name: &str, overrides: &Overrides, cases: Vec<Case>) -> Result<ExperimentRun> {
    let description = describe(name)?;
    let outcomes: Vec<(Vec<HistoryRecord>, StreamSummary)> = thread::scope(|scope| {
        let handles: Vec<_> = cases.iter().map(|c| scope.spawn(move || run_case(c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment case panicked"))
            .collect()
    });
    let (histories, streams) = outcomes.into_iter().unzip();
    Ok(ExperimentRun {
        manifest: Manifest {
            experiment: name.to_string(),
            description: description.to_string(),
            generator: format!("nldd {}", env!("CARGO_PKG_VERSION")),
            determinism: "no randomness: every output is a function of the cases below".into(),
            overrides: overrides.clone(),
            cases,
            streams,
        },
        histories,
    })
}

struct Solved {
    history: ConvergenceHistory,
    theta: Option<f64>,
    optimal: Option<OptimalTheta>,
    subdomains: usize,
}

/// Runs one case. Solver errors are recorded in the summary rather than
/// returned, so one diverging method does not hide the others.
pub fn run_case(case: &Case) -> (Vec<HistoryRecord>, StreamSummary) {
    let method = case.method.name();
    let mut summary = StreamSummary {
        stream: case.stream.clone(),
        method: case.method,
        theta: None,
        h: case.h,
        subdomains: 0,
        converged: false,
        iterations: None,
        final_error: None,
        optimal_theta: None,
        failure: None,
    };
    match solve_case(case) {
        Ok(s) => {
            let rows = HistoryRecord::from_history(method, s.theta, case.h, s.subdomains, &s.history);
            summary.theta = s.theta;
            summary.subdomains = s.subdomains;
            summary.converged = s.history.converged;
            summary.iterations = s.history.iterations();
            summary.final_error = rows.last().map(|r| r.error_inf);
            summary.optimal_theta = s.optimal;
            (rows, summary)
        }
        Err(e) => {
            summary.failure = Some(e.to_string());
            (Vec::new(), summary)
        }
    }
}

fn solve_case(case: &Case) -> Result<Solved> {
    match (case.method, &case.problem) {
        (Method::Dn, problem) => solve_dn(case, problem),
        (Method::Dnpen, Problem::Line(spec)) => solve_dnpen(case, spec),
        (Method::Newton, Problem::Line(spec)) => {
            let mesh = line_mesh(spec, case.h)?;
            let out = newton_monodomain_solve(spec, &mesh, &monodomain_config(case))?;
            Ok(Solved { history: out.history, theta: None, optimal: None, subdomains: 1 })
        }
        (Method::Newton, Problem::Plane(spec)) => {
            let grid = plane_grid(spec, case.h)?;
            let out = newton_monodomain_solve_2d(spec, &grid, &monodomain_config(case))?;
            Ok(Solved { history: out.history, theta: None, optimal: None, subdomains: 1 })
        }
        (Method::Raspen, Problem::Line(spec)) => solve_raspen(case, spec),
        (m, Problem::Plane(_)) => Err(Error::RejectedOverride(format!(
            "{} is implemented for 1D problems only",
            m.name()
        ))),
    }
}

fn monodomain_config(case: &Case) -> NewtonConfig {
    NewtonConfig {
        tol_residual: case.tol,
        max_iter: case.max_outer,
        ..case.inner
    }
}

fn line_mesh(spec: &ProblemSpec, h: f64) -> Result<Mesh1D> {
    Mesh1D::new(spec.x_left, spec.x_right, cells_for_spacing(spec.length(), h)?)
}

fn plane_grid(spec: &ProblemSpec2d, h: f64) -> Result<Grid2D> {
    let nx = cells_for_spacing(spec.x_right - spec.x_left, h)?;
    let ny = cells_for_spacing(spec.y_top - spec.y_bottom, h)?;
    Grid2D::new((spec.x_left, spec.x_right), (spec.y_bottom, spec.y_top), nx, ny)
}

fn decomposition(case: &Case) -> Result<Decomposition> {
    match (&case.problem, &case.split) {
        (Problem::Line(spec), Split::At(xs)) => Decomposition::line(spec, &line_mesh(spec, case.h)?, xs),
        (Problem::Line(spec), Split::Equal(n)) => {
            Decomposition::line_equal(spec, &line_mesh(spec, case.h)?, *n)
        }
        (Problem::Plane(spec), Split::Equal(n)) => {
            Decomposition::strips(spec, &plane_grid(spec, case.h)?, *n)
        }
        (Problem::Plane(_), Split::At(_)) => Err(Error::InvalidInput(
            "2D splits are given as a number of equal strips".into(),
        )),
        (_, Split::Whole) => Err(Error::InvalidInput(format!(
            "{} needs a decomposition",
            case.method.name()
        ))),
    }
}

/// Boundary values and extent in `x` of either problem kind.
fn x_data(problem: &Problem) -> (f64, f64, f64, f64) {
    match problem {
        Problem::Line(s) => (s.x_left, s.x_right, s.u_left, s.u_right),
        Problem::Plane(s) => (s.x_left, s.x_right, s.u_left, s.u_right),
    }
}

fn straight_line(problem: &Problem, x: f64) -> f64 {
    let (a, b, ua, ub) = x_data(problem);
    ua + (x - a) / (b - a) * (ub - ua)
}

/// Initial value at each interface of `split`.
fn initial_traces(case: &Case, split: &Decomposition) -> Vec<InterfaceValue> {
    let (a, b, _, _) = x_data(&case.problem);
    let cells = match &split.global {
        crate::dn::GlobalProblem::Line { mesh, .. } => mesh.n_cells,
        crate::dn::GlobalProblem::Plane { grid, .. } => grid.nx,
    };
    split
        .interface_nodes
        .iter()
        .map(|&node| {
            let v = match case.initial {
                Initial::Value(v) => v,
                Initial::StraightLine => {
                    straight_line(&case.problem, a + (b - a) * node as f64 / cells as f64)
                }
            };
            InterfaceValue(vec![v; split.face_len()])
        })
        .collect()
}

fn resolve_theta(case: &Case, split: &Decomposition) -> Result<(f64, Option<OptimalTheta>)> {
    match case.theta {
        Some(ThetaRule::Fixed(t)) => Ok((t, None)),
        Some(ThetaRule::Optimal) => {
            let q = optimal_theta(split, &case.inner)?;
            Ok((q.theta, Some(q)))
        }
        None => Err(Error::InvalidInput(format!("{} needs a theta", case.method.name()))),
    }
}

fn solve_dn(case: &Case, _problem: &Problem) -> Result<Solved> {
    let split = decomposition(case)?;
    let (theta, optimal) = resolve_theta(case, &split)?;
    let cfg = DnConfig {
        theta,
        tol: case.tol,
        max_outer: case.max_outer,
        inner: case.inner,
    };
    let reference = split.reference_traces(&case.inner)?;
    let start = initial_traces(case, &split);
    let history = if split.subdomains.len() == 2 {
        let (p1, p2) = split.pair()?;
        dn_solve(&start[0], p1, p2, &cfg, Some(&reference[0]))?.history
    } else {
        dn_multi_solve(&start, &split, &cfg, Some(&reference))?.history
    };
    Ok(Solved {
        history,
        theta: Some(theta),
        optimal,
        subdomains: split.subdomains.len(),
    })
}

fn solve_dnpen(case: &Case, _spec: &ProblemSpec) -> Result<Solved> {
    let split = decomposition(case)?;
    let (theta, optimal) = resolve_theta(case, &split)?;
    let spec = SubstructuredResidualSpec::new(&split, theta)?;
    let cfg = NewtonOuterConfig {
        tol: case.tol,
        max_iter: case.max_outer,
        inner: case.inner,
    };
    let reference = split.reference_traces(&case.inner)?[0].0[0];
    let start = initial_traces(case, &split)[0].0[0];
    let out = dnpen_solve(start, &spec, &cfg, Some(reference))?;
    Ok(Solved {
        history: out.history,
        theta: Some(theta),
        optimal,
        subdomains: 2,
    })
}

fn solve_raspen(case: &Case, spec: &ProblemSpec) -> Result<Solved> {
    let gamma = match &case.split {
        Split::At(xs) if xs.len() == 1 => xs[0],
        _ => {
            return Err(Error::InvalidInput(
                "RASPEN takes a single split abscissa".into(),
            ))
        }
    };
    let mesh = line_mesh(spec, case.h)?;
    let cfg = RasConfig {
        overlap_cells: case.overlap_cells.unwrap_or(RasConfig::default().overlap_cells),
        outer: NewtonOuterConfig {
            tol: case.tol,
            max_iter: case.max_outer,
            inner: case.inner,
        },
    };
    let reference = newton_monodomain_solve(spec, &mesh, &case.inner)?;
    let u0 = match case.initial {
        Initial::StraightLine => mesh.nodes().iter().map(|&x| straight_line(&case.problem, x)).collect(),
        Initial::Value(v) => vec![v; mesh.n_nodes()],
    };
    let out = raspen_solve(u0, spec, &mesh, gamma, &cfg, Some(&reference.solution.values))?;
    Ok(Solved {
        history: out.history,
        theta: None,
        optimal: None,
        subdomains: 2,
    })
}

/// Writes every history and the manifest into `dir`, creating it.
pub fn write_run(run: &ExperimentRun, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for (summary, rows) in run.manifest.streams.iter().zip(&run.histories) {
        let path = dir.join(&summary.stream);
        write_atomic(&path, render_history_csv(rows)?.as_bytes())?;
        written.push(path);
    }
    let path = dir.join(MANIFEST_FILE);
    write_atomic(&path, render_manifest(&run.manifest)?.as_bytes())?;
    written.push(path);
    Ok(written)
}

pub fn render_manifest(m: &Manifest) -> Result<String> {
    let mut s = serde_json::to_string_pretty(m).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}
