//! The acceptance suite: each criterion runs at its stated tolerance and
//! reports pass/fail with the measured numbers. Shared by `nldd check` and
//! the `acceptance` test target.

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::dn::{g_map_eval, Decomposition};
use crate::error::Result;
use crate::harness::{
    newton_comparison_problem, plan, run_case, run_experiment, ExperimentRun, Initial, Method,
    Overrides, Split, ThetaRule,
};
use crate::history::HistoryRecord;
use crate::kirchhoff::kirchhoff_exact;
use crate::npc::{dnpen_solve, newton_monodomain_solve, NewtonOuterConfig, SubstructuredResidualSpec};
use crate::pde1d::{assemble_jacobian_1d, assemble_residual_1d};
use crate::pde2d::{DiffusionProblem2d, Face2d, StripBc};
use crate::problem::{
    Bc1d, Diffusion, FaceCondition, Forcing, Grid2D, HorizontalTrace, Mesh1D, NewtonConfig,
    ProblemSpec, ProblemSpec2d,
};
use crate::transmission::{dtn_eval, ntd_eval, InterfaceValue, SubdomainData};

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl CriterionResult {
    /// `PASS name (1.23 s): detail`
    pub fn line(&self) -> String {
        format!(
            "{} {} ({:.2} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

pub type CriterionFn = fn() -> Result<(bool, String)>;

/// Every criterion with its name and optional time limit in seconds.
pub const CRITERIA: [(&str, CriterionFn, Option<u64>); 11] = [
    ("linear-nilpotency", linear_nilpotency, Some(1)),
    ("linear-generalized-nilpotency", generalized_nilpotency, None),
    ("nonlinear-nilpotent-toy", nilpotent_toy, None),
    ("optimal-theta-quadratic-convergence", quadratic_convergence, Some(10)),
    ("dtn-ntd-inverse-identity", inverse_identity, None),
    ("mesh-independence-1d", mesh_independence_1d, Some(60)),
    ("mesh-independence-2d", mesh_independence_2d, Some(120)),
    ("dnpen-theta-independence", theta_independence, None),
    ("dnpen-method-ordering", method_ordering, None),
    ("discretization-order", discretization_order, None),
    ("jacobian-check", jacobian_check, None),
];

pub fn run_criterion(name: &'static str, f: CriterionFn, limit: Option<u64>) -> CriterionResult {
    let start = Instant::now();
    let outcome = f();
    let elapsed = start.elapsed();
    let time_limit = limit.map(Duration::from_secs);
    let (mut passed, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(t) = time_limit {
        if elapsed > t {
            passed = false;
            detail += &format!("; exceeded the {} s limit", t.as_secs());
        }
    }
    CriterionResult {
        name,
        passed,
        detail,
        elapsed,
        time_limit,
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(name, f, limit)| run_criterion(name, f, limit))
        .collect()
}

fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn unit_split(spec: &ProblemSpec, cells: usize, gamma: f64) -> Result<Decomposition> {
    Decomposition::line(spec, &Mesh1D::new(0.0, 1.0, cells)?, &[gamma])
}

/// Largest `|G(lambda0)|` over random starts for the linear error equation.
fn one_step_error(gamma: f64, theta: f64, starts: usize, seed: u64) -> Result<f64> {
    let spec = ProblemSpec::unit(0.0, Forcing::Zero, 0.0, 0.0);
    let split = unit_split(&spec, 1000, gamma)?;
    let (p1, p2) = split.pair()?;
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..starts {
        let l0 = InterfaceValue::scalar(r.gen_range(-10.0..=10.0));
        let l1 = g_map_eval(&l0, p1, p2, theta, &NewtonConfig::default())?;
        worst = worst.max(l1.value.0[0].abs());
    }
    Ok(worst)
}

/// Linear problem, symmetric split, theta = 1/2: one step reaches the
/// exact trace from any start.
fn linear_nilpotency() -> Result<(bool, String)> {
    let worst = one_step_error(0.5, 0.5, 10, 11)?;
    Ok((worst <= 1e-12, format!("max |lambda^1| = {worst:.2e} over 10 starts")))
}

fn generalized_nilpotency() -> Result<(bool, String)> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, a) in [0.3, 0.5, 0.7].into_iter().enumerate() {
        let worst = one_step_error(a, a, 5, 20 + i as u64)?;
        ok &= worst <= 1e-12;
        parts.push(format!("a={a}: {worst:.2e}"));
    }
    Ok((ok, format!("max |lambda^1| with theta=a: {}", parts.join(", "))))
}

/// Error after the first iteration; a run that converged at the start
/// counts with its initial error.
fn after_one(rows: &[HistoryRecord]) -> f64 {
    rows.iter().take(2).next_back().map_or(f64::INFINITY, |r| r.error_inf)
}

fn nilpotent_toy() -> Result<(bool, String)> {
    let run = run_experiment("nilpotent-toy", &Overrides::default())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (case, rows) in run.manifest.cases.iter().zip(&run.histories) {
        let e = after_one(rows);
        ok &= e <= 1e-8;
        if let Initial::Value(v) = case.initial {
            parts.push(format!("start {v}: {e:.2e}"));
        }
    }
    Ok((ok, format!("|lambda^1|: {}", parts.join(", "))))
}

/// Least-squares slope of `log e_{n+1}` against `log e_n` over consecutive
/// errors in `(floor, 1]`, i.e. near the root and above the rounding floor.
pub fn convergence_order(errors: &[f64], floor: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = errors
        .windows(2)
        .filter(|w| w[0] <= 1.0 && w[0] > floor && w[1] > floor)
        .map(|w| (w[0].ln(), w[1].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn errors(rows: &[HistoryRecord]) -> Vec<f64> {
    rows.iter().map(|r| r.error_inf).collect()
}

fn stream(
    run: &ExperimentRun,
    pick: impl Fn(&crate::harness::Case) -> bool,
) -> Option<(usize, &[HistoryRecord])> {
    run.manifest
        .cases
        .iter()
        .position(pick)
        .map(|i| (i, run.histories[i].as_slice()))
}

fn quadratic_convergence() -> Result<(bool, String)> {
    let run = run_experiment("quadratic-theta", &Overrides::default())?;
    let at = |c: &crate::harness::Case| c.split == Split::At(vec![0.3]);
    let half = stream(&run, |c| at(c) && c.theta == Some(ThetaRule::Fixed(0.5)));
    let opt = stream(&run, |c| at(c) && c.theta == Some(ThetaRule::Optimal));
    let (Some((_, half)), Some((iq, opt))) = (half, opt) else {
        return Ok((false, "missing stream".into()));
    };
    let e = errors(half);
    let factors: Vec<f64> = (3..=8)
        .filter(|&n| n < e.len())
        .map(|n| e[n] / e[n - 1])
        .collect();
    let linear_ok = factors.len() == 6 && factors.iter().all(|f| (0.1..=0.95).contains(f));
    let order = convergence_order(&errors(opt), 1e-12);
    let quad_ok = order.is_some_and(|p| p >= 1.9);
    let q = run.manifest.streams[iq].optimal_theta;
    let (theta, delta) = q.map_or((f64::NAN, f64::NAN), |q| (q.theta, q.delta));
    let shown: Vec<String> = factors.iter().map(|f| format!("{f:.3}")).collect();
    Ok((
        linear_ok && quad_ok,
        format!(
            "split 0.3: theta=1/2 factors [{}]; delta={delta:.4}, theta_q={theta:.4}, order {:.2}",
            shown.join(", "),
            order.unwrap_or(f64::NAN)
        ),
    ))
}

/// Subdomains with exactly one interface from every experiment's problem,
/// each with its reference trace and a quarter of the boundary-data spread.
fn catalog() -> Result<Vec<(String, SubdomainData, InterfaceValue, f64)>> {
    let cfg = NewtonConfig::default();
    let mut out = Vec::new();
    let mut add = |label: &str, split: Decomposition| -> Result<()> {
        let (a, b) = match &split.global {
            crate::dn::GlobalProblem::Line { spec, .. } => (spec.u_left, spec.u_right),
            crate::dn::GlobalProblem::Plane { spec, .. } => (spec.u_left, spec.u_right),
        };
        let traces = split.reference_traces(&cfg)?;
        let last = split.subdomains.len() - 1;
        for (s, t) in [(&split.subdomains[0], &traces[0]), (&split.subdomains[last], &traces[last - 1])] {
            out.push((format!("{label}#{}", s.id), s.clone(), t.clone(), 0.25 * (b - a).abs()));
        }
        Ok(())
    };
    let toy = ProblemSpec::unit(1.0, Forcing::Sine { k: 4.0, c: 1.0 }, 5.0, -5.0);
    let quad = ProblemSpec::unit(1.0, Forcing::LinearRamp { c: 100.0 }, 0.0, -20.0);
    let cmp = newton_comparison_problem(1.0);
    let sweep = ProblemSpec::unit(1.0, Forcing::Zero, 0.0, 20.0);
    add("toy", unit_split(&toy, 1000, 0.5)?)?;
    for g in [0.5, 0.3] {
        add(&format!("quadratic@{g}"), unit_split(&quad, 1000, g)?)?;
        add(&format!("comparison@{g}"), unit_split(&cmp, 1000, g)?)?;
    }
    add("sweep-1d", Decomposition::line_equal(&sweep, &Mesh1D::new(0.0, 1.0, 1000)?, 10)?)?;
    let plane = ProblemSpec2d {
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
    let grid = Grid2D::new((0.0, 1.0), (0.0, 1.0), 32, 32)?;
    add("sweep-2d", Decomposition::strips(&plane, &grid, 4)?)?;
    Ok(out)
}

/// Samples are the reference trace plus a random constant and, in 2D, a
/// random smooth mode. Far from the reference the steep layers are not
/// resolved by the mesh and the discrete DtN map need not be injective.
fn inverse_identity() -> Result<(bool, String)> {
    let cfg = NewtonConfig::default();
    let mut r = rng(5);
    let mut worst = 0.0f64;
    let mut count = 0;
    let cat = catalog()?;
    for (label, psi, reference, radius) in &cat {
        let n = psi.face_len();
        for _ in 0..20 {
            let c = r.gen_range(-radius..=*radius);
            let s = if n > 1 { r.gen_range(-0.2 * radius..=0.2 * radius) } else { 0.0 };
            let lambda = InterfaceValue(
                reference
                    .0
                    .iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v + c + s * (std::f64::consts::PI * (j + 1) as f64 / (n + 1) as f64).sin()
                    })
                    .collect(),
            );
            let context = |e: crate::Error| crate::Error::SolverFailure {
                subdomain: Some(psi.id),
                reason: format!("{label} at offset {c:?}: {e}"),
            };
            let flux = dtn_eval(&lambda, psi, &cfg).map_err(context)?;
            let back = ntd_eval(&flux.value, psi, &cfg).map_err(context)?;
            worst = worst.max(back.value.max_abs_diff(&lambda));
            count += 1;
        }
    }
    Ok((
        worst <= 1e-10,
        format!(
            "max |NtD(DtN(lambda)) - lambda| = {worst:.2e} over {count} samples, {} subdomains",
            cat.len()
        ),
    ))
}

fn counts_within_one(name: &str) -> Result<(bool, String)> {
    let run = run_experiment(name, &Overrides::default())?;
    let counts: Vec<Option<usize>> = run.manifest.streams.iter().map(|s| s.iterations).collect();
    let shown: Vec<String> = run
        .manifest
        .streams
        .iter()
        .map(|s| match (s.iterations, &s.failure) {
            (Some(k), _) => format!("h={}: {k}", s.h),
            (None, Some(f)) => format!("h={}: failed ({f})", s.h),
            (None, None) => format!("h={}: not converged", s.h),
        })
        .collect();
    let ok = match counts.iter().copied().collect::<Option<Vec<usize>>>() {
        Some(c) => c.iter().max().unwrap() - c.iter().min().unwrap() <= 1,
        None => false,
    };
    Ok((ok, format!("iterations {}", shown.join(", "))))
}

fn mesh_independence_1d() -> Result<(bool, String)> {
    counts_within_one("mesh-independence-1d")
}

fn mesh_independence_2d() -> Result<(bool, String)> {
    counts_within_one("mesh-independence-2d")
}

fn theta_independence() -> Result<(bool, String)> {
    let spec = newton_comparison_problem(1.0);
    let split = unit_split(&spec, 1000, 0.5)?;
    let cfg = NewtonOuterConfig::default();
    let start = 5.0;
    let mut runs = Vec::new();
    for theta in [0.1, 0.5, 0.9] {
        let s = SubstructuredResidualSpec::new(&split, theta)?;
        runs.push(dnpen_solve(start, &s, &cfg, None)?.iterates);
    }
    let mut rel = 0.0f64;
    let same_len = runs.iter().all(|r| r.len() == runs[0].len());
    for r in &runs[1..] {
        for (a, b) in r.iter().zip(&runs[0]) {
            rel = rel.max((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE));
        }
    }
    let ov = Overrides {
        theta: Some(vec![0.1, 0.5, 0.9]),
        ..Default::default()
    };
    let run = run_experiment("dnpen-theta", &ov)?;
    let csvs: Vec<&[HistoryRecord]> = run
        .manifest
        .cases
        .iter()
        .zip(&run.histories)
        .filter(|(c, _)| c.method == Method::Dnpen)
        .map(|(_, h)| h.as_slice())
        .collect();
    let mut csv_diff = 0.0f64;
    let mut rows_match = csvs.len() == 3;
    for h in &csvs[1..] {
        rows_match &= h.len() == csvs[0].len() && !h.is_empty();
        for (a, b) in h.iter().zip(csvs[0]) {
            rows_match &= a.iteration == b.iteration
                && a.inner_newton_total == b.inner_newton_total
                && a.method == b.method
                && a.h == b.h
                && a.subdomains == b.subdomains;
            csv_diff = csv_diff
                .max((a.error_inf - b.error_inf).abs())
                .max((a.residual_inf - b.residual_inf).abs());
        }
    }
    Ok((
        same_len && rel <= 1e-10 && rows_match && csv_diff <= 1e-10,
        format!(
            "{} iterates each, max relative difference {rel:.2e}; CSV rows {} with max difference {csv_diff:.2e}",
            runs[0].len(),
            if rows_match { "aligned" } else { "misaligned" }
        ),
    ))
}

/// Outer iterations until the error first drops to `tol` relative to
/// `max(1, e_0)`.
pub fn iterations_to(rows: &[HistoryRecord], tol: f64) -> Option<usize> {
    let scale = rows.first()?.error_inf.max(1.0);
    rows.iter().find(|r| r.error_inf <= tol * scale).map(|r| r.iteration)
}

fn method_ordering() -> Result<(bool, String)> {
    let run = run_experiment("dnpen-compare", &Overrides::default())?;
    let newton = stream(&run, |c| c.method == Method::Newton).map(|(_, h)| iterations_to(h, 1e-10));
    let mut ok = true;
    let mut parts = Vec::new();
    for gamma in [0.5, 0.3] {
        let at = |c: &crate::harness::Case| c.split == Split::At(vec![gamma]);
        let count = |m: Method| {
            stream(&run, |c| c.method == m && at(c)).and_then(|(_, h)| iterations_to(h, 1e-10))
        };
        let dnpen = count(Method::Dnpen);
        let raspen = count(Method::Raspen);
        let dn_opt = count(Method::Dn);
        let mut slow = plan("dnpen-compare", &Overrides::default())?
            .into_iter()
            .find(|c| c.method == Method::Dn && at(c))
            .expect("planned DN case");
        slow.theta = Some(ThetaRule::Fixed(0.1));
        slow.max_outer = 1000;
        let dn_slow = iterations_to(&run_case(&slow).0, 1e-10);
        let n = newton.flatten();
        let holds = match dnpen {
            Some(d) => [raspen, n, dn_slow].iter().all(|o| o.is_some_and(|o| d <= o)),
            None => false,
        };
        ok &= holds;
        let f = |o: Option<usize>| o.map_or("-".to_string(), |v| v.to_string());
        parts.push(format!(
            "split {gamma}: DNPEN {} RASPEN {} Newton {} DN(0.1) {} DN(opt) {}{}",
            f(dnpen),
            f(raspen),
            f(n),
            f(dn_slow),
            f(dn_opt),
            if holds { "" } else { " [ordering violated]" }
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn discretization_order() -> Result<(bool, String)> {
    let spec = ProblemSpec::unit(1.0, Forcing::Zero, -5.0, 5.0);
    let mut errs = Vec::new();
    for cells in [100, 200, 400] {
        let mesh = Mesh1D::new(0.0, 1.0, cells)?;
        let sol = newton_monodomain_solve(&spec, &mesh, &NewtonConfig::default())?.solution;
        let mut e = 0.0f64;
        for (u, x) in sol.values.iter().zip(mesh.nodes()) {
            e = e.max((u - kirchhoff_exact(&spec, x)?).abs());
        }
        errs.push(e);
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    Ok((
        ratios.iter().all(|r| (3.2..=4.8).contains(r)),
        format!(
            "errors {:.3e}, {:.3e}, {:.3e}; ratios {:.3}, {:.3}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    ))
}

/// `max |J - J_fd| / max |J|` for one state, with column-wise central
/// differences of `residual`.
fn fd_relative_error(
    u: &[f64],
    residual: impl Fn(&[f64]) -> Result<Vec<f64>>,
    analytic: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let step = 1e-6 * u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut diff = 0.0f64;
    let mut size = 0.0f64;
    for col in 0..u.len() {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[col] += step;
        dn[col] -= step;
        let rp = residual(&up)?;
        let rm = residual(&dn)?;
        for row in 0..u.len() {
            let fd = (rp[row] - rm[row]) / (2.0 * step);
            let a = analytic(row, col);
            diff = diff.max((a - fd).abs());
            size = size.max(a.abs());
        }
    }
    Ok(diff / size)
}

fn jacobian_check() -> Result<(bool, String)> {
    let mut r = rng(3);
    let alphas = [0.0, 0.1, 1.0];
    let forcing = Forcing::Sine { k: 10.0, c: 1.0 };
    let mut worst = 0.0f64;
    for k in 0..40 {
        let d = Diffusion::new(alphas[k % 3], forcing)?;
        let mesh = Mesh1D::new(0.0, 1.0, r.gen_range(4..=30))?;
        let u: Vec<f64> = (0..mesh.n_nodes()).map(|_| r.gen_range(-20.0..=20.0)).collect();
        let face = |r: &mut StdRng, neumann: bool| {
            if neumann {
                FaceCondition::Neumann(r.gen_range(-50.0..=50.0))
            } else {
                FaceCondition::Dirichlet(r.gen_range(-20.0..=20.0))
            }
        };
        let bc = match k % 3 {
            0 => Bc1d { left: face(&mut r, false), right: face(&mut r, false) },
            1 => Bc1d { left: face(&mut r, true), right: face(&mut r, false) },
            _ => Bc1d { left: face(&mut r, false), right: face(&mut r, true) },
        };
        let j = assemble_jacobian_1d(&u, &d, &mesh, &bc)?;
        let e = fd_relative_error(&u, |v| assemble_residual_1d(v, &d, &mesh, &bc), |i, c| j.get(i, c))?;
        worst = worst.max(e);
    }
    for k in 0..10 {
        let d = Diffusion::new(alphas[k % 3], forcing)?;
        let grid = Grid2D::new((0.0, 0.5), (0.0, 1.0), r.gen_range(3..=6), r.gen_range(3..=6))?;
        let n = grid.ny - 1;
        let mut vals = |len: usize| (0..len).map(|_| r.gen_range(-20.0..=20.0)).collect::<Vec<f64>>();
        let left = if k % 2 == 0 { Face2d::Neumann(vals(n)) } else { Face2d::Dirichlet(vals(n)) };
        let bc = StripBc {
            left,
            right: Face2d::Dirichlet(vals(n)),
            bottom: vals(grid.nx + 1),
            top: vals(grid.nx + 1),
        };
        let p = DiffusionProblem2d::new(d, grid, bc)?;
        let u = vals(grid.n_nodes());
        let j = p.assemble_jacobian(&u)?;
        let e = fd_relative_error(&u, |v| p.assemble_residual(v), |i, c| j.get(i, c))?;
        worst = worst.max(e);
    }
    Ok((
        worst <= 1e-6,
        format!("max relative difference {worst:.2e} over 50 random states (40 in 1D, 10 in 2D)"),
    ))
}
