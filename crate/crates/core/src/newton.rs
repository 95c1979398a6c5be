//! Damped Newton iteration shared by the subdomain and monodomain solvers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{BandLu, Tridiagonal};
use crate::problem::NewtonConfig;

/// A factored Jacobian.
pub trait LinearSolve {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>>;
}

impl LinearSolve for Tridiagonal {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Tridiagonal::solve(self, rhs)
    }
}

impl LinearSolve for BandLu {
    fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        BandLu::solve(self, rhs)
    }
}

/// A square nonlinear system `r(u) = 0` with a direct linearized solve.
#[allow(clippy::len_without_is_empty)]
pub trait NewtonSystem {
    type Jacobian: LinearSolve;

    fn len(&self) -> usize;

    fn residual(&self, u: &[f64]) -> Vec<f64>;

    /// Positive per-row scales turning residual rows into solution units
    /// (the magnitude of the Jacobian diagonal), for diagnostics.
    fn row_scales(&self, u: &[f64]) -> Vec<f64>;

    fn linearize(&self, u: &[f64]) -> Result<Self::Jacobian>;

    fn scaled_norm(&self, u: &[f64], r: &[f64]) -> f64 {
        scaled_inf_norm(r, &self.row_scales(u))
    }
}

pub fn scaled_inf_norm(r: &[f64], scales: &[f64]) -> f64 {
    r.iter()
        .zip(scales)
        .map(|(ri, si)| (ri / si).abs())
        .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

fn negated(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubdomainSolution {
    pub values: Vec<f64>,
    pub converged: bool,
    pub newton_iterations: usize,
    /// Size of the last Newton correction (applied to `values` when
    /// converged).
    pub residual_norm: f64,
}

pub fn damped_newton<S: NewtonSystem + ?Sized>(
    sys: &S,
    initial_guess: Vec<f64>,
    cfg: &NewtonConfig,
) -> Result<SubdomainSolution> {
    damped_newton_observed(sys, initial_guess, cfg, |_, _, _| {})
}

/// Damped Newton; `observe(k, u_k, correction_k)` is called for the
/// initial guess and after every accepted step.
///
/// Convergence is measured by the size of the Newton correction
/// `|J(u)^-1 r(u)|`, a first-order estimate of the error in `u`; once it is
/// below tolerance the correction is applied without counting an
/// iteration. A step fraction `s` is accepted when the simplified correction
/// `J(u)^-1 r(u + s du)` is smaller than `(1 - s/4) |du|` (natural
/// monotonicity), halving `s` down to `cfg.min_step`.
pub fn damped_newton_observed<S, F>(
    sys: &S,
    initial_guess: Vec<f64>,
    cfg: &NewtonConfig,
    mut observe: F,
) -> Result<SubdomainSolution>
where
    S: NewtonSystem + ?Sized,
    F: FnMut(usize, &[f64], f64),
{
    cfg.validate()?;
    let mut u = initial_guess;
    let mut jac = sys.linearize(&u)?;
    let mut delta = jac.solve(&negated(&sys.residual(&u)))?;
    let mut norm = finite_norm(&delta)?;
    observe(0, &u, norm);
    let mut iterations = 0;

    while norm > cfg.tol_residual && iterations < cfg.max_iter {
        let mut step = 1.0;
        let accepted = loop {
            let trial: Vec<f64> = u.iter().zip(&delta).map(|(a, d)| a + step * d).collect();
            let rt = sys.residual(&trial);
            if rt.iter().all(|v| v.is_finite()) {
                if !cfg.damping {
                    break Some(trial);
                }
                let simplified = inf_norm(&jac.solve(&negated(&rt))?);
                if simplified <= (1.0 - 0.25 * step) * norm {
                    break Some(trial);
                }
            }
            step *= 0.5;
            if step < cfg.min_step {
                break None;
            }
        };
        let Some(trial) = accepted else {
            // no admissible step, usually at the rounding floor
            break;
        };
        u = trial;
        jac = sys.linearize(&u)?;
        delta = jac.solve(&negated(&sys.residual(&u)))?;
        norm = finite_norm(&delta)?;
        iterations += 1;
        observe(iterations, &u, norm);
    }

    let converged = norm <= cfg.tol_residual;
    if converged {
        // The last correction is already at hand; applying it removes the
        // remaining error to rounding level, so the result does not jump
        // when a perturbed input needs one more or one less iteration.
        for (a, d) in u.iter_mut().zip(&delta) {
            *a += d;
        }
    }
    Ok(SubdomainSolution {
        converged,
        values: u,
        newton_iterations: iterations,
        residual_norm: norm,
    })
}

fn finite_norm(delta: &[f64]) -> Result<f64> {
    let n = inf_norm(delta);
    if !n.is_finite() {
        return Err(Error::SingularJacobian("non-finite Newton step".into()));
    }
    Ok(n)
}
